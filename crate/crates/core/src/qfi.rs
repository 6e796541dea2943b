//! QFI from the HSO, closed forms for a single doublet, the step predictor
//! and the initial states the sensor is prepared in.

use std::f64::consts::PI;
use std::fmt;
use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use rayon::prelude::*;

use crate::floquet::{diagonalize, diagonalize_with_field, FloquetError, FloquetSpectrum, LmgParams};
use crate::hso::{linear_response, overlap_matrix, HsoError, HsoMatrix, OverlapMatrix};
use crate::precision::Precision;
use crate::signal::{period_weight_gk, sinc, Shape, SignalSpec};
use crate::spin::build_collective_operators;

#[derive(Debug, thiserror::Error)]
pub enum QfiError {
    #[error("invalid state parameters: {0}")]
    InvalidState(String),
    #[error("state dimension {got} does not match {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("HSO is not hermitian (relative defect {0:e})")]
    NotHermitian(f64),
    #[error("QFI {0} is not positive: the Cramér–Rao bound is unbounded")]
    Unbounded(f64),
    #[error("no root of the peak equation in (0, 2π) for φ = {0}")]
    NoRoot(f64),
    #[error("closed form needs a sinusoidal or heaviside-pdr shape, got {0}")]
    Shape(&'static str),
    #[error("fit needs at least two usable points")]
    Fit,
    #[error(transparent)]
    Floquet(#[from] FloquetError),
    #[error(transparent)]
    Hso(#[from] HsoError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum StateFamily {
    PolarizedUp,
    Ghz,
    FloquetEigenstate { index: usize },
    /// `cos(θ/2)|E_i⟩ + e^{iφ} sin(θ/2)|E_ī⟩` for doublet `pair`.
    PairSuperposition { pair: usize, theta: f64, phi: f64 },
    /// `Σ √c_k |⇑_k⟩` with `|⇑_k⟩ = (|E_i⟩ + |E_ī⟩)/√2`.
    SsbCombination { weights: Vec<f64> },
    Custom,
}

impl StateFamily {
    pub fn tag(&self) -> String {
        match self {
            StateFamily::PolarizedUp => "polarized-up".into(),
            StateFamily::Ghz => "ghz".into(),
            StateFamily::FloquetEigenstate { index } => format!("floquet-eigenstate-{index}"),
            StateFamily::PairSuperposition { pair, .. } => format!("pair-superposition-{pair}"),
            StateFamily::SsbCombination { .. } => "ssb-combination".into(),
            StateFamily::Custom => "custom".into(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct InitialState {
    /// Dicke-basis amplitudes.
    pub vector: DVector<Complex64>,
    pub family: StateFamily,
}

pub fn make_initial_state(spec: &FloquetSpectrum, family: StateFamily) -> Result<InitialState, QfiError> {
    let d = spec.dim();
    let one = Complex64::new(1.0, 0.0);
    let col = |i: usize| spec.vectors_f64().column(i).map(|x| Complex64::new(x, 0.0));
    let pair = |k: usize| {
        spec.pairs()
            .get(k)
            .ok_or_else(|| QfiError::InvalidState(format!("pair {k} out of range ({} pairs)", spec.pairs().len())))
    };
    let vector = match &family {
        StateFamily::PolarizedUp => {
            let mut v = DVector::zeros(d);
            v[d - 1] = one;
            v
        }
        StateFamily::Ghz => {
            let mut v = DVector::zeros(d);
            let s = std::f64::consts::FRAC_1_SQRT_2;
            v[0] = one * s;
            v[d - 1] = one * s;
            v
        }
        StateFamily::FloquetEigenstate { index } => {
            if *index >= d {
                return Err(QfiError::InvalidState(format!("eigenstate {index} out of range")));
            }
            col(*index)
        }
        StateFamily::PairSuperposition { pair: k, theta, phi } => {
            if !(0.0..=PI).contains(theta) || !(0.0..2.0 * PI).contains(phi) {
                return Err(QfiError::InvalidState("θ must lie in [0, π] and φ in [0, 2π)".into()));
            }
            let p = pair(*k)?;
            col(p.upper) * Complex64::new((theta / 2.0).cos(), 0.0) + col(p.lower) * Complex64::from_polar((theta / 2.0).sin(), *phi)
        }
        StateFamily::SsbCombination { weights } => {
            let total: f64 = weights.iter().sum();
            if weights.iter().any(|&c| c < 0.0) || (total - 1.0).abs() > 1e-12 || weights.is_empty() {
                return Err(QfiError::InvalidState("weights must be non-negative and sum to 1".into()));
            }
            let mut v = DVector::zeros(d);
            for (k, &c) in weights.iter().enumerate() {
                let p = pair(k)?;
                v += (col(p.upper) + col(p.lower)) * Complex64::new((c / 2.0).sqrt(), 0.0);
            }
            v
        }
        StateFamily::Custom => {
            return Err(QfiError::InvalidState("use InitialState::custom for explicit vectors".into()));
        }
    };
    Ok(InitialState { vector, family })
}

impl InitialState {
    pub fn custom(vector: DVector<Complex64>) -> Result<Self, QfiError> {
        let n = vector.norm();
        if (n - 1.0).abs() > 1e-12 {
            return Err(QfiError::InvalidState(format!("norm {n} differs from 1")));
        }
        Ok(InitialState {
            vector,
            family: StateFamily::Custom,
        })
    }

    pub fn dim(&self) -> usize {
        self.vector.len()
    }
}

/// Weight of the state inside the cat subspace.
pub fn cat_overlap(spec: &FloquetSpectrum, psi: &InitialState) -> Result<f64, QfiError> {
    let c = spec.coefficients(&psi.vector)?;
    Ok(spec
        .pairs()
        .iter()
        .map(|p| c[p.upper].norm_sqr() + c[p.lower].norm_sqr())
        .sum())
}

/// Table 1 classes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepFamily {
    Parity,
    Ssb,
    General,
}

/// Parity if `⟨X⟩ = ±1` within 10⁻⁸; SSB if the cat-subspace part is a
/// combination of `⇑` (or uniformly of `⇓`) states up to a residual weight
/// below 10⁻⁶; otherwise general.
pub fn classify(spec: &FloquetSpectrum, psi: &InitialState) -> Result<StepFamily, QfiError> {
    let c = spec.coefficients(&psi.vector)?;
    let x: f64 = (0..spec.dim())
        .map(|i| spec.parities()[i] as f64 * c[i].norm_sqr())
        .sum();
    if (x.abs() - 1.0).abs() <= 1e-8 {
        return Ok(StepFamily::Parity);
    }
    let residual = |sigma: f64| -> f64 {
        spec.pairs()
            .iter()
            .map(|p| (c[p.upper] - c[p.lower] * sigma).norm_sqr() / 2.0)
            .sum()
    };
    if residual(1.0).min(residual(-1.0)) < 1e-6 {
        Ok(StepFamily::Ssb)
    } else {
        Ok(StepFamily::General)
    }
}

/// `F = 4(⟨S†S⟩ − |⟨S⟩|²)`.
pub fn qfi_from_hso(psi: &InitialState, s: &HsoMatrix) -> Result<f64, QfiError> {
    if psi.dim() != s.basis.nrows() {
        return Err(QfiError::Dimension {
            expected: s.basis.nrows(),
            got: psi.dim(),
        });
    }
    let defect = s.hermiticity_defect();
    if defect > 1e-10 {
        return Err(QfiError::NotHermitian(defect));
    }
    let c = s.basis.adjoint() * &psi.vector;
    let sc = &s.matrix * &c;
    let mean = c.dotc(&sc);
    Ok(4.0 * (sc.norm_squared() - mean.norm_sqr()))
}

fn closed_prefactor(shape: &Shape, phi_ac: f64) -> Result<f64, QfiError> {
    match shape {
        Shape::Sinusoidal => Ok(16.0 * phi_ac.cos().powi(2) / (PI * PI)),
        Shape::HeavisidePdr => Ok(4.0),
        other => Err(QfiError::Shape(other.name())),
    }
}

/// `F = |O|² t² C_h (1 − cos²(Δt/2 + φ) sin²θ) sinc²(Δt/2)`, with
/// `C_h = 16cos²φ_AC/π²` (sinusoid, leading order in Δ) or 4 (Heaviside).
pub fn qfi_closed_single_pair(o: f64, delta: f64, t: f64, theta: f64, phi: f64, phi_ac: f64, shape: &Shape) -> Result<f64, QfiError> {
    let c = closed_prefactor(shape, phi_ac)?;
    let x = delta * t / 2.0;
    Ok(o * o * t * t * c * (1.0 - (x + phi).cos().powi(2) * theta.sin().powi(2)) * sinc(x).powi(2))
}

/// Time envelope `f_h(τ)` at `θ = π/2`.
pub fn peak_envelope(tau: f64, phi: f64) -> f64 {
    (1.0 - (phi + tau / 2.0).cos().powi(2)) * sinc(tau / 2.0).powi(2)
}

/// First non-trivial root of `τ sin(τ+φ) + cos(τ+φ) = cos φ` in `(0, 2π)`
/// and the envelope there.
pub fn qfi_peak_single_pair(phi: f64) -> Result<(f64, f64), QfiError> {
    let g = |t: f64| t * (t + phi).sin() + (t + phi).cos() - phi.cos();
    // τ = 0 is a double root; scan from a point past it for a sign change
    let steps = 4096;
    let h = 2.0 * PI / steps as f64;
    let mut lo = h;
    let mut found = None;
    for i in 2..steps {
        let hi = i as f64 * h;
        if g(lo).signum() != g(hi).signum() {
            found = Some((lo, hi));
            break;
        }
        lo = hi;
    }
    let (mut a, mut b) = found.ok_or(QfiError::NoRoot(phi))?;
    let ga = g(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if g(m).signum() == ga.signum() {
            a = m;
        } else {
            b = m;
        }
    }
    let tau = 0.5 * (a + b);
    Ok((tau, peak_envelope(tau, phi)))
}

/// Per-unit-time PDR response `lim R(Δ=0, p_ip_j=−1, n)/(nT)`.
pub fn pdr_rate(sig: &SignalSpec, period: f64) -> Complex64 {
    match sig.weight_period(period) {
        Some(m) => {
            let mut s = Complex64::new(0.0, 0.0);
            for r in 0..m {
                let sign = if r % 2 == 0 { 1.0 } else { -1.0 };
                s += period_weight_gk(sig, r, 0.0, period) * sign;
            }
            s / (m as f64 * period)
        }
        None => {
            let n = 100_000;
            crate::signal::response(sig, 0.0, -1, n, period).unwrap_or_default() / (n as f64 * period)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepPrediction {
    pub k: usize,
    pub t_star: f64,
    /// Change of `F/t²` across `t*`.
    pub delta: f64,
    pub family: StepFamily,
}

/// Plateau levels of `F/t²` before each doublet dephases, and the steps.
///
/// With `s_k(0) = κ O_{kk̄}|E_k⟩⟨E_k̄| + h.c.` the per-unit-time block and
/// `X` the sum of `⟨s_j(0)⟩` over doublets still coherent just before `t*_k`:
/// `δ_k = 4[−⟨s_k(0)²⟩ + ⟨s_k(0)⟩(2X − ⟨s_k(0)⟩)]`. Steps are returned in
/// the order they happen (decreasing gap).
pub fn predict_steps(psi: &InitialState, spec: &FloquetSpectrum, o: &OverlapMatrix, sig: &SignalSpec) -> Result<Vec<StepPrediction>, QfiError> {
    let family = classify(spec, psi)?;
    let kappa = pdr_rate(sig, spec.params().t);
    let c = spec.coefficients(&psi.vector)?;
    let mut blocks: Vec<(usize, f64, f64, f64)> = spec
        .pairs()
        .iter()
        .map(|p| {
            let z = o.get(p.upper, p.lower) * kappa;
            let (a, b) = (c[p.upper], c[p.lower]);
            let sq = z.norm_sqr() * (a.norm_sqr() + b.norm_sqr());
            let mean = 2.0 * (a.conj() * b * z).re;
            (p.k, p.gap_f64(), sq, mean)
        })
        .collect();
    blocks.sort_by(|x, y| y.1.partial_cmp(&x.1).unwrap());
    let mut alive: f64 = blocks.iter().map(|b| b.3).sum();
    let mut out = Vec::with_capacity(blocks.len());
    for &(k, gap, sq, mean) in &blocks {
        let delta = 4.0 * (-sq + mean * (2.0 * alive - mean));
        alive -= mean;
        out.push(StepPrediction {
            k,
            t_star: 1.0 / gap,
            delta,
            family,
        });
    }
    Ok(out)
}

/// `F/t²` on the first plateau (all doublets coherent, transient over).
pub fn initial_plateau(psi: &InitialState, spec: &FloquetSpectrum, o: &OverlapMatrix, sig: &SignalSpec) -> Result<f64, QfiError> {
    let kappa = pdr_rate(sig, spec.params().t);
    let c = spec.coefficients(&psi.vector)?;
    let (mut sq, mut mean) = (0.0, 0.0);
    for p in spec.pairs() {
        let z = o.get(p.upper, p.lower) * kappa;
        let (a, b) = (c[p.upper], c[p.lower]);
        sq += z.norm_sqr() * (a.norm_sqr() + b.norm_sqr());
        mean += 2.0 * (a.conj() * b * z).re;
    }
    Ok(4.0 * (sq - mean * mean))
}

/// `t_NLR = [2h|O| √(1 + (2h|O|/Δ₀)²)]⁻¹`.
pub fn t_nlr(h: f64, o: f64, delta0: f64) -> f64 {
    let a = 2.0 * h * o.abs();
    1.0 / (a * (1.0 + (a / delta0).powi(2)).sqrt())
}

/// Observed onset of the constant-`F/t²` regime of one doublet at field `h`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NlrCrossover {
    pub k: usize,
    pub t_nlr: f64,
    /// `√(A/C)` from the fit `F = A + C t²`.
    pub t_c: f64,
    pub intercept: f64,
    pub curvature: f64,
    pub dressed_gap: f64,
    /// Dressed eigenstates (field-spectrum indices) spanning the doublet.
    pub dressed: [usize; 2],
}

/// Fits `F(t) = A + C t²` to the doublet-block QFI of the equal superposition
/// of its two dressed states (the exact-mode Heaviside PDR HSO, restricted to
/// the block), on `samples`
/// uniformly spaced stroboscopic times in `[lo, hi]/Δ_h`. The bounded part
/// of the HSO averages to `A` and the diagonal part grows as `C t²`; they
/// cross at `t_c`.
pub fn nlr_crossover(spec: &FloquetSpectrum, o: &OverlapMatrix, h: f64, k: usize, window: (f64, f64), samples: usize) -> Result<NlrCrossover, QfiError> {
    let pair = spec
        .pairs()
        .get(k)
        .ok_or_else(|| QfiError::InvalidState(format!("pair {k} out of range")))?;
    let oo = o.get(pair.upper, pair.lower).norm();
    let t = spec.params().t;
    let fs = diagonalize_with_field(spec.params(), h, Precision::from_bits(spec.bits()).expect("spectrum bits ≥ 53"))?;
    let dressed_basis = fs.vectors_f64();
    // dressed states with the largest weight on the bare doublet
    let bare = spec.vectors_f64();
    let mut weights: Vec<(usize, f64)> = (0..fs.dim())
        .map(|j| {
            let col = dressed_basis.column(j);
            let w = [pair.upper, pair.lower].iter().map(|&i| bare.column(i).dot(&col).powi(2)).sum();
            (j, w)
        })
        .collect();
    weights.sort_by(|x, y| y.1.partial_cmp(&x.1).unwrap());
    let (a, b) = (weights[0].0.min(weights[1].0), weights[0].0.max(weights[1].0));
    let dressed_gap = fs.gap(a, b).abs();
    let oh = fs.sz_overlaps(spec.params().space());
    let (lo, hi) = window;
    let c = DVector::from_element(2, Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0));
    let mut xs = Vec::with_capacity(samples);
    let mut ys = Vec::with_capacity(samples);
    let mut last = 0;
    for s in 0..samples {
        let tt = (lo + (hi - lo) * s as f64 / (samples.max(2) - 1) as f64) / dressed_gap;
        let n = (tt / t).round().max(1.0) as usize;
        if n == last {
            continue;
        }
        last = n;
        let tn = n as f64 * t;
        let block = DMatrix::from_fn(2, 2, |i, j| {
            let (u, v) = ([a, b][i], [a, b][j]);
            oh[(u, v)] * linear_response(fs.gap(u, v), tn)
        });
        let sc = &block * &c;
        let f = 4.0 * (sc.norm_squared() - c.dotc(&sc).norm_sqr());
        xs.push((n as f64 * t).powi(2));
        ys.push(f);
    }
    if xs.len() < 3 {
        return Err(QfiError::Fit);
    }
    let nf = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let curvature = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / sxx;
    let intercept = my - curvature * mx;
    if !(intercept > 0.0 && curvature > 0.0) {
        return Err(QfiError::Fit);
    }
    Ok(NlrCrossover {
        k,
        t_nlr: t_nlr(h, oo, pair.gap_f64()),
        t_c: (intercept / curvature).sqrt(),
        intercept,
        curvature,
        dressed_gap,
        dressed: [a, b],
    })
}

/// `Δh = 1/√(μF)`.
pub fn cramer_rao(f: f64, mu: usize) -> Result<f64, QfiError> {
    if !(f > 0.0) {
        return Err(QfiError::Unbounded(f));
    }
    Ok(1.0 / (mu.max(1) as f64 * f).sqrt())
}

/// Least-squares line `ln y = a + z ln x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PowerFit {
    pub exponent: f64,
    pub intercept: f64,
    /// Standard error of the exponent.
    pub stderr: f64,
}

impl PowerFit {
    /// Two-sided 95% interval (normal approximation).
    pub fn interval(&self) -> (f64, f64) {
        (self.exponent - 1.96 * self.stderr, self.exponent + 1.96 * self.stderr)
    }
}

pub fn fit_power_law(x: &[f64], y: &[f64]) -> Result<PowerFit, QfiError> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    let n = pts.len();
    if n < 2 {
        return Err(QfiError::Fit);
    }
    let nf = n as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(QfiError::Fit);
    }
    let z = sxy / sxx;
    let a = my - z * mx;
    let stderr = if n > 2 {
        let rss: f64 = pts.iter().map(|p| (p.1 - a - z * p.0).powi(2)).sum();
        (rss / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(PowerFit {
        exponent: z,
        intercept: a,
        stderr,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriticalRow {
    pub b_over_j: f64,
    pub overlap_over_n: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriticalScan {
    pub rows: Vec<CriticalRow>,
    /// `|O_kk̄|/N ∝ (1 − (B/J)²)^z`.
    pub fit: PowerFit,
}

pub fn critical_scan(j: f64, t: f64, n: usize, b_grid: &[f64], k: usize, precision: Precision) -> Result<CriticalScan, QfiError> {
    let sz = build_collective_operators(n).map_err(FloquetError::from)?.sz;
    let rows = b_grid
        .par_iter()
        .map(|&b| -> Result<Option<CriticalRow>, QfiError> {
            if b >= j || b < 0.0 {
                log::warn!("critical scan: B/J = {} outside [0, 1) skipped", b / j);
                return Ok(None);
            }
            let s = diagonalize(&LmgParams::new(j, b, n, t)?, precision)?;
            let Some(p) = s.pairs().get(k) else {
                log::warn!("critical scan: no doublet {k} at B/J = {}", b / j);
                return Ok(None);
            };
            let o = overlap_matrix(&s, &sz)?;
            Ok(Some(CriticalRow {
                b_over_j: b / j,
                overlap_over_n: o.get(p.upper, p.lower).norm() / n as f64,
            }))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let rows: Vec<CriticalRow> = rows.into_iter().flatten().collect();
    let x: Vec<f64> = rows.iter().map(|r| 1.0 - r.b_over_j.powi(2)).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.overlap_over_n).collect();
    let fit = fit_power_law(&x, &y)?;
    Ok(CriticalScan { rows, fit })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    HsoFull,
    HsoBlock,
    ClosedForm,
    Oracle,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::HsoFull => "hso-full",
            Provenance::HsoBlock => "hso-block",
            Provenance::ClosedForm => "closed-form",
            Provenance::Oracle => "oracle",
        })
    }
}

impl std::str::FromStr for Provenance {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "hso-full" => Ok(Provenance::HsoFull),
            "hso-block" => Ok(Provenance::HsoBlock),
            "closed-form" => Ok(Provenance::ClosedForm),
            "oracle" => Ok(Provenance::Oracle),
            other => Err(format!("unknown provenance {other:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QfiSeries {
    pub n: Vec<usize>,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub n_spins: usize,
    pub provenance: Provenance,
}

impl QfiSeries {
    pub fn len(&self) -> usize {
        self.n.len()
    }

    pub fn is_empty(&self) -> bool {
        self.n.is_empty()
    }

    /// `F / (N^a t²)`; `NaN` at `t = 0`.
    pub fn normalized(&self, spin_power: i32) -> Vec<f64> {
        let nf = (self.n_spins as f64).powi(spin_power);
        self.values
            .iter()
            .zip(&self.times)
            .map(|(f, t)| if *t == 0.0 { f64::NAN } else { f / (nf * t * t) })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "n,t,F,F_over_t2,F_over_Nt2,F_over_N2t2")?;
        let (a, b, c) = (self.normalized(0), self.normalized(1), self.normalized(2));
        for i in 0..self.len() {
            writeln!(
                w,
                "{},{:e},{:e},{:e},{:e},{:e}",
                self.n[i], self.times[i], self.values[i], a[i], b[i], c[i]
            )?;
        }
        Ok(())
    }
}

/// A plateau of `F/t²` measured on a series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Plateau {
    /// Doublet whose dephasing precedes the plateau.
    pub after_k: usize,
    pub window: (f64, f64),
    /// Median of `F/t²` over the window.
    pub level: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ObservedStep {
    pub k: usize,
    pub t_star: f64,
    pub before: f64,
    pub after: f64,
    /// Log-time centroid of `|d(F/t²)/d ln t|` between the two plateaus.
    pub t_transition: f64,
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Some(v[v.len() / 2])
}

/// Plateaus between consecutive `t*_k = Δ_k⁻¹` (middle third of the log
/// interval; `[10, 100]·t*` after the slowest doublet), and the steps
/// joining adjacent ones. Windows the series does not cover are dropped.
pub fn observe_steps(series: &QfiSeries, spec: &FloquetSpectrum) -> (Vec<Plateau>, Vec<ObservedStep>) {
    let mut ts: Vec<(usize, f64)> = spec.pairs().iter().map(|p| (p.k, 1.0 / p.gap_f64())).collect();
    ts.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    let v = series.normalized(0);
    let t = &series.times;
    let covered = t.last().copied().unwrap_or(0.0);
    let mut plateaus = Vec::new();
    for (j, &(k, ts_j)) in ts.iter().enumerate() {
        let window = match ts.get(j + 1) {
            Some(&(_, next)) => {
                let (a, b) = (ts_j.ln(), next.ln());
                ((a + (b - a) / 3.0).exp(), (a + 2.0 * (b - a) / 3.0).exp())
            }
            None => (10.0 * ts_j, 100.0 * ts_j),
        };
        if window.1 > covered {
            break;
        }
        let vals = (0..t.len()).filter(|&i| t[i] >= window.0 && t[i] <= window.1).map(|i| v[i]).collect();
        if let Some(level) = median(vals) {
            plateaus.push(Plateau { after_k: k, window, level });
        }
    }
    let mut steps = Vec::new();
    for w in plateaus.windows(2) {
        let (a, b) = (w[0], w[1]);
        let t_star = ts.iter().find(|x| x.0 == b.after_k).map(|x| x.1).unwrap_or(f64::NAN);
        let idx: Vec<usize> = (0..t.len()).filter(|&i| t[i] >= a.window.1 && t[i] <= b.window.0).collect();
        let (mut num, mut den) = (0.0, 0.0);
        for p in idx.windows(2) {
            let change = (v[p[1]] - v[p[0]]).abs();
            num += change * 0.5 * (t[p[0]] * t[p[1]]).ln();
            den += change;
        }
        steps.push(ObservedStep {
            k: b.after_k,
            t_star,
            before: a.level,
            after: b.level,
            t_transition: if den > 0.0 { (num / den).exp() } else { f64::NAN },
        });
    }
    (plateaus, steps)
}

/// Which HSO feeds a series.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HsoKind {
    Full,
    Block,
}

/// QFI from the linear-response HSO on a grid of stroboscopic indices.
pub fn qfi_series(spec: &FloquetSpectrum, o: &OverlapMatrix, sig: &SignalSpec, psi: &InitialState, grid: &[usize], kind: HsoKind) -> Result<QfiSeries, QfiError> {
    let values = grid
        .par_iter()
        .map(|&n| {
            let s = match kind {
                HsoKind::Full => crate::hso::hso_full(spec, o, sig, n)?,
                HsoKind::Block => crate::hso::hso_block_diagonal(spec, o, sig, n)?,
            };
            qfi_from_hso(psi, &s)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(QfiSeries {
        n: grid.to_vec(),
        times: grid.iter().map(|&n| n as f64 * spec.params().t).collect(),
        values,
        n_spins: spec.params().n,
        provenance: match kind {
            HsoKind::Full => Provenance::HsoFull,
            HsoKind::Block => Provenance::HsoBlock,
        },
    })
}

/// Distinct integers `0` and log-spaced `1..=n_max`, `per_decade` per decade.
pub fn log_grid(n_max: usize, per_decade: usize) -> Vec<usize> {
    let mut out = vec![0];
    if n_max == 0 {
        return out;
    }
    let decades = (n_max as f64).log10();
    let count = ((decades * per_decade as f64).ceil() as usize).max(1);
    for i in 0..=count {
        let v = 10f64.powf(decades * i as f64 / count as f64).round() as usize;
        let v = v.clamp(1, n_max);
        if *out.last().unwrap() != v {
            out.push(v);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hso::{hso_full, overlap_matrix};

    fn setup(n: usize) -> (FloquetSpectrum, OverlapMatrix) {
        let p = LmgParams::new(1.0, 0.4, n, 1.0).unwrap();
        let s = diagonalize(&p, Precision::Extended(192)).unwrap();
        let o = overlap_matrix(&s, &build_collective_operators(n).unwrap().sz).unwrap();
        (s, o)
    }

    #[test]
    fn ghz_and_polarized() {
        let (s, _) = setup(9);
        let x = build_collective_operators(9).unwrap();
        let ghz = make_initial_state(&s, StateFamily::Ghz).unwrap();
        let xv = x.x.data() * &ghz.vector;
        assert!((ghz.vector.dotc(&xv).re - 1.0).abs() < 1e-15);
        let up = make_initial_state(&s, StateFamily::PolarizedUp).unwrap();
        let m = up.vector.dotc(&(x.sz.data() * &up.vector)).re;
        assert_eq!(m, 4.5);
        assert_eq!(classify(&s, &ghz).unwrap(), StepFamily::Parity);
    }

    #[test]
    fn state_validation() {
        let (s, _) = setup(12);
        let bad = StateFamily::PairSuperposition { pair: 0, theta: 4.0, phi: 0.0 };
        assert!(make_initial_state(&s, bad).is_err());
        let bad = StateFamily::SsbCombination { weights: vec![0.7, 0.7] };
        assert!(make_initial_state(&s, bad).is_err());
        let ok = StateFamily::SsbCombination { weights: vec![0.5, 0.5] };
        let st = make_initial_state(&s, ok).unwrap();
        assert!((st.vector.norm() - 1.0).abs() < 1e-12);
        assert_eq!(classify(&s, &st).unwrap(), StepFamily::Ssb);
    }

    #[test]
    fn ssb_state_is_localized() {
        // ⇑ of the ground doublet sits on the m < 0 side
        let (s, _) = setup(10);
        let up = make_initial_state(&s, StateFamily::PairSuperposition { pair: 0, theta: PI / 2.0, phi: 0.0 }).unwrap();
        let sz = build_collective_operators(10).unwrap().sz;
        let m = up.vector.dotc(&(sz.data() * &up.vector)).re;
        assert!(m < -3.0, "{m}");
    }

    #[test]
    fn eigenvector_of_s_has_zero_qfi() {
        let (s, o) = setup(8);
        let sig = SignalSpec::sinusoidal_pdr(1.0, 0.0);
        let h = hso_full(&s, &o, &sig, 25).unwrap();
        let dense = h.to_dicke();
        let herm = (&dense + dense.adjoint()) * Complex64::new(0.5, 0.0);
        let eig = herm.symmetric_eigen();
        let v = eig.eigenvectors.column(0).clone_owned();
        let st = InitialState::custom(v.clone() / Complex64::new(v.norm(), 0.0)).unwrap();
        let f = qfi_from_hso(&st, &h).unwrap();
        assert!(f.abs() < 1e-9 * h.frobenius().powi(2));
    }

    #[test]
    fn single_block_algebra() {
        let (s, o) = setup(12);
        let p = &s.pairs()[0];
        let o1 = o.restricted(&[p.upper, p.lower]);
        let sig = SignalSpec::sinusoidal_pdr(1.0, 0.0);
        let h = hso_full(&s, &o1, &sig, 300).unwrap();
        let st = make_initial_state(&s, StateFamily::SsbCombination { weights: vec![1.0] }).unwrap();
        let f = qfi_from_hso(&st, &h).unwrap();
        let or = o.get(p.upper, p.lower) * h.response[(p.upper, p.lower)];
        let want = 4.0 * (or.norm_sqr() - or.re.powi(2));
        assert!((f - want).abs() <= 1e-10 * or.norm_sqr());
    }

    #[test]
    fn closed_form_limits() {
        let sin = Shape::Sinusoidal;
        let f = qfi_closed_single_pair(1.0, 1.0, 1e-9, PI / 2.0, 0.0, 0.0, &sin).unwrap();
        assert!(f < 1e-30);
        let f = qfi_closed_single_pair(1.0, 1e-9, 1.0, 0.0, 0.0, 0.0, &sin).unwrap();
        assert!((f - 16.0 / (PI * PI)).abs() < 1e-12);
        assert!(qfi_closed_single_pair(1.0, 1.0, 1.0, 0.0, 0.0, 0.0, &crate::signal::Shape::DeltaComb {
            envelope: crate::signal::Envelope::Constant { value: 1.0 }
        })
        .is_err());
    }

    #[test]
    fn peak_root() {
        let (tau, f) = qfi_peak_single_pair(0.0).unwrap();
        assert!((tau * tau.sin() + tau.cos() - 1.0).abs() < 1e-10);
        assert!((tau - 2.331).abs() < 1e-3 && (f - 0.525).abs() < 1e-3);
        let phi = 0.2;
        let (tau, f) = qfi_peak_single_pair(phi).unwrap();
        let m = 1_000_000;
        let (mut best_t, mut best) = (0.0, 0.0);
        for i in 1..m {
            let t = 2.0 * PI * i as f64 / m as f64;
            let v = peak_envelope(t, phi);
            if v > best {
                best = v;
                best_t = t;
            }
        }
        assert!((tau - best_t).abs() < 1e-4 && (f - best).abs() < 1e-4);
        assert!(tau < 2.331 && f > 0.525);
    }

    #[test]
    fn nlr_time_limits() {
        let (o, d) = (3.0, 1e-4);
        let weak = 1e-3 * d / o;
        assert!((t_nlr(weak, o, d) * 2.0 * weak * o - 1.0).abs() < 1e-5);
        let strong = 1e3 * d / o;
        let approx = d / (4.0 * strong * strong * o * o);
        assert!((t_nlr(strong, o, d) / approx - 1.0).abs() < 1e-5);
        let h = d / (2.0 * o);
        assert!((t_nlr(h, o, d) - 1.0 / (d * 2f64.sqrt())).abs() < 1e-9 / d);
    }

    #[test]
    fn cramer_rao_bound() {
        assert_eq!(cramer_rao(1.0, 1).unwrap(), 1.0);
        assert!((cramer_rao(4.0, 25).unwrap() - 0.1).abs() < 1e-15);
        assert!(matches!(cramer_rao(0.0, 3), Err(QfiError::Unbounded(_))));
    }

    #[test]
    fn parity_steps_all_negative() {
        let (s, o) = setup(20);
        let sig = SignalSpec::sinusoidal_pdr(1.0, 0.0);
        let ghz = make_initial_state(&s, StateFamily::Ghz).unwrap();
        let steps = predict_steps(&ghz, &s, &o, &sig).unwrap();
        assert!(steps.iter().all(|st| st.delta < 0.0 && st.family == StepFamily::Parity));
        let total: f64 = steps.iter().map(|s| s.delta).sum();
        let p0 = initial_plateau(&ghz, &s, &o, &sig).unwrap();
        assert!((total + p0).abs() < 1e-10 * p0);
    }

    #[test]
    fn single_pair_step_matches_closed_form() {
        let (s, o) = setup(16);
        let sig = SignalSpec::sinusoidal_pdr(1.0, 0.0);
        let (theta, phi) = (1.1, 0.4);
        let st = make_initial_state(&s, StateFamily::PairSuperposition { pair: 1, theta, phi }).unwrap();
        let p = &s.pairs()[1];
        let oo = o.get(p.upper, p.lower).norm();
        let steps: Vec<_> = predict_steps(&st, &s, &o, &sig)
            .unwrap()
            .into_iter()
            .filter(|x| x.delta.abs() > 1e-12)
            .collect();
        assert_eq!(steps.len(), 1);
        assert_eq!(steps[0].k, 1);
        let tiny = 1e-12 / p.gap_f64();
        let before = qfi_closed_single_pair(oo, p.gap_f64(), tiny, theta, phi, 0.0, &Shape::Sinusoidal).unwrap() / (tiny * tiny);
        assert!((steps[0].delta + before).abs() < 1e-9 * before, "{} {before}", steps[0].delta);
    }

    #[test]
    fn fit_recovers_exponent() {
        let x = [1.0, 2.0, 4.0, 8.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(1.7)).collect();
        let f = fit_power_law(&x, &y).unwrap();
        assert!((f.exponent - 1.7).abs() < 1e-12 && f.stderr < 1e-10);
        assert!(fit_power_law(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn grid_is_increasing() {
        let g = log_grid(100_000, 10);
        assert_eq!(g[0], 0);
        assert_eq!(*g.last().unwrap(), 100_000);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn csv_header() {
        let s = QfiSeries {
            n: vec![0, 1],
            times: vec![0.0, 1.0],
            values: vec![0.0, 2.0],
            n_spins: 2,
            provenance: Provenance::HsoFull,
        };
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("n,t,F,F_over_t2,F_over_Nt2,F_over_N2t2\n"));
        assert!(text.contains("1,1e0,2e0,2e0,1e0,5e-1"));
    }
}
