//! Brute-force propagation of the kicked LMG model with the AC field, used as
//! ground truth for the eigenbasis and HSO machinery.
//!
//! Between kicks `H(t) = H_LMG + h f(t) Sz` is integrated on a fixed substep
//! grid; the kick is the exact anti-diagonal `X` at the end of each period.
//! Comb impulses `e^{-ih g Sz}` act just before the kick.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::floquet::{build_lmg_hamiltonian, FloquetError, LmgParams};
use crate::hso::{HsoMatrix, HsoMode};
use crate::precision::{expm_unitary, Matrix, PrecisionError, Symmetry};
use crate::qfi::{Provenance, QfiSeries};
use crate::signal::{Shape, SignalError, SignalSpec};
use crate::spin::{build_collective_operators, SpinError};

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("invalid propagation config: {0}")]
    Config(String),
    #[error("norm drift {drift:e} in period {period} exceeds budget with {substeps} substeps; increase substeps")]
    NormDrift { period: usize, drift: f64, substeps: usize },
    #[error("state dimension {got} does not match {expected}")]
    Dimension { expected: usize, got: usize },
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Floquet(#[from] FloquetError),
    #[error(transparent)]
    Spin(#[from] SpinError),
    #[error(transparent)]
    Precision(#[from] PrecisionError),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Exponential midpoint rule, order 2.
    MidpointExponential,
    /// Two-exponential commutator-free scheme on Gauss nodes, order 4.
    #[default]
    CommutatorFree4,
}

impl Scheme {
    pub fn order(self) -> u32 {
        match self {
            Scheme::MidpointExponential => 2,
            Scheme::CommutatorFree4 => 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PropagationConfig {
    pub substeps: usize,
    pub scheme: Scheme,
    /// Finite-difference offset in units of `J`.
    pub delta_h: f64,
    /// Allowed `|‖ψ‖ − 1|` growth per period.
    pub norm_budget: f64,
    /// Relative change of `F` under `δh → δh/2` above which a point is flagged.
    pub fd_tolerance: f64,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        PropagationConfig {
            substeps: 64,
            scheme: Scheme::CommutatorFree4,
            delta_h: 1e-6,
            norm_budget: 1e-10,
            fd_tolerance: 1e-4,
        }
    }
}

impl PropagationConfig {
    pub fn validate(&self) -> Result<(), OracleError> {
        if self.substeps < 8 {
            return Err(OracleError::Config(format!("substeps {} < 8", self.substeps)));
        }
        if !(self.delta_h > 0.0 && self.delta_h.is_finite()) {
            return Err(OracleError::Config("δh must be positive".into()));
        }
        if !(self.norm_budget > 0.0) || !(self.fd_tolerance > 0.0) {
            return Err(OracleError::Config("tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// Kicked sensor Hamiltonian at field `h`, with its per-period propagators.
struct Sensor<'a> {
    h0: DMatrix<f64>,
    sz: Vec<f64>,
    params: &'a LmgParams,
    sig: &'a SignalSpec,
    h: f64,
    cfg: &'a PropagationConfig,
}

impl<'a> Sensor<'a> {
    fn new(params: &'a LmgParams, sig: &'a SignalSpec, h: f64, cfg: &'a PropagationConfig) -> Result<Self, OracleError> {
        cfg.validate()?;
        sig.validate(params.t)?;
        let h0 = build_lmg_hamiltonian(params)?.real();
        let space = params.space();
        let sz = space.sz_diagonal::<f64>(53);
        Ok(Sensor { h0, sz, params, sig, h, cfg })
    }

    fn dim(&self) -> usize {
        self.sz.len()
    }

    /// `e^{-i dt (a H0 + w Sz)}`.
    fn exp(&self, a: f64, w: f64, dt: f64) -> Result<DMatrix<Complex64>, OracleError> {
        let mut m = &self.h0 * a;
        for (i, s) in self.sz.iter().enumerate() {
            m[(i, i)] += w * s;
        }
        Ok(expm_unitary(&Matrix::from_real(&m, Symmetry::RealSymmetric)?, dt)?)
    }

    fn field(&self, t: f64) -> f64 {
        self.h * self.sig.value(t, self.params.t).unwrap_or(0.0)
    }

    /// One scheme step from `t` of length `dt`.
    fn step(&self, t: f64, dt: f64) -> Result<DMatrix<Complex64>, OracleError> {
        if self.h == 0.0 || matches!(self.sig.shape, Shape::DeltaComb { .. }) {
            return self.exp(1.0, 0.0, dt);
        }
        match self.cfg.scheme {
            Scheme::MidpointExponential => self.exp(1.0, self.field(t + 0.5 * dt), dt),
            Scheme::CommutatorFree4 => {
                let r = 3f64.sqrt() / 6.0;
                let (f1, f2) = (self.field(t + (0.5 - r) * dt), self.field(t + (0.5 + r) * dt));
                let (a1, a2) = (0.25 + r, 0.25 - r);
                let first = self.exp(0.5, a1 * f1 + a2 * f2, dt)?;
                let second = self.exp(0.5, a2 * f1 + a1 * f2, dt)?;
                Ok(second * first)
            }
        }
    }

    /// Diagonal comb impulse closing period `k`.
    fn impulse(&self, k: usize) -> Option<DVector<Complex64>> {
        let g = self.sig.comb_weight(k, self.params.t)?;
        Some(DVector::from_iterator(
            self.dim(),
            self.sz.iter().map(|s| Complex64::from_polar(1.0, -self.h * g * s)),
        ))
    }

    /// Pre-kick evolution over period `k`: `U(kT + T⁻) U(kT)⁻¹`.
    fn period_body(&self, k: usize) -> Result<DMatrix<Complex64>, OracleError> {
        let t = self.params.t;
        let s = self.cfg.substeps;
        let dt = t / s as f64;
        let t0 = k as f64 * t;
        let mut u = DMatrix::identity(self.dim(), self.dim());
        if self.h == 0.0 || matches!(self.sig.shape, Shape::DeltaComb { .. } | Shape::HeavisidePdr) {
            // piecewise-constant Hamiltonian over the period
            let w = if matches!(self.sig.shape, Shape::HeavisidePdr) { self.field(t0 + 0.5 * t) } else { 0.0 };
            u = self.exp(1.0, w, t)?;
        } else {
            for j in 0..s {
                u = self.step(t0 + j as f64 * dt, dt)? * u;
            }
        }
        if let Some(ph) = self.impulse(k).filter(|_| self.h != 0.0) {
            for (i, mut row) in u.row_iter_mut().enumerate() {
                row *= ph[i];
            }
        }
        Ok(u)
    }

    fn period(&self, k: usize) -> Result<DMatrix<Complex64>, OracleError> {
        Ok(kick(&self.period_body(k)?))
    }
}

/// `X M`: rows reversed.
fn kick(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let d = m.nrows();
    DMatrix::from_fn(d, m.ncols(), |i, j| m[(d - 1 - i, j)])
}

/// Stroboscopic states `ψ(nT)`, `n = 0..=n_max`.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub period: f64,
    pub states: Vec<DVector<Complex64>>,
}

pub fn propagate(psi0: &DVector<Complex64>, params: &LmgParams, sig: &SignalSpec, h: f64, n_max: usize, cfg: &PropagationConfig) -> Result<Trajectory, OracleError> {
    let sensor = Sensor::new(params, sig, h, cfg)?;
    if psi0.len() != sensor.dim() {
        return Err(OracleError::Dimension {
            expected: sensor.dim(),
            got: psi0.len(),
        });
    }
    // the per-period map repeats with the signal's weight period
    let cycle = sig.weight_period(params.t);
    let cache: Vec<DMatrix<Complex64>> = match cycle {
        Some(m) => (0..m.min(n_max.max(1))).map(|k| sensor.period(k)).collect::<Result<_, _>>()?,
        None => Vec::new(),
    };
    let mut states = Vec::with_capacity(n_max + 1);
    states.push(psi0.clone());
    let mut psi = psi0.clone();
    let mut norm = psi.norm();
    for k in 0..n_max {
        psi = match cycle {
            Some(m) => &cache[k % m] * &psi,
            None => sensor.period(k)? * &psi,
        };
        let next = psi.norm();
        let drift = (next - norm).abs();
        if drift > cfg.norm_budget {
            return Err(OracleError::NormDrift {
                period: k,
                drift,
                substeps: cfg.substeps,
            });
        }
        norm = next;
        states.push(psi.clone());
    }
    Ok(Trajectory {
        period: params.t,
        states,
    })
}

#[derive(Clone, Debug)]
pub struct OracleQfi {
    pub series: QfiSeries,
    /// Relative change of `F` between `δh` and `δh/2` per grid point.
    pub halving_change: Vec<f64>,
    /// Grid indices whose halving change exceeds the tolerance.
    pub flagged: Vec<usize>,
}

fn fd_qfi(plus: &DVector<Complex64>, minus: &DVector<Complex64>, mid: &DVector<Complex64>, dh: f64) -> f64 {
    let d = (plus - minus) / Complex64::new(2.0 * dh, 0.0);
    4.0 * (d.norm_squared() - mid.dotc(&d).norm_sqr())
}

/// QFI at field `h` by central differences of the propagated state.
pub fn qfi_finite_difference(psi0: &DVector<Complex64>, params: &LmgParams, sig: &SignalSpec, h: f64, grid: &[usize], cfg: &PropagationConfig) -> Result<OracleQfi, OracleError> {
    let n_max = grid.iter().copied().max().unwrap_or(0);
    let dh = cfg.delta_h * params.j.abs();
    let fields = [h, h + dh, h - dh, h + 0.5 * dh, h - 0.5 * dh];
    let trajs = fields
        .par_iter()
        .map(|&f| propagate(psi0, params, sig, f, n_max, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    let mut values = Vec::with_capacity(grid.len());
    let mut halving_change = Vec::with_capacity(grid.len());
    let mut flagged = Vec::new();
    for (idx, &n) in grid.iter().enumerate() {
        let st = |i: usize| &trajs[i].states[n];
        let f = fd_qfi(st(1), st(2), st(0), dh);
        let f_half = fd_qfi(st(3), st(4), st(0), 0.5 * dh);
        let change = if f == 0.0 && f_half == 0.0 { 0.0 } else { (f - f_half).abs() / f.abs().max(f_half.abs()) };
        if change > cfg.fd_tolerance {
            flagged.push(idx);
        }
        halving_change.push(change);
        values.push(f);
    }
    if !flagged.is_empty() {
        log::warn!("finite-difference QFI: {} of {} points fail the halving check", flagged.len(), grid.len());
    }
    Ok(OracleQfi {
        series: QfiSeries {
            n: grid.to_vec(),
            times: grid.iter().map(|&n| n as f64 * params.t).collect(),
            values,
            n_spins: params.n,
            provenance: Provenance::Oracle,
        },
        halving_change,
        flagged,
    })
}

/// `S(nT) = ∫₀^{nT} f(t) U†(t) Sz U(t) dt` by 3-point Gauss–Legendre on each
/// substep (comb: the impulse weights at the pre-kick instants). The
/// returned matrix is in the Dicke basis.
pub fn hso_numerical(params: &LmgParams, sig: &SignalSpec, h: f64, n: usize, cfg: &PropagationConfig) -> Result<HsoMatrix, OracleError> {
    let sensor = Sensor::new(params, sig, h, cfg)?;
    let d = sensor.dim();
    let szm = build_collective_operators(params.n)?.sz.data().clone();
    let t = params.t;
    let s = cfg.substeps;
    let dt = t / s as f64;
    let r = (0.6f64).sqrt() / 2.0;
    let nodes = [(0.5 - r, 5.0 / 18.0), (0.5, 8.0 / 18.0), (0.5 + r, 5.0 / 18.0)];
    let mut u = DMatrix::<Complex64>::identity(d, d);
    let mut acc = DMatrix::<Complex64>::zeros(d, d);
    let comb = matches!(sig.shape, Shape::DeltaComb { .. });
    for k in 0..n {
        let t0 = k as f64 * t;
        if comb {
            let v = sensor.exp(1.0, 0.0, t)? * &u;
            let g = sig.comb_weight(k, t).unwrap_or(0.0);
            acc += v.adjoint() * &szm * &v * Complex64::new(g, 0.0);
            u = v;
            if let Some(ph) = sensor.impulse(k).filter(|_| h != 0.0) {
                for (i, mut row) in u.row_iter_mut().enumerate() {
                    row *= ph[i];
                }
            }
        } else {
            for j in 0..s {
                let ts = t0 + j as f64 * dt;
                for &(c, w) in &nodes {
                    let v = sensor.step(ts, c * dt)? * &u;
                    let f = sig.value(ts + c * dt, t).unwrap_or(0.0);
                    acc += v.adjoint() * &szm * &v * Complex64::new(w * dt * f, 0.0);
                }
                u = sensor.step(ts, dt)? * u;
            }
        }
        u = kick(&u);
    }
    let herm = (&acc + acc.adjoint()) * Complex64::new(0.5, 0.0);
    Ok(HsoMatrix {
        n,
        time: n as f64 * t,
        mode: HsoMode::Numerical,
        matrix: herm,
        basis: DMatrix::identity(d, d),
        overlaps: szm,
        response: DMatrix::zeros(d, d),
    })
}

/// Order probe: end-state distance to a reference with
/// `4×` the finest substep count, for each entry of `substeps`.
pub fn convergence_probe(psi0: &DVector<Complex64>, params: &LmgParams, sig: &SignalSpec, h: f64, n: usize, base: &PropagationConfig, substeps: &[usize]) -> Result<Vec<(usize, f64)>, OracleError> {
    let finest = substeps.iter().copied().max().unwrap_or(base.substeps);
    let reference = PropagationConfig {
        substeps: 4 * finest,
        ..base.clone()
    };
    let want = propagate(psi0, params, sig, h, n, &reference)?.states.pop().expect("n+1 states");
    substeps
        .iter()
        .map(|&s| {
            let cfg = PropagationConfig {
                substeps: s,
                ..base.clone()
            };
            let got = propagate(psi0, params, sig, h, n, &cfg)?.states.pop().expect("n+1 states");
            Ok((s, (got - &want).norm()))
        })
        .collect()
}
