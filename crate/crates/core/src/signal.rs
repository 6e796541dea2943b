//! AC signals, their per-period weights `g_k` and the response sums
//! `R_ij(nT) = Σ_{k<n} g_k (p_i p_j)^k e^{ikΔT}`.
//!
//! `g_k = ∫₀ᵀ f(kT + t′) e^{iΔt′} dt′` is returned raw, i.e. for PDR shapes
//! it still carries the `(−1)^k` that the pair parity product cancels.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum SignalError {
    #[error("tabulated envelope needs at least 4 samples, got {0}")]
    TooFewSamples(usize),
    #[error("tabulated sample times must increase strictly inside [0, T_AC)")]
    BadSampleTimes,
    #[error("T_AC must be positive and finite")]
    BadPeriod,
    #[error("heaviside-pdr requires T_AC = 2T (got T_AC = {t_ac}, T = {t})")]
    NotPdr { t_ac: f64, t: f64 },
    #[error("{0} has no closed-form response")]
    NoClosedForm(&'static str),
    #[error("T_AC/T = {0} is not an integer; direct summation over {1} periods refused")]
    Aperiodic(f64, usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Envelope {
    Constant { value: f64 },
    /// `cos(2πt/T_AC + φ)`
    Cosine { phi: f64 },
}

impl Envelope {
    fn at(&self, t: f64, t_ac: f64) -> f64 {
        match *self {
            Envelope::Constant { value } => value,
            Envelope::Cosine { phi } => (2.0 * PI * t / t_ac + phi).cos(),
        }
    }
}

/// Periodic piecewise-linear envelope sampled over one signal period.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tabulated {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl Tabulated {
    pub fn new(times: Vec<f64>, values: Vec<f64>, t_ac: f64) -> Result<Self, SignalError> {
        if times.len() < 4 || times.len() != values.len() {
            return Err(SignalError::TooFewSamples(times.len().min(values.len())));
        }
        let ordered = times.windows(2).all(|w| w[0] < w[1]);
        if !ordered || times[0] < 0.0 || *times.last().unwrap() >= t_ac {
            return Err(SignalError::BadSampleTimes);
        }
        Ok(Tabulated { times, values })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    fn at(&self, t: f64, t_ac: f64) -> f64 {
        let tau = t.rem_euclid(t_ac);
        let n = self.times.len();
        let idx = self.times.partition_point(|&x| x <= tau);
        let (t0, f0, t1, f1) = if idx == 0 {
            (self.times[n - 1] - t_ac, self.values[n - 1], self.times[0], self.values[0])
        } else if idx == n {
            (self.times[n - 1], self.values[n - 1], self.times[0] + t_ac, self.values[0])
        } else {
            (self.times[idx - 1], self.values[idx - 1], self.times[idx], self.values[idx])
        };
        f0 + (f1 - f0) * (tau - t0) / (t1 - t0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum Shape {
    /// `f(t) = sin(2πt/T_AC + φ)`
    Sinusoidal,
    /// `f(t) = (−1)^⌊t/T⌋`; needs `T_AC = 2T`, ignores the phase.
    HeavisidePdr,
    /// `f(t) = Σ_{m≥1} δ(t − mT) g(t)`. Each impulse acts just before the
    /// kick at `mT`, so period `k` sees `g((k+1)T)` at its end.
    DeltaComb { envelope: Envelope },
    TabulatedEnvelope { table: Tabulated },
}

impl Shape {
    pub fn name(&self) -> &'static str {
        match self {
            Shape::Sinusoidal => "sinusoidal",
            Shape::HeavisidePdr => "heaviside-pdr",
            Shape::DeltaComb { .. } => "delta-comb",
            Shape::TabulatedEnvelope { .. } => "tabulated-envelope",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignalSpec {
    #[serde(flatten)]
    pub shape: Shape,
    /// Amplitude `h`; the field is `h f(t) Ô`.
    #[serde(default)]
    pub h: f64,
    pub t_ac: f64,
    #[serde(default)]
    pub phi: f64,
}

impl SignalSpec {
    pub fn sinusoidal_pdr(t: f64, phi: f64) -> Self {
        SignalSpec {
            shape: Shape::Sinusoidal,
            h: 0.0,
            t_ac: 2.0 * t,
            phi,
        }
    }

    pub fn heaviside_pdr(t: f64) -> Self {
        SignalSpec {
            shape: Shape::HeavisidePdr,
            h: 0.0,
            t_ac: 2.0 * t,
            phi: 0.0,
        }
    }

    pub fn with_amplitude(mut self, h: f64) -> Self {
        self.h = h;
        self
    }

    pub fn validate(&self, t: f64) -> Result<(), SignalError> {
        if !(self.t_ac > 0.0 && self.t_ac.is_finite()) {
            return Err(SignalError::BadPeriod);
        }
        match &self.shape {
            Shape::HeavisidePdr if (self.t_ac - 2.0 * t).abs() > 1e-12 * t => {
                Err(SignalError::NotPdr { t_ac: self.t_ac, t })
            }
            Shape::TabulatedEnvelope { table } => {
                Tabulated::new(table.times.clone(), table.values.clone(), self.t_ac).map(|_| ())
            }
            _ => Ok(()),
        }
    }

    /// `f(t)` for the smooth shapes; the comb has no pointwise value.
    pub fn value(&self, t: f64, period: f64) -> Option<f64> {
        match &self.shape {
            Shape::Sinusoidal => Some((2.0 * PI * t / self.t_ac + self.phi).sin()),
            Shape::HeavisidePdr => Some(if (t / period).floor() as i64 % 2 == 0 { 1.0 } else { -1.0 }),
            Shape::DeltaComb { .. } => None,
            Shape::TabulatedEnvelope { table } => Some(table.at(t, self.t_ac)),
        }
    }

    /// Weight of the comb impulse closing period `k` (at `(k+1)T`).
    pub fn comb_weight(&self, k: usize, period: f64) -> Option<f64> {
        match &self.shape {
            Shape::DeltaComb { envelope } => Some(envelope.at((k + 1) as f64 * period, self.t_ac)),
            _ => None,
        }
    }

    /// Number of drive periods after which `g_k` repeats, if an integer.
    pub fn weight_period(&self, period: f64) -> Option<usize> {
        if let Shape::DeltaComb { envelope: Envelope::Constant { .. } } = self.shape {
            return Some(1);
        }
        let ratio = self.t_ac / period;
        let m = ratio.round();
        if m >= 1.0 && (ratio - m).abs() <= 1e-12 * ratio {
            Some(m as usize)
        } else {
            None
        }
    }
}

/// `sin(x)/x`, with a 4th-order series below `|x| = 10⁻⁶`.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-6 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// `∫₀ᵀ e^{iwt} dt = T e^{iwT/2} sinc(wT/2)`.
fn exp_integral(w: f64, t: f64) -> Complex64 {
    Complex64::from_polar(t * sinc(w * t / 2.0), w * t / 2.0)
}

/// `Σ_{k<n} e^{ikθ} = e^{i(n−1)θ/2} sin(nθ/2)/sin(θ/2)`.
pub fn geometric_sum(theta: f64, n: usize) -> Complex64 {
    if n == 0 {
        return Complex64::new(0.0, 0.0);
    }
    // reduce to (−π, π]; the closed form is 2π-periodic in θ
    let th = theta - 2.0 * PI * (theta / (2.0 * PI)).round();
    let x = th / 2.0;
    let nf = n as f64;
    let ratio = if x == 0.0 { nf } else { (nf * x).sin() / x.sin() };
    Complex64::from_polar(1.0, (nf - 1.0) * x) * ratio
}

const GL8_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];
const GL8_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362_0,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// 8-point Gauss–Legendre on `[a, b]`.
pub fn gauss_legendre8<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> Complex64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut s = Complex64::new(0.0, 0.0);
    for (x, w) in GL8_NODES.iter().zip(GL8_WEIGHTS) {
        s += (f(c - h * x) + f(c + h * x)) * w;
    }
    s * h
}

/// `g_k` for gap `delta` and drive period `period`.
///
/// Tabulated envelopes use composite 8-point Gauss–Legendre split at every
/// breakpoint, with panels short enough that `|Δ|·width ≤ 1/2`; the
/// integrand is then a polynomial of degree one times an entire function and
/// the rule is exact to well below `10⁻¹²·T`.
pub fn period_weight_gk(sig: &SignalSpec, k: usize, delta: f64, period: f64) -> Complex64 {
    let t0 = k as f64 * period;
    let i = Complex64::new(0.0, 1.0);
    match &sig.shape {
        Shape::Sinusoidal => {
            let w = 2.0 * PI / sig.t_ac;
            let plus = Complex64::from_polar(1.0, w * t0 + sig.phi) * exp_integral(delta + w, period);
            let minus = Complex64::from_polar(1.0, -(w * t0 + sig.phi)) * exp_integral(delta - w, period);
            (plus - minus) / (2.0 * i)
        }
        Shape::HeavisidePdr => {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            exp_integral(delta, period) * sign
        }
        Shape::DeltaComb { envelope } => {
            let g = envelope.at(t0 + period, sig.t_ac);
            Complex64::from_polar(g, delta * period)
        }
        Shape::TabulatedEnvelope { table } => {
            let t1 = t0 + period;
            let mut cuts = vec![t0, t1];
            let first = (t0 / sig.t_ac).floor() as i64;
            let last = (t1 / sig.t_ac).ceil() as i64;
            for c in first..=last {
                for &s in &table.times {
                    let x = c as f64 * sig.t_ac + s;
                    if x > t0 && x < t1 {
                        cuts.push(x);
                    }
                }
            }
            cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let f = |t: f64| Complex64::from_polar(table.at(t, sig.t_ac), delta * (t - t0));
            let mut s = Complex64::new(0.0, 0.0);
            for w in cuts.windows(2) {
                let (a, b) = (w[0], w[1]);
                if b <= a {
                    continue;
                }
                let panels = ((delta.abs() * (b - a) / 0.5).ceil() as usize).max(1);
                let h = (b - a) / panels as f64;
                for p in 0..panels {
                    s += gauss_legendre8(&f, a + p as f64 * h, a + (p + 1) as f64 * h);
                }
            }
            s
        }
    }
}

/// The π-pair response under PDR: `R = κ·[sin(ΔnT/2)/(Δ/2)]·e^{iΔnT/2}` with
/// `κ = 1` for the Heaviside shape and
/// `κ = g₀/(T e^{iΔT/2} sinc(ΔT/2))` for the sinusoid (`→ 2cosφ/π` as
/// `Δ → 0`).
pub fn response_closed_form(sig: &SignalSpec, delta: f64, n: usize, period: f64) -> Result<Complex64, SignalError> {
    let envelope = Complex64::from_polar(n as f64 * period * sinc(delta * n as f64 * period / 2.0), delta * n as f64 * period / 2.0);
    match sig.shape {
        Shape::HeavisidePdr => Ok(envelope),
        Shape::Sinusoidal => Ok(envelope * kappa(sig, delta, period)),
        _ => Err(SignalError::NoClosedForm(sig.shape.name())),
    }
}

/// Sinusoidal PDR prefactor `κ(φ, Δ)`.
pub fn kappa(sig: &SignalSpec, delta: f64, period: f64) -> Complex64 {
    period_weight_gk(sig, 0, delta, period) / exp_integral(delta, period)
}

/// Exact response `R(nT)` for gap `delta` and parity product `parity`.
///
/// Sinusoids are summed as two geometric series; shapes whose weights repeat
/// after `m` periods are summed in `m` interleaved geometric series; anything
/// else falls back to direct summation (refused beyond 10⁷ periods).
pub fn response(sig: &SignalSpec, delta: f64, parity: i8, n: usize, period: f64) -> Result<Complex64, SignalError> {
    let s = if parity < 0 { PI } else { 0.0 };
    let i = Complex64::new(0.0, 1.0);
    match &sig.shape {
        Shape::Sinusoidal => {
            let w = 2.0 * PI / sig.t_ac;
            let plus = Complex64::from_polar(1.0, sig.phi)
                * exp_integral(delta + w, period)
                * geometric_sum((delta + w) * period + s, n);
            let minus = Complex64::from_polar(1.0, -sig.phi)
                * exp_integral(delta - w, period)
                * geometric_sum((delta - w) * period + s, n);
            Ok((plus - minus) / (2.0 * i))
        }
        _ => match sig.weight_period(period) {
            Some(m) => {
                let mut total = Complex64::new(0.0, 0.0);
                let theta_m = m as f64 * (delta * period + s);
                for r in 0..m.min(n) {
                    let count = (n - r).div_ceil(m);
                    let lead = period_weight_gk(sig, r, delta, period)
                        * Complex64::from_polar(1.0, r as f64 * (delta * period + s));
                    total += lead * geometric_sum(theta_m, count);
                }
                Ok(total)
            }
            None if n <= 10_000_000 => {
                let mut acc = ResponseAccumulator::new(delta, parity, period);
                for _ in 0..n {
                    acc.advance(sig);
                }
                Ok(acc.value())
            }
            None => Err(SignalError::Aperiodic(sig.t_ac / period, n)),
        },
    }
}

/// Running `R` for one pair, one period at a time.
#[derive(Clone, Debug, PartialEq)]
pub struct ResponseAccumulator {
    pub delta: f64,
    pub parity: i8,
    pub period: f64,
    steps: usize,
    sum: Complex64,
}

impl ResponseAccumulator {
    pub fn new(delta: f64, parity: i8, period: f64) -> Self {
        ResponseAccumulator {
            delta,
            parity,
            period,
            steps: 0,
            sum: Complex64::new(0.0, 0.0),
        }
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn value(&self) -> Complex64 {
        self.sum
    }

    pub fn advance(&mut self, sig: &SignalSpec) {
        let k = self.steps;
        let sign = if self.parity < 0 && k % 2 == 1 { -1.0 } else { 1.0 };
        // phase rebuilt from k each step so it does not drift
        let phase = Complex64::from_polar(sign, k as f64 * self.delta * self.period);
        self.sum += period_weight_gk(sig, k, self.delta, self.period) * phase;
        self.steps += 1;
    }
}

pub fn response_accumulate(mut acc: ResponseAccumulator, sig: &SignalSpec) -> ResponseAccumulator {
    acc.advance(sig);
    acc
}
