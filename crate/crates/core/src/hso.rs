//! Heisenberg signal operator in a Floquet eigenbasis.
//!
//! Linear response: `S(nT) = Σ_ij O_ij R_ij(nT) |E_i⟩⟨E_j|`. The nonlinear
//! variants use the eigenbasis of `H + h·Sz`, which for the Heaviside PDR
//! signal is the exact stroboscopic generator: `U(nT) = Xⁿ e^{-i(H+hSz)nT}`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::floquet::{diagonalize_with_field, FloquetError, FloquetSpectrum};
use crate::precision::Precision;
use crate::signal::{response, sinc, Shape, SignalError, SignalSpec};
use crate::spin::{CollectiveOperator, OperatorLabel};

#[derive(Debug, thiserror::Error)]
pub enum HsoError {
    #[error("operator dimension {got} does not match spectrum dimension {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("pair index {0} out of range ({1} pairs)")]
    PairIndex(usize, usize),
    #[error("nonlinear response is only derived for the heaviside-pdr signal, got {0}")]
    NlrScope(&'static str),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Floquet(#[from] FloquetError),
}

#[derive(Clone, Debug)]
pub struct OverlapMatrix {
    pub entries: DMatrix<Complex64>,
    pub parities: Vec<i8>,
}

impl OverlapMatrix {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[(i, j)]
    }

    /// Keep only the entries among `states`.
    pub fn restricted(&self, states: &[usize]) -> OverlapMatrix {
        let mut entries = DMatrix::zeros(self.dim(), self.dim());
        for &i in states {
            for &j in states {
                entries[(i, j)] = self.entries[(i, j)];
            }
        }
        OverlapMatrix {
            entries,
            parities: self.parities.clone(),
        }
    }
}

/// `O_ij = ⟨E_i|Ô|E_j⟩`. `Sz` is sandwiched at the spectrum's precision,
/// any other direction in double and then hermitized.
pub fn overlap_matrix(spec: &FloquetSpectrum, direction: &CollectiveOperator) -> Result<OverlapMatrix, HsoError> {
    let d = spec.dim();
    if direction.matrix.dim() != d {
        return Err(HsoError::Dimension {
            expected: d,
            got: direction.matrix.dim(),
        });
    }
    let entries = if direction.label == OperatorLabel::Sz {
        spec.sz_overlaps().map(|x| Complex64::new(x, 0.0))
    } else {
        let v = spec.vectors_f64().map(|x| Complex64::new(x, 0.0));
        let raw = v.transpose() * direction.data() * &v;
        let herm = (&raw + raw.adjoint()) * Complex64::new(0.5, 0.0);
        let dev = (&raw - &herm).norm();
        if dev > 0.0 {
            log::debug!("overlap hermitization removed {dev:e} (Frobenius)");
        }
        herm
    };
    Ok(OverlapMatrix {
        entries,
        parities: spec.parities().to_vec(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HsoMode {
    Full,
    BlockDiagonal,
    NlrExact,
    NlrPerturbative,
    /// Quadrature of the defining integral; Dicke basis, no response table.
    Numerical,
}

/// `S(nT)` in the basis whose Dicke-coordinate columns are `basis`.
#[derive(Clone, Debug)]
pub struct HsoMatrix {
    pub n: usize,
    pub time: f64,
    pub mode: HsoMode,
    pub matrix: DMatrix<Complex64>,
    pub basis: DMatrix<Complex64>,
    pub overlaps: DMatrix<Complex64>,
    pub response: DMatrix<Complex64>,
}

impl HsoMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn frobenius(&self) -> f64 {
        self.matrix.norm()
    }

    /// `‖S − S†‖_F / ‖S‖_F` (0 for the zero matrix).
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.frobenius();
        if n == 0.0 {
            0.0
        } else {
            (&self.matrix - self.matrix.adjoint()).norm() / n
        }
    }

    /// The operator in Dicke coordinates.
    pub fn to_dicke(&self) -> DMatrix<Complex64> {
        &self.basis * &self.matrix * self.basis.adjoint()
    }
}

fn real_basis(spec: &FloquetSpectrum) -> DMatrix<Complex64> {
    spec.vectors_f64().map(|x| Complex64::new(x, 0.0))
}

fn assemble<F>(spec: &FloquetSpectrum, o: &OverlapMatrix, keep: F, sig: &SignalSpec, n: usize, mode: HsoMode) -> Result<HsoMatrix, HsoError>
where
    F: Fn(usize, usize) -> bool + Sync,
{
    let d = spec.dim();
    if o.dim() != d {
        return Err(HsoError::Dimension { expected: d, got: o.dim() });
    }
    let t = spec.params().t;
    sig.validate(t)?;
    let gaps = spec.gap_matrix();
    let par = spec.parities();
    let rows: Vec<Vec<(usize, Complex64)>> = (0..d)
        .into_par_iter()
        .map(|i| {
            (i..d)
                .filter(|&j| keep(i, j) && o.get(i, j) != Complex64::new(0.0, 0.0))
                .map(|j| response(sig, gaps[(i, j)], par[i] * par[j], n, t).map(|r| (j, r)))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<_, _>>()?;
    let mut resp = DMatrix::zeros(d, d);
    for (i, row) in rows.into_iter().enumerate() {
        for (j, r) in row {
            resp[(i, j)] = r;
            resp[(j, i)] = r.conj();
        }
    }
    let matrix = o.entries.component_mul(&resp);
    Ok(HsoMatrix {
        n,
        time: n as f64 * t,
        mode,
        matrix,
        basis: real_basis(spec),
        overlaps: o.entries.clone(),
        response: resp,
    })
}

/// Every `(i, j)` entry.
pub fn hso_full(spec: &FloquetSpectrum, o: &OverlapMatrix, sig: &SignalSpec, n: usize) -> Result<HsoMatrix, HsoError> {
    assemble(spec, o, |_, _| true, sig, n, HsoMode::Full)
}

/// Only the 2×2 blocks of the detected doublets.
pub fn hso_block_diagonal(spec: &FloquetSpectrum, o: &OverlapMatrix, sig: &SignalSpec, n: usize) -> Result<HsoMatrix, HsoError> {
    let d = spec.dim();
    let mut partner = vec![usize::MAX; d];
    for p in spec.pairs() {
        partner[p.upper] = p.lower;
        partner[p.lower] = p.upper;
    }
    let t = spec.params().t;
    let slowest_unpaired = (0..d)
        .flat_map(|i| (0..d).map(move |j| (i, j)))
        .filter(|&(i, j)| i != j && partner[i] != j && o.get(i, j).norm() > 0.0)
        .map(|(i, j)| spec.gap(i, j).abs())
        .fold(f64::INFINITY, f64::min);
    if (n as f64 * t) * slowest_unpaired < 1.0 {
        log::debug!(
            "block-diagonal HSO at t = {} is inside the transient (slowest unpaired gap {slowest_unpaired:e})",
            n as f64 * t
        );
    }
    assemble(spec, o, |i, j| partner[i] != usize::MAX && (i == j || partner[i] == j), sig, n, HsoMode::BlockDiagonal)
}

/// Doublet dressed by a static field `h·Ô` within its own 2×2 subspace.
#[derive(Clone, Debug, PartialEq)]
pub struct EffectivePair {
    pub k: usize,
    pub upper: usize,
    pub lower: usize,
    pub e_upper0: f64,
    pub e_lower0: f64,
    pub gap0: f64,
    /// `z = O_{iī}` with `i` the upper state.
    pub z0: Complex64,
    pub e_upper: f64,
    pub e_lower: f64,
    pub gap: f64,
    /// `½ atan2(2|hz|, Δ₀) ∈ [0, π/4]`.
    pub theta: f64,
    /// `arg(hz)`.
    pub chi: f64,
    /// Dressed states in the `(|E_i⟩, |E_ī⟩)` basis: columns `|+⟩`, `|−⟩`.
    pub rotation: [[Complex64; 2]; 2],
    /// `⟨a|Ô|b⟩` for `a, b ∈ {+, −}`.
    pub z: [[Complex64; 2]; 2],
}

pub fn effective_pair(spec: &FloquetSpectrum, k: usize, h: f64, o: &OverlapMatrix) -> Result<EffectivePair, HsoError> {
    let pair = spec.pairs().get(k).ok_or(HsoError::PairIndex(k, spec.pairs().len()))?;
    let (i, ib) = (pair.upper, pair.lower);
    let gap0 = pair.gap_f64();
    let z0 = o.get(i, ib);
    let w = z0 * h;
    let theta = 0.5 * (2.0 * w.norm()).atan2(gap0);
    let chi = if w.norm() > 0.0 { w.arg() } else { 0.0 };
    let half = 0.5 * (gap0 * gap0 + 4.0 * w.norm_sqr()).sqrt();
    let e = spec.energies_f64();
    let mean = 0.5 * (e[i] + e[ib]) + 0.5 * h * (o.get(i, i) + o.get(ib, ib)).re;

    let min_sep = (0..spec.dim())
        .filter(|&j| j != i && j != ib)
        .map(|j| (e[i] - e[j]).abs().min((e[ib] - e[j]).abs()))
        .fold(f64::INFINITY, f64::min);
    if h.abs() * z0.norm() > 0.1 * min_sep {
        log::warn!("effective pair {k}: h|z| = {:e} is not small against the spacing {min_sep:e}", h.abs() * z0.norm());
    }

    let (c, s) = (theta.cos(), theta.sin());
    let ph = Complex64::from_polar(1.0, -chi);
    let rot = [[Complex64::new(c, 0.0), -ph.conj() * s], [ph * s, Complex64::new(c, 0.0)]];
    let ob = [[o.get(i, i), o.get(i, ib)], [o.get(ib, i), o.get(ib, ib)]];
    let mut z = [[Complex64::new(0.0, 0.0); 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            for p in 0..2 {
                for q in 0..2 {
                    z[a][b] += rot[p][a].conj() * ob[p][q] * rot[q][b];
                }
            }
        }
    }
    Ok(EffectivePair {
        k,
        upper: i,
        lower: ib,
        e_upper0: e[i],
        e_lower0: e[ib],
        gap0,
        z0,
        e_upper: mean + half,
        e_lower: mean - half,
        gap: 2.0 * half,
        theta,
        chi,
        rotation: rot,
        z,
    })
}

/// `∫₀ᵗ e^{iΔs} ds`.
/// `∫₀^t e^{iΔs} ds`.
pub(crate) fn linear_response(delta: f64, t: f64) -> Complex64 {
    Complex64::from_polar(t * sinc(delta * t / 2.0), delta * t / 2.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NlrMode {
    Exact,
    Perturbative,
}

/// Finite-`h` HSO for the Heaviside PDR signal.
///
/// Exact mode diagonalizes `H + h·Sz` at the spectrum's precision and uses
/// `R_ij = ∫₀^{nT} e^{iΔ_ij,h s} ds`. Perturbative mode keeps each doublet's
/// dressed 2×2 block, and a diagonal `t·O_jj,h` for every state, with
/// `O_jj,h − O_jj = 2h Σ_k |O_jk|²/(E_j − E_k)` from first-order
/// perturbation theory (the partner excluded, its coupling being exact in the
/// block).
pub fn hso_nlr(spec: &FloquetSpectrum, o: &OverlapMatrix, h: f64, sig: &SignalSpec, n: usize, mode: NlrMode) -> Result<HsoMatrix, HsoError> {
    if sig.shape != Shape::HeavisidePdr {
        return Err(HsoError::NlrScope(sig.shape.name()));
    }
    let p = spec.params();
    sig.validate(p.t)?;
    let t = n as f64 * p.t;
    match mode {
        NlrMode::Exact => {
            let fs = diagonalize_with_field(p, h, Precision::from_bits(spec.bits()).expect("spectrum bits ≥ 53"))?;
            let d = fs.dim();
            let oh = fs.sz_overlaps(p.space()).map(|x| Complex64::new(x, 0.0));
            let resp = DMatrix::from_fn(d, d, |i, j| linear_response(fs.gap(i, j), t));
            let matrix = oh.component_mul(&resp);
            Ok(HsoMatrix {
                n,
                time: t,
                mode: HsoMode::NlrExact,
                matrix,
                basis: fs.vectors_f64().map(|x| Complex64::new(x, 0.0)),
                overlaps: oh,
                response: resp,
            })
        }
        NlrMode::Perturbative => {
            let d = spec.dim();
            let mut basis = real_basis(spec);
            let mut oh = DMatrix::zeros(d, d);
            let mut resp = DMatrix::zeros(d, d);
            let mut partner = vec![usize::MAX; d];
            for pr in spec.pairs() {
                partner[pr.upper] = pr.lower;
                partner[pr.lower] = pr.upper;
            }
            let shift = |j: usize| -> Complex64 {
                let mut s = Complex64::new(0.0, 0.0);
                for k in 0..d {
                    if k != j && k != partner[j] {
                        let de = spec.gap(j, k);
                        if de != 0.0 {
                            s += o.get(j, k).norm_sqr() * 2.0 * h / de;
                        }
                    }
                }
                s
            };
            for j in 0..d {
                if partner[j] == usize::MAX {
                    oh[(j, j)] = o.get(j, j) + shift(j);
                    resp[(j, j)] = Complex64::new(t, 0.0);
                }
            }
            for k in 0..spec.pairs().len() {
                let ep = effective_pair(spec, k, h, o)?;
                let idx = [ep.upper, ep.lower];
                let v0 = basis.column(ep.upper).clone_owned();
                let v1 = basis.column(ep.lower).clone_owned();
                for a in 0..2 {
                    let col = &v0 * ep.rotation[0][a] + &v1 * ep.rotation[1][a];
                    basis.set_column(idx[a], &col);
                }
                let energy = [ep.e_upper, ep.e_lower];
                for a in 0..2 {
                    for b in 0..2 {
                        let mut z = ep.z[a][b];
                        if a == b {
                            z += shift(idx[a]);
                        }
                        oh[(idx[a], idx[b])] = z;
                        resp[(idx[a], idx[b])] = linear_response(energy[a] - energy[b], t);
                    }
                }
            }
            let matrix = oh.component_mul(&resp);
            Ok(HsoMatrix {
                n,
                time: t,
                mode: HsoMode::NlrPerturbative,
                matrix,
                basis,
                overlaps: oh,
                response: resp,
            })
        }
    }
}
