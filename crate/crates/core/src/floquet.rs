//! Kicked-LMG Floquet spectrum.
//!
//! `U_F = X e^{-iHT}` with `H = −(2J/N)Sz² − 2B·Sx`. Since `[X, H] = 0` the
//! Hamiltonian splits into an even and an odd tridiagonal block (see
//! [`ParityLayout`]); each is diagonalized on its own so the exponentially small
//! doublet gaps come out as differences of independently converged
//! eigenvalues.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::precision::{
    tridiag_eigensolve, BigFloat, Matrix, Precision, PrecisionError, Real, Symmetry,
    SymTridiagonal, TridiagEigen,
};
use crate::spin::{CollectiveOperator, DickeSpace, OperatorLabel, ParityLayout, SpinError};

#[derive(Debug, thiserror::Error)]
pub enum FloquetError {
    #[error("invalid LMG parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Spin(#[from] SpinError),
    #[error("{block} block eigensolve failed: {source}")]
    Eigen {
        block: &'static str,
        source: PrecisionError,
    },
    #[error("initial state has norm {0}, expected 1")]
    Unnormalized(f64),
    #[error("state has dimension {got}, expected {expected}")]
    Dimension { expected: usize, got: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LmgParams {
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "T")]
    pub t: f64,
}

impl LmgParams {
    pub fn new(j: f64, b: f64, n: usize, t: f64) -> Result<Self, FloquetError> {
        let p = LmgParams { j, b, n, t };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), FloquetError> {
        let bad = |s: &str| Err(FloquetError::InvalidParams(s.into()));
        if self.n == 0 {
            return Err(SpinError::ZeroSpins.into());
        }
        if !(self.j > 0.0 && self.j.is_finite()) {
            return bad("J must be positive");
        }
        if !(self.t > 0.0 && self.t.is_finite()) {
            return bad("T must be positive");
        }
        if !(self.b >= 0.0 && self.b.is_finite()) {
            return bad("B must be non-negative");
        }
        Ok(())
    }

    pub fn space(&self) -> DickeSpace {
        DickeSpace::new(self.n).expect("validated")
    }

    /// Broken-symmetry edge `E* = −B·N`.
    pub fn edge(&self) -> f64 {
        -self.b * self.n as f64
    }
}

/// Dicke-basis `H` as a tridiagonal at the given width.
pub fn hamiltonian_tridiagonal<R: Real>(p: &LmgParams, bits: u32) -> SymTridiagonal<R> {
    let space = p.space();
    let j = R::from_f64(p.j, bits);
    let b = R::from_f64(p.b, bits);
    let two_n = 2 * p.n as i64;
    let diag = (0..space.dim())
        .map(|i| {
            let tm = space.twice_m(i);
            // −(2J/N)m² = −J(2m)²/(2N)
            j.clone() * R::from_ratio(-tm * tm, two_n, bits)
        })
        .collect();
    let off = space
        .raising_elements::<R>(bits)
        .into_iter()
        .map(|c| -(b.clone() * c))
        .collect();
    SymTridiagonal::new(diag, off).expect("well-formed")
}

/// Even and odd blocks of `H` in the parity-adapted basis.
pub fn parity_blocks<R: Real>(p: &LmgParams, bits: u32) -> (SymTridiagonal<R>, SymTridiagonal<R>) {
    let full = hamiltonian_tridiagonal::<R>(p, bits);
    let layout = ParityLayout::new(p.space());
    let (h, o) = (full.diag(), full.off());
    let np = layout.odd;

    let mut ed: Vec<R> = h[..np].to_vec();
    let mut od: Vec<R> = h[..np].to_vec();
    let mut ee: Vec<R> = o[..np.saturating_sub(1)].to_vec();
    let oe: Vec<R> = o[..np.saturating_sub(1)].to_vec();
    if layout.has_center() {
        ed.push(h[np].clone());
        ee.push(o[np - 1].clone() * R::from_f64(2.0, bits).sqrt());
    } else {
        // |j⟩ and its mirror are neighbours: the coupling lands on the diagonal.
        let last = np - 1;
        ed[last] = ed[last].clone() + &o[last];
        od[last] = od[last].clone() - &o[last];
    }
    (
        SymTridiagonal::new(ed, ee).expect("well-formed"),
        SymTridiagonal::new(od, oe).expect("well-formed"),
    )
}

/// `H` as a double-precision collective operator.
pub fn build_lmg_hamiltonian(p: &LmgParams) -> Result<CollectiveOperator, FloquetError> {
    p.validate()?;
    let t = hamiltonian_tridiagonal::<f64>(p, 53);
    let d = t.dim();
    let mut m = DMatrix::<f64>::zeros(d, d);
    for i in 0..d {
        m[(i, i)] = t.diag()[i];
        if i + 1 < d {
            m[(i, i + 1)] = t.off()[i];
            m[(i + 1, i)] = t.off()[i];
        }
    }
    let matrix = Matrix::from_real(&m, Symmetry::RealSymmetricTridiagonal).map_err(SpinError::from)?;
    Ok(CollectiveOperator {
        space: p.space(),
        matrix,
        label: OperatorLabel::Custom("H_LMG".into()),
    })
}

/// π-paired doublet: `upper` is `i` (the higher energy), `lower` is `ī`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CatPair {
    pub k: usize,
    pub upper: usize,
    pub lower: usize,
    /// `Δ = E_i − E_ī ≥ 0`, the difference of the two block eigenvalues.
    pub gap: BigFloat,
}

impl CatPair {
    pub fn gap_f64(&self) -> f64 {
        self.gap.to_f64()
    }
}

#[derive(Clone, Debug)]
pub struct FloquetSpectrum {
    params: LmgParams,
    bits: u32,
    energies: Vec<BigFloat>,
    parities: Vec<i8>,
    vectors: Vec<Vec<BigFloat>>,
    vectors_f64: DMatrix<f64>,
    pairs: Vec<CatPair>,
}

/// Diagonalize both parity blocks (concurrently) and assemble the spectrum.
///
/// States are indexed in ascending energy; exact ties put the even state
/// first. Eigenvectors are in the Dicke basis with their largest-magnitude
/// component positive (lowest Dicke index on ties).
pub fn diagonalize(p: &LmgParams, precision: Precision) -> Result<FloquetSpectrum, FloquetError> {
    p.validate()?;
    match precision {
        Precision::Double => assemble::<f64>(p, 53),
        Precision::Extended(bits) => assemble::<BigFloat>(p, bits),
    }
}

fn assemble<R: Real>(p: &LmgParams, bits: u32) -> Result<FloquetSpectrum, FloquetError> {
    let (even, odd) = parity_blocks::<R>(p, bits);
    let (re, ro) = rayon::join(|| tridiag_eigensolve(&even), || tridiag_eigensolve(&odd));
    let re = re.map_err(|source| FloquetError::Eigen { block: "even", source })?;
    let ro = ro.map_err(|source| FloquetError::Eigen { block: "odd", source })?;

    let layout = ParityLayout::new(p.space());
    let inv_sqrt2 = R::one(bits) / R::from_f64(2.0, bits).sqrt();
    let lift = |e: TridiagEigen<R>, is_even: bool| -> Vec<(BigFloat, i8, Vec<BigFloat>)> {
        e.values
            .into_iter()
            .zip(e.vectors)
            .map(|(l, v)| {
                let mut w = layout.to_dicke(is_even, &v, &inv_sqrt2);
                fix_sign(&mut w);
                (
                    l.to_bigfloat(),
                    if is_even { 1 } else { -1 },
                    w.iter().map(Real::to_bigfloat).collect(),
                )
            })
            .collect()
    };
    let evens = lift(re, true);
    let odds = lift(ro, false);

    let edge = BigFloat::from_f64(p.b, bits) * BigFloat::from_f64(-(p.n as f64), bits);
    let mut states: Vec<(BigFloat, i8, Vec<BigFloat>, Option<(usize, bool)>)> = Vec::new();
    for (k, (l, par, v)) in evens.iter().cloned().enumerate() {
        states.push((l, par, v, Some((k, true))));
    }
    for (k, (l, par, v)) in odds.iter().cloned().enumerate() {
        states.push((l, par, v, Some((k, false))));
    }
    // stable: evens precede odds on exact ties
    let mut order: Vec<usize> = (0..states.len()).collect();
    order.sort_by(|&a, &b| states[a].0.partial_cmp(&states[b].0).expect("finite"));
    let mut position = vec![0; states.len()];
    for (new, &old) in order.iter().enumerate() {
        position[old] = new;
    }
    let pos_even = |k: usize| position[k];
    let pos_odd = |k: usize| position[evens.len() + k];

    let mut pairs = Vec::new();
    for k in 0..evens.len().min(odds.len()) {
        let (ee, eo) = (&evens[k].0, &odds[k].0);
        let mean = (ee.clone() + eo).mul_pow2(-1);
        if !(mean < edge) {
            break;
        }
        let (upper, lower, gap) = if ee > eo {
            (pos_even(k), pos_odd(k), ee.clone() - eo)
        } else {
            (pos_odd(k), pos_even(k), eo.clone() - ee)
        };
        pairs.push(CatPair { k, upper, lower, gap });
    }

    let dim = states.len();
    let mut energies = Vec::with_capacity(dim);
    let mut parities = Vec::with_capacity(dim);
    let mut vectors = Vec::with_capacity(dim);
    for &i in &order {
        energies.push(states[i].0.clone());
        parities.push(states[i].1);
        vectors.push(states[i].2.clone());
    }
    let vectors_f64 = DMatrix::from_fn(dim, dim, |r, c| vectors[c][r].to_f64());
    Ok(FloquetSpectrum {
        params: *p,
        bits,
        energies,
        parities,
        vectors,
        vectors_f64,
        pairs,
    })
}

fn fix_sign<R: Real>(v: &mut [R]) {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < R::zero(v[best].bits()) {
        for x in v.iter_mut() {
            *x = -x.clone();
        }
    }
}

impl FloquetSpectrum {
    pub fn params(&self) -> &LmgParams {
        &self.params
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[BigFloat] {
        &self.energies
    }

    pub fn energies_f64(&self) -> Vec<f64> {
        self.energies.iter().map(Real::to_f64).collect()
    }

    pub fn parities(&self) -> &[i8] {
        &self.parities
    }

    pub fn vector(&self, i: usize) -> &[BigFloat] {
        &self.vectors[i]
    }

    /// Eigenvectors as columns, rounded to double.
    pub fn vectors_f64(&self) -> &DMatrix<f64> {
        &self.vectors_f64
    }

    pub fn pairs(&self) -> &[CatPair] {
        &self.pairs
    }

    pub fn edge(&self) -> BigFloat {
        BigFloat::from_f64(self.params.b, self.bits) * BigFloat::from_f64(-(self.params.n as f64), self.bits)
    }

    /// Pair containing state `i`, if any.
    pub fn pair_of(&self, i: usize) -> Option<&CatPair> {
        self.pairs.iter().find(|p| p.upper == i || p.lower == i)
    }

    /// `ε_i = E_i T + (1 − p_i)π/2` reduced to `[0, 2π)`.
    pub fn quasienergy(&self, i: usize) -> BigFloat {
        let b = self.bits;
        let pi = BigFloat::pi(b);
        let mut e = self.energies[i].clone() * BigFloat::from_f64(self.params.t, b);
        if self.parities[i] < 0 {
            e = e + &pi;
        }
        e.rem_euclid(&pi.mul_pow2(1))
    }

    pub fn quasienergies(&self) -> Vec<BigFloat> {
        (0..self.dim()).map(|i| self.quasienergy(i)).collect()
    }

    /// `E_i − E_j` formed at full precision, then rounded.
    pub fn gap(&self, i: usize, j: usize) -> f64 {
        (self.energies[i].clone() - &self.energies[j]).to_f64()
    }

    pub fn gap_matrix(&self) -> DMatrix<f64> {
        let d = self.dim();
        DMatrix::from_fn(d, d, |i, j| self.gap(i, j))
    }

    /// `⟨E_i|Sz|E_j⟩` for all `i, j`, accumulated at the spectrum's precision.
    pub fn sz_overlaps(&self) -> DMatrix<f64> {
        let d = self.dim();
        let m: Vec<BigFloat> = self.params.space().sz_diagonal(self.bits);
        let weighted: Vec<Vec<BigFloat>> = self
            .vectors
            .iter()
            .map(|v| v.iter().zip(&m).map(|(a, b)| a.clone() * b).collect())
            .collect();
        let mut out = DMatrix::zeros(d, d);
        for i in 0..d {
            for j in i..d {
                let mut s = BigFloat::zero(self.bits);
                for (a, b) in weighted[i].iter().zip(&self.vectors[j]) {
                    s = s + a.clone() * b;
                }
                let x = s.to_f64();
                out[(i, j)] = x;
                out[(j, i)] = x;
            }
        }
        out
    }

    /// Expansion coefficients `⟨E_i|ψ⟩`.
    pub fn coefficients(&self, psi: &DVector<Complex64>) -> Result<DVector<Complex64>, FloquetError> {
        if psi.len() != self.dim() {
            return Err(FloquetError::Dimension {
                expected: self.dim(),
                got: psi.len(),
            });
        }
        Ok(self.vectors_f64.map(|x| Complex64::new(x, 0.0)).transpose() * psi)
    }
}

#[derive(Serialize)]
struct PairRecord<'a> {
    k: usize,
    i: usize,
    ibar: usize,
    gap: &'a BigFloat,
}

#[derive(Serialize)]
struct SpectrumRecord<'a> {
    params: &'a LmgParams,
    precision_bits: u32,
    energies: &'a [BigFloat],
    parities: &'a [i8],
    pairs: Vec<PairRecord<'a>>,
    edge: BigFloat,
}

impl FloquetSpectrum {
    /// JSON document with every energy and gap as a full-precision decimal
    /// string.
    pub fn to_json(&self) -> String {
        let record = SpectrumRecord {
            params: &self.params,
            precision_bits: self.bits,
            energies: &self.energies,
            parities: &self.parities,
            pairs: self
                .pairs
                .iter()
                .map(|p| PairRecord {
                    k: p.k,
                    i: p.upper,
                    ibar: p.lower,
                    gap: &p.gap,
                })
                .collect(),
            edge: self.edge(),
        };
        serde_json::to_string_pretty(&record).expect("plain data serializes")
    }
}

/// Number of doublets below the broken-symmetry edge.
pub fn count_cat_pairs(s: &FloquetSpectrum) -> usize {
    s.pairs.len()
}

#[derive(Clone, Debug, PartialEq)]
pub struct MagnetizationTrace {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

/// `⟨Sz(nT)⟩` for `n = 0..=n_max` from the eigenbasis expansion.
pub fn stroboscopic_magnetization(
    s: &FloquetSpectrum,
    psi0: &DVector<Complex64>,
    n_max: usize,
) -> Result<MagnetizationTrace, FloquetError> {
    let norm = psi0.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(FloquetError::Unnormalized(norm));
    }
    let c = s.coefficients(psi0)?;
    let o = s.sz_overlaps();
    let gaps = s.gap_matrix();
    let d = s.dim();
    let t = s.params.t;
    let mut terms = Vec::new();
    for i in 0..d {
        for j in 0..d {
            if s.parities[i] != s.parities[j] {
                let w = c[i].conj() * c[j] * o[(i, j)];
                if w.norm() > 0.0 {
                    terms.push((gaps[(i, j)], w));
                }
            }
        }
    }
    let mut times = Vec::with_capacity(n_max + 1);
    let mut values = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let nt = n as f64 * t;
        let sum: Complex64 = terms
            .iter()
            .map(|&(g, w)| w * Complex64::from_polar(1.0, g * nt))
            .sum();
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        times.push(nt);
        values.push(sign * sum.re);
    }
    Ok(MagnetizationTrace { times, values })
}

/// Eigenpairs of `H + h·Sz` without parity blocking (the field breaks it).
#[derive(Clone, Debug)]
pub struct FieldSpectrum {
    pub energies: Vec<BigFloat>,
    pub vectors: Vec<Vec<BigFloat>>,
    pub bits: u32,
}

impl FieldSpectrum {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn gap(&self, i: usize, j: usize) -> f64 {
        (self.energies[i].clone() - &self.energies[j]).to_f64()
    }

    pub fn vectors_f64(&self) -> DMatrix<f64> {
        let d = self.dim();
        DMatrix::from_fn(d, d, |r, c| self.vectors[c][r].to_f64())
    }

    pub fn sz_overlaps(&self, space: DickeSpace) -> DMatrix<f64> {
        let d = self.dim();
        let m: Vec<BigFloat> = space.sz_diagonal(self.bits);
        DMatrix::from_fn(d, d, |i, j| {
            let mut s = BigFloat::zero(self.bits);
            for k in 0..d {
                s = s + self.vectors[i][k].clone() * &m[k] * &self.vectors[j][k];
            }
            s.to_f64()
        })
    }
}

pub fn diagonalize_with_field(p: &LmgParams, h: f64, precision: Precision) -> Result<FieldSpectrum, FloquetError> {
    p.validate()?;
    fn go<R: Real>(p: &LmgParams, h: f64, bits: u32) -> Result<FieldSpectrum, FloquetError> {
        let base = hamiltonian_tridiagonal::<R>(p, bits);
        let hz = R::from_f64(h, bits);
        let diag: Vec<R> = base
            .diag()
            .iter()
            .zip(p.space().sz_diagonal::<R>(bits))
            .map(|(d, m)| d.clone() + hz.clone() * m)
            .collect();
        let t = SymTridiagonal::new(diag, base.off().to_vec()).expect("well-formed");
        let e = tridiag_eigensolve(&t).map_err(|source| FloquetError::Eigen { block: "full", source })?;
        let vectors = e
            .vectors
            .into_iter()
            .map(|mut v| {
                fix_sign(&mut v);
                v.iter().map(Real::to_bigfloat).collect()
            })
            .collect();
        Ok(FieldSpectrum {
            energies: e.values.iter().map(Real::to_bigfloat).collect(),
            vectors,
            bits,
        })
    }
    match precision {
        Precision::Double => go::<f64>(p, h, 53),
        Precision::Extended(bits) => go::<BigFloat>(p, h, bits),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: usize, b: f64) -> LmgParams {
        LmgParams::new(1.0, b, n, 1.0).unwrap()
    }

    #[test]
    fn rejects_bad_params() {
        assert!(LmgParams::new(0.0, 0.1, 4, 1.0).is_err());
        assert!(LmgParams::new(1.0, -0.1, 4, 1.0).is_err());
        assert!(LmgParams::new(1.0, 0.1, 0, 1.0).is_err());
        assert!(LmgParams::new(1.0, 0.1, 4, 0.0).is_err());
    }

    #[test]
    fn single_spin_hamiltonian() {
        let h = build_lmg_hamiltonian(&params(1, 0.0)).unwrap();
        assert_eq!(h.real(), DMatrix::from_row_slice(2, 2, &[-0.5, 0.0, 0.0, -0.5]));
    }

    #[test]
    fn hamiltonian_commutes_with_kick() {
        let p = params(7, 0.3);
        let h = build_lmg_hamiltonian(&p).unwrap();
        let x = crate::spin::build_collective_operators(7).unwrap().x;
        let c = h.data() * x.data() - x.data() * h.data();
        assert_eq!(c.norm(), 0.0);
    }

    #[test]
    fn zero_field_doublets_are_exact() {
        for n in [5, 6] {
            let s = diagonalize(&params(n, 0.0), Precision::Extended(128)).unwrap();
            assert_eq!(count_cat_pairs(&s), (n + 1) / 2);
            let pi = BigFloat::pi(128);
            for pair in s.pairs() {
                assert!(pair.gap.is_zero());
                let d = (s.quasienergy(pair.lower) - s.quasienergy(pair.upper)).abs();
                assert!((d - &pi).abs() < BigFloat::unit_roundoff(128).mul_pow2(6));
            }
        }
    }

    #[test]
    fn blocks_match_full_double_diagonalization() {
        for n in [3, 8, 12] {
            let p = params(n, 0.4);
            let s = diagonalize(&p, Precision::Extended(128)).unwrap();
            let h = build_lmg_hamiltonian(&p).unwrap().real();
            let mut ev: Vec<f64> = h.symmetric_eigen().eigenvalues.iter().copied().collect();
            ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (a, b) in ev.iter().zip(s.energies_f64()) {
                assert!((a - b).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn eigenvector_convention() {
        let s = diagonalize(&params(9, 0.4), Precision::Double).unwrap();
        let x = crate::spin::build_collective_operators(9).unwrap().x.real();
        let v = s.vectors_f64();
        for i in 0..s.dim() {
            let col = v.column(i);
            let xv = &x * col;
            assert!((xv - col * s.parities()[i] as f64).norm() < 1e-13);
            let big = col.iter().fold(0.0f64, |m, &a| if a.abs() > m.abs() { a } else { m });
            assert!(big > 0.0);
            let hv = build_lmg_hamiltonian(s.params()).unwrap().real() * col;
            assert!((hv - col * s.energies_f64()[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn pairs_join_opposite_parities() {
        let s = diagonalize(&params(20, 0.4), Precision::Extended(192)).unwrap();
        assert!(count_cat_pairs(&s) > 0);
        for (k, p) in s.pairs().iter().enumerate() {
            assert_eq!(p.k, k);
            assert_ne!(s.parities()[p.upper], s.parities()[p.lower]);
            assert!(p.gap > BigFloat::zero(192));
            assert!(s.energies()[p.upper] >= s.energies()[p.lower]);
        }
        // gaps grow with k
        for w in s.pairs().windows(2) {
            assert!(w[1].gap >= w[0].gap);
        }
    }

    #[test]
    fn paramagnet_has_no_doublets() {
        // the zero-point shift can push one mean just under the edge
        let s = diagonalize(&params(20, 1.2), Precision::Double).unwrap();
        assert!(count_cat_pairs(&s) <= 1);
        let s = diagonalize(&params(20, 2.0), Precision::Double).unwrap();
        assert_eq!(count_cat_pairs(&s), 0);
    }

    #[test]
    fn polarized_flips_at_zero_field() {
        let n = 6;
        let s = diagonalize(&params(n, 0.0), Precision::Double).unwrap();
        let mut psi = DVector::zeros(n + 1);
        psi[n] = Complex64::new(1.0, 0.0);
        let tr = stroboscopic_magnetization(&s, &psi, 10).unwrap();
        for (k, v) in tr.values.iter().enumerate() {
            let want = if k % 2 == 0 { 3.0 } else { -3.0 };
            assert!((v - want).abs() < 1e-12);
        }
    }

    #[test]
    fn parity_eigenstate_has_no_magnetization() {
        let s = diagonalize(&params(8, 0.4), Precision::Double).unwrap();
        let psi = s.vectors_f64().column(3).map(|x| Complex64::new(x, 0.0));
        let tr = stroboscopic_magnetization(&s, &psi, 20).unwrap();
        assert!(tr.values.iter().all(|v| v.abs() < 1e-12));
        assert!(matches!(
            stroboscopic_magnetization(&s, &(psi * Complex64::new(2.0, 0.0)), 2),
            Err(FloquetError::Unnormalized(_))
        ));
    }

    #[test]
    fn quasienergy_branch() {
        let s = diagonalize(&params(10, 0.4), Precision::Extended(128)).unwrap();
        let two_pi = BigFloat::pi(128).mul_pow2(1);
        for e in s.quasienergies() {
            assert!(e >= BigFloat::zero(128) && e < two_pi);
        }
    }
}
