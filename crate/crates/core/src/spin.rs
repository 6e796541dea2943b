//! Collective-spin operators on the maximal sector `S = N/2`.
//!
//! Basis convention throughout the crate: Dicke states `|S, m⟩` ordered by
//! `m = −S, −S+1, …, +S`, so index `i` carries `m = i − S`.
//!
//! The kick `X` is the exact anti-diagonal permutation `|m⟩ → |−m⟩`. It
//! differs from `exp(iπSx)` by a global phase only.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::precision::{Matrix, PrecisionError, Real, Symmetry};

#[derive(Debug, thiserror::Error)]
pub enum SpinError {
    #[error("spin count must be at least 1")]
    ZeroSpins,
    #[error(transparent)]
    Matrix(#[from] PrecisionError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DickeSpace {
    n_spins: usize,
}

impl DickeSpace {
    pub fn new(n_spins: usize) -> Result<Self, SpinError> {
        if n_spins == 0 {
            return Err(SpinError::ZeroSpins);
        }
        Ok(DickeSpace { n_spins })
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn dim(&self) -> usize {
        self.n_spins + 1
    }

    pub fn spin(&self) -> f64 {
        self.n_spins as f64 / 2.0
    }

    /// `m` of basis index `i`.
    pub fn m(&self, i: usize) -> f64 {
        i as f64 - self.spin()
    }

    /// Index of `|S, −m⟩`.
    pub fn mirror(&self, i: usize) -> usize {
        self.n_spins - i
    }

    /// `2m` of basis index `i`, exact.
    pub fn twice_m(&self, i: usize) -> i64 {
        2 * i as i64 - self.n_spins as i64
    }

    /// `⟨m+1|S₊|m⟩ = √((S−m)(S+m+1))` for `m = m(i)`, `i < dim − 1`, at the
    /// requested precision.
    pub fn raising_elements<R: Real>(&self, bits: u32) -> Vec<R> {
        let n = self.n_spins as i64;
        (0..self.n_spins as i64)
            .map(|i| {
                // (S − m)(S + m + 1) = (N − i)(i + 1) with m = i − N/2
                R::from_f64(((n - i) * (i + 1)) as f64, bits).sqrt()
            })
            .collect()
    }

    /// Diagonal of `Sz` at the requested precision.
    pub fn sz_diagonal<R: Real>(&self, bits: u32) -> Vec<R> {
        (0..self.dim())
            .map(|i| R::from_ratio(self.twice_m(i), 2, bits))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OperatorLabel {
    Sx,
    Sy,
    Sz,
    SPlus,
    SMinus,
    X,
    Custom(String),
}

#[derive(Clone, Debug)]
pub struct CollectiveOperator {
    pub space: DickeSpace,
    pub matrix: Matrix,
    pub label: OperatorLabel,
}

impl CollectiveOperator {
    pub fn data(&self) -> &DMatrix<Complex64> {
        self.matrix.data()
    }

    /// Real part, for operators known to be real.
    pub fn real(&self) -> DMatrix<f64> {
        self.matrix.data().map(|z| z.re)
    }
}

#[derive(Clone, Debug)]
pub struct CollectiveOperators {
    pub sx: CollectiveOperator,
    pub sy: CollectiveOperator,
    pub sz: CollectiveOperator,
    pub splus: CollectiveOperator,
    pub sminus: CollectiveOperator,
    pub x: CollectiveOperator,
}

pub fn build_collective_operators(n_spins: usize) -> Result<CollectiveOperators, SpinError> {
    let space = DickeSpace::new(n_spins)?;
    let d = space.dim();
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let ladder: Vec<f64> = space.raising_elements(53);

    let mut splus = DMatrix::zeros(d, d);
    for (i, &l) in ladder.iter().enumerate() {
        splus[(i + 1, i)] = c(l, 0.0);
    }
    let sminus = splus.transpose();
    let sx = (&splus + &sminus) * c(0.5, 0.0);
    let sy = (&splus - &sminus) * c(0.0, -0.5);
    let sz = DMatrix::from_fn(d, d, |i, j| if i == j { c(space.m(i), 0.0) } else { c(0.0, 0.0) });
    let x = DMatrix::from_fn(d, d, |i, j| {
        if j == space.mirror(i) {
            c(1.0, 0.0)
        } else {
            c(0.0, 0.0)
        }
    });

    let op = |m: DMatrix<Complex64>, sym, label| -> Result<CollectiveOperator, SpinError> {
        Ok(CollectiveOperator {
            space,
            matrix: Matrix::new(m, sym)?,
            label,
        })
    };
    Ok(CollectiveOperators {
        sx: op(sx, Symmetry::RealSymmetricTridiagonal, OperatorLabel::Sx)?,
        sy: op(sy, Symmetry::Hermitian, OperatorLabel::Sy)?,
        sz: op(sz, Symmetry::RealSymmetricTridiagonal, OperatorLabel::Sz)?,
        splus: op(splus, Symmetry::General, OperatorLabel::SPlus)?,
        sminus: op(sminus, Symmetry::General, OperatorLabel::SMinus)?,
        x: op(x, Symmetry::RealSymmetric, OperatorLabel::X)?,
    })
}

/// Layout of the parity-adapted basis.
///
/// For `i < ⌊dim/2⌋` with mirror `i' = N − i` (so `m_i < 0`):
/// even vector `j = i` is `(|i⟩ + |i'⟩)/√2`, odd vector `j = i` is
/// `(|i'⟩ − |i⟩)/√2 = (|S,|m|⟩ − |S,−|m|⟩)/√2`. For even `N` the even block
/// ends with `|S, 0⟩`. Both blocks are ordered by descending `|m|`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParityLayout {
    pub space: DickeSpace,
    pub even: usize,
    pub odd: usize,
}

impl ParityLayout {
    pub fn new(space: DickeSpace) -> Self {
        let d = space.dim();
        ParityLayout {
            space,
            even: d.div_ceil(2),
            odd: d / 2,
        }
    }

    /// Whether the even block ends with the unpaired `|S, 0⟩` state.
    pub fn has_center(&self) -> bool {
        self.even > self.odd
    }

    /// Map a block eigenvector back to Dicke coordinates.
    pub fn to_dicke<R: Real>(&self, even: bool, v: &[R], inv_sqrt2: &R) -> Vec<R> {
        let bits = inv_sqrt2.bits();
        let mut out = vec![R::zero(bits); self.space.dim()];
        for j in 0..self.odd {
            let a = v[j].clone() * inv_sqrt2;
            let jm = self.space.mirror(j);
            if even {
                out[j] = a.clone();
                out[jm] = a;
            } else {
                out[j] = -a.clone();
                out[jm] = a;
            }
        }
        if even && self.has_center() {
            out[self.odd] = v[self.odd].clone();
        }
        out
    }
}

/// Orthogonal basis change (columns: even vectors, then odd) and block sizes.
pub fn parity_block_transform(space: DickeSpace) -> (Matrix, (usize, usize)) {
    let layout = ParityLayout::new(space);
    let d = space.dim();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut q = DMatrix::<f64>::zeros(d, d);
    for j in 0..layout.odd {
        let jm = space.mirror(j);
        q[(j, j)] = s;
        q[(jm, j)] = s;
        q[(j, layout.even + j)] = -s;
        q[(jm, layout.even + j)] = s;
    }
    if layout.has_center() {
        q[(layout.odd, layout.odd)] = 1.0;
    }
    let m = Matrix::from_real(&q, Symmetry::General).expect("general tag");
    (m, (layout.even, layout.odd))
}
