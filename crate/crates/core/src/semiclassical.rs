//! Large-spin (Holstein–Primakoff) estimates of the doublet overlaps, and
//! tables comparing them with exact diagonalization.

use std::f64::consts::FRAC_PI_2;
use std::io::{self, Write};

use serde::Serialize;

use crate::floquet::{diagonalize, FloquetError, LmgParams};
use crate::hso::{overlap_matrix, HsoError};
use crate::precision::Precision;
use crate::spin::build_collective_operators;

#[derive(Debug, thiserror::Error)]
pub enum SemiclassicalError {
    #[error("b = {0} outside the ordered phase [0, 1)")]
    OutOfPhase(f64),
    #[error("doublet {k} not present (M = {m})")]
    NoPair { k: usize, m: usize },
    #[error(transparent)]
    Floquet(#[from] FloquetError),
    #[error(transparent)]
    Hso(#[from] HsoError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SemiclassicalParams {
    /// `B/J`.
    pub b: f64,
    pub n: usize,
    /// Doublet index.
    pub k: usize,
}

impl SemiclassicalParams {
    pub fn validate(&self) -> Result<(), SemiclassicalError> {
        if !(0.0..1.0).contains(&self.b) {
            return Err(SemiclassicalError::OutOfPhase(self.b));
        }
        Ok(())
    }
}

/// Polar angle of the classical magnetization.
pub fn classical_angle(b: f64) -> f64 {
    if b < 1.0 {
        b.max(0.0).asin()
    } else {
        FRAC_PI_2
    }
}

/// Mean-field energy per spin, `−J cos²ϑ/2 − B sinϑ cos φ`.
pub fn classical_energy(theta: f64, phi: f64, j: f64, b_field: f64) -> f64 {
    -j * theta.cos().powi(2) / 2.0 - b_field * theta.sin() * phi.cos()
}

/// Minimum of [`classical_energy`] for `b = B/J`, in units of `J`.
pub fn e_c(b: f64) -> f64 {
    if b < 1.0 {
        -b * b / 2.0 - 0.5
    } else {
        -b
    }
}

/// `|Sz|_{kk̄}/N` from the Bogoliubov treatment to first order in `1/N`.
pub fn overlap_exact_hp(k: usize, n: usize, b: f64) -> f64 {
    let r = (2.0 * b * b + 1.0).sqrt();
    let kk = k as f64;
    let corr = (-b * b * (2.0 * kk + 1.0) + r - 2.0 * kk - 1.0) / (n as f64 * r);
    0.5 * (1.0 - b * b).sqrt() * (corr + 1.0)
}

/// Small-`b` expansion of [`overlap_exact_hp`].
pub fn overlap_series(k: usize, n: usize, b: f64) -> f64 {
    let (kk, nf) = (k as f64, n as f64);
    let b2 = b * b;
    (0.5 - kk / nf) * (1.0 - b2 / 2.0 - b2 * b2 / 8.0) - (2.0 * kk + 1.0) * b2 * b2 / (4.0 * nf)
}

/// `|⟨E_k|Sz|E_k̄⟩|/N` at `J = 1`, `T = 1`.
pub fn overlap_exact_diag(k: usize, n: usize, b: f64, precision: Precision) -> Result<f64, SemiclassicalError> {
    let s = diagonalize(&LmgParams::new(1.0, b, n, 1.0)?, precision)?;
    let p = s.pairs().get(k).ok_or(SemiclassicalError::NoPair { k, m: s.pairs().len() })?;
    let sz = build_collective_operators(n).map_err(FloquetError::from)?.sz;
    let o = overlap_matrix(&s, &sz)?;
    Ok(o.get(p.upper, p.lower).norm() / n as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub k: usize,
    pub n: usize,
    pub b: f64,
    pub series: f64,
    pub exact_hp: f64,
    /// Absent when the doublet does not exist at these parameters.
    pub exact_diag: Option<f64>,
}

pub fn comparison_table(ks: &[usize], ns: &[usize], bs: &[f64], precision: Precision) -> Result<Vec<ComparisonRow>, SemiclassicalError> {
    use rayon::prelude::*;
    let cases: Vec<(usize, f64)> = ns.iter().flat_map(|&n| bs.iter().map(move |&b| (n, b))).collect();
    let blocks = cases
        .par_iter()
        .map(|&(n, b)| -> Result<Vec<ComparisonRow>, SemiclassicalError> {
            SemiclassicalParams { b, n, k: 0 }.validate()?;
            let s = diagonalize(&LmgParams::new(1.0, b, n, 1.0)?, precision)?;
            let sz = build_collective_operators(n).map_err(FloquetError::from)?.sz;
            let o = overlap_matrix(&s, &sz)?;
            Ok(ks
                .iter()
                .map(|&k| ComparisonRow {
                    k,
                    n,
                    b,
                    series: overlap_series(k, n, b),
                    exact_hp: overlap_exact_hp(k, n, b),
                    exact_diag: s.pairs().get(k).map(|p| o.get(p.upper, p.lower).norm() / n as f64),
                })
                .collect())
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(blocks.into_iter().flatten().collect())
}

pub fn write_comparison_csv<W: Write>(rows: &[ComparisonRow], mut w: W) -> io::Result<()> {
    writeln!(w, "k,N,b,series,exact_hp,exact_diag")?;
    for r in rows {
        let ed = r.exact_diag.map(|x| format!("{x:e}")).unwrap_or_default();
        writeln!(w, "{},{},{:e},{:e},{:e},{}", r.k, r.n, r.b, r.series, r.exact_hp, ed)?;
    }
    Ok(())
}
