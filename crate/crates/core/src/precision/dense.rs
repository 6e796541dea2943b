//! Dense complex matrices in double precision and the action of `e^{-ihdt}`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{PrecisionError, SymTridiagonal};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Symmetry {
    General,
    Hermitian,
    RealSymmetric,
    RealSymmetricTridiagonal,
}

impl Symmetry {
    fn name(self) -> &'static str {
        match self {
            Symmetry::General => "general",
            Symmetry::Hermitian => "hermitian",
            Symmetry::RealSymmetric => "real-symmetric",
            Symmetry::RealSymmetricTridiagonal => "real-symmetric-tridiagonal",
        }
    }

    pub fn is_hermitian(self) -> bool {
        self != Symmetry::General
    }
}

/// Square complex matrix with a verified symmetry tag.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    data: DMatrix<Complex64>,
    symmetry: Symmetry,
}

impl Matrix {
    /// Checks the tag exactly: hermitian means `A = A†` entry by entry.
    pub fn new(data: DMatrix<Complex64>, symmetry: Symmetry) -> Result<Self, PrecisionError> {
        let fail = |detail: String| PrecisionError::Contract {
            expected: symmetry.name(),
            detail,
        };
        if symmetry != Symmetry::General {
            if !data.is_square() {
                return Err(fail(format!("{}x{} is not square", data.nrows(), data.ncols())));
            }
            let n = data.nrows();
            for i in 0..n {
                for j in 0..n {
                    let a = data[(i, j)];
                    if a != data[(j, i)].conj() {
                        return Err(fail(format!("entry ({i},{j}) breaks A = A†")));
                    }
                    let real = matches!(
                        symmetry,
                        Symmetry::RealSymmetric | Symmetry::RealSymmetricTridiagonal
                    );
                    if real && a.im != 0.0 {
                        return Err(fail(format!("entry ({i},{j}) is not real")));
                    }
                    if symmetry == Symmetry::RealSymmetricTridiagonal
                        && i.abs_diff(j) > 1
                        && a != Complex64::new(0.0, 0.0)
                    {
                        return Err(fail(format!("entry ({i},{j}) outside the band")));
                    }
                }
            }
        }
        Ok(Matrix { data, symmetry })
    }

    pub fn general(data: DMatrix<Complex64>) -> Self {
        Matrix {
            data,
            symmetry: Symmetry::General,
        }
    }

    /// Hermitian part `(A + A†)/2`, tagged hermitian.
    pub fn hermitian_part(data: &DMatrix<Complex64>) -> Self {
        Matrix {
            data: (data + data.adjoint()) * Complex64::new(0.5, 0.0),
            symmetry: Symmetry::Hermitian,
        }
    }

    pub fn from_real(data: &DMatrix<f64>, symmetry: Symmetry) -> Result<Self, PrecisionError> {
        Matrix::new(data.map(|x| Complex64::new(x, 0.0)), symmetry)
    }

    pub fn data(&self) -> &DMatrix<Complex64> {
        &self.data
    }

    pub fn into_data(self) -> DMatrix<Complex64> {
        self.data
    }

    pub fn symmetry(&self) -> Symmetry {
        self.symmetry
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn to_tridiagonal(&self) -> Result<SymTridiagonal<f64>, PrecisionError> {
        if self.symmetry != Symmetry::RealSymmetricTridiagonal {
            return Err(PrecisionError::Contract {
                expected: "real-symmetric-tridiagonal",
                detail: format!("matrix tagged {}", self.symmetry.name()),
            });
        }
        let n = self.dim();
        let d = (0..n).map(|i| self.data[(i, i)].re).collect();
        let e = (1..n).map(|i| self.data[(i, i - 1)].re).collect();
        SymTridiagonal::new(d, e)
    }

    fn real_part(&self) -> Option<DMatrix<f64>> {
        if self.data.iter().all(|z| z.im == 0.0) {
            Some(self.data.map(|z| z.re))
        } else {
            None
        }
    }
}

/// How `e^{-ihdt}v` is evaluated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ExpmRoute {
    /// Spectral decomposition `V e^{-iΛdt} V†`.
    #[default]
    Eigen,
    /// Truncated Taylor series on `s` substeps with `‖h dt‖/s ≤ 1/2`,
    /// terms added until they drop below `2^-60` of the partial sum.
    Taylor,
}

fn require_hermitian(h: &Matrix) -> Result<(), PrecisionError> {
    if h.symmetry.is_hermitian() {
        Ok(())
    } else {
        Err(PrecisionError::Contract {
            expected: "hermitian",
            detail: "matrix tagged general".into(),
        })
    }
}

/// `e^{-i h dt}` as a dense unitary, via the eigendecomposition of `h`.
pub fn expm_unitary(h: &Matrix, dt: f64) -> Result<DMatrix<Complex64>, PrecisionError> {
    require_hermitian(h)?;
    let n = h.dim();
    if let Some(re) = h.real_part() {
        let eig = re.symmetric_eigen();
        let v = eig.eigenvectors.map(|x| Complex64::new(x, 0.0));
        let phases = DVector::from_iterator(
            n,
            eig.eigenvalues.iter().map(|&l| Complex64::from_polar(1.0, -l * dt)),
        );
        let mut vd = v.clone();
        for (j, mut col) in vd.column_iter_mut().enumerate() {
            col *= phases[j];
        }
        Ok(vd * v.transpose())
    } else {
        let eig = h.data.clone().symmetric_eigen();
        let v = eig.eigenvectors;
        let mut vd = v.clone();
        for (j, mut col) in vd.column_iter_mut().enumerate() {
            col *= Complex64::from_polar(1.0, -eig.eigenvalues[j] * dt);
        }
        Ok(vd * v.adjoint())
    }
}

/// `e^{-i h dt} v`.
pub fn expm_action(
    h: &Matrix,
    dt: f64,
    v: &DVector<Complex64>,
    route: ExpmRoute,
) -> Result<DVector<Complex64>, PrecisionError> {
    require_hermitian(h)?;
    match route {
        ExpmRoute::Eigen => Ok(expm_unitary(h, dt)? * v),
        ExpmRoute::Taylor => Ok(taylor_action(&h.data, dt, v)),
    }
}

fn taylor_action(h: &DMatrix<Complex64>, dt: f64, v: &DVector<Complex64>) -> DVector<Complex64> {
    let norm1 = (0..h.ncols())
        .map(|j| h.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let total = norm1 * dt.abs();
    let steps = (2.0 * total).ceil().max(1.0) as usize;
    let factor = Complex64::new(0.0, -dt / steps as f64);
    let tol = 2f64.powi(-60);
    let mut w = v.clone();
    for _ in 0..steps {
        let mut term = w.clone();
        let mut sum = w.clone();
        for k in 1..=80 {
            term = (h * &term) * (factor / k as f64);
            sum += &term;
            if term.norm() <= tol * sum.norm() {
                break;
            }
        }
        w = sum;
    }
    w
}
