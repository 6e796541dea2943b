//! Symmetric tridiagonal eigensolver: Sturm-sequence bisection for the
//! eigenvalues, inverse iteration for the vectors.
//!
//! All thresholds derive from the mantissa width `p` of the entries: with
//! `u = 2^-p` and `‖M‖` the row-sum norm,
//! * off-diagonals with `|e| ≤ u‖M‖` split the matrix,
//! * bisection stops once the bracket is below `u(|lo| + |hi|) + u²‖M‖`
//!   (or stops shrinking), with a hard cap of `2p + 64` steps,
//! * vectors whose eigenvalues lie within `2^-10 ‖M‖` are reorthogonalized
//!   against each other,
//! * inverse iteration accepts once `‖Mv − λv‖ ≤ 2^{-p+8}‖M‖`.

use super::{PrecisionError, Real};

#[derive(Clone, Debug, PartialEq)]
pub struct SymTridiagonal<R> {
    diag: Vec<R>,
    off: Vec<R>,
}

impl<R: Real> SymTridiagonal<R> {
    pub fn new(diag: Vec<R>, off: Vec<R>) -> Result<Self, PrecisionError> {
        if diag.is_empty() {
            return Err(PrecisionError::Empty);
        }
        if off.len() + 1 != diag.len() {
            return Err(PrecisionError::Contract {
                expected: "real-symmetric-tridiagonal",
                detail: format!("{} diagonal but {} off-diagonal entries", diag.len(), off.len()),
            });
        }
        if diag.iter().chain(&off).any(|x| !x.is_finite()) {
            return Err(PrecisionError::Contract {
                expected: "real-symmetric-tridiagonal",
                detail: "non-finite entry".into(),
            });
        }
        Ok(SymTridiagonal { diag, off })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[R] {
        &self.diag
    }

    pub fn off(&self) -> &[R] {
        &self.off
    }

    pub fn bits(&self) -> u32 {
        self.diag[0].bits()
    }

    /// Row-sum norm, an upper bound on the spectral norm.
    pub fn norm(&self) -> R {
        let n = self.dim();
        let mut best = R::zero(self.bits());
        for i in 0..n {
            let mut s = self.diag[i].abs();
            if i > 0 {
                s = s + self.off[i - 1].abs();
            }
            if i + 1 < n {
                s = s + self.off[i].abs();
            }
            best = best.max(s);
        }
        best
    }

    pub fn matvec(&self, x: &[R]) -> Vec<R> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i].clone() * &x[i];
                if i > 0 {
                    s = s + self.off[i - 1].clone() * &x[i - 1];
                }
                if i + 1 < n {
                    s = s + self.off[i].clone() * &x[i + 1];
                }
                s
            })
            .collect()
    }
}

/// Eigenpairs in ascending eigenvalue order; `vectors[j]` belongs to `values[j]`.
#[derive(Clone, Debug)]
pub struct TridiagEigen<R> {
    pub values: Vec<R>,
    pub vectors: Vec<Vec<R>>,
}

/// Full eigendecomposition at the precision carried by the entries.
pub fn tridiag_eigensolve<R: Real>(m: &SymTridiagonal<R>) -> Result<TridiagEigen<R>, PrecisionError> {
    let n = m.dim();
    let bits = m.bits();
    let norm = m.norm();
    if norm.is_zero() {
        let vectors = (0..n).map(|j| unit(n, j, bits)).collect();
        return Ok(TridiagEigen {
            values: vec![R::zero(bits); n],
            vectors,
        });
    }
    let u = R::unit_roundoff(bits);
    let split = u.clone() * &norm;

    let mut pairs: Vec<(R, Vec<R>)> = Vec::with_capacity(n);
    let mut start = 0;
    for end in 1..=n {
        if end < n && m.off[end - 1].abs() > split {
            continue;
        }
        let block = Block {
            d: &m.diag[start..end],
            e: &m.off[start..end - 1],
        };
        for (lambda, v) in block.solve(&norm, start)? {
            let mut full = vec![R::zero(bits); n];
            for (k, x) in v.into_iter().enumerate() {
                full[start + k] = x;
            }
            pairs.push((lambda, full));
        }
        start = end;
    }
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite eigenvalues"));
    let (values, vectors) = pairs.into_iter().unzip();
    Ok(TridiagEigen { values, vectors })
}

fn unit<R: Real>(n: usize, j: usize, bits: u32) -> Vec<R> {
    let mut v = vec![R::zero(bits); n];
    v[j] = R::one(bits);
    v
}

struct Block<'a, R> {
    d: &'a [R],
    e: &'a [R],
}

impl<R: Real> Block<'_, R> {
    fn dim(&self) -> usize {
        self.d.len()
    }

    fn bits(&self) -> u32 {
        self.d[0].bits()
    }

    /// Number of eigenvalues strictly below `x`.
    fn sturm_count(&self, e2: &[R], x: &R, pivmin: &R) -> usize {
        let mut count = 0;
        let mut q = R::zero(self.bits());
        for i in 0..self.dim() {
            q = if i == 0 {
                self.d[0].clone() - x
            } else {
                self.d[i].clone() - x - e2[i - 1].clone() / &q
            };
            if q.abs() <= *pivmin {
                q = -pivmin.clone();
            }
            if q < R::zero(self.bits()) {
                count += 1;
            }
        }
        count
    }

    fn solve(&self, norm: &R, offset: usize) -> Result<Vec<(R, Vec<R>)>, PrecisionError> {
        let n = self.dim();
        let bits = self.bits();
        if n == 1 {
            return Ok(vec![(self.d[0].clone(), vec![R::one(bits)])]);
        }
        let u = R::unit_roundoff(bits);
        let pivmin = u.clone() * &u * norm;
        let e2: Vec<R> = self.e.iter().map(|x| x.clone() * x).collect();

        // Gershgorin bracket, padded so both ends are strict bounds.
        let pad = u.clone().mul_pow2(4) * norm + &pivmin;
        let mut glo = self.d[0].clone();
        let mut ghi = self.d[0].clone();
        for i in 0..n {
            let mut r = R::zero(bits);
            if i > 0 {
                r = r + self.e[i - 1].abs();
            }
            if i + 1 < n {
                r = r + self.e[i].abs();
            }
            let lo = self.d[i].clone() - &r;
            let hi = self.d[i].clone() + &r;
            if lo < glo {
                glo = lo;
            }
            if hi > ghi {
                ghi = hi;
            }
        }
        glo = glo - &pad;
        ghi = ghi + &pad;

        let cap = 2 * bits as usize + 64;
        let mut values = Vec::with_capacity(n);
        for j in 0..n {
            let (mut lo, mut hi) = (glo.clone(), ghi.clone());
            let mut converged = false;
            for _ in 0..cap {
                let width = hi.clone() - &lo;
                let tol = u.clone() * (lo.abs() + hi.abs()) + &pivmin;
                if width <= tol {
                    converged = true;
                    break;
                }
                let mid = (lo.clone() + &hi).mul_pow2(-1);
                if !(mid > lo && mid < hi) {
                    converged = true;
                    break;
                }
                if self.sturm_count(&e2, &mid, &pivmin) > j {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            if !converged {
                return Err(PrecisionError::NoConvergence {
                    index: offset + j,
                    cap,
                });
            }
            values.push((lo + &hi).mul_pow2(-1));
        }

        let accept = u.clone().mul_pow2(8) * norm;
        let cluster = norm.clone().mul_pow2(-10);
        let mut out: Vec<(R, Vec<R>)> = Vec::with_capacity(n);
        for (j, lambda) in values.into_iter().enumerate() {
            let group: Vec<usize> = (0..j)
                .filter(|&k| (out[k].0.clone() - &lambda).abs() <= cluster)
                .collect();
            let v = self.inverse_iteration(&lambda, norm, &accept, j, &group, &out);
            out.push((lambda, v));
        }
        Ok(out)
    }

    fn inverse_iteration(
        &self,
        lambda: &R,
        norm: &R,
        accept: &R,
        seed: usize,
        group: &[usize],
        done: &[(R, Vec<R>)],
    ) -> Vec<R> {
        let n = self.dim();
        let bits = self.bits();
        let lu = ShiftedLu::new(self.d, self.e, lambda, &(R::unit_roundoff(bits) * norm));

        // Deterministic, irregular start vector so that no symmetry class of
        // eigenvectors is missed.
        let mut state = 0x9E37_79B9_7F4A_7C15u64 ^ (seed as u64).wrapping_mul(0xD1B5_4A32_D192_ED03);
        let mut x: Vec<R> = (0..n)
            .map(|_| {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                R::from_f64(0.5 + (state >> 11) as f64 / (1u64 << 53) as f64, bits)
            })
            .collect();
        normalize(&mut x);

        for iter in 0..8 {
            x = lu.solve(x);
            for _ in 0..2 {
                for &k in group {
                    let c = dot(&done[k].1, &x);
                    for (xi, vi) in x.iter_mut().zip(&done[k].1) {
                        *xi = xi.clone() - c.clone() * vi;
                    }
                }
            }
            normalize(&mut x);
            if iter >= 1 {
                let mx = Block::matvec(self, &x);
                let mut r2 = R::zero(bits);
                for (a, b) in mx.iter().zip(&x) {
                    let r = a.clone() - lambda.clone() * b;
                    r2 = r2 + r.clone() * &r;
                }
                if r2.sqrt() <= *accept {
                    break;
                }
            }
        }
        x
    }

    fn matvec(&self, x: &[R]) -> Vec<R> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut s = self.d[i].clone() * &x[i];
                if i > 0 {
                    s = s + self.e[i - 1].clone() * &x[i - 1];
                }
                if i + 1 < n {
                    s = s + self.e[i].clone() * &x[i + 1];
                }
                s
            })
            .collect()
    }
}

fn dot<R: Real>(a: &[R], b: &[R]) -> R {
    let mut s = R::zero(a[0].bits());
    for (x, y) in a.iter().zip(b) {
        s = s + x.clone() * y;
    }
    s
}

fn normalize<R: Real>(x: &mut [R]) {
    let nrm = dot(x, x).sqrt();
    for xi in x.iter_mut() {
        *xi = xi.clone() / &nrm;
    }
}

/// LU factorization of `T − λI` with partial pivoting (the swapped rows
/// produce a second superdiagonal). Zero pivots are replaced by `tiny`.
struct ShiftedLu<R> {
    u0: Vec<R>,
    u1: Vec<R>,
    u2: Vec<R>,
    mult: Vec<R>,
    swapped: Vec<bool>,
}

impl<R: Real> ShiftedLu<R> {
    fn new(d: &[R], e: &[R], lambda: &R, tiny: &R) -> Self {
        let n = d.len();
        let bits = d[0].bits();
        let zero = R::zero(bits);
        let mut u0 = Vec::with_capacity(n);
        let mut u1 = Vec::with_capacity(n);
        let mut u2 = Vec::with_capacity(n);
        let mut mult = Vec::with_capacity(n);
        let mut swapped = Vec::with_capacity(n);
        let mut cur_d = d[0].clone() - lambda;
        let mut cur_s = if n > 1 { e[0].clone() } else { zero.clone() };
        for k in 0..n.saturating_sub(1) {
            let sub = e[k].clone();
            let nd = d[k + 1].clone() - lambda;
            let ns = if k + 2 < n { e[k + 1].clone() } else { zero.clone() };
            if sub.abs() > cur_d.abs() {
                let m = cur_d.clone() / &sub;
                let next_d = cur_s.clone() - m.clone() * &nd;
                let next_s = -(m.clone() * &ns);
                u0.push(sub);
                u1.push(nd);
                u2.push(ns);
                mult.push(m);
                swapped.push(true);
                cur_d = next_d;
                cur_s = next_s;
            } else {
                if cur_d.is_zero() {
                    cur_d = tiny.clone();
                }
                let m = sub / &cur_d;
                let next_d = nd - m.clone() * &cur_s;
                u0.push(cur_d);
                u1.push(cur_s);
                u2.push(zero.clone());
                mult.push(m);
                swapped.push(false);
                cur_d = next_d;
                cur_s = ns;
            }
        }
        if cur_d.abs() < *tiny {
            cur_d = tiny.clone();
        }
        u0.push(cur_d);
        u1.push(zero.clone());
        u2.push(zero);
        for p in u0.iter_mut() {
            if p.is_zero() {
                *p = tiny.clone();
            }
        }
        ShiftedLu {
            u0,
            u1,
            u2,
            mult,
            swapped,
        }
    }

    fn solve(&self, mut b: Vec<R>) -> Vec<R> {
        let n = b.len();
        for k in 0..n.saturating_sub(1) {
            if self.swapped[k] {
                let top = b[k + 1].clone();
                let rest = b[k].clone() - self.mult[k].clone() * &top;
                b[k] = top;
                b[k + 1] = rest;
            } else {
                let t = self.mult[k].clone() * &b[k];
                b[k + 1] = b[k + 1].clone() - t;
            }
        }
        let mut x = b;
        for k in (0..n).rev() {
            let mut s = x[k].clone();
            if k + 1 < n {
                s = s - self.u1[k].clone() * &x[k + 1];
            }
            if k + 2 < n {
                s = s - self.u2[k].clone() * &x[k + 2];
            }
            x[k] = s / &self.u0[k];
        }
        x
    }
}
