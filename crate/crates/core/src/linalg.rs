//! Small linear-algebra kernels shared by the propagators and the spectral solver.

use num_complex::Complex64;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

/// Field values a real operator can act on: `f64` or `Complex64`.
pub trait Scalar:
    Copy
    + Default
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Neg<Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
    + AddAssign
    + std::fmt::Debug
{
    fn norm_sqr(self) -> f64;
}

impl Scalar for f64 {
    fn norm_sqr(self) -> f64 {
        self * self
    }
}

impl Scalar for Complex64 {
    fn norm_sqr(self) -> f64 {
        Complex64::norm_sqr(&self)
    }
}

/// Tridiagonal matrix stored by bands. `lower[i]` couples row `i` to `i-1`
/// (so `lower[0]` is unused), `upper[i]` couples row `i` to `i+1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn apply<T: Scalar>(&self, x: &[T], out: &mut [T]) {
        let n = self.len();
        for i in 0..n {
            let mut acc = x[i] * self.diag[i];
            if i > 0 {
                acc += x[i - 1] * self.lower[i];
            }
            if i + 1 < n {
                acc += x[i + 1] * self.upper[i];
            }
            out[i] = acc;
        }
    }

    /// `a I + s M`.
    pub fn shifted(&self, a: f64, s: f64) -> Self {
        Self {
            lower: self.lower.iter().map(|x| s * x).collect(),
            diag: self.diag.iter().map(|x| a + s * x).collect(),
            upper: self.upper.iter().map(|x| s * x).collect(),
        }
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let n = self.len();
        nalgebra::DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                self.diag[i]
            } else if j + 1 == i {
                self.lower[i]
            } else if i + 1 == j {
                self.upper[i]
            } else {
                0.0
            }
        })
    }
}

/// LU factors of a tridiagonal matrix for repeated solves (Thomas algorithm).
#[derive(Debug, Clone)]
pub struct TridiagonalLu {
    lower: Vec<f64>,
    inv_pivot: Vec<f64>,
    upper: Vec<f64>,
}

impl TridiagonalLu {
    /// Factors `m`; returns `None` on a vanishing pivot.
    pub fn new(m: &Tridiagonal) -> Option<Self> {
        let n = m.len();
        let mut inv_pivot = vec![0.0; n];
        let mut lower = vec![0.0; n];
        let mut pivot = m.diag[0];
        for i in 0..n {
            if i > 0 {
                lower[i] = m.lower[i] * inv_pivot[i - 1];
                pivot = m.diag[i] - lower[i] * m.upper[i - 1];
            }
            if pivot.abs() < f64::MIN_POSITIVE || !pivot.is_finite() {
                return None;
            }
            inv_pivot[i] = 1.0 / pivot;
        }
        Some(Self { lower, inv_pivot, upper: m.upper.clone() })
    }

    pub fn solve_in_place<T: Scalar>(&self, x: &mut [T]) {
        let n = x.len();
        for i in 1..n {
            let prev = x[i - 1];
            x[i] = x[i] - prev * self.lower[i];
        }
        x[n - 1] = x[n - 1] * self.inv_pivot[n - 1];
        for i in (0..n - 1).rev() {
            let next = x[i + 1];
            x[i] = (x[i] - next * self.upper[i]) * self.inv_pivot[i];
        }
    }
}

/// Dense real matrix acting on real or complex vectors.
pub fn dense_apply<T: Scalar>(m: &nalgebra::DMatrix<f64>, x: &[T], out: &mut [T]) {
    let n = m.nrows();
    for (i, o) in out.iter_mut().enumerate().take(n) {
        let mut acc = T::default();
        for (j, &xj) in x.iter().enumerate() {
            acc += xj * m[(i, j)];
        }
        *o = acc;
    }
}

/// Number of eigenvalues of a symmetric tridiagonal matrix below `x`
/// (Sturm sequence count).
pub fn sturm_count(diag: &[f64], offdiag_sq: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..diag.len() {
        let e2 = if i == 0 { 0.0 } else { offdiag_sq[i - 1] };
        q = diag[i] - x - if i == 0 { 0.0 } else { e2 / q };
        if q == 0.0 {
            q = -f64::EPSILON * (diag[i].abs() + x.abs() + 1.0);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// `j`-th smallest eigenvalue (0-based) of a symmetric tridiagonal matrix by bisection.
pub fn tridiagonal_eigenvalue(diag: &[f64], offdiag_sq: &[f64], j: usize) -> f64 {
    let n = diag.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let mut r = 0.0;
        if i > 0 {
            r += offdiag_sq[i - 1].sqrt();
        }
        if i + 1 < n {
            r += offdiag_sq[i].sqrt();
        }
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(diag, offdiag_sq, mid) > j {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector, SymmetricEigen};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_tri(n: usize, rng: &mut ChaCha8Rng) -> Tridiagonal {
        Tridiagonal {
            lower: (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            diag: (0..n).map(|_| rng.gen_range(3.0..4.0)).collect(),
            upper: (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        }
    }

    #[test]
    fn thomas_matches_dense_lu() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random_tri(40, &mut rng);
        let b: Vec<f64> = (0..40).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut x = b.clone();
        TridiagonalLu::new(&m).unwrap().solve_in_place(&mut x);
        let dense = m.to_dense().lu().solve(&DVector::from_vec(b)).unwrap();
        for (a, e) in x.iter().zip(dense.iter()) {
            assert!((a - e).abs() < 1e-13);
        }
    }

    #[test]
    fn complex_solve_is_componentwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = random_tri(17, &mut rng);
        let re: Vec<f64> = (0..17).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let im: Vec<f64> = (0..17).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let lu = TridiagonalLu::new(&m).unwrap();
        let mut z: Vec<Complex64> = re.iter().zip(&im).map(|(&a, &b)| Complex64::new(a, b)).collect();
        let (mut a, mut b) = (re.clone(), im.clone());
        lu.solve_in_place(&mut z);
        lu.solve_in_place(&mut a);
        lu.solve_in_place(&mut b);
        for i in 0..17 {
            assert!((z[i].re - a[i]).abs() < 1e-14 && (z[i].im - b[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn sturm_bisection_matches_dense_eigenvalues() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 30;
        let diag: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let off: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let dense = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                diag[i]
            } else if i + 1 == j {
                off[i]
            } else if j + 1 == i {
                off[j]
            } else {
                0.0
            }
        });
        let mut eig: Vec<f64> = SymmetricEigen::new(dense).eigenvalues.iter().copied().collect();
        eig.sort_by(f64::total_cmp);
        let off2: Vec<f64> = off.iter().map(|x| x * x).collect();
        for j in [0, 1, 7, n - 1] {
            assert!((tridiagonal_eigenvalue(&diag, &off2, j) - eig[j]).abs() < 1e-12);
        }
    }
}
