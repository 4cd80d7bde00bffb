//! Dense Hermitian helpers shared by every module.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use num_traits::Zero;

use crate::scalar::{CMat, CVec, Real};

/// Eigen-decomposition of a Hermitian matrix with eigenvalues in ascending order.
#[derive(Debug, Clone)]
pub struct HermitianEig<T: Real> {
    pub values: DVector<T>,
    pub vectors: CMat<T>,
}

impl<T: Real> HermitianEig<T> {
    pub fn new(m: &CMat<T>) -> Self {
        let eig = hermitian_part(m).symmetric_eigen();
        let n = eig.eigenvalues.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[a]
                .partial_cmp(&eig.eigenvalues[b])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
        let mut vectors = CMat::<T>::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            vectors.set_column(dst, &eig.eigenvectors.column(src));
        }
        Self { values, vectors }
    }

    pub fn min(&self) -> T {
        self.values[0]
    }

    pub fn max(&self) -> T {
        self.values[self.values.len() - 1]
    }

    /// Rebuilds `U f(Λ) U^H`.
    pub fn map(&self, f: impl Fn(T) -> T) -> CMat<T> {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let s = f(self.values[j]);
            scaled.column_mut(j).scale_mut(s);
        }
        hermitian_part(&(scaled * self.vectors.adjoint()))
    }

    /// Number of eigenvalues above `rel * max(|λ|)`.
    pub fn rank(&self, rel: T) -> usize {
        let top = self
            .values
            .iter()
            .fold(T::zero(), |acc, v| if v.abs() > acc { v.abs() } else { acc });
        if top <= T::zero() {
            return 0;
        }
        self.values.iter().filter(|v| **v > rel * top).count()
    }
}

/// Same decomposition for real symmetric matrices.
#[derive(Debug, Clone)]
pub struct SymmetricEig<T: Real> {
    pub values: DVector<T>,
    pub vectors: DMatrix<T>,
}

impl<T: Real> SymmetricEig<T> {
    pub fn new(m: &DMatrix<T>) -> Self {
        let sym = (m + m.transpose()) * T::lit(0.5);
        let eig = sym.symmetric_eigen();
        let n = eig.eigenvalues.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[a]
                .partial_cmp(&eig.eigenvalues[b])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
        let mut vectors = DMatrix::<T>::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            vectors.set_column(dst, &eig.eigenvectors.column(src));
        }
        Self { values, vectors }
    }

    pub fn min(&self) -> T {
        self.values[0]
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> DMatrix<T> {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let s = f(self.values[j]);
            scaled.column_mut(j).scale_mut(s);
        }
        let out = scaled * self.vectors.transpose();
        (&out + out.transpose()) * T::lit(0.5)
    }
}

/// `(M + M^H) / 2`.
pub fn hermitian_part<T: Real>(m: &CMat<T>) -> CMat<T> {
    let half = Complex::new(T::lit(0.5), T::zero());
    (m + m.adjoint()) * half
}

pub fn trace_re<T: Real>(m: &CMat<T>) -> T {
    (0..m.nrows().min(m.ncols())).fold(T::zero(), |acc, i| acc + m[(i, i)].re)
}

/// Singularity floor shared by both CRB metrics: `1e-9 * trace / dim`.
pub fn singularity_floor<T: Real>(trace: T, dim: usize) -> T {
    T::lit(1e-9) * trace.abs() / T::from_usize_lossy(dim.max(1))
}

/// Inverse of a Hermitian matrix via its eigen-decomposition, `None` when the
/// smallest eigenvalue does not clear the singularity floor.
pub fn hermitian_inverse<T: Real>(m: &CMat<T>) -> Option<CMat<T>> {
    let eig = HermitianEig::new(m);
    let floor = singularity_floor(trace_re(m), m.nrows());
    if eig.min() <= floor || eig.min() <= T::zero() {
        return None;
    }
    Some(eig.map(|v| T::one() / v))
}

pub fn symmetric_inverse<T: Real>(m: &DMatrix<T>) -> Option<DMatrix<T>> {
    let eig = SymmetricEig::new(m);
    let floor = singularity_floor(m.trace(), m.nrows());
    if eig.min() <= floor || eig.min() <= T::zero() {
        return None;
    }
    Some(eig.map(|v| T::one() / v))
}

/// A factor `V` with `V V^H = M` for a PSD `M`; eigenvalues below zero are
/// clipped so rank-deficient inputs still factor.
pub fn psd_sqrt<T: Real>(m: &CMat<T>) -> CMat<T> {
    let eig = HermitianEig::new(m);
    let n = m.nrows();
    let mut v = eig.vectors.clone();
    for j in 0..n {
        let s = eig.values[j].max(T::zero()).sqrt();
        v.column_mut(j).scale_mut(s);
    }
    v
}

/// Projects a Hermitian matrix onto the PSD cone.
pub fn psd_project<T: Real>(m: &CMat<T>) -> CMat<T> {
    HermitianEig::new(m).map(|v| v.max(T::zero()))
}

/// `v^H M v` (real part).
pub fn quad_form<T: Real>(m: &CMat<T>, v: &CVec<T>) -> T {
    v.dotc(&(m * v)).re
}

pub fn outer<T: Real>(a: &CVec<T>, b: &CVec<T>) -> CMat<T> {
    a * b.adjoint()
}

/// Frobenius norm of a complex matrix.
pub fn fro<T: Real>(m: &CMat<T>) -> T {
    m.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt()
}

pub fn identity<T: Real>(n: usize) -> CMat<T> {
    CMat::<T>::identity(n, n)
}

pub fn is_zero<T: Real>(m: &CMat<T>) -> bool {
    m.iter().all(|z| z.is_zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn sample() -> CMat<f64> {
        CMat::from_row_slice(
            3,
            3,
            &[
                Complex64::new(4.0, 0.0),
                Complex64::new(1.0, 1.0),
                Complex64::new(0.0, -0.5),
                Complex64::new(1.0, -1.0),
                Complex64::new(3.0, 0.0),
                Complex64::new(0.2, 0.0),
                Complex64::new(0.0, 0.5),
                Complex64::new(0.2, 0.0),
                Complex64::new(2.0, 0.0),
            ],
        )
    }

    #[test]
    fn eig_is_ascending_and_reconstructs() {
        let m = sample();
        let eig = HermitianEig::new(&m);
        assert!(eig.values[0] <= eig.values[1] && eig.values[1] <= eig.values[2]);
        let back = eig.map(|v| v);
        assert!(fro(&(back - &m)) < 1e-12);
    }

    #[test]
    fn inverse_matches_identity() {
        let m = sample();
        let inv = hermitian_inverse(&m).unwrap();
        assert!(fro(&(&m * inv - identity::<f64>(3))) < 1e-12);
    }

    #[test]
    fn singular_inverse_is_none() {
        let v = CVec::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)]);
        assert!(hermitian_inverse(&outer(&v, &v)).is_none());
    }

    #[test]
    fn sqrt_factor_of_rank_one() {
        let v = CVec::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 2.0)]);
        let m = outer(&v, &v);
        let f = psd_sqrt(&m);
        assert!(fro(&(&f * f.adjoint() - m)) < 1e-12);
    }
}
