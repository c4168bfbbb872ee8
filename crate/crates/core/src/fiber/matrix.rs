//! Full matrix algebras `M_d(C)` as fibers.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// An element of `M_d(C)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixFiberElement {
    pub entries: CMatrix,
}

impl MatrixFiberElement {
    pub fn new(entries: CMatrix) -> Result<Self> {
        if entries.nrows() != entries.ncols() || entries.nrows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "matrix fiber element must be square and non-empty, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        Ok(MatrixFiberElement { entries })
    }

    pub fn identity(d: usize) -> Self {
        MatrixFiberElement {
            entries: CMatrix::identity(d, d),
        }
    }

    pub fn zeros(d: usize) -> Self {
        MatrixFiberElement {
            entries: CMatrix::zeros(d, d),
        }
    }

    /// Matrix unit `E_ij`.
    pub fn unit(d: usize, i: usize, j: usize) -> Self {
        let mut m = CMatrix::zeros(d, d);
        m[(i, j)] = Complex64::new(1.0, 0.0);
        MatrixFiberElement { entries: m }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let d = diag.len();
        MatrixFiberElement {
            entries: CMatrix::from_fn(d, d, |i, j| {
                if i == j {
                    Complex64::new(diag[i], 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn norm(&self) -> f64 {
        spectral_norm(&self.entries)
    }

    pub fn adjoint(&self) -> Self {
        MatrixFiberElement {
            entries: self.entries.adjoint(),
        }
    }

    pub fn is_positive(&self, tol: f64) -> bool {
        hermitian_residual(&self.entries) <= tol && min_eigenvalue(&self.entries) >= -tol
    }
}

pub fn spectral_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().max()
}

/// Sum of singular values: the dual norm of the spectral norm under the
/// trace pairing.
pub fn trace_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().sum()
}

/// Largest entry modulus of `m − m†`.
pub fn hermitian_residual(m: &CMatrix) -> f64 {
    (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Smallest eigenvalue of the Hermitian part of `m`.
pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    hermitian_part(m).symmetric_eigenvalues().min()
}

/// Column-stacking vectorization: entry `(i, j)` lands at `i + j·d`.
pub fn vec_columns(m: &CMatrix) -> CVector {
    CVector::from_column_slice(m.as_slice())
}

pub fn unvec_columns(v: &CVector, d: usize) -> CMatrix {
    CMatrix::from_column_slice(d, d, v.as_slice())
}

/// Kronecker product `a ⊗ b`, indexed so that `(a⊗b)[(i·d+k),(j·d+l)] = a_ij b_kl`.
pub fn tensor(a: &MatrixFiberElement, b: &MatrixFiberElement) -> Result<MatrixFiberElement> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "tensor of {}x{} and {}x{}",
            a.dim(),
            a.dim(),
            b.dim(),
            b.dim()
        )));
    }
    Ok(MatrixFiberElement {
        entries: a.entries.kronecker(&b.entries),
    })
}

/// Normalized partial trace over the second tensor factor,
/// `E(X)_ij = (1/d)·Σ_k X_{(i,k),(j,k)}`; `E(a⊗b) = τ(b)·a` with `τ` the
/// normalized trace.
pub fn conditional_expectation(x: &MatrixFiberElement) -> Result<MatrixFiberElement> {
    let n = x.dim();
    let d = (n as f64).sqrt().round() as usize;
    if d * d != n {
        return Err(Error::DimensionMismatch(format!(
            "conditional expectation needs a square dimension, got {n}"
        )));
    }
    let scale = 1.0 / d as f64;
    let m = CMatrix::from_fn(d, d, |i, j| {
        (0..d)
            .map(|k| x.entries[(i * d + k, j * d + k)])
            .sum::<Complex64>()
            * scale
    });
    Ok(MatrixFiberElement { entries: m })
}

/// `e^{βH}` for Hermitian `H` through its eigendecomposition.
pub fn matrix_exp(h: &MatrixFiberElement, beta: f64) -> Result<MatrixFiberElement> {
    let res = hermitian_residual(&h.entries);
    if res > 1e-12 {
        return Err(Error::NotHermitian(res));
    }
    let eig = hermitian_part(&h.entries).symmetric_eigen();
    let u = &eig.eigenvectors;
    let d = h.dim();
    let diag = CMatrix::from_fn(d, d, |i, j| {
        if i == j {
            Complex64::new((beta * eig.eigenvalues[i]).exp(), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let out = u * diag * u.adjoint();
    Ok(MatrixFiberElement {
        entries: hermitian_part(&out),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sample(d: usize, seed: u64) -> CMatrix {
        // Small deterministic LCG; these tests only need generic matrices.
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        CMatrix::from_fn(d, d, |_, _| c(next(), next()))
    }

    #[test]
    fn norms_of_simple_matrices() {
        assert!((MatrixFiberElement::identity(3).norm() - 1.0).abs() < 1e-15);
        let m = MatrixFiberElement::new(CMatrix::from_row_slice(
            2,
            2,
            &[c(3.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, -4.0)],
        ))
        .unwrap();
        assert!((m.norm() - 4.0).abs() < 1e-14);
        assert!((trace_norm(&m.entries) - 7.0).abs() < 1e-14);
    }

    #[test]
    fn positivity() {
        let x = sample(4, 3);
        let g = MatrixFiberElement::new(x.adjoint() * &x).unwrap();
        assert!(g.is_positive(1e-10));
        assert!(!MatrixFiberElement::from_real_diagonal(&[1.0, -0.5]).is_positive(1e-6));
    }

    #[test]
    fn tensor_units_and_norms() {
        let e = MatrixFiberElement::identity(3);
        assert_eq!(tensor(&e, &e).unwrap(), MatrixFiberElement::identity(9));
        let a = MatrixFiberElement::new(sample(3, 1)).unwrap();
        let b = MatrixFiberElement::new(sample(3, 2)).unwrap();
        let ab = tensor(&a, &b).unwrap();
        assert!((ab.norm() - a.norm() * b.norm()).abs() < 1e-12);
        assert!(tensor(&a, &MatrixFiberElement::identity(2)).is_err());
    }

    #[test]
    fn conditional_expectation_of_product_tensor() {
        let a = MatrixFiberElement::new(sample(3, 5)).unwrap();
        let b = MatrixFiberElement::new(sample(3, 6)).unwrap();
        let got = conditional_expectation(&tensor(&a, &b).unwrap()).unwrap();
        let want = a.entries.scale(1.0) * (b.entries.trace() / 3.0);
        assert!((got.entries - want).norm() < 1e-14);
        let e = MatrixFiberElement::identity(2);
        assert_eq!(conditional_expectation(&tensor(&e, &e).unwrap()).unwrap(), e);
        assert!(conditional_expectation(&MatrixFiberElement::identity(3)).is_err());
    }

    #[test]
    fn exp_group_law_and_zero() {
        let x = sample(4, 9);
        let h = MatrixFiberElement::new(hermitian_part(&x)).unwrap();
        assert!((matrix_exp(&h, 0.0).unwrap().entries - CMatrix::identity(4, 4)).norm() < 1e-14);
        let p = matrix_exp(&h, 0.7).unwrap().entries * matrix_exp(&h, -0.7).unwrap().entries;
        assert!((p - CMatrix::identity(4, 4)).norm() < 1e-10);
        let nh = MatrixFiberElement::new(x).unwrap();
        assert!(matches!(matrix_exp(&nh, 1.0), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn swap_block_exponential_spectrum() {
        let mut h = CMatrix::zeros(4, 4);
        h[(1, 2)] = c(1.0, 0.0);
        h[(2, 1)] = c(1.0, 0.0);
        let v = matrix_exp(&MatrixFiberElement::new(h).unwrap(), 1.0).unwrap();
        let mut ev: Vec<f64> = v.entries.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let e = std::f64::consts::E;
        let want = [1.0 / e, 1.0, 1.0, e];
        for (g, w) in ev.iter().zip(want) {
            assert!((g - w).abs() < 1e-12, "{ev:?}");
        }
    }

    #[test]
    fn vec_roundtrip_is_column_major() {
        let m = sample(3, 4);
        let v = vec_columns(&m);
        assert_eq!(v[1], m[(1, 0)]);
        assert_eq!(v[3], m[(0, 1)]);
        assert_eq!(unvec_columns(&v, 3), m);
    }
}
