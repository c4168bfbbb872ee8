//! The C*-algebras `X(ω)` sitting over each atom.

pub mod matrix;
pub mod trigpoly;

use std::fmt;

use num_complex::Complex64;

pub use matrix::{
    conditional_expectation, matrix_exp, tensor, CMatrix, CVector, MatrixFiberElement,
};
pub use trigpoly::TrigPolyFiberElement;

use crate::error::{Error, Result};

/// Which algebra a (homogeneous) bundle carries over every atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FiberKind {
    /// `M_d(C)`.
    Matrix { dim: usize },
    /// Trigonometric polynomials of degree at most `max_degree`.
    TrigPoly { max_degree: usize },
}

impl fmt::Display for FiberKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FiberKind::Matrix { dim } => write!(f, "matrix({dim})"),
            FiberKind::TrigPoly { max_degree } => write!(f, "trigpoly({max_degree})"),
        }
    }
}

impl FiberKind {
    pub fn matrix(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("matrix fiber dimension must be positive".into()));
        }
        Ok(FiberKind::Matrix { dim })
    }

    pub fn trigpoly(max_degree: usize) -> Result<Self> {
        if max_degree == 0 {
            return Err(Error::Domain("trigpoly degree budget must be positive".into()));
        }
        Ok(FiberKind::TrigPoly { max_degree })
    }

    pub fn unit(&self) -> FiberElement {
        match *self {
            FiberKind::Matrix { dim } => FiberElement::Matrix(MatrixFiberElement::identity(dim)),
            FiberKind::TrigPoly { .. } => FiberElement::TrigPoly(TrigPolyFiberElement::unit()),
        }
    }

    pub fn zero(&self) -> FiberElement {
        match *self {
            FiberKind::Matrix { dim } => FiberElement::Matrix(MatrixFiberElement::zeros(dim)),
            FiberKind::TrigPoly { .. } => FiberElement::TrigPoly(TrigPolyFiberElement::zero(0)),
        }
    }

    pub fn matrix_dim(&self) -> Result<usize> {
        match *self {
            FiberKind::Matrix { dim } => Ok(dim),
            FiberKind::TrigPoly { .. } => Err(Error::Unsupported("matrix-only operation")),
        }
    }

    /// Checks that `a` is an element of this algebra.
    pub fn admits(&self, a: &FiberElement) -> Result<()> {
        let ok = match (self, a) {
            (FiberKind::Matrix { dim }, FiberElement::Matrix(m)) => m.dim() == *dim,
            (FiberKind::TrigPoly { max_degree }, FiberElement::TrigPoly(p)) => {
                p.degree() <= *max_degree
            }
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::KindMismatch {
                expected: self.to_string(),
                found: a.describe(),
            })
        }
    }

    pub fn mul(&self, a: &FiberElement, b: &FiberElement) -> Result<FiberElement> {
        match (self, a, b) {
            (FiberKind::Matrix { .. }, FiberElement::Matrix(x), FiberElement::Matrix(y)) => {
                self.admits(a)?;
                self.admits(b)?;
                Ok(FiberElement::Matrix(MatrixFiberElement {
                    entries: &x.entries * &y.entries,
                }))
            }
            (
                FiberKind::TrigPoly { max_degree },
                FiberElement::TrigPoly(x),
                FiberElement::TrigPoly(y),
            ) => Ok(FiberElement::TrigPoly(x.mul(y, *max_degree)?)),
            _ => Err(self.mismatch(a, b)),
        }
    }

    pub fn add(&self, a: &FiberElement, b: &FiberElement) -> Result<FiberElement> {
        self.lin_comb(one(), a, one(), b)
    }

    pub fn sub(&self, a: &FiberElement, b: &FiberElement) -> Result<FiberElement> {
        self.lin_comb(one(), a, -one(), b)
    }

    /// `λ₁a + λ₂b`.
    pub fn lin_comb(
        &self,
        l1: Complex64,
        a: &FiberElement,
        l2: Complex64,
        b: &FiberElement,
    ) -> Result<FiberElement> {
        self.admits(a)?;
        self.admits(b)?;
        match (a, b) {
            (FiberElement::Matrix(x), FiberElement::Matrix(y)) => {
                Ok(FiberElement::Matrix(MatrixFiberElement {
                    entries: x.entries.map(|z| z * l1) + y.entries.map(|z| z * l2),
                }))
            }
            (FiberElement::TrigPoly(x), FiberElement::TrigPoly(y)) => {
                Ok(FiberElement::TrigPoly(x.scale(l1).add(&y.scale(l2))))
            }
            _ => Err(self.mismatch(a, b)),
        }
    }

    fn mismatch(&self, a: &FiberElement, b: &FiberElement) -> Error {
        Error::KindMismatch {
            expected: self.to_string(),
            found: format!("{} and {}", a.describe(), b.describe()),
        }
    }
}

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

/// An element of a single fiber.
#[derive(Debug, Clone, PartialEq)]
pub enum FiberElement {
    Matrix(MatrixFiberElement),
    TrigPoly(TrigPolyFiberElement),
}

impl FiberElement {
    pub fn describe(&self) -> String {
        match self {
            FiberElement::Matrix(m) => format!("{0}x{0} matrix", m.dim()),
            FiberElement::TrigPoly(p) => format!("trigpoly of degree {}", p.degree()),
        }
    }

    pub fn as_matrix(&self) -> Result<&MatrixFiberElement> {
        match self {
            FiberElement::Matrix(m) => Ok(m),
            _ => Err(Error::Unsupported("matrix-only operation")),
        }
    }

    pub fn as_trigpoly(&self) -> Result<&TrigPolyFiberElement> {
        match self {
            FiberElement::TrigPoly(p) => Ok(p),
            _ => Err(Error::Unsupported("trigpoly-only operation")),
        }
    }

    /// Spectral norm for matrices, sampled sup-norm for trigonometric
    /// polynomials.
    pub fn norm(&self) -> f64 {
        match self {
            FiberElement::Matrix(m) => m.norm(),
            FiberElement::TrigPoly(p) => p.norm(),
        }
    }

    pub fn adjoint(&self) -> FiberElement {
        match self {
            FiberElement::Matrix(m) => FiberElement::Matrix(m.adjoint()),
            FiberElement::TrigPoly(p) => FiberElement::TrigPoly(p.adjoint()),
        }
    }

    pub fn scale(&self, s: Complex64) -> FiberElement {
        match self {
            FiberElement::Matrix(m) => FiberElement::Matrix(MatrixFiberElement {
                entries: m.entries.map(|z| z * s),
            }),
            FiberElement::TrigPoly(p) => FiberElement::TrigPoly(p.scale(s)),
        }
    }

    pub fn is_positive(&self, tol: f64) -> bool {
        match self {
            FiberElement::Matrix(m) => m.is_positive(tol),
            FiberElement::TrigPoly(p) => p.is_positive(tol),
        }
    }

    /// Distance to `other` in the fiber norm.
    pub fn distance(&self, other: &FiberElement, kind: &FiberKind) -> Result<f64> {
        Ok(kind.sub(self, other)?.norm())
    }
}

/// `| ‖a*a‖ − ‖a‖² |`.
pub fn c_star_identity_residual(a: &FiberElement, kind: &FiberKind) -> Result<f64> {
    let n = a.norm();
    let sq = kind.mul(&a.adjoint(), a)?;
    Ok((sq.norm() - n * n).abs())
}

/// Tolerance the C*-identity residual of a trigonometric polynomial `a` is
/// held to: twice the grid bound of `a*a`, relative to `‖a*a‖`.
pub fn trigpoly_cstar_tolerance(a: &TrigPolyFiberElement) -> f64 {
    let norm = a.norm();
    2.0 * TrigPolyFiberElement::grid_error_bound(2 * a.degree()) * (norm * norm).max(f64::MIN_POSITIVE)
}
