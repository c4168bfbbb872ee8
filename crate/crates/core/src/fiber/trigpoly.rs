//! Trigonometric polynomials on the torus `[0,1)` as a truncated model of
//! `C[0,1)`.
//!
//! An element of degree `K` is `t ↦ Σ_{|k|≤K} c_k e^{2πikt}`. Products grow
//! the degree and are never truncated; the caller supplies a degree budget
//! and an operation that would exceed it fails.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Grid points per coefficient used by the sampled sup-norm.
pub const GRID_OVERSAMPLING: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct TrigPolyFiberElement {
    degree: usize,
    coeffs: Vec<Complex64>,
}

impl TrigPolyFiberElement {
    /// `coeffs` lists `c_{-K}, …, c_K`.
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() % 2 != 1 {
            return Err(Error::DimensionMismatch(format!(
                "trigonometric polynomial needs 2K+1 coefficients, got {}",
                coeffs.len()
            )));
        }
        Ok(TrigPolyFiberElement {
            degree: coeffs.len() / 2,
            coeffs,
        })
    }

    pub fn zero(degree: usize) -> Self {
        TrigPolyFiberElement {
            degree,
            coeffs: vec![Complex64::new(0.0, 0.0); 2 * degree + 1],
        }
    }

    pub fn constant(c: Complex64) -> Self {
        TrigPolyFiberElement {
            degree: 0,
            coeffs: vec![c],
        }
    }

    pub fn unit() -> Self {
        Self::constant(Complex64::new(1.0, 0.0))
    }

    /// The single mode `e^{2πikt}`.
    pub fn mode(k: i64) -> Self {
        let mut p = Self::zero(k.unsigned_abs() as usize);
        p.set_coeff(k, Complex64::new(1.0, 0.0));
        p
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// `c_k`, zero outside the stored range.
    pub fn coeff(&self, k: i64) -> Complex64 {
        if k.unsigned_abs() as usize > self.degree {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[(k + self.degree as i64) as usize]
        }
    }

    fn set_coeff(&mut self, k: i64, v: Complex64) {
        let idx = (k + self.degree as i64) as usize;
        self.coeffs[idx] = v;
    }

    pub fn modes(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let k0 = self.degree as i64;
        self.coeffs.iter().enumerate().map(move |(i, &c)| (i as i64 - k0, c))
    }

    /// Same function, stored with at least `degree` coefficients on each side.
    pub fn padded(&self, degree: usize) -> Self {
        if degree <= self.degree {
            return self.clone();
        }
        let mut p = Self::zero(degree);
        for (k, c) in self.modes() {
            p.set_coeff(k, c);
        }
        p
    }

    pub fn map_coeffs(&self, f: impl Fn(i64, Complex64) -> Complex64) -> Self {
        let mut p = self.clone();
        let k0 = self.degree as i64;
        for (i, c) in p.coeffs.iter_mut().enumerate() {
            *c = f(i as i64 - k0, *c);
        }
        p
    }

    pub fn add(&self, other: &Self) -> Self {
        let d = self.degree.max(other.degree);
        let mut p = self.padded(d);
        for (k, c) in other.modes() {
            let cur = p.coeff(k);
            p.set_coeff(k, cur + c);
        }
        p
    }

    pub fn scale(&self, s: Complex64) -> Self {
        self.map_coeffs(|_, c| c * s)
    }

    /// Product by coefficient convolution; the result has degree `K₁+K₂`
    /// and must fit in `budget`.
    pub fn mul(&self, other: &Self, budget: usize) -> Result<Self> {
        let needed = self.degree + other.degree;
        if needed > budget {
            return Err(Error::DegreeBudget { needed, budget });
        }
        let mut out = vec![Complex64::new(0.0, 0.0); 2 * needed + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if *a == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Ok(TrigPolyFiberElement {
            degree: needed,
            coeffs: out,
        })
    }

    /// Pointwise complex conjugate: `c_k → conj(c_{-k})`.
    pub fn adjoint(&self) -> Self {
        let k0 = self.degree as i64;
        let coeffs = (0..self.coeffs.len())
            .map(|i| self.coeff(k0 - i as i64).conj())
            .collect();
        TrigPolyFiberElement {
            degree: self.degree,
            coeffs,
        }
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        self.modes()
            .map(|(k, c)| c * Complex64::from_polar(1.0, 2.0 * PI * k as f64 * t))
            .sum()
    }

    /// Number of grid points for sampling an element of degree `k`.
    pub fn grid_size(degree: usize) -> usize {
        GRID_OVERSAMPLING * (2 * degree + 1)
    }

    /// Values on the uniform grid `j/M`, `M = grid_size(K)`.
    pub fn sample_grid(&self) -> Vec<Complex64> {
        let m = Self::grid_size(self.degree);
        let roots: Vec<Complex64> = (0..m)
            .map(|j| Complex64::from_polar(1.0, 2.0 * PI * j as f64 / m as f64))
            .collect();
        (0..m)
            .map(|j| {
                self.modes()
                    .map(|(k, c)| c * roots[(k.rem_euclid(m as i64) as usize * j) % m])
                    .sum()
            })
            .collect()
    }

    /// Relative error bound of the sampled sup-norm: by Bernstein's
    /// inequality the grid maximum is at least `(1 − π(2K+1)/M)·‖p‖∞`.
    pub fn grid_error_bound(degree: usize) -> f64 {
        PI * (2 * degree + 1) as f64 / Self::grid_size(degree) as f64
    }

    /// Sup-norm on the torus, reported as the grid maximum.
    pub fn norm(&self) -> f64 {
        self.sample_grid().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn realness_residual(&self) -> f64 {
        self.modes()
            .map(|(k, c)| (self.coeff(-k) - c.conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_positive(&self, tol: f64) -> bool {
        if self.realness_residual() > tol {
            return false;
        }
        self.sample_grid().iter().all(|z| z.re >= -tol)
    }
}
