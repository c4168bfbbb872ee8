//! Atomic measure spaces and the algebra `L0` of scalar functions on them.
//!
//! Over a finite atomic space every measurable function is a tuple of
//! complex numbers, order convergence is convergence at each atom, and the
//! lifting of `L∞` is the identity on stored representatives.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// One atom of the space together with its (positive) measure.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub id: String,
    pub weight: f64,
}

/// A finite, complete measure space given by a list of weighted atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicMeasureSpace {
    atoms: Vec<Atom>,
}

/// Shared handle to a measure space. Bundles over the same space share one.
pub type SpaceRef = Arc<AtomicMeasureSpace>;

impl AtomicMeasureSpace {
    pub fn new(atoms: Vec<Atom>) -> Result<SpaceRef> {
        if atoms.is_empty() {
            return Err(Error::InvalidSpace("at least one atom is required".into()));
        }
        for (i, a) in atoms.iter().enumerate() {
            if !(a.weight > 0.0 && a.weight.is_finite()) {
                return Err(Error::InvalidSpace(format!(
                    "atom {} has non-positive or non-finite weight {}",
                    a.id, a.weight
                )));
            }
            if atoms[..i].iter().any(|b| b.id == a.id) {
                return Err(Error::InvalidSpace(format!("duplicate atom id {}", a.id)));
            }
        }
        Ok(Arc::new(AtomicMeasureSpace { atoms }))
    }

    /// `n` atoms `w0..w{n-1}` of weight `1/n`.
    pub fn uniform(n: usize) -> Result<SpaceRef> {
        let w = 1.0 / n as f64;
        Self::with_weights(&vec![w; n])
    }

    pub fn with_weights(weights: &[f64]) -> Result<SpaceRef> {
        Self::new(
            weights
                .iter()
                .enumerate()
                .map(|(i, &weight)| Atom {
                    id: format!("w{i}"),
                    weight,
                })
                .collect(),
        )
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atom_id(&self, i: usize) -> &str {
        &self.atoms[i].id
    }

    pub fn total_weight(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }
}

pub(crate) fn same_space(a: &SpaceRef, b: &SpaceRef) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

pub(crate) fn ensure_same_space(a: &SpaceRef, b: &SpaceRef) -> Result<()> {
    if same_space(a, b) {
        Ok(())
    } else {
        Err(Error::SpaceMismatch)
    }
}

/// An element of `L0(Ω)`: one complex value per atom.
///
/// The `real` flag marks elements known to be real-valued; when it is set
/// every imaginary part is exactly zero.
#[derive(Debug, Clone)]
pub struct L0Element {
    space: SpaceRef,
    values: Vec<Complex64>,
    real: bool,
}

impl PartialEq for L0Element {
    fn eq(&self, other: &Self) -> bool {
        same_space(&self.space, &other.space) && self.values == other.values
    }
}

/// Pointwise operations of the `*`-algebra `L0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum L0Op {
    Add,
    Sub,
    Mul,
    Conj,
    Abs,
    ScalarMul(Complex64),
}

impl L0Element {
    pub fn new(space: &SpaceRef, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::DimensionMismatch(format!(
                "L0 element has {} values for {} atoms",
                values.len(),
                space.len()
            )));
        }
        Ok(L0Element {
            space: space.clone(),
            values,
            real: false,
        })
    }

    pub fn new_real(space: &SpaceRef, values: &[f64]) -> Result<Self> {
        let mut f = Self::new(space, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())?;
        f.real = true;
        Ok(f)
    }

    pub fn constant(space: &SpaceRef, c: f64) -> Self {
        Self::new_real(space, &vec![c; space.len()]).expect("length matches")
    }

    pub fn zero(space: &SpaceRef) -> Self {
        Self::constant(space, 0.0)
    }

    pub fn one(space: &SpaceRef) -> Self {
        Self::constant(space, 1.0)
    }

    /// Indicator function of a single atom.
    pub fn indicator(space: &SpaceRef, atom: usize) -> Self {
        let mut v = vec![0.0; space.len()];
        v[atom] = 1.0;
        Self::new_real(space, &v).expect("length matches")
    }

    pub(crate) fn from_fn_real(space: &SpaceRef, f: impl FnMut(usize) -> f64) -> Self {
        let v: Vec<f64> = (0..space.len()).map(f).collect();
        Self::new_real(space, &v).expect("length matches")
    }

    pub(crate) fn from_fn(space: &SpaceRef, f: impl FnMut(usize) -> Complex64) -> Self {
        Self::new(space, (0..space.len()).map(f).collect()).expect("length matches")
    }

    pub fn space(&self) -> &SpaceRef {
        &self.space
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn value(&self, atom: usize) -> Complex64 {
        self.values[atom]
    }

    /// Real parts, for real-valued elements.
    pub fn re(&self, atom: usize) -> f64 {
        self.values[atom].re
    }

    pub fn re_values(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.re).collect()
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    /// Drops numerically-zero imaginary parts and marks the element real
    /// when every imaginary part is within `tol`.
    pub fn try_into_real(mut self, tol: f64) -> Result<Self> {
        if self.values.iter().any(|z| z.im.abs() > tol) {
            return Err(Error::Domain("element has a non-negligible imaginary part".into()));
        }
        for z in &mut self.values {
            z.im = 0.0;
        }
        self.real = true;
        Ok(self)
    }

    fn zip(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        ensure_same_space(&self.space, &other.space)?;
        Ok(L0Element {
            space: self.space.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            real: self.real && other.real,
        })
    }

    fn map(&self, real: bool, f: impl Fn(Complex64) -> Complex64) -> Self {
        L0Element {
            space: self.space.clone(),
            values: self.values.iter().map(|&a| f(a)).collect(),
            real,
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a * b)
    }

    pub fn conj(&self) -> Self {
        self.map(self.real, |a| a.conj())
    }

    pub fn abs(&self) -> Self {
        self.map(true, |a| Complex64::new(a.norm(), 0.0))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map(self.real && c.im == 0.0, |a| a * c)
    }

    pub fn scale_real(&self, c: f64) -> Self {
        self.scale(Complex64::new(c, 0.0))
    }
}

/// Dispatches one of the pointwise `L0` operations. Unary operations ignore
/// `g`; binary operations require it.
pub fn l0_arith(f: &L0Element, g: Option<&L0Element>, op: L0Op) -> Result<L0Element> {
    let rhs = || g.ok_or_else(|| Error::Domain("binary operation needs a second operand".into()));
    match op {
        L0Op::Add => f.add(rhs()?),
        L0Op::Sub => f.sub(rhs()?),
        L0Op::Mul => f.mul(rhs()?),
        L0Op::Conj => Ok(f.conj()),
        L0Op::Abs => Ok(f.abs()),
        L0Op::ScalarMul(c) => Ok(f.scale(c)),
    }
}

fn ensure_real(f: &L0Element, what: &str) -> Result<()> {
    if f.is_real() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} requires a real-valued L0 element")))
    }
}

/// Order of `L0`: `f ≤ g` iff `f(ω) ≤ g(ω)` at every atom.
pub fn l0_leq(f: &L0Element, g: &L0Element) -> Result<bool> {
    ensure_real(f, "l0_leq")?;
    ensure_real(g, "l0_leq")?;
    ensure_same_space(f.space(), g.space())?;
    Ok(f.values.iter().zip(&g.values).all(|(a, b)| a.re <= b.re))
}

/// Decides order convergence `seq → target` on a finite prefix.
///
/// Accepts when the last element is within `tol` of the target at every
/// atom and every element of the final quarter of the sequence is within
/// `2·tol`.
pub fn o_limit_check(seq: &[L0Element], target: &L0Element, tol: f64) -> Result<bool> {
    Ok(o_limit_per_atom(seq, target, tol)?.into_iter().all(|ok| ok))
}

/// The tail-window rule of [`o_limit_check`], decided separately at each atom.
pub fn o_limit_per_atom(seq: &[L0Element], target: &L0Element, tol: f64) -> Result<Vec<bool>> {
    let last = seq
        .last()
        .ok_or_else(|| Error::Domain("order-limit check of an empty sequence".into()))?;
    ensure_real(target, "o_limit_check")?;
    for s in seq {
        ensure_real(s, "o_limit_check")?;
        ensure_same_space(s.space(), target.space())?;
    }
    let dist = |s: &L0Element, i: usize| (s.values[i].re - target.values[i].re).abs();
    let n = seq.len();
    let tail = &seq[(3 * n) / 4..];
    Ok((0..target.space.len())
        .map(|i| {
            dist(last, i) <= tol && tail.iter().map(|s| dist(s, i)).fold(0.0, f64::max) <= 2.0 * tol
        })
        .collect())
}

/// Essential supremum; on an atomic space every atom has positive measure,
/// so this is the maximum modulus.
pub fn ess_sup(f: &L0Element) -> f64 {
    f.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// The lifting of `L∞(Ω)`; the identity on representatives for atomic `Ω`.
pub fn lifting_apply(f: &L0Element) -> L0Element {
    let lifted = f.clone();
    assert_eq!(ess_sup(&lifted), ess_sup(f));
    lifted
}

/// Splits `1` along the support of `e ≥ 0`: returns the indicators of
/// `{e > 0}` and of its complement.
pub fn support_split(e: &L0Element) -> Result<(L0Element, L0Element)> {
    ensure_real(e, "support_split")?;
    if e.values.iter().any(|z| z.re < 0.0) {
        return Err(Error::Domain("support_split requires e ≥ 0".into()));
    }
    let on = L0Element::from_fn_real(&e.space, |i| if e.values[i].re > 0.0 { 1.0 } else { 0.0 });
    let off = L0Element::from_fn_real(&e.space, |i| 1.0 - on.values[i].re);
    Ok((on, off))
}
