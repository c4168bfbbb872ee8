//! Sections of a measurable bundle, i.e. elements of `L0(Ω, X)`, with their
//! `L0`-valued norms and the Hilbert–Kaplansky module of vector sections.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::fiber::{CMatrix, CVector, FiberElement, FiberKind, MatrixFiberElement};
use crate::measure::{ensure_same_space, o_limit_check, L0Element, SpaceRef};

/// One fiber element per atom, all of the same kind.
#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    space: SpaceRef,
    kind: FiberKind,
    elems: Vec<FiberElement>,
}

impl Section {
    pub fn new(space: &SpaceRef, kind: FiberKind, elems: Vec<FiberElement>) -> Result<Self> {
        if elems.len() != space.len() {
            return Err(Error::DimensionMismatch(format!(
                "section has {} fiber elements for {} atoms",
                elems.len(),
                space.len()
            )));
        }
        for (i, e) in elems.iter().enumerate() {
            kind.admits(e)
                .map_err(|err| Error::at_atom(space.atom_id(i), err.to_string()))?;
        }
        Ok(Section {
            space: space.clone(),
            kind,
            elems,
        })
    }

    pub fn from_fn(
        space: &SpaceRef,
        kind: FiberKind,
        f: impl FnMut(usize) -> FiberElement,
    ) -> Result<Self> {
        Self::new(space, kind, (0..space.len()).map(f).collect())
    }

    /// Same matrix at every atom.
    pub fn constant_matrix(space: &SpaceRef, m: &MatrixFiberElement) -> Result<Self> {
        let kind = FiberKind::matrix(m.dim())?;
        Self::from_fn(space, kind, |_| FiberElement::Matrix(m.clone()))
    }

    pub fn unit(space: &SpaceRef, kind: FiberKind) -> Self {
        Self::from_fn(space, kind, |_| kind.unit()).expect("unit fits every kind")
    }

    pub fn zero(space: &SpaceRef, kind: FiberKind) -> Self {
        Self::from_fn(space, kind, |_| kind.zero()).expect("zero fits every kind")
    }

    pub fn space(&self) -> &SpaceRef {
        &self.space
    }

    pub fn kind(&self) -> FiberKind {
        self.kind
    }

    pub fn elems(&self) -> &[FiberElement] {
        &self.elems
    }

    pub fn at(&self, atom: usize) -> &FiberElement {
        &self.elems[atom]
    }

    fn ensure_compatible(&self, other: &Section) -> Result<()> {
        ensure_same_space(&self.space, &other.space)?;
        if self.kind != other.kind {
            return Err(Error::KindMismatch {
                expected: self.kind.to_string(),
                found: other.kind.to_string(),
            });
        }
        Ok(())
    }

    fn zip_with(
        &self,
        other: &Section,
        f: impl Fn(&FiberKind, &FiberElement, &FiberElement) -> Result<FiberElement>,
    ) -> Result<Section> {
        self.ensure_compatible(other)?;
        let elems = self
            .elems
            .iter()
            .zip(&other.elems)
            .enumerate()
            .map(|(i, (a, b))| {
                f(&self.kind, a, b).map_err(|e| match e {
                    Error::DegreeBudget { .. } => e,
                    other => Error::at_atom(self.space.atom_id(i), other.to_string()),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Section {
            space: self.space.clone(),
            kind: self.kind,
            elems,
        })
    }

    pub fn add(&self, other: &Section) -> Result<Section> {
        self.zip_with(other, |k, a, b| k.add(a, b))
    }

    pub fn sub(&self, other: &Section) -> Result<Section> {
        self.zip_with(other, |k, a, b| k.sub(a, b))
    }

    pub fn mul(&self, other: &Section) -> Result<Section> {
        self.zip_with(other, |k, a, b| k.mul(a, b))
    }

    pub fn adjoint(&self) -> Section {
        Section {
            space: self.space.clone(),
            kind: self.kind,
            elems: self.elems.iter().map(FiberElement::adjoint).collect(),
        }
    }

    /// Module action of `L0`: the element at `ω` is multiplied by `λ(ω)`.
    pub fn l0_scale(&self, lambda: &L0Element) -> Result<Section> {
        ensure_same_space(&self.space, lambda.space())?;
        Ok(Section {
            space: self.space.clone(),
            kind: self.kind,
            elems: self
                .elems
                .iter()
                .zip(lambda.values())
                .map(|(e, &l)| e.scale(l))
                .collect(),
        })
    }

    pub fn scale(&self, c: Complex64) -> Section {
        Section {
            space: self.space.clone(),
            kind: self.kind,
            elems: self.elems.iter().map(|e| e.scale(c)).collect(),
        }
    }

    /// The `L0`-valued norm `ω ↦ ‖x(ω)‖_{X(ω)}`.
    pub fn norm(&self) -> L0Element {
        L0Element::from_fn_real(&self.space, |i| self.elems[i].norm())
    }

    /// True when `x(ω) = y(ω)` within `tol` in the fiber norm at every atom.
    pub fn approx_eq(&self, other: &Section, tol: f64) -> Result<bool> {
        let d = self.sub(other)?.norm();
        Ok(d.values().iter().all(|z| z.re <= tol))
    }
}

/// Binary operations on sections.
#[derive(Debug, Clone, PartialEq)]
pub enum SectionOp {
    Add,
    Mul,
    Adjoint,
    L0Scale(L0Element),
}

pub fn section_norm(x: &Section) -> L0Element {
    x.norm()
}

/// Applies `op` to `x` (and `y` for the binary operations).
pub fn section_ops(x: &Section, y: Option<&Section>, op: &SectionOp) -> Result<Section> {
    let rhs = || y.ok_or_else(|| Error::Domain("binary section operation needs two operands".into()));
    match op {
        SectionOp::Add => x.add(rhs()?),
        SectionOp::Mul => x.mul(rhs()?),
        SectionOp::Adjoint => Ok(x.adjoint()),
        SectionOp::L0Scale(l) => x.l0_scale(l),
    }
}

/// Splits `x` along disjointly supported `e1 + e2 = ‖x‖`, returning
/// `(x1, x2)` with `x = x1 + x2`, `‖x1‖ = e1`, `‖x2‖ = e2`.
pub fn d_decompose(x: &Section, e1: &L0Element, e2: &L0Element) -> Result<(Section, Section)> {
    ensure_same_space(x.space(), e1.space())?;
    ensure_same_space(x.space(), e2.space())?;
    if !e1.is_real() || !e2.is_real() {
        return Err(Error::Domain("d-decomposition needs real L0 summands".into()));
    }
    let norm = x.norm();
    let space = x.space().clone();
    for i in 0..space.len() {
        let (a, b, n) = (e1.re(i), e2.re(i), norm.re(i));
        if a < 0.0 || b < 0.0 {
            return Err(Error::at_atom(space.atom_id(i), "split summands must be ≥ 0"));
        }
        if a > 0.0 && b > 0.0 {
            return Err(Error::at_atom(space.atom_id(i), "split summands must have disjoint supports"));
        }
        if a + b != n {
            return Err(Error::at_atom(
                space.atom_id(i),
                format!("e1 + e2 = {} differs from ‖x‖ = {}", a + b, n),
            ));
        }
    }
    let (on1, _) = crate::measure::support_split(e1)?;
    let (on2, _) = crate::measure::support_split(e2)?;
    let x1 = x.l0_scale(&on1)?;
    let x2 = x.l0_scale(&on2)?;
    // Post-conditions hold exactly: scaling by 0/1 copies or zeroes each fiber.
    debug_assert!(x1.norm() == *e1 && x2.norm() == *e2);
    debug_assert!(x1.add(&x2)? == *x);
    Ok((x1, x2))
}

/// `(bo)`-convergence of `seq` to `target`: order convergence of
/// `‖seq_n − target‖` to zero.
pub fn bo_limit_check(seq: &[Section], target: &Section, tol: f64) -> Result<bool> {
    if seq.is_empty() {
        return Err(Error::Domain("(bo)-limit check of an empty sequence".into()));
    }
    let dists = seq
        .iter()
        .map(|s| Ok(s.sub(target)?.norm()))
        .collect::<Result<Vec<_>>>()?;
    o_limit_check(&dists, &L0Element::zero(target.space()), tol)
}

/// An element of the Hilbert–Kaplansky module `L0(Ω, C^d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorSection {
    space: SpaceRef,
    dim: usize,
    vecs: Vec<CVector>,
}

impl VectorSection {
    pub fn new(space: &SpaceRef, dim: usize, vecs: Vec<CVector>) -> Result<Self> {
        if vecs.len() != space.len() || vecs.iter().any(|v| v.len() != dim) {
            return Err(Error::DimensionMismatch(format!(
                "vector section needs {} vectors of length {dim}",
                space.len()
            )));
        }
        Ok(VectorSection {
            space: space.clone(),
            dim,
            vecs,
        })
    }

    pub fn random<R: Rng>(space: &SpaceRef, dim: usize, rng: &mut R) -> Self {
        let vecs = (0..space.len())
            .map(|_| {
                CVector::from_fn(dim, |_, _| {
                    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
                })
            })
            .collect();
        VectorSection {
            space: space.clone(),
            dim,
            vecs,
        }
    }

    pub fn space(&self) -> &SpaceRef {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn at(&self, atom: usize) -> &CVector {
        &self.vecs[atom]
    }

    /// `‖x‖ = √⟨x, x⟩`.
    pub fn norm(&self) -> L0Element {
        L0Element::from_fn_real(&self.space, |i| self.vecs[i].norm())
    }

    pub fn l0_scale(&self, lambda: &L0Element) -> Result<Self> {
        ensure_same_space(&self.space, lambda.space())?;
        Ok(VectorSection {
            space: self.space.clone(),
            dim: self.dim,
            vecs: self
                .vecs
                .iter()
                .zip(lambda.values())
                .map(|(v, &l)| v.map(|z| z * l))
                .collect(),
        })
    }
}

/// `L0`-valued inner product, linear in the first slot:
/// `⟨x, y⟩(ω) = Σ_i x_i(ω)·conj(y_i(ω))`.
pub fn inner_product(x: &VectorSection, y: &VectorSection) -> Result<L0Element> {
    ensure_same_space(&x.space, &y.space)?;
    if x.dim != y.dim {
        return Err(Error::DimensionMismatch(format!(
            "inner product of dimensions {} and {}",
            x.dim, y.dim
        )));
    }
    Ok(L0Element::from_fn(&x.space, |i| y.vecs[i].dotc(&x.vecs[i])))
}

/// Applies a matrix-kind section, viewed as an operator on the module, to a
/// vector section.
pub fn operator_apply(t: &Section, x: &VectorSection) -> Result<VectorSection> {
    ensure_same_space(t.space(), x.space())?;
    let d = t.kind().matrix_dim()?;
    if d != x.dim {
        return Err(Error::DimensionMismatch(format!(
            "operator of dimension {d} applied to vectors of length {}",
            x.dim
        )));
    }
    let vecs = t
        .elems()
        .iter()
        .zip(&x.vecs)
        .map(|(e, v)| Ok(&e.as_matrix()?.entries * v))
        .collect::<Result<Vec<_>>>()?;
    VectorSection::new(t.space(), d, vecs)
}

/// Residuals recorded while verifying an operator adjoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdjointReport {
    /// Max over atoms and probes of `|⟨Tx,y⟩ − ⟨x,T*y⟩|`, relative to
    /// `max(1, ‖T‖‖x‖‖y‖)`.
    pub identity_residual: f64,
    /// Max over atoms of `|‖T*T‖ − ‖T‖²|`.
    pub cstar_residual: f64,
    /// Max over atoms of `|‖T*‖ − ‖T‖|`.
    pub norm_residual: f64,
}

const ADJOINT_TOL: f64 = 1e-10;

/// Conjugate transpose of an operator section, verified against
/// `⟨T(x), y⟩ = ⟨x, T*(y)⟩` on `probes` random vector sections and against
/// `‖T*T‖ = ‖T‖²` at every atom.
pub fn operator_adjoint<R: Rng>(
    t: &Section,
    probes: usize,
    rng: &mut R,
) -> Result<(Section, AdjointReport)> {
    let d = t.kind().matrix_dim()?;
    let ts = t.adjoint();
    let tnorm = t.norm();
    let mut identity_residual: f64 = 0.0;
    for _ in 0..probes {
        let x = VectorSection::random(t.space(), d, rng);
        let y = VectorSection::random(t.space(), d, rng);
        let lhs = inner_product(&operator_apply(t, &x)?, &y)?;
        let rhs = inner_product(&x, &operator_apply(&ts, &y)?)?;
        let (xn, yn) = (x.norm(), y.norm());
        for i in 0..t.space().len() {
            let scale = (tnorm.re(i) * xn.re(i) * yn.re(i)).max(1.0);
            identity_residual = identity_residual.max((lhs.value(i) - rhs.value(i)).norm() / scale);
        }
    }
    let tst = ts.mul(t)?.norm();
    let tsn = ts.norm();
    let mut cstar_residual: f64 = 0.0;
    let mut norm_residual: f64 = 0.0;
    for i in 0..t.space().len() {
        let n = tnorm.re(i);
        cstar_residual = cstar_residual.max((tst.re(i) - n * n).abs() / (n * n).max(1.0));
        norm_residual = norm_residual.max((tsn.re(i) - n).abs());
    }
    let report = AdjointReport {
        identity_residual,
        cstar_residual,
        norm_residual,
    };
    if identity_residual > ADJOINT_TOL || cstar_residual > ADJOINT_TOL || norm_residual > ADJOINT_TOL {
        return Err(Error::Verification(format!("operator adjoint check failed: {report:?}")));
    }
    Ok((ts, report))
}

/// The matrix-unit sections `E_ij` (same unit at every atom), ordered with
/// `i + j·d` increasing.
pub fn matrix_unit_probes(space: &SpaceRef, dim: usize) -> Vec<((usize, usize), Section)> {
    let kind = FiberKind::Matrix { dim };
    let mut out = Vec::with_capacity(dim * dim);
    for j in 0..dim {
        for i in 0..dim {
            let s = Section::from_fn(space, kind, |_| {
                FiberElement::Matrix(MatrixFiberElement::unit(dim, i, j))
            })
            .expect("matrix units fit the kind");
            out.push(((i, j), s));
        }
    }
    out
}

/// Section with the given matrix at each atom.
pub fn matrix_section(space: &SpaceRef, mats: Vec<CMatrix>) -> Result<Section> {
    let d = mats.first().map(|m| m.nrows()).unwrap_or(1);
    let kind = FiberKind::matrix(d)?;
    let elems = mats
        .into_iter()
        .map(|m| MatrixFiberElement::new(m).map(FiberElement::Matrix))
        .collect::<Result<Vec<_>>>()?;
    Section::new(space, kind, elems)
}
