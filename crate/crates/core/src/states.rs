//! `L0`-valued states realized as measurable bundles of states, general
//! `L0`-linear functionals, and the basic inequalities they satisfy.

use num_complex::Complex64;
use rand::Rng;

use crate::bundle::Section;
use crate::error::{Error, Result};
use crate::fiber::matrix::{hermitian_residual, min_eigenvalue, trace_norm};
use crate::fiber::{CMatrix, FiberElement, FiberKind, TrigPolyFiberElement};
use crate::measure::{ensure_same_space, L0Element, SpaceRef};
use crate::random;

/// Tolerance for the state invariants checked at construction.
pub const STATE_TOL: f64 = 1e-12;

/// A state on a single fiber.
#[derive(Debug, Clone, PartialEq)]
pub enum FiberState {
    /// `x ↦ tr(ρx)` on `M_d(C)`.
    Density(CMatrix),
    /// `x ↦ ∫₀¹ x(t) dt`.
    Lebesgue,
    /// `x ↦ x(t₀)`.
    PointMass(f64),
    /// `x ↦ Σ_j w_j x(t_j)`.
    Mixture { weights: Vec<f64>, points: Vec<f64> },
}

impl FiberState {
    pub fn eval(&self, x: &FiberElement) -> Result<Complex64> {
        match (self, x) {
            (FiberState::Density(rho), FiberElement::Matrix(m)) => {
                if rho.nrows() != m.dim() {
                    return Err(Error::DimensionMismatch(format!(
                        "density of dimension {} evaluated on a {}x{} matrix",
                        rho.nrows(),
                        m.dim(),
                        m.dim()
                    )));
                }
                Ok(trace_product(rho, &m.entries))
            }
            (FiberState::Lebesgue, FiberElement::TrigPoly(p)) => Ok(p.coeff(0)),
            (FiberState::PointMass(t), FiberElement::TrigPoly(p)) => Ok(p.eval(*t)),
            (FiberState::Mixture { weights, points }, FiberElement::TrigPoly(p)) => Ok(weights
                .iter()
                .zip(points)
                .map(|(w, t)| p.eval(*t) * *w)
                .sum()),
            _ => Err(Error::KindMismatch {
                expected: self.describe().into(),
                found: x.describe(),
            }),
        }
    }

    fn describe(&self) -> &'static str {
        match self {
            FiberState::Density(_) => "matrix state",
            _ => "trigpoly state",
        }
    }

    /// Names the first violated state invariant, if any.
    pub fn violation(&self, kind: &FiberKind) -> Option<String> {
        match (self, kind) {
            (FiberState::Density(rho), FiberKind::Matrix { dim }) => {
                if rho.nrows() != *dim || rho.ncols() != *dim {
                    return Some(format!("density has shape {}x{}, expected {dim}x{dim}", rho.nrows(), rho.ncols()));
                }
                let h = hermitian_residual(rho);
                if h > STATE_TOL {
                    return Some(format!("hermiticity violated (residual {h:e})"));
                }
                let tr = rho.trace();
                if (tr - Complex64::new(1.0, 0.0)).norm() > STATE_TOL {
                    return Some(format!("unit value violated: φ(e) = tr(ρ) = {} ≠ 1", tr.re));
                }
                let m = min_eigenvalue(rho);
                if m < -STATE_TOL {
                    return Some(format!("positivity violated: min eigenvalue {m:e}"));
                }
                None
            }
            (FiberState::Lebesgue, FiberKind::TrigPoly { .. }) => None,
            (FiberState::PointMass(t), FiberKind::TrigPoly { .. }) => {
                (!t.is_finite()).then(|| "point mass location is not finite".to_string())
            }
            (FiberState::Mixture { weights, points }, FiberKind::TrigPoly { .. }) => {
                if weights.is_empty() || weights.len() != points.len() {
                    return Some("mixture needs equally many weights and points".into());
                }
                if weights.iter().any(|w| *w < 0.0) || points.iter().any(|t| !t.is_finite()) {
                    return Some("positivity violated: negative mixture weight".into());
                }
                let s: f64 = weights.iter().sum();
                if (s - 1.0).abs() > STATE_TOL {
                    return Some(format!("unit value violated: weights sum to {s}"));
                }
                None
            }
            _ => Some(format!("{} does not act on {kind}", self.describe())),
        }
    }
}

/// `tr(a·b)` without forming the product.
pub(crate) fn trace_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let d = a.nrows();
    let mut s = Complex64::new(0.0, 0.0);
    for i in 0..d {
        for k in 0..d {
            s += a[(i, k)] * b[(k, i)];
        }
    }
    s
}

/// A measurable bundle of states `{φ_ω}`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateBundle {
    space: SpaceRef,
    kind: FiberKind,
    states: Vec<FiberState>,
}

impl StateBundle {
    pub fn new(space: &SpaceRef, kind: FiberKind, states: Vec<FiberState>) -> Result<Self> {
        if states.len() != space.len() {
            return Err(Error::DimensionMismatch(format!(
                "state bundle has {} states for {} atoms",
                states.len(),
                space.len()
            )));
        }
        for (i, s) in states.iter().enumerate() {
            if let Some(v) = s.violation(&kind) {
                return Err(Error::at_atom(space.atom_id(i), v));
            }
        }
        Ok(StateBundle {
            space: space.clone(),
            kind,
            states,
        })
    }

    pub fn from_densities(space: &SpaceRef, densities: Vec<CMatrix>) -> Result<Self> {
        let d = densities.first().map(|m| m.nrows()).unwrap_or(1);
        Self::new(
            space,
            FiberKind::matrix(d)?,
            densities.into_iter().map(FiberState::Density).collect(),
        )
    }

    /// The normalized trace `e/d` at every atom.
    pub fn canonical_trace(space: &SpaceRef, dim: usize) -> Result<Self> {
        let rho = CMatrix::identity(dim, dim).map(|z| z / dim as f64);
        Self::from_densities(space, vec![rho; space.len()])
    }

    pub fn lebesgue(space: &SpaceRef, max_degree: usize) -> Result<Self> {
        Self::new(
            space,
            FiberKind::trigpoly(max_degree)?,
            vec![FiberState::Lebesgue; space.len()],
        )
    }

    pub fn random<R: Rng>(rng: &mut R, space: &SpaceRef, dim: usize) -> Self {
        let rhos = (0..space.len()).map(|_| random::density(rng, dim)).collect();
        Self::from_densities(space, rhos).expect("random densities are states")
    }

    pub fn space(&self) -> &SpaceRef {
        &self.space
    }

    pub fn kind(&self) -> FiberKind {
        self.kind
    }

    pub fn states(&self) -> &[FiberState] {
        &self.states
    }

    pub fn density(&self, atom: usize) -> Result<&CMatrix> {
        match &self.states[atom] {
            FiberState::Density(r) => Ok(r),
            _ => Err(Error::Unsupported("density access")),
        }
    }

    /// Convex combination `αφ + βψ` with `α, β ≥ 0`, `α + β = 1` in `L0`.
    pub fn convex(alpha: &L0Element, phi: &StateBundle, beta: &L0Element, psi: &StateBundle) -> Result<Self> {
        ensure_same_space(&phi.space, &psi.space)?;
        let f = L0Functional::combine(alpha, &phi.to_functional()?, beta, &psi.to_functional()?)?;
        Self::from_densities(&phi.space, f.duals)
    }

    /// The trace-pairing dual `A_ω = ρ_ω` of a matrix-kind state bundle.
    pub fn to_functional(&self) -> Result<L0Functional> {
        let duals = (0..self.space.len())
            .map(|i| self.density(i).cloned())
            .collect::<Result<Vec<_>>>()?;
        L0Functional::new(&self.space, duals)
    }
}

/// `φ̂(x̂)(ω) = φ_ω(x(ω))`.
pub fn state_eval(phi: &StateBundle, x: &Section) -> Result<L0Element> {
    ensure_same_space(&phi.space, x.space())?;
    if phi.kind.matrix_dim().ok() != x.kind().matrix_dim().ok() {
        return Err(Error::KindMismatch {
            expected: phi.kind.to_string(),
            found: x.kind().to_string(),
        });
    }
    let values = phi
        .states
        .iter()
        .zip(x.elems())
        .map(|(s, e)| s.eval(e))
        .collect::<Result<Vec<_>>>()?;
    L0Element::new(&phi.space, values)
}

/// An `L0`-linear functional on a matrix bundle, `f(x)(ω) = tr(A_ω x(ω))`.
#[derive(Debug, Clone, PartialEq)]
pub struct L0Functional {
    space: SpaceRef,
    dim: usize,
    duals: Vec<CMatrix>,
}

impl L0Functional {
    pub fn new(space: &SpaceRef, duals: Vec<CMatrix>) -> Result<Self> {
        let dim = duals.first().map(|m| m.nrows()).unwrap_or(0);
        if duals.len() != space.len() || duals.iter().any(|m| m.nrows() != dim || m.ncols() != dim) {
            return Err(Error::DimensionMismatch("functional needs one d×d dual per atom".into()));
        }
        Ok(L0Functional {
            space: space.clone(),
            dim,
            duals,
        })
    }

    pub fn duals(&self) -> &[CMatrix] {
        &self.duals
    }

    pub fn eval(&self, x: &Section) -> Result<L0Element> {
        ensure_same_space(&self.space, x.space())?;
        if x.kind() != (FiberKind::Matrix { dim: self.dim }) {
            return Err(Error::KindMismatch {
                expected: format!("matrix({})", self.dim),
                found: x.kind().to_string(),
            });
        }
        let values = self
            .duals
            .iter()
            .zip(x.elems())
            .map(|(a, e)| Ok(trace_product(a, &e.as_matrix()?.entries)))
            .collect::<Result<Vec<_>>>()?;
        L0Element::new(&self.space, values)
    }

    /// `αf + βg` with `L0` coefficients.
    pub fn combine(alpha: &L0Element, f: &L0Functional, beta: &L0Element, g: &L0Functional) -> Result<Self> {
        ensure_same_space(&f.space, &g.space)?;
        ensure_same_space(&f.space, alpha.space())?;
        ensure_same_space(&f.space, beta.space())?;
        if f.dim != g.dim {
            return Err(Error::DimensionMismatch("functionals of different dimension".into()));
        }
        let duals = (0..f.space.len())
            .map(|i| f.duals[i].map(|z| z * alpha.value(i)) + g.duals[i].map(|z| z * beta.value(i)))
            .collect();
        L0Functional::new(&f.space, duals)
    }

    /// Positive iff every dual is positive semidefinite.
    pub fn is_positive(&self, tol: f64) -> bool {
        self.duals
            .iter()
            .all(|a| hermitian_residual(a) <= tol && min_eigenvalue(a) >= -tol)
    }
}

/// `‖f‖(ω) = sup{|f(x)(ω)| : ‖x‖ ≤ 1}`, which for the trace pairing is the
/// trace norm of `A_ω`.
pub fn functional_norm(f: &L0Functional) -> L0Element {
    L0Element::from_fn_real(&f.space, |i| trace_norm(&f.duals[i]))
}

/// Per-atom residuals of the Cauchy–Schwarz inequality for a state.
#[derive(Debug, Clone, PartialEq)]
pub struct CauchySchwarzReport {
    /// `max(0, |φ(a*b)|² − φ(a*a)·φ(b*b))`.
    pub residual: L0Element,
    /// `|φ(a*b) − conj(φ(b*a))|`.
    pub conjugate_symmetry: L0Element,
}

pub fn cauchy_schwarz_residual(phi: &StateBundle, a: &Section, b: &Section) -> Result<CauchySchwarzReport> {
    let ab = state_eval(phi, &a.adjoint().mul(b)?)?;
    let ba = state_eval(phi, &b.adjoint().mul(a)?)?;
    let aa = state_eval(phi, &a.adjoint().mul(a)?)?;
    let bb = state_eval(phi, &b.adjoint().mul(b)?)?;
    let space = phi.space();
    let residual = L0Element::from_fn_real(space, |i| {
        (ab.value(i).norm_sqr() - aa.value(i).re * bb.value(i).re).max(0.0)
    });
    let conjugate_symmetry = L0Element::from_fn_real(space, |i| (ab.value(i) - ba.value(i).conj()).norm());
    Ok(CauchySchwarzReport {
        residual,
        conjugate_symmetry,
    })
}

/// Worst residuals of the norm and positivity properties of states,
/// maximized over atoms and random samples.
#[derive(Debug, Clone, PartialEq)]
pub struct StateNormReport {
    pub samples: usize,
    pub seed: u64,
    /// Violation of `|φ(x)|² ≤ φ(e)·φ(x*x)`, relative to `max(1, rhs)`.
    pub chain_lower: f64,
    /// Violation of `φ(e)·φ(x*x) ≤ φ(e)²·‖x‖²`, relative to `max(1, rhs)`.
    pub chain_upper: f64,
    /// `|‖f‖ − f(e)|` for the positive functional `f = α·φ`.
    pub positive_norm: Option<f64>,
    /// `|‖αφ + βψ‖ − (α‖φ‖ + β‖ψ‖)|`.
    pub additivity: Option<f64>,
}

/// Runs the norm/positivity suite for `φ, ψ` with coefficients `α, β ≥ 0`:
/// the bound chain on `samples` random `x`, the norm of a positive
/// functional equal to its value at `e`, and additivity of the norm on
/// positive combinations. The last two need matrix fibers.
pub fn state_norm_suite(
    phi: &StateBundle,
    psi: &StateBundle,
    alpha: &L0Element,
    beta: &L0Element,
    samples: usize,
    seed: u64,
) -> Result<StateNormReport> {
    ensure_same_space(phi.space(), psi.space())?;
    if !alpha.is_real() || !beta.is_real() || alpha.values().iter().chain(beta.values()).any(|z| z.re < 0.0) {
        return Err(Error::Domain("coefficients must be real and nonnegative".into()));
    }
    let space = phi.space().clone();
    let kind = phi.kind();
    let mut rng = random::rng_for(seed, 0);
    let e = Section::unit(&space, kind);
    let mut chain_lower: f64 = 0.0;
    let mut chain_upper: f64 = 0.0;
    for _ in 0..samples {
        let x = match kind {
            FiberKind::TrigPoly { max_degree } => random::section(&mut rng, &space, kind, max_degree / 2),
            _ => random::section(&mut rng, &space, kind, 0),
        };
        for st in [phi, psi] {
            let px = state_eval(st, &x)?;
            let pxx = state_eval(st, &x.adjoint().mul(&x)?)?;
            let pe = state_eval(st, &e)?;
            let norms = x.norm();
            for i in 0..space.len() {
                let lower = px.value(i).norm_sqr();
                let mid = pe.value(i).re * pxx.value(i).re;
                let xn = match &x.at(i) {
                    FiberElement::TrigPoly(p) => {
                        norms.re(i) / (1.0 - TrigPolyFiberElement::grid_error_bound(p.degree()))
                    }
                    _ => norms.re(i),
                };
                let upper = pe.value(i).re.powi(2) * xn * xn;
                chain_lower = chain_lower.max((lower - mid).max(0.0) / mid.max(1.0));
                chain_upper = chain_upper.max((mid - upper).max(0.0) / upper.max(1.0));
            }
        }
    }
    let (positive_norm, additivity) = match kind {
        FiberKind::Matrix { .. } => {
            let fphi = phi.to_functional()?;
            let fpsi = psi.to_functional()?;
            let zero = L0Element::zero(&space);
            let scaled = L0Functional::combine(alpha, &fphi, &zero, &fpsi)?;
            let n = functional_norm(&scaled);
            let at_e = scaled.eval(&e)?;
            let pos = (0..space.len())
                .map(|i| (n.re(i) - at_e.value(i).re).abs())
                .fold(0.0, f64::max);
            let comb = functional_norm(&L0Functional::combine(alpha, &fphi, beta, &fpsi)?);
            let nphi = functional_norm(&fphi);
            let npsi = functional_norm(&fpsi);
            let add = (0..space.len())
                .map(|i| (comb.re(i) - (alpha.re(i) * nphi.re(i) + beta.re(i) * npsi.re(i))).abs())
                .fold(0.0, f64::max);
            (Some(pos), Some(add))
        }
        FiberKind::TrigPoly { .. } => (None, None),
    };
    Ok(StateNormReport {
        samples,
        seed,
        chain_lower,
        chain_upper,
        positive_norm,
        additivity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fiber::MatrixFiberElement;
    use crate::measure::AtomicMeasureSpace;

    #[test]
    fn states_take_value_one_at_unit() {
        let s = AtomicMeasureSpace::uniform(3).unwrap();
        let mut rng = random::rng_for(1, 0);
        let phi = StateBundle::random(&mut rng, &s, 3);
        let v = state_eval(&phi, &Section::unit(&s, phi.kind())).unwrap();
        for z in v.values() {
            assert!((z - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
        let leb = StateBundle::lebesgue(&s, 4).unwrap();
        assert_eq!(state_eval(&leb, &Section::unit(&s, leb.kind())).unwrap().re_values(), vec![1.0; 3]);
    }

    #[test]
    fn canonical_trace_is_normalized_trace() {
        let s = AtomicMeasureSpace::uniform(2).unwrap();
        let tau = StateBundle::canonical_trace(&s, 4).unwrap();
        let mut rng = random::rng_for(2, 0);
        let x = random::section(&mut rng, &s, tau.kind(), 0);
        let v = state_eval(&tau, &x).unwrap();
        for i in 0..2 {
            let want = x.at(i).as_matrix().unwrap().entries.trace() / 4.0;
            assert!((v.value(i) - want).norm() < 1e-14);
        }
    }

    #[test]
    fn lebesgue_kills_nonzero_modes() {
        let s = AtomicMeasureSpace::uniform(2).unwrap();
        let leb = StateBundle::lebesgue(&s, 3).unwrap();
        let x = Section::from_fn(&s, leb.kind(), |_| FiberElement::TrigPoly(TrigPolyFiberElement::mode(1))).unwrap();
        assert_eq!(state_eval(&leb, &x).unwrap(), L0Element::zero(&s));
        let pm = StateBundle::new(&s, leb.kind(), vec![FiberState::PointMass(0.25); 2]).unwrap();
        let v = state_eval(&pm, &x).unwrap();
        assert!((v.value(0) - Complex64::new(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn construction_rejects_non_states() {
        let s = AtomicMeasureSpace::uniform(2).unwrap();
        let mut bad = CMatrix::identity(2, 2).map(|z| z * 0.6);
        let err = StateBundle::from_densities(&s, vec![CMatrix::identity(2, 2) / Complex64::new(2.0, 0.0), bad.clone()]);
        match err {
            Err(Error::AtAtom { atom, reason }) => {
                assert_eq!(atom, "w1");
                assert!(reason.contains("unit value"));
            }
            other => panic!("unexpected {other:?}"),
        }
        bad[(0, 0)] = Complex64::new(1.5, 0.0);
        bad[(1, 1)] = Complex64::new(-0.5, 0.0);
        let err = StateBundle::from_densities(&s, vec![bad.clone(), bad]).unwrap_err();
        assert!(err.to_string().contains("positivity"));
        let kind = FiberKind::trigpoly(2).unwrap();
        let mix = FiberState::Mixture { weights: vec![0.5, 0.6], points: vec![0.0, 0.5] };
        assert!(StateBundle::new(&s, kind, vec![mix, FiberState::Lebesgue]).is_err());
    }

    #[test]
    fn functional_norms() {
        let s = AtomicMeasureSpace::uniform(2).unwrap();
        let mut rng = random::rng_for(3, 0);
        let phi = StateBundle::random(&mut rng, &s, 3);
        let n = functional_norm(&phi.to_functional().unwrap());
        for i in 0..2 {
            assert!((n.re(i) - 1.0).abs() < 1e-12);
        }
        let zero = L0Functional::new(&s, vec![CMatrix::zeros(3, 3); 2]).unwrap();
        assert_eq!(functional_norm(&zero), L0Element::zero(&s));
    }

    #[test]
    fn cauchy_schwarz_equality_case() {
        let s = AtomicMeasureSpace::uniform(3).unwrap();
        let mut rng = random::rng_for(4, 0);
        let phi = StateBundle::random(&mut rng, &s, 2);
        let a = random::section(&mut rng, &s, phi.kind(), 0);
        let r = cauchy_schwarz_residual(&phi, &a, &a).unwrap();
        assert!(r.residual.values().iter().all(|z| z.re <= 1e-12));
    }

    #[test]
    fn convex_half_half_is_a_state() {
        let s = AtomicMeasureSpace::uniform(2).unwrap();
        let mut rng = random::rng_for(5, 0);
        let phi = StateBundle::random(&mut rng, &s, 2);
        let psi = StateBundle::random(&mut rng, &s, 2);
        let half = L0Element::constant(&s, 0.5);
        let mix = StateBundle::convex(&half, &phi, &half, &psi).unwrap();
        let x = Section::constant_matrix(&s, &MatrixFiberElement::unit(2, 0, 0)).unwrap();
        let v = state_eval(&mix, &x).unwrap();
        let want = state_eval(&phi, &x).unwrap().add(&state_eval(&psi, &x).unwrap()).unwrap().scale_real(0.5);
        for i in 0..2 {
            assert!((v.value(i) - want.value(i)).norm() < 1e-14);
        }
        let r = state_norm_suite(&phi, &psi, &L0Element::one(&s), &L0Element::zero(&s), 5, 1).unwrap();
        assert!(r.additivity.unwrap() < 1e-12);
    }
}
