//! Markov operators as measurable bundles of unital positive maps.
//!
//! A [`UnitalMapBundle`] only promises `T_ω(e) = e`. A [`MarkovBundle`] is a
//! unital bundle whose positivity has been certified at construction, either
//! structurally (Kraus form, rotation, positive-definite multiplier) or by a
//! seeded randomized test on raw superoperators.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::bundle::{matrix_unit_probes, Section};
use crate::error::{Error, Result};
use crate::fiber::matrix::{min_eigenvalue, trace_norm, unvec_columns, vec_columns};
use crate::fiber::{CMatrix, FiberElement, FiberKind, MatrixFiberElement, TrigPolyFiberElement};
use crate::measure::{ensure_same_space, L0Element, SpaceRef};
use crate::random;
use crate::states::{state_eval, StateBundle};

/// Unitality tolerance `‖T(e) − e‖ ≤ UNITAL_TOL`.
pub const UNITAL_TOL: f64 = 1e-10;
/// Random samples per atom in the positivity test of raw superoperators.
pub const POSITIVITY_SAMPLES: usize = 200;
/// Slack when testing `T(x*x) ≥ 0` for `‖x‖ = 1`.
pub const POSITIVITY_TOL: f64 = 1e-10;

/// A map on a single fiber.
#[derive(Debug, Clone, PartialEq)]
pub enum FiberMap {
    /// `d²×d²` matrix acting on column-stacked `vec(x)`.
    Superoperator(CMatrix),
    /// `x ↦ Σ_i A_i x A_i†`.
    Kraus(Vec<CMatrix>),
    /// `x(t) ↦ x(t + α mod 1)`, i.e. `c_k ↦ e^{2πikα} c_k`.
    Rotation(f64),
    /// `c_k ↦ m_|k| c_k` (conjugated for `k < 0`); lists `m_0, …, m_L`.
    Multiplier(Vec<Complex64>),
}

impl FiberMap {
    pub fn identity(kind: FiberKind) -> Self {
        match kind {
            FiberKind::Matrix { dim } => FiberMap::Kraus(vec![CMatrix::identity(dim, dim)]),
            FiberKind::TrigPoly { .. } => FiberMap::Rotation(0.0),
        }
    }

    pub fn apply(&self, x: &FiberElement) -> Result<FiberElement> {
        match (self, x) {
            (FiberMap::Superoperator(m), FiberElement::Matrix(a)) => {
                let d = a.dim();
                if m.nrows() != d * d {
                    return Err(Error::DimensionMismatch(format!(
                        "superoperator of size {} applied to a {d}x{d} matrix",
                        m.nrows()
                    )));
                }
                Ok(FiberElement::Matrix(MatrixFiberElement {
                    entries: unvec_columns(&(m * vec_columns(&a.entries)), d),
                }))
            }
            (FiberMap::Kraus(ks), FiberElement::Matrix(a)) => {
                let d = a.dim();
                let mut out = CMatrix::zeros(d, d);
                for k in ks {
                    if k.nrows() != d || k.ncols() != d {
                        return Err(Error::DimensionMismatch("Kraus operator shape".into()));
                    }
                    out += k * &a.entries * k.adjoint();
                }
                Ok(FiberElement::Matrix(MatrixFiberElement { entries: out }))
            }
            (FiberMap::Rotation(alpha), FiberElement::TrigPoly(p)) => {
                Ok(FiberElement::TrigPoly(p.map_coeffs(|k, c| c * rotation_phase(*alpha, k))))
            }
            (FiberMap::Multiplier(m), FiberElement::TrigPoly(p)) => {
                if p.degree() >= m.len() {
                    return Err(Error::DegreeBudget {
                        needed: p.degree(),
                        budget: m.len().saturating_sub(1),
                    });
                }
                Ok(FiberElement::TrigPoly(p.map_coeffs(|k, c| c * multiplier_at(m, k))))
            }
            _ => Err(Error::KindMismatch {
                expected: self.describe().into(),
                found: x.describe(),
            }),
        }
    }

    fn describe(&self) -> &'static str {
        match self {
            FiberMap::Superoperator(_) | FiberMap::Kraus(_) => "matrix map",
            FiberMap::Rotation(_) | FiberMap::Multiplier(_) => "trigpoly map",
        }
    }

    /// Column-stacking superoperator of a map on `M_d`.
    pub fn superoperator(&self, d: usize) -> Result<CMatrix> {
        match self {
            FiberMap::Superoperator(m) => Ok(m.clone()),
            FiberMap::Kraus(ks) => Ok(ks.iter().fold(CMatrix::zeros(d * d, d * d), |acc, a| {
                acc + a.map(|z| z.conj()).kronecker(a)
            })),
            _ => Err(Error::Unsupported("superoperator of a trigpoly map")),
        }
    }

    fn admits(&self, kind: &FiberKind) -> Result<()> {
        let ok = match (self, kind) {
            (FiberMap::Superoperator(m), FiberKind::Matrix { dim }) => {
                m.nrows() == dim * dim && m.ncols() == dim * dim
            }
            (FiberMap::Kraus(ks), FiberKind::Matrix { dim }) => {
                !ks.is_empty() && ks.iter().all(|k| k.nrows() == *dim && k.ncols() == *dim)
            }
            (FiberMap::Rotation(a), FiberKind::TrigPoly { .. }) => a.is_finite(),
            (FiberMap::Multiplier(m), FiberKind::TrigPoly { max_degree }) => m.len() > *max_degree,
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::KindMismatch {
                expected: kind.to_string(),
                found: self.describe().into(),
            })
        }
    }
}

/// `e^{2πikα}`.
pub fn rotation_phase(alpha: f64, k: i64) -> Complex64 {
    // Reduce kα mod 1 first so large k·α keeps full precision in the angle.
    let x = (k as f64 * alpha).rem_euclid(1.0);
    Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * x)
}

fn multiplier_at(m: &[Complex64], k: i64) -> Complex64 {
    let v = m[k.unsigned_abs() as usize];
    if k < 0 {
        v.conj()
    } else {
        v
    }
}

/// A bundle of unital maps `{T_ω}`; positivity is not assumed.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitalMapBundle {
    space: SpaceRef,
    kind: FiberKind,
    maps: Vec<FiberMap>,
}

impl UnitalMapBundle {
    pub fn new(space: &SpaceRef, kind: FiberKind, maps: Vec<FiberMap>) -> Result<Self> {
        if maps.len() != space.len() {
            return Err(Error::DimensionMismatch(format!(
                "map bundle has {} maps for {} atoms",
                maps.len(),
                space.len()
            )));
        }
        let e = kind.unit();
        for (i, m) in maps.iter().enumerate() {
            let atom = space.atom_id(i);
            m.admits(&kind).map_err(|err| Error::at_atom(atom, err.to_string()))?;
            let te = m.apply(&e).map_err(|err| Error::at_atom(atom, err.to_string()))?;
            let r = te.distance(&e, &kind)?;
            if r > UNITAL_TOL {
                return Err(Error::at_atom(atom, format!("map is not unital: ‖T(e) − e‖ = {r:e}")));
            }
        }
        Ok(UnitalMapBundle {
            space: space.clone(),
            kind,
            maps,
        })
    }

    pub fn space(&self) -> &SpaceRef {
        &self.space
    }

    pub fn kind(&self) -> FiberKind {
        self.kind
    }

    pub fn maps(&self) -> &[FiberMap] {
        &self.maps
    }

    pub fn apply(&self, x: &Section) -> Result<Section> {
        ensure_same_space(&self.space, x.space())?;
        if x.kind() != self.kind {
            return Err(Error::KindMismatch {
                expected: self.kind.to_string(),
                found: x.kind().to_string(),
            });
        }
        let elems = self
            .maps
            .iter()
            .zip(x.elems())
            .enumerate()
            .map(|(i, (m, e))| {
                m.apply(e).map_err(|err| match err {
                    Error::DegreeBudget { .. } => err,
                    other => Error::at_atom(self.space.atom_id(i), other.to_string()),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Section::new(&self.space, self.kind, elems)
    }

    /// Per-atom superoperators (matrix kind only).
    pub fn superoperators(&self) -> Result<Vec<CMatrix>> {
        let d = self.kind.matrix_dim()?;
        self.maps.iter().map(|m| m.superoperator(d)).collect()
    }

    /// Sampled lower estimate of `‖T_ω‖ = sup{‖T_ω x‖ : ‖x‖ ≤ 1}` at each atom.
    ///
    /// The sample set always contains `e`, every diagonal sign matrix (for
    /// `d ≤ 8`), and `samples` random elements alternating between the
    /// unit sphere and self-adjoint unitaries.
    pub fn norm_estimate(&self, samples: usize, seed: u64) -> Result<NormEstimate> {
        let d = self.kind.matrix_dim()?;
        let values: Vec<f64> = self
            .maps
            .par_iter()
            .enumerate()
            .map(|(i, m)| {
                let mut rng = random::rng_for(seed, i as u64);
                let mut best: f64 = 0.0;
                let mut probe = |x: CMatrix| -> Result<()> {
                    let tx = m.apply(&FiberElement::Matrix(MatrixFiberElement { entries: x }))?;
                    best = best.max(tx.norm());
                    Ok(())
                };
                probe(CMatrix::identity(d, d))?;
                if d <= 8 {
                    for mask in 1u32..(1u32 << d) {
                        let diag: Vec<f64> =
                            (0..d).map(|b| if mask & (1 << b) != 0 { -1.0 } else { 1.0 }).collect();
                        probe(MatrixFiberElement::from_real_diagonal(&diag).entries)?;
                    }
                }
                for s in 0..samples {
                    let x = if s % 2 == 0 {
                        random::unit_ball_matrix(&mut rng, d)
                    } else {
                        random::self_adjoint_unitary(&mut rng, d)
                    };
                    probe(x)?;
                }
                Ok(best)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(NormEstimate {
            sampled: L0Element::new_real(&self.space, &values)?,
            exact_one: false,
            samples,
            seed,
        })
    }
}

/// Result of [`UnitalMapBundle::norm_estimate`].
#[derive(Debug, Clone, PartialEq)]
pub struct NormEstimate {
    /// Largest `‖T_ω x‖` seen over the sample set.
    pub sampled: L0Element,
    /// Set when `T` is a certified Markov bundle, so `‖T_ω‖ = 1` exactly.
    pub exact_one: bool,
    pub samples: usize,
    pub seed: u64,
}

impl NormEstimate {
    /// The reported norm: `1` when certified, the sampled estimate otherwise.
    pub fn value(&self, atom: usize) -> f64 {
        if self.exact_one {
            1.0
        } else {
            self.sampled.re(atom)
        }
    }
}

/// How positivity of `T_ω` was established.
#[derive(Debug, Clone, PartialEq)]
pub enum PositivityCertificate {
    /// Completely positive by its Kraus form.
    Kraus,
    /// Translation on the torus.
    Rotation,
    /// Toeplitz matrix of the multiplier sequence is positive semidefinite,
    /// so the multiplier is convolution with a probability measure.
    ToeplitzMultiplier,
    /// `T(x*x) ≥ 0` held on `samples` random `x`.
    Randomized { seed: u64, samples: usize, min_eigenvalue: f64 },
}

/// Outcome of the randomized positivity test on one fiber.
#[derive(Debug, Clone, PartialEq)]
pub struct PositivityProbe {
    pub positive: bool,
    /// Smallest eigenvalue of `T(x*x)` over the samples.
    pub min_eigenvalue: f64,
    /// The `x*x` attaining it.
    pub witness: CMatrix,
}

/// Tests `T(x*x) ≥ 0` on `samples` random `x` with `‖x‖ = 1`; half the
/// samples are rank-one projections.
pub fn randomized_positivity<R: Rng>(map: &FiberMap, d: usize, samples: usize, rng: &mut R) -> Result<PositivityProbe> {
    let mut worst = f64::INFINITY;
    let mut witness = CMatrix::identity(d, d);
    for s in 0..samples {
        let p = if s % 2 == 0 {
            let x = random::unit_ball_matrix(rng, d);
            x.adjoint() * x
        } else {
            let v = crate::fiber::CVector::from_fn(d, |_, _| random::complex_normal(rng));
            let v = v.unscale(v.norm());
            &v * v.adjoint()
        };
        let out = map.apply(&FiberElement::Matrix(MatrixFiberElement { entries: p.clone() }))?;
        let m = min_eigenvalue(&out.as_matrix()?.entries);
        if m < worst {
            worst = m;
            witness = p;
        }
    }
    Ok(PositivityProbe {
        positive: worst >= -POSITIVITY_TOL,
        min_eigenvalue: worst,
        witness,
    })
}

fn toeplitz_min_eigenvalue(m: &[Complex64]) -> f64 {
    let n = m.len();
    let t = DMatrix::from_fn(n, n, |i, j| multiplier_at(m, i as i64 - j as i64));
    min_eigenvalue(&t)
}

/// A bundle of Markov operators: unital maps with certified positivity.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovBundle {
    map: UnitalMapBundle,
    certificates: Vec<PositivityCertificate>,
}

impl MarkovBundle {
    /// Certifies positivity at every atom; `seed` drives the randomized test
    /// used for raw superoperators.
    pub fn certify(map: UnitalMapBundle, seed: u64) -> Result<Self> {
        let d = map.kind.matrix_dim().ok();
        let certificates = map
            .maps
            .iter()
            .enumerate()
            .map(|(i, m)| {
                let atom = map.space.atom_id(i);
                match m {
                    FiberMap::Kraus(_) => Ok(PositivityCertificate::Kraus),
                    FiberMap::Rotation(_) => Ok(PositivityCertificate::Rotation),
                    FiberMap::Multiplier(seq) => {
                        let ev = toeplitz_min_eigenvalue(seq);
                        if ev >= -POSITIVITY_TOL {
                            Ok(PositivityCertificate::ToeplitzMultiplier)
                        } else {
                            Err(Error::at_atom(
                                atom,
                                format!("multiplier is not positive definite (Toeplitz eigenvalue {ev:e})"),
                            ))
                        }
                    }
                    FiberMap::Superoperator(_) => {
                        let mut rng = random::rng_for(seed, i as u64);
                        let probe = randomized_positivity(m, d.expect("matrix kind"), POSITIVITY_SAMPLES, &mut rng)?;
                        if probe.positive {
                            Ok(PositivityCertificate::Randomized {
                                seed,
                                samples: POSITIVITY_SAMPLES,
                                min_eigenvalue: probe.min_eigenvalue,
                            })
                        } else {
                            Err(Error::at_atom(
                                atom,
                                format!("map is not positive: T(x*x) has eigenvalue {:e}", probe.min_eigenvalue),
                            ))
                        }
                    }
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MarkovBundle { map, certificates })
    }

    pub fn new(space: &SpaceRef, kind: FiberKind, maps: Vec<FiberMap>, seed: u64) -> Result<Self> {
        Self::certify(UnitalMapBundle::new(space, kind, maps)?, seed)
    }

    pub fn identity(space: &SpaceRef, kind: FiberKind) -> Self {
        Self::new(space, kind, vec![FiberMap::identity(kind); space.len()], 0)
            .expect("identity is a Markov operator")
    }

    pub fn from_kraus(space: &SpaceRef, dim: usize, kraus: Vec<Vec<CMatrix>>) -> Result<Self> {
        Self::new(space, FiberKind::matrix(dim)?, kraus.into_iter().map(FiberMap::Kraus).collect(), 0)
    }

    pub fn rotations(space: &SpaceRef, max_degree: usize, alphas: &L0Element) -> Result<Self> {
        if !alphas.is_real() {
            return Err(Error::Domain("rotation angles must be real".into()));
        }
        Self::new(
            space,
            FiberKind::trigpoly(max_degree)?,
            alphas.re_values().into_iter().map(FiberMap::Rotation).collect(),
            0,
        )
    }

    pub fn random<R: Rng>(rng: &mut R, space: &SpaceRef, dim: usize, kraus_count: usize) -> Self {
        let kraus = (0..space.len()).map(|_| random::unital_kraus(rng, dim, kraus_count)).collect();
        Self::from_kraus(space, dim, kraus).expect("random unital Kraus maps are Markov")
    }

    pub fn as_unital(&self) -> &UnitalMapBundle {
        &self.map
    }

    pub fn certificates(&self) -> &[PositivityCertificate] {
        &self.certificates
    }

    pub fn space(&self) -> &SpaceRef {
        &self.map.space
    }

    pub fn kind(&self) -> FiberKind {
        self.map.kind
    }

    pub fn maps(&self) -> &[FiberMap] {
        &self.map.maps
    }

    pub fn superoperators(&self) -> Result<Vec<CMatrix>> {
        self.map.superoperators()
    }

    pub fn norm_estimate(&self, samples: usize, seed: u64) -> Result<NormEstimate> {
        let mut est = self.map.norm_estimate(samples, seed)?;
        est.exact_one = true;
        Ok(est)
    }
}

/// `T̂x̂ = (T_ω x(ω))^`.
pub fn markov_apply(t: &MarkovBundle, x: &Section) -> Result<Section> {
    t.map.apply(x)
}

pub fn markov_norm_estimate(t: &MarkovBundle, samples: usize, seed: u64) -> Result<NormEstimate> {
    t.norm_estimate(samples, seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Consistent,
    Violated,
}

/// Per-atom record of [`positivity_criterion_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct CriterionOutcome {
    pub atom: String,
    pub positive: bool,
    pub min_eigenvalue: f64,
    pub witness: CMatrix,
    pub norm_estimate: f64,
    /// A structural form (Kraus) bounds the norm by one.
    pub certified_norm_one: bool,
    pub verdict: Verdict,
}

/// Checks both directions of "a unital map is positive iff its norm is one".
///
/// At each atom runs the randomized positivity test and the sampled norm
/// estimate. The atom is `Violated` when the map tests positive yet has
/// sampled norm above `1 + tol`, or tests non-positive while a structural
/// certificate bounds its norm by one.
pub fn positivity_criterion_check(
    t: &UnitalMapBundle,
    tol: f64,
    samples: usize,
    seed: u64,
) -> Result<Vec<CriterionOutcome>> {
    let d = t.kind.matrix_dim()?;
    let est = t.norm_estimate(samples, seed)?;
    t.maps
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let mut rng = random::rng_for(seed ^ 0x9e37_79b9_7f4a_7c15, i as u64);
            let probe = randomized_positivity(m, d, POSITIVITY_SAMPLES, &mut rng)?;
            let norm = est.sampled.re(i);
            let certified = matches!(m, FiberMap::Kraus(_));
            let violated = (probe.positive && norm > 1.0 + tol) || (!probe.positive && norm <= 1.0 + tol && certified);
            Ok(CriterionOutcome {
                atom: t.space.atom_id(i).to_string(),
                positive: probe.positive,
                min_eigenvalue: probe.min_eigenvalue,
                witness: probe.witness,
                norm_estimate: norm,
                certified_norm_one: certified,
                verdict: if violated { Verdict::Violated } else { Verdict::Consistent },
            })
        })
        .collect()
}

/// Per-atom `sup_{‖x‖≤1} |φ(Tx) − φ(x)|`.
#[derive(Debug, Clone, PartialEq)]
pub struct InvarianceReport {
    pub residual: L0Element,
    /// Matrix kind only: the same quantity through the trace dual,
    /// `‖T†(ρ) − ρ‖₁`.
    pub dual_residual: Option<L0Element>,
}

/// Tolerance for agreement of the two routes in [`invariance_residual`].
pub const DUALITY_TOL: f64 = 1e-9;

/// Measures how far `φ∘T` is from `φ`.
///
/// Matrix kind: evaluates `φ(T E_ij) − φ(E_ij)` on matrix units, assembles
/// the functional `x ↦ tr(Dx)` it defines, and reports `‖D‖₁`; the trace
/// dual `T†(ρ) − ρ` is computed independently from the superoperator and
/// the two must agree within [`DUALITY_TOL`]. Trigpoly kind: maximum of
/// `|φ(T e_k) − φ(e_k)|` over all modes within the degree budget.
pub fn invariance_residual(phi: &StateBundle, t: &MarkovBundle) -> Result<InvarianceReport> {
    ensure_same_space(phi.space(), t.space())?;
    let space = phi.space().clone();
    match t.kind() {
        FiberKind::Matrix { dim } => {
            let mut diff = vec![CMatrix::zeros(dim, dim); space.len()];
            for ((i, j), probe) in matrix_unit_probes(&space, dim) {
                let v = state_eval(phi, &markov_apply(t, &probe)?)?.sub(&state_eval(phi, &probe)?)?;
                for (a, d) in diff.iter_mut().enumerate() {
                    d[(j, i)] = v.value(a);
                }
            }
            let residual = L0Element::from_fn_real(&space, |a| trace_norm(&diff[a]));
            let sups = t.superoperators()?;
            let dual = L0Element::from_fn_real(&space, |a| {
                let rho = phi.density(a).expect("matrix kind");
                let pulled = trace_dual(&sups[a], rho, dim);
                trace_norm(&(pulled - rho))
            });
            for a in 0..space.len() {
                let gap = (residual.re(a) - dual.re(a)).abs();
                if gap > DUALITY_TOL {
                    return Err(Error::Verification(format!(
                        "invariance routes disagree at atom {} by {gap:e}",
                        space.atom_id(a)
                    )));
                }
            }
            Ok(InvarianceReport {
                residual,
                dual_residual: Some(dual),
            })
        }
        FiberKind::TrigPoly { max_degree } => {
            let kind = t.kind();
            let mut worst = vec![0.0f64; space.len()];
            for k in -(max_degree as i64)..=(max_degree as i64) {
                let probe = Section::from_fn(&space, kind, |_| {
                    FiberElement::TrigPoly(TrigPolyFiberElement::mode(k))
                })?;
                let v = state_eval(phi, &markov_apply(t, &probe)?)?.sub(&state_eval(phi, &probe)?)?;
                for (w, z) in worst.iter_mut().zip(v.values()) {
                    *w = w.max(z.norm());
                }
            }
            Ok(InvarianceReport {
                residual: L0Element::new_real(&space, &worst)?,
                dual_residual: None,
            })
        }
    }
}

/// `T†(ρ)`, defined by `tr(ρ·T(x)) = tr(T†(ρ)·x)`, from the column-stacking
/// superoperator: `T†(ρ) = unvec(Mᵀ·vec(ρᵀ))ᵀ`.
pub fn trace_dual(superop: &CMatrix, rho: &CMatrix, d: usize) -> CMatrix {
    unvec_columns(&(superop.transpose() * vec_columns(&rho.transpose())), d).transpose()
}

/// Spectral norm of every `T_ω x(ω)` (used for contractivity checks).
pub fn image_norms(t: &MarkovBundle, x: &Section) -> Result<L0Element> {
    Ok(markov_apply(t, x)?.norm())
}

/// `x ↦ 2τ(x)e − x` on `M_d` as a raw superoperator: unital, and not
/// positive for `d ≥ 3`.
pub fn reflected_trace_map(d: usize) -> FiberMap {
    let mut m = CMatrix::zeros(d * d, d * d);
    for a in 0..d {
        for b in 0..d {
            m[(a + a * d, b + b * d)] += Complex64::new(2.0 / d as f64, 0.0);
        }
    }
    for k in 0..d * d {
        m[(k, k)] -= Complex64::new(1.0, 0.0);
    }
    FiberMap::Superoperator(m)
}
