//! Cesàro averages of Markov bundles, ergodic deviation metrics, fixed-point
//! spaces and the two model systems (a two-qubit channel family and the
//! irrational rotation with Lebesgue state).

use std::fmt::Write as _;

use nalgebra::linalg::Schur;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::bundle::{section_norm, Section};
use crate::error::{Error, Result};
use crate::fiber::matrix::{conditional_expectation, matrix_exp, spectral_norm, tensor, unvec_columns, vec_columns};
use crate::fiber::{CMatrix, FiberElement, FiberKind, MatrixFiberElement, TrigPolyFiberElement};
use crate::markov::{
    invariance_residual, markov_apply, rotation_phase, FiberMap, InvarianceReport, MarkovBundle,
};
use crate::measure::{ensure_same_space, ess_sup, L0Element, SpaceRef};
use crate::states::{state_eval, StateBundle};

/// Default logarithmic grid of averaging lengths.
pub const DEFAULT_N_GRID: [usize; 10] = [1, 2, 5, 10, 20, 50, 100, 200, 500, 1000];
/// Slack allowed in `sup_ω deviation ≤ ‖deviation‖_∞`.
pub const UNIFORM_SLACK: f64 = 1e-12;
/// Largest `|β|` accepted by [`build_example1`]; `cosh 2β` overflows soon after.
pub const MAX_BETA: f64 = 300.0;
/// Side-condition tolerance `‖ℰ(VV*) − e‖ ≤ SIDE_TOL`.
pub const SIDE_TOL: f64 = 1e-10;
/// Agreement between Kraus form and the direct formula on matrix units.
pub const KRAUS_TOL: f64 = 1e-12;

/// A state-preserving system `(𝒰, φ, T)` over `L0`.
#[derive(Debug, Clone)]
pub struct DynamicalSystemBundle {
    descriptor: String,
    state: StateBundle,
    markov: MarkovBundle,
    invariance_tol: f64,
    invariance: InvarianceReport,
}

impl DynamicalSystemBundle {
    /// Pairs `φ` with `T`, requiring `|φ(Tx) − φ(x)| ≤ invariance_tol·‖x‖`
    /// at every atom.
    pub fn new(descriptor: impl Into<String>, state: StateBundle, markov: MarkovBundle, invariance_tol: f64) -> Result<Self> {
        ensure_same_space(state.space(), markov.space())?;
        if state.kind() != markov.kind() {
            return Err(Error::KindMismatch {
                expected: state.kind().to_string(),
                found: markov.kind().to_string(),
            });
        }
        let invariance = invariance_residual(&state, &markov)?;
        for a in 0..state.space().len() {
            let r = invariance.residual.re(a);
            if r > invariance_tol {
                return Err(Error::at_atom(
                    state.space().atom_id(a),
                    format!("state is not invariant: residual {r:e} exceeds {invariance_tol:e}"),
                ));
            }
        }
        Ok(DynamicalSystemBundle {
            descriptor: descriptor.into(),
            state,
            markov,
            invariance_tol,
            invariance,
        })
    }

    pub fn descriptor(&self) -> &str {
        &self.descriptor
    }

    pub fn state(&self) -> &StateBundle {
        &self.state
    }

    pub fn markov(&self) -> &MarkovBundle {
        &self.markov
    }

    pub fn space(&self) -> &SpaceRef {
        self.state.space()
    }

    pub fn kind(&self) -> FiberKind {
        self.state.kind()
    }

    pub fn invariance_tol(&self) -> f64 {
        self.invariance_tol
    }

    pub fn invariance(&self) -> &InvarianceReport {
        &self.invariance
    }
}

fn check_grid(grid: &[usize]) -> Result<()> {
    if grid.is_empty() || grid[0] == 0 || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain(format!(
            "averaging grid must be nonempty, start at n ≥ 1 and increase strictly: {grid:?}"
        )));
    }
    Ok(())
}

/// Per-atom running Cesàro sums, snapshotted at each `n` in `grid`.
/// Returns `[grid index][atom]`.
fn cesaro_tracks(t: &MarkovBundle, x: &Section, grid: &[usize]) -> Result<Vec<Vec<FiberElement>>> {
    check_grid(grid)?;
    ensure_same_space(t.space(), x.space())?;
    let kind = t.kind();
    let per_atom = t
        .maps()
        .par_iter()
        .zip(x.elems().par_iter())
        .enumerate()
        .map(|(a, (m, x0))| {
            let mut cur = x0.clone();
            let mut sum = x0.clone();
            let mut out = Vec::with_capacity(grid.len());
            let mut next = 0;
            for n in 1..=*grid.last().expect("nonempty") {
                if n > 1 {
                    cur = m.apply(&cur).map_err(|e| Error::at_atom(t.space().atom_id(a), e.to_string()))?;
                    sum = kind.add(&sum, &cur)?;
                }
                if n == grid[next] {
                    out.push(sum.scale(Complex64::new(1.0 / n as f64, 0.0)));
                    next += 1;
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((0..grid.len())
        .map(|g| per_atom.iter().map(|track| track[g].clone()).collect())
        .collect())
}

/// `(1/n)·Σ_{k<n} T^k x`, by iterated application with a running sum.
pub fn cesaro_average(t: &MarkovBundle, x: &Section, n: usize) -> Result<Section> {
    Ok(cesaro_sweep(t, x, &[n])?.pop().expect("one grid point"))
}

/// Cesàro averages at every `n` of a strictly increasing grid, from a
/// single trajectory per atom.
pub fn cesaro_sweep(t: &MarkovBundle, x: &Section, grid: &[usize]) -> Result<Vec<Section>> {
    cesaro_tracks(t, x, grid)?
        .into_iter()
        .map(|elems| Section::new(t.space(), t.kind(), elems))
        .collect()
}

fn check_system_section(sys: &DynamicalSystemBundle, x: &Section) -> Result<()> {
    ensure_same_space(sys.space(), x.space())?;
    if x.kind() != sys.kind() {
        return Err(Error::KindMismatch {
            expected: sys.kind().to_string(),
            found: x.kind().to_string(),
        });
    }
    Ok(())
}

/// `|(1/n)·Σ_{k<n} φ(y·T^k x) − φ(y)·φ(x)|` at every atom.
pub fn ergodicity_deviation(sys: &DynamicalSystemBundle, x: &Section, y: &Section, n: usize) -> Result<L0Element> {
    Ok(ergodicity_sweep(sys, x, y, &[n])?.pop().expect("one grid point"))
}

pub fn ergodicity_sweep(sys: &DynamicalSystemBundle, x: &Section, y: &Section, grid: &[usize]) -> Result<Vec<L0Element>> {
    check_system_section(sys, x)?;
    check_system_section(sys, y)?;
    let target = state_eval(&sys.state, y)?.mul(&state_eval(&sys.state, x)?)?;
    cesaro_sweep(&sys.markov, x, grid)?
        .iter()
        .map(|avg| Ok(state_eval(&sys.state, &y.mul(avg)?)?.sub(&target)?.abs()))
        .collect()
}

/// `‖(1/n)·Σ_{k<n} T^k x − φ(x)·e‖` as an `L0` element.
pub fn unique_ergodicity_deviation(sys: &DynamicalSystemBundle, x: &Section, n: usize) -> Result<L0Element> {
    Ok(ue_sweep(sys, x, &[n])?.pop().expect("one grid point"))
}

/// [`unique_ergodicity_deviation`] at every grid point, computed fiberwise:
/// each atom subtracts `φ_ω(x(ω))·e` from its own average.
pub fn ue_sweep(sys: &DynamicalSystemBundle, x: &Section, grid: &[usize]) -> Result<Vec<L0Element>> {
    check_system_section(sys, x)?;
    let kind = sys.kind();
    let means = sys
        .state
        .states()
        .iter()
        .zip(x.elems())
        .map(|(s, e)| s.eval(e))
        .collect::<Result<Vec<_>>>()?;
    cesaro_tracks(&sys.markov, x, grid)?
        .iter()
        .map(|avgs| {
            let devs = avgs
                .iter()
                .zip(&means)
                .map(|(avg, m)| Ok(kind.sub(avg, &kind.unit().scale(*m))?.norm()))
                .collect::<Result<Vec<f64>>>()?;
            L0Element::new_real(sys.space(), &devs)
        })
        .collect()
}

/// Both sides of `sup_ω ‖A_n x(ω) − φ_ω(x)e‖ ≤ ‖A_n x − φ(x)e‖_∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformDeviation {
    pub n: usize,
    /// Maximum over atoms of the fiberwise deviation.
    pub sup_over_atoms: f64,
    /// Essential sup of the deviation computed with section-level
    /// operations (`T̂` applied to whole sections, `φ̂(x)·ê` subtracted).
    pub global_linf: f64,
}

/// Uniform deviations at every grid point. Fails if the sup over atoms
/// exceeds the global `L∞` deviation by more than [`UNIFORM_SLACK`].
pub fn uniform_ue_sweep(sys: &DynamicalSystemBundle, x: &Section, grid: &[usize]) -> Result<Vec<UniformDeviation>> {
    let fiberwise = ue_sweep(sys, x, grid)?;
    let space = sys.space();
    let centre = Section::unit(space, sys.kind()).l0_scale(&state_eval(&sys.state, x)?)?;
    let mut cur = x.clone();
    let mut sum = x.clone();
    let mut out = Vec::with_capacity(grid.len());
    let mut next = 0;
    for n in 1..=*grid.last().expect("checked nonempty") {
        if n > 1 {
            cur = markov_apply(&sys.markov, &cur)?;
            sum = sum.add(&cur)?;
        }
        if n == grid[next] {
            let dev = sum.scale(Complex64::new(1.0 / n as f64, 0.0)).sub(&centre)?;
            let global_linf = ess_sup(&section_norm(&dev));
            let sup_over_atoms = fiberwise[next].re_values().into_iter().fold(0.0, f64::max);
            if sup_over_atoms > global_linf + UNIFORM_SLACK {
                return Err(Error::Verification(format!(
                    "uniform deviation {sup_over_atoms:e} exceeds global deviation {global_linf:e} at n = {n}"
                )));
            }
            out.push(UniformDeviation {
                n,
                sup_over_atoms,
                global_linf,
            });
            next += 1;
        }
    }
    Ok(out)
}

/// `sup_ω` of the unique-ergodicity deviation at `n`.
pub fn uniform_ue_deviation(sys: &DynamicalSystemBundle, x: &Section, n: usize) -> Result<f64> {
    Ok(uniform_ue_sweep(sys, x, &[n])?[0].sup_over_atoms)
}

/// Per-atom orthonormal bases of `{x : T_ω x = x}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointSpace {
    pub kind: FiberKind,
    pub tol: f64,
    pub bases: Vec<Vec<FiberElement>>,
}

impl FixedPointSpace {
    pub fn dims(&self) -> Vec<usize> {
        self.bases.iter().map(Vec::len).collect()
    }
}

/// Eigenspace of each `T_ω` at eigenvalue one: right singular vectors of
/// `T_ω − id` with singular value `≤ tol` for matrix fibers, and the modes
/// with `|λ_k − 1| ≤ tol` for diagonal trigpoly maps.
pub fn fixed_point_space(t: &MarkovBundle, tol: f64) -> Result<FixedPointSpace> {
    let kind = t.kind();
    let bases = t
        .maps()
        .par_iter()
        .map(|m| match kind {
            FiberKind::Matrix { dim } => {
                let s = m.superoperator(dim)? - CMatrix::identity(dim * dim, dim * dim);
                let svd = s.svd(false, true);
                let v_t = svd.v_t.expect("requested");
                Ok(svd
                    .singular_values
                    .iter()
                    .enumerate()
                    .filter(|(_, &sv)| sv <= tol)
                    .map(|(r, _)| {
                        let v = v_t.row(r).adjoint();
                        FiberElement::Matrix(MatrixFiberElement {
                            entries: unvec_columns(&v, dim),
                        })
                    })
                    .collect())
            }
            FiberKind::TrigPoly { max_degree } => {
                let k_max = max_degree as i64;
                let probe = TrigPolyFiberElement::new(vec![Complex64::new(1.0, 0.0); 2 * max_degree + 1])?;
                let image = m.apply(&FiberElement::TrigPoly(probe))?;
                let image = image.as_trigpoly()?;
                Ok((-k_max..=k_max)
                    .filter(|&k| (image.coeff(k) - 1.0).norm() <= tol)
                    .map(|k| FiberElement::TrigPoly(TrigPolyFiberElement::mode(k)))
                    .collect())
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FixedPointSpace { kind, tol, bases })
}

fn hs_coords(x: &FiberElement) -> Result<Vec<Complex64>> {
    Ok(match x {
        FiberElement::Matrix(m) => vec_columns(&m.entries).iter().copied().collect(),
        FiberElement::TrigPoly(p) => p.coeffs().to_vec(),
    })
}

/// Per-atom membership of `x(ω)` in the fixed space: the Hilbert–Schmidt
/// (resp. `ℓ²` coefficient) distance to the span of the basis is at most
/// `tol·max(1, ‖x(ω)‖₂)`.
pub fn fixed_per_atom(fps: &FixedPointSpace, x: &Section, tol: f64) -> Result<Vec<bool>> {
    if fps.bases.len() != x.space().len() || fps.kind != x.kind() {
        return Err(Error::DimensionMismatch("fixed-point space does not match the section".into()));
    }
    fps.bases
        .iter()
        .zip(x.elems())
        .map(|(basis, e)| {
            let xv = match (e, fps.kind) {
                (FiberElement::TrigPoly(p), FiberKind::TrigPoly { max_degree }) => p.padded(max_degree).coeffs().to_vec(),
                _ => hs_coords(e)?,
            };
            let mut resid = xv.clone();
            for b in basis {
                let bv = match (b, fps.kind) {
                    (FiberElement::TrigPoly(p), FiberKind::TrigPoly { max_degree }) => {
                        p.padded(max_degree).coeffs().to_vec()
                    }
                    _ => hs_coords(b)?,
                };
                let c: Complex64 = bv.iter().zip(&xv).map(|(u, v)| u.conj() * v).sum();
                for (r, u) in resid.iter_mut().zip(&bv) {
                    *r -= c * u;
                }
            }
            let norm = |v: &[Complex64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            Ok(norm(&resid) <= tol * norm(&xv).max(1.0))
        })
        .collect()
}

/// Per-atom test of `T̂x = x` on the whole section: `‖T_ω x(ω) − x(ω)‖ ≤
/// tol·max(1, ‖x(ω)‖)`.
pub fn fixed_by_map(t: &MarkovBundle, x: &Section, tol: f64) -> Result<Vec<bool>> {
    let moved = section_norm(&markov_apply(t, x)?.sub(x)?);
    let size = section_norm(x);
    Ok((0..x.space().len())
        .map(|a| moved.re(a) <= tol * size.re(a).max(1.0))
        .collect())
}

/// `T̂x = x` as an identity of sections.
pub fn is_fixed(t: &MarkovBundle, x: &Section, tol: f64) -> Result<bool> {
    Ok(fixed_by_map(t, x, tol)?.into_iter().all(|b| b))
}

/// Eigenvalue data of one `T_ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSummary {
    /// Sorted by decreasing modulus, then argument.
    pub eigenvalues: Vec<Complex64>,
    /// Number of eigenvalues within `tol` of one.
    pub unit_multiplicity: usize,
    /// `min |1 − λ|` over eigenvalues not within `tol` of one.
    pub gap: Option<f64>,
    /// Largest `|λ|` over eigenvalues not within `tol` of one.
    pub second_modulus: Option<f64>,
}

/// Superoperator spectra of a matrix-kind Markov bundle (Schur form).
pub fn spectral_summary(t: &MarkovBundle, tol: f64) -> Result<Vec<SpectralSummary>> {
    t.superoperators()?
        .into_par_iter()
        .map(|m| {
            let mut ev: Vec<Complex64> = Schur::new(m)
                .eigenvalues()
                .ok_or(Error::Unsupported("Schur eigenvalues"))?
                .iter()
                .copied()
                .collect();
            ev.sort_by(|a, b| b.norm().total_cmp(&a.norm()).then(a.arg().total_cmp(&b.arg())));
            let (unit, rest): (Vec<Complex64>, Vec<Complex64>) = ev.iter().partition(|l| (*l - 1.0).norm() <= tol);
            Ok(SpectralSummary {
                unit_multiplicity: unit.len(),
                gap: rest.iter().map(|l| (1.0 - l).norm()).reduce(f64::min),
                second_modulus: rest.iter().map(|l| l.norm()).reduce(f64::max),
                eigenvalues: ev,
            })
        })
        .collect()
}

/// Rate predicted from the spectral gap: `2‖x(ω) − φ_ω(x)e‖ / (n·gap_ω)`.
pub fn predicted_ue_deviation(sys: &DynamicalSystemBundle, x: &Section, n: usize, spectra: &[SpectralSummary]) -> Result<L0Element> {
    check_system_section(sys, x)?;
    let centred = x.sub(&Section::unit(sys.space(), sys.kind()).l0_scale(&state_eval(&sys.state, x)?)?)?;
    let size = section_norm(&centred);
    let vals = (0..sys.space().len())
        .map(|a| match spectra[a].gap {
            Some(g) => Ok(2.0 * size.re(a) / (n as f64 * g)),
            None => Err(Error::at_atom(sys.space().atom_id(a), "no spectral gap: every eigenvalue is one")),
        })
        .collect::<Result<Vec<f64>>>()?;
    L0Element::new_real(sys.space(), &vals)
}

/// `true` when every entry is at most its predecessor.
pub fn monotone_nonincreasing(track: &[f64]) -> bool {
    track.windows(2).all(|w| w[1] <= w[0])
}

/// The 4×4 Hamiltonian with ones at (1,2) and (2,1) (0-indexed).
pub fn example1_hamiltonian() -> MatrixFiberElement {
    let mut h = CMatrix::zeros(4, 4);
    h[(1, 2)] = Complex64::new(1.0, 0.0);
    h[(2, 1)] = Complex64::new(1.0, 0.0);
    MatrixFiberElement { entries: h }
}

/// `V = √(2/(1+cosh 2β))·e^{βH}`.
pub fn example1_v(beta: f64) -> Result<MatrixFiberElement> {
    if !beta.is_finite() || beta.abs() > MAX_BETA {
        return Err(Error::Domain(format!("β = {beta} outside [−{MAX_BETA}, {MAX_BETA}]")));
    }
    let c = (2.0 / (1.0 + (2.0 * beta).cosh())).sqrt();
    let e = matrix_exp(&example1_hamiltonian(), beta)?;
    Ok(MatrixFiberElement {
        entries: e.entries.map(|z| z * c),
    })
}

/// `‖ℰ(VV*) − e‖`.
pub fn example1_side_residual(v: &MatrixFiberElement) -> Result<f64> {
    let vv = MatrixFiberElement {
        entries: &v.entries * v.entries.adjoint(),
    };
    let ev = conditional_expectation(&vv)?;
    Ok(spectral_norm(&(ev.entries - CMatrix::identity(2, 2))))
}

/// `x ↦ ℰ(V(e⊗x)V*)` evaluated directly.
pub fn example1_direct(v: &MatrixFiberElement, x: &MatrixFiberElement) -> Result<MatrixFiberElement> {
    let ex = tensor(&MatrixFiberElement::identity(x.dim()), x)?;
    conditional_expectation(&MatrixFiberElement {
        entries: &v.entries * ex.entries * v.entries.adjoint(),
    })
}

/// Kraus operators `A_{km}[i,j] = V[i·2+k, m·2+j]/√2` of `x ↦ ℰ(V(e⊗x)V*)`.
pub fn example1_kraus(v: &MatrixFiberElement) -> Vec<CMatrix> {
    let d = 2;
    let s = (d as f64).sqrt();
    let mut out = Vec::with_capacity(d * d);
    for k in 0..d {
        for m in 0..d {
            out.push(CMatrix::from_fn(d, d, |i, j| v.entries[(i * d + k, m * d + j)] / s));
        }
    }
    out
}

fn real_parameter(f: &L0Element, a: usize, name: &str) -> Result<f64> {
    let z = f.value(a);
    if z.im != 0.0 || !z.re.is_finite() {
        return Err(Error::at_atom(f.space().atom_id(a), format!("{name} must be real and finite, got {z}")));
    }
    Ok(z.re)
}

/// The two-qubit channel family `T_V` paired with the normalized trace.
pub fn build_example1(space: &SpaceRef, beta: &L0Element) -> Result<DynamicalSystemBundle> {
    ensure_same_space(space, beta.space())?;
    let mut kraus = Vec::with_capacity(space.len());
    for a in 0..space.len() {
        let atom = space.atom_id(a);
        let b = real_parameter(beta, a, "β")?;
        let v = example1_v(b).map_err(|e| Error::at_atom(atom, e.to_string()))?;
        let side = example1_side_residual(&v)?;
        if side > SIDE_TOL {
            return Err(Error::at_atom(atom, format!("side condition ℰ(VV*) = e fails: residual {side:e}")));
        }
        let ks = example1_kraus(&v);
        let map = FiberMap::Kraus(ks.clone());
        for i in 0..2 {
            for j in 0..2 {
                let u = MatrixFiberElement::unit(2, i, j);
                let direct = example1_direct(&v, &u)?;
                let via = map.apply(&FiberElement::Matrix(u))?;
                let err = spectral_norm(&(&via.as_matrix()?.entries - direct.entries));
                if err > KRAUS_TOL {
                    return Err(Error::at_atom(atom, format!("Kraus form disagrees with ℰ(V(e⊗x)V*) by {err:e}")));
                }
            }
        }
        kraus.push(ks);
    }
    let markov = MarkovBundle::from_kraus(space, 2, kraus)?;
    let state = StateBundle::canonical_trace(space, 2)?;
    DynamicalSystemBundle::new("example1", state, markov, SIDE_TOL)
}

/// Rotation by `α_ω` on trigonometric polynomials of degree `≤ budget`,
/// with the Lebesgue state.
pub fn build_example2(space: &SpaceRef, alpha: &L0Element, degree_budget: usize) -> Result<DynamicalSystemBundle> {
    ensure_same_space(space, alpha.space())?;
    if degree_budget == 0 {
        return Err(Error::Domain("degree budget must be at least 1".into()));
    }
    for a in 0..space.len() {
        real_parameter(alpha, a, "α")?;
    }
    let markov = MarkovBundle::rotations(space, degree_budget, alpha)?;
    let state = StateBundle::lebesgue(space, degree_budget)?;
    DynamicalSystemBundle::new("example2", state, markov, 0.0)
}

/// `(1/n)·Σ_{k<n} e^{2πikmα}`: the Cesàro coefficient of mode `m` under
/// rotation by `α`.
pub fn rotation_cesaro_coefficient(alpha: f64, mode: i64, n: usize) -> Complex64 {
    let z = rotation_phase(alpha, mode);
    if (z - 1.0).norm() == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    let zn = rotation_phase(alpha, mode * n as i64);
    (1.0 - zn) / (1.0 - z) / n as f64
}

/// `2 / (n·|1 − e^{2πimα}|)`; infinite when `mα` is an integer.
pub fn rotation_deviation_bound(alpha: f64, mode: i64, n: usize) -> f64 {
    2.0 / (n as f64 * (1.0 - rotation_phase(alpha, mode)).norm())
}

/// A section equal to mode `k` at every atom.
pub fn mode_section(space: &SpaceRef, max_degree: usize, k: i64) -> Result<Section> {
    let kind = FiberKind::trigpoly(max_degree)?;
    Section::from_fn(space, kind, |_| FiberElement::TrigPoly(TrigPolyFiberElement::mode(k)))
}

/// Block structure of [`build_block_system`] at one atom.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSpec {
    pub sizes: Vec<usize>,
    /// Diagonal unitary entries; `None` means identity.
    pub phases: Option<Vec<f64>>,
    /// Weight of the plain pinching.
    pub p: f64,
}

impl BlockSpec {
    /// Dimension of `{x : Tx = x}`: `Σ b_i²` for the identity twist and
    /// `Σ b_i` for pairwise distinct phases.
    pub fn expected_fixed_dim(&self) -> usize {
        match &self.phases {
            None => self.sizes.iter().map(|b| b * b).sum(),
            Some(_) => self.sizes.iter().sum(),
        }
    }
}

/// `T(x) = p·P(x) + (1−p)·U·P(x)·U*`, with `P` the pinching onto the block
/// diagonal and `U` diagonal. Kraus form `{√p Q_i} ∪ {√(1−p) U Q_i}`.
pub fn build_block_system(space: &SpaceRef, specs: &[BlockSpec]) -> Result<MarkovBundle> {
    if specs.len() != space.len() {
        return Err(Error::DimensionMismatch("one block spec per atom".into()));
    }
    let d: usize = specs.first().map(|s| s.sizes.iter().sum()).unwrap_or(0);
    let mut all = Vec::with_capacity(specs.len());
    for (a, s) in specs.iter().enumerate() {
        if s.sizes.iter().sum::<usize>() != d || !(0.0..=1.0).contains(&s.p) {
            return Err(Error::at_atom(space.atom_id(a), "block sizes must sum to the common dimension and p ∈ [0,1]"));
        }
        let u = match &s.phases {
            None => CMatrix::identity(d, d),
            Some(ph) if ph.len() == d => CMatrix::from_fn(d, d, |i, j| {
                if i == j {
                    Complex64::from_polar(1.0, ph[i])
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }),
            Some(_) => return Err(Error::at_atom(space.atom_id(a), "need one phase per basis vector")),
        };
        let mut ks = Vec::new();
        let mut start = 0;
        for &b in &s.sizes {
            let q = CMatrix::from_fn(d, d, |i, j| {
                if i == j && (start..start + b).contains(&i) {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            });
            ks.push(q.map(|z| z * s.p.sqrt()));
            ks.push((&u * &q).map(|z| z * (1.0 - s.p).sqrt()));
            start += b;
        }
        all.push(ks);
    }
    MarkovBundle::from_kraus(space, d, all)
}

/// Per-atom deviation tracks over an averaging grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub n_grid: Vec<usize>,
    pub atom_ids: Vec<String>,
    /// `[grid index][atom]`.
    pub deviations: Vec<Vec<f64>>,
    /// `[grid index]`: maximum over atoms.
    pub sup: Vec<f64>,
    /// Closed-form deviation, `[grid index][atom]`, when known.
    pub closed_form: Option<Vec<Vec<f64>>>,
    pub metadata: Vec<(String, String)>,
}

impl ConvergenceReport {
    pub fn new(space: &SpaceRef, n_grid: &[usize], devs: &[L0Element]) -> Result<Self> {
        if devs.len() != n_grid.len() {
            return Err(Error::DimensionMismatch("one deviation per grid point".into()));
        }
        let deviations: Vec<Vec<f64>> = devs.iter().map(|d| d.re_values()).collect();
        if deviations.iter().flatten().any(|v| !(*v >= 0.0)) {
            return Err(Error::Verification("deviations must be nonnegative".into()));
        }
        Ok(ConvergenceReport {
            n_grid: n_grid.to_vec(),
            atom_ids: space.atoms().iter().map(|a| a.id.clone()).collect(),
            sup: deviations.iter().map(|r| r.iter().copied().fold(0.0, f64::max)).collect(),
            deviations,
            closed_form: None,
            metadata: Vec::new(),
        })
    }

    pub fn with_closed_form(mut self, cf: Vec<Vec<f64>>) -> Self {
        self.closed_form = Some(cf);
        self
    }

    pub fn with_meta(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.metadata.push((key.into(), value.into()));
        self
    }

    /// Track of one atom across the grid.
    pub fn track(&self, atom: usize) -> Vec<f64> {
        self.deviations.iter().map(|r| r[atom]).collect()
    }

    /// `#`-prefixed metadata lines, then `n,atom_id,deviation,sup_deviation,closed_form`.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.metadata {
            let _ = writeln!(s, "# {k}: {v}");
        }
        s.push_str("n,atom_id,deviation,sup_deviation,closed_form\n");
        for (g, n) in self.n_grid.iter().enumerate() {
            for (a, id) in self.atom_ids.iter().enumerate() {
                let cf = self
                    .closed_form
                    .as_ref()
                    .map(|c| format!("{:e}", c[g][a]))
                    .unwrap_or_default();
                let _ = writeln!(s, "{n},{id},{:e},{:e},{cf}", self.deviations[g][a], self.sup[g]);
            }
        }
        s
    }
}
