//! `check-axioms`: seeded property suites over random bundles and the
//! configured system, reported as `property,max_residual,tolerance,status`.

use std::fmt::Write as _;

use rand::Rng;

use crate::bundle::{d_decompose, operator_adjoint, Section};
use crate::dynamics::{example1_side_residual, example1_v};
use crate::fiber::matrix::{hermitian_residual, min_eigenvalue};
use crate::fiber::{c_star_identity_residual, FiberElement, FiberKind, TrigPolyFiberElement};
use crate::markov::{
    positivity_criterion_check, randomized_positivity, reflected_trace_map, MarkovBundle, UnitalMapBundle, Verdict,
    POSITIVITY_SAMPLES, POSITIVITY_TOL, UNITAL_TOL,
};
use crate::measure::{AtomicMeasureSpace, L0Element};
use crate::random;
use crate::serial::{self, FiberStateDto, MarkovBundleDto, StateBundleDto};
use crate::states::{cauchy_schwarz_residual, state_norm_suite, StateBundle, STATE_TOL};

use super::{build_experiment, CliError, CliResult, CommonOptions, ExampleConfig, ExperimentConfig, Session, EXIT_FAIL, EXIT_PASS};

/// One row of the report.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyResult {
    pub property: String,
    pub max_residual: f64,
    pub tolerance: f64,
}

impl PropertyResult {
    fn new(property: &str, max_residual: f64, tolerance: f64) -> Self {
        PropertyResult {
            property: property.into(),
            max_residual,
            tolerance,
        }
    }

    pub fn pass(&self) -> bool {
        self.max_residual <= self.tolerance
    }

    pub fn row(&self) -> String {
        format!(
            "{},{:e},{:e},{}",
            self.property,
            self.max_residual,
            self.tolerance,
            if self.pass() { "PASS" } else { "FAIL" }
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxiomOutcome {
    pub exit_code: i32,
    pub results: Vec<PropertyResult>,
    pub report: String,
}

type Rng8 = rand_chacha::ChaCha8Rng;

fn random_space(rng: &mut Rng8, max_atoms: usize) -> crate::measure::SpaceRef {
    let n = rng.random_range(1..=max_atoms);
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
    AtomicMeasureSpace::with_weights(&w).expect("positive weights")
}

/// `|‖a*a‖ − ‖a‖²|` over random matrix sections (absolute), and over random
/// trigonometric polynomials relative to `‖a‖²·grid bound`.
fn c_star_suites(cfg: &ExperimentConfig, seed: u64) -> crate::error::Result<Vec<PropertyResult>> {
    let a = &cfg.axioms;
    let mut rng = random::rng_for(seed, 1);
    let mut worst: f64 = 0.0;
    for _ in 0..a.matrix_sections {
        let space = random_space(&mut rng, 16);
        let kind = FiberKind::matrix(rng.random_range(1..=a.max_dim))?;
        let x = random::section(&mut rng, &space, kind, 0);
        for e in x.elems() {
            worst = worst.max(c_star_identity_residual(e, &kind)?);
        }
    }
    let mut rel: f64 = 0.0;
    for _ in 0..a.trigpoly_elements {
        let deg = rng.random_range(1..=a.max_degree);
        let kind = FiberKind::trigpoly(2 * deg)?;
        let p = random::trigpoly(&mut rng, deg);
        let r = c_star_identity_residual(&FiberElement::TrigPoly(p.clone()), &kind)?;
        let scale = p.norm().powi(2) * TrigPolyFiberElement::grid_error_bound(2 * deg);
        rel = rel.max(r / scale);
    }
    Ok(vec![
        PropertyResult::new("c_star_identity_matrix", worst, cfg.tolerances.axiom),
        PropertyResult::new("c_star_identity_trigpoly_over_grid_bound", rel, 2.0),
    ])
}

fn state_suites(cfg: &ExperimentConfig, seed: u64) -> crate::error::Result<Vec<PropertyResult>> {
    let a = &cfg.axioms;
    let tol = cfg.tolerances.axiom;
    let mut rng = random::rng_for(seed, 2);
    let (mut cs, mut sym): (f64, f64) = (0.0, 0.0);
    for _ in 0..a.cauchy_schwarz {
        let space = random_space(&mut rng, 8);
        let d = rng.random_range(1..=a.max_dim.min(6));
        let phi = StateBundle::random(&mut rng, &space, d);
        let kind = phi.kind();
        let (x, y) = (random::section(&mut rng, &space, kind, 0), random::section(&mut rng, &space, kind, 0));
        let r = cauchy_schwarz_residual(&phi, &x, &y)?;
        cs = cs.max(r.residual.re_values().into_iter().fold(0.0, f64::max));
        sym = sym.max(r.conjugate_symmetry.re_values().into_iter().fold(0.0, f64::max));
    }
    let space = AtomicMeasureSpace::uniform(4)?;
    let d = a.max_dim.min(4);
    let phi = StateBundle::random(&mut rng, &space, d);
    let psi = StateBundle::random(&mut rng, &space, d);
    let alpha = random::l0_unit_interval(&mut rng, &space);
    let beta = L0Element::one(&space).sub(&alpha)?;
    let p = state_norm_suite(&phi, &psi, &alpha, &beta, a.state_chain, seed)?;
    Ok(vec![
        PropertyResult::new("cauchy_schwarz", cs, tol),
        PropertyResult::new("conjugate_symmetry", sym, tol),
        PropertyResult::new("state_norm_chain_lower", p.chain_lower, tol),
        PropertyResult::new("state_norm_chain_upper", p.chain_upper, tol),
        PropertyResult::new("positive_functional_norm", p.positive_norm.unwrap_or(0.0), tol),
        PropertyResult::new("state_norm_additivity", p.additivity.unwrap_or(0.0), tol),
    ])
}

fn bundle_suites(cfg: &ExperimentConfig, seed: u64) -> crate::error::Result<Vec<PropertyResult>> {
    let a = &cfg.axioms;
    let tol = cfg.tolerances.axiom;
    let mut rng = random::rng_for(seed, 3);
    let (mut decomp, mut tri, mut adj_id, mut adj_cs): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for _ in 0..a.systems {
        let space = random_space(&mut rng, 12);
        let d = rng.random_range(1..=a.max_dim.min(5));
        let kind = FiberKind::matrix(d)?;
        let x = random::section(&mut rng, &space, kind, 0);
        let y = random::section(&mut rng, &space, kind, 0);
        let n = x.norm();
        let mask: Vec<f64> = (0..space.len()).map(|_| if rng.random_bool(0.5) { 1.0 } else { 0.0 }).collect();
        let m = L0Element::new_real(&space, &mask)?;
        let e1 = n.mul(&m)?;
        let e2 = n.sub(&e1)?;
        let (x1, x2) = d_decompose(&x, &e1, &e2)?;
        let r = [
            x1.norm().sub(&e1)?,
            x2.norm().sub(&e2)?,
            x1.add(&x2)?.sub(&x)?.norm(),
        ]
        .iter()
        .flat_map(|v| v.values().iter().map(|z| z.norm()).collect::<Vec<_>>())
        .fold(0.0, f64::max);
        decomp = decomp.max(r);
        let (nx, ny, nxy) = (x.norm(), y.norm(), x.add(&y)?.norm());
        for i in 0..space.len() {
            tri = tri.max(nxy.re(i) - nx.re(i) - ny.re(i));
        }
        match operator_adjoint(&x, 4, &mut rng) {
            Ok((_, rep)) => {
                adj_id = adj_id.max(rep.identity_residual);
                adj_cs = adj_cs.max(rep.cstar_residual.max(rep.norm_residual));
            }
            Err(_) => {
                adj_id = f64::INFINITY;
            }
        }
    }
    Ok(vec![
        PropertyResult::new("d_decomposition", decomp, 0.0),
        PropertyResult::new("l0_norm_triangle", tri.max(0.0), tol),
        PropertyResult::new("adjoint_identity", adj_id, tol),
        PropertyResult::new("adjoint_c_star", adj_cs, tol),
    ])
}

fn markov_suites(cfg: &ExperimentConfig, seed: u64) -> crate::error::Result<Vec<PropertyResult>> {
    let a = &cfg.axioms;
    let mut rng = random::rng_for(seed, 4);
    let mut dev: f64 = 0.0;
    let mut violations = 0usize;
    for s in 0..a.systems {
        let space = random_space(&mut rng, 6);
        let d = rng.random_range(1..=a.max_dim.min(4));
        let k = rng.random_range(1..=4);
        let t = MarkovBundle::random(&mut rng, &space, d, k);
        let est = t.as_unital().norm_estimate(a.norm_samples, seed.wrapping_add(s as u64))?;
        for v in est.sampled.re_values() {
            dev = dev.max((v - 1.0).abs());
        }
        let out = positivity_criterion_check(t.as_unital(), cfg.tolerances.norm, a.norm_samples, seed)?;
        violations += out.iter().filter(|o| o.verdict == Verdict::Violated).count();
    }
    // A unital map that is not positive must have norm above one.
    let space = AtomicMeasureSpace::uniform(1)?;
    let refl = UnitalMapBundle::new(&space, FiberKind::matrix(3)?, vec![reflected_trace_map(3)])?;
    let out = positivity_criterion_check(&refl, cfg.tolerances.norm, a.norm_samples, seed)?;
    violations += out.iter().filter(|o| o.verdict == Verdict::Violated || o.positive).count();
    let witness_gap = (5.0 / 3.0 - refl.norm_estimate(a.norm_samples, seed)?.sampled.re(0)).max(0.0);
    Ok(vec![
        PropertyResult::new("markov_norm_one", dev, cfg.tolerances.norm),
        PropertyResult::new("positivity_criterion_violations", violations as f64, 0.0),
        PropertyResult::new("non_positive_norm_witness_gap", witness_gap, cfg.tolerances.axiom),
    ])
}

/// Residuals of a state file checked before any bundle is built from it,
/// so a corrupted input is reported by the invariant it breaks.
fn raw_state_checks(dto: &StateBundleDto) -> CliResult<Vec<PropertyResult>> {
    let (mut unit, mut herm, mut pos): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for s in &dto.states {
        match s {
            FiberStateDto::Density { rho } => {
                let m = serial::matrix_in(rho)?;
                unit = unit.max((m.trace() - 1.0).norm());
                herm = herm.max(hermitian_residual(&m));
                pos = pos.max((-min_eigenvalue(&m)).max(0.0));
            }
            FiberStateDto::Mixture { weights, .. } => {
                unit = unit.max((weights.iter().sum::<f64>() - 1.0).abs());
                pos = pos.max(weights.iter().map(|w| -w).fold(0.0, f64::max));
            }
            FiberStateDto::Lebesgue | FiberStateDto::PointMass { .. } => {}
        }
    }
    Ok(vec![
        PropertyResult::new("state_unit_value", unit, STATE_TOL),
        PropertyResult::new("state_hermiticity", herm, STATE_TOL),
        PropertyResult::new("state_positivity", pos, STATE_TOL),
    ])
}

fn raw_markov_checks(dto: &MarkovBundleDto, seed: u64) -> CliResult<Vec<PropertyResult>> {
    let kind = serial::kind_in(dto.kind)?;
    let e = kind.unit();
    let mut unital: f64 = 0.0;
    let mut positivity: f64 = 0.0;
    for (i, m) in serial::maps_in(dto)?.iter().enumerate() {
        unital = unital.max(m.apply(&e)?.distance(&e, &kind)?);
        if let FiberKind::Matrix { dim } = kind {
            let mut rng = random::rng_for(seed, i as u64);
            let p = randomized_positivity(m, dim, POSITIVITY_SAMPLES, &mut rng)?;
            positivity = positivity.max((-p.min_eigenvalue).max(0.0));
        }
    }
    Ok(vec![
        PropertyResult::new("markov_unitality", unital, UNITAL_TOL),
        PropertyResult::new("markov_positivity", positivity, POSITIVITY_TOL),
    ])
}

fn system_checks(session: &Session) -> CliResult<Vec<PropertyResult>> {
    let cfg = &session.config;
    let mut out = Vec::new();
    if let ExampleConfig::Custom { state, markov, .. } = &cfg.example {
        let sdto: StateBundleDto = serial::from_json(&session.read_input(state)?)?;
        let mdto: MarkovBundleDto = serial::from_json(&session.read_input(markov)?)?;
        out.extend(raw_state_checks(&sdto)?);
        out.extend(raw_markov_checks(&mdto, cfg.seed)?);
        if out.iter().any(|r| !r.pass()) {
            return Ok(out);
        }
    }
    if let ExampleConfig::Example1 { beta } = &cfg.example {
        let worst = ExperimentConfig::broadcast(beta, cfg.space.atom_count())
            .iter()
            .map(|b| Ok(example1_side_residual(&example1_v(*b)?)?))
            .collect::<Result<Vec<f64>, crate::error::Error>>()?
            .into_iter()
            .fold(0.0, f64::max);
        out.push(PropertyResult::new("example1_side_condition", worst, crate::dynamics::SIDE_TOL));
    }
    match build_experiment(session) {
        Ok(exp) => {
            let inv = exp.system.invariance().residual.re_values().into_iter().fold(0.0, f64::max);
            out.push(PropertyResult::new("system_invariance", inv, cfg.tolerances.invariance));
            let e = Section::unit(exp.system.space(), exp.system.kind());
            let pe = crate::states::state_eval(exp.system.state(), &e)?;
            let r = pe.values().iter().map(|z| (z - 1.0).norm()).fold(0.0, f64::max);
            out.push(PropertyResult::new("system_state_unit_value", r, STATE_TOL));
        }
        Err(CliError::Property(m)) => {
            return Err(CliError::Property(format!("system construction failed: {m}")));
        }
        Err(e) => return Err(e),
    }
    Ok(out)
}

pub fn cmd_check_axioms(opts: &CommonOptions) -> CliResult<AxiomOutcome> {
    let session = Session::open(opts)?;
    let cfg = &session.config;
    let seed = cfg.seed;
    let system = system_checks(&session)?;
    let mut results = Vec::new();
    let system_ok = system.iter().all(PropertyResult::pass);
    results.extend(system);
    if system_ok {
        results.extend(c_star_suites(cfg, seed)?);
        results.extend(state_suites(cfg, seed)?);
        results.extend(bundle_suites(cfg, seed)?);
        results.extend(markov_suites(cfg, seed)?);
    }
    let mut report = session.header("check-axioms");
    report.push_str("property,max_residual,tolerance,status\n");
    for r in &results {
        let _ = writeln!(report, "{}", r.row());
    }
    let exit_code = if results.iter().all(PropertyResult::pass) { EXIT_PASS } else { EXIT_FAIL };
    for r in results.iter().filter(|r| !r.pass()) {
        session.say(&format!("FAIL {}: residual {:e} exceeds {:e}", r.property, r.max_residual, r.tolerance));
    }
    if !session.quiet {
        print!("{report}");
    }
    session.write_output("axioms.csv", &report)?;
    Ok(AxiomOutcome {
        exit_code,
        results,
        report,
    })
}
