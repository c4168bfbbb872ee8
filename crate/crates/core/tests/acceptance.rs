//! Acceptance suite. Each criterion prints one PASS/FAIL line; the process
//! exits nonzero if any criterion fails.
//!
//! Reference values come from oracles written here, independent of the
//! library's code paths: closed-form matrices, hand-built superoperators,
//! dense evaluation grids, Choi matrices and direct sums.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use measurable_bundles::bundle::{matrix_section, Section};
use measurable_bundles::cli::axioms::cmd_check_axioms;
use measurable_bundles::cli::run::cmd_run;
use measurable_bundles::cli::CommonOptions;
use measurable_bundles::dynamics::{
    build_block_system, build_example1, build_example2, cesaro_sweep, example1_side_residual, example1_v,
    fixed_by_map, fixed_per_atom, fixed_point_space, is_fixed, mode_section, monotone_nonincreasing,
    predicted_ue_deviation, spectral_summary, ue_sweep, uniform_ue_sweep, BlockSpec, DynamicalSystemBundle,
    DEFAULT_N_GRID,
};
use measurable_bundles::fiber::{
    c_star_identity_residual, trigpoly_cstar_tolerance, CMatrix, FiberElement, FiberKind, TrigPolyFiberElement,
};
use measurable_bundles::localize::{density_distance, superoperator_distance, MapProbeTable, StateProbeTable};
use measurable_bundles::markov::{
    positivity_criterion_check, reflected_trace_map, MarkovBundle, UnitalMapBundle,
};
use measurable_bundles::measure::{o_limit_per_atom, AtomicMeasureSpace, L0Element, SpaceRef};
use measurable_bundles::random;
use measurable_bundles::states::{
    cauchy_schwarz_residual, functional_norm, state_norm_suite, state_eval, L0Functional, StateBundle,
};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

type Outcome = Result<String, String>;

fn lib<T>(r: measurable_bundles::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

// ---------------------------------------------------------------- oracles

/// `‖a‖²` as the top eigenvalue of the Hermitian matrix `a*a`.
fn oracle_norm_sq(a: &CMatrix) -> f64 {
    let h = a.adjoint() * a;
    let h = (&h + h.adjoint()).map(|z| z * 0.5);
    h.symmetric_eigen().eigenvalues.iter().copied().fold(f64::MIN, f64::max).max(0.0)
}

fn oracle_norm(a: &CMatrix) -> f64 {
    oracle_norm_sq(a).sqrt()
}

fn oracle_min_eig(a: &CMatrix) -> f64 {
    let h = (a + a.adjoint()).map(|z| z * 0.5);
    h.symmetric_eigen().eigenvalues.iter().copied().fold(f64::MAX, f64::min)
}

/// `sup_t |p(t)|` on a grid 16 times finer than the library's.
fn oracle_trig_sup(p: &TrigPolyFiberElement) -> f64 {
    let m = 16 * TrigPolyFiberElement::grid_size(p.degree());
    let k = p.degree() as i64;
    (0..m)
        .map(|j| {
            let t = j as f64 / m as f64;
            (-k..=k)
                .map(|q| p.coeff(q) * Complex64::from_polar(1.0, 2.0 * PI * q as f64 * t))
                .sum::<Complex64>()
                .norm()
        })
        .fold(0.0, f64::max)
}

fn unvec(v: &[Complex64], d: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |i, j| v[i + j * d])
}

fn vec_of(x: &CMatrix) -> Vec<Complex64> {
    let d = x.nrows();
    (0..d * d).map(|n| x[(n % d, n / d)]).collect()
}

/// Superoperator (column stacking) of an arbitrary linear map on `M_d`.
fn superop_of(d: usize, f: impl Fn(&CMatrix) -> CMatrix) -> CMatrix {
    let mut m = CMatrix::zeros(d * d, d * d);
    for j in 0..d {
        for i in 0..d {
            let mut e = CMatrix::zeros(d, d);
            e[(i, j)] = c(1.0);
            let col = vec_of(&f(&e));
            for (r, z) in col.into_iter().enumerate() {
                m[(r, i + j * d)] = z;
            }
        }
    }
    m
}

/// Choi matrix `Σ_ij E_ij ⊗ T(E_ij)` from a superoperator.
fn choi(m: &CMatrix, d: usize) -> CMatrix {
    CMatrix::from_fn(d * d, d * d, |r, s| {
        let (i, k, j, l) = (r / d, r % d, s / d, s % d);
        m[(k + l * d, i + j * d)]
    })
}

/// `V = √(2/(1+cosh 2β))·e^{βH}` in closed form: `H` is `σ_x` on
/// `span{e_1, e_2}` and zero elsewhere.
fn oracle_v(beta: f64) -> CMatrix {
    let s = (2.0 / (1.0 + (2.0 * beta).cosh())).sqrt();
    let mut v = CMatrix::identity(4, 4);
    v[(1, 1)] = c(beta.cosh());
    v[(2, 2)] = c(beta.cosh());
    v[(1, 2)] = c(beta.sinh());
    v[(2, 1)] = c(beta.sinh());
    v.map(|z| z * s)
}

/// Normalized partial trace over the second factor of `C² ⊗ C²`.
fn oracle_e(x: &CMatrix) -> CMatrix {
    CMatrix::from_fn(2, 2, |i, j| (x[(2 * i, 2 * j)] + x[(2 * i + 1, 2 * j + 1)]) * 0.5)
}

/// `x ↦ ℰ(V(e ⊗ x)V*)` as a superoperator.
fn oracle_example1(beta: f64) -> CMatrix {
    let v = oracle_v(beta);
    superop_of(2, |x| {
        let ex = CMatrix::from_fn(4, 4, |r, s| if r / 2 == s / 2 { x[(r % 2, s % 2)] } else { c(0.0) });
        oracle_e(&(&v * ex * v.adjoint()))
    })
}

fn apply_superop(m: &CMatrix, x: &CMatrix) -> CMatrix {
    let d = x.nrows();
    let v = DMatrix::from_vec(d * d, 1, vec_of(x));
    let out = m * v;
    unvec(out.as_slice(), d)
}

/// `(1/n)(1 − z^n)/(1 − z)` with `z = e^{2πikα}`; angles reduced mod 1
/// before exponentiating.
fn oracle_rotation_coefficient(alpha: f64, k: i64, n: usize) -> Complex64 {
    let turn = |m: f64| Complex64::from_polar(1.0, 2.0 * PI * (m * k as f64 * alpha).rem_euclid(1.0));
    let z = turn(1.0);
    if (z - 1.0).norm() < 1e-15 {
        return c(1.0);
    }
    (c(1.0) - turn(n as f64)) / (c(1.0) - z) / n as f64
}

fn uniform_space(rng: &mut impl Rng, max_atoms: usize) -> SpaceRef {
    AtomicMeasureSpace::uniform(rng.random_range(1..=max_atoms)).expect("nonempty")
}

fn weighted_space(rng: &mut impl Rng, max_atoms: usize) -> SpaceRef {
    let n = rng.random_range(1..=max_atoms);
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..2.0)).collect();
    AtomicMeasureSpace::with_weights(&w).expect("positive weights")
}

// --------------------------------------------------------------- criteria

fn c1_c_star_identity() -> Outcome {
    let mut rng = random::rng_for(101, 0);
    let mut worst: f64 = 0.0;
    let mut worst_oracle: f64 = 0.0;
    for _ in 0..1000 {
        let space = weighted_space(&mut rng, 64);
        let d = rng.random_range(1..=8);
        let x = random::section(&mut rng, &space, FiberKind::Matrix { dim: d }, 0);
        let n = x.norm();
        let nn = x.adjoint().mul(&x).map_err(|e| e.to_string())?.norm();
        for a in 0..space.len() {
            let r = (nn.re(a) - n.re(a).powi(2)).abs();
            worst = worst.max(r);
            let o = oracle_norm(&lib(x.at(a).as_matrix())?.entries);
            worst_oracle = worst_oracle.max((n.re(a) - o).abs() / o.max(1.0));
        }
    }
    ensure(worst <= 1e-10, || format!("matrix residual {worst:e} > 1e-10"))?;
    ensure(worst_oracle <= 1e-10, || format!("spectral norm disagrees with oracle by {worst_oracle:e}"))?;

    let mut worst_ratio: f64 = 0.0;
    for _ in 0..200 {
        let k = rng.random_range(1..=8);
        let kind = FiberKind::TrigPoly { max_degree: 2 * k };
        let p = random::trigpoly(&mut rng, k);
        let r = lib(c_star_identity_residual(&FiberElement::TrigPoly(p.clone()), &kind))?;
        let tol = trigpoly_cstar_tolerance(&p);
        worst_ratio = worst_ratio.max(r / tol);
        // Oracle: the library's sup-norm is a grid max, so it lies below the
        // dense sup by at most the documented relative bound.
        let dense = oracle_trig_sup(&p);
        let b = TrigPolyFiberElement::grid_error_bound(k);
        ensure(p.norm() <= dense * (1.0 + 1e-12) && p.norm() >= dense * (1.0 - b), || {
            format!("grid sup {} outside [{}, {}] of dense sup", p.norm(), dense * (1.0 - b), dense)
        })?;
        ensure(r <= tol, || format!("trigpoly degree {k}: residual {r:e} exceeds 2× grid bound {tol:e}"))?;
    }
    Ok(format!(
        "1000 matrix sections: max residual {worst:e}; 200 trigpolys: max residual/(2×bound) = {worst_ratio:.3e}"
    ))
}

fn c2_cauchy_schwarz() -> Outcome {
    let mut rng = random::rng_for(102, 0);
    let (mut cs, mut sym, mut oracle): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for t in 0..1000 {
        let space = uniform_space(&mut rng, 8);
        let (phi, a, b) = if t % 5 == 4 {
            let k = rng.random_range(1..=4);
            let kind = FiberKind::TrigPoly { max_degree: 2 * k };
            let phi = lib(StateBundle::lebesgue(&space, 2 * k))?;
            (phi, random::section(&mut rng, &space, kind, k), random::section(&mut rng, &space, kind, k))
        } else {
            let d = rng.random_range(1..=6);
            let kind = FiberKind::Matrix { dim: d };
            let phi = StateBundle::random(&mut rng, &space, d);
            (phi, random::section(&mut rng, &space, kind, 0), random::section(&mut rng, &space, kind, 0))
        };
        let r = lib(cauchy_schwarz_residual(&phi, &a, &b))?;
        for i in 0..space.len() {
            cs = cs.max(r.residual.re(i));
            sym = sym.max(r.conjugate_symmetry.re(i));
        }
        // Oracle for φ(a*b): tr(ρ a*b) or the constant coefficient of a*b.
        let ab = lib(state_eval(&phi, &lib(a.adjoint().mul(&b))?))?;
        for i in 0..space.len() {
            let want = match (a.at(i), b.at(i)) {
                (FiberElement::Matrix(x), FiberElement::Matrix(y)) => {
                    (lib(phi.density(i))? * x.entries.adjoint() * &y.entries).trace()
                }
                (FiberElement::TrigPoly(x), FiberElement::TrigPoly(y)) => {
                    let k = x.degree().max(y.degree()) as i64;
                    (-k..=k).map(|q| x.coeff(q).conj() * y.coeff(q)).sum()
                }
                _ => unreachable!("homogeneous sections"),
            };
            oracle = oracle.max((ab.value(i) - want).norm() / want.norm().max(1.0));
        }
    }
    ensure(cs <= 1e-10, || format!("Cauchy–Schwarz residual {cs:e}"))?;
    ensure(sym <= 1e-10, || format!("conjugate-symmetry residual {sym:e}"))?;
    ensure(oracle <= 1e-10, || format!("φ(a*b) disagrees with oracle by {oracle:e}"))?;
    Ok(format!("1000 triples: CS residual {cs:e}, symmetry residual {sym:e}, oracle gap {oracle:e}"))
}

fn c3_state_norm_suite() -> Outcome {
    let mut rng = random::rng_for(103, 0);
    let mut chain: f64 = 0.0;
    let mut add: f64 = 0.0;
    let mut pos: f64 = 0.0;
    let mut recon: f64 = 0.0;
    let configs: [(usize, Option<usize>); 4] = [(8, None), (3, None), (5, Some(4)), (16, None)];
    for (s, (atoms, trig)) in configs.into_iter().enumerate() {
        let space = lib(AtomicMeasureSpace::uniform(atoms))?;
        let (phi, psi) = match trig {
            Some(k) => (lib(StateBundle::lebesgue(&space, k))?, lib(StateBundle::lebesgue(&space, k))?),
            None => {
                let d = 1 + s;
                (StateBundle::random(&mut rng, &space, d), StateBundle::random(&mut rng, &space, d))
            }
        };
        let alpha = random::l0_unit_interval(&mut rng, &space).scale_real(3.0);
        let beta = random::l0_unit_interval(&mut rng, &space);
        let r = lib(state_norm_suite(&phi, &psi, &alpha, &beta, 500, 7 + s as u64))?;
        ensure(r.samples == 500, || "suite ran fewer samples".into())?;
        chain = chain.max(r.chain_lower).max(r.chain_upper);
        if trig.is_none() {
            add = add.max(r.additivity.ok_or("additivity missing")?);
            pos = pos.max(r.positive_norm.ok_or("positive norm missing")?);
            // Oracle: for density duals ‖αφ + βψ‖ = α + β.
            let comb = lib(L0Functional::combine(&alpha, &lib(phi.to_functional())?, &beta, &lib(psi.to_functional())?))?;
            let n = functional_norm(&comb);
            for i in 0..space.len() {
                add = add.max((n.re(i) - alpha.re(i) - beta.re(i)).abs());
            }
        }
    }
    // Positive reconstruction: a functional with PSD duals A has norm tr A
    // and is reported positive.
    for _ in 0..100 {
        let space = uniform_space(&mut rng, 8);
        let d = rng.random_range(1..=5);
        let duals: Vec<CMatrix> = (0..space.len())
            .map(|_| {
                let g = random::ginibre(&mut rng, d);
                &g * g.adjoint()
            })
            .collect();
        let f = lib(L0Functional::new(&space, duals.clone()))?;
        ensure(f.is_positive(1e-10), || "PSD duals not reported positive".into())?;
        let n = functional_norm(&f);
        let at_e = lib(f.eval(&Section::unit(&space, FiberKind::Matrix { dim: d })))?;
        for (i, a) in duals.iter().enumerate() {
            let tr = a.trace().re;
            recon = recon.max((n.re(i) - tr).abs() / tr.max(1.0)).max((at_e.re(i) - tr).abs() / tr.max(1.0));
        }
    }
    ensure(chain <= 1e-10, || format!("bound chain violated by {chain:e}"))?;
    ensure(pos <= 1e-10 && recon <= 1e-10, || format!("positive functional norm residual {pos:e}/{recon:e}"))?;
    ensure(add <= 1e-10, || format!("additivity residual {add:e}"))?;
    Ok(format!("chain {chain:e}, positive reconstruction {:e}, additivity {add:e}", pos.max(recon)))
}

fn c4_positivity_criterion() -> Outcome {
    let mut rng = random::rng_for(104, 0);
    let mut raw_excess: f64 = 0.0;
    for b in 0..100 {
        let space = uniform_space(&mut rng, 8);
        let d = rng.random_range(1..=6);
        let k = rng.random_range(1..=4);
        let t = MarkovBundle::random(&mut rng, &space, d, k);
        // Oracle certificate: unital and PSD Choi matrix, so ‖T‖ = ‖T(e)‖ = 1.
        for m in lib(t.superoperators())? {
            let te = apply_superop(&m, &CMatrix::identity(d, d));
            ensure((te - CMatrix::identity(d, d)).iter().all(|z| z.norm() <= 1e-10), || "T(e) ≠ e".into())?;
            let mc = oracle_min_eig(&choi(&m, d));
            ensure(mc >= -1e-10, || format!("random channel has Choi eigenvalue {mc:e}"))?;
        }
        let est = lib(t.norm_estimate(200, b))?;
        ensure(est.exact_one, || "certified bundle not flagged exact_one".into())?;
        for a in 0..space.len() {
            let v = est.value(a);
            ensure((1.0 - 1e-9..=1.0).contains(&v), || format!("reported norm {v} outside [1−1e-9, 1]"))?;
            let s = est.sampled.re(a);
            ensure(s >= 1.0 - 1e-9 && s <= 1.0 + 1e-9, || format!("sampled norm {s} not within 1e-9 of 1"))?;
            raw_excess = raw_excess.max(s - 1.0);
        }
    }

    let space = lib(AtomicMeasureSpace::uniform(3))?;
    let kind = FiberKind::Matrix { dim: 3 };
    let reflected = lib(UnitalMapBundle::new(&space, kind, vec![reflected_trace_map(3); 3]))?;
    // Oracle: T(x) = 2τ(x)e − x in closed form.
    let oracle_t = |x: &CMatrix| CMatrix::identity(3, 3).map(|z| z * (x.trace() * (2.0 / 3.0))) - x;
    let witness = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0), c(-1.0), c(-1.0)]));
    let want = oracle_norm(&oracle_t(&witness));
    ensure((want - 5.0 / 3.0).abs() < 1e-12, || format!("oracle witness norm {want}"))?;
    let lib_img = lib(reflected_trace_map(3).apply(&FiberElement::Matrix(lib(measurable_bundles::fiber::MatrixFiberElement::new(witness.clone()))?)))?;
    ensure((lib_img.norm() - want).abs() < 1e-12, || format!("library witness image norm {}", lib_img.norm()))?;
    let est = lib(reflected.norm_estimate(200, 4))?;
    let sampled = (0..3).map(|a| est.sampled.re(a)).fold(f64::MAX, f64::min);
    ensure(!est.exact_one && sampled >= 1.65, || format!("reflected trace sampled norm {sampled}"))?;
    let mut proj = CMatrix::zeros(3, 3);
    proj[(0, 0)] = c(1.0);
    let oracle_min = oracle_min_eig(&oracle_t(&proj));
    ensure((oracle_min + 1.0 / 3.0).abs() < 1e-12, || format!("oracle min eigenvalue {oracle_min}"))?;
    let outcomes = lib(positivity_criterion_check(&reflected, 1e-10, 200, 4))?;
    let min_eig = outcomes.iter().map(|o| o.min_eigenvalue).fold(f64::MAX, f64::min);
    ensure(outcomes.iter().all(|o| !o.positive), || "reflected trace tested positive".into())?;
    ensure(min_eig <= -0.3, || format!("positive input gives min eigenvalue {min_eig}"))?;
    ensure(MarkovBundle::certify(reflected, 4).is_err(), || "reflected trace certified as Markov".into())?;
    Ok(format!(
        "100 certified bundles report 1 (raw sample exceeds 1 by at most {raw_excess:e}); reflected trace: sampled ‖T‖ ≥ {sampled:.6}, min eigenvalue {min_eig:.6}"
    ))
}

fn c5_example1() -> Outcome {
    let betas = [0.0, 0.1, 0.5, 1.0, 2.0];
    let space = lib(AtomicMeasureSpace::uniform(betas.len()))?;
    for &b in &betas {
        let v = lib(example1_v(b))?;
        let dv = (&v.entries - oracle_v(b)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        ensure(dv <= 1e-12, || format!("β = {b}: V differs from closed form by {dv:e}"))?;
        let side = lib(example1_side_residual(&v))?;
        let ov = oracle_v(b);
        let oside = oracle_norm(&(oracle_e(&(&ov * ov.adjoint())) - CMatrix::identity(2, 2)));
        ensure(side <= 1e-10 && oside <= 1e-10, || format!("β = {b}: side residual {side:e} (oracle {oside:e})"))?;
    }
    let sys = lib(build_example1(&space, &lib(L0Element::new_real(&space, &betas))?))?;
    let inv = &sys.invariance().residual;
    ensure((0..betas.len()).all(|a| inv.re(a) <= 1e-10), || format!("invariance residual {:?}", inv.re_values()))?;

    let supers = lib(sys.markov().superoperators())?;
    let spectra = lib(spectral_summary(sys.markov(), 1e-5))?;
    let mut oracle_gaps = Vec::new();
    for (a, &b) in betas.iter().enumerate() {
        let m = oracle_example1(b);
        let dm = (&supers[a] - &m).iter().map(|z| z.norm()).fold(0.0, f64::max);
        ensure(dm <= 1e-12, || format!("β = {b}: superoperator differs from oracle by {dm:e}"))?;
        // Trace preservation of the oracle map is the invariance of τ.
        for j in 0..2 {
            for i in 0..2 {
                let mut e = CMatrix::zeros(2, 2);
                e[(i, j)] = c(1.0);
                let r = (apply_superop(&m, &e).trace() - e.trace()).norm();
                ensure(r <= 1e-12, || format!("β = {b}: oracle map not trace preserving ({r:e})"))?;
            }
        }
        // The map is normal, so singular values are eigenvalue moduli.
        let comm = (&m * m.adjoint() - m.adjoint() * &m).iter().map(|z| z.norm()).fold(0.0, f64::max);
        ensure(comm <= 1e-12, || format!("β = {b}: superoperator not normal ({comm:e})"))?;
        let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
        sv.sort_by(|x, y| y.total_cmp(x));
        ensure((sv[0] - 1.0).abs() <= 1e-12 && sv[1] < 1.0 - 1e-6, || format!("β = {b}: unit modulus multiplicity > 1 ({sv:?})"))?;
        oracle_gaps.push(1.0 - sv[1]);
        let g = spectra[a].gap.ok_or("no spectral gap")?;
        ensure((g - (1.0 - sv[1])).abs() <= 1e-8, || format!("β = {b}: measured gap {g} vs oracle {}", 1.0 - sv[1]))?;
    }
    let fps = lib(fixed_point_space(sys.markov(), 1e-10))?;
    ensure(fps.dims().iter().all(|&n| n == 1), || format!("fixed dims {:?}", fps.dims()))?;

    let grid = DEFAULT_N_GRID;
    let i500 = grid.iter().position(|&n| n == 500).ok_or("500 not on grid")?;
    let mut worst_ratio: f64 = 0.0;
    for probe in 0..5u64 {
        let x = lib(measurable_bundles::cli::unit_self_adjoint_section(&space, 2, 500 + probe))?;
        let track = lib(ue_sweep(&sys, &x, &grid))?;
        let pred = lib(predicted_ue_deviation(&sys, &x, 500, &spectra))?;
        for (a, &b) in betas.iter().enumerate() {
            let xa = lib(x.at(a).as_matrix())?.entries.clone();
            // Oracle Cesàro average and prediction.
            let m = oracle_example1(b);
            let (mut cur, mut sum) = (xa.clone(), xa.clone());
            for _ in 1..500 {
                cur = apply_superop(&m, &cur);
                sum += &cur;
            }
            let centre = CMatrix::identity(2, 2).map(|z| z * (xa.trace() / 2.0));
            let dev = oracle_norm(&(sum.map(|z| z / 500.0) - &centre));
            let odev = track[i500].re(a);
            ensure((dev - odev).abs() <= 1e-10, || format!("β = {b}: deviation {odev:e} vs oracle {dev:e}"))?;
            let opred = 2.0 * oracle_norm(&(xa - centre)) / (500.0 * oracle_gaps[a]);
            ensure((opred - pred.re(a)).abs() <= 1e-8 * opred, || format!("β = {b}: prediction {} vs oracle {opred}", pred.re(a)))?;
            ensure(odev <= 10.0 * pred.re(a), || format!("β = {b}: deviation {odev:e} > 10 × predicted {:e}", pred.re(a)))?;
            worst_ratio = worst_ratio.max(odev / pred.re(a));
            let t: Vec<f64> = track.iter().map(|l| l.re(a)).collect();
            ensure(monotone_nonincreasing(&t), || format!("β = {b}: deviation not monotone: {t:?}"))?;
        }
    }
    Ok(format!(
        "side/invariance ≤ 1e-10, fixed dims {:?}, gaps {:?}, max deviation/predicted at n=500 = {worst_ratio:.3}",
        fps.dims(),
        oracle_gaps.iter().map(|g| format!("{g:.4}")).collect::<Vec<_>>()
    ))
}

fn c6_example2() -> Outcome {
    let alphas = [(5f64.sqrt() - 1.0) / 2.0, 2f64.sqrt() - 1.0, std::f64::consts::E - 2.0, PI - 3.0];
    let space = lib(AtomicMeasureSpace::uniform(alphas.len()))?;
    let budget = 8;
    let sys = lib(build_example2(&space, &lib(L0Element::new_real(&space, &alphas))?, budget))?;
    let grid = DEFAULT_N_GRID;
    let mut worst: f64 = 0.0;
    let mut ratio: f64 = 0.0;
    for k in (-8i64..=8).filter(|k| *k != 0) {
        let x = lib(mode_section(&space, budget, k))?;
        let avgs = lib(cesaro_sweep(sys.markov(), &x, &grid))?;
        let devs = lib(ue_sweep(&sys, &x, &grid))?;
        for (g, &n) in grid.iter().enumerate() {
            for (a, &al) in alphas.iter().enumerate() {
                let got = lib(avgs[g].at(a).as_trigpoly())?.coeff(k);
                let err = (got - oracle_rotation_coefficient(al, k, n)).norm();
                worst = worst.max(err);
                ensure(err <= 1e-12, || format!("α = {al}, k = {k}, n = {n}: closed-form error {err:e}"))?;
                let z = Complex64::from_polar(1.0, 2.0 * PI * (k as f64 * al).rem_euclid(1.0));
                let bound = 2.0 / (n as f64 * (c(1.0) - z).norm());
                let d = devs[g].re(a);
                ensure(d <= bound, || format!("α = {al}, k = {k}, n = {n}: deviation {d:e} > bound {bound:e}"))?;
                ratio = ratio.max(d / bound);
            }
        }
    }
    let fps = lib(fixed_point_space(sys.markov(), 1e-10))?;
    ensure(fps.dims().iter().all(|&n| n == 1), || format!("irrational fixed dims {:?}", fps.dims()))?;

    // Rational control: α = 1/4 fixes modes ±4 and ±8.
    let rspace = lib(AtomicMeasureSpace::uniform(2))?;
    let rsys = lib(build_example2(&rspace, &lib(L0Element::new_real(&rspace, &[alphas[0], 0.25]))?, budget))?;
    let rdims = lib(fixed_point_space(rsys.markov(), 1e-10))?.dims();
    ensure(rdims == vec![1, 5], || format!("rational control fixed dims {rdims:?}, expected [1, 5]"))?;
    let track = lib(ue_sweep(&rsys, &lib(mode_section(&rspace, budget, 4))?, &grid))?;
    let decays = lib(o_limit_per_atom(&track, &L0Element::zero(&rspace), 2e-2))?;
    ensure(decays == vec![true, false], || format!("mode-4 decay per atom {decays:?}"))?;

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = dir.path().join("rational.toml");
    std::fs::write(
        &cfg,
        format!("seed = 1\n[space]\natoms = 2\n[example]\nkind = \"example2\"\nalpha = [{}, 0.25]\nbudget = 8\n", alphas[0]),
    )
    .map_err(|e| e.to_string())?;
    let out = run_quiet(&cfg, &dir.path().join("out"), 1)?;
    let verdict = out
        .lines()
        .find(|l| l.contains("unique_ergodicity_verdict"))
        .ok_or("no verdict line")?;
    ensure(verdict.starts_with("PASS") && verdict.contains("w0=yes") && verdict.contains("w1=no"), || {
        format!("rational control verdict: {verdict}")
    })?;
    Ok(format!(
        "modes |k| ≤ 8 on 4 irrational α: max closed-form error {worst:e}, max deviation/bound {ratio:.3}; α = 1/4 reported non-uniquely-ergodic"
    ))
}

fn c7_localization() -> Outcome {
    let mut rng = random::rng_for(107, 0);
    let mut worst: f64 = 0.0;
    for s in 0..50u64 {
        let space = uniform_space(&mut rng, 16);
        let d = rng.random_range(1..=4);
        let phi = StateBundle::random(&mut rng, &space, d);
        let k = rng.random_range(1..=3);
        let t = MarkovBundle::random(&mut rng, &space, d, k);
        let st = lib(StateProbeTable::tabulate(&phi))?;
        let mt = lib(MapProbeTable::tabulate(&t))?;
        let phi2 = lib(st.localize())?;
        let t2 = lib(mt.localize(s))?;
        // localize ∘ eval is the identity on bundles.
        worst = worst.max(lib(density_distance(&phi, &phi2))?).max(lib(superoperator_distance(&t, &t2))?);
        // eval ∘ localize is the identity on global data, checked on random
        // sections against the oracle tr(ρ x) and the original map.
        let supers = lib(t.superoperators())?;
        for _ in 0..5 {
            let x = random::section(&mut rng, &space, FiberKind::Matrix { dim: d }, 0);
            let v = lib(state_eval(&phi2, &x))?;
            let tx = lib(t2.as_unital().apply(&x))?;
            for a in 0..space.len() {
                let xa = &lib(x.at(a).as_matrix())?.entries;
                let want = (lib(phi.density(a))? * xa).trace();
                worst = worst.max((v.value(a) - want).norm());
                let img = apply_superop(&supers[a], xa);
                let got = &lib(tx.at(a).as_matrix())?.entries;
                worst = worst.max((got - img).iter().map(|z| z.norm()).fold(0.0, f64::max));
            }
        }
    }
    ensure(worst <= 1e-12, || format!("round-trip error {worst:e}"))?;
    Ok(format!("50 systems: max round-trip error {worst:e}"))
}

fn mixed_unitary_system(rng: &mut impl Rng, space: &SpaceRef, d: usize) -> Result<DynamicalSystemBundle, String> {
    let kraus = (0..space.len())
        .map(|_| {
            let k = rng.random_range(1..=3);
            let w: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..1.0)).collect();
            let total: f64 = w.iter().sum();
            w.iter().map(|p| random::unitary(rng, d).map(|z| z * (p / total).sqrt())).collect()
        })
        .collect();
    let t = lib(MarkovBundle::from_kraus(space, d, kraus))?;
    lib(DynamicalSystemBundle::new("mixed_unitary", lib(StateBundle::canonical_trace(space, d))?, t, 1e-10))
}

fn c8_uniform_inequality() -> Outcome {
    let mut rng = random::rng_for(108, 0);
    let grid = DEFAULT_N_GRID;
    let mut systems: Vec<(DynamicalSystemBundle, Vec<Section>)> = Vec::new();
    let betas = [0.0, 0.1, 0.5, 1.0, 2.0];
    let s1 = lib(AtomicMeasureSpace::uniform(5))?;
    let e1 = lib(build_example1(&s1, &lib(L0Element::new_real(&s1, &betas))?))?;
    let p1 = (0..3).map(|_| random::section(&mut rng, &s1, FiberKind::Matrix { dim: 2 }, 0)).collect();
    systems.push((e1, p1));
    let s2 = lib(AtomicMeasureSpace::with_weights(&[0.5, 1.0, 2.0]))?;
    let e2 = lib(build_example2(&s2, &lib(L0Element::new_real(&s2, &[(5f64.sqrt() - 1.0) / 2.0, 0.25, 0.1]))?, 6))?;
    let p2 = lib([1, 3, 4].iter().map(|&k| mode_section(&s2, 6, k)).collect::<measurable_bundles::Result<Vec<_>>>())?;
    systems.push((e2, p2));
    for _ in 0..10 {
        let space = weighted_space(&mut rng, 8);
        let d = rng.random_range(2..=4);
        let sys = mixed_unitary_system(&mut rng, &space, d)?;
        let probes = (0..2).map(|_| random::section(&mut rng, &space, FiberKind::Matrix { dim: d }, 0)).collect();
        systems.push((sys, probes));
    }
    let mut max_excess = f64::MIN;
    let mut max_gap: f64 = 0.0;
    let mut points = 0;
    for (sys, probes) in &systems {
        for x in probes {
            let fiber = lib(ue_sweep(sys, x, &grid))?;
            for (g, u) in lib(uniform_ue_sweep(sys, x, &grid))?.iter().enumerate() {
                let oracle_sup = fiber[g].re_values().into_iter().fold(0.0, f64::max);
                ensure((u.sup_over_atoms - oracle_sup).abs() <= 1e-15, || "sup over atoms misreported".into())?;
                ensure(u.sup_over_atoms <= u.global_linf + 1e-12, || {
                    format!("{} n = {}: sup {:e} > global {:e}", sys.descriptor(), u.n, u.sup_over_atoms, u.global_linf)
                })?;
                max_excess = max_excess.max(u.sup_over_atoms - u.global_linf);
                max_gap = max_gap.max((u.sup_over_atoms - u.global_linf).abs());
                points += 1;
            }
        }
    }
    Ok(format!("{} systems, {points} (system, probe, n) points: max sup − global = {max_excess:e}, max |gap| = {max_gap:e}", systems.len()))
}

fn c9_fixed_points() -> Outcome {
    let mut rng = random::rng_for(109, 0);
    let mut sections = 0;
    let mut globally_fixed = 0;
    for _ in 0..20 {
        let space = uniform_space(&mut rng, 6);
        let d = rng.random_range(2..=6);
        let specs: Vec<BlockSpec> = (0..space.len())
            .map(|_| {
                let mut sizes = Vec::new();
                let mut left = d;
                while left > 0 {
                    let b = rng.random_range(1..=left);
                    sizes.push(b);
                    left -= b;
                }
                let phases = rng.random_bool(0.5).then(|| {
                    (0..d).map(|i| (i as f64 + rng.random_range(0.1..0.9)) * 2.0 * PI / d as f64).collect()
                });
                BlockSpec { sizes, phases, p: rng.random_range(0.2..0.8) }
            })
            .collect();
        let t = lib(build_block_system(&space, &specs))?;
        let fps = lib(fixed_point_space(&t, 1e-10))?;
        let expected: Vec<usize> = specs.iter().map(BlockSpec::expected_fixed_dim).collect();
        ensure(fps.dims() == expected, || format!("fixed dims {:?}, designed {expected:?}", fps.dims()))?;
        for trial in 0..10 {
            // Designed membership: atom fixed unless chosen to be perturbed.
            // A generic matrix is fixed only where T is the identity map.
            let design: Vec<bool> = specs
                .iter()
                .map(|s| trial % 3 == 0 || rng.random_bool(0.6) || s.expected_fixed_dim() == d * d)
                .collect();
            let mats: Vec<CMatrix> = specs
                .iter()
                .zip(&design)
                .map(|(s, &fixed)| {
                    let g = random::ginibre(&mut rng, d);
                    if !fixed {
                        return g;
                    }
                    let block = |i: usize| {
                        let mut acc = 0;
                        s.sizes.iter().position(|b| {
                            acc += b;
                            i < acc
                        })
                    };
                    CMatrix::from_fn(d, d, |i, j| {
                        let keep = match s.phases {
                            None => block(i) == block(j),
                            Some(_) => i == j,
                        };
                        if keep {
                            g[(i, j)]
                        } else {
                            c(0.0)
                        }
                    })
                })
                .collect();
            let x = lib(matrix_section(&space, mats))?;
            let per = lib(fixed_per_atom(&fps, &x, 1e-10))?;
            let by_map = lib(fixed_by_map(&t, &x, 1e-10))?;
            let global = lib(is_fixed(&t, &x, 1e-10))?;
            ensure(per == design, || format!("per-atom membership {per:?}, designed {design:?}"))?;
            ensure(by_map == design, || format!("map membership {by_map:?}, designed {design:?}"))?;
            ensure(global == design.iter().all(|&b| b), || format!("global membership {global}, design {design:?}"))?;
            sections += 1;
            globally_fixed += global as usize;
        }
    }
    Ok(format!("20 block systems, {sections} sections ({globally_fixed} globally fixed): memberships agree exactly"))
}

fn run_quiet(config: &Path, out: &Path, seed: u64) -> Result<String, String> {
    let opts = CommonOptions { config: Some(config.to_path_buf()), seed: Some(seed), out: Some(out.to_path_buf()), quiet: true };
    let outcome = cmd_run(&opts).map_err(|e| e.message().to_string())?;
    std::fs::read_to_string(out.join("summary.txt")).map_err(|e| format!("{e} (exit {})", outcome.exit_code))
}

fn dir_bytes(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| e.to_string())?
        .map(|e| {
            let e = e.map_err(|e| e.to_string())?;
            Ok((e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).map_err(|e| e.to_string())?))
        })
        .collect::<Result<_, String>>()?;
    files.sort();
    Ok(files)
}

fn c10_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg2 = dir.path().join("example2.toml");
    std::fs::write(&cfg2, "[space]\natoms = 3\n[example]\nkind = \"example2\"\nalpha = [0.6180339887498949, 0.4142135623730951, 0.25]\n")
        .map_err(|e| e.to_string())?;
    let cfg1 = dir.path().join("example1.toml");
    std::fs::write(&cfg1, "[space]\natoms = 5\n[example]\nkind = \"example1\"\nbeta = [0.0, 0.1, 0.5, 1.0, 2.0]\n")
        .map_err(|e| e.to_string())?;
    let mut compared = 0;
    for (label, cfg) in [("example1", &cfg1), ("example2", &cfg2)] {
        let mut runs = Vec::new();
        for r in 0..2 {
            let out = dir.path().join(format!("{label}-{r}"));
            let opts = CommonOptions { config: Some(cfg.clone()), seed: Some(2024), out: Some(out.clone()), quiet: true };
            cmd_run(&opts).map_err(|e| e.message().to_string())?;
            cmd_check_axioms(&opts).map_err(|e| e.message().to_string())?;
            runs.push(dir_bytes(&out)?);
        }
        ensure(!runs[0].is_empty() && runs[0] == runs[1], || format!("{label}: outputs differ between runs"))?;
        compared += runs[0].len();
    }
    Ok(format!("{compared} output files byte-identical across two seeded runs"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("1 c_star_identity", c1_c_star_identity),
        ("2 cauchy_schwarz", c2_cauchy_schwarz),
        ("3 state_norm_suite", c3_state_norm_suite),
        ("4 positivity_criterion", c4_positivity_criterion),
        ("5 example1_channel", c5_example1),
        ("6 example2_rotation", c6_example2),
        ("7 localization_roundtrip", c7_localization),
        ("8 uniform_inequality", c8_uniform_inequality),
        ("9 fixed_point_membership", c9_fixed_points),
        ("10 determinism", c10_determinism),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = std::time::Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS criterion {name} ({secs:.1}s): {detail}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {name} ({secs:.1}s): {msg}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
