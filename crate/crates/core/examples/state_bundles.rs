//! State bundles: evaluation, Cauchy–Schwarz and the norm/positivity suite.

use measurable_bundles::measure::{AtomicMeasureSpace, L0Element};
use measurable_bundles::states::{cauchy_schwarz_residual, state_norm_suite, state_eval, StateBundle};
use measurable_bundles::{random, Section};

fn main() -> measurable_bundles::Result<()> {
    let space = AtomicMeasureSpace::uniform(4)?;
    let mut rng = random::rng_for(3, 0);
    let phi = StateBundle::random(&mut rng, &space, 3);
    let psi = StateBundle::canonical_trace(&space, 3)?;
    let kind = phi.kind();
    println!("φ(e) = {:?}", state_eval(&phi, &Section::unit(&space, kind))?.re_values());

    let a = random::section(&mut rng, &space, kind, 0);
    let b = random::section(&mut rng, &space, kind, 0);
    let cs = cauchy_schwarz_residual(&phi, &a, &b)?;
    println!("Cauchy–Schwarz excess {:?}", cs.residual.re_values());

    let alpha = L0Element::new_real(&space, &[0.2, 1.0, 3.0, 0.0])?;
    let beta = L0Element::constant(&space, 0.5);
    let r = state_norm_suite(&phi, &psi, &alpha, &beta, 100, 3)?;
    println!(
        "chain violations {:e}/{:e}, ‖αφ‖ − αφ(e) = {:e}, additivity residual {:e}",
        r.chain_lower,
        r.chain_upper,
        r.positive_norm.unwrap_or(0.0),
        r.additivity.unwrap_or(0.0)
    );
    Ok(())
}
