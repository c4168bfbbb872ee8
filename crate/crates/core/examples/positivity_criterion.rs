//! A unital map is positive iff its norm is one: a certified channel versus
//! the reflected trace `T(x) = 2τ(x)e − x` on `M_3`.

use measurable_bundles::fiber::FiberKind;
use measurable_bundles::markov::{positivity_criterion_check, reflected_trace_map, UnitalMapBundle};
use measurable_bundles::measure::AtomicMeasureSpace;
use measurable_bundles::{random, MarkovBundle};

fn main() -> measurable_bundles::Result<()> {
    let space = AtomicMeasureSpace::uniform(2)?;
    let mut rng = random::rng_for(5, 0);
    let channel = MarkovBundle::random(&mut rng, &space, 3, 3);
    let est = channel.norm_estimate(200, 5)?;
    println!("random channel: sampled ‖T‖ = {:?}, certified = {}", est.sampled.re_values(), est.exact_one);

    let kind = FiberKind::matrix(3)?;
    let reflected = UnitalMapBundle::new(&space, kind, vec![reflected_trace_map(3); 2])?;
    for o in positivity_criterion_check(&reflected, 1e-10, 200, 5)? {
        println!(
            "{}: positive = {}, min eigenvalue {:.4}, ‖T‖ ≥ {:.4}, verdict {:?}",
            o.atom, o.positive, o.min_eigenvalue, o.norm_estimate, o.verdict
        );
    }
    println!("certifying it as Markov: {}", MarkovBundle::certify(reflected, 5).unwrap_err());
    Ok(())
}
