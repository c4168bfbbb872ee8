//! Recovering fiberwise states and Markov maps from global `L0`-linear data.

use measurable_bundles::localize::{density_distance, superoperator_distance, MapProbeTable, StateProbeTable};
use measurable_bundles::measure::AtomicMeasureSpace;
use measurable_bundles::{random, MarkovBundle, StateBundle};

fn main() -> measurable_bundles::Result<()> {
    let space = AtomicMeasureSpace::uniform(5)?;
    let mut rng = random::rng_for(9, 0);
    let phi = StateBundle::random(&mut rng, &space, 3);
    let t = MarkovBundle::random(&mut rng, &space, 3, 2);

    let st = StateProbeTable::tabulate(&phi)?;
    let mt = MapProbeTable::tabulate(&t)?;
    println!("tabulated {} state probes and {} map probes", st.values.len(), mt.outputs.len());
    println!("state recovery error {:e}", density_distance(&phi, &st.localize()?)?);
    println!("map recovery error {:e}", superoperator_distance(&t, &mt.localize(9)?)?);
    Ok(())
}
