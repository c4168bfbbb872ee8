//! Fixed sections of block systems: global membership agrees with per-atom
//! membership.

use measurable_bundles::dynamics::{build_block_system, fixed_by_map, fixed_per_atom, fixed_point_space, BlockSpec};
use measurable_bundles::fiber::FiberKind;
use measurable_bundles::measure::AtomicMeasureSpace;
use measurable_bundles::{random, Section};

fn main() -> measurable_bundles::Result<()> {
    let specs = vec![
        BlockSpec { sizes: vec![2, 2], phases: None, p: 0.3 },
        BlockSpec { sizes: vec![1, 3], phases: Some(vec![0.0, 0.7, 1.9, 2.8]), p: 0.6 },
    ];
    let space = AtomicMeasureSpace::uniform(2)?;
    let t = build_block_system(&space, &specs)?;
    let fps = fixed_point_space(&t, 1e-10)?;
    let expected: Vec<_> = specs.iter().map(BlockSpec::expected_fixed_dim).collect();
    println!("fixed dims {:?}, expected {:?}", fps.dims(), expected);

    let mut rng = random::rng_for(2, 0);
    let x = random::section(&mut rng, &space, FiberKind::matrix(4)?, 0);
    println!("random x: per atom {:?}, by map {:?}", fixed_per_atom(&fps, &x, 1e-10)?, fixed_by_map(&t, &x, 1e-10)?);
    let e = Section::unit(&space, FiberKind::matrix(4)?);
    println!("unit e:   per atom {:?}, by map {:?}", fixed_per_atom(&fps, &e, 1e-10)?, fixed_by_map(&t, &e, 1e-10)?);
    Ok(())
}
