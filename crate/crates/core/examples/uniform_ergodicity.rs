//! Sup over atoms of the fiberwise deviation versus the global `L∞`
//! deviation of the bundle.

use measurable_bundles::dynamics::{build_example2, mode_section, uniform_ue_sweep};
use measurable_bundles::measure::{AtomicMeasureSpace, L0Element};

fn main() -> measurable_bundles::Result<()> {
    let alphas = [(5f64.sqrt() - 1.0) / 2.0, 2f64.sqrt() - 1.0, 0.1];
    let space = AtomicMeasureSpace::uniform(alphas.len())?;
    let sys = build_example2(&space, &L0Element::new_real(&space, &alphas)?, 4)?;
    let x = mode_section(&space, 4, 1)?;
    let grid = [1, 5, 10, 50, 100, 500];
    println!("n, sup over atoms, global L∞");
    for u in uniform_ue_sweep(&sys, &x, &grid)? {
        println!("{}, {:e}, {:e}", u.n, u.sup_over_atoms, u.global_linf);
    }
    Ok(())
}
