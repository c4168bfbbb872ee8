//! The thermal channel `T_V(x) = ℰ_2(V*(e ⊗ x)V)` with `V = √(2/(1+cosh 2β))·e^{βH}`:
//! side condition, spectrum and decay of the unique-ergodicity deviation.

use measurable_bundles::dynamics::{build_example1, fixed_point_space, spectral_summary, ue_sweep, DEFAULT_N_GRID};
use measurable_bundles::measure::{AtomicMeasureSpace, L0Element};
use measurable_bundles::cli::unit_self_adjoint_section;

fn main() -> measurable_bundles::Result<()> {
    let betas = [0.1, 0.5, 1.0, 2.0];
    let space = AtomicMeasureSpace::uniform(betas.len())?;
    let sys = build_example1(&space, &L0Element::new_real(&space, &betas)?)?;
    println!("invariance residual {:?}", sys.invariance().residual.re_values());
    println!("fixed dims {:?}", fixed_point_space(sys.markov(), 1e-10)?.dims());
    for (b, s) in betas.iter().zip(spectral_summary(sys.markov(), 1e-5)?) {
        println!("β = {b}: spectral gap {:.4}", s.gap.unwrap_or(0.0));
    }
    let x = unit_self_adjoint_section(&space, 2, 1)?;
    println!("n, deviation per atom");
    for (n, d) in DEFAULT_N_GRID.iter().zip(ue_sweep(&sys, &x, &DEFAULT_N_GRID)?) {
        println!("{n}, {:?}", d.re_values());
    }
    Ok(())
}
