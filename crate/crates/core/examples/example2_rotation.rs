//! Irrational rotations of the circle: Cesàro coefficients of each mode
//! against the closed form, and a rational control that is not uniquely
//! ergodic.

use measurable_bundles::dynamics::{build_example2, mode_section, rotation_cesaro_coefficient, rotation_deviation_bound, uniform_ue_deviation, cesaro_average};
use measurable_bundles::measure::{AtomicMeasureSpace, L0Element};

fn main() -> measurable_bundles::Result<()> {
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    let space = AtomicMeasureSpace::uniform(2)?;
    let budget = 8;
    let sys = build_example2(&space, &L0Element::new_real(&space, &[golden, 0.25])?, budget)?;
    for k in [1i64, 3, 4] {
        let x = mode_section(&space, budget, k)?;
        for n in [10, 100, 1000] {
            let avg = cesaro_average(sys.markov(), &x, n)?;
            let got = avg.at(0).as_trigpoly()?.coeff(k);
            let err = (got - rotation_cesaro_coefficient(golden, k, n)).norm();
            println!(
                "k = {k}, n = {n}: |c_n| = {:.3e}, closed-form error {err:.1e}, bound {:.3e}, uniform deviation {:.3e}",
                got.norm(),
                rotation_deviation_bound(golden, k, n),
                uniform_ue_deviation(&sys, &x, n)?
            );
        }
    }
    println!("α = 1/4 fixes mode 4, so the uniform deviation stays at 1 on that atom");
    Ok(())
}
