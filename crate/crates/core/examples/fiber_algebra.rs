//! C*-identity on matrix and trigonometric-polynomial fibers.

use measurable_bundles::fiber::{c_star_identity_residual, trigpoly_cstar_tolerance, FiberElement, FiberKind};
use measurable_bundles::random;

fn main() -> measurable_bundles::Result<()> {
    let mut rng = random::rng_for(7, 0);
    for d in [2, 4, 8] {
        let kind = FiberKind::matrix(d)?;
        let a = random::fiber_element(&mut rng, kind, 0);
        println!("M_{d}: ‖a‖ = {:.6}, |‖a*a‖ − ‖a‖²| = {:e}", a.norm(), c_star_identity_residual(&a, &kind)?);
    }
    let k = 4;
    let kind = FiberKind::trigpoly(2 * k)?;
    let p = random::trigpoly(&mut rng, k);
    let r = c_star_identity_residual(&FiberElement::TrigPoly(p.clone()), &kind)?;
    println!("trigpoly deg {k}: sup ≈ {:.6}, residual {r:e} within grid tolerance {:e}", p.norm(), trigpoly_cstar_tolerance(&p));
    Ok(())
}
