//! `L0`-valued norms, d-decomposition and `(bo)`-limits of sections.

use measurable_bundles::bundle::{bo_limit_check, d_decompose};
use measurable_bundles::fiber::FiberKind;
use measurable_bundles::measure::{ess_sup, AtomicMeasureSpace, L0Element};
use measurable_bundles::random;

fn main() -> measurable_bundles::Result<()> {
    let space = AtomicMeasureSpace::with_weights(&[0.5, 0.25, 0.25])?;
    let mut rng = random::rng_for(11, 0);
    let x = random::section(&mut rng, &space, FiberKind::matrix(3)?, 0);
    let n = x.norm();
    println!("‖x‖ = {:?}, ess sup = {:.6}", n.re_values(), ess_sup(&n));

    // Split ‖x‖ on atoms {w0} and {w1, w2}.
    let e1 = L0Element::new_real(&space, &[n.re(0), 0.0, 0.0])?;
    let e2 = L0Element::new_real(&space, &[0.0, n.re(1), n.re(2)])?;
    let (x1, x2) = d_decompose(&x, &e1, &e2)?;
    println!("‖x1‖ = {:?}, ‖x2‖ = {:?}", x1.norm().re_values(), x2.norm().re_values());
    println!("x1 + x2 == x: {}", x1.add(&x2)? == x);

    let seq: Vec<_> = (1..=2000).map(|k| x.scale((1.0 + 1.0 / k as f64).into())).collect();
    println!("(1 + 1/k)·x → x in (bo): {}", bo_limit_check(&seq, &x, 1e-2)?);
    Ok(())
}
