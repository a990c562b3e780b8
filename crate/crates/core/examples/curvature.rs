//! b_1 agrees with half the scalar curvature of the metric.

use bergman::kahler::{metric_from_potential, radial_polynomial_potential, scalar_curvature};
use bergman::kahler::rational;
use bergman::recursion::compute_all;
use bergman::scalar::{exact, Exact};

fn main() -> bergman::Result<()> {
    let p = radial_polynomial_potential::<Exact>(&[rational(1, 1), rational(1, 1)])?;
    let t = compute_all(&p, 1, 4)?;
    // ρ loses two degrees to derivatives, so build the metric from a longer jet.
    let rho = scalar_curvature(&metric_from_potential(&p.at_order(8)?)?)?;
    let half = rho.truncate(4).scale(&exact(1, 2)).relabel(t.b[1].layout())?;
    println!("phi = |z|^2 + |z|^4");
    for (key, c) in t.b[1].terms() {
        println!("  b_1 [{key:?}] = {}", c.re);
    }
    println!("b_1 == rho/2 through degree 4: {}", half == t.b[1].truncate(4));
    Ok(())
}
