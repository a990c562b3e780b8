//! −log(1−|z|²): b_1 = −1, and the weighted monomial norms are Beta integrals.

use bergman::kahler::hyperbolic_potential;
use bergman::oracles::{hyperbolic_monomial_norm, radial_monomial_norm, QuadratureSpec, RadialProfile};
use bergman::recursion::{compute_all, required_order};
use bergman::scalar::{Coeff, Exact};

fn main() -> bergman::Result<()> {
    let p = hyperbolic_potential::<Exact>(1, required_order(4, 2))?;
    let t = compute_all(&p, 4, 2)?;
    let b: Vec<_> = (0..=4).map(|m| t.value_at_origin(m).to_c64().re).collect();
    println!("b_m(0), m = 0..4: {b:?}");

    let spec = QuadratureSpec::default();
    println!("{:>5} {:>4} {:>22} {:>22} {:>9}", "k", "j", "Beta", "quadrature", "rel");
    for k in [2.5, 10.0, 60.0] {
        for j in [0, 5, 30] {
            let exact = hyperbolic_monomial_norm(k, j)?;
            let quad = radial_monomial_norm(&RadialProfile::Hyperbolic, k, j, &spec)?.value();
            println!("{k:>5} {j:>4} {exact:>22.15e} {quad:>22.15e} {:>9.1e}", (quad - exact).abs() / exact);
        }
    }
    Ok(())
}
