//! Sup-norm growth of b_m on a small disc and the resulting optimal truncation order.

use bergman::asymptotics::{growth_fit, optimal_truncation};
use bergman::kahler::{radial_polynomial_potential, rational};
use bergman::recursion::compute_all;
use bergman::scalar::Exact;

fn main() -> bergman::Result<()> {
    let p = radial_polynomial_potential::<Exact>(&[rational(1, 1), rational(1, 1)])?;
    let t = compute_all(&p, 10, 4)?;
    let g = growth_fit(&t, 0.25);
    for (m, (s, r)) in g.sup_norms.iter().zip(&g.ratios).enumerate() {
        println!("m = {m:>2}  S_m = {s:12.5e}  (S_m/m!)^(1/(m+1)) = {r:.4}");
    }
    println!("bounded: {}", g.bounded);
    for k in [10.0, 40.0, 80.0, 160.0] {
        println!("k = {k:>5}: N* = {}", optimal_truncation(k, &g));
    }
    Ok(())
}
