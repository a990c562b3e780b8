//! Truncated multivariate jets: products, inverse, exp/log and the (w, u) shift.

use bergman::jet::Jet;
use bergman::kahler::{shift_to_wu, z_layout};
use bergman::scalar::{exact, Exact};
use smallvec::smallvec;

fn show(j: &Jet<Exact>) -> String {
    let parts: Vec<String> = j.terms().map(|(k, c)| format!("({}) z^{} zbar^{}", c.re, k[0], k[1])).collect();
    parts.join(" + ")
}

fn main() -> bergman::Result<()> {
    let l = z_layout(1);
    let cap = 4;
    let z = Jet::<Exact>::var(&l, cap, 0, 0);
    let zbar = Jet::<Exact>::var(&l, cap, 1, 0);
    let t = z.mul(&zbar)?;
    let one_plus = Jet::one(&l, cap).add(&t)?;

    println!("1 + |z|^2        = {}", show(&one_plus));
    println!("1/(1 + |z|^2)    = {}", show(&one_plus.inv()?));
    println!("log(1 + |z|^2)   = {}", show(&one_plus.log()?));
    assert_eq!(one_plus.log()?.exp()?, one_plus);

    // z^2 z̄ + (1/3) z z̄^2 has no Hermitian symmetry; adding the conjugate restores it.
    let f = Jet::from_terms(&l, cap, [(smallvec![2, 1], exact(1, 1)), (smallvec![1, 2], exact(1, 3))]);
    println!("hermitian? {}  after symmetrizing: {}", f.is_hermitian(), f.add(&f.conj())?.is_hermitian());

    let shifted = shift_to_wu(&t)?;
    println!("|w+u|^2 has {} terms in (w, w̄, u, ū)", shifted.nnz());
    println!("d/dz f = {}", show(&f.derive(0, 0, 1)));
    Ok(())
}
