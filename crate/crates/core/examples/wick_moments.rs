//! Gaussian moments by Wick pairing, checked against a frozen Laplacian contraction.

use bergman::jet::MultiIndex;
use bergman::oracles::wick_moment;
use bergman::kahler::rational;
use bergman::scalar::{exact, Exact};

fn main() -> bergman::Result<()> {
    // Q = [[2, i], [−i, 3]]
    let q: Vec<Vec<Exact>> = vec![
        vec![exact(2, 1), Exact::new(rational(0, 1), rational(1, 1))],
        vec![Exact::new(rational(0, 1), rational(-1, 1)), exact(3, 1)],
    ];
    let k = rational(5, 2);
    for (a, b) in [([1, 0], [1, 0]), ([1, 0], [0, 1]), ([2, 1], [1, 2]), ([1, 1], [2, 0])] {
        let w = wick_moment(&MultiIndex::new(&a), &MultiIndex::new(&b), &q, &k)?;
        println!("E[u^{a:?} ū^{b:?}] = ({} + {} i) π^{}   ≈ {:.6}", w.coeff.re, w.coeff.im, w.pi_power, w.to_f64());
    }
    Ok(())
}
