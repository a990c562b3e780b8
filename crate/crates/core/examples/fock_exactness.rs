//! For |z|², every correction b_m with m ≥ 1 vanishes identically.

use std::time::Instant;

use bergman::kahler::fock_potential;
use bergman::recursion::compute_all;
use bergman::scalar::Exact;

fn main() -> bergman::Result<()> {
    for n in [1, 2, 3] {
        let start = Instant::now();
        let t = compute_all(&fock_potential::<Exact>(n), 8, 4)?;
        let nonzero: Vec<usize> = (1..t.b.len()).filter(|&m| !t.b[m].is_zero()).collect();
        println!("n = {n}: b_1..b_8 nonzero at {nonzero:?}  ({:.2?})", start.elapsed());
    }
    Ok(())
}
