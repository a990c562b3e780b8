//! log(1+|z|²): b_1 = 1, higher coefficients vanish, and (k/π)(1 + 1/k)(1+xȳ)^k is exact.

use bergman::asymptotics::ExpansionSymbol;
use bergman::kahler::fubini_study_potential;
use bergman::oracles::fs_kernel;
use bergman::recursion::{compute_all, required_order};
use bergman::scalar::{Coeff, Exact};
use num_complex::Complex64;

fn main() -> bergman::Result<()> {
    let (m_max, cap) = (5, 4);
    let p = fubini_study_potential::<Exact>(1, required_order(m_max, cap))?;
    let t = compute_all(&p, m_max, cap)?;
    for (m, b) in t.b.iter().enumerate() {
        println!("b_{m}(0) = {:?}   terms stored: {}", t.value_at_origin(m).to_c64(), b.nnz());
    }
    let sym = ExpansionSymbol::from_potential(&t, &p)?;
    let (x, y) = (Complex64::new(0.1, 0.05), Complex64::new(0.02, -0.1));
    for k in [3.0, 10.0, 50.0] {
        let approx = sym.eval(k, 1, &[x], &[y])?;
        let truth = fs_kernel(k, x, y);
        println!("k = {k:>4}: K^(1) = {approx:.12}  exact = {truth:.12}");
    }
    Ok(())
}
