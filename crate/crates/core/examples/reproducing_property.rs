//! ∫ χ K^(N)(x, y) u(y) e^{−kφ(y)} dV(y) against u(x), with a smooth cutoff χ.

use bergman::asymptotics::ExpansionSymbol;
use bergman::kahler::rational;
use bergman::oracles::{reproducing_test, Cutoff, KernelModel, QuadratureSpec};
use bergman::recursion::compute_all;
use bergman::scalar::Exact;
use num_complex::Complex64;

fn main() -> bergman::Result<()> {
    let model = KernelModel::quartic(rational(1, 10));
    let p = model.potential::<Exact>(0)?;
    let sym = ExpansionSymbol::from_potential(&compute_all(&p, 2, 16)?, &p)?;
    let spec = QuadratureSpec::default();
    let x = Complex64::new(0.0, 0.0);
    let u = [Complex64::new(1.0, 0.0)];
    for k in [20.0, 40.0, 80.0] {
        let errs: Vec<String> = (0..=2)
            .map(|n| reproducing_test(&model, &sym, k, n, &u, x, Cutoff::default(), &spec).map(|r| format!("{:.3e}", r.rel_error)))
            .collect::<bergman::Result<_>>()?;
        println!("k = {k:>3}: relative error for N = 0, 1, 2: {}", errs.join("  "));
    }
    Ok(())
}
