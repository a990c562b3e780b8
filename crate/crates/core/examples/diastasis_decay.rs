//! Off-diagonal decay: log|K(x,y)|² − log K(x,x) − log K(y,y) ≈ −k D(x,y).

use bergman::asymptotics::diastasis_decay_check;
use bergman::oracles::KernelModel;
use num_complex::Complex64;

fn main() -> bergman::Result<()> {
    let c = |re: f64, im: f64| vec![Complex64::new(re, im)];
    let pairs = vec![(c(0.0, 0.0), c(0.3, 0.0)), (c(0.1, 0.2), c(-0.2, 0.1)), (c(0.5, 0.0), c(0.0, 0.5))];
    for model in [KernelModel::hyperbolic(), KernelModel::fubini_study()] {
        let report = diastasis_decay_check(&model, &[10.0, 20.0, 40.0, 80.0], &pairs)?;
        println!("{}:", model.name());
        for p in &report.pairs {
            let slope = p.fit.map_or(f64::NAN, |f| f.slope);
            println!("  D = {:.5}  residual slope {slope:+.3}", p.diastasis);
        }
    }
    Ok(())
}
