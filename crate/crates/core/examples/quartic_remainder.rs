//! Truncation remainders for |z|² + λ|z|⁴ against the Gram-matrix kernel.

use bergman::asymptotics::{remainder_scan, ExpansionSymbol};
use bergman::kahler::rational;
use bergman::oracles::KernelModel;
use bergman::recursion::compute_all;
use bergman::scalar::Exact;
use num_complex::Complex64;

fn main() -> bergman::Result<()> {
    let model = KernelModel::quartic(rational(1, 10));
    let p = model.potential::<Exact>(0)?;
    let table = compute_all(&p, 4, 14)?;
    let sym = ExpansionSymbol::from_potential(&table, &p)?;
    let ks = [20.0, 30.0, 40.0, 60.0, 80.0];
    for x in [Complex64::new(0.0, 0.0), Complex64::new(0.2, 0.1)] {
        let scan = remainder_scan(&model, &sym, &ks, &[0, 1, 2, 3, 4], &[x], &[x])?;
        println!("x = {x}");
        for (n, row) in scan.remainders.iter().enumerate() {
            let slope = scan.slopes[n].map_or(f64::NAN, |f| f.slope);
            let cells: Vec<String> = row.iter().map(|r| format!("{r:9.2e}")).collect();
            println!("  N = {n}: {}   slope {slope:+.2}", cells.join(" "));
        }
    }
    Ok(())
}
