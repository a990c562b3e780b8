//! Parse a potential file, complete it to a Hermitian series and compute coefficients.

use bergman::cli::PotentialSpec;
use bergman::recursion::compute_all;

const SPEC: &str = r#"{
  "dimension": 1,
  "monomials": [
    {"alpha": [1], "beta": [1], "re": "1"},
    {"alpha": [2], "beta": [1], "re": "1/4", "im": "1/2"},
    {"alpha": [2], "beta": [2], "re": "1/3"}
  ]
}"#;

fn main() -> bergman::Result<()> {
    let spec = PotentialSpec::parse(SPEC)?;
    println!("canonical form:\n{}", spec.canonical_json());
    println!("input hash: {}", spec.input_hash());
    let p = spec.potential_exact(0)?;
    let t = compute_all(&p, 2, 2)?;
    for (m, b) in t.b.iter().enumerate() {
        for (key, c) in b.terms() {
            println!("b_{m} {key:?}: {} + {} i", c.re, c.im);
        }
    }
    Ok(())
}
