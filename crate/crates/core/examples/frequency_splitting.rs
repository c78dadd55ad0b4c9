//! On a long slab the sign of each eigenvalue of `S` predicts whether its
//! eigenvector is made of positive- or negative-frequency modes.
//!
//! ```bash
//! cargo run -p sigop --example frequency_splitting
//! ```

use sigop::sigop::assemble_signature;
use sigop::verify::check_frequency_splitting;
use sigop::{Basis, QuadratureSpec, SpacetimeModel};

pub fn run_example() -> sigop::Result<()> {
    for lifetime in [1.0, 5.0, 50.0] {
        let slab = SpacetimeModel::slab(1.0, lifetime)?;
        let quad = QuadratureSpec::for_truncation(4);
        let basis = Basis::slab(&slab, 4, &quad)?;
        let s = assemble_signature(&basis, &quad)?;
        let report = check_frequency_splitting(&basis, &s)?;
        println!("T = {lifetime:>4}: aligned fraction {:.3} (pass: {})", report.value, report.pass);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> sigop::Result<()> {
    run_example()
}
