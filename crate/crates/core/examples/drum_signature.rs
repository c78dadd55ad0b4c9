//! Assemble the drum's signature operator and inspect its structure.
//!
//! ```bash
//! cargo run -p sigop --example drum_signature
//! ```

use std::f64::consts::PI;

use sigop::sigop::{assemble_signature, inner_product_matrix, spectral_decompose};
use sigop::{Basis, QuadratureSpec};

pub fn run_example() -> sigop::Result<()> {
    let n = 4;
    let quad = QuadratureSpec::for_truncation(n);
    let basis = Basis::drum(n, &quad)?;
    println!("drum basis: {} modes, Gram condition {:.3}", basis.dim(), basis.frame().condition());

    // A couples (L, n) only with (R, n).
    let a = inner_product_matrix(&basis, &quad)?;
    let labels = basis.labels();
    for j in 0..basis.dim() {
        for k in 0..basis.dim() {
            if a[(j, k)].norm() > 1e-8 && j < k {
                println!("  <{}|{}> = {:+.6}i", labels[j], labels[k], a[(j, k)].im);
            }
        }
    }

    let s = assemble_signature(&basis, &quad)?;
    let dec = spectral_decompose(&s)?;
    println!("eigenvalues of S (expected ±1/(4π|n|)):");
    for lambda in dec.eigenvalues() {
        println!("  {lambda:+.10}  4π·λ = {:+.6}", 4.0 * PI * lambda);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> sigop::Result<()> {
    run_example()
}
