//! The drum Hamiltonian generates time translations, which are not
//! symmetries of the drum, and indeed fails to commute with `S`. Parity is a
//! symmetry and commutes.
//!
//! ```bash
//! cargo run -p sigop --example drum_counterexample
//! ```

use sigop::sigop::assemble_signature;
use sigop::symmetry::{hamiltonian_matrix, make_action, unitary_matrix};
use sigop::verify::normalized_commutator;
use sigop::{Basis, QuadratureSpec, SpacetimeModel};

pub fn run_example() -> sigop::Result<()> {
    let parity = make_action(&SpacetimeModel::drum(), "parity")?;
    println!("{:>3} {:>14} {:>14}", "N", "‖[H,S]‖/‖H‖‖S‖", "‖[P,S]‖/‖P‖‖S‖");
    for n in [4, 8, 12, 16] {
        let quad = QuadratureSpec::for_truncation(n);
        let basis = Basis::drum(n, &quad)?;
        let s = assemble_signature(&basis, &quad)?;
        let h = hamiltonian_matrix(&basis)?;
        let p = unitary_matrix(&parity, &basis)?;
        println!("{n:>3} {:>14.6} {:>14.2e}", normalized_commutator(&h, &s)?, normalized_commutator(&p, &s)?);
    }
    // [H, S] has entries ±1/(2π) on every (L,n)/(R,n) pair while ‖H‖ grows
    // like N^{3/2}, so the normalized value decays like 1/N.
    Ok(())
}

#[allow(dead_code)]
fn main() -> sigop::Result<()> {
    run_example()
}
