//! Parity, time reflection and translations of the slab, implemented as
//! unitaries on the mode span: `U*SU = εS`, with `ε = −1` for the time
//! reflection.
//!
//! ```bash
//! cargo run -p sigop --example slab_symmetries
//! ```

use sigop::sigop::assemble_signature;
use sigop::symmetry::{make_action, unitarity_defect, unitary_matrix};
use sigop::verify::check_signature_symmetry;
use sigop::{Basis, QuadratureSpec, SpacetimeModel};

pub fn run_example() -> sigop::Result<()> {
    let slab = SpacetimeModel::slab(1.0, 2.0)?;
    let quad = QuadratureSpec::for_truncation(4);
    let basis = Basis::slab(&slab, 4, &quad)?;
    let s = assemble_signature(&basis, &quad)?;
    for name in ["parity", "time-reflection", "translate:0.7", "translate:-2.5"] {
        let action = make_action(&slab, name)?;
        action.verify_axioms()?;
        let u = unitary_matrix(&action, &basis)?;
        let report = check_signature_symmetry(&s, &u, action.epsilon())?;
        println!(
            "{name:<16} ε = {:+}  unitarity defect {:.1e}  ‖U*SU − εS‖/‖S‖ = {:.1e}",
            action.epsilon(),
            unitarity_defect(&u),
            report.value
        );
    }
    // Without the sign, time reflection visibly fails.
    let t = make_action(&slab, "time-reflection")?;
    let u = unitary_matrix(&t, &basis)?;
    println!("time reflection tested with ε = +1: {:.3}", check_signature_symmetry(&s, &u, 1)?.value);
    Ok(())
}

#[allow(dead_code)]
fn main() -> sigop::Result<()> {
    run_example()
}
