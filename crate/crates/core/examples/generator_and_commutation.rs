//! Infinitesimal generator of slab translations from central differences of
//! the unitary group, its second-order convergence, and the weak
//! commutation relation with `S`.
//!
//! ```bash
//! cargo run -p sigop --example generator_and_commutation
//! ```

use sigop::sigop::assemble_signature;
use sigop::symmetry::{exact_translation_generator, generator_matrix};
use sigop::verify::check_weak_commutation;
use sigop::{Basis, GeneratorSpec, QuadratureSpec, SpacetimeModel};

pub fn run_example() -> sigop::Result<()> {
    let slab = SpacetimeModel::slab(1.0, 2.0)?;
    let quad = QuadratureSpec::for_truncation(4);
    let basis = Basis::slab(&slab, 4, &quad)?;
    let exact = exact_translation_generator(&basis)?;
    let mut previous = None;
    for step in [4e-3, 2e-3, 1e-3, 5e-4] {
        let x = generator_matrix(&GeneratorSpec::new(step)?, &basis)?;
        let err = x.sub(&exact)?.norm() / exact.norm();
        let ratio = previous.map_or(String::new(), |p: f64| format!("ratio {:.4}", p / err));
        println!("δ = {step:.1e}: ‖X_δ − X‖/‖X‖ = {err:.3e} {ratio}");
        previous = Some(err);
    }
    let s = assemble_signature(&basis, &quad)?;
    let x = generator_matrix(&GeneratorSpec::default(), &basis)?;
    println!("weak commutation residual: {:.2e}", check_weak_commutation(&s, &x)?.value);
    Ok(())
}

#[allow(dead_code)]
fn main() -> sigop::Result<()> {
    run_example()
}
