//! Smeared two-point kernels `⟨φ|P_W ψ⟩` of generalized fermionic
//! projectors, and their transformation under parity and time reflection
//! (`W ↦ W(ελ)`).
//!
//! ```bash
//! cargo run -p sigop --example fermionic_projector_state
//! ```

use nalgebra::Vector2;
use sigop::models::C64;
use sigop::sigop::{assemble_signature, projector_smear, spectral_decompose};
use sigop::symmetry::{make_action, push_test};
use sigop::{Basis, BorelFunction, Point2, QuadratureSpec, SpacetimeModel, TestFunction};

pub fn run_example() -> sigop::Result<()> {
    let slab = SpacetimeModel::slab(1.0, 2.0)?;
    let quad = QuadratureSpec::for_truncation(4);
    let basis = Basis::slab(&slab, 4, &quad)?;
    let dec = spectral_decompose(&assemble_signature(&basis, &quad)?)?;

    let up = Vector2::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0));
    let mixed = Vector2::new(C64::new(0.6, 0.0), C64::new(0.0, 0.8));
    let phi = TestFunction::new(&slab, Point2::new(0.8, 1.0), [0.3, 0.9], up)?;
    let psi = TestFunction::new(&slab, Point2::new(1.1, 2.0), [0.4, 0.7], mixed)?;

    for w in [BorelFunction::IndicatorNegative, BorelFunction::SmoothStep { beta: 10.0 }, BorelFunction::constant_one()] {
        let value = projector_smear(&phi, &psi, &w, &dec, &basis, &quad)?;
        let swapped = projector_smear(&psi, &phi, &w, &dec, &basis, &quad)?;
        println!("W = {w:<20} ⟨φ|P_W ψ⟩ = {value:.6e}  Hermiticity defect {:.1e}", (value - swapped.conj()).norm());
        for name in ["parity", "time-reflection"] {
            let action = make_action(&slab, name)?;
            let lhs = projector_smear(&push_test(&action, &phi)?, &push_test(&action, &psi)?, &w, &dec, &basis, &quad)?;
            let rhs = projector_smear(&phi, &psi, &w.transformed(action.epsilon()), &dec, &basis, &quad)?;
            println!("    {name:<16} |lhs − rhs| = {:.1e}", (lhs - rhs).norm());
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> sigop::Result<()> {
    run_example()
}
