//! Scalar products do not depend on the Cauchy surface: compare the drum's
//! Gram matrix on tent-shaped surfaces of increasing slope.
//!
//! ```bash
//! cargo run -p sigop --example cauchy_surfaces
//! ```

use sigop::{Basis, QuadratureSpec, SpacetimeModel};

pub fn run_example() -> sigop::Result<()> {
    let quad = QuadratureSpec::new(128, 80);
    let basis = Basis::drum(8, &quad)?;
    let drum = SpacetimeModel::drum();
    let g0 = basis.gram();
    let scale = g0.iter().map(|z| z.norm()).fold(0.0, f64::max);
    for s in [0.0, 0.3, 0.6, 0.9] {
        let g = basis.gram_on(&drum.cauchy_surface(s)?)?;
        let diff = (g - g0).iter().map(|z| z.norm()).fold(0.0, f64::max);
        println!("tent slope {s:.1}: max |G_s − G_0| / max |G_0| = {:.2e}", diff / scale);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> sigop::Result<()> {
    run_example()
}
