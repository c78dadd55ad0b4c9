//! Fermionic signature operators on two flat 1+1-dimensional space-times,
//! assembled in truncated Dirac mode bases, together with their symmetry
//! transformations and a quantitative verification suite.
//!
//! The two models are the massless "drum" (a bounded diamond) and the
//! massive "slab" (a finite-lifetime cylinder). See the `examples/`
//! directory for one runnable program per capability.

pub mod cli;
pub mod config;
pub mod error;
pub mod export;
pub mod models;
pub mod sigop;
pub mod solutions;
pub mod symmetry;
pub mod verify;

pub use config::RunConfig;
pub use error::{Error, Result};
pub use models::{Point2, QuadratureSpec, SpacetimeModel};
pub use sigop::{BorelFunction, OperatorMatrix, SpectralDecomposition};
pub use solutions::{Basis, SolutionMode, TestFunction};
pub use symmetry::{GeneratorSpec, SymmetryAction};
pub use verify::CheckReport;
