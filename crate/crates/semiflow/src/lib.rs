//! semiflow: pseudo-spectral solver on the circle for the family of
//! hydrodynamic equations generated by density-dependent kinetic energies
//! ½∫ Σᵢ aᵢ(ρ) (∂ⁱu)² dx plus a potential, covering Burgers, Camassa–Holm,
//! shallow water, barotropic Euler and Serre–Green–Naghdi, together with the
//! optimal-transport-like geometry these energies induce on densities.
//!
//! Entry points: [`presets::make_preset`] + [`dynamics::simulate`] for
//! initial-value problems, [`density::density_geodesic`] for geodesics of the
//! induced metric on densities, and [`verify::run_suite`] for the built-in
//! correctness checks. The `semiflow` binary wraps these behind JSON configs.

pub mod config;
pub mod density;
pub mod dynamics;
pub mod error;
pub mod flow;
pub mod grid;
pub mod inertia;
pub mod output;
pub mod presets;
pub mod verify;

pub use error::{Error, Result};
pub use grid::{Density, Grid, ScalarField};
pub use inertia::ModelSpec;
