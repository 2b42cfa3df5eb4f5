//! Weighted Bernstein-type inequalities for trigonometric polynomials on
//! systems of circular arcs: T-sets, equilibrium densities, `L^p` functionals,
//! and numeric checks of the supporting lemmas.

pub mod arcsets;
pub mod cli;
pub mod equilibrium;
pub mod error;
pub mod functionals;
pub mod harness;
pub mod lemmas;
pub mod quad;
pub mod roots;
pub mod trigpoly;
pub mod tset;

pub use arcsets::{partition_small, Arc, ArcSet, Block, ParamSet, SmallPartition};
pub use equilibrium::{solve_general, CollocationSolution, DensityModel};
pub use error::{Error, Result};
pub use functionals::{functionals, FunctionalValues};
pub use quad::QuadSpec;
pub use trigpoly::{ChebComposed, TrigFunction, TrigPoly};
pub use tset::TSet;
