//! Control synthesis and simulation for mechanical systems on Lie groups.
//!
//! Given a Lie algebra with an inner product, a constraint subspace (linear
//! or affine) and an input subspace transversal to it, [`ControlledSystem`]
//! produces the unique feedback that keeps the reduced Euler-Poincaré
//! dynamics on the constraint, and [`integrate::simulate`] integrates the
//! closed loop with group reconstruction.
//!
//! ```
//! use geovc::systems::{build_rotor, RotorParams};
//! use geovc::AlgebraVector;
//!
//! let rotor = build_rotor(RotorParams { lambda: [1.0, 2.0, 3.0], j: 0.5, k: 0.5, p: 0.0 })?;
//! let u = rotor.system.control_law(&AlgebraVector::from([1.0, 2.0, 0.0, 0.0]))?;
//! // k (λ₁ − λ₂) ω₁ ω₂
//! assert!((u[0] - (-1.0)).abs() < 1e-12);
//! # Ok::<(), geovc::Error>(())
//! ```

pub mod algebra;
pub mod connections;
pub mod document;
mod error;
pub mod integrate;
pub mod systems;
pub mod vnhc;

pub use algebra::{
    group_step, validate_algebra, AlgebraCovector, AlgebraVector, GroupModel, LieAlgebraSpec,
    StructureConstants, Trivialization, ValidationReport,
};
pub use connections::{
    c_connection, check_transversal, d_connection, g_connection, oblique_projectors,
    orthogonal_projectors, AffineSubspace, ProjectorPair, Subspace, TransversalityReport,
};
pub use error::{Error, Result};
pub use integrate::{simulate, Dynamics, IntegratorConfig, Trajectory};
pub use vnhc::{
    annihilator, constraint_residual, Constraint, ControlVector, ControlledSystem, CovectorBasis,
};
