//! Hamiltonian long-wave models for sharply stratified fluids in one space
//! dimension.
//!
//! The crate covers the reduced two-layer model in Darboux coordinates
//! `(zeta, sigma)`, the Serre–Green-Naghdi equations in canonical `(eta, mu)`
//! and Lie–Poisson `(eta, m)` form, a local deep-water (Boussinesq-type)
//! model, and the four-field Camassa–Choi system together with its Dirac
//! reduction. Everything lives on a uniform periodic grid with pseudo-spectral
//! derivatives.
//!
//! Module map:
//! - [`domain`]: parameters, scaling regimes, grids, fields, model states
//! - [`specops`]: derivatives, quadrature, near-identity and elliptic inverses
//! - [`energetics`]: Hamiltonians, analytic variational derivatives, fd oracle
//! - [`kinematics`]: velocity / momentum transforms
//! - [`dynamics`]: Poisson structures, right-hand sides, residual evaluators
//! - [`dirac`]: constraints, Dirac block algebra, restricted Hamiltonian
//! - [`models`]: the [`models::HamiltonianModel`] trait and its implementations
//! - [`timeloop`]: implicit midpoint / RK4 integration with diagnostics
//! - [`verify`]: reusable verification studies (order tests, oracles, limits)

pub mod dirac;
pub mod domain;
pub mod dynamics;
pub mod energetics;
mod error;
pub mod kinematics;
pub mod models;
pub mod specops;
pub mod timeloop;
pub mod verify;

pub use domain::{
    Field, Grid, ModelState, PhysicalParams, ScalingRegime, VerticalScale, THICKNESS_FLOOR,
};
pub use error::{Error, Result};
pub use specops::Spectral;
