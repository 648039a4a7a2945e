//! Invariant subgrid-scale closures for large-eddy simulation of
//! incompressible flow.
//!
//! - [`tensor`]: 3×3 tensor algebra and the `S`/`Ω` decomposition.
//! - [`invariants`]: primitive and scale-free invariants of `(S, Ω)`.
//! - [`calculus`]: closed-form invariant gradients and finite-difference checks.
//! - [`gfunc`]: generator functions `g` and their positivity certificate.
//! - [`models`]: the seven-term closure in general, scaled and potential form.
//! - [`zoo`]: reference closures and symmetry-breakage reports.
//! - [`symmetry`]: group actions and equivariance defects.
//! - [`les`]: periodic-box solver with an energy budget.
//! - [`config`], [`cli`]: run configuration and the `sgs` command.

pub mod calculus;
pub mod cli;
pub mod config;
pub mod gfunc;
pub mod invariants;
pub mod les;
pub mod models;
pub mod sampling;
pub mod symmetry;
pub mod tensor;
pub mod zoo;
