//! capflow: a numerical laboratory for conformal torus caps and nearly
//! integrable flows on the cotangent bundle.
//!
//! The crate builds a rotationally symmetric cap profile, converts it to a
//! conformal torus metric by solving the radial coordinate change, integrates
//! the associated geodesic and perturbed Hamiltonian flows with symplectic
//! steppers, propagates Jacobi/Riccati data along cap chords, estimates
//! Lyapunov exponents over Liouville ensembles, and compares exact and
//! perturbed section return maps, including the boundary lens maps of the
//! inscribed ball.

pub mod acceptance;
pub mod conformal;
pub mod flow;
pub mod interp;
pub mod jacobi;
pub mod lens;
pub mod lyapunov;
pub mod mollifier;
pub mod profile;
pub mod quad;
pub mod report;
pub mod returnmap;
pub mod sampling;

pub use conformal::{build_metric, dbg_certificate, RadialMetric};
pub use profile::{build_profile, verify_profile, CapParams, Profile};
