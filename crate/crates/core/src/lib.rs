//! Exact and numerical laboratory for the representation families
//! Sl(2)·SO(p,q) on R^2 (x) R^(p+q), their complex analogues, and the binary
//! cubics: curvature spaces and jet spaces by exact elimination, the
//! perturbed Lie-Poisson bracket on g* (+) V* with machine-checked Jacobi
//! identities, and floating-point geodesic flows with finite-time blow-up
//! detection.

pub mod checks;
pub mod config;
pub mod curvature;
pub mod dynamics;
pub mod linalg;
pub mod poisson;
pub mod rep;
pub mod report;
pub mod scalar;
