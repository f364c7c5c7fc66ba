//! Conley–Zehnder, mean and coisotropic Maslov indices of symplectic paths.
//!
//! The crate is organised bottom-up:
//!
//! * [`symplectic`]: linear symplectic algebra, quadratic Hamiltonians, Krein
//!   spectra and sampled paths in `Sp(2n)`.
//! * [`index`]: the mean index and the Conley–Zehnder index of sampled paths.
//! * [`models`]: closed-form stable coisotropic submanifolds (split Lagrangian
//!   tori, flat coisotropic tori, ellipsoids), their normal-form charts,
//!   leaf-wise geodesics and holonomy.
//! * [`maslov`]: the coisotropic Maslov index of framed loops tangent to the
//!   characteristic foliation.
//! * [`lab`]: verification harness for the index and action inequalities on
//!   the shipped models.
//!
//! All matrices act on `R^{2n}` with coordinates `(x_1..x_n, y_1..y_n)` and
//! the symplectic form `ω(u, v) = uᵀ J v`, `J = [[0, I], [-I, 0]]`.

pub mod error;
pub mod index;
pub mod lab;
pub mod linalg;
pub mod maslov;
pub mod models;
pub mod symplectic;
pub mod tolerances;

pub use error::{Error, Result};
pub use tolerances::Tolerances;

/// Version string embedded in every emitted report.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
