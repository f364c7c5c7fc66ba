use serde::{Deserialize, Serialize};

/// Numerical tolerances shared by the index computations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Accepted defect `‖MᵀJM − J‖_∞` for symplectic matrices.
    pub sympl: f64,
    /// Eigenvalue pairing / clustering radius; also the snap radius around ±1.
    pub pairing: f64,
    /// Eigenvalues of symmetric forms below this modulus count as zero.
    pub eig: f64,
    /// Distance to 1 below which an endpoint eigenvalue is degenerate.
    pub cross: f64,
    /// Crossing-form eigenvalues below this modulus make a crossing irregular.
    pub form: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            sympl: 1e-9,
            pairing: 1e-6,
            eig: 1e-10,
            cross: 1e-8,
            form: 1e-8,
        }
    }
}
