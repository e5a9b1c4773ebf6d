use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::eigen::{eigenvalues, spectral_radius};
use crate::error::Result;

/// Eigenvalue magnitudes within this distance of 1 are classified marginal.
pub const MARGINAL_BAND: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stability {
    Stable,
    Marginal,
    Unstable,
}

impl Stability {
    /// Classification of a discrete-time mode (or set of modes) from its
    /// largest magnitude.
    pub fn from_radius(radius: f64) -> Self {
        if !radius.is_finite() || radius > 1.0 + MARGINAL_BAND {
            Stability::Unstable
        } else if radius < 1.0 - MARGINAL_BAND {
            Stability::Stable
        } else {
            Stability::Marginal
        }
    }

    pub fn is_stable(self) -> bool {
        self == Stability::Stable
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Stability::Stable => "stable",
            Stability::Marginal => "marginal",
            Stability::Unstable => "unstable",
        }
    }
}

impl std::fmt::Display for Stability {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A named design constraint and whether it holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintCheck {
    pub name: String,
    pub satisfied: bool,
    /// The quantity the constraint bounds (e.g. `alpha * g`).
    pub value: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub eigenvalues: Vec<Complex64>,
    pub spectral_radius: f64,
    pub classification: Stability,
    pub constraint_checks: Vec<ConstraintCheck>,
}

impl StabilityReport {
    pub fn from_eigenvalues(eigenvalues: Vec<Complex64>) -> Self {
        let spectral_radius = spectral_radius(&eigenvalues);
        Self {
            classification: Stability::from_radius(spectral_radius),
            eigenvalues,
            spectral_radius,
            constraint_checks: Vec::new(),
        }
    }

    pub fn with_checks(mut self, checks: Vec<ConstraintCheck>) -> Self {
        self.constraint_checks = checks;
        self
    }

    pub fn check(&self, name: &str) -> Option<&ConstraintCheck> {
        self.constraint_checks.iter().find(|c| c.name == name)
    }
}

pub fn classify(matrix: &DMatrix<f64>) -> Result<StabilityReport> {
    Ok(StabilityReport::from_eigenvalues(eigenvalues(matrix)?))
}
