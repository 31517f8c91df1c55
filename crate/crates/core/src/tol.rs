//! Numerical thresholds used throughout the crate.
//!
//! Subspace dimensions are decided by singular-value cuts, eigenvalue
//! degeneracy by gap clustering, and the polynomial existence certificate by
//! a normalized resultant threshold. All of these are tolerance-sensitive
//! near the structured sets they are meant to detect, so every threshold is
//! collected here and can be overridden per call site or from the CLI.

use serde::{Deserialize, Serialize};

/// Collected numerical thresholds.
///
/// The defaults are sized for double precision at Hilbert-space dimensions
/// up to 2^8: rank decisions sit at `max_dim * eps * sigma_max`, well above
/// rounding noise of dense products at these sizes, and the resultant
/// thresholds leave a reported borderline band instead of forcing a call on
/// ill-conditioned values.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Tolerances {
    /// Relative Hermiticity tolerance: `max|A - A†| <= herm_rel * max|A|`.
    pub herm_rel: f64,
    /// Absolute threshold for residuals that should vanish structurally.
    pub zero_abs: f64,
    /// Optional override of the rank cut, relative to the largest singular
    /// value. `None` selects `max_dim * machine_epsilon`.
    pub rank_rel: Option<f64>,
    /// Retained singular values within this factor of the rank cut flag the
    /// computation as borderline.
    pub borderline_factor: f64,
    /// Eigenvalue gaps below `cluster_rel * spectral_radius` merge into one
    /// degenerate cluster.
    pub cluster_rel: f64,
    /// Optional absolute cluster gap, overriding `cluster_rel`.
    pub cluster_abs: Option<f64>,
    /// Normalized resultants at or below this value signal a common root.
    pub resultant: f64,
    /// Upper edge of the resultant borderline band; values between
    /// `resultant` and this bound are reported, not decided.
    pub resultant_borderline: f64,
    /// Residual bound for validating a candidate common root as a zero-sum
    /// eigenpair of the coupling matrix.
    pub root_residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            herm_rel: 1e-10,
            zero_abs: 1e-10,
            rank_rel: None,
            borderline_factor: 10.0,
            cluster_rel: 1e-8,
            cluster_abs: None,
            resultant: 1e-8,
            resultant_borderline: 1e-6,
            root_residual: 1e-8,
        }
    }
}

impl Tolerances {
    /// Singular values at or below this threshold define the numerical
    /// kernel of a matrix with largest singular value `sigma_max` and
    /// largest dimension `max_dim`.
    pub fn rank_threshold(&self, sigma_max: f64, max_dim: usize) -> f64 {
        let rel = self
            .rank_rel
            .unwrap_or(max_dim.max(1) as f64 * f64::EPSILON);
        rel * sigma_max
    }

    /// Gap threshold for clustering the eigenvalues of a matrix with
    /// spectral radius `radius`.
    pub fn cluster_threshold(&self, radius: f64) -> f64 {
        self.cluster_abs.unwrap_or(self.cluster_rel * radius)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_threshold_scales_with_sigma() {
        let tol = Tolerances::default();
        assert_eq!(tol.rank_threshold(0.0, 16), 0.0);
        let t1 = tol.rank_threshold(1.0, 16);
        let t2 = tol.rank_threshold(10.0, 16);
        assert!((t2 / t1 - 10.0).abs() < 1e-12);
    }

    #[test]
    fn overrides_take_precedence() {
        let tol = Tolerances {
            rank_rel: Some(1e-6),
            cluster_abs: Some(0.5),
            ..Tolerances::default()
        };
        assert!((tol.rank_threshold(2.0, 8) - 2e-6).abs() < 1e-18);
        assert_eq!(tol.cluster_threshold(100.0), 0.5);
    }
}
