//! Partial-maxima quantities: the deterministic scale sequence b_n, Monte
//! Carlo maxima M_n, growth-exponent fits and Fréchet goodness-of-fit.

pub mod bn;
pub mod simulate;
pub mod stats;
mod union;

use serde::Serialize;

use crate::Real;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum BnMethod {
    Exact,
    MonteCarlo {
        replications: usize,
        stderr: Vec<Real>,
    },
}

/// b_n over a grid of box sizes. Exact values are nondecreasing in n by
/// construction (a max over a growing box).
#[derive(Debug, Clone, Serialize)]
pub struct BnCurve {
    pub n_grid: Vec<usize>,
    pub values: Vec<Real>,
    pub method: BnMethod,
}

impl BnCurve {
    pub fn exact(n_grid: Vec<usize>, values: Vec<Real>) -> Self {
        assert_eq!(n_grid.len(), values.len());
        debug_assert!(
            values.windows(2).all(|w| w[0] <= w[1] + 1e-12 * w[1].abs()),
            "exact b_n must be nondecreasing"
        );
        BnCurve {
            n_grid,
            values,
            method: BnMethod::Exact,
        }
    }

    pub fn monte_carlo(n_grid: Vec<usize>, values: Vec<Real>, stderr: Vec<Real>, replications: usize) -> Self {
        assert_eq!(n_grid.len(), values.len());
        assert_eq!(n_grid.len(), stderr.len());
        BnCurve {
            n_grid,
            values,
            method: BnMethod::MonteCarlo {
                replications,
                stderr,
            },
        }
    }

    /// (log n, log b_n) pairs for external plotting.
    pub fn log_log_points(&self) -> Vec<(Real, Real)> {
        self.n_grid
            .iter()
            .zip(&self.values)
            .map(|(&n, &b)| ((n as Real).ln(), b.ln()))
            .collect()
    }
}

/// Distributional target of a maxima report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum GofTarget {
    Frechet { scale: Real },
    DegenerateZero,
}

/// Replicated simulation of M_n = max over the box of |X_t|, plus the
/// signed maxima for diagnostics. `ks_statistic` is NaN until the report is
/// judged against a target law.
#[derive(Debug, Clone, Serialize)]
pub struct MaximaReport {
    pub n: usize,
    pub replications: usize,
    /// max_t |X_t| per replication
    pub samples: Vec<Real>,
    /// max_t X_t per replication (diagnostic only)
    pub signed_samples: Vec<Real>,
    /// the samples are judged on samples / normalization
    pub normalization: Real,
    pub ks_statistic: Real,
    pub target: GofTarget,
    /// series diagnostics: mean terms used and mean tail-completion share
    pub mean_terms: Real,
    pub mean_tail_fraction: Real,
}

impl MaximaReport {
    /// Attach a target law and fill in the KS distance of
    /// samples/normalization against it.
    pub fn judged_against(
        mut self,
        normalization: Real,
        target: GofTarget,
        alpha: crate::stable::Alpha,
    ) -> Self {
        self.normalization = normalization;
        self.target = target;
        let scaled: Vec<Real> = self.samples.iter().map(|m| m / normalization).collect();
        self.ks_statistic = match target {
            GofTarget::Frechet { scale } => stats::frechet_gof(&scaled, alpha, scale),
            GofTarget::DegenerateZero => {
                // distance of the empirical law from the point mass at 0
                let eps = 1e-9;
                scaled.iter().filter(|&&x| x.abs() > eps).count() as Real
                    / scaled.len().max(1) as Real
            }
        };
        self
    }

    pub fn median(&self) -> Real {
        let mut s = self.samples.clone();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        s[s.len() / 2]
    }
}
