//! Goodness-of-fit and growth statistics: Kolmogorov–Smirnov distances,
//! log-log exponent fits, the mixed-moving-average scale constant, and the
//! divergence surrogate test.

use crate::scalar::RealScalar;
use crate::special::frechet_cdf;
use crate::stable::Alpha;
use crate::Real;

use super::BnCurve;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum StatsError {
    #[error("exponent fit needs ≥ 4 grid points spanning ≥ 2 octaves")]
    GridTooSmall,
    #[error("supremum over s is not computable: {0}")]
    SupremumNotComputable(String),
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
}

/// One-sample KS distance between the empirical law of `samples` and the
/// continuous CDF `cdf`.
pub fn ks_one_sample<F: RealScalar>(samples: &[F], cdf: impl Fn(F) -> F) -> F {
    let mut xs: Vec<F> = samples.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = F::from_n(xs.len());
    let mut d = F::zero();
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        let lo = F::from_n(i) / n;
        let hi = F::from_n(i + 1) / n;
        d = d.max((f - lo).abs()).max((hi - f).abs());
    }
    d
}

/// Two-sample KS distance.
pub fn ks_two_sample(a: &[Real], b: &[Real]) -> Real {
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(|u, v| u.partial_cmp(v).unwrap());
    ys.sort_by(|u, v| u.partial_cmp(v).unwrap());
    let (n, m) = (xs.len() as Real, ys.len() as Real);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: Real = 0.0;
    while i < xs.len() || j < ys.len() {
        // jump point: smallest remaining value; consume ties on both sides
        let v = match (xs.get(i), ys.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => break,
        };
        while i < xs.len() && xs[i] == v {
            i += 1;
        }
        while j < ys.len() && ys[j] == v {
            j += 1;
        }
        d = d.max((i as Real / n - j as Real / m).abs());
    }
    d
}

/// KS distance between the empirical law of samples/scale and the standard
/// α-Fréchet law. Invariant under common positive rescaling of
/// (samples, scale).
pub fn frechet_gof(samples: &[Real], alpha: Alpha, scale: Real) -> Real {
    assert!(scale > 0.0, "scale must be positive");
    assert!(
        samples.iter().all(|&x| x >= 0.0),
        "Fréchet samples are nonnegative"
    );
    assert!(
        samples.len() >= 100,
        "need at least 100 samples for a meaningful KS distance"
    );
    let a = alpha.value();
    let scaled: Vec<Real> = samples.iter().map(|x| x / scale).collect();
    ks_one_sample(&scaled, |z| frechet_cdf(z, a))
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct GrowthFit {
    pub slope: Real,
    pub intercept: Real,
    /// max |log b_n − fit| over the points used
    pub residual: Real,
}

/// Least-squares fit of log b_n against log n. The smallest grid point is
/// excluded: the constants being estimated are asymptotic and the first
/// point carries the transient.
pub fn growth_exponent(curve: &BnCurve) -> Result<GrowthFit, StatsError> {
    let pts = curve.log_log_points();
    if pts.len() < 4 {
        return Err(StatsError::GridTooSmall);
    }
    let n_min = *curve.n_grid.iter().min().unwrap() as Real;
    let n_max = *curve.n_grid.iter().max().unwrap() as Real;
    if n_max / n_min < 4.0 {
        return Err(StatsError::GridTooSmall);
    }
    let used = &pts[1..];
    let n = used.len() as Real;
    let sx: Real = used.iter().map(|p| p.0).sum();
    let sy: Real = used.iter().map(|p| p.1).sum();
    let sxx: Real = used.iter().map(|p| p.0 * p.0).sum();
    let sxy: Real = used.iter().map(|p| p.0 * p.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    let residual = used
        .iter()
        .map(|p| (p.1 - slope * p.0 - intercept).abs())
        .fold(0.0, Real::max);
    Ok(GrowthFit {
        slope,
        intercept,
        residual,
    })
}

/// True iff the fitted growth of b_n strictly exceeds n^{d/2α}, with a 0.02
/// slope margin: the easily verifiable sufficient condition for the Fréchet
/// limit along b_n. Boundary growth (exponent exactly d/2α) returns false.
pub fn check_surrogate_condition(
    curve: &BnCurve,
    d: usize,
    alpha: Alpha,
) -> Result<bool, StatsError> {
    let fit = growth_exponent(curve)?;
    Ok(fit.slope > d as Real / (2.0 * alpha.value()) + 0.02)
}

/// Finitely supported mixed-moving-average description: atoms v with masses
/// ν(v) and kernel slices f(v, ·) on ℤ^d.
#[derive(Debug, Clone)]
pub struct MixedMovingAverage {
    pub atoms: Vec<MmaAtom>,
}

#[derive(Debug, Clone)]
pub struct MmaAtom {
    pub weight: Real,
    /// finitely many nonzero values of f(v, s)
    pub values: Vec<(Vec<i64>, Real)>,
}

/// K_X = (∫_W g(v)^α ν(dv))^{1/α} with g(v) = sup_s |f(v, s)|; exact for
/// finite descriptions.
pub fn k_x(mma: &MixedMovingAverage, alpha: Alpha) -> Result<Real, StatsError> {
    if mma.atoms.is_empty() {
        return Err(StatsError::SupremumNotComputable("no atoms".into()));
    }
    let a = alpha.value();
    let mut acc = 0.0;
    for atom in &mma.atoms {
        if atom.weight <= 0.0 || !atom.weight.is_finite() {
            return Err(StatsError::SupremumNotComputable(
                "atom weights must be positive and finite".into(),
            ));
        }
        if atom.values.iter().any(|(_, v)| !v.is_finite()) {
            return Err(StatsError::SupremumNotComputable(
                "kernel slice has non-finite values".into(),
            ));
        }
        let g = atom
            .values
            .iter()
            .map(|(_, v)| v.abs())
            .fold(0.0, Real::max);
        acc += atom.weight * g.powf(a);
    }
    Ok(acc.powf(1.0 / a))
}
