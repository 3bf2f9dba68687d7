//! The deterministic scale sequence b_n^α = ∫ max_{0 ≤ t ≤ (n−1)1} |f_t|^α dμ:
//! exact interval-union sweeps for indicator/piecewise kernels under
//! translation actions, exact finite sums for atom windows, and sample-mean
//! Monte Carlo for probability control measures.

use std::collections::HashMap;

use num_traits::ToPrimitive;
use rayon::prelude::*;

use super::union::ValuedUnion;
use super::BnCurve;
use crate::action::field::{FieldError, FieldSpec, KernelSpec};
use crate::action::{ActionSpec, AtomicAction, TranslationAction};
use crate::quad::QuadNum;
use crate::scalar::RationalScalar;
use crate::{Quad, Real};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum BnError {
    #[error("exact b_n is not available for this kernel/action: {0}")]
    Unsupported(String),
    #[error("enumeration budget exceeded: {0}")]
    Budget(String),
    #[error("n grid must be strictly increasing and positive")]
    BadGrid,
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Exact curve plus the honesty flag for atom windows whose orbits leave
/// the window during the sweep.
#[derive(Debug, Clone)]
pub struct ExactBn {
    pub curve: BnCurve,
    pub window_limited: bool,
}

fn check_grid(grid: &[usize]) -> Result<(), BnError> {
    if grid.is_empty() || grid[0] == 0 || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(BnError::BadGrid);
    }
    Ok(())
}

/// b_n for a single n, exact. Falls back with `Unsupported` when the
/// kernel/action pair has no exact route (callers go Monte Carlo).
pub fn bn_exact(field: &FieldSpec, n: usize) -> Result<Real, BnError> {
    Ok(bn_curve_exact(field, &[n])?.curve.values[0])
}

/// Exact b_n over a strictly increasing grid, one incremental sweep.
pub fn bn_curve_exact(field: &FieldSpec, n_grid: &[usize]) -> Result<ExactBn, BnError> {
    check_grid(n_grid)?;
    match (&field.action, &field.kernel) {
        (ActionSpec::Translation(a), KernelSpec::IndicatorBox(_))
        | (ActionSpec::Translation(a), KernelSpec::PiecewiseConstant(_)) => {
            translation_sweep(field, a, n_grid).map(|curve| ExactBn {
                curve,
                window_limited: false,
            })
        }
        (ActionSpec::Atomic(a), KernelSpec::AtomTable(values)) => {
            atomic_sweep(field, a, values, n_grid)
        }
        _ => Err(BnError::Unsupported(
            "exact sweep needs indicator/piecewise kernels on a translation action \
             or an atom table on a window"
                .into(),
        )),
    }
}

/// Pieces as (interval, flip requirement, |v|^α-rank); ranks index `pows`.
struct SweepPieces {
    intervals: Vec<(Quad, Quad)>,
    flip_reqs: Vec<Vec<Option<i8>>>,
    ranks: Vec<usize>,
    pows: Vec<Real>,
}

fn prepare_pieces(field: &FieldSpec) -> Result<SweepPieces, BnError> {
    let pieces = field.translation_pieces()?;
    let alpha = field.alpha.value();
    // the sweep takes a pointwise max over pieces, which matches |f| only
    // when supports are disjoint
    for i in 0..pieces.len() {
        for j in i + 1..pieces.len() {
            let (a, b) = (&pieces[i].0, &pieces[j].0);
            let overlap_interval = a
                .intervals
                .iter()
                .zip(&b.intervals)
                .all(|((alo, ahi), (blo, bhi))| alo < bhi && blo < ahi);
            let overlap_flips = a
                .flips
                .iter()
                .zip(&b.flips)
                .all(|(ra, rb)| match (ra, rb) {
                    (Some(x), Some(y)) => x == y,
                    _ => true,
                });
            if overlap_interval && overlap_flips {
                return Err(BnError::Unsupported(
                    "piecewise kernel pieces overlap".into(),
                ));
            }
        }
    }
    let mut pows: Vec<Real> = pieces
        .iter()
        .map(|(_, v)| v.abs().powf(alpha))
        .collect();
    pows.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pows.dedup();
    let ranks = pieces
        .iter()
        .map(|(_, v)| {
            let p = v.abs().powf(alpha);
            pows.iter().position(|&q| q == p).unwrap()
        })
        .collect();
    Ok(SweepPieces {
        intervals: pieces
            .iter()
            .map(|(b, _)| b.intervals[0].clone())
            .collect(),
        flip_reqs: pieces.iter().map(|(b, _)| b.flips.clone()).collect(),
        ranks,
        pows,
    })
}

fn translation_sweep(
    field: &FieldSpec,
    action: &TranslationAction,
    n_grid: &[usize],
) -> Result<BnCurve, BnError> {
    if action.ambient_dim != 1 {
        return Err(BnError::Unsupported(
            "exact sweep covers ambient dimension 1".into(),
        ));
    }
    let k = action.flip_count();
    if k > 6 {
        return Err(BnError::Budget(format!("{k} flip coordinates")));
    }
    let pieces = prepare_pieces(field)?;
    let deltas: Vec<Quad> = action.columns.iter().map(|c| c[0].clone()).collect();
    // machine-word rationals carry the sweep when every exact quantity
    // fits; the big lane is the fallback, not the common case
    let small_deltas: Option<Vec<QuadNum<SmallRatio>>> =
        deltas.iter().map(Quad::to_small).collect();
    let small_intervals: Option<Vec<(QuadNum<SmallRatio>, QuadNum<SmallRatio>)>> = pieces
        .intervals
        .iter()
        .map(|(lo, hi)| Some((lo.to_small()?, hi.to_small()?)))
        .collect();
    match (small_deltas, small_intervals) {
        (Some(d), Some(iv)) => {
            run_translation_sweep::<SmallRatio>(field, action, n_grid, d, iv, &pieces)
        }
        _ => {
            let iv = pieces.intervals.clone();
            run_translation_sweep::<crate::Rational>(field, action, n_grid, deltas, iv, &pieces)
        }
    }
}

type SmallRatio = num_rational::Ratio<i128>;

fn run_translation_sweep<R: RationalScalar>(
    field: &FieldSpec,
    action: &TranslationAction,
    n_grid: &[usize],
    deltas: Vec<QuadNum<R>>,
    intervals: Vec<(QuadNum<R>, QuadNum<R>)>,
    pieces: &SweepPieces,
) -> Result<BnCurve, BnError> {
    let k = action.flip_count();
    let sheets = 1usize << k;
    let mut unions: Vec<ValuedUnion<QuadNum<R>>> =
        (0..sheets).map(|_| ValuedUnion::new(pieces.pows.len())).collect();

    // generators that translate vs parity-only generators
    let moving: Vec<usize> = (0..action.group_rank)
        .filter(|&j| !deltas[j].is_zero())
        .collect();
    let still: Vec<usize> = (0..action.group_rank)
        .filter(|&j| deltas[j].is_zero())
        .collect();
    let n_max = *n_grid.last().unwrap();
    let ring_total: f64 = (n_max as f64).powi(moving.len() as i32) * (1u64 << still.len()) as f64;
    if ring_total > 2.5e8 {
        return Err(BnError::Budget(format!(
            "{ring_total:.1e} translation classes at n = {n_max}"
        )));
    }

    let mut seen: HashMap<(QuadNum<R>, Vec<i8>), ()> = HashMap::new();
    let mut values = Vec::with_capacity(n_grid.len());
    let mut grid_iter = n_grid.iter().peekable();
    let mut t_full = vec![0i64; action.group_rank];

    for n in 1..=n_max {
        // new classes at step n: max coordinate = n−1, with parity-only
        // coordinates restricted to {0, 1} (larger values repeat a class)
        let ring = (n - 1) as i64;
        let mut handle = |t_moving: &[i64], bits: &[i64], unions: &mut Vec<ValuedUnion<QuadNum<R>>>, seen: &mut HashMap<(QuadNum<R>, Vec<i8>), ()>| {
            for (slot, &j) in moving.iter().enumerate() {
                t_full[j] = t_moving[slot];
            }
            for (slot, &j) in still.iter().enumerate() {
                t_full[j] = bits[slot];
            }
            let mut offset = QuadNum::<R>::zero();
            for (slot, &j) in moving.iter().enumerate() {
                if t_moving[slot] != 0 {
                    offset = offset + deltas[j].scale_int(t_moving[slot]);
                }
            }
            let signs = action.flip_signs_of(&t_full);
            let key = (offset.clone(), signs.clone());
            if seen.contains_key(&key) {
                return;
            }
            seen.insert(key, ());
            for p in 0..intervals.len() {
                let (lo, hi) = &intervals[p];
                let new_lo = lo.clone() - offset.clone();
                let new_hi = hi.clone() - offset.clone();
                // requirement on the base sheet: σ_i = req_i · sign_i
                let req: Vec<Option<i8>> = pieces.flip_reqs[p]
                    .iter()
                    .zip(&signs)
                    .map(|(r, &sg)| r.map(|x| x * sg))
                    .collect();
                for sheet in 0..(1usize << k) {
                    let matches = (0..k).all(|i| {
                        let sigma: i8 = if sheet >> i & 1 == 0 { 1 } else { -1 };
                        req[i].map_or(true, |r| r == sigma)
                    });
                    if matches {
                        unions[sheet].insert(new_lo.clone(), new_hi.clone(), pieces.ranks[p]);
                    }
                }
            }
        };

        let bit_patterns: Vec<Vec<i64>> = (0..(1usize << still.len()))
            .map(|mask| {
                (0..still.len())
                    .map(|s| ((mask >> s) & 1) as i64)
                    .collect()
            })
            .collect();
        if ring >= 2 {
            for_each_ring_point(moving.len(), ring, &mut |tm| {
                for bits in &bit_patterns {
                    handle(tm, bits, &mut unions, &mut seen);
                }
            });
        } else if ring == 1 {
            for_each_ring_point(moving.len(), 1, &mut |tm| {
                for bits in &bit_patterns {
                    handle(tm, bits, &mut unions, &mut seen);
                }
            });
            // interior point with a parity bit reaching the ring
            let zeros = vec![0i64; moving.len()];
            for bits in bit_patterns.iter().filter(|b| b.contains(&1)) {
                handle(&zeros, bits, &mut unions, &mut seen);
            }
        } else {
            let zeros_m = vec![0i64; moving.len()];
            let zeros_s = vec![0i64; still.len()];
            handle(&zeros_m, &zeros_s, &mut unions, &mut seen);
        }

        while let Some(&&g) = grid_iter.peek() {
            if g != n {
                break;
            }
            grid_iter.next();
            let b_pow: Real = unions
                .iter()
                .flat_map(|u| {
                    u.totals()
                        .iter()
                        .zip(&pieces.pows)
                        .map(|(len, pw)| len.to_f64() * pw)
                })
                .sum();
            values.push(b_pow.powf(1.0 / field.alpha.value()));
        }
    }
    Ok(BnCurve::exact(n_grid.to_vec(), values))
}

/// All t ∈ [0, ring]^d with max coordinate exactly `ring` (the whole box's
/// new points when the box grows by one).
pub(crate) fn for_each_ring_point(d: usize, ring: i64, f: &mut impl FnMut(&[i64])) {
    if d == 0 {
        if ring == 0 {
            f(&[]);
        }
        return;
    }
    let mut t = vec![0i64; d];
    fn rec(
        t: &mut Vec<i64>,
        axis: usize,
        ring: i64,
        hit: bool,
        f: &mut impl FnMut(&[i64]),
    ) {
        if axis == t.len() {
            if hit {
                f(t);
            }
            return;
        }
        for v in 0..=ring {
            t[axis] = v;
            // prune: if no coordinate has hit the ring yet and none can, skip
            rec(t, axis + 1, ring, hit || v == ring, f);
        }
    }
    rec(&mut t, 0, ring, false, f);
}

fn atomic_sweep(
    field: &FieldSpec,
    action: &AtomicAction,
    values: &[Real],
    n_grid: &[usize],
) -> Result<ExactBn, BnError> {
    let alpha = field.alpha.value();
    let d = action.group_rank;
    let n_max = *n_grid.last().unwrap();
    let support: Vec<(usize, Real)> = values
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, v)| (i, v.abs().powf(alpha)))
        .collect();
    let cost = (n_max as f64).powi(d as i32) * (n_max * d) as f64 * support.len() as f64;
    if cost > 2e8 {
        return Err(BnError::Budget(format!("{cost:.1e} orbit steps")));
    }

    let mut best = vec![0.0f64; action.atom_count()];
    let mut total = 0.0f64;
    let mut window_limited = false;
    let weights_f: Vec<Real> = action
        .weights
        .iter()
        .map(|w| w.to_f64().unwrap())
        .collect();
    let mut out = Vec::with_capacity(n_grid.len());
    let mut grid_iter = n_grid.iter().peekable();
    let mut neg_t = vec![0i64; d];
    for n in 1..=n_max {
        for_each_ring_point(d, (n - 1) as i64, &mut |t| {
            for (slot, &tv) in t.iter().enumerate() {
                neg_t[slot] = -tv;
            }
            for &(b, pw) in &support {
                match action.walk(&neg_t, b) {
                    Some(src) => {
                        if pw > best[src] {
                            total += weights_f[src] * (pw - best[src]);
                            best[src] = pw;
                        }
                    }
                    None => window_limited = true,
                }
            }
        });
        while let Some(&&g) = grid_iter.peek() {
            if g != n {
                break;
            }
            grid_iter.next();
            out.push(total.powf(1.0 / alpha));
        }
    }
    Ok(ExactBn {
        curve: BnCurve::exact(n_grid.to_vec(), out),
        window_limited,
    })
}

/// Sample-mean estimate of b_n^α = E_μ[max over the box of |f_t|^α] for
/// probability control measures, returned as (b_n, delta-method stderr).
pub fn bn_monte_carlo(
    field: &FieldSpec,
    n: usize,
    replications: usize,
    seed: u64,
) -> Result<(Real, Real), BnError> {
    let curve = bn_monte_carlo_curve(field, &[n], replications, seed)?;
    let BnCurve { values, method, .. } = curve;
    match method {
        super::BnMethod::MonteCarlo { stderr, .. } => Ok((values[0], stderr[0])),
        super::BnMethod::Exact => unreachable!(),
    }
}

/// Monte Carlo b_n over a grid with common random draws across grid points
/// (each replication expands one box), which tightens exponent fits.
pub fn bn_monte_carlo_curve(
    field: &FieldSpec,
    n_grid: &[usize],
    replications: usize,
    seed: u64,
) -> Result<BnCurve, BnError> {
    check_grid(n_grid)?;
    let ActionSpec::CoordinateShift(action) = &field.action else {
        return Err(BnError::Unsupported(
            "Monte Carlo b_n needs a probability control measure".into(),
        ));
    };
    let alpha = field.alpha.value();
    let d = action.group_rank;
    let n_max = *n_grid.last().unwrap();
    let constant = match &field.kernel {
        KernelSpec::CoordinateProjection => None,
        KernelSpec::Constant(c) => Some(c.abs().powf(alpha)),
        _ => return Err(BnError::Unsupported("kernel not evaluable".into())),
    };

    let per_rep: Vec<Vec<Real>> = (0..replications as u64)
        .into_par_iter()
        .map(|rep| {
            use rand::Rng;
            let mut rng = crate::rng::stream_rng(seed, rep);
            let state_seed = rng.next_u64();
            let mut maxima = Vec::with_capacity(n_grid.len());
            if let Some(c) = constant {
                maxima.resize(n_grid.len(), c);
                return maxima;
            }
            let mut cur: Real = 0.0;
            let mut grid_iter = n_grid.iter().peekable();
            for n in 1..=n_max {
                for_each_ring_point(d, (n - 1) as i64, &mut |t| {
                    let g = action.coordinate(state_seed, t);
                    let v = g.abs().powf(alpha);
                    if v > cur {
                        cur = v;
                    }
                });
                while let Some(&&g) = grid_iter.peek() {
                    if g != n {
                        break;
                    }
                    grid_iter.next();
                    maxima.push(cur);
                }
            }
            maxima
        })
        .collect();

    let r = replications as Real;
    let mut values = Vec::with_capacity(n_grid.len());
    let mut stderrs = Vec::with_capacity(n_grid.len());
    for gi in 0..n_grid.len() {
        let mean: Real = per_rep.iter().map(|m| m[gi]).sum::<Real>() / r;
        let var: Real = per_rep
            .iter()
            .map(|m| (m[gi] - mean) * (m[gi] - mean))
            .sum::<Real>()
            / (r - 1.0).max(1.0);
        let se_mean = (var / r).sqrt();
        let bn = mean.powf(1.0 / alpha);
        // delta method through x ↦ x^{1/α}
        let se = se_mean * bn / (alpha * mean);
        values.push(bn);
        stderrs.push(se);
    }
    Ok(BnCurve::monte_carlo(
        n_grid.to_vec(),
        values,
        stderrs,
        replications,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action::fixtures;
    use crate::stable::Alpha;

    #[test]
    fn ring_points_cover_the_box() {
        let mut seen = std::collections::HashSet::new();
        for ring in 0..4i64 {
            for_each_ring_point(2, ring, &mut |t| {
                assert_eq!(t.iter().copied().max().unwrap(), ring);
                assert!(seen.insert(t.to_vec()));
            });
        }
        assert_eq!(seen.len(), 16);
    }

    #[test]
    fn irrational_rot_formula() {
        // b_n^α = 1 + (n−1)(1+√2) for n ≥ 2, and b_1 = ‖f‖_α = 1
        let alpha = Alpha::new(1.2).unwrap();
        let field = fixtures::irrational_rot(alpha);
        let grid: Vec<usize> = (1..=40).collect();
        let got = bn_curve_exact(&field, &grid).unwrap();
        assert!(!got.window_limited);
        let sqrt2 = 2.0f64.sqrt();
        for (i, &n) in grid.iter().enumerate() {
            let expect_pow = if n == 1 {
                1.0
            } else {
                1.0 + (n as f64 - 1.0) * (1.0 + sqrt2)
            };
            let got_pow = got.curve.values[i].powf(1.2);
            let rel = (got_pow - expect_pow).abs() / expect_pow;
            assert!(rel < 1e-12, "n = {n}: {got_pow} vs {expect_pow}");
        }
    }

    #[test]
    fn flip_fixture_formula() {
        // b_n^α = 2(3n−2) for n ≥ 2; b_1^α = 1 (only the even-k sheet)
        let alpha = Alpha::new(1.2).unwrap();
        let field = fixtures::z3_flip(alpha);
        let grid: Vec<usize> = vec![1, 2, 3, 5, 8, 21, 64];
        let got = bn_curve_exact(&field, &grid).unwrap();
        for (i, &n) in grid.iter().enumerate() {
            let expect_pow = if n == 1 { 1.0 } else { 2.0 * (3.0 * n as f64 - 2.0) };
            let got_pow = got.curve.values[i].powf(1.2);
            assert!(
                (got_pow - expect_pow).abs() < 1e-9,
                "n = {n}: {got_pow} vs {expect_pow}"
            );
        }
    }

    #[test]
    fn moving_average_stabilizes_at_support_norm() {
        // finitely supported kernel on the shift window: b_n^α = n^d·‖f‖^α
        // would hold for the full moving average; the atom-table route
        // computes the window-exact value and b_1 = ‖f‖_α
        let alpha = Alpha::new(1.5).unwrap();
        let field = fixtures::moving_avg(alpha, 1, 40);
        let got = bn_curve_exact(&field, &[1, 2, 4, 8]).unwrap();
        assert!(!got.window_limited);
        for (i, &n) in [1usize, 2, 4, 8].iter().enumerate() {
            // max over the box sweeps the indicator across n atoms
            let expect = (n as f64).powf(1.0 / 1.5);
            assert!((got.curve.values[i] - expect).abs() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn single_atom_norm() {
        let field = fixtures::single_atom(Alpha::new(1.2).unwrap());
        assert_eq!(bn_exact(&field, 1).unwrap(), 1.0);
        assert_eq!(bn_exact(&field, 7).unwrap(), 1.0);
    }

    #[test]
    fn unsupported_defers_to_monte_carlo() {
        let field = fixtures::gauss_iid(Alpha::new(1.0).unwrap(), 1);
        assert!(matches!(
            bn_exact(&field, 4),
            Err(BnError::Unsupported(_))
        ));
    }

    #[test]
    fn constant_kernel_on_probability_space() {
        use crate::action::field::{CocycleSpec, FieldSpec, KernelSpec};
        use crate::action::{ActionSpec, CoordinateShiftAction, Marginal};
        let field = FieldSpec::new(
            Alpha::new(1.0).unwrap(),
            ActionSpec::CoordinateShift(CoordinateShiftAction::new(1, Marginal::Gaussian).unwrap()),
            KernelSpec::Constant(1.0),
            CocycleSpec::trivial(1),
        )
        .unwrap();
        for n in [1usize, 4, 16] {
            let (bn, se) = bn_monte_carlo(&field, n, 200, 9).unwrap();
            assert_eq!(bn, 1.0, "constant kernel has b_n ≡ 1");
            assert_eq!(se, 0.0);
        }
    }

    #[test]
    fn gaussian_b1_matches_mean_absolute_normal() {
        // b_1 = (E|N(0,1)|)^{1/α} at α = 1 → √(2/π)... b_1^α = E|N| itself
        let field = fixtures::gauss_iid(Alpha::new(1.0).unwrap(), 1);
        let (bn, se) = bn_monte_carlo(&field, 1, 100_000, 33).unwrap();
        let expect = (2.0 / std::f64::consts::PI).sqrt();
        assert!(
            (bn - expect).abs() < 3.0 * se,
            "bn = {bn}, expect = {expect}, se = {se}"
        );
        assert!(se < 0.01);
    }

    #[test]
    fn bad_grids_rejected() {
        let field = fixtures::irrational_rot(Alpha::new(1.2).unwrap());
        assert_eq!(bn_curve_exact(&field, &[]).err(), Some(BnError::BadGrid));
        assert_eq!(bn_curve_exact(&field, &[0, 2]).err(), Some(BnError::BadGrid));
        assert_eq!(
            bn_curve_exact(&field, &[4, 4]).err(),
            Some(BnError::BadGrid)
        );
    }
}
