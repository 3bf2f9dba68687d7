//! Cross-checks of the lattice algebra against independent routes:
//! Monte Carlo volume, the sandwich inclusions behind the counting
//! asymptotics, and exact partition/complement identities.

use num_traits::{Signed, ToPrimitive, Zero};
use rand::RngExt;

use stable_fields::action::fixtures;
use stable_fields::lattice::matrix::{rational_rank, rational_solve};
use stable_fields::lattice::{
    count_lattice, effective_structure, EffectiveStructure, HRepPolytope, IntMatrix,
};
use stable_fields::rng::stream_rng;
use stable_fields::stable::Alpha;
use stable_fields::{Int, Rational};

fn rat(n: i64) -> Rational {
    Rational::from_integer(n.into())
}

/// Hit-or-miss Monte Carlo volume from the vertex bounding box.
fn mc_volume(p: &HRepPolytope, samples: usize, seed: u64) -> f64 {
    let verts = p.vertices();
    assert!(!verts.is_empty());
    let dim = p.dim;
    let lo: Vec<f64> = (0..dim)
        .map(|i| {
            verts
                .iter()
                .map(|v| v[i].to_f64().unwrap())
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let hi: Vec<f64> = (0..dim)
        .map(|i| {
            verts
                .iter()
                .map(|v| v[i].to_f64().unwrap())
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    let cons_f: Vec<(Vec<f64>, f64)> = p
        .constraints
        .iter()
        .map(|(a, b)| {
            (
                a.iter().map(|c| c.to_f64().unwrap()).collect(),
                b.to_f64().unwrap(),
            )
        })
        .collect();
    let mut rng = stream_rng(seed, 0);
    let mut hits = 0usize;
    let mut point = vec![0.0f64; dim];
    for _ in 0..samples {
        for i in 0..dim {
            let u: f64 = rng.random();
            point[i] = lo[i] + (hi[i] - lo[i]) * u;
        }
        let inside = cons_f
            .iter()
            .all(|(a, b)| a.iter().zip(&point).map(|(x, y)| x * y).sum::<f64>() <= *b);
        if inside {
            hits += 1;
        }
    }
    let box_vol: f64 = lo.iter().zip(&hi).map(|(l, h)| h - l).product();
    box_vol * hits as f64 / samples as f64
}

#[test]
fn exact_volume_matches_monte_carlo() {
    // exact vs hit-or-miss at 10^6 samples, within 1%
    let flip_w = IntMatrix::from_columns(&[vec![1, 0, 0], vec![-2, 1, 0], vec![0, 0, 2]]);
    let cases: Vec<HRepPolytope> = vec![
        HRepPolytope::linf_ball_preimage(&IntMatrix::identity(2)),
        HRepPolytope::linf_ball_preimage(&IntMatrix::from_rows(&[vec![1, 2], vec![0, 3]])),
        HRepPolytope::linf_ball_preimage(&flip_w).project_first(1),
        HRepPolytope::new(
            3,
            vec![
                (vec![rat(-1), rat(0), rat(0)], rat(0)),
                (vec![rat(0), rat(-1), rat(0)], rat(0)),
                (vec![rat(0), rat(0), rat(-1)], rat(0)),
                (vec![rat(1), rat(1), rat(1)], rat(2)),
                (vec![rat(2), rat(-1), rat(1)], rat(3)),
            ],
        ),
    ];
    for (i, p) in cases.iter().enumerate() {
        let exact = p.volume().unwrap().to_f64().unwrap();
        let mc = mc_volume(p, 1_000_000, 1000 + i as u64);
        let rel = (exact - mc).abs() / exact;
        assert!(rel < 0.01, "case {i}: exact {exact} vs mc {mc}");
    }
}

fn flip_structure() -> EffectiveStructure {
    let field = fixtures::z3_flip(Alpha::new(1.2).unwrap());
    effective_structure(&field.action).unwrap()
}

#[test]
fn free_part_meets_kernel_only_at_zero() {
    let st = flip_structure();
    // rank [F | K] = p + q forces F ∩ K = {0}
    let stacked = st.free_basis.hstack(&st.kernel_basis);
    assert_eq!(
        rational_rank(&stacked.to_rational()),
        st.free_rank + st.kernel_basis.cols()
    );
    // and explicitly: F x = K y has only the zero solution over ℚ
    let d = stacked.rows();
    let mut neg = st.kernel_basis.clone();
    for i in 0..neg.rows() {
        for j in 0..neg.cols() {
            let v = -neg[(i, j)].clone();
            neg[(i, j)] = v;
        }
    }
    let sys = st.free_basis.hstack(&neg);
    let zero_rhs: Vec<Rational> = vec![rat(0); d];
    let sol = rational_solve(&sys.to_rational(), &zero_rhs).unwrap();
    assert!(sol.iter().all(|x| x.is_zero()));
}

#[test]
fn cosets_partition_a_test_box() {
    // every point of [−20, 20]^3 lies in exactly one x_k + (F ⊕ K)
    let st = flip_structure();
    let g = st.free_basis.hstack(&st.kernel_basis); // full-rank d×d here
    let g_rat = g.to_rational();
    let mut counts = vec![0u64; st.coset_reps.len()];
    for i in -20i64..=20 {
        for j in -20i64..=20 {
            for k in -20i64..=20 {
                let z = [i, j, k];
                let mut owners = 0usize;
                for (ci, rep) in st.coset_reps.iter().enumerate() {
                    let rhs: Vec<Rational> = (0..3)
                        .map(|r| Rational::from_integer(Int::from(z[r]) - &rep[r]))
                        .collect();
                    if let Some(sol) = rational_solve(&g_rat, &rhs) {
                        if sol.iter().all(|c| c.is_integer()) {
                            owners += 1;
                            counts[ci] += 1;
                        }
                    }
                }
                assert_eq!(owners, 1, "point {z:?} covered {owners} times");
            }
        }
    }
    assert!(counts.iter().all(|&c| c > 0), "{counts:?}");
}

#[test]
fn sandwich_inclusions_hold_up_to_200() {
    // there are constants (c, dd, N) with
    //   ∪_k (x_k + G_{⌊n/dd⌋}) ⊆ [−n·1, n·1] ⊆ ∪_k (x_k + G_{cn})
    // for all N ≤ n ≤ 200; verified by exact corner arithmetic
    let st = flip_structure();
    let d = st.w.rows();
    let r = st.w.cols();
    // operator ∞-norm of W (max abs row sum) and of the left inverse Z
    let w_norm: i64 = (0..d)
        .map(|i| {
            (0..r)
                .map(|j| st.w[(i, j)].abs().to_i64().unwrap())
                .sum::<i64>()
        })
        .max()
        .unwrap();
    let w_rat = st.w.to_rational();
    let wt: Vec<Vec<Rational>> = (0..r)
        .map(|i| (0..d).map(|j| w_rat[j][i].clone()).collect())
        .collect();
    let wtw: Vec<Vec<Rational>> = (0..r)
        .map(|i| {
            (0..r)
                .map(|j| (0..d).map(|k| &wt[i][k] * &w_rat[k][j]).sum())
                .collect()
        })
        .collect();
    let wtw_inv = stable_fields::lattice::matrix::rational_inverse(&wtw);
    let z: Vec<Vec<Rational>> = (0..r)
        .map(|i| {
            (0..d)
                .map(|c| (0..r).map(|k| &wtw_inv[i][k] * &wt[k][c]).sum())
                .collect()
        })
        .collect();
    let z_row_sums: Vec<Rational> = z
        .iter()
        .map(|row| row.iter().map(|x| x.abs()).sum())
        .collect();
    let m_rep: i64 = st
        .coset_reps
        .iter()
        .flat_map(|rep| rep.iter().map(|x| x.abs().to_i64().unwrap()))
        .max()
        .unwrap()
        + 1;
    // candidate constants, then exact verification over the whole range
    let z_norm_ceil: i64 = z_row_sums
        .iter()
        .map(|s| s.ceil().to_integer().to_i64().unwrap())
        .max()
        .unwrap();
    let c = (z_norm_ceil * m_rep).max(1);
    let dd = (2 * w_norm).max(1);
    let n0 = 2 * m_rep.max(dd);
    assert!(n0 <= 100, "fixture constants got out of hand");
    for n in n0..=200 {
        // left inclusion: corners of x_k + G_{⌊n/dd⌋} stay in the box
        let m = n / dd;
        for rep in &st.coset_reps {
            for corner in 0..(1u32 << r) {
                for row in 0..d {
                    let mut val = rep[row].clone();
                    for jj in 0..r {
                        let sign: i64 = if corner >> jj & 1 == 0 { 1 } else { -1 };
                        val += &st.w[(row, jj)] * Int::from(sign * m);
                    }
                    assert!(
                        val.abs() <= Int::from(n),
                        "left inclusion fails at n = {n}"
                    );
                }
            }
        }
        // right inclusion: for every z in the box and its coset rep x_k,
        // the exact coefficients satisfy |coef_i| ≤ c·n; the real-box corner
        // relaxation bounds them soundly
        for rep in &st.coset_reps {
            for (i, row_sum) in z_row_sums.iter().enumerate() {
                let mut rep_term = rat(0);
                for (col, x) in rep.iter().enumerate() {
                    rep_term += &z[i][col] * Rational::from_integer(x.clone());
                }
                let bound = row_sum * rat(n) + rep_term.abs();
                assert!(
                    bound <= rat(c * n),
                    "right inclusion bound fails at n = {n}, row {i}"
                );
            }
        }
    }
}

#[test]
fn per_coset_densities_converge_to_common_limit() {
    // |F_{k,n}|/n^p approaches the same value for every coset
    let st = flip_structure();
    let c = count_lattice(&st, 500).unwrap();
    let densities: Vec<f64> = c.per_coset.iter().map(|&x| x as f64 / 500.0).collect();
    let max = densities.iter().cloned().fold(f64::MIN, f64::max);
    let min = densities.iter().cloned().fold(f64::MAX, f64::min);
    assert!(
        (max - min) / max < 0.03,
        "per-coset densities diverge: {densities:?}"
    );
    // and the common limit is the projected-polytope volume: 𝒱 = 6
    let proj = HRepPolytope::linf_ball_preimage(&st.w).project_first(st.free_rank);
    let vol = proj.volume().unwrap().to_f64().unwrap();
    assert_eq!(vol, 6.0);
    for d in &densities {
        assert!((d - vol).abs() / vol < 0.02, "{d} vs {vol}");
    }
}

#[test]
fn snf_factors_of_random_kernels_agree_with_brute_force_torsion() {
    // for random 2×2 integer matrices with nonzero determinant, the torsion
    // order of ℤ²/im(M) equals |det M|; the SNF route must agree
    let mut rng = stream_rng(0xFAC7, 0);
    for _ in 0..200 {
        let m = IntMatrix::from_rows(&[
            vec![rng.random_range(-6i64..=6), rng.random_range(-6i64..=6)],
            vec![rng.random_range(-6i64..=6), rng.random_range(-6i64..=6)],
        ]);
        let det = m.determinant();
        if det.is_zero() {
            continue;
        }
        let snf = stable_fields::lattice::smith_normal_form(&m);
        let torsion: Int = snf.invariant_factors().iter().product();
        assert_eq!(torsion, det.abs());
    }
}
