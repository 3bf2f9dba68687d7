//! The action-kernel lattice K = {t : φ_t = id}, the quotient invariants
//! (free rank p, torsion order l), a free complement with basis matrix W,
//! and exact lattice-point counts |H_n|, |F_{k,n}|.

use num_traits::{One, Signed, ToPrimitive, Zero};

use super::matrix::{rational_inverse, IntMatrix};
use super::snf::smith_normal_form;
use crate::action::{ActionSpec, AtomicAction, TranslationAction};
use crate::{Int, Rational};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum StructureError {
    #[error("enumeration budget exceeded: {0}")]
    Budget(String),
    #[error("torsion order does not fit in u64")]
    TorsionOverflow,
    #[error("kernel lattice is not computable for this action kind")]
    Unsupported,
}

/// Generators of a sublattice as matrix columns, plus the honesty flag for
/// atom windows (membership certified only on the window).
#[derive(Debug, Clone)]
pub struct KernelLattice {
    pub basis: IntMatrix,
    pub window_limited: bool,
}

/// Basis of the lattice generated by the columns of `gens` (drops
/// dependent generators, exact).
fn image_basis(gens: &IntMatrix) -> IntMatrix {
    if gens.cols() == 0 {
        return IntMatrix::zeros(gens.rows(), 0);
    }
    let snf = smith_normal_form(gens);
    let rank = snf.rank();
    let mut basis = IntMatrix::zeros(gens.rows(), rank);
    // im(G) = U⁻¹ · im(D): columns d_i · (U⁻¹ e_i)
    for i in 0..rank {
        let d = snf.d[(i, i)].clone();
        for r in 0..gens.rows() {
            basis[(r, i)] = &snf.u_inv[(r, i)] * &d;
        }
    }
    basis
}

/// {x ∈ ℤ^c : M x = 0}, as basis columns.
fn integer_kernel(m: &IntMatrix) -> IntMatrix {
    let snf = smith_normal_form(m);
    let rank = snf.rank();
    let c = m.cols();
    let mut basis = IntMatrix::zeros(c, c - rank);
    for (out_col, col) in (rank..c).enumerate() {
        for r in 0..c {
            basis[(r, out_col)] = snf.v[(r, col)].clone();
        }
    }
    basis
}

/// Intersection of the lattices spanned by the columns of `a` and `b`.
fn lattice_intersection(a: &IntMatrix, b: &IntMatrix) -> IntMatrix {
    assert_eq!(a.rows(), b.rows());
    if a.cols() == 0 || b.cols() == 0 {
        return IntMatrix::zeros(a.rows(), 0);
    }
    // solve A x = B y: kernel of [A | −B], then map the x-parts through A
    let mut stacked = IntMatrix::zeros(a.rows(), a.cols() + b.cols());
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            stacked[(i, j)] = a[(i, j)].clone();
        }
        for j in 0..b.cols() {
            stacked[(i, a.cols() + j)] = -b[(i, j)].clone();
        }
    }
    let ker = integer_kernel(&stacked);
    let mut gens = IntMatrix::zeros(a.rows(), ker.cols());
    for col in 0..ker.cols() {
        for i in 0..a.rows() {
            let mut acc = Int::zero();
            for j in 0..a.cols() {
                acc += &a[(i, j)] * &ker[(j, col)];
            }
            gens[(i, col)] = acc;
        }
    }
    image_basis(&gens)
}

/// Sublattice {x ∈ L : C·x ≡ 0 (mod 2)} of L = ℤ^q, for a 0/1 matrix C.
fn even_sublattice(c: &IntMatrix) -> IntMatrix {
    // kernel of [C | 2I] projected to the x block
    let k = c.rows();
    let q = c.cols();
    let mut m = IntMatrix::zeros(k, q + k);
    for i in 0..k {
        for j in 0..q {
            m[(i, j)] = c[(i, j)].clone();
        }
        m[(i, q + i)] = Int::from(2);
    }
    let ker = integer_kernel(&m);
    let mut gens = IntMatrix::zeros(q, ker.cols());
    for col in 0..ker.cols() {
        for r in 0..q {
            gens[(r, col)] = ker[(r, col)].clone();
        }
    }
    image_basis(&gens)
}

/// K = Ker(Φ) = {t ∈ ℤ^d : φ_t is the identity}.
pub fn kernel_lattice(action: &ActionSpec) -> Result<KernelLattice, StructureError> {
    match action {
        ActionSpec::Translation(a) => Ok(KernelLattice {
            basis: translation_kernel(a),
            window_limited: false,
        }),
        ActionSpec::Atomic(a) => Ok(atomic_kernel(a)),
        ActionSpec::CoordinateShift(a) => Ok(KernelLattice {
            // the index shift is free: only t = 0 fixes the product space
            basis: IntMatrix::zeros(a.group_rank, 0),
            window_limited: false,
        }),
    }
}

fn translation_kernel(a: &TranslationAction) -> IntMatrix {
    let d = a.group_rank;
    // A·t = 0 exactly: one rational row per (ambient coordinate, radical
    // component); cleared to integers
    let mut rows: Vec<Vec<Rational>> = Vec::new();
    for coord in 0..a.ambient_dim {
        let rational_row: Vec<Rational> = (0..d)
            .map(|j| a.columns[j][coord].rational_part().clone())
            .collect();
        let radical_row: Vec<Rational> = (0..d)
            .map(|j| a.columns[j][coord].radical_part().clone())
            .collect();
        rows.push(rational_row);
        rows.push(radical_row);
    }
    let mut int_rows: Vec<Vec<Int>> = Vec::new();
    for row in rows {
        if row.iter().all(|x| x.is_zero()) {
            continue;
        }
        let denom_lcm = row
            .iter()
            .fold(Int::one(), |acc, x| num_integer::lcm(acc, x.denom().clone()));
        int_rows.push(
            row.iter()
                .map(|x| x.numer() * (&denom_lcm / x.denom()))
                .collect(),
        );
    }
    let translation_part = if int_rows.is_empty() {
        IntMatrix::identity(d) // no translation constraints: all of ℤ^d
    } else {
        let mut m = IntMatrix::zeros(int_rows.len(), d);
        for (i, row) in int_rows.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                m[(i, j)] = v.clone();
            }
        }
        integer_kernel(&m)
    };
    if a.flip_patterns.is_empty() || translation_part.cols() == 0 {
        return translation_part;
    }
    // flips must be trivial: pattern · t even, restricted to the sublattice
    let q0 = translation_part.cols();
    let mut c = IntMatrix::zeros(a.flip_patterns.len(), q0);
    for (i, pattern) in a.flip_patterns.iter().enumerate() {
        for col in 0..q0 {
            let mut acc = Int::zero();
            for (j, &bit) in pattern.iter().enumerate() {
                if bit == 1 {
                    acc += &translation_part[(j, col)];
                }
            }
            c[(i, col)] = acc;
        }
    }
    let x_basis = even_sublattice(&c);
    image_basis(&translation_part.mul(&x_basis))
}

fn atomic_kernel(a: &AtomicAction) -> KernelLattice {
    let d = a.group_rank;
    let n = a.atom_count();
    let mut window_limited = false;
    let mut kernel = IntMatrix::identity(d);
    let mut visited_global = vec![false; n];
    for start in 0..n {
        if visited_global[start] {
            // stabilizers agree along an orbit up to conjugacy (abelian:
            // equal), so one BFS per orbit suffices
            continue;
        }
        // Schreier relations of the orbit of `start` inside the window
        let mut repr: Vec<Option<Vec<i64>>> = vec![None; n];
        repr[start] = Some(vec![0i64; d]);
        let mut queue = vec![start];
        let mut relations: Vec<Vec<i64>> = Vec::new();
        while let Some(b) = queue.pop() {
            visited_global[b] = true;
            let from = repr[b].clone().unwrap();
            for j in 0..d {
                for (dir, table) in [(1i64, &a.forward[j]), (-1, &a.backward[j])] {
                    match table[b] {
                        Some(c) => {
                            let mut t = from.clone();
                            t[j] += dir;
                            match &repr[c] {
                                Some(existing) => {
                                    let rel: Vec<i64> = t
                                        .iter()
                                        .zip(existing)
                                        .map(|(x, y)| x - y)
                                        .collect();
                                    if rel.iter().any(|&x| x != 0) {
                                        relations.push(rel);
                                    }
                                }
                                None => {
                                    repr[c] = Some(t);
                                    queue.push(c);
                                }
                            }
                        }
                        None => window_limited = true,
                    }
                }
            }
        }
        let stab = if relations.is_empty() {
            IntMatrix::zeros(d, 0)
        } else {
            let cols: Vec<Vec<i64>> = relations;
            image_basis(&IntMatrix::from_columns(&cols))
        };
        kernel = lattice_intersection(&kernel, &stab);
        if kernel.cols() == 0 {
            break;
        }
    }
    KernelLattice {
        basis: kernel,
        window_limited,
    }
}

/// The computed quotient structure: ℤ^d/K ≅ ℤ^p ⊕ (torsion of order l),
/// a free complement F with basis, the l coset representatives of F ⊕ K,
/// and the combined basis matrix W = [F | K].
#[derive(Debug, Clone)]
pub struct EffectiveStructure {
    pub kernel_basis: IntMatrix,
    pub free_rank: usize,
    pub torsion_order: u64,
    pub free_basis: IntMatrix,
    pub coset_reps: Vec<Vec<Int>>,
    pub w: IntMatrix,
    /// p = 0: the field takes finitely many values and the maxima freeze
    pub degenerate: bool,
    pub window_limited: bool,
}

pub fn effective_structure(action: &ActionSpec) -> Result<EffectiveStructure, StructureError> {
    let kl = kernel_lattice(action)?;
    let d = action.group_rank();
    let snf = smith_normal_form(&kl.basis);
    let q = snf.rank();
    let p = d - q;
    let factors = snf.invariant_factors();
    let mut torsion = Int::one();
    for f in &factors {
        torsion *= f;
    }
    let torsion_order = torsion.to_u64().ok_or(StructureError::TorsionOverflow)?;
    if torsion_order > 1_000_000 {
        return Err(StructureError::Budget(format!(
            "torsion order {torsion_order}"
        )));
    }
    // in the coordinates y = U·t the kernel is ⊕ d_i ℤ e_i (i < q);
    // free directions are the remaining coordinates
    let mut free_basis = IntMatrix::zeros(d, p);
    for (out, col) in (q..d).enumerate() {
        for r in 0..d {
            free_basis[(r, out)] = snf.u_inv[(r, col)].clone();
        }
    }
    // clean kernel basis: d_i · (U⁻¹ e_i)
    let mut kernel_basis = IntMatrix::zeros(d, q);
    for i in 0..q {
        for r in 0..d {
            kernel_basis[(r, i)] = &snf.u_inv[(r, i)] * &factors[i];
        }
    }
    // coset representatives: U⁻¹·(residues, 0)
    let mut reps: Vec<Vec<Int>> = vec![vec![Int::zero(); d]];
    for (i, f) in factors.iter().enumerate() {
        let fu = f.to_u64().ok_or(StructureError::TorsionOverflow)?;
        if fu == 1 {
            continue;
        }
        let mut next = Vec::with_capacity(reps.len() * fu as usize);
        for rep in &reps {
            for residue in 0..fu {
                let mut y = rep.clone();
                for r in 0..d {
                    y[r] = &y[r] + &snf.u_inv[(r, i)] * Int::from(residue);
                }
                next.push(y);
            }
        }
        reps = next;
    }
    debug_assert_eq!(reps.len() as u64, torsion_order);
    let w = free_basis.hstack(&kernel_basis);
    Ok(EffectiveStructure {
        kernel_basis,
        free_rank: p,
        torsion_order,
        free_basis,
        coset_reps: reps,
        w,
        degenerate: p == 0,
        window_limited: kl.window_limited,
    })
}

/// Exact |F_{k,n}| per coset and |H_n| = Σ_k |F_{k,n}|: the number of
/// K-cosets in each class of F ⊕ K meeting the box [−n·1, n·1].
#[derive(Debug, Clone)]
pub struct LatticeCounts {
    pub n: usize,
    pub per_coset: Vec<u64>,
    pub h_n: u64,
}

pub fn count_lattice(
    structure: &EffectiveStructure,
    n: usize,
) -> Result<LatticeCounts, StructureError> {
    let d = structure.w.rows();
    let p = structure.free_rank;
    let q = structure.kernel_basis.cols();
    let w_rat = structure.w.to_rational();
    // left inverse Z of W: bounds the coefficients of any box point
    let wt: Vec<Vec<Rational>> = (0..structure.w.cols())
        .map(|i| (0..d).map(|j| w_rat[j][i].clone()).collect())
        .collect();
    let wtw: Vec<Vec<Rational>> = (0..structure.w.cols())
        .map(|i| {
            (0..structure.w.cols())
                .map(|j| (0..d).map(|r| &wt[i][r] * &w_rat[r][j]).sum())
                .collect()
        })
        .collect();
    let wtw_inv = rational_inverse(&wtw);
    // Z = (WᵀW)⁻¹ Wᵀ
    let z: Vec<Vec<Rational>> = (0..structure.w.cols())
        .map(|i| {
            (0..d)
                .map(|c| {
                    (0..structure.w.cols())
                        .map(|k| &wtw_inv[i][k] * &wt[k][c])
                        .sum()
                })
                .collect()
        })
        .collect();
    let rep_norm: i64 = structure
        .coset_reps
        .iter()
        .flat_map(|r| r.iter().map(|x| x.abs().to_i64().unwrap_or(i64::MAX)))
        .max()
        .unwrap_or(0);
    let reach = Rational::from_integer(Int::from(n as i64 + rep_norm));
    let bounds: Vec<i64> = (0..p)
        .map(|i| {
            let row_sum: Rational = z[i].iter().map(|c| c.abs()).sum();
            let b = row_sum * &reach;
            b.ceil().to_integer().to_i64().unwrap_or(i64::MAX)
        })
        .collect();
    let candidates: f64 = bounds.iter().map(|&b| 2.0 * b as f64 + 1.0).product();
    if candidates * structure.coset_reps.len() as f64 > 5e7 {
        return Err(StructureError::Budget(format!(
            "{candidates:.1e} free-part candidates"
        )));
    }

    let mut per_coset = Vec::with_capacity(structure.coset_reps.len());
    for rep in &structure.coset_reps {
        let mut count = 0u64;
        let mut a = vec![0i64; p];
        enumerate_free(
            structure,
            rep,
            &bounds,
            0,
            &mut a,
            n as i64,
            &mut count,
        );
        per_coset.push(count);
    }
    let _ = q;
    let h_n = per_coset.iter().sum();
    Ok(LatticeCounts { n, per_coset, h_n })
}

fn enumerate_free(
    structure: &EffectiveStructure,
    rep: &[Int],
    bounds: &[i64],
    axis: usize,
    a: &mut Vec<i64>,
    n: i64,
    count: &mut u64,
) {
    if axis == bounds.len() {
        // w = rep + F·a; feasible iff ∃ b ∈ ℤ^q with ‖w + K·b‖_∞ ≤ n
        let d = structure.w.rows();
        let mut w = rep.to_vec();
        for (j, &aj) in a.iter().enumerate() {
            for r in 0..d {
                let add = &structure.free_basis[(r, j)] * Int::from(aj);
                w[r] += add;
            }
        }
        if kernel_coset_meets_box(&structure.kernel_basis, &w, n) {
            *count += 1;
        }
        return;
    }
    for v in -bounds[axis]..=bounds[axis] {
        a[axis] = v;
        enumerate_free(structure, rep, bounds, axis + 1, a, n, count);
    }
}

/// ∃ b ∈ ℤ^q : ‖w + K·b‖_∞ ≤ n, by recursive exact interval narrowing.
fn kernel_coset_meets_box(kernel: &IntMatrix, w: &[Int], n: i64) -> bool {
    let q = kernel.cols();
    if q == 0 {
        return w.iter().all(|x| x.abs() <= Int::from(n));
    }
    // constraints: −n − w_r ≤ Σ_j K[r][j] b_j ≤ n − w_r; eliminate b_1..
    // via rational Fourier–Motzkin, branch on integer candidates
    let rows = kernel.rows();
    let cons: Vec<(Vec<Rational>, Rational)> = (0..rows)
        .flat_map(|r| {
            let row: Vec<Rational> = (0..q)
                .map(|j| Rational::from_integer(kernel[(r, j)].clone()))
                .collect();
            let neg_row: Vec<Rational> = row.iter().map(|x| -x.clone()).collect();
            let hi = Rational::from_integer(Int::from(n) - &w[r]);
            let lo = Rational::from_integer(Int::from(n) + &w[r]);
            [(row, hi), (neg_row, lo)]
        })
        .collect();
    integer_point_exists(&cons, q)
}

fn integer_point_exists(cons: &[(Vec<Rational>, Rational)], dims: usize) -> bool {
    if dims == 0 {
        return cons.iter().all(|(_, b)| !b.is_negative());
    }
    // bounds for the last variable after eliminating it from the others
    let poly = super::polytope::HRepPolytope::new(dims, cons.to_vec());
    let Ok((lo, hi)) = poly.coordinate_range(dims - 1) else {
        return false;
    };
    let lo_i = lo.ceil().to_integer();
    let hi_i = hi.floor().to_integer();
    let mut v = lo_i.clone();
    while v <= hi_i {
        // substitute and recurse
        let sub: Vec<(Vec<Rational>, Rational)> = cons
            .iter()
            .map(|(a, b)| {
                let reduced: Vec<Rational> = a[..dims - 1].to_vec();
                let shift = &a[dims - 1] * Rational::from_integer(v.clone());
                (reduced, b - shift)
            })
            .collect();
        if integer_point_exists(&sub, dims - 1) {
            return true;
        }
        v += 1;
    }
    false
}
