//! Smith normal form over ℤ with tracked unimodular transforms:
//! U · M · V = D, D diagonal with a divisibility chain d₁ | d₂ | …

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use super::matrix::IntMatrix;
use crate::Int;

pub struct Snf {
    pub u: IntMatrix,
    pub u_inv: IntMatrix,
    pub d: IntMatrix,
    pub v: IntMatrix,
}

impl Snf {
    /// Nonzero diagonal entries d₁ | d₂ | … .
    pub fn invariant_factors(&self) -> Vec<Int> {
        let n = self.d.rows().min(self.d.cols());
        (0..n)
            .map(|i| self.d[(i, i)].clone())
            .filter(|x| !x.is_zero())
            .collect()
    }

    pub fn rank(&self) -> usize {
        self.invariant_factors().len()
    }
}

struct Calc {
    d: IntMatrix,
    u: IntMatrix,
    u_inv: IntMatrix,
    v: IntMatrix,
}

impl Calc {
    fn swap_rows(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for c in 0..self.d.cols() {
            let tmp = self.d[(i, c)].clone();
            self.d[(i, c)] = self.d[(j, c)].clone();
            self.d[(j, c)] = tmp;
        }
        for c in 0..self.u.cols() {
            let tmp = self.u[(i, c)].clone();
            self.u[(i, c)] = self.u[(j, c)].clone();
            self.u[(j, c)] = tmp;
        }
        for r in 0..self.u_inv.rows() {
            let tmp = self.u_inv[(r, i)].clone();
            self.u_inv[(r, i)] = self.u_inv[(r, j)].clone();
            self.u_inv[(r, j)] = tmp;
        }
    }

    fn swap_cols(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for r in 0..self.d.rows() {
            let tmp = self.d[(r, i)].clone();
            self.d[(r, i)] = self.d[(r, j)].clone();
            self.d[(r, j)] = tmp;
        }
        for r in 0..self.v.rows() {
            let tmp = self.v[(r, i)].clone();
            self.v[(r, i)] = self.v[(r, j)].clone();
            self.v[(r, j)] = tmp;
        }
    }

    /// row_i -= q · row_t
    fn row_sub(&mut self, i: usize, t: usize, q: &Int) {
        if q.is_zero() {
            return;
        }
        for c in 0..self.d.cols() {
            let sub = q * &self.d[(t, c)];
            self.d[(i, c)] -= sub;
        }
        for c in 0..self.u.cols() {
            let sub = q * &self.u[(t, c)];
            self.u[(i, c)] -= sub;
        }
        // U ← E·U with E = I − q·e_i e_tᵀ, so U⁻¹ ← U⁻¹·E⁻¹: col_t += q·col_i
        for r in 0..self.u_inv.rows() {
            let add = q * &self.u_inv[(r, i)];
            self.u_inv[(r, t)] += add;
        }
    }

    /// col_j -= q · col_t
    fn col_sub(&mut self, j: usize, t: usize, q: &Int) {
        if q.is_zero() {
            return;
        }
        for r in 0..self.d.rows() {
            let sub = q * &self.d[(r, t)];
            self.d[(r, j)] -= sub;
        }
        for r in 0..self.v.rows() {
            let sub = q * &self.v[(r, t)];
            self.v[(r, j)] -= sub;
        }
    }

    fn negate_row(&mut self, i: usize) {
        for c in 0..self.d.cols() {
            let v = -self.d[(i, c)].clone();
            self.d[(i, c)] = v;
        }
        for c in 0..self.u.cols() {
            let v = -self.u[(i, c)].clone();
            self.u[(i, c)] = v;
        }
        for r in 0..self.u_inv.rows() {
            let v = -self.u_inv[(r, i)].clone();
            self.u_inv[(r, i)] = v;
        }
    }

    /// Smallest-magnitude nonzero entry of the trailing submatrix at (t, t).
    fn pivot(&self, t: usize) -> Option<(usize, usize)> {
        let mut best: Option<(usize, usize, BigInt)> = None;
        for i in t..self.d.rows() {
            for j in t..self.d.cols() {
                let v = &self.d[(i, j)];
                if v.is_zero() {
                    continue;
                }
                let a = v.abs();
                match &best {
                    Some((_, _, cur)) if *cur <= a => {}
                    _ => best = Some((i, j, a)),
                }
            }
        }
        best.map(|(i, j, _)| (i, j))
    }
}

/// Compute U, D, V with U·M·V = D, U and V unimodular, D diagonal with
/// nonnegative entries forming a divisibility chain.
pub fn smith_normal_form(m: &IntMatrix) -> Snf {
    let rows = m.rows();
    let cols = m.cols();
    let mut c = Calc {
        d: m.clone(),
        u: IntMatrix::identity(rows),
        u_inv: IntMatrix::identity(rows),
        v: IntMatrix::identity(cols),
    };
    let steps = rows.min(cols);
    let mut t = 0;
    while t < steps {
        let Some((pi, pj)) = c.pivot(t) else {
            break;
        };
        c.swap_rows(t, pi);
        c.swap_cols(t, pj);
        'reduce: loop {
            // clear column t
            for i in t + 1..rows {
                if c.d[(i, t)].is_zero() {
                    continue;
                }
                let q = div_round(&c.d[(i, t)], &c.d[(t, t)]);
                c.row_sub(i, t, &q);
                if !c.d[(i, t)].is_zero() {
                    // remainder has smaller magnitude: promote it
                    c.swap_rows(t, i);
                    continue 'reduce;
                }
            }
            // clear row t
            for j in t + 1..cols {
                if c.d[(t, j)].is_zero() {
                    continue;
                }
                let q = div_round(&c.d[(t, j)], &c.d[(t, t)]);
                c.col_sub(j, t, &q);
                if !c.d[(t, j)].is_zero() {
                    c.swap_cols(t, j);
                    continue 'reduce;
                }
            }
            // pivot must divide the whole trailing submatrix for the chain
            for i in t + 1..rows {
                for j in t + 1..cols {
                    if !(&c.d[(i, j)] % &c.d[(t, t)]).is_zero() {
                        // fold row i into row t and restart the reduction
                        let minus_one = -Int::one();
                        c.row_sub(t, i, &minus_one);
                        continue 'reduce;
                    }
                }
            }
            break;
        }
        if c.d[(t, t)].is_negative() {
            c.negate_row(t);
        }
        t += 1;
    }
    Snf {
        u: c.u,
        u_inv: c.u_inv,
        d: c.d,
        v: c.v,
    }
}

/// Integer division rounded to nearest (ties toward zero), so the remainder
/// magnitude is at most |b|/2.
fn div_round(a: &Int, b: &Int) -> Int {
    let (q, r) = num_integer::Integer::div_rem(a, b);
    let two_r = BigInt::from(2) * r.abs();
    if two_r > b.abs() {
        if (a.is_negative()) == (b.is_negative()) {
            q + 1
        } else {
            q - 1
        }
    } else {
        q
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_identities(m: &IntMatrix, snf: &Snf) {
        // U·M·V = D
        assert_eq!(snf.u.mul(m).mul(&snf.v), snf.d, "U·M·V = D fails");
        // unimodular transforms
        assert_eq!(snf.u.determinant().abs(), Int::one());
        assert_eq!(snf.v.determinant().abs(), Int::one());
        // U · U⁻¹ = I
        assert_eq!(
            snf.u.mul(&snf.u_inv),
            IntMatrix::identity(m.rows()),
            "tracked inverse wrong"
        );
        // D diagonal, nonnegative, divisibility chain
        for i in 0..snf.d.rows() {
            for j in 0..snf.d.cols() {
                if i != j {
                    assert!(snf.d[(i, j)].is_zero(), "off-diagonal entry");
                }
            }
        }
        let facs = snf.invariant_factors();
        for w in facs.windows(2) {
            assert!((&w[1] % &w[0]).is_zero(), "chain violated: {facs:?}");
        }
        // zero factors only at the tail
        let n = snf.d.rows().min(snf.d.cols());
        let mut seen_zero = false;
        for i in 0..n {
            if snf.d[(i, i)].is_zero() {
                seen_zero = true;
            } else {
                assert!(!seen_zero, "zero before nonzero on diagonal");
            }
        }
    }

    #[test]
    fn identity_is_fixed_point() {
        let m = IntMatrix::identity(3);
        let snf = smith_normal_form(&m);
        check_identities(&m, &snf);
        assert_eq!(snf.d, IntMatrix::identity(3));
    }

    #[test]
    fn flip_action_kernel_factors() {
        // columns (-2,1,0) and (0,0,2): invariant factors (1, 2),
        // matching the quotient ℤ × ℤ/2ℤ.
        let m = IntMatrix::from_columns(&[vec![-2, 1, 0], vec![0, 0, 2]]);
        let snf = smith_normal_form(&m);
        check_identities(&m, &snf);
        assert_eq!(snf.invariant_factors(), vec![Int::one(), Int::from(2)]);
    }

    #[test]
    fn diag_2_3_gives_1_6() {
        // gcd argument: factors of diag(2,3) are (1, 6)
        let m = IntMatrix::from_rows(&[vec![2, 0], vec![0, 3]]);
        let snf = smith_normal_form(&m);
        check_identities(&m, &snf);
        assert_eq!(snf.invariant_factors(), vec![Int::one(), Int::from(6)]);
    }

    #[test]
    fn zero_and_rectangular() {
        let m = IntMatrix::zeros(2, 3);
        let snf = smith_normal_form(&m);
        check_identities(&m, &snf);
        assert!(snf.invariant_factors().is_empty());

        let m = IntMatrix::from_rows(&[vec![4, 6, 8]]);
        let snf = smith_normal_form(&m);
        check_identities(&m, &snf);
        assert_eq!(snf.invariant_factors(), vec![Int::from(2)]);
    }

    #[test]
    fn random_matrices_500() {
        // deterministic sweep of shapes and entries in [-9, 9]
        use rand::{Rng, RngExt};
        let mut rng = crate::rng::stream_rng(0x5EED_501F, 0);
        for case in 0..500 {
            let rows = rng.random_range(1..=6usize);
            let cols = rng.random_range(1..=6usize);
            let mut m = IntMatrix::zeros(rows, cols);
            for i in 0..rows {
                for j in 0..cols {
                    m[(i, j)] = Int::from(rng.random_range(-9i64..=9));
                }
            }
            let snf = smith_normal_form(&m);
            check_identities(&m, &snf);
            let _ = case;
        }
        let _ = rng.next_u32();
    }

    #[test]
    fn div_round_remainder_bound() {
        for a in -30i64..=30 {
            for b in [-7i64, -3, 2, 5, 9] {
                let q = div_round(&Int::from(a), &Int::from(b));
                let r = Int::from(a) - &q * Int::from(b);
                assert!(
                    Int::from(2) * r.abs() <= Int::from(b).abs(),
                    "a={a} b={b} q={q} r={r}"
                );
            }
        }
    }
}
