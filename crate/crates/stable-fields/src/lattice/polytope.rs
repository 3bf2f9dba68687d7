//! Rational polytopes in H-representation: projection by exact
//! Fourier–Motzkin elimination and exact volume by vertex enumeration plus
//! recursive pyramid decomposition. No floating point anywhere on this path.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{Signed, Zero};

use super::matrix::{rational_solve, IntMatrix};
use crate::Rational;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum PolytopeError {
    #[error("matrix does not have full column rank")]
    RankDeficient,
    #[error("polytope is unbounded along coordinate {0}")]
    Unbounded(usize),
    #[error("dimension {0} exceeds the exact-volume cap of 4")]
    DimensionCap(usize),
}

/// Conjunction of half-spaces a·x ≤ b.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HRepPolytope {
    pub dim: usize,
    pub constraints: Vec<(Vec<Rational>, Rational)>,
}

fn rat(n: i64) -> Rational {
    Rational::from_integer(n.into())
}

fn dot(a: &[Rational], x: &[Rational]) -> Rational {
    a.iter().zip(x).map(|(u, v)| u * v).sum()
}

/// Scale so the largest |coefficient| is 1; drops the all-zero normal.
fn normalize(a: &[Rational], b: &Rational) -> Option<(Vec<Rational>, Rational)> {
    let scale = a.iter().map(|c| c.abs()).max()?;
    if scale.is_zero() {
        return None;
    }
    Some((
        a.iter().map(|c| c / &scale).collect(),
        b / &scale,
    ))
}

impl HRepPolytope {
    pub fn new(dim: usize, constraints: Vec<(Vec<Rational>, Rational)>) -> Self {
        let mut best: BTreeMap<Vec<Rational>, Rational> = BTreeMap::new();
        for (a, b) in constraints {
            assert_eq!(a.len(), dim);
            if let Some((na, nb)) = normalize(&a, &b) {
                best.entry(na)
                    .and_modify(|cur| {
                        if nb < *cur {
                            *cur = nb.clone();
                        }
                    })
                    .or_insert(nb);
            }
        }
        Self {
            dim,
            constraints: best.into_iter().collect(),
        }
    }

    /// {x ∈ ℝ^r : ‖Wx‖_∞ ≤ 1} for an integer matrix W.
    pub fn linf_ball_preimage(w: &IntMatrix) -> Self {
        let r = w.cols();
        let mut cons = Vec::with_capacity(2 * w.rows());
        for i in 0..w.rows() {
            let row: Vec<Rational> = (0..r)
                .map(|j| Rational::from_integer(w[(i, j)].clone()))
                .collect();
            let neg: Vec<Rational> = row.iter().map(|c| -c.clone()).collect();
            cons.push((row, rat(1)));
            cons.push((neg, rat(1)));
        }
        Self::new(r, cons)
    }

    pub fn contains(&self, x: &[Rational]) -> bool {
        self.constraints.iter().all(|(a, b)| dot(a, x) <= *b)
    }

    /// Eliminate the last coordinate by Fourier–Motzkin.
    fn eliminate_last(&self) -> Self {
        let j = self.dim - 1;
        let mut zero = Vec::new();
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for (a, b) in &self.constraints {
            let c = &a[j];
            if c.is_zero() {
                zero.push((a[..j].to_vec(), b.clone()));
            } else if c.is_positive() {
                pos.push((a.clone(), b.clone()));
            } else {
                neg.push((a.clone(), b.clone()));
            }
        }
        let mut cons = zero;
        for (ap, bp) in &pos {
            for (an, bn) in &neg {
                // |a_n[j]|·(upper row) + a_p[j]·(lower row)
                let wp = -an[j].clone();
                let wn = ap[j].clone();
                let a: Vec<Rational> = (0..j)
                    .map(|k| &wp * &ap[k] + &wn * &an[k])
                    .collect();
                let b = &wp * bp + &wn * bn;
                cons.push((a, b));
            }
        }
        Self::new(j, cons)
    }

    /// Project onto the first `p` coordinates.
    pub fn project_first(&self, p: usize) -> Self {
        assert!(p <= self.dim);
        let mut cur = self.clone();
        while cur.dim > p {
            cur = cur.eliminate_last();
        }
        cur
    }

    /// Exact [lo, hi] range of coordinate `axis`; error when unbounded.
    pub fn coordinate_range(&self, axis: usize) -> Result<(Rational, Rational), PolytopeError> {
        // move the axis first, then project onto one coordinate
        let mut front: Vec<usize> = vec![axis];
        front.extend((0..self.dim).filter(|&k| k != axis));
        let moved = Self::new(
            self.dim,
            self.constraints
                .iter()
                .map(|(a, b)| {
                    let pa: Vec<Rational> =
                        (0..self.dim).map(|k| a[front[k]].clone()).collect();
                    (pa, b.clone())
                })
                .collect(),
        );
        let line = moved.project_first(1);
        let mut lo: Option<Rational> = None;
        let mut hi: Option<Rational> = None;
        for (a, b) in &line.constraints {
            let c = &a[0];
            if c.is_positive() {
                let bound = b / c;
                hi = Some(match hi {
                    Some(h) if h <= bound => h,
                    _ => bound,
                });
            } else if c.is_negative() {
                let bound = b / c;
                lo = Some(match lo {
                    Some(l) if l >= bound => l,
                    _ => bound,
                });
            }
        }
        match (lo, hi) {
            (Some(l), Some(h)) => Ok((l, h)),
            _ => Err(PolytopeError::Unbounded(axis)),
        }
    }

    pub fn is_bounded(&self) -> bool {
        (0..self.dim).all(|axis| self.coordinate_range(axis).is_ok())
    }

    /// All vertices, by enumerating dim-subsets of active constraints.
    pub fn vertices(&self) -> Vec<Vec<Rational>> {
        let m = self.constraints.len();
        let d = self.dim;
        if d == 0 || m < d {
            return Vec::new();
        }
        let mut out: BTreeSet<Vec<Rational>> = BTreeSet::new();
        let mut idx: Vec<usize> = (0..d).collect();
        loop {
            let a: Vec<Vec<Rational>> =
                idx.iter().map(|&i| self.constraints[i].0.clone()).collect();
            let b: Vec<Rational> =
                idx.iter().map(|&i| self.constraints[i].1.clone()).collect();
            if super::matrix::rational_rank(&a) == d {
                if let Some(x) = rational_solve(&a, &b) {
                    if self.contains(&x) {
                        out.insert(x);
                    }
                }
            }
            // next combination
            let mut k = d;
            loop {
                if k == 0 {
                    return out.into_iter().collect();
                }
                k -= 1;
                if idx[k] != k + m - d {
                    idx[k] += 1;
                    for j in k + 1..d {
                        idx[j] = idx[j - 1] + 1;
                    }
                    break;
                }
            }
        }
    }

    /// Exact volume (dimension ≤ 4).
    pub fn volume(&self) -> Result<Rational, PolytopeError> {
        if self.dim > 4 {
            return Err(PolytopeError::DimensionCap(self.dim));
        }
        if !self.is_bounded() {
            return Err(PolytopeError::Unbounded(0));
        }
        let verts = self.vertices();
        Ok(hull_volume(&verts, self.dim))
    }

    /// Plain-text form, one constraint per line: "a1 a2 ... <= b".
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (a, b) in &self.constraints {
            let coeffs: Vec<String> = a
                .iter()
                .map(|c| format!("{}/{}", c.numer(), c.denom()))
                .collect();
            s.push_str(&coeffs.join(" "));
            s.push_str(&format!(" <= {}/{}\n", b.numer(), b.denom()));
        }
        s
    }
}

/// Volume of the convex hull of `points` in ℝ^dim, exact.
pub fn hull_volume(points: &[Vec<Rational>], dim: usize) -> Rational {
    let pts: Vec<Vec<Rational>> = {
        let set: BTreeSet<Vec<Rational>> = points.iter().cloned().collect();
        set.into_iter().collect()
    };
    if dim == 0 || pts.len() <= dim {
        return rat(0);
    }
    if dim == 1 {
        let lo = pts.iter().map(|p| p[0].clone()).min().unwrap();
        let hi = pts.iter().map(|p| p[0].clone()).max().unwrap();
        return hi - lo;
    }
    let n = pts.len();
    let centroid: Vec<Rational> = (0..dim)
        .map(|k| {
            pts.iter().map(|p| p[k].clone()).sum::<Rational>() / rat(n as i64)
        })
        .collect();

    // supporting hyperplanes through dim-subsets of points
    let mut facets: BTreeMap<(Vec<Rational>, Rational), Vec<Vec<Rational>>> = BTreeMap::new();
    let mut idx: Vec<usize> = (0..dim).collect();
    'subsets: loop {
        if let Some((normal, offset)) = hyperplane_through(&pts, &idx, dim) {
            let mut above = false;
            let mut below = false;
            for p in &pts {
                match dot(&normal, p).cmp(&offset) {
                    std::cmp::Ordering::Greater => above = true,
                    std::cmp::Ordering::Less => below = true,
                    std::cmp::Ordering::Equal => {}
                }
                if above && below {
                    break;
                }
            }
            if !(above && below) {
                // orient outward (a·x ≤ b holds for all points)
                let (a, b) = if above {
                    (normal.iter().map(|c| -c.clone()).collect(), -offset)
                } else {
                    (normal, offset)
                };
                if let Some(key) = normalize(&a, &b) {
                    facets.entry(key).or_insert_with(|| {
                        pts.iter()
                            .filter(|p| dot(&a, p) == b)
                            .cloned()
                            .collect()
                    });
                }
            }
        }
        // next combination
        let mut k = dim;
        loop {
            if k == 0 {
                break 'subsets;
            }
            k -= 1;
            if idx[k] != k + n - dim {
                idx[k] += 1;
                for j in k + 1..dim {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }

    let mut vol = rat(0);
    for ((a, b), facet_pts) in &facets {
        let drop_axis = (0..dim)
            .max_by(|&i, &j| a[i].abs().cmp(&a[j].abs()))
            .unwrap();
        if a[drop_axis].is_zero() {
            continue;
        }
        let projected: Vec<Vec<Rational>> = facet_pts
            .iter()
            .map(|p| {
                p.iter()
                    .enumerate()
                    .filter(|&(k, _)| k != drop_axis)
                    .map(|(_, v)| v.clone())
                    .collect()
            })
            .collect();
        let sub = hull_volume(&projected, dim - 1);
        let height = (b - dot(a, &centroid)).abs() / a[drop_axis].abs();
        vol += height * sub;
    }
    vol / rat(dim as i64)
}

/// Normal/offset of the hyperplane through the chosen points, if they are
/// affinely independent.
fn hyperplane_through(
    pts: &[Vec<Rational>],
    idx: &[usize],
    dim: usize,
) -> Option<(Vec<Rational>, Rational)> {
    // rows: p_i − p_0 for i ≥ 1; normal spans the 1-dim nullspace
    let base = &pts[idx[0]];
    let rows: Vec<Vec<Rational>> = idx[1..]
        .iter()
        .map(|&i| {
            (0..dim)
                .map(|k| &pts[i][k] - &base[k])
                .collect::<Vec<Rational>>()
        })
        .collect();
    let normal = nullspace_vector(&rows, dim)?;
    let offset = dot(&normal, base);
    Some((normal, offset))
}

/// One nonzero kernel vector of the row space, or None when the rows do not
/// have corank exactly 1.
fn nullspace_vector(rows: &[Vec<Rational>], dim: usize) -> Option<Vec<Rational>> {
    let mut a: Vec<Vec<Rational>> = rows.to_vec();
    let nrows = a.len();
    let mut pivot_col_of_row = Vec::new();
    let mut r = 0;
    for col in 0..dim {
        let Some(p) = (r..nrows).find(|&i| !a[i][col].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        let inv = a[r][col].clone();
        for j in 0..dim {
            a[r][j] = &a[r][j] / &inv;
        }
        for i in 0..nrows {
            if i != r && !a[i][col].is_zero() {
                let f = a[i][col].clone();
                for j in 0..dim {
                    let sub = &f * &a[r][j];
                    a[i][j] = &a[i][j] - sub;
                }
            }
        }
        pivot_col_of_row.push(col);
        r += 1;
    }
    if r != dim - 1 {
        return None;
    }
    let pivot_set: BTreeSet<usize> = pivot_col_of_row.iter().copied().collect();
    let free = (0..dim).find(|c| !pivot_set.contains(c))?;
    let mut v = vec![rat(0); dim];
    v[free] = rat(1);
    for (row, &pc) in pivot_col_of_row.iter().enumerate() {
        v[pc] = -a[row][free].clone();
    }
    Some(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn interval(lo: i64, hi: i64) -> HRepPolytope {
        HRepPolytope::new(1, vec![(vec![rat(1)], rat(hi)), (vec![rat(-1)], rat(-lo))])
    }

    #[test]
    fn interval_volume() {
        assert_eq!(interval(-1, 1).volume().unwrap(), rat(2));
        assert_eq!(interval(-3, 3).volume().unwrap(), rat(6));
    }

    #[test]
    fn unit_square_and_cube() {
        let square = HRepPolytope::linf_ball_preimage(&IntMatrix::identity(2));
        assert_eq!(square.volume().unwrap(), rat(4));
        let cube = HRepPolytope::linf_ball_preimage(&IntMatrix::identity(3));
        assert_eq!(cube.volume().unwrap(), rat(8));
    }

    #[test]
    fn simplex_volume() {
        // x, y ≥ 0, x + y ≤ 1 → area 1/2
        let tri = HRepPolytope::new(
            2,
            vec![
                (vec![rat(-1), rat(0)], rat(0)),
                (vec![rat(0), rat(-1)], rat(0)),
                (vec![rat(1), rat(1)], rat(1)),
            ],
        );
        assert_eq!(tri.volume().unwrap(), Rational::new(1.into(), 2.into()));
        // 3d simplex: 1/6
        let t3 = HRepPolytope::new(
            3,
            vec![
                (vec![rat(-1), rat(0), rat(0)], rat(0)),
                (vec![rat(0), rat(-1), rat(0)], rat(0)),
                (vec![rat(0), rat(0), rat(-1)], rat(0)),
                (vec![rat(1), rat(1), rat(1)], rat(1)),
            ],
        );
        assert_eq!(t3.volume().unwrap(), Rational::new(1.into(), 6.into()));
    }

    #[test]
    fn cross_polytope_volume() {
        // |x| + |y| + |z| ≤ 1 → volume 4/3
        let mut cons = Vec::new();
        for sx in [-1i64, 1] {
            for sy in [-1i64, 1] {
                for sz in [-1i64, 1] {
                    cons.push((vec![rat(sx), rat(sy), rat(sz)], rat(1)));
                }
            }
        }
        let cross = HRepPolytope::new(3, cons);
        assert_eq!(cross.volume().unwrap(), Rational::new(4.into(), 3.into()));
    }

    #[test]
    fn projection_of_flip_action_ball() {
        // W columns (1,0,0), (-2,1,0), (0,0,2): projecting the preimage of
        // the unit sup-ball onto the first coordinate gives [-3, 3].
        let w = IntMatrix::from_columns(&[vec![1, 0, 0], vec![-2, 1, 0], vec![0, 0, 2]]);
        let p = HRepPolytope::linf_ball_preimage(&w);
        let proj = p.project_first(1);
        let (lo, hi) = proj.coordinate_range(0).unwrap();
        assert_eq!(lo, rat(-3));
        assert_eq!(hi, rat(3));
        assert_eq!(proj.volume().unwrap(), rat(6));
    }

    #[test]
    fn projection_of_identity_is_box() {
        let p = HRepPolytope::linf_ball_preimage(&IntMatrix::identity(2));
        let proj = p.project_first(1);
        assert_eq!(proj.volume().unwrap(), rat(2));
    }

    #[test]
    fn vertices_of_square() {
        let square = HRepPolytope::linf_ball_preimage(&IntMatrix::identity(2));
        let vs = square.vertices();
        assert_eq!(vs.len(), 4);
        for v in vs {
            assert_eq!(v[0].abs(), rat(1));
            assert_eq!(v[1].abs(), rat(1));
        }
    }

    #[test]
    fn unbounded_detected() {
        // single half-plane
        let h = HRepPolytope::new(2, vec![(vec![rat(1), rat(0)], rat(1))]);
        assert!(!h.is_bounded());
        assert!(h.volume().is_err());
    }

    #[test]
    fn dimension_cap() {
        let p = HRepPolytope::linf_ball_preimage(&IntMatrix::identity(5));
        assert_eq!(p.volume(), Err(PolytopeError::DimensionCap(5)));
    }

    #[test]
    fn skewed_ball_volume_equals_inverse_det() {
        // P = {‖Wx‖_∞ ≤ 1} for square W: volume = 2^n / |det W|
        let w = IntMatrix::from_rows(&[vec![1, 2], vec![0, 3]]);
        let p = HRepPolytope::linf_ball_preimage(&w);
        assert_eq!(p.volume().unwrap(), Rational::new(4.into(), 3.into()));
    }

    #[test]
    fn text_format() {
        let p = interval(-3, 3);
        let text = p.to_text();
        assert!(text.contains("<= 3/1"), "{text}");
    }
}
