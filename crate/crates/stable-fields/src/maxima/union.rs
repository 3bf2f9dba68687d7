//! Upper envelope of value-ranked intervals with exact endpoints: the sweep
//! structure behind exact b_n. Inserting [lo, hi) at rank r raises the
//! envelope to at least r there; per-rank total lengths are maintained
//! incrementally.

use num_traits::Zero;
use std::ops::{Add, Sub};

pub trait Endpoint: Ord + Clone + Add<Output = Self> + Sub<Output = Self> + Zero {}
impl<K: Ord + Clone + Add<Output = K> + Sub<Output = K> + Zero> Endpoint for K {}

#[derive(Debug, Clone)]
pub struct ValuedUnion<K: Endpoint> {
    /// disjoint half-open segments (lo, hi, rank), sorted, hi > lo
    segments: Vec<(K, K, usize)>,
    /// total covered length per rank
    totals: Vec<K>,
}

impl<K: Endpoint> ValuedUnion<K> {
    pub fn new(rank_count: usize) -> Self {
        ValuedUnion {
            segments: Vec::new(),
            totals: vec![K::zero(); rank_count],
        }
    }

    pub fn totals(&self) -> &[K] {
        &self.totals
    }

    fn add_total(&mut self, rank: usize, lo: &K, hi: &K) {
        let len = hi.clone() - lo.clone();
        self.totals[rank] = self.totals[rank].clone() + len;
    }

    fn sub_total(&mut self, rank: usize, lo: &K, hi: &K) {
        let len = hi.clone() - lo.clone();
        self.totals[rank] = self.totals[rank].clone() - len;
    }

    /// Raise the envelope to rank `r` on [lo, hi).
    pub fn insert(&mut self, lo: K, hi: K, r: usize) {
        if hi <= lo {
            return;
        }
        debug_assert!(r < self.totals.len());
        // first segment whose hi might exceed lo
        let start = self.segments.partition_point(|seg| seg.1 <= lo);
        let mut replaced: Vec<(K, K, usize)> = Vec::new();
        let mut cursor = lo.clone();
        let mut idx = start;
        while idx < self.segments.len() && self.segments[idx].0 < hi {
            let (seg_lo, seg_hi, seg_r) = self.segments[idx].clone();
            if cursor < seg_lo {
                // uncovered gap [cursor, min(seg_lo, hi))
                let gap_hi = if seg_lo < hi { seg_lo.clone() } else { hi.clone() };
                self.add_total(r, &cursor, &gap_hi);
                replaced.push((cursor.clone(), gap_hi.clone(), r));
                cursor = gap_hi;
                if cursor >= hi {
                    break;
                }
            }
            // overlap [cursor, min(seg_hi, hi))
            let ov_hi = if seg_hi < hi { seg_hi.clone() } else { hi.clone() };
            if seg_r >= r {
                // keep the stronger segment part (and any left piece)
                if seg_lo < cursor {
                    replaced.push((seg_lo.clone(), cursor.clone(), seg_r));
                }
                replaced.push((cursor.clone(), ov_hi.clone(), seg_r));
            } else {
                if seg_lo < cursor {
                    replaced.push((seg_lo.clone(), cursor.clone(), seg_r));
                }
                self.sub_total(seg_r, &cursor, &ov_hi);
                self.add_total(r, &cursor, &ov_hi);
                replaced.push((cursor.clone(), ov_hi.clone(), r));
            }
            if hi < seg_hi {
                replaced.push((hi.clone(), seg_hi.clone(), seg_r));
            }
            cursor = ov_hi;
            idx += 1;
        }
        if cursor < hi {
            self.add_total(r, &cursor, &hi);
            replaced.push((cursor, hi, r));
        }
        // merge adjacent equal-rank pieces to keep the list compact
        replaced.sort_by(|a, b| a.0.cmp(&b.0));
        let mut merged: Vec<(K, K, usize)> = Vec::with_capacity(replaced.len());
        for piece in replaced {
            if piece.1 <= piece.0 {
                continue;
            }
            match merged.last_mut() {
                Some(last) if last.2 == piece.2 && last.1 == piece.0 => {
                    last.1 = piece.1;
                }
                _ => merged.push(piece),
            }
        }
        self.segments.splice(start..idx, merged);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    type U = ValuedUnion<i64>;

    fn brute_totals(inserts: &[(i64, i64, usize)], ranks: usize) -> Vec<i64> {
        let mut points: Vec<i64> = inserts
            .iter()
            .flat_map(|&(lo, hi, _)| [lo, hi])
            .collect();
        points.sort_unstable();
        points.dedup();
        let mut totals = vec![0i64; ranks];
        for w in points.windows(2) {
            let (a, b) = (w[0], w[1]);
            let best = inserts
                .iter()
                .filter(|&&(lo, hi, _)| lo <= a && b <= hi)
                .map(|&(_, _, r)| r)
                .max();
            if let Some(r) = best {
                totals[r] += b - a;
            }
        }
        totals
    }

    #[test]
    fn basic_overlap_and_override() {
        let mut u = U::new(3);
        u.insert(0, 10, 0);
        assert_eq!(u.totals(), &[10, 0, 0]);
        // higher rank takes over the middle
        u.insert(3, 5, 2);
        assert_eq!(u.totals(), &[8, 0, 2]);
        // lower rank cannot displace
        u.insert(0, 10, 1);
        assert_eq!(u.totals(), &[0, 8, 2]);
        // disjoint extension
        u.insert(-5, -2, 0);
        assert_eq!(u.totals(), &[3, 8, 2]);
        // spanning everything at top rank
        u.insert(-10, 20, 2);
        assert_eq!(u.totals(), &[0, 0, 30]);
    }

    #[test]
    fn empty_interval_is_ignored() {
        let mut u = U::new(1);
        u.insert(4, 4, 0);
        u.insert(5, 3, 0);
        assert_eq!(u.totals(), &[0]);
    }

    proptest! {
        #[test]
        fn matches_brute_force(
            inserts in proptest::collection::vec(
                (-50i64..50, 0i64..30, 0usize..4).prop_map(|(lo, len, r)| (lo, lo + len, r)),
                1..40,
            )
        ) {
            let mut u = U::new(4);
            for &(lo, hi, r) in &inserts {
                u.insert(lo, hi, r);
            }
            prop_assert_eq!(u.totals(), &brute_totals(&inserts, 4)[..]);
        }
    }
}
