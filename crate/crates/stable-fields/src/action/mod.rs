//! Nonsingular ℤ^d-actions: the three concrete models (translations of a
//! Euclidean space with sheet flips, permutations of a weighted atom window,
//! and the index shift on a seeded product measure), their Radon–Nikodym
//! derivatives, and exact group-law evaluation.

pub mod config;
pub mod field;
pub mod fixtures;

use num_traits::{Signed, ToPrimitive};

use crate::{Quad, Rational};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ActionError {
    #[error("state does not belong to this action's state space")]
    StateMismatch,
    #[error("index arithmetic overflowed")]
    IndexOverflow,
    #[error("index has rank {got}, action expects {expected}")]
    RankMismatch { got: usize, expected: usize },
    #[error("invalid action: {0}")]
    Invalid(String),
}

/// A point of the state space. Translation states carry exact coordinates;
/// atomic states are window indices (`None` once the orbit has escaped the
/// window); shifted states are a seeded product-measure configuration viewed
/// through a lattice offset.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum State {
    Translation { coords: Vec<Quad>, flips: Vec<i8> },
    Atom(Option<usize>),
    Shifted { seed: u64, shift: Vec<i64> },
}

impl State {
    pub fn escaped(&self) -> bool {
        matches!(self, State::Atom(None))
    }
}

/// x ↦ x + A·t on ℝ^m (exact quadratic-number entries), with sheet flips
/// driven by parity patterns of t. The control measure is Lebesgue^m times
/// counting on the flip sheets, so the action is measure preserving.
#[derive(Debug, Clone, PartialEq)]
pub struct TranslationAction {
    pub ambient_dim: usize,
    pub group_rank: usize,
    /// `columns[j]` is the translation applied by generator j (length m).
    pub columns: Vec<Vec<Quad>>,
    /// `flip_patterns[i][j] = 1` when generator j toggles flip coordinate i.
    pub flip_patterns: Vec<Vec<u8>>,
}

impl TranslationAction {
    pub fn new(
        columns: Vec<Vec<Quad>>,
        flip_patterns: Vec<Vec<u8>>,
    ) -> Result<Self, ActionError> {
        let group_rank = columns.len();
        if group_rank == 0 {
            return Err(ActionError::Invalid("need at least one generator".into()));
        }
        let ambient_dim = columns[0].len();
        if columns.iter().any(|c| c.len() != ambient_dim) {
            return Err(ActionError::Invalid("ragged translation columns".into()));
        }
        let mut radicand = 0u64;
        for col in &columns {
            for v in col {
                let m = v.radicand();
                if m != 0 {
                    if radicand != 0 && radicand != m {
                        return Err(ActionError::Invalid(format!(
                            "mixed radicands sqrt {radicand} and sqrt {m}"
                        )));
                    }
                    radicand = m;
                }
            }
        }
        for p in &flip_patterns {
            if p.len() != group_rank {
                return Err(ActionError::Invalid(
                    "flip pattern length must equal the group rank".into(),
                ));
            }
            if p.iter().any(|&b| b > 1) {
                return Err(ActionError::Invalid("flip patterns are 0/1".into()));
            }
        }
        Ok(TranslationAction {
            ambient_dim,
            group_rank,
            columns,
            flip_patterns,
        })
    }

    pub fn flip_count(&self) -> usize {
        self.flip_patterns.len()
    }

    /// The common radicand of the translation entries (0 when all rational).
    pub fn radicand(&self) -> u64 {
        self.columns
            .iter()
            .flatten()
            .map(Quad::radicand)
            .find(|&m| m != 0)
            .unwrap_or(0)
    }

    /// Exact total translation A·t.
    pub fn translation_of(&self, t: &[i64]) -> Vec<Quad> {
        let mut out = vec![Quad::zero(); self.ambient_dim];
        for (j, &tj) in t.iter().enumerate() {
            if tj == 0 {
                continue;
            }
            for (i, entry) in self.columns[j].iter().enumerate() {
                let add = entry.scale_int(tj);
                out[i] = out[i].clone() + add;
            }
        }
        out
    }

    /// ±1 sign picked up by each flip coordinate under t.
    pub fn flip_signs_of(&self, t: &[i64]) -> Vec<i8> {
        self.flip_patterns
            .iter()
            .map(|pattern| {
                let parity: i64 = pattern
                    .iter()
                    .zip(t)
                    .map(|(&p, &tj)| (p as i64) * (tj & 1))
                    .sum();
                if parity % 2 == 0 {
                    1
                } else {
                    -1
                }
            })
            .collect()
    }
}

/// Permutations of a finite window of weighted atoms, one bijection per
/// generator. Countable spaces are truncated to the window; any orbit step
/// leaving it produces the explicit escaped state.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicAction {
    pub group_rank: usize,
    pub weights: Vec<Rational>,
    /// forward[j][a] = image of atom a under generator j (None = escapes)
    pub forward: Vec<Vec<Option<usize>>>,
    pub backward: Vec<Vec<Option<usize>>>,
}

impl AtomicAction {
    pub fn new(
        weights: Vec<Rational>,
        forward: Vec<Vec<Option<usize>>>,
    ) -> Result<Self, ActionError> {
        let n = weights.len();
        if n == 0 {
            return Err(ActionError::Invalid("need at least one atom".into()));
        }
        if weights.iter().any(|w| !w.is_positive()) {
            return Err(ActionError::Invalid("weights must be positive".into()));
        }
        let group_rank = forward.len();
        if group_rank == 0 {
            return Err(ActionError::Invalid("need at least one generator".into()));
        }
        let mut backward = vec![vec![None; n]; group_rank];
        for (j, fwd) in forward.iter().enumerate() {
            if fwd.len() != n {
                return Err(ActionError::Invalid("forward table length mismatch".into()));
            }
            for (a, &img) in fwd.iter().enumerate() {
                if let Some(b) = img {
                    if b >= n {
                        return Err(ActionError::Invalid("atom index out of range".into()));
                    }
                    if backward[j][b].is_some() {
                        return Err(ActionError::Invalid(format!(
                            "generator {j} is not injective on the window"
                        )));
                    }
                    backward[j][b] = Some(a);
                }
            }
        }
        let action = AtomicAction {
            group_rank,
            weights,
            forward,
            backward,
        };
        action.check_commutativity()?;
        Ok(action)
    }

    /// Generators of a ℤ^d action must commute; verified wherever both
    /// compositions stay inside the window.
    fn check_commutativity(&self) -> Result<(), ActionError> {
        let n = self.weights.len();
        for i in 0..self.group_rank {
            for j in i + 1..self.group_rank {
                for a in 0..n {
                    let ij = self.forward[i][a].and_then(|b| self.forward[j][b]);
                    let ji = self.forward[j][a].and_then(|b| self.forward[i][b]);
                    if let (Some(x), Some(y)) = (ij, ji) {
                        if x != y {
                            return Err(ActionError::Invalid(format!(
                                "generators {i} and {j} do not commute at atom {a}"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn atom_count(&self) -> usize {
        self.weights.len()
    }

    pub fn total_weight(&self) -> Rational {
        self.weights.iter().sum()
    }

    /// Walk one atom by t, axis by axis. None = escaped.
    pub fn walk(&self, t: &[i64], start: usize) -> Option<usize> {
        let mut cur = Some(start);
        for (j, &tj) in t.iter().enumerate() {
            let table = if tj >= 0 {
                &self.forward[j]
            } else {
                &self.backward[j]
            };
            for _ in 0..tj.unsigned_abs() {
                cur = cur.and_then(|a| table[a]);
                if cur.is_none() {
                    return None;
                }
            }
        }
        cur
    }
}

/// Marginal law of the i.i.d. coordinates of a product-measure state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Marginal {
    Gaussian,
    /// P(g > x) = x^{−θ} for x ≥ 1.
    Pareto { theta: f64 },
}

impl Marginal {
    pub fn quantile(self, u: f64) -> f64 {
        match self {
            Marginal::Gaussian => crate::special::inverse_normal_cdf(u),
            Marginal::Pareto { theta } => (1.0 - u).powf(-1.0 / theta),
        }
    }

    pub fn has_alpha_moment(self, alpha: f64) -> bool {
        match self {
            Marginal::Gaussian => true,
            Marginal::Pareto { theta } => theta > alpha,
        }
    }
}

/// The index shift on a product probability measure ρ^{⊗ℤ^d}. States never
/// materialize the infinite configuration: a coordinate's value is a pure
/// function of (state seed, index), evaluated on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateShiftAction {
    pub group_rank: usize,
    pub marginal: Marginal,
}

impl CoordinateShiftAction {
    pub fn new(group_rank: usize, marginal: Marginal) -> Result<Self, ActionError> {
        if group_rank == 0 {
            return Err(ActionError::Invalid("need at least one generator".into()));
        }
        if let Marginal::Pareto { theta } = marginal {
            if !(theta > 0.0) {
                return Err(ActionError::Invalid("Pareto tail index must be positive".into()));
            }
        }
        Ok(CoordinateShiftAction {
            group_rank,
            marginal,
        })
    }

    /// ω(index) for the configuration attached to `seed`.
    pub fn coordinate(&self, seed: u64, index: &[i64]) -> f64 {
        self.marginal
            .quantile(crate::rng::coord_uniform(seed, index))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ActionSpec {
    Translation(TranslationAction),
    Atomic(AtomicAction),
    CoordinateShift(CoordinateShiftAction),
}

impl ActionSpec {
    pub fn group_rank(&self) -> usize {
        match self {
            ActionSpec::Translation(a) => a.group_rank,
            ActionSpec::Atomic(a) => a.group_rank,
            ActionSpec::CoordinateShift(a) => a.group_rank,
        }
    }

    /// The control measure is a probability measure (true only for the
    /// product-measure shift).
    pub fn is_probability(&self) -> bool {
        matches!(self, ActionSpec::CoordinateShift(_))
    }

    /// All shipped models preserve their control measure except atom windows
    /// with non-constant weights.
    pub fn is_measure_preserving(&self) -> bool {
        match self {
            ActionSpec::Translation(_) | ActionSpec::CoordinateShift(_) => true,
            ActionSpec::Atomic(a) => {
                let w0 = &a.weights[0];
                a.weights.iter().all(|w| w == w0)
            }
        }
    }
}

fn check_rank(expected: usize, t: &[i64]) -> Result<(), ActionError> {
    if t.len() == expected {
        Ok(())
    } else {
        Err(ActionError::RankMismatch {
            got: t.len(),
            expected,
        })
    }
}

/// φ_t(s). Satisfies φ_0 = id and φ_{u+v} = φ_u ∘ φ_v exactly.
pub fn apply(action: &ActionSpec, t: &[i64], s: &State) -> Result<State, ActionError> {
    check_rank(action.group_rank(), t)?;
    match (action, s) {
        (ActionSpec::Translation(a), State::Translation { coords, flips }) => {
            if coords.len() != a.ambient_dim || flips.len() != a.flip_count() {
                return Err(ActionError::StateMismatch);
            }
            let delta = a.translation_of(t);
            let new_coords = coords
                .iter()
                .zip(delta)
                .map(|(x, d)| x.clone() + d)
                .collect();
            let signs = a.flip_signs_of(t);
            let new_flips = flips.iter().zip(signs).map(|(&f, s)| f * s).collect();
            Ok(State::Translation {
                coords: new_coords,
                flips: new_flips,
            })
        }
        (ActionSpec::Atomic(a), State::Atom(idx)) => Ok(State::Atom(
            idx.and_then(|start| a.walk(t, start)),
        )),
        (ActionSpec::CoordinateShift(_), State::Shifted { seed, shift }) => {
            let mut new_shift = Vec::with_capacity(shift.len());
            for (x, dt) in shift.iter().zip(t) {
                new_shift.push(x.checked_add(*dt).ok_or(ActionError::IndexOverflow)?);
            }
            Ok(State::Shifted {
                seed: *seed,
                shift: new_shift,
            })
        }
        _ => Err(ActionError::StateMismatch),
    }
}

/// dμ∘φ_t/dμ at s. All translation and shift models are measure preserving;
/// atom windows give the exact weight ratio.
pub fn rn_derivative(action: &ActionSpec, t: &[i64], s: &State) -> Result<f64, ActionError> {
    Ok(rn_derivative_exact(action, t, s)?
        .map(|r| r.to_f64().expect("weight ratio out of f64 range"))
        .unwrap_or(1.0))
}

/// Exact rational Radon–Nikodym value where one exists (atomic actions);
/// None means "identically 1". Escaped orbits report 1: the kernel vanishes
/// off the window, so the value never enters any sum.
pub fn rn_derivative_exact(
    action: &ActionSpec,
    t: &[i64],
    s: &State,
) -> Result<Option<Rational>, ActionError> {
    check_rank(action.group_rank(), t)?;
    match (action, s) {
        (ActionSpec::Atomic(a), State::Atom(Some(idx))) => {
            if *idx >= a.atom_count() {
                return Err(ActionError::StateMismatch);
            }
            Ok(a.walk(t, *idx)
                .map(|img| &a.weights[img] / &a.weights[*idx]))
        }
        (ActionSpec::Atomic(_), State::Atom(None)) => Ok(None),
        (ActionSpec::Translation(_), State::Translation { .. })
        | (ActionSpec::CoordinateShift(_), State::Shifted { .. }) => Ok(None),
        _ => Err(ActionError::StateMismatch),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action::fixtures;
    use crate::stable::Alpha;

    fn quad_int(n: i64) -> Quad {
        Quad::integer(n)
    }

    #[test]
    fn irrational_translation_is_exact() {
        let field = fixtures::irrational_rot(Alpha::new(1.2).unwrap());
        let s = State::Translation {
            coords: vec![quad_int(0)],
            flips: vec![],
        };
        let moved = apply(&field.action, &[1, 1], &s).unwrap();
        let expected = Quad::integer(1) + Quad::sqrt(2).unwrap();
        match moved {
            State::Translation { coords, .. } => assert_eq!(coords[0], expected),
            _ => panic!("wrong state kind"),
        }
    }

    #[test]
    fn identity_axiom() {
        let field = fixtures::z3_flip(Alpha::new(1.2).unwrap());
        let s = State::Translation {
            coords: vec![Quad::from_ratio(1, 3)],
            flips: vec![-1],
        };
        assert_eq!(apply(&field.action, &[0, 0, 0], &s).unwrap(), s);
    }

    #[test]
    fn flip_action_moves_and_flips() {
        // (x, y) ↦ (x + i + 2j, (−1)^k y) at t = (1,1,1), (0, 1) → (3, −1)
        let field = fixtures::z3_flip(Alpha::new(1.2).unwrap());
        let s = State::Translation {
            coords: vec![quad_int(0)],
            flips: vec![1],
        };
        let moved = apply(&field.action, &[1, 1, 1], &s).unwrap();
        match moved {
            State::Translation { coords, flips } => {
                assert_eq!(coords[0], quad_int(3));
                assert_eq!(flips, vec![-1]);
            }
            _ => panic!("wrong state kind"),
        }
    }

    #[test]
    fn measure_preserving_fixtures_have_unit_rn() {
        for field in [
            fixtures::irrational_rot(Alpha::new(1.2).unwrap()),
            fixtures::z3_flip(Alpha::new(1.2).unwrap()),
        ] {
            let s = fixtures::origin_state(&field.action);
            let d = field.action.group_rank();
            let t: Vec<i64> = (0..d).map(|j| j as i64 + 1).collect();
            assert_eq!(rn_derivative(&field.action, &t, &s).unwrap(), 1.0);
            assert_eq!(
                rn_derivative(&field.action, &vec![0; d], &s).unwrap(),
                1.0
            );
        }
    }

    #[test]
    fn atomic_rn_is_weight_ratio() {
        // 3-atom cycle with weights (1, 2, 4): one step from atom 0 gives 2
        let action = fixtures::weighted_cycle(&[1, 2, 4]);
        let s = State::Atom(Some(0));
        assert_eq!(rn_derivative(&action, &[1], &s).unwrap(), 2.0);
        assert_eq!(rn_derivative(&action, &[2], &s).unwrap(), 4.0);
        assert_eq!(rn_derivative(&action, &[3], &s).unwrap(), 1.0);
        assert_eq!(rn_derivative(&action, &[-1], &s).unwrap(), 4.0);
    }

    #[test]
    fn atomic_chain_rule_exact() {
        let action = fixtures::weighted_cycle(&[1, 2, 4]);
        for u in -4i64..=4 {
            for v in -4i64..=4 {
                for a in 0..3usize {
                    let s = State::Atom(Some(a));
                    let lhs = rn_derivative_exact(&action, &[u + v], &s)
                        .unwrap()
                        .unwrap();
                    let via = apply(&action, &[v], &s).unwrap();
                    let d_u = rn_derivative_exact(&action, &[u], &via).unwrap().unwrap();
                    let d_v = rn_derivative_exact(&action, &[v], &s).unwrap().unwrap();
                    assert_eq!(lhs, d_u * d_v, "u={u} v={v} a={a}");
                }
            }
        }
    }

    #[test]
    fn shift_action_is_free_walk() {
        let action = ActionSpec::CoordinateShift(
            CoordinateShiftAction::new(2, Marginal::Gaussian).unwrap(),
        );
        let s = State::Shifted {
            seed: 5,
            shift: vec![0, 0],
        };
        let a = apply(&action, &[3, -2], &s).unwrap();
        let b = apply(&action, &[1, 1], &a).unwrap();
        let direct = apply(&action, &[4, -1], &s).unwrap();
        assert_eq!(b, direct);
    }

    #[test]
    fn overflow_is_reported() {
        let action = ActionSpec::CoordinateShift(
            CoordinateShiftAction::new(1, Marginal::Gaussian).unwrap(),
        );
        let s = State::Shifted {
            seed: 0,
            shift: vec![i64::MAX],
        };
        assert_eq!(
            apply(&action, &[1], &s).unwrap_err(),
            ActionError::IndexOverflow
        );
    }

    #[test]
    fn noncommuting_generators_rejected() {
        // two transpositions on 3 atoms do not commute
        let fwd = vec![
            vec![Some(1), Some(0), Some(2)],
            vec![Some(0), Some(2), Some(1)],
        ];
        let weights = vec![Rational::from_integer(1.into()); 3];
        assert!(AtomicAction::new(weights, fwd).is_err());
    }

    #[test]
    fn group_axioms_random_trials() {
        use rand::RngExt;
        let mut rng = crate::rng::stream_rng(77, 0);
        let fields = [
            fixtures::irrational_rot(Alpha::new(1.2).unwrap()),
            fixtures::z3_flip(Alpha::new(1.2).unwrap()),
            fixtures::gauss_iid(Alpha::new(1.0).unwrap(), 2),
            fixtures::moving_avg(Alpha::new(1.5).unwrap(), 1, 16),
        ];
        for field in &fields {
            let d = field.action.group_rank();
            for _ in 0..200 {
                let u: Vec<i64> = (0..d).map(|_| rng.random_range(-6i64..=6)).collect();
                let v: Vec<i64> = (0..d).map(|_| rng.random_range(-6i64..=6)).collect();
                let s = fixtures::sample_state(&field.action, &mut rng);
                let uv: Vec<i64> = u.iter().zip(&v).map(|(a, b)| a + b).collect();
                let lhs = apply(&field.action, &uv, &s).unwrap();
                let rhs = apply(
                    &field.action,
                    &u,
                    &apply(&field.action, &v, &s).unwrap(),
                )
                .unwrap();
                // window truncation: an orbit that escapes on one of the two
                // paths cannot be certified either way
                if !lhs.escaped() && !rhs.escaped() {
                    assert_eq!(lhs, rhs, "group law failed");
                }
                assert_eq!(apply(&field.action, &vec![0; d], &s).unwrap(), s);
            }
        }
    }
}
