//! Kernels, cocycles and the complete field description: the transported
//! family f_t(s) = c_t(s) · (dμ∘φ_t/dμ)^{1/α}(s) · f(φ_t(s)).

use num_traits::ToPrimitive;
use rand::Rng;

use super::{apply, rn_derivative, ActionError, ActionSpec, State};
use crate::stable::Alpha;
use crate::{Quad, Real};

/// Product of closed intervals per ambient coordinate, plus a required sheet
/// value per flip coordinate (`None` = either sheet).
#[derive(Debug, Clone, PartialEq)]
pub struct BoxSupport {
    pub intervals: Vec<(Quad, Quad)>,
    pub flips: Vec<Option<i8>>,
}

impl BoxSupport {
    pub fn contains(&self, coords: &[Quad], flips: &[i8]) -> bool {
        self.intervals
            .iter()
            .zip(coords)
            .all(|((lo, hi), x)| lo <= x && x <= hi)
            && self
                .flips
                .iter()
                .zip(flips)
                .all(|(req, &f)| req.map_or(true, |r| r == f))
    }

    /// Lebesgue measure of the coordinate box times the number of matching
    /// sheets out of `sheet_count` flip coordinates.
    pub fn measure(&self, sheet_count: usize) -> f64 {
        let vol: f64 = self
            .intervals
            .iter()
            .map(|(lo, hi)| (hi.clone() - lo.clone()).to_f64().max(0.0))
            .product();
        let free = self.flips.iter().filter(|r| r.is_none()).count();
        debug_assert_eq!(self.flips.len(), sheet_count);
        vol * (1u64 << free) as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    /// Indicator of a box support (translation actions).
    IndicatorBox(BoxSupport),
    /// Finitely many boxes with real values; overlaps resolve by summing,
    /// so fixtures keep them disjoint.
    PiecewiseConstant(Vec<(BoxSupport, f64)>),
    /// One value per window atom; zero off the window.
    AtomTable(Vec<f64>),
    /// The coordinate at the origin of a product-measure state.
    CoordinateProjection,
    /// Constant kernel; only meaningful on probability spaces.
    Constant(f64),
}

/// ±1 cocycles. The parity pattern family (a fixed sign per generator,
/// composed multiplicatively) covers every shipped fixture; the broken
/// variant exists to exercise the cocycle checker.
#[derive(Debug, Clone, PartialEq)]
pub enum CocycleSpec {
    ParityPattern { signs: Vec<i8> },
    /// Violates the cocycle identity: the sign of c_{e₁} depends on the
    /// state. Diagnostic fixture for `check_cocycle`, never a valid field.
    BrokenFirstAxis { signs: Vec<i8> },
}

impl CocycleSpec {
    pub fn trivial(rank: usize) -> Self {
        CocycleSpec::ParityPattern {
            signs: vec![1; rank],
        }
    }

    pub fn evaluate(&self, t: &[i64], s: &State) -> i8 {
        match self {
            CocycleSpec::ParityPattern { signs } => parity_sign(signs, t),
            CocycleSpec::BrokenFirstAxis { signs } => {
                let base = parity_sign(signs, t);
                let is_e1 = t.first().copied() == Some(1)
                    && t.iter().skip(1).all(|&x| x == 0);
                if is_e1 {
                    base * state_sign(s)
                } else {
                    base
                }
            }
        }
    }
}

fn parity_sign(signs: &[i8], t: &[i64]) -> i8 {
    signs
        .iter()
        .zip(t)
        .map(|(&sg, &tj)| if sg < 0 && tj & 1 == 1 { -1 } else { 1 })
        .product()
}

fn state_sign(s: &State) -> i8 {
    match s {
        State::Translation { coords, .. } => {
            if coords.first().map_or(true, |x| x.signum() >= 0) {
                1
            } else {
                -1
            }
        }
        State::Atom(Some(i)) => {
            if i % 2 == 0 {
                1
            } else {
                -1
            }
        }
        State::Atom(None) => 1,
        State::Shifted { seed, .. } => {
            if seed % 2 == 0 {
                1
            } else {
                -1
            }
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum FieldError {
    #[error("kernel kind does not match the action's state space")]
    KernelActionMismatch,
    #[error("kernel is not in L^α: {0}")]
    NotInLAlpha(String),
    #[error("cocycle has {got} signs, action rank is {expected}")]
    CocycleRank { got: usize, expected: usize },
    #[error("kernel uses radicand sqrt {kernel} but the action uses sqrt {action}")]
    RadicandMismatch { kernel: u64, action: u64 },
    #[error(transparent)]
    Action(#[from] ActionError),
}

/// Complete description of a stationary SαS field: stability index, the
/// generating action, the base kernel and the cocycle.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSpec {
    pub alpha: Alpha,
    pub action: ActionSpec,
    pub kernel: KernelSpec,
    pub cocycle: CocycleSpec,
}

impl FieldSpec {
    pub fn new(
        alpha: Alpha,
        action: ActionSpec,
        kernel: KernelSpec,
        cocycle: CocycleSpec,
    ) -> Result<Self, FieldError> {
        let rank = action.group_rank();
        let signs = match &cocycle {
            CocycleSpec::ParityPattern { signs } | CocycleSpec::BrokenFirstAxis { signs } => signs,
        };
        if signs.len() != rank {
            return Err(FieldError::CocycleRank {
                got: signs.len(),
                expected: rank,
            });
        }
        match (&action, &kernel) {
            (ActionSpec::Translation(a), KernelSpec::IndicatorBox(b)) => {
                validate_box(a, b)?;
            }
            (ActionSpec::Translation(a), KernelSpec::PiecewiseConstant(pieces)) => {
                for (b, v) in pieces {
                    validate_box(a, b)?;
                    if !v.is_finite() {
                        return Err(FieldError::NotInLAlpha("non-finite piece value".into()));
                    }
                }
            }
            (ActionSpec::Atomic(a), KernelSpec::AtomTable(vals)) => {
                if vals.len() != a.atom_count() {
                    return Err(FieldError::KernelActionMismatch);
                }
            }
            (ActionSpec::Atomic(a), KernelSpec::Constant(_)) => {
                // finite total weight ⇒ constants are in L^α
                let _ = a;
            }
            (ActionSpec::CoordinateShift(a), KernelSpec::CoordinateProjection) => {
                if !a.marginal.has_alpha_moment(alpha.value()) {
                    return Err(FieldError::NotInLAlpha(format!(
                        "marginal lacks a finite absolute {} moment",
                        alpha.value()
                    )));
                }
            }
            (ActionSpec::CoordinateShift(_), KernelSpec::Constant(_)) => {}
            _ => return Err(FieldError::KernelActionMismatch),
        }
        Ok(FieldSpec {
            alpha,
            action,
            kernel,
            cocycle,
        })
    }

    pub fn group_rank(&self) -> usize {
        self.action.group_rank()
    }

    /// f(s), the untransported kernel.
    pub fn kernel_at(&self, s: &State) -> Result<Real, FieldError> {
        match (&self.kernel, s) {
            (KernelSpec::IndicatorBox(b), State::Translation { coords, flips }) => {
                Ok(if b.contains(coords, flips) { 1.0 } else { 0.0 })
            }
            (KernelSpec::PiecewiseConstant(pieces), State::Translation { coords, flips }) => {
                Ok(pieces
                    .iter()
                    .filter(|(b, _)| b.contains(coords, flips))
                    .map(|(_, v)| *v)
                    .sum())
            }
            (KernelSpec::AtomTable(vals), State::Atom(idx)) => {
                Ok(idx.map_or(0.0, |i| vals[i]))
            }
            (KernelSpec::CoordinateProjection, State::Shifted { seed, shift }) => {
                match &self.action {
                    ActionSpec::CoordinateShift(a) => Ok(a.coordinate(*seed, shift)),
                    _ => Err(FieldError::KernelActionMismatch),
                }
            }
            (KernelSpec::Constant(v), State::Shifted { .. })
            | (KernelSpec::Constant(v), State::Atom(_)) => Ok(*v),
            _ => Err(FieldError::KernelActionMismatch),
        }
    }

    /// f_t(s): cocycle times RN^{1/α} times f ∘ φ_t. f_0 = f.
    pub fn field_kernel(&self, t: &[i64], s: &State) -> Result<Real, FieldError> {
        let moved = apply(&self.action, t, s)?;
        let base = self.kernel_at(&moved)?;
        if base == 0.0 {
            return Ok(0.0);
        }
        let c = self.cocycle.evaluate(t, s) as Real;
        let rn = rn_derivative(&self.action, t, s)?;
        Ok(c * rn.powf(1.0 / self.alpha.value()) * base)
    }

    /// ∫ |f|^α dμ, exact for the closed-form kernels; used by norms and
    /// transport checks.
    pub fn kernel_alpha_norm_pow(&self) -> Result<Real, FieldError> {
        let alpha = self.alpha.value();
        match (&self.kernel, &self.action) {
            (KernelSpec::IndicatorBox(b), ActionSpec::Translation(a)) => {
                Ok(b.measure(a.flip_count()))
            }
            (KernelSpec::PiecewiseConstant(pieces), ActionSpec::Translation(a)) => Ok(pieces
                .iter()
                .map(|(b, v)| v.abs().powf(alpha) * b.measure(a.flip_count()))
                .sum()),
            (KernelSpec::AtomTable(vals), ActionSpec::Atomic(a)) => Ok(vals
                .iter()
                .zip(&a.weights)
                .map(|(v, w)| v.abs().powf(alpha) * w.to_f64().unwrap())
                .sum()),
            (KernelSpec::Constant(v), ActionSpec::Atomic(a)) => {
                Ok(v.abs().powf(alpha) * a.total_weight().to_f64().unwrap())
            }
            (KernelSpec::Constant(v), ActionSpec::CoordinateShift(_)) => {
                Ok(v.abs().powf(alpha))
            }
            (KernelSpec::CoordinateProjection, ActionSpec::CoordinateShift(_)) => Err(
                FieldError::NotInLAlpha("no closed form for the projection moment".into()),
            ),
            _ => Err(FieldError::KernelActionMismatch),
        }
    }

    /// Replace f by its transport f_{s₀} (exactly, as a new kernel). The
    /// class of the generating action is representation independent; this
    /// realizes the computable orbit-shift special case.
    pub fn transport_kernel(&self, shift: &[i64]) -> Result<FieldSpec, FieldError> {
        let sign_flip = match &self.cocycle {
            CocycleSpec::ParityPattern { signs } => parity_sign(signs, shift),
            CocycleSpec::BrokenFirstAxis { .. } => {
                return Err(FieldError::KernelActionMismatch)
            }
        };
        let kernel = match (&self.kernel, &self.action) {
            (KernelSpec::IndicatorBox(b), ActionSpec::Translation(a)) => {
                let moved = transport_box(a, b, shift);
                if sign_flip < 0 {
                    KernelSpec::PiecewiseConstant(vec![(moved, -1.0)])
                } else {
                    KernelSpec::IndicatorBox(moved)
                }
            }
            (KernelSpec::PiecewiseConstant(pieces), ActionSpec::Translation(a)) => {
                KernelSpec::PiecewiseConstant(
                    pieces
                        .iter()
                        .map(|(b, v)| (transport_box(a, b, shift), v * sign_flip as f64))
                        .collect(),
                )
            }
            (KernelSpec::AtomTable(vals), ActionSpec::Atomic(a)) => {
                // f_{s₀}(atom) = rn^{1/α}(atom)·f(walk(s₀, atom))
                let alpha = self.alpha.value();
                let table = (0..a.atom_count())
                    .map(|idx| match a.walk(shift, idx) {
                        Some(img) => {
                            let rn = (&a.weights[img] / &a.weights[idx])
                                .to_f64()
                                .unwrap();
                            sign_flip as f64 * rn.powf(1.0 / alpha) * vals[img]
                        }
                        None => 0.0,
                    })
                    .collect();
                KernelSpec::AtomTable(table)
            }
            _ => return Err(FieldError::KernelActionMismatch),
        };
        FieldSpec::new(self.alpha, self.action.clone(), kernel, self.cocycle.clone())
    }

    /// Support(f_t, t ∈ ℤ^d) = S, checked with the structure of the shipped
    /// kernel/action families.
    pub fn has_full_support(&self) -> Result<bool, FieldError> {
        match (&self.action, &self.kernel) {
            (ActionSpec::Translation(a), _) => {
                let pieces = self.translation_pieces()?;
                if pieces.is_empty() {
                    return Ok(false);
                }
                if a.ambient_dim != 1 {
                    // only the 1-dimensional ambient case ships
                    return Ok(false);
                }
                // offsets of the orbit of the support under the translation
                // group: dense iff two generators have irrational ratio;
                // otherwise the offsets form g·ℤ and the support must cover
                // a period. Flip sheets must all be reachable.
                let flips_reachable = (0..a.flip_count()).all(|i| {
                    a.flip_patterns[i].iter().any(|&b| b == 1)
                        || pieces.iter().any(|(b, _)| b.flips[i].is_none())
                        || {
                            let signs: Vec<i8> = pieces
                                .iter()
                                .filter_map(|(b, _)| b.flips[i])
                                .collect();
                            signs.contains(&1) && signs.contains(&-1)
                        }
                });
                if !flips_reachable {
                    return Ok(false);
                }
                let deltas: Vec<Quad> = a
                    .columns
                    .iter()
                    .map(|c| c[0].clone())
                    .filter(|q| !q.is_zero())
                    .collect();
                if deltas.is_empty() {
                    return Ok(false);
                }
                let dense = deltas.iter().any(|q| !q.is_rational())
                    && deltas.iter().any(|q| q.is_rational() && !q.is_zero())
                    || has_irrational_ratio(&deltas);
                if dense {
                    return Ok(true);
                }
                // all deltas rational: offsets ⊆ g·ℤ with g = gcd of deltas;
                // require total support length per period ≥ g
                let g = rational_gcd(&deltas);
                let covered: f64 = pieces
                    .iter()
                    .map(|(b, _)| {
                        let (lo, hi) = &b.intervals[0];
                        (hi.clone() - lo.clone()).to_f64()
                    })
                    .sum();
                Ok(covered + 1e-12 >= g)
            }
            (ActionSpec::Atomic(a), KernelSpec::AtomTable(vals)) => {
                // every atom must reach the support of f under some t
                let support: Vec<usize> = vals
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(i, _)| i)
                    .collect();
                if support.is_empty() {
                    return Ok(false);
                }
                // breadth-first over the window from the support
                let n = a.atom_count();
                let mut reached = vec![false; n];
                let mut queue: Vec<usize> = support.clone();
                for &s in &support {
                    reached[s] = true;
                }
                while let Some(b) = queue.pop() {
                    for j in 0..a.group_rank {
                        for tbl in [&a.forward[j], &a.backward[j]] {
                            if let Some(prev) = tbl[b] {
                                if !reached[prev] {
                                    reached[prev] = true;
                                    queue.push(prev);
                                }
                            }
                        }
                    }
                }
                Ok(reached.iter().all(|&r| r))
            }
            (ActionSpec::Atomic(_), KernelSpec::Constant(v)) => Ok(*v != 0.0),
            (ActionSpec::CoordinateShift(_), KernelSpec::CoordinateProjection) => Ok(true),
            (ActionSpec::CoordinateShift(_), KernelSpec::Constant(v)) => Ok(*v != 0.0),
            _ => Err(FieldError::KernelActionMismatch),
        }
    }

    /// The kernel as value-weighted boxes (translation actions only).
    pub fn translation_pieces(&self) -> Result<Vec<(BoxSupport, f64)>, FieldError> {
        match &self.kernel {
            KernelSpec::IndicatorBox(b) => Ok(vec![(b.clone(), 1.0)]),
            KernelSpec::PiecewiseConstant(pieces) => Ok(pieces.clone()),
            _ => Err(FieldError::KernelActionMismatch),
        }
    }
}

fn validate_box(a: &super::TranslationAction, b: &BoxSupport) -> Result<(), FieldError> {
    if b.intervals.len() != a.ambient_dim || b.flips.len() != a.flip_count() {
        return Err(FieldError::KernelActionMismatch);
    }
    let action_rad = a.radicand();
    for (lo, hi) in &b.intervals {
        for end in [lo, hi] {
            let m = end.radicand();
            if m != 0 && action_rad != 0 && m != action_rad {
                return Err(FieldError::RadicandMismatch {
                    kernel: m,
                    action: action_rad,
                });
            }
        }
        if lo > hi {
            return Err(FieldError::NotInLAlpha("empty interval".into()));
        }
    }
    Ok(())
}

fn transport_box(
    a: &super::TranslationAction,
    b: &BoxSupport,
    shift: &[i64],
) -> BoxSupport {
    // f∘φ_{s₀}(x, σ) = f(x + A·s₀, flip(σ)): the support moves by −A·s₀ and
    // the required sheet values pick up the flip signs of s₀.
    let delta = a.translation_of(shift);
    let signs = a.flip_signs_of(shift);
    BoxSupport {
        intervals: b
            .intervals
            .iter()
            .zip(&delta)
            .map(|((lo, hi), d)| (lo.clone() - d.clone(), hi.clone() - d.clone()))
            .collect(),
        flips: b
            .flips
            .iter()
            .zip(&signs)
            .map(|(req, &sg)| req.map(|r| r * sg))
            .collect(),
    }
}

fn has_irrational_ratio(deltas: &[Quad]) -> bool {
    // any pair (rational, irrational) or two irrationals with different
    // rational parts relative to the radical (δ_i/δ_j irrational)
    for i in 0..deltas.len() {
        for j in 0..deltas.len() {
            if i == j {
                continue;
            }
            let (x, y) = (&deltas[i], &deltas[j]);
            if x.is_rational() != y.is_rational() {
                return true;
            }
            if !x.is_rational() && !y.is_rational() {
                // x/y rational ⟺ x·ȳ rational where ȳ is the conjugate...
                // cross-multiplied test: x·b_y = y·b_x and x·a_y = y·a_x
                // simpler: x/y is rational iff a_x·b_y = a_y·b_x
                let cross1 = x.rational_part().clone() * y.radical_part().clone();
                let cross2 = y.rational_part().clone() * x.radical_part().clone();
                if cross1 != cross2 {
                    return true;
                }
            }
        }
    }
    false
}

fn rational_gcd(deltas: &[Quad]) -> f64 {
    // gcd of rational numbers p_i/q_i = gcd(p_i·L/q_i)/L with L = lcm(q_i);
    // approximate via f64 is enough for the support check of fixtures
    let vals: Vec<f64> = deltas.iter().map(|q| q.to_f64().abs()).collect();
    let mut g = vals[0];
    for &v in &vals[1..] {
        let mut a = g.max(v);
        let mut b = g.min(v);
        while b > 1e-9 {
            let r = a % b;
            a = b;
            b = r;
        }
        g = a;
    }
    g
}

/// Spot check of the cocycle identity c_{u+v}(s) = c_v(s)·c_u(φ_v(s)) on
/// random triples. Returns the first violation found.
pub struct CocycleReport {
    pub ok: bool,
    pub counterexample: Option<(Vec<i64>, Vec<i64>, State)>,
}

pub fn check_cocycle<R: Rng>(field: &FieldSpec, trials: usize, rng: &mut R) -> CocycleReport {
    use rand::RngExt;
    let d = field.group_rank();
    for _ in 0..trials {
        let u: Vec<i64> = (0..d).map(|_| rng.random_range(-5i64..=5)).collect();
        let v: Vec<i64> = (0..d).map(|_| rng.random_range(-5i64..=5)).collect();
        let s = super::fixtures::sample_state(&field.action, rng);
        let uv: Vec<i64> = u.iter().zip(&v).map(|(a, b)| a + b).collect();
        let lhs = field.cocycle.evaluate(&uv, &s);
        let phi_v = match apply(&field.action, &v, &s) {
            Ok(st) => st,
            Err(_) => continue,
        };
        if phi_v.escaped() {
            continue;
        }
        let rhs = field.cocycle.evaluate(&v, &s) * field.cocycle.evaluate(&u, &phi_v);
        if lhs != rhs {
            return CocycleReport {
                ok: false,
                counterexample: Some((u, v, s)),
            };
        }
    }
    CocycleReport {
        ok: true,
        counterexample: None,
    }
}
