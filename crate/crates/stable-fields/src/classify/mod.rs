//! Conservative/dissipative classification of the generating action through
//! the divergence of the orbit sums Σ_t |f_t(s)|^α, Halmos-style recurrence
//! counting on atom windows, and the split of mixed fields.

use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;

use crate::action::field::{FieldError, FieldSpec, KernelSpec};
use crate::action::{ActionSpec, AtomicAction, State};
use crate::stable::tilt::tilt_measure;
use crate::Real;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ClassifyError {
    #[error("radii schedule must be strictly increasing with at least 3 entries")]
    BadRadii,
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("decomposition needs a Mixed verdict with per-state evidence, got {0}")]
    NotMixed(String),
    #[error("evidence is inconclusive on a {0:.1}% state fraction; refusing to split")]
    TooInconclusive(Real),
    #[error("mixed decomposition is only computable for atom windows")]
    UnsupportedSplit,
}

/// Divergence thresholds: orbit sums of the shipped fixtures have log-log
/// slopes cleanly at 0 or ≥ 1, so the band (0.05, 0.3) maps to Undecided
/// instead of a false call.
pub const DIVERGENT_SLOPE: Real = 0.3;
pub const FINITE_SLOPE: Real = 0.05;
pub const DEFAULT_RADII: [usize; 6] = [4, 8, 16, 32, 64, 128];
pub const DEFAULT_STATES: usize = 64;
/// Tolerated mass fraction of undecided states before the verdict degrades
/// to Inconclusive.
pub const UNDECIDED_ALLOWANCE: Real = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StateClass {
    Divergent,
    Finite,
    Undecided,
}

#[derive(Debug, Clone, Serialize)]
pub struct StateProfile {
    pub state_id: usize,
    pub sums: Vec<Real>,
    pub slope: Real,
    pub class: StateClass,
    /// μ-weight of the state when μ is finite (atom windows); 1 otherwise
    pub mu_weight: Real,
    pub window_limited: bool,
}

/// Per-state partial sums over growing boxes plus fitted slopes.
#[derive(Debug, Clone, Serialize)]
pub struct DivergenceProfile {
    pub radii: Vec<usize>,
    pub per_state: Vec<StateProfile>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VerdictLabel {
    Conservative,
    Dissipative,
    Mixed,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub label: VerdictLabel,
    pub conservative_mass_fraction: Real,
    /// Monte Carlo standard error of the fraction (None when states were
    /// enumerated exactly)
    pub mass_fraction_stderr: Option<Real>,
    pub evidence: DivergenceProfile,
}

impl Verdict {
    /// The documented JSON shape: {label, mass_fraction, per_state: [...]}.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "label": format!("{:?}", self.label),
            "mass_fraction": self.conservative_mass_fraction,
            "per_state": self.evidence.per_state.iter().map(|p| {
                serde_json::json!({
                    "state_id": p.state_id,
                    "sums": p.sums,
                    "slope": p.slope,
                })
            }).collect::<Vec<_>>(),
        })
    }
}

/// Σ_{‖t‖_∞ ≤ R} |f_t(s)|^α, exact finite sum over the box, plus the
/// window-limited flag for atom windows whose orbit escapes.
pub fn local_sum(field: &FieldSpec, state: &State, radius: usize) -> Result<(Real, bool), ClassifyError> {
    let sums = local_sums(field, state, &[radius])?;
    Ok((sums.0[0], sums.1))
}

/// Orbit sums at a whole radii schedule in one pass.
pub fn local_sums(
    field: &FieldSpec,
    state: &State,
    radii: &[usize],
) -> Result<(Vec<Real>, bool), ClassifyError> {
    let alpha = field.alpha.value();
    let r_max = *radii.iter().max().unwrap() as i64;
    // accumulate per ‖t‖_∞ shell, then prefix-sum at the requested radii
    let mut shell = vec![0.0f64; r_max as usize + 1];
    let mut window_limited = false;
    match (&field.action, state) {
        (ActionSpec::Translation(a), State::Translation { coords, flips }) => {
            let x0 = coords[0].to_f64();
            let mut sheet_mask = 0u32;
            for (bit, &f) in flips.iter().enumerate() {
                if f < 0 {
                    sheet_mask |= 1 << bit;
                }
            }
            let pieces = field.translation_pieces()?;
            let piece_data: Vec<(f64, f64, Vec<Option<i8>>, f64)> = pieces
                .iter()
                .map(|(b, v)| {
                    (
                        b.intervals[0].0.to_f64(),
                        b.intervals[0].1.to_f64(),
                        b.flips.clone(),
                        v.abs().powf(alpha),
                    )
                })
                .collect();
            let deltas: Vec<f64> = a.columns.iter().map(|c| c[0].to_f64()).collect();
            let d = a.group_rank;
            let mut t = vec![0i64; d];
            // plain nested loop with incremental offsets; the box is small
            // enough for every shipped schedule
            fn rec(
                axis: usize,
                d: usize,
                r_max: i64,
                t: &mut Vec<i64>,
                offset: f64,
                x0: f64,
                sheet_mask: u32,
                a: &crate::action::TranslationAction,
                deltas: &[f64],
                pieces: &[(f64, f64, Vec<Option<i8>>, f64)],
                shell: &mut [f64],
            ) {
                if axis == d {
                    let norm = t.iter().map(|v| v.unsigned_abs()).max().unwrap_or(0) as usize;
                    let x = x0 + offset;
                    let signs = a.flip_signs_of(t);
                    let mut moved = sheet_mask;
                    for (bit, &sg) in signs.iter().enumerate() {
                        if sg < 0 {
                            moved ^= 1 << bit;
                        }
                    }
                    for (lo, hi, req, pw) in pieces {
                        if x >= *lo
                            && x <= *hi
                            && req.iter().enumerate().all(|(i, r)| {
                                r.map_or(true, |want| {
                                    let have: i8 =
                                        if moved >> i & 1 == 0 { 1 } else { -1 };
                                    want == have
                                })
                            })
                        {
                            shell[norm] += pw;
                        }
                    }
                    return;
                }
                for v in -r_max..=r_max {
                    t[axis] = v;
                    rec(
                        axis + 1,
                        d,
                        r_max,
                        t,
                        offset + v as f64 * deltas[axis],
                        x0,
                        sheet_mask,
                        a,
                        deltas,
                        pieces,
                        shell,
                    );
                }
            }
            rec(
                0,
                d,
                r_max,
                &mut t,
                0.0,
                x0,
                sheet_mask,
                a,
                &deltas,
                &piece_data,
                &mut shell,
            );
        }
        (ActionSpec::Atomic(a), State::Atom(start)) => {
            let KernelSpec::AtomTable(values) = &field.kernel else {
                return Err(ClassifyError::Field(FieldError::KernelActionMismatch));
            };
            let pw: Vec<f64> = values.iter().map(|v| v.abs().powf(alpha)).collect();
            if let Some(s0) = start {
                visit_box_orbit(a, *s0, r_max, &mut |t_norm, atom| match atom {
                    Some(idx) => shell[t_norm] += pw[idx],
                    None => window_limited = true,
                });
            } else {
                window_limited = true;
            }
        }
        (ActionSpec::CoordinateShift(a), State::Shifted { seed, shift }) => {
            let d = a.group_rank;
            let mut idx = vec![0i64; d];
            let mut t = vec![0i64; d];
            fn rec(
                axis: usize,
                r_max: i64,
                t: &mut Vec<i64>,
                idx: &mut Vec<i64>,
                shift: &[i64],
                a: &crate::action::CoordinateShiftAction,
                kernel: &KernelSpec,
                seed: u64,
                alpha: f64,
                shell: &mut [f64],
            ) {
                if axis == t.len() {
                    let norm = t.iter().map(|v| v.unsigned_abs()).max().unwrap_or(0) as usize;
                    let g = match kernel {
                        KernelSpec::CoordinateProjection => a.coordinate(seed, idx),
                        KernelSpec::Constant(c) => *c,
                        _ => 0.0,
                    };
                    shell[norm] += g.abs().powf(alpha);
                    return;
                }
                for v in -r_max..=r_max {
                    t[axis] = v;
                    idx[axis] = shift[axis] + v;
                    rec(axis + 1, r_max, t, idx, shift, a, kernel, seed, alpha, shell);
                }
            }
            rec(
                0, r_max, &mut t, &mut idx, shift, a, &field.kernel, *seed, alpha, &mut shell,
            );
        }
        _ => return Err(ClassifyError::Field(FieldError::KernelActionMismatch)),
    }
    let mut acc = 0.0;
    let mut cum = vec![0.0f64; r_max as usize + 1];
    for (r, s) in shell.iter().enumerate() {
        acc += s;
        cum[r] = acc;
    }
    Ok((radii.iter().map(|&r| cum[r]).collect(), window_limited))
}

/// Visit every t in [−R, R]^d from `start`, walking incrementally axis by
/// axis (same escape semantics as `AtomicAction::walk`).
fn visit_box_orbit(
    a: &AtomicAction,
    start: usize,
    r_max: i64,
    visit: &mut impl FnMut(usize, Option<usize>),
) {
    fn rec(
        a: &AtomicAction,
        axis: usize,
        anchor: Option<usize>,
        norm_so_far: usize,
        r_max: i64,
        visit: &mut impl FnMut(usize, Option<usize>),
    ) {
        if axis == a.group_rank {
            visit(norm_so_far, anchor);
            return;
        }
        // t_axis = 0, then forward, then backward, each walked stepwise
        rec(a, axis + 1, anchor, norm_so_far, r_max, visit);
        let mut cur = anchor;
        for step in 1..=r_max {
            cur = cur.and_then(|i| a.forward[axis][i]);
            let norm = norm_so_far.max(step as usize);
            rec(a, axis + 1, cur, norm, r_max, visit);
        }
        let mut cur = anchor;
        for step in 1..=r_max {
            cur = cur.and_then(|i| a.backward[axis][i]);
            let norm = norm_so_far.max(step as usize);
            rec(a, axis + 1, cur, norm, r_max, visit);
        }
    }
    rec(a, 0, Some(start), 0, r_max, visit);
}

fn fit_state(radii: &[usize], sums: &[Real]) -> (Real, StateClass) {
    let last = *sums.last().unwrap();
    if last == 0.0 {
        // the orbit never meets the kernel support inside the window:
        // stabilized at zero
        return (0.0, StateClass::Finite);
    }
    let pts: Vec<(Real, Real)> = radii
        .iter()
        .zip(sums)
        .filter(|(_, &s)| s > 0.0)
        .map(|(&r, &s)| ((r as Real).ln(), s.ln()))
        .collect();
    let slope = if pts.len() >= 2 {
        let n = pts.len() as Real;
        let sx: Real = pts.iter().map(|p| p.0).sum();
        let sy: Real = pts.iter().map(|p| p.1).sum();
        let sxx: Real = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: Real = pts.iter().map(|p| p.0 * p.1).sum();
        (n * sxy - sx * sy) / (n * sxx - sx * sx)
    } else {
        0.0
    };
    let k = sums.len();
    let stabilized = k >= 2 && (sums[k - 1] - sums[k - 2]).abs() <= 1e-12 * (1.0 + sums[k - 1]);
    let class = if slope > DIVERGENT_SLOPE {
        StateClass::Divergent
    } else if slope < FINITE_SLOPE && stabilized {
        StateClass::Finite
    } else {
        StateClass::Undecided
    };
    (slope, class)
}

/// Classify with explicit states. Weights are exact atom masses when the
/// action is an atom window (finite μ) and 1 otherwise (plain ν-fraction).
pub fn classify_states(
    field: &FieldSpec,
    states: &[State],
    radii: &[usize],
    exact_weights: bool,
) -> Result<Verdict, ClassifyError> {
    if radii.len() < 3 || radii.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ClassifyError::BadRadii);
    }
    let profiles: Vec<StateProfile> = states
        .par_iter()
        .enumerate()
        .map(|(id, s)| {
            let (sums, window_limited) = local_sums(field, s, radii)?;
            let (slope, class) = fit_state(radii, &sums);
            let mu_weight = if exact_weights {
                match (&field.action, s) {
                    (ActionSpec::Atomic(a), State::Atom(Some(i))) => {
                        a.weights[*i].to_f64().unwrap()
                    }
                    _ => 1.0,
                }
            } else {
                1.0
            };
            Ok(StateProfile {
                state_id: id,
                sums,
                slope,
                class,
                mu_weight,
                window_limited,
            })
        })
        .collect::<Result<_, ClassifyError>>()?;

    let total_w: Real = profiles.iter().map(|p| p.mu_weight).sum();
    let div_w: Real = profiles
        .iter()
        .filter(|p| p.class == StateClass::Divergent)
        .map(|p| p.mu_weight)
        .sum();
    let undec_w: Real = profiles
        .iter()
        .filter(|p| p.class == StateClass::Undecided)
        .map(|p| p.mu_weight)
        .sum();
    // states whose first kernel hit lands on the final radius cannot be
    // judged; up to this mass fraction of them is tolerated (heavy-tailed
    // state sampling routinely produces a few)
    let decided_w = total_w - undec_w;
    if undec_w > UNDECIDED_ALLOWANCE * total_w || decided_w <= 0.0 {
        let evidence = DivergenceProfile {
            radii: radii.to_vec(),
            per_state: profiles,
        };
        let fraction = if decided_w > 0.0 {
            (div_w / decided_w) + 0.0
        } else {
            0.0
        };
        return Ok(Verdict {
            label: VerdictLabel::Inconclusive,
            conservative_mass_fraction: fraction,
            mass_fraction_stderr: None,
            evidence,
        });
    }
    let fraction = div_w / decided_w + 0.0; // normalize −0.0
    let label = if fraction == 0.0 {
        VerdictLabel::Dissipative
    } else if fraction == 1.0 {
        VerdictLabel::Conservative
    } else {
        VerdictLabel::Mixed
    };
    let stderr = if exact_weights {
        None
    } else {
        let n = profiles.len() as Real;
        Some((fraction * (1.0 - fraction) / n).sqrt())
    };
    Ok(Verdict {
        label,
        conservative_mass_fraction: fraction,
        mass_fraction_stderr: stderr,
        evidence: DivergenceProfile {
            radii: radii.to_vec(),
            per_state: profiles,
        },
    })
}

/// Classify with states drawn from the tilted measure; atom windows small
/// enough are enumerated exactly instead of sampled.
pub fn classify(
    field: &FieldSpec,
    radii: &[usize],
    state_count: usize,
    seed: u64,
) -> Result<Verdict, ClassifyError> {
    match &field.action {
        ActionSpec::Atomic(a) if a.atom_count() <= 4 * state_count => {
            let states: Vec<State> = (0..a.atom_count()).map(|i| State::Atom(Some(i))).collect();
            classify_states(field, &states, radii, true)
        }
        action => {
            let tilt = tilt_measure(action).map_err(|e| {
                ClassifyError::Field(FieldError::NotInLAlpha(e.to_string()))
            })?;
            let mut rng = crate::rng::stream_rng(seed, 0);
            let states: Vec<State> = (0..state_count).map(|_| tilt.sample(&mut rng)).collect();
            classify_states(field, &states, radii, false)
        }
    }
}

/// Counts Σ_{‖t‖ ≤ R} 1_A(φ_t s) for each s in the atom subset A.
#[derive(Debug, Clone, Serialize)]
pub struct RecurrenceReport {
    pub horizon: usize,
    pub counts: Vec<(usize, u64)>,
    pub window_limited: bool,
}

pub fn recurrence_count(
    action: &AtomicAction,
    subset: &[usize],
    horizon: usize,
) -> RecurrenceReport {
    let in_subset: std::collections::HashSet<usize> = subset.iter().copied().collect();
    let mut window_limited = false;
    let counts = subset
        .iter()
        .map(|&s| {
            let mut count = 0u64;
            visit_box_orbit(action, s, horizon as i64, &mut |_, atom| match atom {
                Some(idx) => {
                    if in_subset.contains(&idx) {
                        count += 1;
                    }
                }
                None => window_limited = true,
            });
            (s, count)
        })
        .collect();
    RecurrenceReport {
        horizon,
        counts,
        window_limited,
    }
}

/// Split a field along the verdict into (conservative part, dissipative
/// part). Pure verdicts give one-sided splits; Mixed splits are computed
/// for atom windows by restricting the kernel to the per-atom classes.
pub fn decompose_field(
    field: &FieldSpec,
    verdict: &Verdict,
) -> Result<(FieldSpec, FieldSpec), ClassifyError> {
    let zero = zero_field(field)?;
    match verdict.label {
        VerdictLabel::Dissipative => Ok((zero, field.clone())),
        VerdictLabel::Conservative => Ok((field.clone(), zero)),
        VerdictLabel::Inconclusive => Err(ClassifyError::NotMixed("Inconclusive".into())),
        VerdictLabel::Mixed => {
            let undecided_w: Real = verdict
                .evidence
                .per_state
                .iter()
                .filter(|p| p.class == StateClass::Undecided)
                .map(|p| p.mu_weight)
                .sum();
            let total_w: Real = verdict.evidence.per_state.iter().map(|p| p.mu_weight).sum();
            if undecided_w / total_w > 0.01 {
                return Err(ClassifyError::TooInconclusive(100.0 * undecided_w / total_w));
            }
            let (ActionSpec::Atomic(a), KernelSpec::AtomTable(values)) =
                (&field.action, &field.kernel)
            else {
                return Err(ClassifyError::UnsupportedSplit);
            };
            // per-atom classes: the exact-enumeration path indexes states by
            // atom id
            if verdict.evidence.per_state.len() != a.atom_count() {
                return Err(ClassifyError::UnsupportedSplit);
            }
            let mut cons = vec![0.0; values.len()];
            let mut diss = vec![0.0; values.len()];
            for p in &verdict.evidence.per_state {
                match p.class {
                    StateClass::Divergent => cons[p.state_id] = values[p.state_id],
                    StateClass::Finite => diss[p.state_id] = values[p.state_id],
                    StateClass::Undecided => {}
                }
            }
            let mk = |table: Vec<Real>| {
                FieldSpec::new(
                    field.alpha,
                    field.action.clone(),
                    KernelSpec::AtomTable(table),
                    field.cocycle.clone(),
                )
                .map_err(ClassifyError::Field)
            };
            Ok((mk(cons)?, mk(diss)?))
        }
    }
}

fn zero_field(field: &FieldSpec) -> Result<FieldSpec, ClassifyError> {
    let kernel = match &field.action {
        ActionSpec::Translation(_) => KernelSpec::PiecewiseConstant(Vec::new()),
        ActionSpec::Atomic(a) => KernelSpec::AtomTable(vec![0.0; a.atom_count()]),
        ActionSpec::CoordinateShift(_) => KernelSpec::Constant(0.0),
    };
    FieldSpec::new(
        field.alpha,
        field.action.clone(),
        kernel,
        field.cocycle.clone(),
    )
    .map_err(ClassifyError::Field)
}
