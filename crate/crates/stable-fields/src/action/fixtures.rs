//! Built-in field fixtures. These are the concrete models every layer of
//! the crate is exercised against; the CLI exposes them by name.

use rand::{Rng, RngExt};

use super::field::{BoxSupport, CocycleSpec, FieldSpec, KernelSpec};
use super::{
    ActionSpec, AtomicAction, CoordinateShiftAction, Marginal, State, TranslationAction,
};
use crate::stable::Alpha;
use crate::{Quad, Rational};

fn rat(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

/// ℤ²-action x ↦ x + i + j√2 on ℝ with Lebesgue measure, kernel I_{[0,1]},
/// trivial cocycle. Measure preserving, conservative, with no conservative
/// direction.
pub fn irrational_rot(alpha: Alpha) -> FieldSpec {
    let action = TranslationAction::new(
        vec![vec![Quad::integer(1)], vec![Quad::sqrt(2).unwrap()]],
        vec![],
    )
    .unwrap();
    let kernel = KernelSpec::IndicatorBox(BoxSupport {
        intervals: vec![(Quad::integer(0), Quad::integer(1))],
        flips: vec![],
    });
    FieldSpec::new(
        alpha,
        ActionSpec::Translation(action),
        kernel,
        CocycleSpec::trivial(2),
    )
    .unwrap()
}

/// ℤ³-action (x, y) ↦ (x + i + 2j, (−1)^k y) on ℝ × {−1, 1}, kernel
/// I_{[0,1] × {+1}}, trivial cocycle. Effective rank 1 with a 2-torsion
/// quotient.
pub fn z3_flip(alpha: Alpha) -> FieldSpec {
    let action = TranslationAction::new(
        vec![
            vec![Quad::integer(1)],
            vec![Quad::integer(2)],
            vec![Quad::integer(0)],
        ],
        vec![vec![0, 0, 1]],
    )
    .unwrap();
    let kernel = KernelSpec::IndicatorBox(BoxSupport {
        intervals: vec![(Quad::integer(0), Quad::integer(1))],
        flips: vec![Some(1)],
    });
    FieldSpec::new(
        alpha,
        ActionSpec::Translation(action),
        kernel,
        CocycleSpec::trivial(3),
    )
    .unwrap()
}

/// Index shift on i.i.d. standard normal coordinates; kernel = projection.
pub fn gauss_iid(alpha: Alpha, dim: usize) -> FieldSpec {
    FieldSpec::new(
        alpha,
        ActionSpec::CoordinateShift(CoordinateShiftAction::new(dim, Marginal::Gaussian).unwrap()),
        KernelSpec::CoordinateProjection,
        CocycleSpec::trivial(dim),
    )
    .unwrap()
}

/// Index shift on i.i.d. Pareto(θ) coordinates; requires θ > α.
pub fn pareto_iid(alpha: Alpha, dim: usize, theta: f64) -> FieldSpec {
    FieldSpec::new(
        alpha,
        ActionSpec::CoordinateShift(
            CoordinateShiftAction::new(dim, Marginal::Pareto { theta }).unwrap(),
        ),
        KernelSpec::CoordinateProjection,
        CocycleSpec::trivial(dim),
    )
    .unwrap()
}

/// Shift on a ℤ^d window of unit-weight atoms [−h, h]^d with the kernel
/// equal to the indicator of the origin atom: the canonical dissipative
/// (moving-average) fixture. Orbits leaving the window escape explicitly.
pub fn moving_avg(alpha: Alpha, dim: usize, half_window: i64) -> FieldSpec {
    let action = lattice_window_shift(dim, half_window, &rat(1, 1));
    let n_atoms = match &action {
        ActionSpec::Atomic(a) => a.atom_count(),
        _ => unreachable!(),
    };
    let mut table = vec![0.0; n_atoms];
    table[window_index(dim, half_window, &vec![0; dim])] = 1.0;
    FieldSpec::new(alpha, action, KernelSpec::AtomTable(table), CocycleSpec::trivial(dim)).unwrap()
}

/// One atom of weight 1 with the identity action: the series-truncation
/// calibration fixture (the field is a single SαS variable).
pub fn single_atom(alpha: Alpha) -> FieldSpec {
    let action = AtomicAction::new(vec![rat(1, 1)], vec![vec![Some(0)]]).unwrap();
    FieldSpec::new(
        alpha,
        ActionSpec::Atomic(action),
        KernelSpec::AtomTable(vec![1.0]),
        CocycleSpec::trivial(1),
    )
    .unwrap()
}

/// Disjoint union of a 5-cycle (total mass 3/5) and a shift window of 21
/// atoms (total mass 2/5) under one ℤ-action: a genuinely mixed field whose
/// conservative mass fraction is exactly 0.6.
pub fn two_component(alpha: Alpha) -> FieldSpec {
    let cycle_len = 5usize;
    let shift_half = 10i64;
    let shift_len = (2 * shift_half + 1) as usize;
    let n = cycle_len + shift_len;
    let mut weights = Vec::with_capacity(n);
    for _ in 0..cycle_len {
        weights.push(rat(3, 25));
    }
    for _ in 0..shift_len {
        weights.push(rat(2, 105));
    }
    let mut fwd = vec![None; n];
    for a in 0..cycle_len {
        fwd[a] = Some((a + 1) % cycle_len);
    }
    for k in 0..shift_len {
        let idx = cycle_len + k;
        fwd[idx] = if k + 1 < shift_len {
            Some(idx + 1)
        } else {
            None
        };
    }
    let action = AtomicAction::new(weights, vec![fwd]).unwrap();
    let mut table = vec![0.0; n];
    table[0] = 1.0; // on the cycle
    table[cycle_len + shift_half as usize] = 1.0; // center of the shift window
    FieldSpec::new(
        alpha,
        ActionSpec::Atomic(action),
        KernelSpec::AtomTable(table),
        CocycleSpec::trivial(1),
    )
    .unwrap()
}

/// Cyclic ℤ-action on atoms with the given weights (test helper).
pub fn weighted_cycle(weights_int: &[i64]) -> ActionSpec {
    let n = weights_int.len();
    let weights = weights_int.iter().map(|&w| rat(w, 1)).collect();
    let fwd = (0..n).map(|a| Some((a + 1) % n)).collect();
    ActionSpec::Atomic(AtomicAction::new(weights, vec![fwd]).unwrap())
}

/// ℤ²-action cycling a product of a 2-cycle and a 3-cycle.
pub fn cycle_product() -> ActionSpec {
    let n = 6usize; // atoms = (u, v), u mod 2, v mod 3, index = 3u + v
    let weights = vec![rat(1, 1); n];
    let f0 = (0..n)
        .map(|i| {
            let (u, v) = (i / 3, i % 3);
            Some(3 * ((u + 1) % 2) + v)
        })
        .collect();
    let f1 = (0..n)
        .map(|i| {
            let (u, v) = (i / 3, i % 3);
            Some(3 * u + (v + 1) % 3)
        })
        .collect();
    ActionSpec::Atomic(AtomicAction::new(weights, vec![f0, f1]).unwrap())
}

/// Shift action on the atom window [−h, h]^d with the given uniform weight.
pub fn lattice_window_shift(dim: usize, half_window: i64, weight: &Rational) -> ActionSpec {
    let side = (2 * half_window + 1) as usize;
    let n = side.pow(dim as u32);
    let weights = vec![weight.clone(); n];
    let mut forward = Vec::with_capacity(dim);
    for axis in 0..dim {
        let mut fwd = vec![None; n];
        for (idx, pos) in window_positions(dim, half_window).into_iter().enumerate() {
            let mut next = pos.clone();
            next[axis] += 1;
            fwd[idx] = if next[axis] <= half_window {
                Some(window_index(dim, half_window, &next))
            } else {
                None
            };
        }
        forward.push(fwd);
    }
    ActionSpec::Atomic(AtomicAction::new(weights, forward).unwrap())
}

/// Lattice positions of the window atoms, in index order.
pub fn window_positions(dim: usize, half_window: i64) -> Vec<Vec<i64>> {
    let side = 2 * half_window + 1;
    let n = (side as usize).pow(dim as u32);
    (0..n)
        .map(|mut idx| {
            let mut pos = vec![0i64; dim];
            for axis in (0..dim).rev() {
                pos[axis] = (idx % side as usize) as i64 - half_window;
                idx /= side as usize;
            }
            pos
        })
        .collect()
}

/// Index of a lattice position inside the window.
pub fn window_index(dim: usize, half_window: i64, pos: &[i64]) -> usize {
    let side = 2 * half_window + 1;
    let mut idx = 0usize;
    for axis in 0..dim {
        debug_assert!(pos[axis].abs() <= half_window);
        idx = idx * side as usize + (pos[axis] + half_window) as usize;
    }
    idx
}

/// Canonical base state of an action's space.
pub fn origin_state(action: &ActionSpec) -> State {
    match action {
        ActionSpec::Translation(a) => State::Translation {
            coords: vec![Quad::zero(); a.ambient_dim],
            flips: vec![1; a.flip_count()],
        },
        ActionSpec::Atomic(a) => State::Atom(Some(a.atom_count() / 2)),
        ActionSpec::CoordinateShift(a) => State::Shifted {
            seed: 0,
            shift: vec![0; a.group_rank],
        },
    }
}

/// Random state for property tests: exact dyadic coordinates, uniform atoms,
/// fresh seeds.
pub fn sample_state<R: Rng>(action: &ActionSpec, rng: &mut R) -> State {
    match action {
        ActionSpec::Translation(a) => {
            let coords = (0..a.ambient_dim)
                .map(|_| {
                    let num: i64 = rng.random_range(-80..=80);
                    Quad::from_ratio(num, 8)
                })
                .collect();
            let flips = (0..a.flip_count())
                .map(|_| if rng.random_range(0..2u8) == 0 { 1 } else { -1 })
                .collect();
            State::Translation { coords, flips }
        }
        ActionSpec::Atomic(a) => State::Atom(Some(rng.random_range(0..a.atom_count()))),
        ActionSpec::CoordinateShift(a) => State::Shifted {
            seed: rng.next_u64(),
            shift: vec![0; a.group_rank],
        },
    }
}

/// Names of the fixtures the CLI ships.
pub const BUILTIN_NAMES: [&str; 5] = [
    "gauss-iid",
    "pareto-iid",
    "z3-flip",
    "irrational-rot",
    "moving-avg",
];

/// Build a builtin fixture. `dim`/`theta`/`half_window` apply only where the
/// fixture has that degree of freedom.
pub fn by_name(
    name: &str,
    alpha: Alpha,
    dim: Option<usize>,
    theta: Option<f64>,
    half_window: Option<i64>,
) -> Option<FieldSpec> {
    match name {
        "gauss-iid" => Some(gauss_iid(alpha, dim.unwrap_or(1))),
        "pareto-iid" => Some(pareto_iid(alpha, dim.unwrap_or(2), theta.unwrap_or(3.0))),
        "z3-flip" => Some(z3_flip(alpha)),
        "irrational-rot" => Some(irrational_rot(alpha)),
        "moving-avg" => Some(moving_avg(alpha, dim.unwrap_or(1), half_window.unwrap_or(64))),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_index_round_trip() {
        for dim in 1..=3usize {
            let h = 2i64;
            for (idx, pos) in window_positions(dim, h).into_iter().enumerate() {
                assert_eq!(window_index(dim, h, &pos), idx);
            }
        }
    }

    #[test]
    fn moving_avg_walks_like_a_shift() {
        let field = moving_avg(Alpha::new(1.5).unwrap(), 2, 3);
        let ActionSpec::Atomic(a) = &field.action else {
            unreachable!()
        };
        let start = window_index(2, 3, &[1, -2]);
        let img = a.walk(&[2, 1], start).unwrap();
        assert_eq!(img, window_index(2, 3, &[3, -1]));
        assert!(a.walk(&[3, 0], start).is_none(), "escapes the window");
    }

    #[test]
    fn two_component_mass_split() {
        let field = two_component(Alpha::new(1.2).unwrap());
        let ActionSpec::Atomic(a) = &field.action else {
            unreachable!()
        };
        assert_eq!(a.total_weight(), Rational::from_integer(1.into()));
        let cycle_mass: Rational = a.weights[..5].iter().sum();
        assert_eq!(cycle_mass, rat(3, 5));
    }

    #[test]
    fn builtin_registry() {
        let alpha = Alpha::new(1.2).unwrap();
        for name in BUILTIN_NAMES {
            assert!(by_name(name, alpha, None, None, None).is_some(), "{name}");
        }
        assert!(by_name("no-such", alpha, None, None, None).is_none());
    }
}
