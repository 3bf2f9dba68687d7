//! Tilting of σ-finite control measures to equivalent probability measures:
//! the μ-a.e. statements of the classifier are spot-checked on ν-random
//! states, and the series simulator integrates against ν.

use num_traits::ToPrimitive;
use rand::Rng;

use crate::action::{ActionSpec, State};
use crate::{Quad, Rational, Real};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum TiltError {
    #[error("unsupported control measure: {0}")]
    Unsupported(String),
}

/// A probability measure ν equivalent to the control measure μ, with a
/// samplable law and an evaluable density dν/dμ (strictly positive on the
/// state space).
#[derive(Debug, Clone)]
pub enum TiltedMeasure {
    /// Product of standard Cauchy densities on the ambient coordinates,
    /// uniform over the flip sheets.
    CauchyProduct { ambient_dim: usize, sheets: usize },
    /// Half-uniform on a window, half Cauchy (ambient dimension 1); keeps
    /// the density bounded below on the region a simulation box sweeps
    /// while staying equivalent to Lebesgue on all of ℝ.
    BoxedCauchy { lo: Real, hi: Real, sheets: usize },
    /// Probabilities per atom; density is prob/weight.
    AtomProbs {
        probs: Vec<Real>,
        cumulative: Vec<Real>,
        density: Vec<Real>,
    },
    /// Identity tilt of a product probability measure.
    ProductSeed { dim: usize },
}

fn cauchy_density(x: Real) -> Real {
    1.0 / (std::f64::consts::PI * (1.0 + x * x))
}

fn sample_cauchy<R: Rng + ?Sized>(rng: &mut R) -> Real {
    let u = super::unit_open(rng);
    (std::f64::consts::PI * (u - 0.5)).tan()
}

fn dyadic(x: Real) -> Quad {
    Quad::rational(Rational::from_float(x).expect("finite float"))
}

impl TiltedMeasure {
    /// dν/dμ at a state.
    pub fn density(&self, state: &State) -> Real {
        match (self, state) {
            (TiltedMeasure::CauchyProduct { sheets, .. }, State::Translation { coords, .. }) => {
                let prod: Real = coords.iter().map(|q| cauchy_density(q.to_f64())).product();
                prod / (1u64 << sheets) as Real
            }
            (TiltedMeasure::BoxedCauchy { lo, hi, sheets }, State::Translation { coords, .. }) => {
                let x = coords[0].to_f64();
                let unif = if x >= *lo && x <= *hi {
                    1.0 / (hi - lo)
                } else {
                    0.0
                };
                (0.5 * unif + 0.5 * cauchy_density(x)) / (1u64 << sheets) as Real
            }
            (TiltedMeasure::AtomProbs { density, .. }, State::Atom(Some(i))) => density[*i],
            (TiltedMeasure::ProductSeed { .. }, State::Shifted { .. }) => 1.0,
            _ => panic!("state does not belong to this tilted measure"),
        }
    }

    /// One ν-distributed state.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> State {
        match self {
            TiltedMeasure::CauchyProduct {
                ambient_dim,
                sheets,
            } => {
                let coords = (0..*ambient_dim).map(|_| dyadic(sample_cauchy(rng))).collect();
                let flips = (0..*sheets)
                    .map(|_| if rng.next_u64() & 1 == 0 { 1 } else { -1 })
                    .collect();
                State::Translation { coords, flips }
            }
            TiltedMeasure::BoxedCauchy { lo, hi, sheets } => {
                let x = if rng.next_u64() & 1 == 0 {
                    lo + (hi - lo) * super::unit_open(rng)
                } else {
                    sample_cauchy(rng)
                };
                let flips = (0..*sheets)
                    .map(|_| if rng.next_u64() & 1 == 0 { 1 } else { -1 })
                    .collect();
                State::Translation {
                    coords: vec![dyadic(x)],
                    flips,
                }
            }
            TiltedMeasure::AtomProbs { cumulative, .. } => {
                let u = super::unit_open(rng);
                let idx = cumulative.partition_point(|&c| c < u);
                State::Atom(Some(idx.min(cumulative.len() - 1)))
            }
            TiltedMeasure::ProductSeed { dim } => State::Shifted {
                seed: rng.next_u64(),
                shift: vec![0; *dim],
            },
        }
    }

    fn from_atom_probs(probs: Vec<Real>, weights: &[Rational]) -> Self {
        let mut cumulative = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for &p in &probs {
            acc += p;
            cumulative.push(acc);
        }
        let density = probs
            .iter()
            .zip(weights)
            .map(|(p, w)| p / w.to_f64().unwrap())
            .collect();
        TiltedMeasure::AtomProbs {
            probs,
            cumulative,
            density,
        }
    }
}

/// The canonical tilt of an action's control measure: Cauchy for
/// Lebesgue-type spaces (heavy tails keep tilted kernels α-integrable),
/// weight-proportional for atom windows, identity for probability measures.
pub fn tilt_measure(action: &ActionSpec) -> Result<TiltedMeasure, TiltError> {
    match action {
        ActionSpec::Translation(a) => Ok(TiltedMeasure::CauchyProduct {
            ambient_dim: a.ambient_dim,
            sheets: a.flip_count(),
        }),
        ActionSpec::Atomic(a) => {
            let total = a.total_weight().to_f64().unwrap();
            let probs = a
                .weights
                .iter()
                .map(|w| w.to_f64().unwrap() / total)
                .collect();
            Ok(TiltedMeasure::from_atom_probs(probs, &a.weights))
        }
        ActionSpec::CoordinateShift(a) => Ok(TiltedMeasure::ProductSeed { dim: a.group_rank }),
    }
}

/// A tilt adapted to a simulation box: mass is concentrated where the box
/// sweeps the kernel support (importance sampling for the series), while
/// equivalence to μ is kept. `swept` is the interval swept on the ambient
/// line for translation actions, or the swept atom set for atom windows.
pub fn tilt_for_box(
    action: &ActionSpec,
    swept_interval: Option<(Real, Real)>,
    swept_atoms: Option<&[usize]>,
) -> Result<TiltedMeasure, TiltError> {
    match action {
        ActionSpec::Translation(a) => {
            if a.ambient_dim != 1 {
                return tilt_measure(action);
            }
            match swept_interval {
                Some((lo, hi)) if hi > lo => Ok(TiltedMeasure::BoxedCauchy {
                    lo: lo - 0.5,
                    hi: hi + 0.5,
                    sheets: a.flip_count(),
                }),
                _ => tilt_measure(action),
            }
        }
        ActionSpec::Atomic(a) => {
            let n = a.atom_count();
            let total = a.total_weight().to_f64().unwrap();
            let base: Vec<Real> = a
                .weights
                .iter()
                .map(|w| w.to_f64().unwrap() / total)
                .collect();
            let probs = match swept_atoms {
                Some(swept) if !swept.is_empty() && swept.len() < n => {
                    let swept_mass: Real = swept.iter().map(|&i| base[i]).sum();
                    let mut probs = base.iter().map(|p| 0.5 * p).collect::<Vec<_>>();
                    for &i in swept {
                        probs[i] += 0.5 * base[i] / swept_mass;
                    }
                    probs
                }
                _ => base,
            };
            Ok(TiltedMeasure::from_atom_probs(probs, &a.weights))
        }
        ActionSpec::CoordinateShift(a) => Ok(TiltedMeasure::ProductSeed { dim: a.group_rank }),
    }
}
