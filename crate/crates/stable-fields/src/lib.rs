//! Stationary symmetric α-stable random fields indexed by ℤ^d: integral
//! representations transported by nonsingular group actions, Hopf
//! classification of the generating action, the integer-lattice algebra
//! behind the effective dimension, and exact / Monte Carlo partial-maxima
//! scaling with Fréchet goodness-of-fit.

pub mod scalar;
pub mod special;

pub mod quad;
pub mod rng;

/// Floating-point scalar used by the simulation and statistics lanes.
pub type Real = f64;
/// Arbitrary-precision integer of the lattice algebra.
pub type Int = num_bigint::BigInt;
/// Arbitrary-precision rational.
pub type Rational = num_rational::BigRational;
/// Exact quadratic number a + b√m over [`Rational`].
pub type Quad = quad::QuadNum<Rational>;

pub mod lattice;

pub mod action;
pub mod stable;

pub mod maxima;

pub mod classify;
