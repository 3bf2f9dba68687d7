//! Integer-lattice algebra: the kernel of the action homomorphism, the free
//! rank and torsion of the quotient, polytope projection and exact volume,
//! and lattice-point counting.

pub mod matrix;
pub mod snf;

pub use matrix::IntMatrix;
pub use snf::{smith_normal_form, Snf};
pub mod polytope;

pub use polytope::{HRepPolytope, PolytopeError};
pub mod structure;

pub use structure::{count_lattice, effective_structure, kernel_lattice, EffectiveStructure};
