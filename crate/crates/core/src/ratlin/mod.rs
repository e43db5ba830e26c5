//! Exact rational linear algebra, linear programming and polyhedral
//! conversions shared by every other module.

pub mod cone;
pub mod generators;
pub mod halfspace;
pub mod lp;
pub mod matrix;
pub mod rational;

pub use cone::{cone_generators, cone_halfspaces, ConeGenerators};
pub use generators::{
    generator_membership, polyhedron_subset, union_eq, union_subset, GeneratorSet, Multipliers,
};
pub use halfspace::HalfspaceSystem;
pub use matrix::{
    in_span, kernel_basis, orthogonal_basis, orthogonal_complement, rank_of, same_span,
    span_basis, span_intersection, RatMatrix, RatVector,
};
pub use rational::{format_rational, int, parse_rational, rat, Rational};
