//! Brute-force validators: the normal cone to the subdifferential graph and
//! a full-stability probe on quadratic instances.

mod normal_cone;
mod probe;

pub use normal_cone::{
    graph_pieces, limiting_normal_cone, limiting_normal_cone_from, probe_directions, same_union,
    second_subdiff, stratum_probes, union_contains_origin, GraphPiece, NormalConeUnion,
};
pub use probe::{full_stability_probe, ProbeEvidence, ProbeReport, Quadratic, QuadraticProblemInstance};
