//! Adversarial point/hyperplane instances for simplex range reporting.
//!
//! * [`geometry`] builds the grid and its family of `t`-rich graph
//!   hyperplanes with exact integer arithmetic.
//! * [`incidence`] checks the family's incidence graph by brute force
//!   (exact richness, pair coverage, `K_{a,b}` search) and evaluates the
//!   space/query trade-off the instance certifies.
//! * [`range`] is an instrumented kd-tree for simplex range reporting with a
//!   linear-scan oracle.
//! * [`harness`] ties these into verification reports, benchmarks and
//!   exponent fits.

pub mod error;
pub mod geometry;
pub mod harness;
pub mod incidence;
pub mod range;

pub use error::{Error, Result};
pub use geometry::{
    eval_hyperplane, generate_hyperplanes, generate_points, incident, incident_points, normalize_params, GridPoint,
    Hyperplane, Instance, InstanceParams,
};
pub use incidence::{
    bound_report, build_incidence_graph, find_kab, pair_coverage, richness_histogram, verify_no_k2beta, BoundReport,
    IncidenceGraph, PairCoverage,
};
pub use range::{
    brute_force_query, classify_box, slab_query_for, BoxClass, Halfspace, KdTree, QueryStats, Sense, SimplexQuery,
};
