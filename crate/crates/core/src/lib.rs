//! Approximation algorithms for capacitated location routing.
//!
//! Two pipelines are provided: [`solvers::tree_alg`], which splits a
//! constrained spanning forest, and [`solvers::path_alg`], which splits a
//! path packing obtained from a Christofides cycle on the depot-contracted
//! graph. Both open depots with a greedy facility-location step first.
//!
//! Every algorithm is generic over [`Scalar`]; the aliases below fix the
//! common choices.

pub mod bench;
pub mod generate;
pub mod instance;
pub mod matching;
pub mod oracle;
pub mod scalar;
pub mod solvers;
pub mod spanning;
pub mod splitting;
pub mod ufl;

pub use num_rational::Rational64;

pub use instance::{
    build_cost_matrix, derive_ufl, parse_instance, parse_instance_str, write_canonical, ClrInstance, CostMatrix,
    CostSource, Customer, Depot, InstanceError, InstanceFormat, Point, UflInstance,
};
pub use scalar::Scalar;
pub use solvers::{
    path_alg, solve, tree_alg, validate_solution, Algorithm, ClrSolution, SolveError, SolveParams, ValidationReport,
};
pub use splitting::{CloseMode, Tour};

pub type Instance = ClrInstance<f64>;
pub type Solution = ClrSolution<f64>;
pub type Instance32 = ClrInstance<f32>;
pub type ExactInstance = ClrInstance<Rational64>;
pub type ExactSolution = ClrSolution<Rational64>;
