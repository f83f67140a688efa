//! Constraint-based causal discovery: PC skeleton search and orientation.

pub mod graph;
pub mod oracle;
pub mod orient;
pub mod pc;

pub use graph::{markov_equivalent, Conflict, Cpdag, Dag, Edge, EdgeMark, Sepsets};
pub use oracle::{partial_correlation, partial_correlation_test, BoundOracle, CiOracle, OracleKind};
pub use orient::{apply_meek_rules, orient_cpdag};
pub use pc::{pc, pc_skeleton, DsepOracle, IndependenceTest, PcOptions, Skeleton};
