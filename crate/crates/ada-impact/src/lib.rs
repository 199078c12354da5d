//! Safe change-impact analysis and regression test selection for Ada.
//!
//! The pipeline has three steps:
//!
//! 1. Diff two versions of a source tree into a change-set classified at the
//!    spec, body and subprogram levels ([`diff`]).
//! 2. Combine statically extracted dependencies (`Contains`, `Uses`) with
//!    per-test coverage (`Covers`) into an entity-level impact relation
//!    ([`graph`]).
//! 3. Walk the impact closure from each change and select every baseline
//!    test whose coverage intersects the affected subprograms ([`select`]).
//!
//! The selection is safe rather than minimal: a test is dropped only when
//! the analysis can show its coverage is disjoint from everything the change
//! can reach. An independent brute-force [`oracle`] audits any run.

pub mod cli;
pub mod diff;
pub mod error;
pub mod frontend;
pub mod graph;
pub mod oracle;
pub mod replay;
pub mod select;
pub mod snapshot;

pub use diff::{Change, ChangeKind, ChangeSet};
pub use error::{Error, Result};
pub use frontend::{parse_tree, PackageModel, SourceUnit, SubprogramDecl};
pub use graph::{
    build_static, impact_relation, load_coverage, CoverageMap, Entity, ImpactRelation,
    StaticRelations,
};
pub use oracle::{brute_closure, check_safety, DenseClosure, Verdict};
pub use select::{affected_subprograms, affected_tests, SelectionResult};
pub use snapshot::Snapshot;
