//! Deciding which packages may move from an unstable repository into a
//! testing repository without breaking installability, by encoding the
//! question as SAT and partial MaxSAT.
//!
//! The pipeline: parse `Packages` files ([`control`]), expand them into a
//! [`Universe`], index dependency closures ([`ClosureIndex`]), build one of
//! the clause systems in [`encoder`], solve it ([`sat`]), and decode and
//! verify the resulting repository ([`engine`]).

pub mod closure;
pub mod control;
pub mod encoder;
pub mod engine;
pub mod generate;
pub mod pkgset;
pub mod policy;
pub mod repo;
pub mod sat;
pub mod version;

pub use closure::ClosureIndex;
pub use control::{parse_dependency_expr, parse_packages_stream, PackageStanza, ParseError};
pub use encoder::{EncodedProblem, EncodingKind};
pub use engine::{EngineError, MigrationRequest, MigrationResult, Mode, SolverChoice};
pub use pkgset::PkgSet;
pub use policy::{PolicyRules, ResolvedPolicy};
pub use repo::{build_universe, Package, PkgId, Universe};
pub use sat::{Budget, Instance, Lit, SolveResult};
pub use version::{compare_versions, Version};
