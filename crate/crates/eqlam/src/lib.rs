//! Equality saturation for a de Bruijn-indexed λ-calculus.
//!
//! The crate proves goals of the form `lhs = rhs` by encoding both sides
//! into an e-graph, saturating with user rewrites plus dynamic β/η rules,
//! and — crucially — extracting a linear explanation that an independent
//! plain-term replay checker re-derives step by step. The e-graph side is
//! allowed to over-approximate (guards and analyses are conservative, and
//! substitution on classes can lose justifications); the replay checker is
//! the soundness backstop.
//!
//! Layout:
//! - [`term`]: plain terms, shifting, β/η/ζ, erasure, free variables
//! - [`pattern`]: metavariable patterns and plain-term rewriting
//! - [`parse`]: S-expression grammar for terms and patterns
//! - [`oracle`]: brute-force BFS rewriting search (ground truth)
//! - [`egraph`]: hashcons, union-find, congruence, may-free analysis
//! - [`ematch`]: pattern matching over classes, validity guards
//! - [`subst`]: substitution on e-classes with cycle breaking
//! - [`saturate`]: rule compilation and the saturation loop
//! - [`explain`]: explanation extraction and the replay checker
//! - [`problem`] / [`pipeline`] / [`batch`]: problem files, the prove
//!   pipeline, and (optionally rayon-parallel) batch execution
//! - [`gen`]: deterministic random generators for tests and benches

pub mod batch;
pub mod egraph;
pub mod ematch;
pub mod explain;
pub mod gen;
pub mod oracle;
pub mod parse;
pub mod pattern;
pub mod pipeline;
pub mod problem;
pub mod saturate;
pub mod subst;
pub mod term;

pub use egraph::{EClassId, EGraph, ENode, Justification};
pub use explain::{replay_check, Explanation, ReplayVerdict, Step};
pub use oracle::{oracle_search, OracleLimits};
pub use parse::{parse_pattern, parse_term};
pub use pattern::{Directions, Pattern, RuleSpec};
pub use pipeline::{prove_problem, ProveOutcome, ReplayStatus};
pub use problem::{parse_problem, ProblemFile};
pub use saturate::{SatStatus, SaturationConfig};
pub use term::Term;
