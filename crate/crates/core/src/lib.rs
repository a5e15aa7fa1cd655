//! Generation and evaluation engine for LLM-synthesized Solidity smart contracts.
//!
//! The crate orchestrates a multi-phase agent pipeline over a pluggable
//! chat-completion backend, deterministically scores generated contracts on a
//! five-dimensional rubric against a structured requirement schema, gates on
//! compilation, and produces paired comparisons against expert ground-truth
//! implementations.
//!
//! Module map:
//! - [`schema`]: structured requirement schema extracted from natural language
//! - [`dataset`]: JSONL benchmark ingestion and complexity classification
//! - [`solidity`]: structural Solidity parser and forbidden-pattern linter
//! - [`metrics`]: the five-metric rubric, composite score, and letter grades
//! - [`audit`]: security audit model, severity lattice, refinement decision
//! - [`abi`]: deterministic contract ABI export
//! - [`compile`]: external compiler gate (standard-JSON interface)
//! - [`pipeline`]: phase orchestration, backends, provenance records
//! - [`report`]: paired ground-truth evaluation and batch aggregation

pub mod abi;
pub mod audit;
pub mod compile;
pub mod dataset;
pub mod metrics;
pub mod pipeline;
pub mod report;
pub mod schema;
pub mod solidity;
