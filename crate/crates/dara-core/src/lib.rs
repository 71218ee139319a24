//! DARA: knowledge-graph question answering through iterative task
//! decomposition and task grounding.
//!
//! The crate provides the full toolchain around the agent:
//!
//! - [`sexpr`] — the s-expression logical-form language (parse, print,
//!   splice, canonical comparison, subtask decomposition);
//! - [`kg`] — an immutable triple store with schema metadata, direct
//!   set-semantics evaluation, and a SPARQL compiler plus an independent
//!   mini-engine for differential checking;
//! - [`retrieval`] — top-k ranking of schema items with a pluggable
//!   embedding provider and a deterministic lexical fallback;
//! - [`actions`] — the KG tool functions an agent may call, and the
//!   numbered-variable baseline action set;
//! - [`agent`] — the agent loops, trace parsing/serialization, prompt
//!   rendering, and LLM adapters (remote endpoint or scripted replay);
//! - [`eval`] — exact-match and answer-F1 scoring, zero-shot filtering,
//!   and report aggregation;
//! - [`data`] — training-pair filtering, decomposition-prompt emission and
//!   trajectory validation;
//! - [`synth`] — seeded random graphs and well-typed expressions for
//!   differential and property testing.

pub mod actions;
pub mod agent;
pub mod data;
pub mod eval;
pub mod kg;
pub mod retrieval;
pub mod sexpr;
pub mod synth;
