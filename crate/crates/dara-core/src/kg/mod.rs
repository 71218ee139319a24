//! Knowledge graph storage, schema metadata, evaluation and SPARQL.

mod eval;
mod graph;
mod numeric;
mod remote;
mod schema;
mod sparql;
mod sparql_exec;

pub use eval::{evaluate, Denotation, EvalError};
pub use graph::{GraphStats, KnowledgeGraph, LoadError, Node, Triple};
pub use numeric::NumericValue;
pub use remote::{execute_remote, RemoteError};
pub use schema::{ClassInfo, RangeKind, RelationInfo, SchemaError, SchemaView, UnboundAtom};
pub use sparql::{compile_sparql, CompileError, NS_PREFIX, TYPE_PREDICATE, XSD_PREFIX};
pub use sparql_exec::{execute_sparql, QueryParseError};
