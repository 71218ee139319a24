//! The s-expression logical-form language: parsing, printing, splicing,
//! canonical comparison and subtask decomposition.

mod ast;
mod canon;
mod decompose;
mod parser;
mod subst;

pub use ast::{is_entity_id, print_sexpr, CmpOp, ExprKind, Literal, RefId, SExpr, SchemaItems};
pub use canon::{canonicalize, semantic_equal};
pub use decompose::{decompose_by_ops, reassemble, DecomposeError, Subtask};
pub use parser::{parse_ref, parse_sexpr, ParseError};
pub use subst::{bindings_from, substitute_refs, SubstError};
