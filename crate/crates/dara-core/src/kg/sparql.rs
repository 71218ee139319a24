//! Compilation of logical forms to SPARQL text.
//!
//! The emitted dialect is the minimal subset the toolkit needs: triple
//! patterns with the `ns:` prefix, `VALUES` for singleton entity sets,
//! `FILTER` for comparatives, and a scalar max/min subquery plus an
//! equality filter for superlatives (keeping every member that ties on the
//! extremum). Class membership compiles to the virtual predicate
//! `type.object.type`. Variables are numbered `?x0, ?x1, ...` in allocation
//! order, so compilation is deterministic.

use super::schema::{SchemaView, UnboundAtom};
use crate::sexpr::{ExprKind, Literal, SExpr};
use thiserror::Error;

pub const NS_PREFIX: &str = "http://rdf.freebase.com/ns/";
pub const XSD_PREFIX: &str = "http://www.w3.org/2001/XMLSchema#";
/// Virtual predicate backing class-membership patterns.
pub const TYPE_PREDICATE: &str = "type.object.type";

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum CompileError {
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("unsupported form: {0}")]
    UnsupportedForm(String),
    #[error(transparent)]
    Unbound(#[from] UnboundAtom),
}

fn render_literal(l: &Literal) -> String {
    match l.datatype.strip_prefix(XSD_PREFIX) {
        Some(local) => format!("\"{}\"^^xsd:{}", l.lexical, local),
        None => format!("\"{}\"^^<{}>", l.lexical, l.datatype),
    }
}

struct Compiler<'s> {
    schema: &'s SchemaView,
    next_var: usize,
    uses_xsd: bool,
}

impl<'s> Compiler<'s> {
    fn fresh(&mut self) -> String {
        let v = format!("?x{}", self.next_var);
        self.next_var += 1;
        v
    }

    fn literal(&mut self, l: &Literal) -> String {
        if l.datatype.starts_with(XSD_PREFIX) {
            self.uses_xsd = true;
        }
        render_literal(l)
    }

    /// Emit patterns constraining `var` to the members of set expression
    /// `expr`.
    fn set_patterns(
        &mut self,
        expr: &SExpr,
        var: &str,
        out: &mut Vec<String>,
    ) -> Result<(), CompileError> {
        match expr {
            SExpr::Entity(id) => {
                out.push(format!("VALUES {var} {{ ns:{id} }}"));
                Ok(())
            }
            SExpr::Class(name) => {
                if !self.schema.is_empty() && self.schema.class(name).is_none() {
                    return Err(UnboundAtom(name.clone()).into());
                }
                out.push(format!("{var} ns:{TYPE_PREDICATE} ns:{name} ."));
                Ok(())
            }
            SExpr::Literal(l) => {
                let rendered = self.literal(l);
                out.push(format!("VALUES {var} {{ {rendered} }}"));
                Ok(())
            }
            SExpr::Ref(r) => Err(CompileError::UnsupportedForm(format!(
                "unresolved reference {r}; substitute refs before compiling"
            ))),
            SExpr::And(a, b) => {
                self.set_patterns(a, var, out)?;
                self.set_patterns(b, var, out)
            }
            SExpr::Join(binary, operand) => {
                if operand.kind() == ExprKind::Pairs {
                    return Err(CompileError::TypeMismatch(
                        "a pair-valued JOIN cannot be projected to one variable".into(),
                    ));
                }
                let object = match operand.as_ref() {
                    SExpr::Entity(id) => format!("ns:{id}"),
                    SExpr::Literal(l) => self.literal(l),
                    _ => {
                        let y = self.fresh();
                        self.set_patterns(operand, &y, out)?;
                        y
                    }
                };
                self.binary_patterns(binary, var, &object, out)
            }
            SExpr::ArgMax(u, b) | SExpr::ArgMin(u, b) => {
                let maximize = matches!(expr, SExpr::ArgMax(_, _));
                self.set_patterns(u, var, out)?;
                let value = self.fresh();
                self.binary_patterns(b, var, &value, out)?;
                let inner_member = self.fresh();
                let inner_value = self.fresh();
                let extremum = self.fresh();
                let mut inner = Vec::new();
                self.set_patterns(u, &inner_member, &mut inner)?;
                self.binary_patterns(b, &inner_member, &inner_value, &mut inner)?;
                let agg = if maximize { "MAX" } else { "MIN" };
                out.push("{".into());
                out.push(format!("  SELECT ({agg}({inner_value}) AS {extremum}) WHERE {{"));
                for line in inner {
                    out.push(format!("    {line}"));
                }
                out.push("  }".into());
                out.push("}".into());
                out.push(format!("FILTER({value} = {extremum})"));
                Ok(())
            }
            SExpr::Compare(op, binary, bound) => {
                let SExpr::Literal(l) = bound.as_ref() else {
                    return Err(CompileError::TypeMismatch(
                        "comparative bound must be a literal".into(),
                    ));
                };
                let value = self.fresh();
                self.binary_patterns(binary, var, &value, out)?;
                let rendered = self.literal(l);
                out.push(format!("FILTER({value} {} {rendered})", op.sparql()));
                Ok(())
            }
            SExpr::Count(_) => Err(CompileError::TypeMismatch(
                "COUNT may only appear at the top level".into(),
            )),
            SExpr::Relation(_) | SExpr::Reverse(_) => Err(CompileError::TypeMismatch(format!(
                "binary expression '{expr}' used where an entity set is required"
            ))),
        }
    }

    /// Emit patterns connecting `subject` and `object` through binary
    /// expression `binary`.
    fn binary_patterns(
        &mut self,
        binary: &SExpr,
        subject: &str,
        object: &str,
        out: &mut Vec<String>,
    ) -> Result<(), CompileError> {
        match binary {
            SExpr::Relation(name) => {
                if !self.schema.is_empty() && self.schema.relation(name).is_none() {
                    return Err(UnboundAtom(name.clone()).into());
                }
                out.push(format!("{subject} ns:{name} {object} ."));
                Ok(())
            }
            SExpr::Reverse(inner) => self.binary_patterns(inner, object, subject, out),
            SExpr::Join(b1, b2) if b2.kind() == ExprKind::Pairs => {
                let mid = self.fresh();
                self.binary_patterns(b1, subject, &mid, out)?;
                self.binary_patterns(b2, &mid, object, out)
            }
            other => Err(CompileError::TypeMismatch(format!(
                "'{other}' used where a binary expression is required"
            ))),
        }
    }
}

/// Compile a ref-free, schema-bound expression to a SELECT query over one
/// projected variable (or a COUNT aggregate).
///
/// Vocabulary validation is skipped when the schema is empty, which is the
/// remote-endpoint case.
pub fn compile_sparql(expr: &SExpr, schema: &SchemaView) -> Result<String, CompileError> {
    let mut compiler = Compiler { schema, next_var: 0, uses_xsd: false };
    let projected = compiler.fresh();
    let mut body = Vec::new();
    let select = match expr {
        SExpr::Count(u) => {
            compiler.set_patterns(u, &projected, &mut body)?;
            let alias = compiler.fresh();
            format!("SELECT (COUNT(DISTINCT {projected}) AS {alias})")
        }
        other if other.kind() == ExprKind::Pairs => {
            return Err(CompileError::UnsupportedForm(
                "cannot project a pair-valued expression to a single variable".into(),
            ));
        }
        other => {
            compiler.set_patterns(other, &projected, &mut body)?;
            format!("SELECT DISTINCT {projected}")
        }
    };
    let mut query = String::new();
    query.push_str(&format!("PREFIX ns: <{NS_PREFIX}>\n"));
    if compiler.uses_xsd {
        query.push_str(&format!("PREFIX xsd: <{XSD_PREFIX}>\n"));
    }
    query.push_str(&select);
    query.push_str(" WHERE {\n");
    for line in body {
        query.push_str("  ");
        query.push_str(&line);
        query.push('\n');
    }
    query.push('}');
    Ok(query)
}
