//! Splicing task- and step-level results into later logical forms.

use super::ast::{RefId, SExpr};
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SubstError {
    #[error("unbound reference {0}")]
    UnboundRef(String),
    #[error("cyclic reference through {0}")]
    CyclicRef(String),
}

/// Replace every `Ref` in `expr` with its binding, recursively, producing a
/// ref-free tree. Bindings may themselves contain refs; cycles are rejected.
pub fn substitute_refs(
    expr: &SExpr,
    bindings: &HashMap<String, SExpr>,
) -> Result<SExpr, SubstError> {
    let mut in_progress = Vec::new();
    substitute(expr, bindings, &mut in_progress)
}

fn substitute(
    expr: &SExpr,
    bindings: &HashMap<String, SExpr>,
    in_progress: &mut Vec<String>,
) -> Result<SExpr, SubstError> {
    match expr {
        SExpr::Ref(r) => {
            let key = r.key();
            if in_progress.contains(&key) {
                return Err(SubstError::CyclicRef(key));
            }
            let bound = bindings.get(&key).ok_or_else(|| SubstError::UnboundRef(key.clone()))?;
            in_progress.push(key);
            let result = substitute(bound, bindings, in_progress);
            in_progress.pop();
            result
        }
        SExpr::Entity(_) | SExpr::Class(_) | SExpr::Relation(_) | SExpr::Literal(_) => {
            Ok(expr.clone())
        }
        SExpr::Count(a) => Ok(SExpr::Count(Box::new(substitute(a, bindings, in_progress)?))),
        SExpr::Reverse(a) => Ok(SExpr::Reverse(Box::new(substitute(a, bindings, in_progress)?))),
        SExpr::And(a, b) => Ok(SExpr::And(
            Box::new(substitute(a, bindings, in_progress)?),
            Box::new(substitute(b, bindings, in_progress)?),
        )),
        SExpr::Join(a, b) => Ok(SExpr::Join(
            Box::new(substitute(a, bindings, in_progress)?),
            Box::new(substitute(b, bindings, in_progress)?),
        )),
        SExpr::ArgMax(a, b) => Ok(SExpr::ArgMax(
            Box::new(substitute(a, bindings, in_progress)?),
            Box::new(substitute(b, bindings, in_progress)?),
        )),
        SExpr::ArgMin(a, b) => Ok(SExpr::ArgMin(
            Box::new(substitute(a, bindings, in_progress)?),
            Box::new(substitute(b, bindings, in_progress)?),
        )),
        SExpr::Compare(op, a, b) => Ok(SExpr::Compare(
            *op,
            Box::new(substitute(a, bindings, in_progress)?),
            Box::new(substitute(b, bindings, in_progress)?),
        )),
    }
}

/// Convenience map builder keyed by canonical ref text.
pub fn bindings_from(pairs: impl IntoIterator<Item = (RefId, SExpr)>) -> HashMap<String, SExpr> {
    pairs.into_iter().map(|(r, e)| (r.key(), e)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sexpr::{parse_sexpr, print_sexpr};

    fn bind(entries: &[(&str, &str)]) -> HashMap<String, SExpr> {
        entries.iter().map(|(k, v)| (k.to_string(), parse_sexpr(v).unwrap())).collect()
    }

    #[test]
    fn expands_nested_task_refs() {
        let expr = parse_sexpr("(JOIN food.type_of_dish.dishes s-exp-3)").unwrap();
        let bindings = bind(&[
            ("s-exp-1", "(JOIN food.dish.ingredients m.06x4c)"),
            ("s-exp-2", "(JOIN (R dining.cuisine.dishes) m.0102k5v9)"),
            ("s-exp-3", "(AND s-exp-1 s-exp-2)"),
        ]);
        let expanded = substitute_refs(&expr, &bindings).unwrap();
        assert!(expanded.is_ref_free());
        assert_eq!(
            print_sexpr(&expanded),
            "(JOIN food.type_of_dish.dishes (AND (JOIN food.dish.ingredients m.06x4c) \
             (JOIN (R dining.cuisine.dishes) m.0102k5v9)))"
        );
    }

    #[test]
    fn identity_on_ref_free_expr() {
        let expr = parse_sexpr("(COUNT (JOIN a.b.c m.01))").unwrap();
        assert_eq!(substitute_refs(&expr, &HashMap::new()).unwrap(), expr);
    }

    #[test]
    fn detects_self_cycle() {
        let expr = parse_sexpr("s-exp-1").unwrap();
        let bindings = bind(&[("s-exp-1", "s-exp-1")]);
        assert_eq!(
            substitute_refs(&expr, &bindings),
            Err(SubstError::CyclicRef("s-exp-1".into()))
        );
    }

    #[test]
    fn detects_mutual_cycle() {
        let expr = parse_sexpr("s-exp-1").unwrap();
        let bindings = bind(&[("s-exp-1", "(COUNT s-exp-2)"), ("s-exp-2", "(COUNT s-exp-1)")]);
        assert!(matches!(substitute_refs(&expr, &bindings), Err(SubstError::CyclicRef(_))));
    }

    #[test]
    fn reports_unbound_ref() {
        let expr = parse_sexpr("(COUNT s-exp-4)").unwrap();
        assert_eq!(
            substitute_refs(&expr, &HashMap::new()),
            Err(SubstError::UnboundRef("s-exp-4".into()))
        );
    }
}
