//! Direct set-semantics evaluation of logical forms over a graph.

use super::graph::{KnowledgeGraph, Node};
use super::numeric::NumericValue;
use crate::sexpr::{CmpOp, SExpr};
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("unbound atom {0}")]
    UnboundAtom(String),
    #[error("unresolved reference {0}; substitute refs before evaluating")]
    UnresolvedRef(String),
}

/// The value of an expression: an entity/literal set, a pair set, or an
/// integer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Denotation {
    Set(BTreeSet<Node>),
    Pairs(BTreeSet<(Node, Node)>),
    Count(u64),
}

impl Denotation {
    pub fn empty_set() -> Self {
        Denotation::Set(BTreeSet::new())
    }

    pub fn into_set(self) -> Option<BTreeSet<Node>> {
        match self {
            Denotation::Set(s) => Some(s),
            _ => None,
        }
    }

    /// Flatten to a sorted answer list. A COUNT result becomes its decimal
    /// rendering, matching how answers are reported for scoring.
    pub fn answer_strings(&self) -> BTreeSet<String> {
        match self {
            Denotation::Set(items) => items.iter().map(Node::to_string).collect(),
            Denotation::Pairs(pairs) => {
                pairs.iter().map(|(a, b)| format!("{a}\t{b}")).collect()
            }
            Denotation::Count(n) => [n.to_string()].into(),
        }
    }
}

fn expect_set(value: Denotation, context: &str) -> Result<BTreeSet<Node>, EvalError> {
    match value {
        Denotation::Set(s) => Ok(s),
        Denotation::Pairs(_) => {
            Err(EvalError::TypeMismatch(format!("{context} needs an entity set, found a pair set")))
        }
        Denotation::Count(_) => {
            Err(EvalError::TypeMismatch(format!("{context} needs an entity set, found an integer")))
        }
    }
}

fn expect_pairs(value: Denotation, context: &str) -> Result<BTreeSet<(Node, Node)>, EvalError> {
    match value {
        Denotation::Pairs(p) => Ok(p),
        _ => Err(EvalError::TypeMismatch(format!("{context} needs a binary expression"))),
    }
}

fn numeric_node(node: &Node, context: &str) -> Result<NumericValue, EvalError> {
    match node {
        Node::Literal(l) => NumericValue::parse(&l.lexical).ok_or_else(|| {
            EvalError::TypeMismatch(format!("{context}: non-numeric literal '{l}'"))
        }),
        Node::Entity(e) => {
            Err(EvalError::TypeMismatch(format!("{context}: entity '{e}' is not a number")))
        }
    }
}

/// Evaluate a ref-free, schema-bound expression.
pub fn evaluate(expr: &SExpr, graph: &KnowledgeGraph) -> Result<Denotation, EvalError> {
    match expr {
        SExpr::Entity(id) => Ok(Denotation::Set([Node::entity(id.clone())].into())),
        SExpr::Class(name) => {
            if graph.schema().class(name).is_none() {
                return Err(EvalError::UnboundAtom(name.clone()));
            }
            let members = graph
                .schema()
                .instances_of(name)
                .map(|set| set.iter().map(|id| Node::entity(id.clone())).collect())
                .unwrap_or_default();
            Ok(Denotation::Set(members))
        }
        SExpr::Relation(name) => {
            if graph.schema().relation(name).is_none() {
                return Err(EvalError::UnboundAtom(name.clone()));
            }
            let pairs = graph
                .pairs_of(name)
                .iter()
                .map(|(s, o)| (Node::entity(s.clone()), o.clone()))
                .collect();
            Ok(Denotation::Pairs(pairs))
        }
        SExpr::Literal(l) => Ok(Denotation::Set([Node::Literal(l.clone())].into())),
        SExpr::Ref(r) => Err(EvalError::UnresolvedRef(r.key())),
        SExpr::Reverse(inner) => {
            let pairs = expect_pairs(evaluate(inner, graph)?, "R")?;
            Ok(Denotation::Pairs(pairs.into_iter().map(|(x, y)| (y, x)).collect()))
        }
        SExpr::Join(binary, operand) => {
            let left = expect_pairs(evaluate(binary, graph)?, "JOIN")?;
            match evaluate(operand, graph)? {
                Denotation::Pairs(right) => {
                    let mut out = BTreeSet::new();
                    for (x, y) in &left {
                        for (y2, z) in &right {
                            if y == y2 {
                                out.insert((x.clone(), z.clone()));
                            }
                        }
                    }
                    Ok(Denotation::Pairs(out))
                }
                Denotation::Set(members) => {
                    let mut out = BTreeSet::new();
                    for (x, y) in &left {
                        if members.contains(y) {
                            out.insert(x.clone());
                        }
                    }
                    Ok(Denotation::Set(out))
                }
                Denotation::Count(_) => {
                    Err(EvalError::TypeMismatch("JOIN over an integer".into()))
                }
            }
        }
        SExpr::And(a, b) => {
            let x = expect_set(evaluate(a, graph)?, "AND")?;
            let y = expect_set(evaluate(b, graph)?, "AND")?;
            Ok(Denotation::Set(x.intersection(&y).cloned().collect()))
        }
        SExpr::Count(u) => {
            let members = expect_set(evaluate(u, graph)?, "COUNT")?;
            Ok(Denotation::Count(members.len() as u64))
        }
        SExpr::ArgMax(u, b) => superlative(u, b, graph, true),
        SExpr::ArgMin(u, b) => superlative(u, b, graph, false),
        SExpr::Compare(op, binary, bound) => {
            let pairs = expect_pairs(evaluate(binary, graph)?, "comparative")?;
            let SExpr::Literal(l) = bound.as_ref() else {
                return Err(EvalError::TypeMismatch("comparative bound must be a literal".into()));
            };
            let threshold = NumericValue::parse(&l.lexical).ok_or_else(|| {
                EvalError::TypeMismatch(format!("non-numeric comparative bound '{l}'"))
            })?;
            let mut out = BTreeSet::new();
            for (x, v) in &pairs {
                let value = numeric_node(v, "comparative")?;
                let keep = match op {
                    CmpOp::Lt => value < threshold,
                    CmpOp::Le => value <= threshold,
                    CmpOp::Gt => value > threshold,
                    CmpOp::Ge => value >= threshold,
                };
                if keep {
                    out.insert(x.clone());
                }
            }
            Ok(Denotation::Set(out))
        }
    }
}

// ARGMAX/ARGMIN: members lacking the attribute are excluded; a member with
// several values scores by its own extremum; every member attaining the
// global extremum is returned.
fn superlative(
    u: &SExpr,
    b: &SExpr,
    graph: &KnowledgeGraph,
    maximize: bool,
) -> Result<Denotation, EvalError> {
    let members = expect_set(evaluate(u, graph)?, "superlative")?;
    let pairs = expect_pairs(evaluate(b, graph)?, "superlative attribute")?;
    let context = if maximize { "ARGMAX" } else { "ARGMIN" };
    let mut scored: Vec<(Node, NumericValue)> = Vec::new();
    for member in &members {
        let mut score: Option<NumericValue> = None;
        for (x, v) in &pairs {
            if x != member {
                continue;
            }
            let value = numeric_node(v, context)?;
            score = Some(match score {
                None => value,
                Some(s) => {
                    if (value > s) == maximize {
                        value
                    } else {
                        s
                    }
                }
            });
        }
        if let Some(score) = score {
            scored.push((member.clone(), score));
        }
    }
    let Some(best) = scored
        .iter()
        .map(|(_, s)| s.clone())
        .reduce(|a, s| if (s > a) == maximize { s } else { a })
    else {
        return Ok(Denotation::empty_set());
    };
    Ok(Denotation::Set(
        scored.into_iter().filter(|(_, s)| *s == best).map(|(m, _)| m).collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::schema::SchemaView;
    use crate::kg::Triple;
    use crate::sexpr::parse_sexpr;

    // Attribute pairs used across the comparative and superlative tests:
    // (a, 900.0) (b, 980.0) (c, 1000.0), plus a tie fixture (a, 5) (b, 5).
    fn test_graph() -> KnowledgeGraph {
        let schema = SchemaView::from_json(
            r#"{
                "relations": {
                    "t.rel": {"description": "r", "domain": "t.thing", "range": "t.thing"},
                    "t.mass": {"description": "m", "domain": "t.thing",
                               "range": "http://www.w3.org/2001/XMLSchema#float"},
                    "t.tied": {"description": "t", "domain": "t.thing",
                               "range": "http://www.w3.org/2001/XMLSchema#integer"}
                },
                "classes": {"t.thing": {"description": "thing"}},
                "instances": {"m.a": ["t.thing"], "m.b": ["t.thing"], "m.c": ["t.thing"]}
            }"#,
        )
        .unwrap();
        let float = "http://www.w3.org/2001/XMLSchema#float";
        let int = "http://www.w3.org/2001/XMLSchema#integer";
        let lit = |lex: &str, dt: &str| Node::Literal(crate::sexpr::Literal::new(lex, dt));
        let triples = vec![
            Triple { subject: "m.e1".into(), predicate: "t.rel".into(), object: Node::entity("m.e2") },
            Triple { subject: "m.a".into(), predicate: "t.mass".into(), object: lit("900.0", float) },
            Triple { subject: "m.b".into(), predicate: "t.mass".into(), object: lit("980.0", float) },
            Triple { subject: "m.c".into(), predicate: "t.mass".into(), object: lit("1000.0", float) },
            Triple { subject: "m.a".into(), predicate: "t.tied".into(), object: lit("5", int) },
            Triple { subject: "m.b".into(), predicate: "t.tied".into(), object: lit("5", int) },
        ];
        KnowledgeGraph::new(triples, schema).unwrap()
    }

    fn eval_set(expr: &str, graph: &KnowledgeGraph) -> Vec<String> {
        let e = parse_sexpr(expr).unwrap();
        match evaluate(&e, graph).unwrap() {
            Denotation::Set(s) => s.iter().map(Node::to_string).collect(),
            other => panic!("expected a set, got {other:?}"),
        }
    }

    #[test]
    fn join_follows_pair_direction() {
        let g = test_graph();
        assert_eq!(eval_set("(JOIN t.rel m.e2)", &g), vec!["m.e1"]);
        assert_eq!(eval_set("(JOIN (R t.rel) m.e1)", &g), vec!["m.e2"]);
    }

    #[test]
    fn count_is_cardinality() {
        let g = test_graph();
        let e = parse_sexpr("(COUNT t.thing)").unwrap();
        assert_eq!(evaluate(&e, &g).unwrap(), Denotation::Count(3));
    }

    // Frozen from the brute-force reading of the comparative definitions
    // over the pairs above.
    #[test]
    fn comparatives_partition_numerically() {
        let g = test_graph();
        assert_eq!(
            eval_set("(LT t.mass 980.0^^http://www.w3.org/2001/XMLSchema#float)", &g),
            vec!["m.a"]
        );
        assert_eq!(
            eval_set("(GE t.mass 980.0^^http://www.w3.org/2001/XMLSchema#float)", &g),
            vec!["m.b", "m.c"]
        );
    }

    #[test]
    fn argmax_returns_all_tied_members() {
        let g = test_graph();
        assert_eq!(eval_set("(ARGMAX t.thing t.tied)", &g), vec!["m.a", "m.b"]);
        assert_eq!(eval_set("(ARGMAX t.thing t.mass)", &g), vec!["m.c"]);
        assert_eq!(eval_set("(ARGMIN t.thing t.mass)", &g), vec!["m.a"]);
    }

    #[test]
    fn empty_results_are_values_not_errors() {
        let g = test_graph();
        assert!(eval_set("(JOIN t.rel m.a)", &g).is_empty());
        assert!(
            eval_set("(GT t.mass 5000^^http://www.w3.org/2001/XMLSchema#integer)", &g).is_empty()
        );
    }

    #[test]
    fn type_errors_are_reported() {
        let g = test_graph();
        let e = parse_sexpr("(COUNT (R t.rel))").unwrap();
        assert!(matches!(evaluate(&e, &g), Err(EvalError::TypeMismatch(_))));
        let e = parse_sexpr("(JOIN unknown.rel m.a)").unwrap();
        assert!(matches!(evaluate(&e, &g), Err(EvalError::UnboundAtom(_))));
    }
}
