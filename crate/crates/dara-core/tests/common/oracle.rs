//! Brute-force set-semantics oracle, independent of the library evaluator.
//!
//! Works directly over the raw triple list with linear scans and f64
//! comparison, and renders results as sorted strings so they can be compared
//! against any other engine's output. No indexes, no shared evaluation code.

use dara_core::kg::{KnowledgeGraph, Node};
use dara_core::sexpr::{CmpOp, SExpr};
use std::collections::BTreeSet;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleValue {
    Items(BTreeSet<String>),
    Pairs(BTreeSet<(String, String)>),
    Num(u64),
}

fn node_repr(node: &Node) -> String {
    node.to_string()
}

fn all_pairs(graph: &KnowledgeGraph, relation: &str) -> BTreeSet<(String, String)> {
    let mut out = BTreeSet::new();
    for t in graph.triples() {
        if t.predicate == relation {
            out.insert((t.subject.clone(), node_repr(&t.object)));
        }
    }
    out
}

fn numeric(text: &str) -> Option<f64> {
    let lexical = text.split("^^").next().unwrap_or(text);
    lexical.parse::<f64>().ok()
}

/// Evaluate a ref-free expression by brute force.
pub fn brute_force(expr: &SExpr, graph: &KnowledgeGraph) -> OracleValue {
    match expr {
        SExpr::Entity(e) => OracleValue::Items([e.clone()].into()),
        SExpr::Class(c) => {
            let mut items = BTreeSet::new();
            if let Some(instances) = graph.schema().instances_of(c) {
                items.extend(instances.iter().cloned());
            }
            OracleValue::Items(items)
        }
        SExpr::Relation(r) => OracleValue::Pairs(all_pairs(graph, r)),
        SExpr::Literal(l) => OracleValue::Items([l.to_string()].into()),
        SExpr::Ref(r) => panic!("oracle input must be ref-free, found {r}"),
        SExpr::Reverse(b) => match brute_force(b, graph) {
            OracleValue::Pairs(pairs) => {
                OracleValue::Pairs(pairs.into_iter().map(|(x, y)| (y, x)).collect())
            }
            other => panic!("R over non-binary {other:?}"),
        },
        SExpr::Join(a, b) => {
            let left = match brute_force(a, graph) {
                OracleValue::Pairs(p) => p,
                other => panic!("JOIN left arm must be binary, got {other:?}"),
            };
            match brute_force(b, graph) {
                OracleValue::Pairs(right) => {
                    let mut out = BTreeSet::new();
                    for (x, y) in &left {
                        for (y2, z) in &right {
                            if y == y2 {
                                out.insert((x.clone(), z.clone()));
                            }
                        }
                    }
                    OracleValue::Pairs(out)
                }
                OracleValue::Items(items) => {
                    let mut out = BTreeSet::new();
                    for (x, y) in &left {
                        if items.contains(y) {
                            out.insert(x.clone());
                        }
                    }
                    OracleValue::Items(out)
                }
                other => panic!("JOIN right arm {other:?}"),
            }
        }
        SExpr::And(a, b) => {
            let (OracleValue::Items(x), OracleValue::Items(y)) =
                (brute_force(a, graph), brute_force(b, graph))
            else {
                panic!("AND over non-sets");
            };
            OracleValue::Items(x.intersection(&y).cloned().collect())
        }
        SExpr::Count(u) => match brute_force(u, graph) {
            OracleValue::Items(items) => OracleValue::Num(items.len() as u64),
            other => panic!("COUNT over {other:?}"),
        },
        SExpr::ArgMax(u, b) => superlative(u, b, graph, true),
        SExpr::ArgMin(u, b) => superlative(u, b, graph, false),
        SExpr::Compare(op, b, bound) => {
            let OracleValue::Pairs(pairs) = brute_force(b, graph) else {
                panic!("comparative over non-binary");
            };
            let SExpr::Literal(l) = bound.as_ref() else { panic!("comparative bound") };
            let n = numeric(&l.lexical).expect("numeric bound");
            let mut out = BTreeSet::new();
            for (x, v) in &pairs {
                let Some(v) = numeric(v) else { continue };
                let keep = match op {
                    CmpOp::Lt => v < n,
                    CmpOp::Le => v <= n,
                    CmpOp::Gt => v > n,
                    CmpOp::Ge => v >= n,
                };
                if keep {
                    out.insert(x.clone());
                }
            }
            OracleValue::Items(out)
        }
    }
}

fn superlative(u: &SExpr, b: &SExpr, graph: &KnowledgeGraph, maximize: bool) -> OracleValue {
    let OracleValue::Items(members) = brute_force(u, graph) else {
        panic!("superlative over non-set");
    };
    let OracleValue::Pairs(pairs) = brute_force(b, graph) else {
        panic!("superlative attribute must be binary");
    };
    // Each member's score is the extremum of its own values.
    let mut scored: Vec<(String, f64)> = Vec::new();
    for m in &members {
        let mut values: Vec<f64> = pairs
            .iter()
            .filter(|(x, _)| x == m)
            .filter_map(|(_, v)| numeric(v))
            .collect();
        if values.is_empty() {
            continue;
        }
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let score = if maximize { *values.last().unwrap() } else { values[0] };
        scored.push((m.clone(), score));
    }
    let best = scored
        .iter()
        .map(|(_, s)| *s)
        .fold(None::<f64>, |acc, s| match acc {
            None => Some(s),
            Some(a) => Some(if maximize { a.max(s) } else { a.min(s) }),
        });
    let mut out = BTreeSet::new();
    if let Some(best) = best {
        for (m, s) in scored {
            if s == best {
                out.insert(m);
            }
        }
    }
    OracleValue::Items(out)
}
