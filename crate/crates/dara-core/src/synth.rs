//! Seeded random knowledge graphs and well-typed logical forms.
//!
//! Used by the differential and property test suites: expressions are
//! schema-bound and type-correct by construction, so every generated form
//! evaluates without error on its graph (possibly to an empty set).
//! Attribute relations are single-valued with one-decimal float values, so
//! numeric comparisons are exact in every engine.

use crate::kg::{ClassInfo, KnowledgeGraph, RangeKind, RelationInfo, SchemaView, Triple};
use crate::kg::Node;
use crate::sexpr::{CmpOp, Literal, SExpr};
use rand::prelude::*;
use std::collections::{BTreeMap, BTreeSet, HashMap};

pub const XSD_FLOAT: &str = "http://www.w3.org/2001/XMLSchema#float";

#[derive(Debug, Clone)]
pub struct SynthOptions {
    pub max_entities: usize,
    pub classes: usize,
    pub mediator_classes: usize,
    pub relations: usize,
    pub attributes: usize,
    pub max_edges_per_relation: usize,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions {
            max_entities: 50,
            classes: 5,
            mediator_classes: 1,
            relations: 8,
            attributes: 4,
            max_edges_per_relation: 12,
        }
    }
}

/// Deterministic RNG for a seed.
pub fn rng_for_seed(seed: u64) -> rand_chacha::ChaCha8Rng {
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}

/// Generate a random graph whose triples respect its own schema.
pub fn random_graph(rng: &mut impl Rng, opts: &SynthOptions) -> KnowledgeGraph {
    let class_count = opts.classes.max(2);
    let classes: Vec<String> = (0..class_count).map(|i| format!("syn.class_{i}")).collect();
    let mediator_count = opts.mediator_classes.min(class_count.saturating_sub(1));

    let entity_count = rng.gen_range(2..=opts.max_entities.max(2));
    let entities: Vec<String> = (0..entity_count).map(|i| format!("m.syn{i}")).collect();

    let mut membership: HashMap<String, BTreeSet<String>> = HashMap::new();
    for entity in &entities {
        let class = classes[rng.gen_range(0..classes.len())].clone();
        let mut set = BTreeSet::from([class]);
        if rng.gen_bool(0.25) {
            set.insert(classes[rng.gen_range(0..classes.len())].clone());
        }
        membership.insert(entity.clone(), set);
    }

    let mut class_docs: BTreeMap<String, ClassInfo> = BTreeMap::new();
    for (i, name) in classes.iter().enumerate() {
        class_docs.insert(
            name.clone(),
            ClassInfo {
                description: format!("synthetic class {i}"),
                mediator: i < mediator_count,
            },
        );
    }

    let mut relations: BTreeMap<String, RelationInfo> = BTreeMap::new();
    for k in 0..opts.relations.max(1) {
        let domain = classes[rng.gen_range(0..classes.len())].clone();
        let range = classes[rng.gen_range(0..classes.len())].clone();
        let mediator = class_docs[&range].mediator;
        relations.insert(
            format!("{domain}.rel_{k}"),
            RelationInfo {
                description: format!("synthetic relation {k} of {domain}"),
                domain: Some(domain),
                range: Some(RangeKind::Class(range)),
                mediator,
            },
        );
    }
    for k in 0..opts.attributes.max(1) {
        let domain = classes[rng.gen_range(0..classes.len())].clone();
        relations.insert(
            format!("{domain}.attr_{k}"),
            RelationInfo {
                description: format!("synthetic attribute {k} of {domain}"),
                domain: Some(domain),
                range: Some(RangeKind::LiteralType(XSD_FLOAT.to_string())),
                mediator: false,
            },
        );
    }

    let mut labels = BTreeMap::new();
    for (i, entity) in entities.iter().enumerate() {
        if rng.gen_bool(0.5) {
            labels.insert(entity.clone(), format!("Synthetic Entity {i}"));
        }
    }

    let instances_of = |class: &str, membership: &HashMap<String, BTreeSet<String>>| {
        membership
            .iter()
            .filter(|(_, cs)| cs.contains(class))
            .map(|(e, _)| e.clone())
            .collect::<Vec<_>>()
    };

    let mut triples = Vec::new();
    for (name, info) in &relations {
        let Some(domain) = &info.domain else { continue };
        let subjects = instances_of(domain, &membership);
        if subjects.is_empty() {
            continue;
        }
        match info.range.as_ref() {
            Some(RangeKind::Class(range)) => {
                let objects = instances_of(range, &membership);
                if objects.is_empty() {
                    continue;
                }
                let edges = rng.gen_range(0..=opts.max_edges_per_relation);
                let mut seen = BTreeSet::new();
                for _ in 0..edges {
                    let s = subjects[rng.gen_range(0..subjects.len())].clone();
                    let o = objects[rng.gen_range(0..objects.len())].clone();
                    if seen.insert((s.clone(), o.clone())) {
                        triples.push(Triple {
                            subject: s,
                            predicate: name.clone(),
                            object: Node::Entity(o),
                        });
                    }
                }
            }
            Some(RangeKind::LiteralType(dt)) => {
                // Single-valued: at most one value per subject.
                for s in &subjects {
                    if rng.gen_bool(0.7) {
                        let value = format!("{}.{}", rng.gen_range(0..100), rng.gen_range(0..10));
                        triples.push(Triple {
                            subject: s.clone(),
                            predicate: name.clone(),
                            object: Node::Literal(Literal::new(value, dt.clone())),
                        });
                    }
                }
            }
            None => {}
        }
    }

    let schema = SchemaView::build(relations, class_docs, membership, labels);
    KnowledgeGraph::new(triples, schema).expect("synthetic triples respect their schema")
}

fn pick<'a, T>(rng: &mut impl Rng, items: &'a [T]) -> &'a T {
    &items[rng.gen_range(0..items.len())]
}

struct Vocab {
    entities: Vec<String>,
    classes: Vec<String>,
    relations: Vec<String>,
    attributes: Vec<String>,
}

fn vocab(graph: &KnowledgeGraph) -> Vocab {
    let schema = graph.schema();
    let mut entities: BTreeSet<String> = BTreeSet::new();
    for t in graph.triples() {
        entities.insert(t.subject.clone());
        if let Node::Entity(o) = &t.object {
            entities.insert(o.clone());
        }
    }
    for class in schema.class_names() {
        if let Some(instances) = schema.instances_of(class) {
            entities.extend(instances.iter().cloned());
        }
    }
    let attributes: Vec<String> = schema.attribute_names().cloned().collect();
    let relations: Vec<String> = schema
        .relation_names()
        .filter(|r| !attributes.contains(*r))
        .cloned()
        .collect();
    Vocab {
        entities: entities.into_iter().collect(),
        classes: schema.class_names().cloned().collect(),
        relations,
        attributes,
    }
}

// Entity-to-entity binary expression.
fn entity_binary(rng: &mut impl Rng, v: &Vocab, depth: usize) -> SExpr {
    let rel = SExpr::relation(pick(rng, &v.relations).clone());
    if depth == 0 {
        return if rng.gen_bool(0.5) { rel } else { SExpr::reverse(rel) };
    }
    match rng.gen_range(0..4) {
        0 => rel,
        1 => SExpr::reverse(entity_binary(rng, v, depth - 1)),
        2 => SExpr::join(entity_binary(rng, v, depth - 1), entity_binary(rng, v, depth - 1)),
        _ => SExpr::reverse(rel),
    }
}

// Entity-to-literal binary expression (safe under comparatives and
// superlatives).
fn attribute_binary(rng: &mut impl Rng, v: &Vocab, depth: usize) -> SExpr {
    let attr = SExpr::relation(pick(rng, &v.attributes).clone());
    if depth > 0 && rng.gen_bool(0.25) {
        SExpr::join(entity_binary(rng, v, depth - 1), attr)
    } else {
        attr
    }
}

fn base_set(rng: &mut impl Rng, v: &Vocab) -> SExpr {
    if rng.gen_bool(0.5) && !v.entities.is_empty() {
        SExpr::entity(pick(rng, &v.entities).clone())
    } else {
        SExpr::class(pick(rng, &v.classes).clone())
    }
}

fn threshold(rng: &mut impl Rng) -> Literal {
    Literal::new(format!("{}.{}", rng.gen_range(0..100), rng.gen_range(0..10)), XSD_FLOAT)
}

fn set_expr(rng: &mut impl Rng, v: &Vocab, depth: usize) -> SExpr {
    if depth == 0 {
        return base_set(rng, v);
    }
    match rng.gen_range(0..10) {
        0 | 1 => base_set(rng, v),
        2 | 3 | 4 => SExpr::join(entity_binary(rng, v, depth - 1), set_expr(rng, v, depth - 1)),
        5 => SExpr::join(
            SExpr::reverse(attribute_binary(rng, v, depth - 1)),
            set_expr(rng, v, depth - 1),
        ),
        6 => SExpr::and(set_expr(rng, v, depth - 1), set_expr(rng, v, depth - 1)),
        7 => {
            let op = *pick(rng, &[CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge]);
            SExpr::compare(op, attribute_binary(rng, v, depth - 1), threshold(rng))
        }
        8 => SExpr::ArgMax(
            Box::new(set_expr(rng, v, depth - 1)),
            Box::new(attribute_binary(rng, v, depth - 1)),
        ),
        _ => SExpr::ArgMin(
            Box::new(set_expr(rng, v, depth - 1)),
            Box::new(attribute_binary(rng, v, depth - 1)),
        ),
    }
}

/// A random well-typed, schema-bound expression over `graph`.
pub fn random_expr(rng: &mut impl Rng, graph: &KnowledgeGraph, max_depth: usize) -> SExpr {
    let v = vocab(graph);
    let depth = rng.gen_range(1..=max_depth.max(1));
    let body = set_expr(rng, &v, depth);
    if rng.gen_bool(0.15) {
        SExpr::count(body)
    } else {
        body
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::evaluate;

    #[test]
    fn generated_exprs_always_evaluate() {
        let mut rng = rng_for_seed(7);
        for _ in 0..20 {
            let graph = random_graph(&mut rng, &SynthOptions::default());
            for _ in 0..20 {
                let expr = random_expr(&mut rng, &graph, 4);
                assert!(expr.is_ref_free());
                evaluate(&expr, &graph).unwrap_or_else(|e| {
                    panic!("generated expr failed to evaluate: {expr} ({e})")
                });
            }
        }
    }

    #[test]
    fn generation_is_deterministic_per_seed() {
        let make = || {
            let mut rng = rng_for_seed(123);
            let graph = random_graph(&mut rng, &SynthOptions::default());
            let exprs: Vec<String> =
                (0..5).map(|_| random_expr(&mut rng, &graph, 3).to_string()).collect();
            (graph.stats(), exprs)
        };
        assert_eq!(make(), make());
    }
}
