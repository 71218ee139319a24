//! Immutable triple store with 1-hop indexes and label lookup.

use super::schema::{SchemaError, SchemaView};
use crate::sexpr::Literal;
use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::Path;
use thiserror::Error;

/// A graph node: an entity id or a typed literal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Node {
    Entity(String),
    Literal(Literal),
}

impl Node {
    pub fn entity(id: impl Into<String>) -> Self {
        Node::Entity(id.into())
    }

    pub fn as_entity(&self) -> Option<&str> {
        match self {
            Node::Entity(id) => Some(id),
            Node::Literal(_) => None,
        }
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Entity(id) => f.write_str(id),
            Node::Literal(l) => write!(f, "{l}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Triple {
    pub subject: String,
    pub predicate: String,
    pub object: Node,
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}:{line}: expected subject<TAB>predicate<TAB>object")]
    Parse { path: String, line: usize },
    #[error("schema violation: unknown predicate(s) {0:?}")]
    SchemaViolation(Vec<String>),
    #[error(transparent)]
    Schema(#[from] SchemaError),
}

/// Counts reported after a successful load.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GraphStats {
    pub triples: usize,
    pub relations: usize,
    pub classes: usize,
    pub entities: usize,
}

/// An immutable knowledge graph: triples plus schema metadata and labels.
#[derive(Debug, Clone, Default)]
pub struct KnowledgeGraph {
    triples: Vec<Triple>,
    by_predicate: HashMap<String, Vec<(String, Node)>>,
    outgoing: HashMap<String, BTreeSet<String>>,
    incoming: HashMap<String, BTreeSet<String>>,
    label_index: HashMap<String, String>,
    schema: SchemaView,
}

impl KnowledgeGraph {
    pub fn new(triples: Vec<Triple>, schema: SchemaView) -> Result<Self, LoadError> {
        let mut unknown: BTreeSet<String> = BTreeSet::new();
        for t in &triples {
            if schema.relation(&t.predicate).is_none() {
                unknown.insert(t.predicate.clone());
            }
        }
        if !unknown.is_empty() {
            return Err(LoadError::SchemaViolation(unknown.into_iter().collect()));
        }
        let mut graph = KnowledgeGraph { schema, ..Default::default() };
        for t in &triples {
            graph
                .by_predicate
                .entry(t.predicate.clone())
                .or_default()
                .push((t.subject.clone(), t.object.clone()));
            graph.outgoing.entry(t.subject.clone()).or_default().insert(t.predicate.clone());
            if let Node::Entity(obj) = &t.object {
                graph.incoming.entry(obj.clone()).or_default().insert(t.predicate.clone());
            }
        }
        graph.label_index = graph
            .schema
            .labels()
            .iter()
            .map(|(id, label)| (label.to_lowercase(), id.clone()))
            .collect();
        graph.triples = triples;
        Ok(graph)
    }

    /// Load from a TSV triples file and a JSON schema file.
    ///
    /// Triples: one `subject<TAB>predicate<TAB>object` per line; `#` lines
    /// and blank lines are ignored; literal objects are written
    /// `lexical^^datatype`.
    pub fn load(triples_path: &Path, schema_path: &Path) -> Result<Self, LoadError> {
        let schema = SchemaView::from_file(schema_path)?;
        let text = std::fs::read_to_string(triples_path).map_err(|source| LoadError::Io {
            path: triples_path.display().to_string(),
            source,
        })?;
        let mut triples = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.splitn(3, '\t');
            let (Some(s), Some(p), Some(o)) = (fields.next(), fields.next(), fields.next())
            else {
                return Err(LoadError::Parse {
                    path: triples_path.display().to_string(),
                    line: idx + 1,
                });
            };
            if s.is_empty() || p.is_empty() || o.is_empty() {
                return Err(LoadError::Parse {
                    path: triples_path.display().to_string(),
                    line: idx + 1,
                });
            }
            let object = match o.split_once("^^") {
                Some((lexical, datatype)) => Node::Literal(Literal::new(lexical, datatype)),
                None => Node::Entity(o.to_string()),
            };
            triples.push(Triple {
                subject: s.to_string(),
                predicate: p.to_string(),
                object,
            });
        }
        Self::new(triples, schema)
    }

    pub fn schema(&self) -> &SchemaView {
        &self.schema
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn stats(&self) -> GraphStats {
        let mut entities: BTreeSet<&str> = BTreeSet::new();
        for t in &self.triples {
            entities.insert(&t.subject);
            if let Node::Entity(o) = &t.object {
                entities.insert(o);
            }
        }
        GraphStats {
            triples: self.triples.len(),
            relations: self.schema.relation_count(),
            classes: self.schema.class_count(),
            entities: entities.len(),
        }
    }

    /// All (subject, object) pairs of a predicate, in insertion order.
    pub fn pairs_of(&self, predicate: &str) -> &[(String, Node)] {
        self.by_predicate.get(predicate).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn outgoing_relations(&self, entity: &str) -> impl Iterator<Item = &String> {
        self.outgoing.get(entity).into_iter().flatten()
    }

    pub fn incoming_relations(&self, entity: &str) -> impl Iterator<Item = &String> {
        self.incoming.get(entity).into_iter().flatten()
    }

    /// Resolve a human label to an entity id (case-insensitive fallback).
    pub fn entity_by_label(&self, label: &str) -> Option<&String> {
        self.label_index.get(&label.to_lowercase())
    }

    pub fn label_of(&self, entity: &str) -> Option<&String> {
        self.schema.label_of(entity)
    }
}
