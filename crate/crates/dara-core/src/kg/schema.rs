//! Schema metadata: relations with descriptions, domains, ranges and
//! mediator flags; classes with descriptions; entity class membership.

use crate::sexpr::SExpr;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SchemaError {
    #[error("cannot read schema file {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid schema document: {0}")]
    Format(#[from] serde_json::Error),
    #[error("relation {relation} refers to unknown class {class}")]
    UnknownClass { relation: String, class: String },
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("unbound atom {0}")]
pub struct UnboundAtom(pub String);

/// What a relation's object position holds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RangeKind {
    Class(String),
    /// Datatype IRI of a literal-valued relation (an "attribute").
    LiteralType(String),
}

#[derive(Debug, Clone)]
pub struct RelationInfo {
    pub description: String,
    pub domain: Option<String>,
    pub range: Option<RangeKind>,
    /// True when the relation's range class is a mediator (CVT) node type.
    pub mediator: bool,
}

impl RelationInfo {
    /// Literal-valued relations are the "attributes" of the baseline action
    /// space.
    pub fn is_attribute(&self) -> bool {
        matches!(self.range, Some(RangeKind::LiteralType(_)))
    }
}

#[derive(Debug, Clone)]
pub struct ClassInfo {
    pub description: String,
    pub mediator: bool,
}

// --- on-disk JSON layout ---

#[derive(Debug, Serialize, Deserialize)]
struct SchemaDoc {
    #[serde(default)]
    relations: BTreeMap<String, RelationDoc>,
    #[serde(default)]
    classes: BTreeMap<String, ClassDoc>,
    #[serde(default)]
    instances: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    labels: BTreeMap<String, String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RelationDoc {
    #[serde(default)]
    description: String,
    #[serde(default)]
    domain: Option<String>,
    /// Class name, or a datatype IRI (anything starting with `http`).
    #[serde(default)]
    range: Option<String>,
    #[serde(default)]
    mediator: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct ClassDoc {
    #[serde(default)]
    description: String,
    #[serde(default)]
    mediator: bool,
}

/// Immutable view of the KG vocabulary.
#[derive(Debug, Clone, Default)]
pub struct SchemaView {
    relations: BTreeMap<String, RelationInfo>,
    classes: BTreeMap<String, ClassInfo>,
    membership: HashMap<String, BTreeSet<String>>,
    instances_by_class: HashMap<String, BTreeSet<String>>,
    labels: BTreeMap<String, String>,
    mediator_classes: HashSet<String>,
    /// Schema items whose description was empty at load time.
    pub warnings: Vec<String>,
}

impl SchemaView {
    pub fn from_json(text: &str) -> Result<Self, SchemaError> {
        let doc: SchemaDoc = serde_json::from_str(text)?;
        let mut view = SchemaView::default();
        for (name, class) in doc.classes {
            if class.description.is_empty() {
                view.warnings.push(format!("class {name} has an empty description"));
            }
            if class.mediator {
                view.mediator_classes.insert(name.clone());
            }
            view.classes.insert(name, ClassInfo { description: class.description, mediator: class.mediator });
        }
        for (name, rel) in doc.relations {
            if rel.description.is_empty() {
                view.warnings.push(format!("relation {name} has an empty description"));
            }
            let range = rel.range.map(|r| {
                if r.starts_with("http") {
                    RangeKind::LiteralType(r)
                } else {
                    RangeKind::Class(r)
                }
            });
            if let Some(domain) = &rel.domain {
                if !view.classes.contains_key(domain) {
                    return Err(SchemaError::UnknownClass { relation: name, class: domain.clone() });
                }
            }
            if let Some(RangeKind::Class(c)) = &range {
                if !view.classes.contains_key(c) {
                    return Err(SchemaError::UnknownClass { relation: name, class: c.clone() });
                }
                if rel.mediator {
                    view.mediator_classes.insert(c.clone());
                }
            }
            view.relations.insert(
                name,
                RelationInfo { description: rel.description, domain: rel.domain, range, mediator: rel.mediator },
            );
        }
        for (entity, classes) in doc.instances {
            for class in &classes {
                view.instances_by_class
                    .entry(class.clone())
                    .or_default()
                    .insert(entity.clone());
            }
            view.membership.insert(entity, classes.into_iter().collect());
        }
        view.labels = doc.labels;
        Ok(view)
    }

    pub fn from_file(path: &Path) -> Result<Self, SchemaError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| SchemaError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    /// True when no relations or classes are declared (for example, when
    /// the vocabulary lives behind a remote endpoint).
    pub fn is_empty(&self) -> bool {
        self.relations.is_empty() && self.classes.is_empty()
    }

    pub fn relation(&self, name: &str) -> Option<&RelationInfo> {
        self.relations.get(name)
    }

    pub fn class(&self, name: &str) -> Option<&ClassInfo> {
        self.classes.get(name)
    }

    pub fn relation_names(&self) -> impl Iterator<Item = &String> {
        self.relations.keys()
    }

    pub fn class_names(&self) -> impl Iterator<Item = &String> {
        self.classes.keys()
    }

    /// Relations whose object is a literal value.
    pub fn attribute_names(&self) -> impl Iterator<Item = &String> {
        self.relations.iter().filter(|(_, info)| info.is_attribute()).map(|(name, _)| name)
    }

    pub fn relation_count(&self) -> usize {
        self.relations.len()
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    pub fn classes_of(&self, entity: &str) -> Option<&BTreeSet<String>> {
        self.membership.get(entity)
    }

    pub fn instances_of(&self, class: &str) -> Option<&BTreeSet<String>> {
        self.instances_by_class.get(class)
    }

    pub fn labels(&self) -> &BTreeMap<String, String> {
        &self.labels
    }

    pub fn label_of(&self, entity: &str) -> Option<&String> {
        self.labels.get(entity)
    }

    /// True when the class is a mediator (CVT) node type, either flagged
    /// directly or marked through a relation that leads into it.
    pub fn is_mediator_class(&self, class: &str) -> bool {
        self.mediator_classes.contains(class)
    }

    /// The class of the subject position of a binary expression, when the
    /// schema can determine it.
    pub fn subject_class(&self, binary: &SExpr) -> Option<&str> {
        match binary {
            SExpr::Relation(r) => self.relations.get(r)?.domain.as_deref(),
            SExpr::Reverse(inner) => self.object_class(inner),
            SExpr::Join(b1, _) => self.subject_class(b1),
            _ => None,
        }
    }

    /// The class of the object position of a binary expression.
    pub fn object_class(&self, binary: &SExpr) -> Option<&str> {
        match binary {
            SExpr::Relation(r) => match self.relations.get(r)?.range.as_ref()? {
                RangeKind::Class(c) => Some(c),
                RangeKind::LiteralType(_) => None,
            },
            SExpr::Reverse(inner) => self.subject_class(inner),
            SExpr::Join(_, b2) => self.object_class(b2),
            _ => None,
        }
    }

    /// Re-resolve atoms against the schema and verify every relation and
    /// class name exists. Set-position names are resolved in order: entity
    /// id pattern, class lookup, relation lookup.
    pub fn bind(&self, expr: &SExpr) -> Result<SExpr, UnboundAtom> {
        match expr {
            SExpr::Entity(_) | SExpr::Literal(_) | SExpr::Ref(_) => Ok(expr.clone()),
            SExpr::Class(name) => {
                if self.classes.contains_key(name) {
                    Ok(expr.clone())
                } else if self.relations.contains_key(name) {
                    Ok(SExpr::Relation(name.clone()))
                } else {
                    Err(UnboundAtom(name.clone()))
                }
            }
            SExpr::Relation(name) => {
                if self.relations.contains_key(name) {
                    Ok(expr.clone())
                } else {
                    Err(UnboundAtom(name.clone()))
                }
            }
            SExpr::Count(a) => Ok(SExpr::Count(Box::new(self.bind(a)?))),
            SExpr::Reverse(a) => Ok(SExpr::Reverse(Box::new(self.bind(a)?))),
            SExpr::And(a, b) => Ok(SExpr::And(Box::new(self.bind(a)?), Box::new(self.bind(b)?))),
            SExpr::Join(a, b) => Ok(SExpr::Join(Box::new(self.bind(a)?), Box::new(self.bind(b)?))),
            SExpr::ArgMax(a, b) => {
                Ok(SExpr::ArgMax(Box::new(self.bind(a)?), Box::new(self.bind(b)?)))
            }
            SExpr::ArgMin(a, b) => {
                Ok(SExpr::ArgMin(Box::new(self.bind(a)?), Box::new(self.bind(b)?)))
            }
            SExpr::Compare(op, a, b) => {
                Ok(SExpr::Compare(*op, Box::new(self.bind(a)?), Box::new(self.bind(b)?)))
            }
        }
    }

    /// Test-support constructor used by fixtures and the synthesizer.
    pub fn build(
        relations: BTreeMap<String, RelationInfo>,
        classes: BTreeMap<String, ClassInfo>,
        membership: HashMap<String, BTreeSet<String>>,
        labels: BTreeMap<String, String>,
    ) -> Self {
        let mut mediator_classes: HashSet<String> = classes
            .iter()
            .filter(|(_, info)| info.mediator)
            .map(|(name, _)| name.clone())
            .collect();
        for info in relations.values() {
            if info.mediator {
                if let Some(RangeKind::Class(c)) = &info.range {
                    mediator_classes.insert(c.clone());
                }
            }
        }
        let mut instances_by_class: HashMap<String, BTreeSet<String>> = HashMap::new();
        for (entity, classes) in &membership {
            for class in classes {
                instances_by_class.entry(class.clone()).or_default().insert(entity.clone());
            }
        }
        SchemaView {
            relations,
            classes,
            membership,
            instances_by_class,
            labels,
            mediator_classes,
            warnings: Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sexpr::parse_sexpr;

    const DOC: &str = r#"{
        "relations": {
            "cvg.musical_game.songs": {
                "description": "songs of the game",
                "domain": "cvg.musical_game",
                "range": "cvg.musical_game_song_relationship",
                "mediator": true
            },
            "cvg.musical_game_song_relationship.song": {
                "description": "the song",
                "domain": "cvg.musical_game_song_relationship",
                "range": "music.song"
            },
            "spaceflight.rocket_engine.dry_mass": {
                "description": "dry mass",
                "domain": "spaceflight.rocket_engine",
                "range": "http://www.w3.org/2001/XMLSchema#float"
            }
        },
        "classes": {
            "cvg.musical_game": {"description": "a musical game"},
            "cvg.musical_game_song_relationship": {"description": "game/song link", "mediator": true},
            "music.song": {"description": "a song"},
            "spaceflight.rocket_engine": {"description": "an engine"}
        },
        "instances": {"m.0dq14": ["cvg.musical_game"]},
        "labels": {"m.0dq14": "Guitar Hero III"}
    }"#;

    #[test]
    fn loads_and_classifies_ranges() {
        let schema = SchemaView::from_json(DOC).unwrap();
        assert!(schema.relation("spaceflight.rocket_engine.dry_mass").unwrap().is_attribute());
        assert!(schema.is_mediator_class("cvg.musical_game_song_relationship"));
        assert_eq!(schema.classes_of("m.0dq14").unwrap().len(), 1);
        assert_eq!(
            schema.attribute_names().collect::<Vec<_>>(),
            vec!["spaceflight.rocket_engine.dry_mass"]
        );
    }

    #[test]
    fn binary_endpoint_classes() {
        let schema = SchemaView::from_json(DOC).unwrap();
        let rel = parse_sexpr("(R cvg.musical_game.songs)").unwrap();
        assert_eq!(schema.subject_class(&rel), Some("cvg.musical_game_song_relationship"));
        assert_eq!(schema.object_class(&rel), Some("cvg.musical_game"));
        let chain = SExpr::join(
            SExpr::relation("cvg.musical_game.songs"),
            SExpr::relation("cvg.musical_game_song_relationship.song"),
        );
        assert_eq!(schema.subject_class(&chain), Some("cvg.musical_game"));
        assert_eq!(schema.object_class(&chain), Some("music.song"));
    }

    #[test]
    fn bind_flags_unknown_names() {
        let schema = SchemaView::from_json(DOC).unwrap();
        let expr = parse_sexpr("(JOIN cvg.musical_game.songs m.0dq14)").unwrap();
        assert!(schema.bind(&expr).is_ok());
        let bad = parse_sexpr("(JOIN no.such.relation m.0dq14)").unwrap();
        assert_eq!(schema.bind(&bad), Err(UnboundAtom("no.such.relation".into())));
        let bad_class = parse_sexpr("(AND not.a.class m.0dq14)").unwrap();
        assert!(schema.bind(&bad_class).is_err());
    }

    #[test]
    fn rejects_dangling_domain() {
        let doc = r#"{"relations": {"a.b.c": {"description": "x", "domain": "ghost"}}, "classes": {}}"#;
        assert!(matches!(
            SchemaView::from_json(doc),
            Err(SchemaError::UnknownClass { .. })
        ));
    }

    #[test]
    fn empty_description_is_a_warning_not_an_error() {
        let doc = r#"{"relations": {"a.b.c": {"description": ""}}, "classes": {}}"#;
        let schema = SchemaView::from_json(doc).unwrap();
        assert_eq!(schema.warnings.len(), 1);
    }
}
