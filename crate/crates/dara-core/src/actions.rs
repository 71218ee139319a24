//! The tool functions an agent may call against a knowledge graph.
//!
//! Two families share one environment:
//!
//! - the schema-exploration functions (`get_relations`, `get_classes`,
//!   `get_relevant_relations`, `get_relevant_classes`, `get_descriptions`)
//!   used by the decomposition-grounding agent, and
//! - the numbered-variable baseline functions (`get_neighbors`,
//!   `intersection`, `get_attributes`, `argmax`/`argmin`, `count`,
//!   `lt`/`le`/`gt`/`ge`, `get_relevant_attributes`).
//!
//! Observation rendering is normative: the exact templates are documented
//! in `docs/observations.md` and re-rendering a payload always reproduces
//! the same text. Fine-tuned and scripted models pattern-match on these
//! strings.

use crate::kg::{evaluate, Denotation, EvalError, KnowledgeGraph, Node, RangeKind};
use crate::retrieval::{rank, RankError, Retriever, ScoredCandidate};
use crate::sexpr::{
    is_entity_id, parse_ref, parse_sexpr, substitute_refs, Literal, ParseError, SExpr, SubstError,
};
use std::collections::{BTreeSet, HashMap};
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ActionError {
    #[error("empty target: {0} denotes no entities")]
    EmptyTarget(String),
    #[error("cannot resolve '{0}' to entities")]
    Resolve(String),
    #[error("unknown schema item '{0}'")]
    UnknownSchemaItem(String),
    #[error("unknown variable {0}")]
    UnknownVariable(String),
    #[error("unknown relation '{0}'")]
    UnknownRelation(String),
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("relation '{0}' is both incoming and outgoing here; add an (outgoing) or (incoming) suffix")]
    AmbiguousDirection(String),
    #[error("unknown action '{0}'")]
    UnknownAction(String),
    #[error("bad arguments: {0}")]
    BadArguments(String),
    #[error(transparent)]
    Rank(#[from] RankError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Subst(#[from] SubstError),
    #[error("argument parse error: {0}")]
    Parse(#[from] ParseError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Outgoing,
    Incoming,
}

impl Direction {
    pub fn label(&self) -> &'static str {
        match self {
            Direction::Outgoing => "outgoing",
            Direction::Incoming => "incoming",
        }
    }
}

/// One entry of a `get_descriptions` observation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DescriptionEntry {
    Relation {
        direction: Direction,
        name: String,
        description: String,
        /// (class name, class description) on the far end of the relation,
        /// when the range/domain is a class.
        endpoint: Option<(String, String)>,
    },
    Class {
        name: String,
        description: String,
    },
}

/// Structured result of an action; `rendered` is a pure function of this.
#[derive(Debug, Clone, PartialEq)]
pub enum Observation {
    Relations { target: String, outgoing: Vec<String>, incoming: Vec<String> },
    RelationList { names: Vec<String> },
    RelevantRelations { names: Vec<String> },
    Classes { target: String, names: Vec<String> },
    RelevantClasses { names: Vec<String> },
    Descriptions { entries: Vec<DescriptionEntry> },
    Variable { id: usize, class: Option<String> },
    CountVariable { id: usize, value: u64 },
    AttributeList { names: Vec<String> },
    RelevantAttributes { names: Vec<String> },
}

fn join_names(names: &[String]) -> String {
    names.join(", ")
}

impl Observation {
    pub fn rendered(&self) -> String {
        match self {
            Observation::Relations { target, outgoing, incoming } => format!(
                "{target} has following relations. The outgoing relations are [{}]. \
                 The incoming relations are [{}].",
                join_names(outgoing),
                join_names(incoming)
            ),
            Observation::RelationList { names } => format!("[{}]", join_names(names)),
            Observation::RelevantRelations { names } => {
                format!("The relevant relations are {}.", join_names(names))
            }
            Observation::Classes { target, names } => {
                format!("{target} has following classes: [{}].", join_names(names))
            }
            Observation::RelevantClasses { names } => {
                format!("The relevant classes are {}.", join_names(names))
            }
            Observation::Descriptions { entries } => {
                let mut parts = Vec::new();
                for (i, entry) in entries.iter().enumerate() {
                    let n = i + 1;
                    match entry {
                        DescriptionEntry::Relation { direction, name, description, endpoint } => {
                            let mut text = format!(
                                "{n}. the {} relation '{name}', which describes {description}.",
                                direction.label()
                            );
                            if let Some((class, class_desc)) = endpoint {
                                let end = match direction {
                                    Direction::Outgoing => "tail",
                                    Direction::Incoming => "head",
                                };
                                text.push_str(&format!(
                                    " The type of its {end} entities is '{class}' ({class_desc})."
                                ));
                            }
                            parts.push(text);
                        }
                        DescriptionEntry::Class { name, description } => {
                            parts.push(format!(
                                "{n}. the class '{name}', which describes {description}."
                            ));
                        }
                    }
                }
                parts.join(" ")
            }
            Observation::Variable { id, class } => match class {
                Some(class) => format!("variable #{id}, which are instances of {class}"),
                None => format!("variable #{id}"),
            },
            Observation::CountVariable { id, value } => {
                format!("variable #{id}, which is the number {value}")
            }
            Observation::AttributeList { names } => format!("[{}]", join_names(names)),
            Observation::RelevantAttributes { names } => {
                format!("The relevant attributes are {}.", join_names(names))
            }
        }
    }
}

/// A numbered variable: its value, the equivalent logical form, and the
/// class reported in observations.
#[derive(Debug, Clone)]
pub struct VariableBinding {
    pub denotation: Denotation,
    pub expr: SExpr,
    pub class: Option<String>,
}

#[derive(Debug, Clone)]
pub struct ActionRecord {
    pub name: String,
    pub args: Vec<String>,
    pub observation: String,
}

/// Per-session mutable state: the graph, the retriever, numbered variables,
/// ref bindings from the trace so far, and the action log.
pub struct ActionEnvironment<'g> {
    graph: &'g KnowledgeGraph,
    retriever: Retriever,
    pub topk: usize,
    question: String,
    task_context: Option<String>,
    variables: Vec<VariableBinding>,
    bindings: HashMap<String, SExpr>,
    log: Vec<ActionRecord>,
}

impl<'g> ActionEnvironment<'g> {
    pub fn new(
        graph: &'g KnowledgeGraph,
        retriever: Retriever,
        topk: usize,
        question: impl Into<String>,
    ) -> Self {
        ActionEnvironment {
            graph,
            retriever,
            topk: topk.max(1),
            question: question.into(),
            task_context: None,
            variables: Vec::new(),
            bindings: HashMap::new(),
            log: Vec::new(),
        }
    }

    pub fn graph(&self) -> &KnowledgeGraph {
        self.graph
    }

    pub fn log(&self) -> &[ActionRecord] {
        &self.log
    }

    pub fn variables(&self) -> &[VariableBinding] {
        &self.variables
    }

    pub fn variable(&self, id: usize) -> Result<&VariableBinding, ActionError> {
        self.variables.get(id).ok_or_else(|| ActionError::UnknownVariable(format!("#{id}")))
    }

    pub fn bindings(&self) -> &HashMap<String, SExpr> {
        &self.bindings
    }

    /// Record a task- or step-level logical form so later refs resolve.
    pub fn bind_ref(&mut self, key: impl Into<String>, expr: SExpr) {
        self.bindings.insert(key.into(), expr);
    }

    /// Task text used to rank schema items; falls back to the question.
    pub fn set_task_context(&mut self, text: Option<String>) {
        self.task_context = text;
    }

    fn ranking_query(&self) -> &str {
        self.task_context.as_deref().unwrap_or(&self.question)
    }

    pub fn record(&mut self, name: &str, args: &[String], observation: String) {
        self.log.push(ActionRecord {
            name: name.to_string(),
            args: args.to_vec(),
            observation,
        });
    }

    /// Rank `names` against the current task text and keep the top `k`.
    fn filter_topk(&self, names: BTreeSet<String>, k: usize) -> Result<Vec<String>, ActionError> {
        if names.is_empty() {
            return Ok(Vec::new());
        }
        let candidates: Vec<String> = names.into_iter().collect();
        let ranked: Vec<ScoredCandidate> =
            rank(self.ranking_query(), &candidates, &self.retriever)?;
        Ok(ranked.into_iter().take(k).map(|c| c.name).collect())
    }

    /// Resolve an action argument to (entity set, equivalent form, class).
    /// Resolution order: variable id, step/task ref, machine id, inline
    /// s-expression, label.
    pub fn resolve_operand(
        &self,
        text: &str,
    ) -> Result<(BTreeSet<String>, SExpr, Option<String>), ActionError> {
        let text = text.trim();
        if let Some(id) = text.strip_prefix('#') {
            let id: usize = id
                .trim()
                .parse()
                .map_err(|_| ActionError::UnknownVariable(text.to_string()))?;
            let var = self.variable(id)?;
            let entities = match &var.denotation {
                Denotation::Set(nodes) => entity_ids(nodes),
                _ => {
                    return Err(ActionError::TypeMismatch(format!(
                        "variable #{id} is not an entity set"
                    )))
                }
            };
            return Ok((entities, var.expr.clone(), var.class.clone()));
        }
        if let Some(r) = parse_ref(text) {
            let resolved = substitute_refs(&SExpr::Ref(r), &self.bindings)?;
            let value = evaluate(&resolved, self.graph)?;
            let Denotation::Set(nodes) = value else {
                return Err(ActionError::TypeMismatch(format!("{text} is not an entity set")));
            };
            return Ok((entity_ids(&nodes), resolved, None));
        }
        if is_entity_id(text) {
            return Ok((
                [text.to_string()].into(),
                SExpr::entity(text),
                self.graph
                    .schema()
                    .classes_of(text)
                    .and_then(|cs| cs.iter().next().cloned()),
            ));
        }
        if text.starts_with('(') {
            let expr = parse_sexpr(text)?;
            let resolved = substitute_refs(&expr, &self.bindings)?;
            let value = evaluate(&resolved, self.graph)?;
            let Denotation::Set(nodes) = value else {
                return Err(ActionError::TypeMismatch(format!("{text} is not an entity set")));
            };
            return Ok((entity_ids(&nodes), resolved, None));
        }
        if let Some(id) = self.graph.entity_by_label(text) {
            let class = self
                .graph
                .schema()
                .classes_of(id)
                .and_then(|cs| cs.iter().next().cloned());
            return Ok(([id.clone()].into(), SExpr::entity(id.clone()), class));
        }
        Err(ActionError::Resolve(text.to_string()))
    }

    fn resolve_nonempty(
        &self,
        text: &str,
    ) -> Result<(BTreeSet<String>, SExpr, Option<String>), ActionError> {
        let resolved = self.resolve_operand(text)?;
        if resolved.0.is_empty() {
            Err(ActionError::EmptyTarget(text.to_string()))
        } else {
            Ok(resolved)
        }
    }

    // --- schema-exploration actions ---

    /// 1-hop relations of the target's entity set, each direction ranked
    /// against the task text and truncated to `k` independently.
    pub fn get_relations(&self, target: &str, k: usize) -> Result<Observation, ActionError> {
        let (entities, _, _) = self.resolve_nonempty(target)?;
        let mut outgoing = BTreeSet::new();
        let mut incoming = BTreeSet::new();
        for entity in &entities {
            outgoing.extend(self.graph.outgoing_relations(entity).cloned());
            incoming.extend(self.graph.incoming_relations(entity).cloned());
        }
        Ok(Observation::Relations {
            target: target.trim().to_string(),
            outgoing: self.filter_topk(outgoing, k)?,
            incoming: self.filter_topk(incoming, k)?,
        })
    }

    /// Top-k relations of the whole vocabulary for a task without entities.
    pub fn get_relevant_relations(&self, task: &str, k: usize) -> Result<Observation, ActionError> {
        let names: Vec<String> = self.graph.schema().relation_names().cloned().collect();
        let ranked = rank(task, &names, &self.retriever)?;
        Ok(Observation::RelevantRelations {
            names: ranked.into_iter().take(k).map(|c| c.name).collect(),
        })
    }

    pub fn get_classes(&self, target: &str, k: usize) -> Result<Observation, ActionError> {
        let (entities, _, _) = self.resolve_nonempty(target)?;
        let mut names = BTreeSet::new();
        for entity in &entities {
            if let Some(classes) = self.graph.schema().classes_of(entity) {
                names.extend(classes.iter().cloned());
            }
        }
        Ok(Observation::Classes {
            target: target.trim().to_string(),
            names: self.filter_topk(names, k)?,
        })
    }

    pub fn get_relevant_classes(&self, task: &str, k: usize) -> Result<Observation, ActionError> {
        let names: Vec<String> = self.graph.schema().class_names().cloned().collect();
        let ranked = rank(task, &names, &self.retriever)?;
        Ok(Observation::RelevantClasses {
            names: ranked.into_iter().take(k).map(|c| c.name).collect(),
        })
    }

    /// Descriptions of schema items, each argument `name` or
    /// `name (outgoing|incoming)`.
    pub fn get_descriptions(&self, items: &[String]) -> Result<Observation, ActionError> {
        if items.is_empty() {
            return Err(ActionError::BadArguments(
                "get_descriptions needs at least one item".into(),
            ));
        }
        let schema = self.graph.schema();
        let mut entries = Vec::new();
        for item in items {
            let (name, direction) = split_direction(item);
            if let Some(info) = schema.relation(name) {
                let direction = direction.unwrap_or(Direction::Outgoing);
                let endpoint_class = match direction {
                    Direction::Outgoing => match &info.range {
                        Some(RangeKind::Class(c)) => Some(c.clone()),
                        _ => None,
                    },
                    Direction::Incoming => info.domain.clone(),
                };
                let endpoint = endpoint_class.map(|c| {
                    let desc = schema
                        .class(&c)
                        .map(|i| i.description.clone())
                        .unwrap_or_default();
                    (c, desc)
                });
                entries.push(DescriptionEntry::Relation {
                    direction,
                    name: name.to_string(),
                    description: info.description.clone(),
                    endpoint,
                });
            } else if let Some(info) = schema.class(name) {
                entries.push(DescriptionEntry::Class {
                    name: name.to_string(),
                    description: info.description.clone(),
                });
            } else {
                return Err(ActionError::UnknownSchemaItem(name.to_string()));
            }
        }
        Ok(Observation::Descriptions { entries })
    }

    // --- numbered-variable baseline actions ---

    /// All 1-hop relations of a variable, both directions merged, ranked and
    /// truncated.
    pub fn baseline_get_relations(
        &self,
        target: &str,
        k: usize,
    ) -> Result<Observation, ActionError> {
        let (entities, _, _) = self.resolve_nonempty(target)?;
        let mut names = BTreeSet::new();
        for entity in &entities {
            names.extend(self.graph.outgoing_relations(entity).cloned());
            names.extend(self.graph.incoming_relations(entity).cloned());
        }
        Ok(Observation::RelationList { names: self.filter_topk(names, k)? })
    }

    pub fn get_neighbors(
        &mut self,
        target: &str,
        relation: &str,
    ) -> Result<Observation, ActionError> {
        let (entities, expr, _) = self.resolve_nonempty(target)?;
        let (name, forced) = split_direction(relation.trim());
        let info = self
            .graph
            .schema()
            .relation(name)
            .ok_or_else(|| ActionError::UnknownRelation(name.to_string()))?;
        let direction = match forced {
            Some(d) => d,
            None => {
                let out =
                    entities.iter().any(|e| self.graph.outgoing_relations(e).any(|r| r == name));
                let inc =
                    entities.iter().any(|e| self.graph.incoming_relations(e).any(|r| r == name));
                match (out, inc) {
                    (true, true) => return Err(ActionError::AmbiguousDirection(name.to_string())),
                    (false, true) => Direction::Incoming,
                    // Nothing matches either way: default to outgoing, the
                    // result is empty regardless.
                    _ => Direction::Outgoing,
                }
            }
        };
        let equivalent = match direction {
            Direction::Outgoing => SExpr::join(SExpr::reverse(SExpr::relation(name)), expr),
            Direction::Incoming => SExpr::join(SExpr::relation(name), expr),
        };
        let class = match direction {
            Direction::Outgoing => match &info.range {
                Some(RangeKind::Class(c)) => Some(c.clone()),
                _ => None,
            },
            Direction::Incoming => info.domain.clone(),
        };
        let denotation = evaluate(&equivalent, self.graph)?;
        Ok(self.push_variable(denotation, equivalent, class))
    }

    pub fn intersection(&mut self, a: &str, b: &str) -> Result<Observation, ActionError> {
        let (_, expr_a, class_a) = self.resolve_operand(a)?;
        let (_, expr_b, class_b) = self.resolve_operand(b)?;
        if let (Some(ca), Some(cb)) = (&class_a, &class_b) {
            if ca != cb {
                return Err(ActionError::TypeMismatch(format!(
                    "intersection of different types: {ca} vs {cb}"
                )));
            }
        }
        let equivalent = SExpr::and(expr_a, expr_b);
        let denotation = evaluate(&equivalent, self.graph)?;
        let class = class_a.or(class_b);
        Ok(self.push_variable(denotation, equivalent, class))
    }

    /// Literal-valued relations reachable from the target's entities.
    pub fn get_attributes(&self, target: &str, k: usize) -> Result<Observation, ActionError> {
        let (entities, _, _) = self.resolve_nonempty(target)?;
        let schema = self.graph.schema();
        let mut names = BTreeSet::new();
        for entity in &entities {
            for relation in self.graph.outgoing_relations(entity) {
                if schema.relation(relation).map(|i| i.is_attribute()).unwrap_or(false) {
                    names.insert(relation.clone());
                }
            }
        }
        Ok(Observation::AttributeList { names: self.filter_topk(names, k)? })
    }

    pub fn get_relevant_attributes(
        &self,
        task: &str,
        k: usize,
    ) -> Result<Observation, ActionError> {
        let names: Vec<String> = self.graph.schema().attribute_names().cloned().collect();
        if names.is_empty() {
            return Ok(Observation::RelevantAttributes { names: Vec::new() });
        }
        let ranked = rank(task, &names, &self.retriever)?;
        Ok(Observation::RelevantAttributes {
            names: ranked.into_iter().take(k).map(|c| c.name).collect(),
        })
    }

    pub fn superlative(
        &mut self,
        target: &str,
        attribute: &str,
        maximize: bool,
    ) -> Result<Observation, ActionError> {
        let (_, expr, class) = self.resolve_operand(target)?;
        let attr = attribute.trim();
        let info = self
            .graph
            .schema()
            .relation(attr)
            .ok_or_else(|| ActionError::UnknownRelation(attr.to_string()))?;
        let equivalent = if maximize {
            SExpr::ArgMax(Box::new(expr), Box::new(SExpr::relation(attr)))
        } else {
            SExpr::ArgMin(Box::new(expr), Box::new(SExpr::relation(attr)))
        };
        let denotation = evaluate(&equivalent, self.graph)?;
        let class = class.or_else(|| info.domain.clone());
        Ok(self.push_variable(denotation, equivalent, class))
    }

    pub fn count(&mut self, target: &str) -> Result<Observation, ActionError> {
        let (_, expr, _) = self.resolve_operand(target)?;
        let equivalent = SExpr::count(expr);
        let denotation = evaluate(&equivalent, self.graph)?;
        let Denotation::Count(value) = denotation else {
            return Err(ActionError::TypeMismatch("count needs an entity set".into()));
        };
        let id = self.variables.len();
        self.variables.push(VariableBinding {
            denotation: Denotation::Count(value),
            expr: equivalent,
            class: None,
        });
        Ok(Observation::CountVariable { id, value })
    }

    pub fn comparative(
        &mut self,
        op: crate::sexpr::CmpOp,
        attribute: &str,
        literal: &str,
    ) -> Result<Observation, ActionError> {
        let attr = attribute.trim();
        let info = self
            .graph
            .schema()
            .relation(attr)
            .ok_or_else(|| ActionError::UnknownRelation(attr.to_string()))?;
        let Some((lexical, datatype)) = literal.trim().split_once("^^") else {
            return Err(ActionError::BadArguments(format!(
                "expected lexical^^datatype literal, found '{literal}'"
            )));
        };
        let bound = Literal::new(lexical, datatype);
        if !bound.is_numeric() {
            return Err(ActionError::BadArguments(format!(
                "comparative needs a numeric literal, found '{bound}'"
            )));
        }
        let equivalent = SExpr::compare(op, SExpr::relation(attr), bound);
        let denotation = evaluate(&equivalent, self.graph)?;
        Ok(self.push_variable(denotation, equivalent, info.domain.clone()))
    }

    fn push_variable(
        &mut self,
        denotation: Denotation,
        expr: SExpr,
        class: Option<String>,
    ) -> Observation {
        let id = self.variables.len();
        self.variables.push(VariableBinding { denotation, expr, class: class.clone() });
        Observation::Variable { id, class }
    }
}

fn entity_ids(nodes: &BTreeSet<Node>) -> BTreeSet<String> {
    nodes.iter().filter_map(|n| n.as_entity().map(str::to_string)).collect()
}

/// Split `name (outgoing)` / `name (incoming)` into name and direction.
fn split_direction(item: &str) -> (&str, Option<Direction>) {
    let item = item.trim();
    if let Some(name) = item.strip_suffix("(outgoing)") {
        (name.trim(), Some(Direction::Outgoing))
    } else if let Some(name) = item.strip_suffix("(incoming)") {
        (name.trim(), Some(Direction::Incoming))
    } else {
        (item, None)
    }
}

/// Optional trailing integer argument (`get_relations(m.x, 5)`).
fn optional_topk(args: &[String], from: usize, default: usize) -> Result<usize, ActionError> {
    match args.get(from) {
        None => Ok(default),
        Some(text) => text
            .trim()
            .parse::<usize>()
            .map_err(|_| ActionError::BadArguments(format!("expected an integer, found '{text}'")))
            .map(|k| k.max(1)),
    }
}

fn require_args(name: &str, args: &[String], at_least: usize) -> Result<(), ActionError> {
    if args.len() < at_least {
        Err(ActionError::BadArguments(format!(
            "{name} takes at least {at_least} argument(s), found {}",
            args.len()
        )))
    } else {
        Ok(())
    }
}

/// Dispatch one parsed action call. Used by every agent profile; unknown
/// names and argument problems surface as errors for the caller to put in
/// the observation slot.
pub fn execute_action(
    env: &mut ActionEnvironment<'_>,
    name: &str,
    args: &[String],
) -> Result<Observation, ActionError> {
    let k = env.topk;
    match name {
        "get_relations" => {
            require_args(name, args, 1)?;
            env.get_relations(&args[0], optional_topk(args, 1, k)?)
        }
        "get_relevant_relations" => {
            require_args(name, args, 1)?;
            env.get_relevant_relations(&args[0], optional_topk(args, 1, k)?)
        }
        "get_classes" => {
            require_args(name, args, 1)?;
            env.get_classes(&args[0], optional_topk(args, 1, k)?)
        }
        "get_relevant_classes" => {
            require_args(name, args, 1)?;
            env.get_relevant_classes(&args[0], optional_topk(args, 1, k)?)
        }
        "get_descriptions" => {
            require_args(name, args, 1)?;
            env.get_descriptions(args)
        }
        "get_neighbors" => {
            require_args(name, args, 2)?;
            env.get_neighbors(&args[0], &args[1])
        }
        "intersection" => {
            require_args(name, args, 2)?;
            env.intersection(&args[0], &args[1])
        }
        "get_attributes" => {
            require_args(name, args, 1)?;
            env.get_attributes(&args[0], optional_topk(args, 1, k)?)
        }
        "get_relevant_attributes" => {
            require_args(name, args, 1)?;
            env.get_relevant_attributes(&args[0], optional_topk(args, 1, k)?)
        }
        "argmax" => {
            require_args(name, args, 2)?;
            env.superlative(&args[0], &args[1], true)
        }
        "argmin" => {
            require_args(name, args, 2)?;
            env.superlative(&args[0], &args[1], false)
        }
        "count" => {
            require_args(name, args, 1)?;
            env.count(&args[0])
        }
        "lt" | "le" | "gt" | "ge" => {
            require_args(name, args, 2)?;
            let op = match name {
                "lt" => crate::sexpr::CmpOp::Lt,
                "le" => crate::sexpr::CmpOp::Le,
                "gt" => crate::sexpr::CmpOp::Gt,
                _ => crate::sexpr::CmpOp::Ge,
            };
            env.comparative(op, &args[0], &args[1])
        }
        other => Err(ActionError::UnknownAction(other.to_string())),
    }
}

/// Baseline-profile variant: `get_relations` returns the merged bracket
/// list instead of the two-direction rendering.
pub fn execute_baseline_action(
    env: &mut ActionEnvironment<'_>,
    name: &str,
    args: &[String],
) -> Result<Observation, ActionError> {
    if name == "get_relations" {
        require_args(name, args, 1)?;
        let k = env.topk;
        env.baseline_get_relations(&args[0], optional_topk(args, 1, k)?)
    } else {
        execute_action(env, name, args)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::SchemaView;
    use crate::kg::Triple;
    use crate::sexpr::print_sexpr;

    const FLOAT: &str = "http://www.w3.org/2001/XMLSchema#float";

    fn graph() -> KnowledgeGraph {
        let schema = SchemaView::from_json(
            r#"{
            "relations": {
                "astronomy.comet.comet_group": {
                    "description": "the group of this comet",
                    "domain": "astronomy.comet", "range": "astronomy.comet_group"},
                "astronomy.star_system_body.star_system": {
                    "description": "the star system",
                    "domain": "astronomy.star_system_body", "range": "astronomy.star_system"},
                "spaceflight.rocket_engine.dry_mass": {
                    "description": "the dry mass of the engine",
                    "domain": "spaceflight.bipropellant_rocket_engine",
                    "range": "http://www.w3.org/2001/XMLSchema#float"},
                "spaceflight.rocket_engine_fuel.rocket_engines": {
                    "description": "engines using this fuel",
                    "domain": "spaceflight.rocket_engine_fuel",
                    "range": "spaceflight.bipropellant_rocket_engine"}
            },
            "classes": {
                "astronomy.comet": {"description": "a comet"},
                "astronomy.comet_group": {"description": "a comet group"},
                "astronomy.star_system_body": {"description": "a body"},
                "astronomy.star_system": {"description": "a system"},
                "spaceflight.rocket_engine_fuel": {"description": "a fuel"},
                "spaceflight.bipropellant_rocket_engine": {"description": "an engine"}
            },
            "instances": {
                "m.0595vt": ["astronomy.comet", "astronomy.star_system_body"],
                "m.0c3mg": ["astronomy.comet_group"],
                "m.017q1y": ["spaceflight.rocket_engine_fuel"],
                "m.e1": ["spaceflight.bipropellant_rocket_engine"],
                "m.e2": ["spaceflight.bipropellant_rocket_engine"],
                "m.e3": ["spaceflight.bipropellant_rocket_engine"]
            },
            "labels": {"m.0595vt": "great comet of 1843",
                       "m.017q1y": "Unsymmetrical dimethylhydrazine"}
        }"#,
        )
        .unwrap();
        let lit = |v: &str| Node::Literal(Literal::new(v, FLOAT));
        let rel = "spaceflight.rocket_engine_fuel.rocket_engines";
        let mass = "spaceflight.rocket_engine.dry_mass";
        let triples = vec![
            Triple {
                subject: "m.0595vt".into(),
                predicate: "astronomy.comet.comet_group".into(),
                object: Node::entity("m.0c3mg"),
            },
            Triple { subject: "m.017q1y".into(), predicate: rel.into(), object: Node::entity("m.e1") },
            Triple { subject: "m.017q1y".into(), predicate: rel.into(), object: Node::entity("m.e2") },
            Triple { subject: "m.017q1y".into(), predicate: rel.into(), object: Node::entity("m.e3") },
            Triple { subject: "m.e1".into(), predicate: mass.into(), object: lit("900.0") },
            Triple { subject: "m.e2".into(), predicate: mass.into(), object: lit("980.0") },
            Triple { subject: "m.e3".into(), predicate: mass.into(), object: lit("1000.0") },
        ];
        KnowledgeGraph::new(triples, schema).unwrap()
    }

    fn env(graph: &KnowledgeGraph) -> ActionEnvironment<'_> {
        ActionEnvironment::new(graph, Retriever::Lexical, 5, "test question")
    }

    #[test]
    fn get_relations_separates_directions() {
        let g = graph();
        let e = env(&g);
        let obs = e.get_relations("m.0595vt", 5).unwrap();
        match &obs {
            Observation::Relations { outgoing, incoming, .. } => {
                assert!(outgoing.contains(&"astronomy.comet.comet_group".to_string()));
                assert!(incoming.is_empty());
            }
            other => panic!("unexpected observation {other:?}"),
        }
        assert!(obs.rendered().contains("The incoming relations are []."));
    }

    #[test]
    fn get_relations_unions_over_entity_sets() {
        let g = graph();
        let mut e = env(&g);
        e.bind_ref(
            "s-exp-1",
            parse_sexpr("(JOIN (R spaceflight.rocket_engine_fuel.rocket_engines) m.017q1y)")
                .unwrap(),
        );
        let obs = e.get_relations("s-exp-1", 5).unwrap();
        match obs {
            Observation::Relations { outgoing, .. } => {
                assert_eq!(outgoing, vec!["spaceflight.rocket_engine.dry_mass".to_string()]);
            }
            other => panic!("unexpected observation {other:?}"),
        }
    }

    #[test]
    fn empty_target_is_an_error() {
        let g = graph();
        let e = env(&g);
        assert!(matches!(
            e.get_relations("(JOIN astronomy.comet.comet_group m.017q1y)", 5),
            Err(ActionError::EmptyTarget(_))
        ));
    }

    #[test]
    fn relevant_relations_rank_the_whole_vocabulary() {
        let g = graph();
        let e = env(&g);
        let obs = e
            .get_relevant_relations(
                "Find bi-propellant rocket engines with a dry mass less than 980.0.",
                5,
            )
            .unwrap();
        match &obs {
            Observation::RelevantRelations { names } => {
                assert!(names.contains(&"spaceflight.rocket_engine.dry_mass".to_string()));
                assert_eq!(names.len(), 4);
            }
            other => panic!("unexpected observation {other:?}"),
        }
        match e.get_relevant_relations("anything", 10).unwrap() {
            Observation::RelevantRelations { names } => assert_eq!(names.len(), 4),
            _ => unreachable!(),
        }
    }

    #[test]
    fn descriptions_render_direction_and_endpoint_type() {
        let g = graph();
        let e = env(&g);
        let obs = e
            .get_descriptions(&["astronomy.comet.comet_group (outgoing)".to_string()])
            .unwrap();
        assert_eq!(
            obs.rendered(),
            "1. the outgoing relation 'astronomy.comet.comet_group', which describes \
             the group of this comet. The type of its tail entities is 'astronomy.comet_group' \
             (a comet group)."
        );
        assert!(matches!(
            e.get_descriptions(&["no.such.item".to_string()]),
            Err(ActionError::UnknownSchemaItem(_))
        ));
    }

    #[test]
    fn get_neighbors_by_label_binds_a_variable() {
        let g = graph();
        let mut e = env(&g);
        let obs = e.get_neighbors("great comet of 1843", "astronomy.comet.comet_group").unwrap();
        assert_eq!(obs.rendered(), "variable #0, which are instances of astronomy.comet_group");
        assert_eq!(
            print_sexpr(&e.variable(0).unwrap().expr),
            "(JOIN (R astronomy.comet.comet_group) m.0595vt)"
        );
    }

    #[test]
    fn baseline_actions_mirror_table_semantics() {
        let g = graph();
        let mut e = env(&g);
        e.get_neighbors("m.017q1y", "spaceflight.rocket_engine_fuel.rocket_engines").unwrap();
        let obs = e
            .comparative(
                crate::sexpr::CmpOp::Lt,
                "spaceflight.rocket_engine.dry_mass",
                "980.0^^http://www.w3.org/2001/XMLSchema#float",
            )
            .unwrap();
        assert_eq!(
            obs.rendered(),
            "variable #1, which are instances of spaceflight.bipropellant_rocket_engine"
        );
        let obs = e.intersection("#0", "#1").unwrap();
        assert_eq!(
            obs.rendered(),
            "variable #2, which are instances of spaceflight.bipropellant_rocket_engine"
        );
        let Denotation::Set(nodes) = &e.variable(2).unwrap().denotation else { panic!() };
        assert_eq!(entity_ids(nodes), BTreeSet::from(["m.e1".to_string()]));
        let obs = e.count("#2").unwrap();
        assert_eq!(obs.rendered(), "variable #3, which is the number 1");
    }

    #[test]
    fn intersection_of_a_set_with_itself_is_idempotent() {
        let g = graph();
        let mut e = env(&g);
        e.get_neighbors("m.017q1y", "spaceflight.rocket_engine_fuel.rocket_engines").unwrap();
        e.intersection("#0", "#0").unwrap();
        assert_eq!(e.variable(1).unwrap().denotation, e.variable(0).unwrap().denotation);
    }

    #[test]
    fn intersection_across_classes_is_a_type_error() {
        let g = graph();
        let mut e = env(&g);
        e.get_neighbors("m.0595vt", "astronomy.comet.comet_group").unwrap();
        e.get_neighbors("m.017q1y", "spaceflight.rocket_engine_fuel.rocket_engines").unwrap();
        assert!(matches!(e.intersection("#0", "#1"), Err(ActionError::TypeMismatch(_))));
    }

    #[test]
    fn unknown_variable_and_relation_errors() {
        let g = graph();
        let mut e = env(&g);
        assert!(matches!(e.count("#0"), Err(ActionError::UnknownVariable(_))));
        assert!(matches!(
            e.get_neighbors("m.0595vt", "no.such.relation"),
            Err(ActionError::UnknownRelation(_))
        ));
    }

    #[test]
    fn argmax_over_variable() {
        let g = graph();
        let mut e = env(&g);
        e.get_neighbors("m.017q1y", "spaceflight.rocket_engine_fuel.rocket_engines").unwrap();
        e.superlative("#0", "spaceflight.rocket_engine.dry_mass", true).unwrap();
        let Denotation::Set(nodes) = &e.variable(1).unwrap().denotation else { panic!() };
        assert_eq!(entity_ids(nodes), BTreeSet::from(["m.e3".to_string()]));
    }

    #[test]
    fn get_attributes_lists_literal_valued_relations() {
        let g = graph();
        let mut e = env(&g);
        e.get_neighbors("m.017q1y", "spaceflight.rocket_engine_fuel.rocket_engines").unwrap();
        let obs = e.get_attributes("#0", 5).unwrap();
        assert_eq!(obs.rendered(), "[spaceflight.rocket_engine.dry_mass]");
    }

    #[test]
    fn dispatch_handles_unknown_action_and_arity() {
        let g = graph();
        let mut e = env(&g);
        assert!(matches!(
            execute_action(&mut e, "fly_to_moon", &[]),
            Err(ActionError::UnknownAction(_))
        ));
        assert!(matches!(
            execute_action(&mut e, "get_neighbors", &["m.0595vt".to_string()]),
            Err(ActionError::BadArguments(_))
        ));
    }
}
