//! Fine-tuning data construction: filtering question/logical-form pairs,
//! emitting decomposition prompts for an external annotation model, and
//! validating returned trajectories.

use crate::agent::{parse_events, parse_trace, Dialect, Profile, TraceEvent};
use crate::eval::DatasetItem;
use crate::kg::{evaluate, KnowledgeGraph, RangeKind, SchemaView};
use crate::sexpr::{
    canonicalize, decompose_by_ops, semantic_equal, substitute_refs, DecomposeError, RefId,
    SExpr, Subtask,
};
use serde::Serialize;
use std::collections::{HashMap, HashSet};
use thiserror::Error;

#[derive(Debug, Clone)]
pub struct FilterPolicy {
    /// Keep only questions with at least two subtasks.
    pub require_complex: bool,
    /// Cap on how many kept items may use any one relation.
    pub max_per_relation: usize,
}

impl Default for FilterPolicy {
    fn default() -> Self {
        FilterPolicy { require_complex: false, max_per_relation: 10 }
    }
}

/// A dataset item admitted to the fine-tuning pool, with the features the
/// filter ranks on.
#[derive(Debug, Clone)]
pub struct TrainingCandidate {
    pub item: DatasetItem,
    pub subtask_count: usize,
    /// Every relation occurrence in the gold form, in tree order.
    pub relations: Vec<String>,
    /// Canonical printed gold form; two paraphrases of one form share it.
    pub dup_key: String,
}

fn relation_multiset(expr: &SExpr) -> Vec<String> {
    let mut out = Vec::new();
    fn walk(expr: &SExpr, out: &mut Vec<String>) {
        match expr {
            SExpr::Relation(name) => out.push(name.clone()),
            SExpr::Entity(_) | SExpr::Class(_) | SExpr::Literal(_) | SExpr::Ref(_) => {}
            SExpr::Count(a) | SExpr::Reverse(a) => walk(a, out),
            SExpr::And(a, b)
            | SExpr::Join(a, b)
            | SExpr::ArgMax(a, b)
            | SExpr::ArgMin(a, b)
            | SExpr::Compare(_, a, b) => {
                walk(a, out);
                walk(b, out);
            }
        }
    }
    walk(expr, &mut out);
    out
}

/// Drop canonical duplicates (first occurrence wins), optionally drop
/// single-subtask questions, and cap per-relation frequency. Applying the
/// filter to its own output changes nothing.
pub fn filter_training_pairs(
    items: &[DatasetItem],
    policy: &FilterPolicy,
    schema: &SchemaView,
) -> Result<Vec<TrainingCandidate>, DecomposeError> {
    let mut seen: HashSet<String> = HashSet::new();
    let mut relation_counts: HashMap<String, usize> = HashMap::new();
    let mut kept = Vec::new();
    for item in items {
        let dup_key = canonicalize(&item.gold_sexpr).to_string();
        if seen.contains(&dup_key) {
            continue;
        }
        let subtasks = decompose_by_ops(&item.gold_sexpr, schema)?;
        if policy.require_complex && subtasks.len() < 2 {
            continue;
        }
        let relations = relation_multiset(&item.gold_sexpr);
        let distinct: HashSet<&String> = relations.iter().collect();
        if distinct
            .iter()
            .any(|r| relation_counts.get(*r).copied().unwrap_or(0) >= policy.max_per_relation)
        {
            continue;
        }
        for r in &distinct {
            *relation_counts.entry((**r).clone()).or_insert(0) += 1;
        }
        seen.insert(dup_key.clone());
        kept.push(TrainingCandidate {
            item: item.clone(),
            subtask_count: subtasks.len(),
            relations,
            dup_key,
        });
    }
    Ok(kept)
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("relation {0} has no description")]
    MissingDescription(String),
    #[error(transparent)]
    Decompose(#[from] DecomposeError),
}

// Print a subtask step for the prompt surface: task refs as `task1`, step
// refs as `task1step2`.
fn print_for_prompt(expr: &SExpr) -> String {
    match expr {
        SExpr::Ref(r) => r.prompt_key(),
        SExpr::Entity(s) | SExpr::Class(s) | SExpr::Relation(s) => s.clone(),
        SExpr::Literal(l) => l.to_string(),
        SExpr::And(a, b) => format!("(AND {} {})", print_for_prompt(a), print_for_prompt(b)),
        SExpr::Count(a) => format!("(COUNT {})", print_for_prompt(a)),
        SExpr::Reverse(a) => format!("(R {})", print_for_prompt(a)),
        SExpr::Join(a, b) => format!("(JOIN {} {})", print_for_prompt(a), print_for_prompt(b)),
        SExpr::ArgMax(a, b) => {
            format!("(ARGMAX {} {})", print_for_prompt(a), print_for_prompt(b))
        }
        SExpr::ArgMin(a, b) => {
            format!("(ARGMIN {} {})", print_for_prompt(a), print_for_prompt(b))
        }
        SExpr::Compare(op, a, b) => format!(
            "({} {} {})",
            op.keyword(),
            print_for_prompt(a),
            print_for_prompt(b)
        ),
    }
}

// Direction of each relation as used in a step, walked in tree order:
// a bare relation in a JOIN is traversed against its arrow (incoming), a
// reversed one along it (outgoing). Attribute relations under comparatives
// and superlatives read as outgoing.
fn relation_usages(expr: &SExpr, out: &mut Vec<(String, bool)>) {
    match expr {
        SExpr::Relation(name) => out.push((name.clone(), false)),
        SExpr::Reverse(inner) => {
            if let SExpr::Relation(name) = inner.as_ref() {
                out.push((name.clone(), true));
            } else {
                relation_usages(inner, out);
            }
        }
        SExpr::Entity(_) | SExpr::Class(_) | SExpr::Literal(_) | SExpr::Ref(_) => {}
        SExpr::Count(a) => relation_usages(a, out),
        SExpr::And(a, b) | SExpr::Join(a, b) => {
            relation_usages(a, out);
            relation_usages(b, out);
        }
        SExpr::ArgMax(a, b) | SExpr::ArgMin(a, b) | SExpr::Compare(_, a, b) => {
            relation_usages(a, out);
            if let SExpr::Relation(name) = b.as_ref() {
                out.push((name.clone(), true));
            } else {
                relation_usages(b, out);
            }
        }
    }
}

/// Render the conversion prompt for one item: the question with its linked
/// entities, the `Task i: Stepj:(...)` block, the numbered relation
/// descriptions, and the closing instruction. Byte-stable.
pub fn build_decomposition_prompt(
    item: &DatasetItem,
    graph: &KnowledgeGraph,
) -> Result<String, PromptError> {
    let subtasks = decompose_by_ops(&item.gold_sexpr, graph.schema())?;
    build_prompt_from_subtasks(item, &subtasks, graph.schema())
}

fn build_prompt_from_subtasks(
    item: &DatasetItem,
    subtasks: &[Subtask],
    schema: &SchemaView,
) -> Result<String, PromptError> {
    let mut prompt = String::new();
    prompt.push_str(
        "You are knowledgeable about Freebase. You need to describe what is the intent of \
         logical forms in the given subtasks and steps. To find the answer to the question '",
    );
    prompt.push_str(&item.question);
    let entities = crate::agent::entity_sentence(&item.entities);
    if !entities.is_empty() {
        prompt.push(' ');
        prompt.push_str(&entities);
    }
    prompt.push_str("', it has the following subtasks.\n");
    prompt.push_str("Note: Some tasks may have multiple steps due to the schemas of the KG.\n");
    for task in subtasks {
        let steps: Vec<String> = task
            .steps
            .iter()
            .enumerate()
            .map(|(j, step)| format!("Step{}:{}", j + 1, print_for_prompt(step)))
            .collect();
        prompt.push_str(&format!("Task {}: {}\n", task.index, steps.join(" ")));
    }
    prompt.push_str(
        "To help you understand the relations used in the above steps, we provide the \
         following descriptions of them. ",
    );
    let mut usages: Vec<(String, bool)> = Vec::new();
    for task in subtasks {
        for step in &task.steps {
            relation_usages(step, &mut usages);
        }
    }
    let mut described: Vec<String> = Vec::new();
    let mut entries: Vec<String> = Vec::new();
    for (name, outgoing) in usages {
        if described.contains(&name) {
            continue;
        }
        let info = schema
            .relation(&name)
            .ok_or_else(|| PromptError::MissingDescription(name.clone()))?;
        if info.description.is_empty() {
            return Err(PromptError::MissingDescription(name.clone()));
        }
        let n = entries.len() + 1;
        let direction = if outgoing { "outgoing" } else { "incoming" };
        let mut entry = format!(
            "{n}. the {direction} relation '{name}', which describes {}.",
            info.description
        );
        let endpoint = if outgoing {
            match &info.range {
                Some(RangeKind::Class(c)) => Some(("tail", c.clone())),
                _ => None,
            }
        } else {
            info.domain.clone().map(|c| ("head", c))
        };
        if let Some((end, class)) = endpoint {
            let class_desc =
                schema.class(&class).map(|c| c.description.clone()).unwrap_or_default();
            entry.push_str(&format!(
                " The type of its {end} entity is '{class}' ({class_desc})."
            ));
        }
        entries.push(entry);
        described.push(name);
    }
    prompt.push_str(&entries.join(" "));
    prompt.push_str("\nPlease describe the intent of the above tasks and steps.\n");
    Ok(prompt)
}

/// Parse the `Task i: Stepj:(...)` lines of a prompt back into subtasks
/// (the projection property used by the tests).
pub fn parse_prompt_tasks(prompt: &str) -> Vec<Subtask> {
    let line_re = regex::Regex::new(r"(?m)^Task (\d+): (.+)$").unwrap();
    let step_re = regex::Regex::new(r"Step\d+:").unwrap();
    let mut subtasks = Vec::new();
    for caps in line_re.captures_iter(prompt) {
        let index: u32 = caps[1].parse().unwrap();
        let body = &caps[2];
        let mut steps = Vec::new();
        let positions: Vec<(usize, usize)> =
            step_re.find_iter(body).map(|m| (m.start(), m.end())).collect();
        for (i, (_, content_start)) in positions.iter().enumerate() {
            let end = positions.get(i + 1).map(|(s, _)| *s).unwrap_or(body.len());
            if let Ok(expr) = crate::sexpr::parse_sexpr(body[*content_start..end].trim()) {
                steps.push(expr);
            }
        }
        if !steps.is_empty() {
            subtasks.push(Subtask { index, steps, description: None });
        }
    }
    subtasks
}

/// The five trajectory checks. Order is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Grammar,
    Ordering,
    Grounding,
    FinalMatch,
    ActionArgs,
}

pub const ALL_CHECKS: [Check; 5] =
    [Check::Grammar, Check::Ordering, Check::Grounding, Check::FinalMatch, Check::ActionArgs];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Passed,
    Failed,
    /// Not runnable because an earlier check failed.
    Skipped,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub check: Check,
    pub status: CheckStatus,
    pub location: Option<String>,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub qid: String,
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.status == CheckStatus::Passed)
    }

    pub fn failed_checks(&self) -> Vec<Check> {
        self.checks
            .iter()
            .filter(|c| c.status == CheckStatus::Failed)
            .map(|c| c.check)
            .collect()
    }
}

fn name_appears(text: &str, name: &str) -> bool {
    let mut from = 0;
    while let Some(pos) = text[from..].find(name) {
        let start = from + pos;
        let end = start + name.len();
        let boundary = |c: Option<char>| {
            c.map(|c| !(c.is_alphanumeric() || c == '_' || c == '.')).unwrap_or(true)
        };
        if boundary(text[..start].chars().last()) && boundary(text[end..].chars().next()) {
            return true;
        }
        from = end;
    }
    false
}

const MIN_ARGS: &[(&str, usize)] = &[
    ("get_relations", 1),
    ("get_relevant_relations", 1),
    ("get_classes", 1),
    ("get_relevant_classes", 1),
    ("get_descriptions", 1),
    ("get_neighbors", 2),
    ("intersection", 2),
    ("get_attributes", 1),
    ("get_relevant_attributes", 1),
    ("argmax", 2),
    ("argmin", 2),
    ("count", 1),
    ("lt", 2),
    ("le", 2),
    ("gt", 2),
    ("ge", 2),
];

/// Run the five static checks over a trajectory text: grammar, index
/// ordering, relation grounding (every relation used in a step-level form
/// appeared in an earlier observation), final-form agreement with gold
/// (semantic equivalence or equal answers on the graph), and action
/// argument well-formedness.
pub fn validate_trajectory(
    trace_text: &str,
    item: &DatasetItem,
    graph: &KnowledgeGraph,
) -> ValidationReport {
    let mut checks: Vec<CheckResult> = Vec::new();
    let events = {
        let parsed = if trace_text.starts_with("Question: ") {
            parse_trace(trace_text, Profile::Dara).map(|t| t.events)
        } else {
            parse_events(trace_text, Dialect::Dara)
        };
        match parsed {
            Ok(events) => {
                checks.push(CheckResult {
                    check: Check::Grammar,
                    status: CheckStatus::Passed,
                    location: None,
                    detail: format!("{} events", events.len()),
                });
                Some(events)
            }
            Err(e) => {
                checks.push(CheckResult {
                    check: Check::Grammar,
                    status: CheckStatus::Failed,
                    location: Some(format!("line {}", e.line)),
                    detail: e.to_string(),
                });
                None
            }
        }
    };
    let Some(events) = events else {
        for check in [Check::Ordering, Check::Grounding, Check::FinalMatch, Check::ActionArgs] {
            checks.push(CheckResult {
                check,
                status: CheckStatus::Skipped,
                location: None,
                detail: "trace did not parse".into(),
            });
        }
        return ValidationReport { qid: item.qid.clone(), checks };
    };

    checks.push(check_ordering(&events));
    checks.push(check_grounding(&events));
    checks.push(check_final(&events, item, graph));
    checks.push(check_action_args(&events));
    ValidationReport { qid: item.qid.clone(), checks }
}

// Tasks and steps must be contiguous from 1; action indices contiguous
// within a step; each observation carries its action's index.
fn check_ordering(events: &[TraceEvent]) -> CheckResult {
    let mut task = 0u32;
    let mut step = 0u32;
    let mut action = 0u32;
    let fail = |location: String, detail: String| CheckResult {
        check: Check::Ordering,
        status: CheckStatus::Failed,
        location: Some(location),
        detail,
    };
    for (i, event) in events.iter().enumerate() {
        let at = format!("event {}", i + 1);
        match event {
            TraceEvent::TaskHeader { task: t, .. } => {
                if *t != task + 1 {
                    return fail(at, format!("task {t} after task {task}"));
                }
                task = *t;
                step = 0;
                action = 0;
            }
            TraceEvent::StepHeader { task: t, step: s } => {
                if *t != task || *s != step + 1 {
                    return fail(at, format!("step {t}.{s} after {task}.{step}"));
                }
                step = *s;
                action = 0;
            }
            TraceEvent::Action { task: t, step: s, index, .. } => {
                let structured = task > 0;
                if structured && (*t != task || *s != step) {
                    return fail(at, format!("action under {t}.{s} while in {task}.{step}"));
                }
                if *index != action + 1 {
                    return fail(at, format!("action index {index} after {action}"));
                }
                action = *index;
            }
            TraceEvent::Obs { index, .. } => {
                if *index != action {
                    return fail(
                        at,
                        format!("observation {index} does not match action {action}"),
                    );
                }
            }
            TraceEvent::StepSexp { task: t, step: s, .. } => {
                if *t != task || *s != step {
                    return fail(at, format!("step form {t}.{s} while in {task}.{step}"));
                }
            }
            TraceEvent::TaskSexp { task: t, .. } => {
                if *t != task {
                    return fail(at, format!("task form {t} while in task {task}"));
                }
            }
            _ => {}
        }
    }
    CheckResult {
        check: Check::Ordering,
        status: CheckStatus::Passed,
        location: None,
        detail: "indices contiguous".into(),
    }
}

fn check_grounding(events: &[TraceEvent]) -> CheckResult {
    let mut observed = String::new();
    for (i, event) in events.iter().enumerate() {
        match event {
            TraceEvent::Obs { text, .. } => {
                observed.push_str(text);
                observed.push('\n');
            }
            TraceEvent::StepSexp { expr, .. } => {
                for relation in &expr.schema_items().relations {
                    if !name_appears(&observed, relation) {
                        return CheckResult {
                            check: Check::Grounding,
                            status: CheckStatus::Failed,
                            location: Some(format!("event {}", i + 1)),
                            detail: format!(
                                "relation {relation} was never observed before use"
                            ),
                        };
                    }
                }
            }
            _ => {}
        }
    }
    CheckResult {
        check: Check::Grounding,
        status: CheckStatus::Passed,
        location: None,
        detail: "every step-level relation appeared in a prior observation".into(),
    }
}

fn check_final(events: &[TraceEvent], item: &DatasetItem, graph: &KnowledgeGraph) -> CheckResult {
    let mut bindings = HashMap::new();
    let mut final_expr = None;
    for event in events {
        match event {
            TraceEvent::StepSexp { task, step, expr } => {
                bindings.insert(RefId::step(*task, *step).key(), expr.clone());
            }
            TraceEvent::TaskSexp { task, expr } => {
                bindings.insert(RefId::task(*task).key(), expr.clone());
            }
            TraceEvent::FinalSexp { expr } => final_expr = Some(expr.clone()),
            _ => {}
        }
    }
    let Some(final_expr) = final_expr else {
        return CheckResult {
            check: Check::FinalMatch,
            status: CheckStatus::Failed,
            location: None,
            detail: "trace has no final form".into(),
        };
    };
    let resolved = match substitute_refs(&final_expr, &bindings) {
        Ok(expr) => expr,
        Err(e) => {
            return CheckResult {
                check: Check::FinalMatch,
                status: CheckStatus::Failed,
                location: None,
                detail: format!("final form does not resolve: {e}"),
            }
        }
    };
    if semantic_equal(&resolved, &item.gold_sexpr) {
        return CheckResult {
            check: Check::FinalMatch,
            status: CheckStatus::Passed,
            location: None,
            detail: "semantically equal to gold".into(),
        };
    }
    let answers = evaluate(&resolved, graph).map(|d| d.answer_strings());
    let gold_answers = evaluate(&item.gold_sexpr, graph).map(|d| d.answer_strings());
    match (answers, gold_answers) {
        (Ok(a), Ok(g)) if a == g => CheckResult {
            check: Check::FinalMatch,
            status: CheckStatus::Passed,
            location: None,
            detail: "answers equal gold answers".into(),
        },
        (Ok(_), Ok(_)) => CheckResult {
            check: Check::FinalMatch,
            status: CheckStatus::Failed,
            location: None,
            detail: "final form answers differently from gold".into(),
        },
        (Err(e), _) => CheckResult {
            check: Check::FinalMatch,
            status: CheckStatus::Failed,
            location: None,
            detail: format!("final form does not evaluate: {e}"),
        },
        (_, Err(e)) => CheckResult {
            check: Check::FinalMatch,
            status: CheckStatus::Failed,
            location: None,
            detail: format!("gold form does not evaluate: {e}"),
        },
    }
}

fn check_action_args(events: &[TraceEvent]) -> CheckResult {
    for (i, event) in events.iter().enumerate() {
        let TraceEvent::Action { name, args, .. } = event else { continue };
        let at = format!("event {}", i + 1);
        let Some((_, min)) = MIN_ARGS.iter().find(|(n, _)| n == name) else {
            return CheckResult {
                check: Check::ActionArgs,
                status: CheckStatus::Failed,
                location: Some(at),
                detail: format!("unknown action '{name}'"),
            };
        };
        if args.len() < *min {
            return CheckResult {
                check: Check::ActionArgs,
                status: CheckStatus::Failed,
                location: Some(at),
                detail: format!("{name} takes at least {min} argument(s), found {}", args.len()),
            };
        }
        for arg in args {
            if arg.starts_with('(') && crate::sexpr::parse_sexpr(arg).is_err() {
                return CheckResult {
                    check: Check::ActionArgs,
                    status: CheckStatus::Failed,
                    location: Some(at),
                    detail: format!("argument '{arg}' is not a valid s-expression"),
                };
            }
        }
    }
    CheckResult {
        check: Check::ActionArgs,
        status: CheckStatus::Passed,
        location: None,
        detail: "all action calls well-formed".into(),
    }
}
