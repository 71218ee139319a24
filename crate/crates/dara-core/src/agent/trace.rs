//! Structured reasoning traces and their line-oriented text form.
//!
//! Three marker dialects share one event model: the fine-tuned
//! decomposition format (`# Task` / `## Step` / `### Action` / `### Obs`),
//! its in-context variant (`### Observation`, `# Final answer:#id`), and
//! the baseline format (`Thought:` / `Action:` / `Observation:` /
//! `Final Answer: #id`).

use crate::sexpr::{parse_sexpr, print_sexpr, SExpr};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::OnceLock;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    Dara,
    DaraIcl,
    Agentbench,
}

impl Profile {
    pub fn dialect(&self) -> Dialect {
        match self {
            Profile::Dara => Dialect::Dara,
            Profile::DaraIcl => Dialect::DaraIcl,
            Profile::Agentbench => Dialect::Agentbench,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Profile::Dara => "dara",
            Profile::DaraIcl => "dara_icl",
            Profile::Agentbench => "agentbench",
        }
    }

    pub fn from_name(name: &str) -> Option<Profile> {
        match name {
            "dara" => Some(Profile::Dara),
            "dara_icl" => Some(Profile::DaraIcl),
            "agentbench" => Some(Profile::Agentbench),
            _ => None,
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dialect {
    Dara,
    DaraIcl,
    Agentbench,
}

impl Dialect {
    /// Stop sequences that cut generation right before an observation.
    pub fn stop_sequences(&self) -> Vec<String> {
        match self {
            Dialect::Dara => vec!["### Obs".into()],
            Dialect::DaraIcl => vec!["### Observation".into()],
            Dialect::Agentbench => vec!["Observation:".into()],
        }
    }

    /// Model-side markers a scripted replay resumes at after a recorded
    /// observation.
    pub fn resume_markers(&self) -> Vec<&'static str> {
        match self {
            Dialect::Dara | Dialect::DaraIcl => vec![
                "### Thought",
                "### Action",
                "### S-exp-",
                "### Error",
                "## S-exp-",
                "## Step",
                "# Task",
                "# Final",
            ],
            Dialect::Agentbench => vec!["Thought:", "Action:", "Final Answer:", "Error:"],
        }
    }

    fn obs_marker(&self) -> &'static str {
        match self {
            Dialect::Dara => "Obs",
            Dialect::DaraIcl => "Observation",
            Dialect::Agentbench => unreachable!("agentbench uses line markers"),
        }
    }
}

/// Why a trace ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Completed,
    BudgetExhausted,
    ParseFailure,
    ActionError,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Outcome::Completed => "completed",
            Outcome::BudgetExhausted => "budget_exhausted",
            Outcome::ParseFailure => "parse_failure",
            Outcome::ActionError => "action_error",
        };
        f.write_str(s)
    }
}

/// One event of a reasoning trajectory. Baseline-profile events carry
/// `task = 0, step = 0` and a running action index.
#[derive(Debug, Clone, PartialEq)]
pub enum TraceEvent {
    TaskHeader { task: u32, text: String },
    StepHeader { task: u32, step: u32 },
    Action { task: u32, step: u32, index: u32, name: String, args: Vec<String> },
    Obs { task: u32, step: u32, index: u32, text: String },
    Thought { task: u32, step: u32, index: u32, text: String },
    StepSexp { task: u32, step: u32, expr: SExpr },
    TaskSexp { task: u32, expr: SExpr },
    FinalSexp { expr: SExpr },
    FinalAnswerVar { id: usize },
    Error { text: String },
}

#[derive(Debug, Clone)]
pub struct ReasoningTrace {
    pub question: String,
    /// (machine id, label) pairs from the golden entity linker.
    pub entities: Vec<(String, String)>,
    pub events: Vec<TraceEvent>,
    pub outcome: Outcome,
}

impl ReasoningTrace {
    pub fn new(question: impl Into<String>, entities: Vec<(String, String)>) -> Self {
        ReasoningTrace {
            question: question.into(),
            entities,
            events: Vec::new(),
            outcome: Outcome::BudgetExhausted,
        }
    }

    /// The raw final form, when the trace completed with one.
    pub fn final_sexpr(&self) -> Option<&SExpr> {
        self.events.iter().rev().find_map(|e| match e {
            TraceEvent::FinalSexp { expr } => Some(expr),
            _ => None,
        })
    }

    /// Task- and step-level bindings accumulated in the trace
    /// (`s-exp-i` and `s-exp-i.j`), for splicing into the final form.
    pub fn ref_bindings(&self) -> std::collections::HashMap<String, SExpr> {
        let mut bindings = std::collections::HashMap::new();
        for event in &self.events {
            match event {
                TraceEvent::StepSexp { task, step, expr } => {
                    bindings.insert(format!("s-exp-{task}.{step}"), expr.clone());
                }
                TraceEvent::TaskSexp { task, expr } => {
                    bindings.insert(format!("s-exp-{task}"), expr.clone());
                }
                _ => {}
            }
        }
        bindings
    }

    /// The ref-free final form (final s-exp with every task/step reference
    /// spliced in).
    pub fn resolved_final(&self) -> Option<SExpr> {
        let expr = self.final_sexpr()?;
        crate::sexpr::substitute_refs(expr, &self.ref_bindings()).ok()
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("grammar error at line {line}: expected {expected}")]
pub struct GrammarError {
    pub line: usize,
    pub expected: String,
}

fn line_of(text: &str, byte: usize) -> usize {
    text[..byte.min(text.len())].bytes().filter(|b| *b == b'\n').count() + 1
}

/// Split `name(arg, arg)` respecting nested parentheses.
pub fn parse_call(text: &str) -> Option<(String, Vec<String>)> {
    let text = text.trim().trim_end_matches('.').trim();
    let open = text.find('(')?;
    let name = text[..open].trim().to_string();
    if name.is_empty() || name.contains(char::is_whitespace) {
        return None;
    }
    let mut depth = 0usize;
    let mut close = None;
    for (i, c) in text.char_indices().skip(open) {
        match c {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth == 0 {
                    close = Some(i);
                    break;
                }
            }
            _ => {}
        }
    }
    let close = close?;
    let body = &text[open + 1..close];
    let mut args = Vec::new();
    let mut depth = 0usize;
    let mut start = 0usize;
    for (i, c) in body.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            ',' if depth == 0 => {
                args.push(body[start..i].trim().to_string());
                start = i + 1;
            }
            _ => {}
        }
    }
    let last = body[start..].trim();
    if !last.is_empty() {
        args.push(last.to_string());
    }
    args.retain(|a| !a.is_empty());
    Some((name, args))
}

fn marker_regex() -> &'static regex::Regex {
    static RE: OnceLock<regex::Regex> = OnceLock::new();
    RE.get_or_init(|| {
        regex::Regex::new(
            r"(?x)
            \#\#\#\ Action\ (\d+)\.(\d+)\.(\d+):
            |\#\#\#\ Obs(?:ervation)?\ (\d+)\.(\d+)\.(\d+):
            |\#\#\#\ Thought\ (\d+)\.(\d+)\.(\d+):
            |\#\#\#\ S-exp-(\d+)\.(\d+):
            |\#\#\#\ Error:
            |\#\#\ S-exp-(\d+):
            |\#\#\ Step\ (\d+)\.(\d+):
            |\#\ Task\ (\d+):
            |\#\ Final\ s-exp:
            |\#\ Final\ answer:
            ",
        )
        .unwrap()
    })
}

fn agentbench_marker_regex() -> &'static regex::Regex {
    static RE: OnceLock<regex::Regex> = OnceLock::new();
    RE.get_or_init(|| {
        regex::Regex::new(
            r"(?m)^[ \t]*(Thought:|Action:|Observation:|Final Answer:|Error:|\# Equivalent s-exp:)",
        )
        .unwrap()
    })
}

fn num(caps: &regex::Captures<'_>, i: usize) -> u32 {
    caps.get(i).map(|m| m.as_str().parse().unwrap()).unwrap_or(0)
}

/// Parse one generation segment (or a whole trace body) into events.
///
/// Markers may be glued to surrounding text; anything before the first
/// marker is preamble prose and is dropped. Syntax errors inside marker
/// bodies (malformed s-expressions, malformed calls) are grammar errors.
pub fn parse_events(text: &str, dialect: Dialect) -> Result<Vec<TraceEvent>, GrammarError> {
    match dialect {
        Dialect::Agentbench => parse_events_agentbench(text),
        _ => parse_events_dara(text),
    }
}

fn parse_events_dara(text: &str) -> Result<Vec<TraceEvent>, GrammarError> {
    let re = marker_regex();
    let matches: Vec<regex::Captures<'_>> = re.captures_iter(text).collect();
    if matches.is_empty() {
        return Err(GrammarError {
            line: 1,
            expected: "one of the markers '# Task', '## Step', '### Action', '### Thought', \
                       '### S-exp-', '## S-exp-', '# Final s-exp:'"
                .into(),
        });
    }
    let mut events = Vec::new();
    for (i, caps) in matches.iter().enumerate() {
        let whole = caps.get(0).unwrap();
        let body_start = whole.end();
        let body_end = matches
            .get(i + 1)
            .map(|c| c.get(0).unwrap().start())
            .unwrap_or(text.len());
        let body = text[body_start..body_end].trim();
        let line = line_of(text, whole.start());
        let marker = whole.as_str();
        let event = if marker.starts_with("### Action") {
            let (name, args) = parse_call(body).ok_or_else(|| GrammarError {
                line,
                expected: "an action call 'name(arguments)'".into(),
            })?;
            TraceEvent::Action {
                task: num(caps, 1),
                step: num(caps, 2),
                index: num(caps, 3),
                name,
                args,
            }
        } else if marker.starts_with("### Obs") {
            TraceEvent::Obs {
                task: num(caps, 4),
                step: num(caps, 5),
                index: num(caps, 6),
                text: body.to_string(),
            }
        } else if marker.starts_with("### Thought") {
            TraceEvent::Thought {
                task: num(caps, 7),
                step: num(caps, 8),
                index: num(caps, 9),
                text: body.to_string(),
            }
        } else if marker.starts_with("### S-exp-") {
            let expr = parse_sexpr(body).map_err(|e| GrammarError {
                line,
                expected: format!("a step-level s-expression ({e})"),
            })?;
            TraceEvent::StepSexp { task: num(caps, 10), step: num(caps, 11), expr }
        } else if marker.starts_with("### Error") {
            TraceEvent::Error { text: body.to_string() }
        } else if marker.starts_with("## S-exp-") {
            let expr = parse_sexpr(body).map_err(|e| GrammarError {
                line,
                expected: format!("a task-level s-expression ({e})"),
            })?;
            TraceEvent::TaskSexp { task: num(caps, 12), expr }
        } else if marker.starts_with("## Step") {
            TraceEvent::StepHeader { task: num(caps, 13), step: num(caps, 14) }
        } else if marker.starts_with("# Task") {
            TraceEvent::TaskHeader { task: num(caps, 15), text: body.to_string() }
        } else if marker.starts_with("# Final s-exp") {
            let expr = parse_sexpr(body).map_err(|e| GrammarError {
                line,
                expected: format!("a final s-expression ({e})"),
            })?;
            TraceEvent::FinalSexp { expr }
        } else {
            // "# Final answer:" — a variable id, optionally spaced, with an
            // optional trailing period, optionally followed by an
            // "# Equivalent s-exp" marker handled as FinalSexp below.
            let raw = body.trim().trim_end_matches('.').trim();
            let id_text = raw.strip_prefix('#').unwrap_or(raw);
            let id = id_text.trim().parse::<usize>().map_err(|_| GrammarError {
                line,
                expected: format!("a variable id after 'Final answer:', found '{body}'"),
            })?;
            TraceEvent::FinalAnswerVar { id }
        };
        events.push(event);
    }
    validate_order(&events, text)?;
    Ok(events)
}

fn parse_events_agentbench(text: &str) -> Result<Vec<TraceEvent>, GrammarError> {
    let re = agentbench_marker_regex();
    let matches: Vec<regex::Match<'_>> = re.find_iter(text).collect();
    if matches.is_empty() {
        return Err(GrammarError {
            line: 1,
            expected: "one of the markers 'Thought:', 'Action:', 'Final Answer:'".into(),
        });
    }
    let mut events = Vec::new();
    let mut action_index = 0u32;
    for (i, m) in matches.iter().enumerate() {
        let body_start = m.end();
        let body_end = matches.get(i + 1).map(|n| n.start()).unwrap_or(text.len());
        let body = text[body_start..body_end].trim();
        let line = line_of(text, m.start());
        let marker = m.as_str().trim_start();
        match marker {
            "Thought:" => events.push(TraceEvent::Thought {
                task: 0,
                step: 0,
                index: action_index + 1,
                text: body.to_string(),
            }),
            "Action:" => {
                let (name, args) = parse_call(body).ok_or_else(|| GrammarError {
                    line,
                    expected: "an action call 'name(arguments)'".into(),
                })?;
                action_index += 1;
                events.push(TraceEvent::Action {
                    task: 0,
                    step: 0,
                    index: action_index,
                    name,
                    args,
                });
            }
            "Observation:" => events.push(TraceEvent::Obs {
                task: 0,
                step: 0,
                index: action_index,
                text: body.to_string(),
            }),
            "Final Answer:" => {
                let raw = body.trim().trim_end_matches('.').trim();
                let id_text = raw.strip_prefix('#').ok_or_else(|| GrammarError {
                    line,
                    expected: format!("'#<id>' after 'Final Answer:', found '{body}'"),
                })?;
                let id = id_text.trim().parse::<usize>().map_err(|_| GrammarError {
                    line,
                    expected: format!("a numeric variable id, found '{body}'"),
                })?;
                events.push(TraceEvent::FinalAnswerVar { id });
            }
            "Error:" => events.push(TraceEvent::Error { text: body.to_string() }),
            "# Equivalent s-exp:" => {
                let expr = parse_sexpr(body).map_err(|e| GrammarError {
                    line,
                    expected: format!("an equivalent s-expression ({e})"),
                })?;
                events.push(TraceEvent::FinalSexp { expr });
            }
            _ => unreachable!(),
        }
    }
    Ok(events)
}

// Index monotonicity within one parsed chunk: tasks and steps advance by
// one, action/thought/obs indices never go backwards.
fn validate_order(events: &[TraceEvent], text: &str) -> Result<(), GrammarError> {
    let mut last = (0u32, 0u32, 0u32);
    for event in events {
        let next = match event {
            TraceEvent::TaskHeader { task, .. } => (*task, 0, 0),
            TraceEvent::StepHeader { task, step } => (*task, *step, 0),
            TraceEvent::Action { task, step, index, .. }
            | TraceEvent::Obs { task, step, index, .. }
            | TraceEvent::Thought { task, step, index, .. } => (*task, *step, *index),
            TraceEvent::StepSexp { task, step, .. } => (*task, *step, last.2),
            TraceEvent::TaskSexp { task, .. } => (*task, last.1, last.2),
            _ => continue,
        };
        let ordered = next.0 > last.0
            || (next.0 == last.0 && next.1 > last.1)
            || (next.0 == last.0 && next.1 == last.1 && next.2 >= last.2);
        if !ordered {
            return Err(GrammarError {
                line: line_of(text, 0),
                expected: format!(
                    "monotone indices, found {}.{}.{} after {}.{}.{}",
                    next.0, next.1, next.2, last.0, last.1, last.2
                ),
            });
        }
        last = next;
    }
    Ok(())
}

/// Render one event in a dialect's markers.
pub fn render_event(event: &TraceEvent, dialect: Dialect) -> String {
    match dialect {
        Dialect::Agentbench => match event {
            TraceEvent::Thought { text, .. } => format!("Thought: {text}"),
            TraceEvent::Action { name, args, .. } => {
                format!("Action: {name}({})", args.join(", "))
            }
            TraceEvent::Obs { text, .. } => format!("Observation: {text}"),
            TraceEvent::FinalAnswerVar { id } => format!("Final Answer: #{id}"),
            TraceEvent::FinalSexp { expr } => {
                format!("# Equivalent s-exp: {}", print_sexpr(expr))
            }
            TraceEvent::Error { text } => format!("Error: {text}"),
            TraceEvent::TaskHeader { text, .. } => format!("Thought: {text}"),
            TraceEvent::StepHeader { .. }
            | TraceEvent::StepSexp { .. }
            | TraceEvent::TaskSexp { .. } => String::new(),
        },
        _ => match event {
            TraceEvent::TaskHeader { task, text } => format!("# Task {task}: {text}"),
            TraceEvent::StepHeader { task, step } => format!("## Step {task}.{step}:"),
            TraceEvent::Action { task, step, index, name, args } => {
                format!("### Action {task}.{step}.{index}: {name}({})", args.join(", "))
            }
            TraceEvent::Obs { task, step, index, text } => {
                format!("### {} {task}.{step}.{index}: {text}", dialect.obs_marker())
            }
            TraceEvent::Thought { task, step, index, text } => {
                format!("### Thought {task}.{step}.{index}: {text}")
            }
            TraceEvent::StepSexp { task, step, expr } => {
                format!("### S-exp-{task}.{step}: {}", print_sexpr(expr))
            }
            TraceEvent::TaskSexp { task, expr } => {
                format!("## S-exp-{task}: {}", print_sexpr(expr))
            }
            TraceEvent::FinalSexp { expr } => format!("# Final s-exp:\n{}", print_sexpr(expr)),
            TraceEvent::FinalAnswerVar { id } => format!("# Final answer:#{id}"),
            TraceEvent::Error { text } => format!("### Error: {text}"),
        },
    }
}

/// Render a list of events, one per line.
pub fn render_events(events: &[TraceEvent], dialect: Dialect) -> String {
    events
        .iter()
        .map(|e| render_event(e, dialect))
        .filter(|s| !s.is_empty())
        .collect::<Vec<_>>()
        .join("\n")
}

/// Serialize a trace to its line-oriented file form.
pub fn serialize_trace(trace: &ReasoningTrace, profile: Profile) -> String {
    let entities = trace
        .entities
        .iter()
        .map(|(mid, label)| format!("{label} ({mid})"))
        .collect::<Vec<_>>()
        .join(", ");
    format!(
        "Question: {}\nEntities: [{}]\n\n{}\n",
        trace.question,
        entities,
        render_events(&trace.events, profile.dialect())
    )
}

/// Parse a trace file. The outcome is not part of the text form (it lives
/// in the sidecar): traces with a final form parse as completed, anything
/// else as budget-exhausted.
pub fn parse_trace(text: &str, profile: Profile) -> Result<ReasoningTrace, GrammarError> {
    let mut lines = text.lines();
    let question = lines
        .next()
        .and_then(|l| l.strip_prefix("Question: "))
        .ok_or_else(|| GrammarError { line: 1, expected: "'Question: <text>'".into() })?
        .to_string();
    let entities_line = lines
        .next()
        .and_then(|l| l.strip_prefix("Entities: ["))
        .and_then(|l| l.strip_suffix(']'))
        .ok_or_else(|| GrammarError { line: 2, expected: "'Entities: [label (mid), ...]'".into() })?;
    let mut entities = Vec::new();
    if !entities_line.trim().is_empty() {
        for part in entities_line.split("), ") {
            let part = part.trim().trim_end_matches(')');
            if let Some((label, mid)) = part.rsplit_once(" (") {
                entities.push((mid.to_string(), label.to_string()));
            }
        }
    }
    let header_len = text.lines().take(2).map(|l| l.len() + 1).sum::<usize>();
    let body = &text[header_len.min(text.len())..];
    let events = if body.trim().is_empty() {
        Vec::new()
    } else {
        parse_events(body, profile.dialect())?
    };
    let mut trace = ReasoningTrace::new(question, entities);
    let completed = events
        .iter()
        .any(|e| matches!(e, TraceEvent::FinalSexp { .. } | TraceEvent::FinalAnswerVar { .. }));
    trace.events = events;
    trace.outcome = if completed { Outcome::Completed } else { Outcome::BudgetExhausted };
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    const RONNY_SEGMENT: &str = "The given question can be decomposed into the following \
        subtasks: # Task 1: Find the Olympic games that Ronny represented as a mascot.\n\
        ## Step 1.1:\n\
        ### Action 1.1.1: get_relations(m.04dwjbg)";

    #[test]
    fn parses_leading_prose_and_glued_markers() {
        let events = parse_events(RONNY_SEGMENT, Dialect::Dara).unwrap();
        assert_eq!(
            events[0],
            TraceEvent::TaskHeader {
                task: 1,
                text: "Find the Olympic games that Ronny represented as a mascot.".into()
            }
        );
        assert_eq!(events[1], TraceEvent::StepHeader { task: 1, step: 1 });
        assert_eq!(
            events[2],
            TraceEvent::Action {
                task: 1,
                step: 1,
                index: 1,
                name: "get_relations".into(),
                args: vec!["m.04dwjbg".into()],
            }
        );
    }

    #[test]
    fn parses_final_sexp_on_next_line() {
        let events =
            parse_events("# Final s-exp:\n(COUNT s-exp-1)", Dialect::Dara).unwrap();
        assert_eq!(events.len(), 1);
        match &events[0] {
            TraceEvent::FinalSexp { expr } => assert_eq!(print_sexpr(expr), "(COUNT s-exp-1)"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn splits_action_args_respecting_nesting() {
        let (name, args) = parse_call(
            "get_descriptions(olympics.olympic_mascot.olympic_games (outgoing), \
             kg.object_profile.prominent_type (outgoing))",
        )
        .unwrap();
        assert_eq!(name, "get_descriptions");
        assert_eq!(
            args,
            vec![
                "olympics.olympic_mascot.olympic_games (outgoing)",
                "kg.object_profile.prominent_type (outgoing)"
            ]
        );
        let (name, args) = parse_call("get_relations((JOIN a.b.c, m.1))").unwrap();
        assert_eq!(name, "get_relations");
        assert_eq!(args, vec!["(JOIN a.b.c, m.1)"]);
    }

    #[test]
    fn out_of_order_actions_are_a_grammar_error() {
        let text = "## Step 1.1:\n### Action 1.1.2: f(a)\n### Obs 1.1.2: x\n### Action 1.1.1: f(b)";
        assert!(parse_events(text, Dialect::Dara).is_err());
    }

    #[test]
    fn garbage_is_a_grammar_error() {
        assert!(parse_events("no markers at all", Dialect::Dara).is_err());
        assert!(parse_events("plain prose", Dialect::Agentbench).is_err());
    }

    #[test]
    fn agentbench_markers_parse_line_anchored() {
        let text = "Thought: Determine the group.\n\
            Action: get_neighbors(great comet of 1843, astronomy.comet.comet_group)\n\
            Observation: variable #0, which are instances of astronomy.comet_group\n\
            Final Answer: #0";
        let events = parse_events(text, Dialect::Agentbench).unwrap();
        assert_eq!(events.len(), 4);
        assert_eq!(events[3], TraceEvent::FinalAnswerVar { id: 0 });
        match &events[1] {
            TraceEvent::Action { name, args, index, .. } => {
                assert_eq!(name, "get_neighbors");
                assert_eq!(args.len(), 2);
                assert_eq!(*index, 1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn icl_final_answer_with_period_parses() {
        let events = parse_events("# Final answer:#2.", Dialect::DaraIcl).unwrap();
        assert_eq!(events[0], TraceEvent::FinalAnswerVar { id: 2 });
    }

    #[test]
    fn trace_serialization_round_trips() {
        let mut trace = ReasoningTrace::new(
            "what olympic games did ronny represent as a mascot?",
            vec![("m.04dwjbg".into(), "Ronny".into())],
        );
        trace.events = vec![
            TraceEvent::TaskHeader { task: 1, text: "Find the games.".into() },
            TraceEvent::StepHeader { task: 1, step: 1 },
            TraceEvent::Action {
                task: 1,
                step: 1,
                index: 1,
                name: "get_relations".into(),
                args: vec!["m.04dwjbg".into()],
            },
            TraceEvent::Obs {
                task: 1,
                step: 1,
                index: 1,
                text: "m.04dwjbg has following relations. The outgoing relations are [a.b.c]. \
                       The incoming relations are []."
                    .into(),
            },
            TraceEvent::StepSexp {
                task: 1,
                step: 1,
                expr: parse_sexpr("(JOIN (R a.b.c) m.04dwjbg)").unwrap(),
            },
            TraceEvent::TaskSexp {
                task: 1,
                expr: parse_sexpr("(JOIN (R a.b.c) m.04dwjbg)").unwrap(),
            },
            TraceEvent::FinalSexp { expr: parse_sexpr("(JOIN (R a.b.c) m.04dwjbg)").unwrap() },
        ];
        trace.outcome = Outcome::Completed;
        let once = serialize_trace(&trace, Profile::Dara);
        let reparsed = parse_trace(&once, Profile::Dara).unwrap();
        assert_eq!(reparsed.question, trace.question);
        assert_eq!(reparsed.entities, trace.entities);
        assert_eq!(reparsed.outcome, Outcome::Completed);
        let twice = serialize_trace(&reparsed, Profile::Dara);
        assert_eq!(once, twice);
    }

    #[test]
    fn agentbench_trace_round_trips_with_equivalent_form() {
        let mut trace = ReasoningTrace::new("which group?", vec![("m.0595vt".into(), "great comet of 1843".into())]);
        trace.events = vec![
            TraceEvent::Thought { task: 0, step: 0, index: 1, text: "Determine the group.".into() },
            TraceEvent::Action {
                task: 0,
                step: 0,
                index: 1,
                name: "get_neighbors".into(),
                args: vec!["great comet of 1843".into(), "astronomy.comet.comet_group".into()],
            },
            TraceEvent::Obs {
                task: 0,
                step: 0,
                index: 1,
                text: "variable #0, which are instances of astronomy.comet_group".into(),
            },
            TraceEvent::FinalAnswerVar { id: 0 },
            TraceEvent::FinalSexp {
                expr: parse_sexpr("(JOIN (R astronomy.comet.comet_group) m.0595vt)").unwrap(),
            },
        ];
        trace.outcome = Outcome::Completed;
        let once = serialize_trace(&trace, Profile::Agentbench);
        let reparsed = parse_trace(&once, Profile::Agentbench).unwrap();
        assert_eq!(serialize_trace(&reparsed, Profile::Agentbench), once);
        assert_eq!(
            print_sexpr(reparsed.final_sexpr().unwrap()),
            "(JOIN (R astronomy.comet.comet_group) m.0595vt)"
        );
    }

    #[test]
    fn resolved_final_splices_step_and_task_refs() {
        let mut trace = ReasoningTrace::new("q", vec![]);
        trace.events = vec![
            TraceEvent::StepSexp {
                task: 1,
                step: 1,
                expr: parse_sexpr("(JOIN (R a.b.c) m.1)").unwrap(),
            },
            TraceEvent::StepSexp {
                task: 1,
                step: 2,
                expr: parse_sexpr("(AND x.y s-exp-1.1)").unwrap(),
            },
            TraceEvent::TaskSexp { task: 1, expr: parse_sexpr("(AND x.y s-exp-1.1)").unwrap() },
            TraceEvent::FinalSexp { expr: parse_sexpr("(COUNT s-exp-1)").unwrap() },
        ];
        assert_eq!(
            print_sexpr(&trace.resolved_final().unwrap()),
            "(COUNT (AND x.y (JOIN (R a.b.c) m.1)))"
        );
    }
}
