//! The agent loops: alternating generation and action execution until a
//! final form is produced or a budget trips.
//!
//! Generation stops right before observations (the environment renders
//! those), the last action of each segment is executed, and its observation
//! is appended to the trace before the next completion call. Failures never
//! raise: they close the trace with the matching outcome plus an error
//! event, and mid-trace action errors are rendered into the observation
//! slot so the loop can continue.

use super::llm::{LlmAdapter, Message};
use super::prompts::render_prompt;
use super::trace::{parse_events, Outcome, Profile, ReasoningTrace, TraceEvent};
use crate::actions::{execute_action, execute_baseline_action, ActionEnvironment};
use crate::kg::KnowledgeGraph;
use crate::retrieval::Retriever;
use crate::sexpr::substitute_refs;

/// Budgets and knobs of one agent session.
#[derive(Debug, Clone)]
pub struct AgentConfig {
    /// Candidates kept by schema retrieval per action (top five by default).
    pub topk: usize,
    /// How many promising relations the deep-reading pass inspects.
    pub deep_read_n: usize,
    pub max_tasks: u32,
    pub max_steps_per_task: u32,
    pub max_actions_per_step: u32,
    /// Total action budget of the baseline loop.
    pub baseline_max_actions: u32,
    pub profile: Profile,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            topk: 5,
            deep_read_n: 2,
            max_tasks: 10,
            max_steps_per_task: 5,
            max_actions_per_step: 4,
            baseline_max_actions: 15,
            profile: Profile::Dara,
        }
    }
}

fn allowed_actions(profile: Profile) -> &'static [&'static str] {
    match profile {
        Profile::Dara => &[
            "get_relations",
            "get_classes",
            "get_relevant_relations",
            "get_relevant_classes",
            "get_descriptions",
        ],
        Profile::Agentbench => &[
            "get_relations",
            "get_neighbors",
            "intersection",
            "get_attributes",
            "argmax",
            "argmin",
            "count",
        ],
        Profile::DaraIcl => &[
            "get_relations",
            "get_neighbors",
            "intersection",
            "get_relevant_relations",
            "argmax",
            "argmin",
            "count",
            "get_classes",
            "get_relevant_classes",
            "lt",
            "le",
            "gt",
            "ge",
            "get_descriptions",
            "get_attributes",
            "get_relevant_attributes",
        ],
    }
}

struct Session<'g, 'l> {
    profile: Profile,
    config: AgentConfig,
    env: ActionEnvironment<'g>,
    llm: &'l mut dyn LlmAdapter,
    trace: ReasoningTrace,
    llm_calls: u32,
    call_budget: u32,
    // Position in the task/step/action lattice.
    cur_task: u32,
    cur_step: u32,
    actions_in_step: u32,
    actions_total: u32,
    corrective: Option<String>,
    reprompted: bool,
}

enum Flow {
    Continue,
    NextCall,
    Finish(Outcome),
}

impl<'g, 'l> Session<'g, 'l> {
    fn error_out(&mut self, outcome: Outcome, message: String) -> Outcome {
        self.trace.events.push(TraceEvent::Error { text: message });
        outcome
    }

    fn grammar_slip(&mut self, detail: String) -> Flow {
        if self.reprompted {
            Flow::Finish(self.error_out(Outcome::ParseFailure, detail))
        } else {
            self.reprompted = true;
            self.corrective = Some(format!(
                "Your previous output did not follow the expected format ({detail}). \
                 Continue from where you stopped using the exact markers."
            ));
            Flow::NextCall
        }
    }

    fn run(mut self) -> ReasoningTrace {
        let stop = self.profile.dialect().stop_sequences();
        let outcome = 'outer: loop {
            if self.llm_calls >= self.call_budget {
                break Outcome::BudgetExhausted;
            }
            let mut messages: Vec<Message> = render_prompt(
                self.profile,
                &self.trace.question.clone(),
                &self.trace.entities.clone(),
                &self.trace,
            );
            if let Some(corrective) = self.corrective.take() {
                messages.push(Message::user(corrective));
            }
            let text = match self.llm.complete(&messages, &stop) {
                Ok(text) => text,
                Err(e) => break self.error_out(Outcome::ActionError, format!("llm failure: {e}")),
            };
            self.llm_calls += 1;
            let events = match parse_events(&text, self.profile.dialect()) {
                Ok(events) => events,
                Err(e) => match self.grammar_slip(e.to_string()) {
                    Flow::Finish(outcome) => break outcome,
                    _ => continue 'outer,
                },
            };
            self.reprompted = false;
            let count = events.len();
            for (idx, event) in events.into_iter().enumerate() {
                let is_last = idx + 1 == count;
                match self.apply(event, is_last) {
                    Flow::Continue => {}
                    Flow::NextCall => continue 'outer,
                    Flow::Finish(outcome) => break 'outer outcome,
                }
            }
        };
        self.trace.outcome = outcome;
        self.trace
    }

    fn apply(&mut self, event: TraceEvent, is_last_in_segment: bool) -> Flow {
        match event {
            TraceEvent::TaskHeader { task, text } => {
                if task != self.cur_task + 1 {
                    return self.grammar_slip(format!(
                        "task {task} after task {}",
                        self.cur_task
                    ));
                }
                if task > self.config.max_tasks {
                    return Flow::Finish(Outcome::BudgetExhausted);
                }
                self.cur_task = task;
                self.cur_step = 0;
                self.actions_in_step = 0;
                self.env.set_task_context(Some(text.clone()));
                self.trace.events.push(TraceEvent::TaskHeader { task, text });
                Flow::Continue
            }
            TraceEvent::StepHeader { task, step } => {
                if task != self.cur_task || step != self.cur_step + 1 {
                    return self.grammar_slip(format!(
                        "step {task}.{step} after {}.{}",
                        self.cur_task, self.cur_step
                    ));
                }
                if step > self.config.max_steps_per_task {
                    return Flow::Finish(Outcome::BudgetExhausted);
                }
                self.cur_step = step;
                self.actions_in_step = 0;
                self.trace.events.push(TraceEvent::StepHeader { task, step });
                Flow::Continue
            }
            TraceEvent::Thought { task, step, index, text } => {
                self.trace.events.push(TraceEvent::Thought { task, step, index, text });
                Flow::Continue
            }
            TraceEvent::StepSexp { task, step, expr } => {
                self.env.bind_ref(format!("s-exp-{task}.{step}"), expr.clone());
                self.trace.events.push(TraceEvent::StepSexp { task, step, expr });
                Flow::Continue
            }
            TraceEvent::TaskSexp { task, expr } => {
                self.env.bind_ref(format!("s-exp-{task}"), expr.clone());
                self.trace.events.push(TraceEvent::TaskSexp { task, expr });
                Flow::Continue
            }
            TraceEvent::Action { task, step, index, name, args } => {
                if !is_last_in_segment {
                    return self.grammar_slip(
                        "an action must end its segment; observations are rendered by the \
                         environment"
                            .into(),
                    );
                }
                let baseline = self.profile == Profile::Agentbench;
                if baseline {
                    if self.actions_total >= self.config.baseline_max_actions {
                        return Flow::Finish(Outcome::BudgetExhausted);
                    }
                } else if self.actions_in_step >= self.config.max_actions_per_step {
                    return Flow::Finish(Outcome::BudgetExhausted);
                }
                self.actions_in_step += 1;
                self.actions_total += 1;
                let observation = if allowed_actions(self.profile).contains(&name.as_str()) {
                    let result = match self.profile {
                        Profile::Dara => execute_action(&mut self.env, &name, &args),
                        _ => execute_baseline_action(&mut self.env, &name, &args),
                    };
                    match result {
                        Ok(obs) => obs.rendered(),
                        Err(e) => format!("Error: {e}"),
                    }
                } else {
                    format!("Error: action '{name}' is not available in this profile")
                };
                self.env.record(&name, &args, observation.clone());
                self.trace.events.push(TraceEvent::Action { task, step, index, name, args });
                self.trace.events.push(TraceEvent::Obs {
                    task,
                    step,
                    index,
                    text: observation,
                });
                Flow::NextCall
            }
            TraceEvent::Obs { .. } => {
                self.grammar_slip("observations are rendered by the environment".into())
            }
            TraceEvent::FinalSexp { expr } => {
                match substitute_refs(&expr, self.env.bindings()) {
                    Ok(_) => {
                        self.trace.events.push(TraceEvent::FinalSexp { expr });
                        Flow::Finish(Outcome::Completed)
                    }
                    Err(e) => {
                        self.trace.events.push(TraceEvent::FinalSexp { expr });
                        Flow::Finish(
                            self.error_out(Outcome::ActionError, format!("final form: {e}")),
                        )
                    }
                }
            }
            TraceEvent::FinalAnswerVar { id } => {
                self.trace.events.push(TraceEvent::FinalAnswerVar { id });
                match self.env.variable(id) {
                    Ok(var) => {
                        self.trace.events.push(TraceEvent::FinalSexp { expr: var.expr.clone() });
                        Flow::Finish(Outcome::Completed)
                    }
                    Err(e) => Flow::Finish(
                        self.error_out(Outcome::ActionError, format!("final answer: {e}")),
                    ),
                }
            }
            TraceEvent::Error { text } => {
                self.trace.events.push(TraceEvent::Error { text });
                Flow::Continue
            }
        }
    }
}

fn run_session_with_profile(
    profile: Profile,
    question: &str,
    entities: &[(String, String)],
    graph: &KnowledgeGraph,
    llm: &mut dyn LlmAdapter,
    config: &AgentConfig,
    retriever: &Retriever,
) -> ReasoningTrace {
    let call_budget = match profile {
        Profile::Agentbench => config.baseline_max_actions + 1,
        _ => config.max_tasks * config.max_steps_per_task * (config.max_actions_per_step + 2),
    };
    let env = ActionEnvironment::new(graph, retriever.clone(), config.topk, question);
    let session = Session {
        profile,
        config: config.clone(),
        env,
        llm,
        trace: ReasoningTrace::new(question, entities.to_vec()),
        llm_calls: 0,
        call_budget,
        cur_task: 0,
        cur_step: 0,
        actions_in_step: 0,
        actions_total: 0,
        corrective: None,
        reprompted: false,
    };
    session.run()
}

/// The decomposition-grounding loop (both the fine-tuned and the in-context
/// marker dialects).
pub fn run_dara(
    question: &str,
    entities: &[(String, String)],
    graph: &KnowledgeGraph,
    llm: &mut dyn LlmAdapter,
    config: &AgentConfig,
    retriever: &Retriever,
) -> ReasoningTrace {
    let profile = match config.profile {
        Profile::Agentbench => Profile::Dara,
        p => p,
    };
    run_session_with_profile(profile, question, entities, graph, llm, config, retriever)
}

/// The baseline Thought/Action/Observation loop with numbered variables.
pub fn run_agentbench(
    question: &str,
    entities: &[(String, String)],
    graph: &KnowledgeGraph,
    llm: &mut dyn LlmAdapter,
    config: &AgentConfig,
    retriever: &Retriever,
) -> ReasoningTrace {
    run_session_with_profile(
        Profile::Agentbench,
        question,
        entities,
        graph,
        llm,
        config,
        retriever,
    )
}

/// Dispatch on the configured profile.
pub fn run_session(
    question: &str,
    entities: &[(String, String)],
    graph: &KnowledgeGraph,
    llm: &mut dyn LlmAdapter,
    config: &AgentConfig,
    retriever: &Retriever,
) -> ReasoningTrace {
    run_session_with_profile(
        config.profile,
        question,
        entities,
        graph,
        llm,
        config,
        retriever,
    )
}
