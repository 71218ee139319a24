//! Agent loops, reasoning traces, prompt rendering and LLM adapters.

mod llm;
mod prompts;
mod runtime;
mod trace;

pub use llm::{LlmAdapter, LlmError, Message, RemoteAdapter, Role, ScriptedAdapter};
pub use prompts::{entity_sentence, render_prompt};
pub use runtime::{run_agentbench, run_dara, run_session, AgentConfig};
pub use trace::{
    parse_call, parse_events, parse_trace, render_event, render_events, serialize_trace,
    Dialect, GrammarError, Outcome, Profile, ReasoningTrace, TraceEvent,
};
