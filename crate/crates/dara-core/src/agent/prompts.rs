//! Byte-stable prompt rendering per profile. Templates ship as versioned
//! assets so two runs with the same inputs always produce identical
//! message lists.

use super::trace::{render_events, Profile, ReasoningTrace};
use super::Message;

const DARA_SYSTEM: &str = include_str!("../../assets/prompts/dara_system.txt");
const DARA_ICL_SYSTEM: &str = include_str!("../../assets/prompts/dara_icl_system.txt");
const AGENTBENCH_SYSTEM: &str = include_str!("../../assets/prompts/agentbench_system.txt");

/// `The linked entity is L (mid).` / `The linked entities are A (m1), and
/// B (m2).`
pub fn entity_sentence(entities: &[(String, String)]) -> String {
    let rendered: Vec<String> =
        entities.iter().map(|(mid, label)| format!("{label} ({mid})")).collect();
    match rendered.len() {
        0 => String::new(),
        1 => format!("The linked entity is {}.", rendered[0]),
        n => format!(
            "The linked entities are {}, and {}.",
            rendered[..n - 1].join(", "),
            rendered[n - 1]
        ),
    }
}

/// Render the full message list for the next completion call: the profile
/// preamble, the question, and the trajectory so far as an assistant
/// message to continue.
pub fn render_prompt(
    profile: Profile,
    question: &str,
    entities: &[(String, String)],
    trace: &ReasoningTrace,
) -> Vec<Message> {
    let mut messages = match profile {
        Profile::Dara => {
            let mut text = DARA_SYSTEM.to_string();
            text.push_str(&format!("The question is {question}"));
            let sentence = entity_sentence(entities);
            if !sentence.is_empty() {
                text.push(' ');
                text.push_str(&sentence);
            }
            vec![Message::user(text)]
        }
        Profile::DaraIcl => {
            let mut ask = format!("Great! The new question is {question}");
            let sentence = entity_sentence(entities);
            if !sentence.is_empty() {
                ask.push(' ');
                ask.push_str(&sentence);
            }
            vec![
                Message::user(DARA_ICL_SYSTEM.trim_end().to_string()),
                Message::assistant("Yes, I've understood your instruction and the demonstration."),
                Message::user(ask),
            ]
        }
        Profile::Agentbench => {
            let labels: Vec<String> =
                entities.iter().map(|(_, label)| label.clone()).collect();
            let text = format!(
                "{AGENTBENCH_SYSTEM}A question is {question}\nEntities: [{}]",
                labels.join(", ")
            );
            vec![Message::user(text)]
        }
    };
    if !trace.events.is_empty() {
        messages.push(Message::assistant(render_events(&trace.events, profile.dialect())));
    }
    messages
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::trace::ReasoningTrace;

    #[test]
    fn dara_prompt_lists_the_five_functions() {
        let trace = ReasoningTrace::new("q", vec![]);
        let messages = render_prompt(
            Profile::Dara,
            "what olympic games did ronny represent as a mascot?",
            &[("m.04dwjbg".to_string(), "Ronny".to_string())],
            &trace,
        );
        assert_eq!(messages.len(), 1);
        let text = &messages[0].content;
        for f in [
            "get_relations(expression)",
            "get_classes(expression)",
            "get_relevant_relations(thought)",
            "get_relevant_classes(thought)",
            "get_descriptions(candidate)",
        ] {
            assert!(text.contains(f), "missing {f}");
        }
        assert!(text.ends_with("The linked entity is Ronny (m.04dwjbg)."));
    }

    #[test]
    fn agentbench_prompt_lists_the_seven_functions() {
        let trace = ReasoningTrace::new("q", vec![]);
        let messages = render_prompt(
            Profile::Agentbench,
            "which group does great comet of 1843 belong to?",
            &[("m.0595vt".to_string(), "great comet of 1843".to_string())],
            &trace,
        );
        let text = &messages[0].content;
        for f in ["get_relations", "get_neighbors", "intersection", "get_attributes", "argmax", "argmin", "count"] {
            assert!(text.contains(f), "missing {f}");
        }
        assert!(text.contains("Entities: [great comet of 1843]"));
    }

    #[test]
    fn icl_prompt_carries_the_demonstration() {
        let trace = ReasoningTrace::new("q", vec![]);
        let messages = render_prompt(Profile::DaraIcl, "new question?", &[], &trace);
        assert_eq!(messages.len(), 3);
        assert!(messages[0].content.contains("# Final answer:#2."));
        assert!(messages[0].content.ends_with("Do you understand it?"));
        assert!(messages[2].content.contains("new question?"));
    }

    #[test]
    fn rendering_is_deterministic() {
        let trace = ReasoningTrace::new("q", vec![]);
        let entities = vec![("m.1".to_string(), "One".to_string())];
        let a = render_prompt(Profile::Dara, "q", &entities, &trace);
        let b = render_prompt(Profile::Dara, "q", &entities, &trace);
        assert_eq!(a, b);
    }

    #[test]
    fn multi_entity_sentence_uses_comma_and() {
        let entities = vec![
            ("m.06x4c".to_string(), "sugars".to_string()),
            ("m.0102k5v9".to_string(), "manado cuisine".to_string()),
        ];
        assert_eq!(
            entity_sentence(&entities),
            "The linked entities are sugars (m.06x4c), and manado cuisine (m.0102k5v9)."
        );
    }
}
