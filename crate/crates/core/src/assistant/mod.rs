//! The completion loop: prompt the model, splice its reply into the sketch,
//! and feed static errors back for a bounded number of rounds.

pub mod chatlsp;
mod client;

use std::time::Instant;

use thiserror::Error;

use crate::contextualizer::{retrieve, ContextError, NUM_HEADERS};
use crate::prompt::{
    build_user_message, crash_course, serialize_errors, system_message, ChatMessage, PromptConfig, PromptError, Role,
};
use crate::statics::{check_repo, get_static_errors, StaticError};
use crate::syntax::{substitute_hole, Repo, SubstituteError};

pub use client::{
    ClientError, HttpClient, LlmClient, RecordingClient, ReplayClient, ScriptRule, ScriptedClient, API_KEY_VAR,
    MODEL_VAR,
};

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionResult {
    /// The sketch with the last fragment substituted; `None` if that
    /// fragment did not parse.
    pub final_repo: Option<Repo>,
    pub final_fragment: String,
    pub rounds_used: usize,
    pub errors_per_round: Vec<usize>,
    pub final_errors: Vec<StaticError>,
    pub transcript: Vec<ChatMessage>,
    pub chars_sent: usize,
    pub chars_received: usize,
    pub wall_millis: u128,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AssistantError {
    #[error("hole {0} is not the sketch's generative `??` hole")]
    MissingGenerativeHole(usize),
    #[error(transparent)]
    Context(#[from] ContextError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("{error} (after {rounds_completed} completed rounds)")]
    Client {
        error: ClientError,
        rounds_completed: usize,
        transcript: Vec<ChatMessage>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FragmentError {
    #[error("the model reply is empty")]
    EmptyReply,
}

/// The interior of the first fenced code block, or the whole reply.
pub fn extract_fragment(reply: &str) -> Result<String, FragmentError> {
    let text = match reply.find("```") {
        Some(start) => {
            let after = &reply[start + 3..];
            // Skip an info string such as ```ocaml.
            let body = match after.find('\n') {
                Some(nl) if !after[..nl].contains("```") => &after[nl + 1..],
                _ => after,
            };
            match body.find("```") {
                Some(end) => &body[..end],
                None => body,
            }
        }
        None => reply,
    };
    let text = text.trim();
    if text.is_empty() {
        Err(FragmentError::EmptyReply)
    } else {
        Ok(text.to_string())
    }
}

/// The language crash course given to models, as plain text.
pub fn ai_tutorial() -> &'static str {
    crash_course()
}

/// Serialized static errors of a manifest, or empty text when it is clean.
pub fn error_report(manifest: &[(String, String)]) -> String {
    serialize_errors(&get_static_errors(manifest)).unwrap_or_default()
}

/// The hole whose span contains a 1-based (line, column) position.
pub fn hole_at(repo: &Repo, file: &str, line: usize, col: usize) -> Option<usize> {
    repo.holes()
        .into_iter()
        .find(|h| {
            let s = &h.span;
            s.file == file
                && (s.start_line, s.start_col) <= (line, col)
                && (line, col) <= (s.end_line, s.end_col)
        })
        .map(|h| h.id)
}

/// Text of the file containing `hole_id`.
pub fn sketch_text(repo: &Repo, hole_id: usize) -> Option<&str> {
    let site = repo.hole(hole_id)?;
    repo.files.iter().find(|f| f.path == site.span.file).map(|f| f.text.as_str())
}

/// Substitutes a fragment and returns the result with its static errors.
pub fn try_fragment(repo: &Repo, hole_id: usize, fragment: &str) -> (Option<Repo>, Vec<StaticError>) {
    match substitute_hole(repo, hole_id, fragment) {
        Ok(filled) => {
            let errors = check_repo(&filled).errors;
            (Some(filled), errors)
        }
        Err(SubstituteError::Parse(e)) => (None, vec![StaticError::syntax(&e)]),
        Err(SubstituteError::HoleNotFound(_)) => unreachable!("hole checked by caller"),
    }
}

fn check_generative(repo: &Repo, hole_id: usize) -> Result<(), AssistantError> {
    match repo.generative_hole() {
        Some(h) if h.id == hole_id => Ok(()),
        _ => Err(AssistantError::MissingGenerativeHole(hole_id)),
    }
}

/// Builds the retrieval-augmented user message for the generative hole.
pub fn contextualized_prompt(repo: &Repo, hole_id: usize, cfg: &PromptConfig) -> Result<ChatMessage, AssistantError> {
    check_generative(repo, hole_id)?;
    let typed = check_repo(repo);
    let r = retrieve(&typed, hole_id, NUM_HEADERS)?;
    let sketch = sketch_text(repo, hole_id).expect("hole belongs to a file");
    Ok(build_user_message(sketch, &r.expected, &r.types, &r.headers, cfg)?)
}

/// Runs the full loop with a retrieval-built prompt.
pub fn complete(
    repo: &Repo,
    hole_id: usize,
    cfg: &PromptConfig,
    client: &dyn LlmClient,
) -> Result<CompletionResult, AssistantError> {
    let user = contextualized_prompt(repo, hole_id, cfg)?;
    complete_with_prompt(repo, hole_id, user, cfg, client)
}

/// Runs the loop with a caller-built first user message.
pub fn complete_with_prompt(
    repo: &Repo,
    hole_id: usize,
    user: ChatMessage,
    cfg: &PromptConfig,
    client: &dyn LlmClient,
) -> Result<CompletionResult, AssistantError> {
    check_generative(repo, hole_id)?;
    cfg.validate()?;
    let start = Instant::now();
    let mut transcript = vec![system_message(cfg.model_kind), user];
    let mut errors_per_round = Vec::new();
    let (mut sent, mut received) = (0, 0);
    loop {
        sent += transcript.iter().map(|m| m.content.chars().count()).sum::<usize>();
        let reply = client
            .send(&transcript, cfg.temperature)
            .map_err(|error| AssistantError::Client {
                error,
                rounds_completed: errors_per_round.len(),
                transcript: transcript.clone(),
            })?;
        received += reply.chars().count();
        transcript.push(ChatMessage::new(Role::Model, reply.clone()));
        let fragment = extract_fragment(&reply).unwrap_or_default();
        let (filled, errors) = try_fragment(repo, hole_id, &fragment);
        errors_per_round.push(errors.len());
        log::debug!("round {}: {} static errors", errors_per_round.len(), errors.len());
        if errors.is_empty() || errors_per_round.len() > cfg.max_error_rounds {
            return Ok(CompletionResult {
                final_repo: filled,
                final_fragment: fragment,
                rounds_used: errors_per_round.len(),
                errors_per_round,
                final_errors: errors,
                transcript,
                chars_sent: sent,
                chars_received: received,
                wall_millis: start.elapsed().as_millis(),
            });
        }
        let report = serialize_errors(&errors).expect("non-empty");
        transcript.push(ChatMessage::new(Role::User, report));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statics::ErrorKind;
    use crate::syntax::parse_repo;

    const TYPES: &str = "type Model = (Int, [String]) in
type Action = Add(String) + Reset in
";
    const SKETCH: &str = "(* Apply an action to the log *)
let update: (Model, Action) -> Model = ?? in
";
    const GOOD: &str = "fun ((n, log), action) ->
  case action
  | Add(s) => (n + 1, s :: log)
  | Reset => (0, [])
  end
end";
    const UNBOUND: &str = "fun ((n, log), action) ->
  case action
  | Add(s) => (n + 1, s :: logs)
  | Reset => (0, [])
  end
end";

    fn repo() -> Repo {
        parse_repo(&[("types.sl".into(), TYPES.into()), ("sketch.sl".into(), SKETCH.into())]).unwrap()
    }

    #[test]
    fn fragment_extraction() {
        assert_eq!(extract_fragment("```\ncase m end\n```").unwrap(), "case m end");
        assert_eq!(extract_fragment("Here:\n```ocaml\nfun x -> x end\n```\nmore ```y```").unwrap(), "fun x -> x end");
        assert_eq!(extract_fragment("  1 + 2 \n").unwrap(), "1 + 2");
        assert_eq!(extract_fragment(""), Err(FragmentError::EmptyReply));
        assert_eq!(extract_fragment("```\n```"), Err(FragmentError::EmptyReply));
    }

    #[test]
    fn two_stage_repair() {
        let client = ScriptedClient::by_round(&[UNBOUND, GOOD]);
        let r = complete(&repo(), 1, &PromptConfig::default(), &client).unwrap();
        assert_eq!(r.errors_per_round, [1, 0]);
        assert_eq!(r.rounds_used, 2);
        assert_eq!(client.calls(), 2);
        let roles: Vec<_> = r.transcript.iter().map(|m| m.role).collect();
        assert_eq!(roles, [Role::System, Role::User, Role::Model, Role::User, Role::Model]);
        assert!(r.transcript[3].content.contains("logs"));
        assert!(r.final_errors.is_empty());
        assert!(r.final_repo.unwrap().holes().is_empty());
    }

    #[test]
    fn immediate_success() {
        let r = complete(&repo(), 1, &PromptConfig::default(), &ScriptedClient::by_round(&[GOOD])).unwrap();
        assert_eq!((r.rounds_used, r.errors_per_round.clone()), (1, vec![0]));
        assert_eq!(r.final_fragment, GOOD);
    }

    #[test]
    fn rounds_disabled_keeps_errors() {
        let cfg = PromptConfig {
            max_error_rounds: 0,
            ..PromptConfig::default()
        };
        let client = ScriptedClient::by_round(&[UNBOUND, GOOD]);
        let r = complete(&repo(), 1, &cfg, &client).unwrap();
        assert_eq!(r.rounds_used, 1);
        assert_eq!(client.calls(), 1);
        assert_eq!(r.final_errors[0].kind, ErrorKind::UnboundVariable);
    }

    #[test]
    fn round_cap_and_parse_failures() {
        let client = ScriptedClient::by_round(&["case action |", "fun x ->", "```\n(1, 2\n```"]);
        let r = complete(&repo(), 1, &PromptConfig::default(), &client).unwrap();
        assert_eq!(r.rounds_used, 3);
        assert!(r.errors_per_round.iter().all(|&n| n == 1));
        assert!(r.final_repo.is_none());
        assert!(r.transcript[3].content.contains("SyntaxError"));
    }

    #[test]
    fn client_failure_keeps_progress() {
        let client = ScriptedClient::by_round(&[UNBOUND]);
        match complete(&repo(), 1, &PromptConfig::default(), &client) {
            Err(AssistantError::Client {
                rounds_completed,
                transcript,
                ..
            }) => {
                assert_eq!(rounds_completed, 1);
                assert_eq!(transcript.len(), 4);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn requires_generative_hole() {
        let r = parse_repo(&[("a.sl".into(), "let x: Int = ? in".into())]).unwrap();
        let e = complete(&r, 1, &PromptConfig::default(), &ScriptedClient::by_round(&["1"]));
        assert_eq!(e.unwrap_err(), AssistantError::MissingGenerativeHole(1));
    }

    #[test]
    fn deterministic_transcripts() {
        let run = || {
            let mut r = complete(&repo(), 1, &PromptConfig::default(), &ScriptedClient::by_round(&[UNBOUND, GOOD])).unwrap();
            r.wall_millis = 0;
            r
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn tutorial_and_reports() {
        assert!(ai_tutorial().contains("No 'rec' keyword is necessary"));
        assert_eq!(ai_tutorial(), ai_tutorial());
        let clean = vec![("a.sl".to_string(), "let x: Int = 1 in".to_string())];
        assert_eq!(error_report(&clean), "");
        let unbound = vec![("a.sl".to_string(), "let x: Int = y in".to_string())];
        assert!(error_report(&unbound).contains("unbound variable y"));
        let broken = vec![("a.sl".to_string(), "let x: Int = (1 in".to_string())];
        assert!(error_report(&broken).contains("SyntaxError"));
    }

    #[test]
    fn position_lookup() {
        let r = repo();
        assert_eq!(hole_at(&r, "sketch.sl", 2, 40), Some(1));
        assert_eq!(hole_at(&r, "sketch.sl", 1, 1), None);
    }
}
