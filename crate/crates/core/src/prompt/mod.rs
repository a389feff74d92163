//! Chat messages sent to the model: the fixed system message, the
//! contextualized user message, and error-feedback rounds.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::contextualizer::{ScoredHeader, TypeDefListing};
use crate::statics::{StaticError, Type};
use crate::syntax::{tokenize, print_type, TokenKind, TypeExpr};

const INSTRUCTIONS: &str = include_str!("../../assets/instructions.txt");
const CRASH_COURSE: &str = include_str!("../../assets/crash_course.txt");
const FEW_SHOT: &str = include_str!("../../assets/few_shot.txt");
const DEFINITIONS: &str = include_str!("../../assets/definitions.txt");

pub const HEADER_PREAMBLE: &str = "Consider using these variables relevant to the expected type:";
pub const ERROR_PREAMBLE: &str = "The following errors were found in your completion:";
pub const EXPECTED_TYPE_PREFIX: &str = "The expected type of the hole is: ";
pub const DEFAULT_CHAR_BUDGET: usize = 24_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Model,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn new(role: Role, content: impl Into<String>) -> ChatMessage {
        ChatMessage {
            role,
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Instruction,
    Completion,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromptConfig {
    pub include_types: bool,
    pub include_headers: bool,
    pub max_error_rounds: usize,
    pub model_kind: ModelKind,
    pub temperature: f64,
    /// Upper bound on the user message length in characters.
    pub char_budget: usize,
}

impl Default for PromptConfig {
    fn default() -> PromptConfig {
        PromptConfig {
            include_types: true,
            include_headers: true,
            max_error_rounds: 2,
            model_kind: ModelKind::Instruction,
            temperature: 0.6,
            char_budget: DEFAULT_CHAR_BUDGET,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("the sketch must contain exactly one `??` hole (found {0})")]
    MissingGenerativeHole(usize),
    #[error("no errors to report")]
    EmptyErrorList,
    #[error("temperature {0} is outside [0, 2]")]
    BadTemperature(String),
}

impl PromptConfig {
    pub fn validate(&self) -> Result<(), PromptError> {
        if (0.0..=2.0).contains(&self.temperature) {
            Ok(())
        } else {
            Err(PromptError::BadTemperature(self.temperature.to_string()))
        }
    }
}

/// Few-shot (sketch, completion) pairs shipped with the system message.
pub fn few_shot_examples() -> Vec<(&'static str, &'static str)> {
    FEW_SHOT
        .split("=== sketch\n")
        .filter(|chunk| !chunk.trim().is_empty())
        .map(|chunk| {
            let (sketch, completion) = chunk.split_once("=== completion\n").expect("few-shot pair");
            (sketch.trim_end(), completion.trim_end())
        })
        .collect()
}

pub fn crash_course() -> &'static str {
    CRASH_COURSE
}

/// Standalone definitions used in place of instructions for completion models.
pub fn definition_examples() -> &'static str {
    DEFINITIONS
}

pub fn system_message(kind: ModelKind) -> ChatMessage {
    let content = match kind {
        ModelKind::Instruction => {
            let mut s = format!("{}\n{}\nExamples:\n", INSTRUCTIONS, CRASH_COURSE);
            for (sketch, completion) in few_shot_examples() {
                s.push_str(&format!("\nSketch:\n{sketch}\nCompletion:\n{completion}\n"));
            }
            s
        }
        ModelKind::Completion => format!("(* Example SL programs *)\n\n{DEFINITIONS}"),
    };
    ChatMessage::new(Role::System, content)
}

pub fn serialize_types(listing: &TypeDefListing) -> String {
    listing
        .defs
        .iter()
        .map(|d| format!("type {} = {} in\n", d.alias, print_type(&d.def)))
        .collect()
}

/// Arrow types are parenthesized so the `=` after them reads unambiguously.
pub fn header_line(name: &str, ty: &Type) -> String {
    let t = print_type(ty);
    match ty {
        TypeExpr::Arrow(..) => format!("let {name}: ({t}) =  in"),
        _ => format!("let {name}: {t} =  in"),
    }
}

pub fn serialize_headers(headers: &[ScoredHeader]) -> String {
    if headers.is_empty() {
        return String::new();
    }
    let mut s = format!("{HEADER_PREAMBLE}\n");
    for h in headers {
        s.push_str(&header_line(&h.name, &h.ty));
        s.push('\n');
    }
    s
}

fn generative_holes(sketch: &str) -> usize {
    match tokenize(sketch) {
        Ok(tokens) => tokens.iter().filter(|t| t.kind == TokenKind::GenHole).count(),
        Err(_) => sketch.matches("??").count(),
    }
}

fn assemble(sketch: &str, expected: &Type, types: &str, headers: &str) -> String {
    let mut parts = vec![
        sketch.trim_end().to_string(),
        format!("{EXPECTED_TYPE_PREFIX}{}", print_type(expected)),
    ];
    for block in [types, headers] {
        if !block.is_empty() {
            parts.push(block.trim_end().to_string());
        }
    }
    let mut s = parts.join("\n\n");
    s.push('\n');
    s
}

/// Sketch, expected type, and whichever retrieval sections `cfg` enables.
/// Over budget, headers are dropped from the end first, then type
/// definitions.
pub fn build_user_message(
    sketch: &str,
    expected: &Type,
    listing: &TypeDefListing,
    headers: &[ScoredHeader],
    cfg: &PromptConfig,
) -> Result<ChatMessage, PromptError> {
    let holes = generative_holes(sketch);
    if holes != 1 {
        return Err(PromptError::MissingGenerativeHole(holes));
    }
    let mut listing = if cfg.include_types { listing.clone() } else { TypeDefListing::default() };
    let mut headers: Vec<ScoredHeader> = if cfg.include_headers { headers.to_vec() } else { Vec::new() };
    loop {
        let text = assemble(sketch, expected, &serialize_types(&listing), &serialize_headers(&headers));
        if text.chars().count() <= cfg.char_budget {
            return Ok(ChatMessage::new(Role::User, text));
        }
        if headers.pop().is_some() {
            continue;
        }
        if listing.defs.pop().is_some() {
            continue;
        }
        log::warn!("user message exceeds the character budget even without retrieval");
        return Ok(ChatMessage::new(Role::User, text));
    }
}

pub fn serialize_errors(errors: &[StaticError]) -> Result<String, PromptError> {
    if errors.is_empty() {
        return Err(PromptError::EmptyErrorList);
    }
    let mut s = format!("{ERROR_PREAMBLE}\n");
    for e in errors {
        s.push_str(&e.to_string().replace('\n', " "));
        s.push('\n');
    }
    Ok(s)
}

/// One `{role, content}` object per line.
pub fn transcript_to_jsonl(messages: &[ChatMessage]) -> String {
    messages
        .iter()
        .map(|m| serde_json::to_string(m).expect("message serializes") + "\n")
        .collect()
}

pub fn transcript_from_jsonl(text: &str) -> Result<Vec<ChatMessage>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}
