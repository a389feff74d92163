use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Duration;

use serde::Deserialize;
use serde_json::json;
use thiserror::Error;

use crate::prompt::{ChatMessage, Role};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("client error: {0}")]
pub struct ClientError(pub String);

/// The only side-effecting boundary: send a conversation, get a reply.
pub trait LlmClient: Send + Sync {
    fn send(&self, messages: &[ChatMessage], temperature: f64) -> Result<String, ClientError>;

    /// True when replies do not depend on timing or the network, so
    /// wall-clock measurements are meaningless and omitted.
    fn deterministic(&self) -> bool {
        false
    }
}

pub const API_KEY_VAR: &str = "SL_LLM_API_KEY";
pub const MODEL_VAR: &str = "SL_LLM_MODEL";
const DEFAULT_MODEL: &str = "gpt-4o";
const TIMEOUT: Duration = Duration::from_secs(120);

/// OpenAI-compatible chat endpoint. `api_base` is everything before
/// `/chat/completions`, e.g. `https://api.openai.com/v1`.
pub struct HttpClient {
    agent: ureq::Agent,
    url: String,
    key: Option<String>,
    model: String,
    seed: Option<u64>,
}

impl HttpClient {
    pub fn new(api_base: &str, key: Option<String>, model: &str) -> HttpClient {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(TIMEOUT))
            .http_status_as_error(false)
            .build()
            .into();
        HttpClient {
            agent,
            url: format!("{}/chat/completions", api_base.trim_end_matches('/')),
            key,
            model: model.to_string(),
            seed: None,
        }
    }

    /// Forwards a sampling seed to endpoints that honour one.
    pub fn with_seed(mut self, seed: u64) -> HttpClient {
        self.seed = Some(seed);
        self
    }

    /// Reads the key and model name from the environment.
    pub fn from_env(api_base: &str) -> HttpClient {
        let model = std::env::var(MODEL_VAR).unwrap_or_else(|_| DEFAULT_MODEL.to_string());
        HttpClient::new(api_base, std::env::var(API_KEY_VAR).ok(), &model)
    }

    pub fn request_body(&self, messages: &[ChatMessage], temperature: f64) -> serde_json::Value {
        let msgs: Vec<_> = messages
            .iter()
            .map(|m| {
                let role = match m.role {
                    Role::System => "system",
                    Role::User => "user",
                    Role::Model => "assistant",
                };
                json!({"role": role, "content": m.content})
            })
            .collect();
        let mut body = json!({"model": self.model, "messages": msgs, "temperature": temperature});
        if let Some(seed) = self.seed {
            body["seed"] = json!(seed);
        }
        body
    }
}

impl LlmClient for HttpClient {
    fn send(&self, messages: &[ChatMessage], temperature: f64) -> Result<String, ClientError> {
        let mut req = self.agent.post(&self.url);
        if let Some(k) = &self.key {
            req = req.header("Authorization", &format!("Bearer {k}"));
        }
        let mut resp = req
            .send_json(self.request_body(messages, temperature))
            .map_err(|e| ClientError(format!("request to {} failed: {e}", self.url)))?;
        let status = resp.status();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| ClientError(format!("reading response: {e}")))?;
        if !status.is_success() {
            return Err(ClientError(format!("HTTP {status}: {}", text.chars().take(500).collect::<String>())));
        }
        let v: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| ClientError(format!("response is not JSON: {e}")))?;
        v["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| ClientError("response has no choices[0].message.content".into()))
    }
}

/// Replays recorded replies in call order. The fixture is JSON Lines, one
/// JSON string per line.
pub struct ReplayClient {
    replies: Vec<String>,
    next: Mutex<usize>,
}

impl ReplayClient {
    pub fn new(replies: Vec<String>) -> ReplayClient {
        ReplayClient {
            replies,
            next: Mutex::new(0),
        }
    }

    pub fn from_jsonl(text: &str) -> Result<ReplayClient, ClientError> {
        let replies = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                serde_json::from_str::<String>(l).map_err(|e| ClientError(format!("replay line {}: {e}", i + 1)))
            })
            .collect::<Result<_, _>>()?;
        Ok(ReplayClient::new(replies))
    }

    pub fn from_file(path: &Path) -> Result<ReplayClient, ClientError> {
        let text = std::fs::read_to_string(path).map_err(|e| ClientError(format!("{}: {e}", path.display())))?;
        ReplayClient::from_jsonl(&text)
    }

    pub fn calls(&self) -> usize {
        *self.next.lock().unwrap()
    }
}

impl LlmClient for ReplayClient {
    fn send(&self, _: &[ChatMessage], _: f64) -> Result<String, ClientError> {
        let mut next = self.next.lock().unwrap();
        let reply = self
            .replies
            .get(*next)
            .cloned()
            .ok_or_else(|| ClientError(format!("replay exhausted after {} replies", self.replies.len())))?;
        *next += 1;
        Ok(reply)
    }

    fn deterministic(&self) -> bool {
        true
    }
}

/// One rule of a scripted client. A rule applies when every given condition
/// holds; the first applicable rule supplies the reply.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScriptRule {
    /// 1 for the first reply in a conversation, 2 for the first error round, ...
    pub round: Option<usize>,
    /// Substring that must occur in the first user message.
    pub prompt_contains: Option<String>,
    /// Substring that must be absent from the first user message.
    pub prompt_lacks: Option<String>,
    pub reply: String,
}

/// Stateless canned responder keyed on the conversation round. The script
/// file is a JSON array of [`ScriptRule`]s.
pub struct ScriptedClient {
    rules: Vec<ScriptRule>,
    calls: Mutex<usize>,
}

impl ScriptedClient {
    pub fn new(rules: Vec<ScriptRule>) -> ScriptedClient {
        ScriptedClient {
            rules,
            calls: Mutex::new(0),
        }
    }

    /// Replies with `replies[k]` in round `k + 1`.
    pub fn by_round(replies: &[&str]) -> ScriptedClient {
        ScriptedClient::new(
            replies
                .iter()
                .enumerate()
                .map(|(i, r)| ScriptRule {
                    round: Some(i + 1),
                    prompt_contains: None,
                    prompt_lacks: None,
                    reply: r.to_string(),
                })
                .collect(),
        )
    }

    pub fn from_json(text: &str) -> Result<ScriptedClient, ClientError> {
        let rules = serde_json::from_str(text).map_err(|e| ClientError(format!("bad script: {e}")))?;
        Ok(ScriptedClient::new(rules))
    }

    pub fn from_file(path: &Path) -> Result<ScriptedClient, ClientError> {
        let text = std::fs::read_to_string(path).map_err(|e| ClientError(format!("{}: {e}", path.display())))?;
        ScriptedClient::from_json(&text)
    }

    pub fn calls(&self) -> usize {
        *self.calls.lock().unwrap()
    }
}

impl LlmClient for ScriptedClient {
    fn send(&self, messages: &[ChatMessage], _: f64) -> Result<String, ClientError> {
        *self.calls.lock().unwrap() += 1;
        let round = 1 + messages.iter().filter(|m| m.role == Role::Model).count();
        let prompt = messages
            .iter()
            .find(|m| m.role == Role::User)
            .map(|m| m.content.as_str())
            .unwrap_or("");
        self.rules
            .iter()
            .find(|r| {
                r.round.is_none_or(|n| n == round)
                    && r.prompt_contains.as_deref().is_none_or(|s| prompt.contains(s))
                    && r.prompt_lacks.as_deref().is_none_or(|s| !prompt.contains(s))
            })
            .map(|r| r.reply.clone())
            .ok_or_else(|| ClientError(format!("no script rule for round {round}")))
    }

    fn deterministic(&self) -> bool {
        true
    }
}

/// Wraps a client and appends every reply to a replay fixture.
pub struct RecordingClient<C> {
    inner: C,
    path: PathBuf,
    lock: Mutex<()>,
}

impl<C: LlmClient> RecordingClient<C> {
    /// Truncates `path` so the recording holds only this session's replies.
    pub fn new(inner: C, path: &Path) -> Result<RecordingClient<C>, ClientError> {
        std::fs::write(path, "").map_err(|e| ClientError(format!("{}: {e}", path.display())))?;
        Ok(RecordingClient {
            inner,
            path: path.to_path_buf(),
            lock: Mutex::new(()),
        })
    }
}

impl<C: LlmClient> LlmClient for RecordingClient<C> {
    fn send(&self, messages: &[ChatMessage], temperature: f64) -> Result<String, ClientError> {
        let reply = self.inner.send(messages, temperature)?;
        let _guard = self.lock.lock().unwrap();
        let mut f = OpenOptions::new()
            .append(true)
            .open(&self.path)
            .map_err(|e| ClientError(format!("{}: {e}", self.path.display())))?;
        writeln!(f, "{}", serde_json::to_string(&reply).expect("string serializes"))
            .map_err(|e| ClientError(format!("{}: {e}", self.path.display())))?;
        Ok(reply)
    }

    fn deterministic(&self) -> bool {
        self.inner.deterministic()
    }
}

impl LlmClient for Box<dyn LlmClient> {
    fn send(&self, messages: &[ChatMessage], temperature: f64) -> Result<String, ClientError> {
        (**self).send(messages, temperature)
    }

    fn deterministic(&self) -> bool {
        (**self).deterministic()
    }
}
