//! Chat-completion backends: a blocking HTTP client configured from the
//! environment, and a scripted stub that replays canned replies offline.

use std::sync::Mutex;
use std::time::Duration;

use serde_json::{json, Value};
use thiserror::Error;

pub const ENV_URL: &str = "SP_LLM_URL";
pub const ENV_MODEL: &str = "SP_LLM_MODEL";
pub const ENV_KEY: &str = "SP_LLM_KEY";
/// Where the reply text sits in the response document.
pub const DEFAULT_REPLY_PATH: &str = "choices.0.message.content";
pub const DEADLINE: Duration = Duration::from_secs(30);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LlmError {
    #[error("backend configuration: {0}")]
    Config(String),
    #[error("backend unreachable: {0}")]
    Unreachable(String),
    #[error("backend returned status {0}")]
    Status(u16),
    #[error("no reply text at {0}")]
    MissingReply(String),
    #[error("scripted replies exhausted")]
    Exhausted,
}

pub trait LlmBackend: Send + Sync {
    /// Single-turn completion of `prompt`.
    fn complete(&self, prompt: &str) -> Result<String, LlmError>;
}

/// Follow a dotted path (`choices.0.message.content`) into a document.
pub fn extract_reply(doc: &Value, path: &str) -> Option<String> {
    let mut cur = doc;
    for part in path.split('.').filter(|p| !p.is_empty()) {
        cur = match part.parse::<usize>() {
            Ok(i) => cur.get(i)?,
            Err(_) => cur.get(part)?,
        };
    }
    cur.as_str().map(str::to_string)
}

pub fn request_body(model: &str, prompt: &str) -> Value {
    json!({
        "model": model,
        "messages": [{"role": "user", "content": prompt}],
        "temperature": 0,
    })
}

pub struct HttpBackend {
    pub url: String,
    pub model: String,
    key: Option<String>,
    pub reply_path: String,
    client: reqwest::blocking::Client,
}

impl HttpBackend {
    pub fn new(url: &str, model: &str, key: Option<String>) -> Result<Self, LlmError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(DEADLINE)
            .build()
            .map_err(|e| LlmError::Config(e.to_string()))?;
        Ok(HttpBackend {
            url: url.to_string(),
            model: model.to_string(),
            key,
            reply_path: DEFAULT_REPLY_PATH.to_string(),
            client,
        })
    }

    /// Reads `SP_LLM_URL`, `SP_LLM_MODEL` and the optional `SP_LLM_KEY`.
    pub fn from_env() -> Result<Self, LlmError> {
        let url =
            std::env::var(ENV_URL).map_err(|_| LlmError::Config(format!("{ENV_URL} not set")))?;
        let model = std::env::var(ENV_MODEL)
            .map_err(|_| LlmError::Config(format!("{ENV_MODEL} not set")))?;
        Self::new(&url, &model, std::env::var(ENV_KEY).ok())
    }
}

impl LlmBackend for HttpBackend {
    fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        let mut req = self
            .client
            .post(&self.url)
            .json(&request_body(&self.model, prompt));
        if let Some(k) = &self.key {
            req = req.bearer_auth(k);
        }
        let resp = req
            .send()
            .map_err(|e| LlmError::Unreachable(e.to_string()))?;
        if !resp.status().is_success() {
            return Err(LlmError::Status(resp.status().as_u16()));
        }
        let doc: Value = resp
            .json()
            .map_err(|e| LlmError::Unreachable(e.to_string()))?;
        extract_reply(&doc, &self.reply_path)
            .ok_or_else(|| LlmError::MissingReply(self.reply_path.clone()))
    }
}

/// Replays replies in order and records every prompt it receives.
#[derive(Debug, Default)]
pub struct ScriptedStub {
    replies: Vec<String>,
    cursor: Mutex<usize>,
    prompts: Mutex<Vec<String>>,
}

impl ScriptedStub {
    pub fn new<S: Into<String>>(replies: impl IntoIterator<Item = S>) -> Self {
        ScriptedStub {
            replies: replies.into_iter().map(Into::into).collect(),
            ..Default::default()
        }
    }

    /// Script text: replies separated by lines holding only `---`.
    pub fn parse(text: &str) -> Self {
        let mut replies = Vec::new();
        let mut cur: Vec<&str> = Vec::new();
        for line in text.lines() {
            if line.trim() == "---" {
                replies.push(cur.join("\n"));
                cur.clear();
            } else {
                cur.push(line);
            }
        }
        if !cur.is_empty() {
            replies.push(cur.join("\n"));
        }
        Self::new(replies)
    }

    pub fn prompts(&self) -> Vec<String> {
        self.prompts.lock().unwrap().clone()
    }

    pub fn remaining(&self) -> usize {
        self.replies.len() - *self.cursor.lock().unwrap()
    }
}

impl LlmBackend for ScriptedStub {
    fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        self.prompts.lock().unwrap().push(prompt.to_string());
        let mut c = self.cursor.lock().unwrap();
        let reply = self.replies.get(*c).cloned().ok_or(LlmError::Exhausted)?;
        *c += 1;
        Ok(reply)
    }
}

/// First balanced parenthesized expression in a reply, if any.
pub fn first_sexpr(reply: &str) -> Option<&str> {
    let start = reply.find('(')?;
    let mut depth = 0usize;
    for (i, ch) in reply[start..].char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth == 0 {
                    return Some(&reply[start..start + i + 1]);
                }
            }
            _ => {}
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reply_path_extraction() {
        let doc = json!({"choices": [{"message": {"content": "(pick apple)"}}]});
        assert_eq!(
            extract_reply(&doc, DEFAULT_REPLY_PATH).as_deref(),
            Some("(pick apple)")
        );
        assert_eq!(extract_reply(&doc, "choices.1.message.content"), None);
        assert_eq!(
            extract_reply(&json!({"text": "hi"}), "text").as_deref(),
            Some("hi")
        );
    }

    #[test]
    fn request_shape() {
        let b = request_body("m", "p");
        assert_eq!(b["model"], "m");
        assert_eq!(b["messages"][0]["role"], "user");
        assert_eq!(b["messages"][0]["content"], "p");
        assert_eq!(b["temperature"], 0);
    }

    #[test]
    fn stub_replays_and_records() {
        let s = ScriptedStub::parse("first\n---\nsecond line\nmore\n---\nthird");
        assert_eq!(s.complete("a").unwrap(), "first");
        assert_eq!(s.complete("b").unwrap(), "second line\nmore");
        assert_eq!(s.remaining(), 1);
        assert_eq!(s.complete("c").unwrap(), "third");
        assert_eq!(s.complete("d"), Err(LlmError::Exhausted));
        assert_eq!(s.prompts(), ["a", "b", "c", "d"]);
    }

    #[test]
    fn sexpr_extraction() {
        assert_eq!(
            first_sexpr("Sure: (and (on a b)) done"),
            Some("(and (on a b))")
        );
        assert_eq!(first_sexpr("no parens"), None);
        assert_eq!(first_sexpr("(unbalanced"), None);
    }

    #[test]
    fn unreachable_endpoint_is_an_error() {
        // port 9 on localhost refuses connections; no traffic leaves the host
        let b = HttpBackend::new("http://127.0.0.1:9/v1/chat", "m", None).unwrap();
        assert!(matches!(b.complete("x"), Err(LlmError::Unreachable(_))));
    }
}
