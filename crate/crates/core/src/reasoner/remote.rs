use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{Backend, Completion, DecisionRequest, Prompt, ReasonerError, TokenUsage};

pub const ENV_URL: &str = "SAIL_REASONER_URL";
pub const ENV_API_KEY: &str = "SAIL_REASONER_API_KEY";
pub const ENV_MODEL: &str = "SAIL_REASONER_MODEL";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RemoteConfig {
    pub base_url: String,
    pub api_key: Option<String>,
    pub model: String,
    /// Extra attempts after the first on transport errors, 429 and 5xx.
    pub max_retries: u32,
    pub backoff: Duration,
    pub timeout: Duration,
}

impl RemoteConfig {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>) -> Self {
        RemoteConfig {
            base_url: base_url.into(),
            api_key: None,
            model: model.into(),
            max_retries: 2,
            backoff: Duration::from_millis(250),
            timeout: Duration::from_secs(120),
        }
    }

    /// Reads `SAIL_REASONER_URL`, `SAIL_REASONER_API_KEY` and `SAIL_REASONER_MODEL`.
    pub fn from_env() -> Result<Self, String> {
        let url = std::env::var(ENV_URL).map_err(|_| format!("{ENV_URL} is not set"))?;
        let model = std::env::var(ENV_MODEL).map_err(|_| format!("{ENV_MODEL} is not set"))?;
        let mut cfg = RemoteConfig::new(url, model);
        cfg.api_key = std::env::var(ENV_API_KEY).ok().filter(|k| !k.is_empty());
        Ok(cfg)
    }
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    temperature: u8,
    messages: [Message<'a>; 2],
}

#[derive(Serialize)]
struct Message<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
    #[serde(default)]
    usage: Option<Usage>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChoiceMessage,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    content: String,
}

#[derive(Deserialize)]
struct Usage {
    #[serde(default)]
    prompt_tokens: u64,
    #[serde(default)]
    completion_tokens: u64,
}

/// Chat-completion client. Temperature is always 0.
pub struct RemoteBackend {
    cfg: RemoteConfig,
    client: reqwest::blocking::Client,
}

impl RemoteBackend {
    pub fn new(cfg: RemoteConfig) -> Result<Self, ReasonerError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(cfg.timeout)
            .build()
            .map_err(|e| ReasonerError::BackendUnavailable(e.to_string()))?;
        Ok(RemoteBackend { cfg, client })
    }

    pub fn endpoint(&self) -> String {
        format!("{}/v1/chat/completions", self.cfg.base_url.trim_end_matches('/'))
    }

    fn attempt(&self, prompt: &Prompt) -> Result<ChatResponse, (bool, String)> {
        let body = ChatRequest {
            model: &self.cfg.model,
            temperature: 0,
            messages: [
                Message { role: "system", content: &prompt.system },
                Message { role: "user", content: &prompt.user },
            ],
        };
        let mut req = self.client.post(self.endpoint()).json(&body);
        if let Some(key) = &self.cfg.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| (true, e.to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            let retry = status.is_server_error() || status.as_u16() == 429;
            let text = resp.text().unwrap_or_default();
            return Err((retry, format!("HTTP {status}: {text}")));
        }
        resp.json::<ChatResponse>().map_err(|e| (false, format!("bad response body: {e}")))
    }
}

impl Backend for RemoteBackend {
    fn name(&self) -> &str {
        "remote"
    }

    fn complete(&self, _req: &DecisionRequest, prompt: &Prompt) -> Result<Completion, ReasonerError> {
        let started = Instant::now();
        let mut last = String::new();
        for attempt in 0..=self.cfg.max_retries {
            if attempt > 0 {
                std::thread::sleep(self.cfg.backoff * 2u32.pow(attempt - 1));
            }
            match self.attempt(prompt) {
                Ok(resp) => {
                    let content = resp
                        .choices
                        .into_iter()
                        .next()
                        .map(|c| c.message.content)
                        .ok_or_else(|| ReasonerError::BackendUnavailable("response has no choices".into()))?;
                    return Ok(Completion {
                        text: content,
                        latency_ms: Some(started.elapsed().as_millis() as u64),
                        usage: resp.usage.map(|u| TokenUsage {
                            prompt_tokens: u.prompt_tokens,
                            completion_tokens: u.completion_tokens,
                        }),
                    });
                }
                Err((retry, msg)) => {
                    last = msg;
                    if !retry {
                        break;
                    }
                }
            }
        }
        Err(ReasonerError::BackendUnavailable(last))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoint_joins_cleanly() {
        let b = RemoteBackend::new(RemoteConfig::new("http://localhost:9/", "m")).unwrap();
        assert_eq!(b.endpoint(), "http://localhost:9/v1/chat/completions");
    }

    #[test]
    fn request_body_shape() {
        let body = ChatRequest {
            model: "m",
            temperature: 0,
            messages: [Message { role: "system", content: "s" }, Message { role: "user", content: "u" }],
        };
        assert_eq!(
            serde_json::to_string(&body).unwrap(),
            r#"{"model":"m","temperature":0,"messages":[{"role":"system","content":"s"},{"role":"user","content":"u"}]}"#
        );
    }

    #[test]
    fn unreachable_server_is_unavailable() {
        let mut cfg = RemoteConfig::new("http://127.0.0.1:1", "m");
        cfg.max_retries = 1;
        cfg.backoff = Duration::from_millis(1);
        let b = RemoteBackend::new(cfg).unwrap();
        let req = DecisionRequest::new(super::super::DecisionKind::ConcludeGoal, Default::default());
        let prompt = Prompt { system: "s".into(), user: "u".into() };
        assert!(matches!(b.complete(&req, &prompt), Err(ReasonerError::BackendUnavailable(_))));
    }
}
