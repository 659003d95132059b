use std::time::Duration;

use serde::Deserialize;
use serde_json::json;

use super::{Backend, BackendKind, CompletionRequest, GatewayError, Sampling};

pub const DEFAULT_BASE_URL: &str = "https://api.openai.com/v1";
pub const DEFAULT_KEY_VAR: &str = "OPENAI_API_KEY";

/// OpenAI-compatible `/chat/completions` over HTTPS. Other providers work
/// through the same wire shape by changing the base URL.
pub struct LiveBackend {
    base_url: String,
    api_key: String,
    client: reqwest::blocking::Client,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Deserialize)]
struct Message {
    #[serde(default)]
    content: Option<String>,
}

impl LiveBackend {
    pub fn new(base_url: &str, api_key: &str, timeout: Duration) -> Result<Self, GatewayError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| GatewayError::Config(e.to_string()))?;
        Ok(LiveBackend { base_url: base_url.trim_end_matches('/').to_string(), api_key: api_key.to_string(), client })
    }

    /// Reads the credential from `key_var`.
    pub fn from_env(base_url: &str, key_var: &str, timeout: Duration) -> Result<Self, GatewayError> {
        let key = std::env::var(key_var)
            .ok()
            .filter(|k| !k.trim().is_empty())
            .ok_or_else(|| GatewayError::Auth(format!("environment variable {key_var} is not set")))?;
        Self::new(base_url, &key, timeout)
    }

    pub fn body(request: &CompletionRequest) -> serde_json::Value {
        let mut body = json!({
            "model": request.model_id,
            "messages": [{ "role": "user", "content": request.prompt }],
        });
        if let Sampling::Explicit { temperature, max_tokens } = request.sampling {
            if let Some(t) = temperature {
                body["temperature"] = json!(t);
            }
            if let Some(m) = max_tokens {
                body["max_tokens"] = json!(m);
            }
        }
        body
    }
}

fn classify_status(status: u16, body: String) -> GatewayError {
    match status {
        401 | 403 => GatewayError::Auth(body),
        429 => GatewayError::RateLimited { attempts: 1 },
        500..=599 => GatewayError::Transport(format!("status {status}: {body}")),
        _ => GatewayError::Rejected { status, body },
    }
}

impl Backend for LiveBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Live
    }

    fn call(&self, request: &CompletionRequest) -> Result<String, GatewayError> {
        let response = self
            .client
            .post(format!("{}/chat/completions", self.base_url))
            .bearer_auth(&self.api_key)
            .json(&Self::body(request))
            .send()
            .map_err(|e| GatewayError::Transport(e.to_string()))?;
        let status = response.status().as_u16();
        let text = response.text().map_err(|e| GatewayError::Transport(e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(classify_status(status, text));
        }
        let parsed: ChatResponse =
            serde_json::from_str(&text).map_err(|e| GatewayError::Transport(format!("malformed response: {e}")))?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| GatewayError::Transport("response has no message content".into()))
    }
}
