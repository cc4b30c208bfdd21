//! HTTP clients for chat-completion and embedding services speaking the
//! common OpenAI-style wire format. Frames travel as base64 PNG data URLs;
//! transient failures retry with capped exponential backoff; services that
//! reject structured-output constraints fall back to an unconstrained call
//! whose response is validated locally.

use std::sync::Arc;
use std::time::Duration;

use base64::Engine;
use serde_json::{json, Value};

use crate::backends::{EmbeddingBackend, LlmBackend, OutputSchema, VlmBackend};
use crate::error::{Error, Result};
use crate::io::config::RemoteSection;
use crate::Frame;

const BACKOFF_BASE_MS: u64 = 250;
const BACKOFF_CAP_MS: u64 = 4_000;

/// Delay before retry `attempt` (1-based): base doubling per attempt,
/// capped.
pub fn backoff_delay(attempt: u32) -> Duration {
    let exp = attempt.saturating_sub(1).min(16);
    Duration::from_millis((BACKOFF_BASE_MS << exp).min(BACKOFF_CAP_MS))
}

pub fn encode_frame_png_base64(frame: &Frame) -> Result<String> {
    let mut bytes = Vec::new();
    image::write_buffer_with_format(
        &mut std::io::Cursor::new(&mut bytes),
        frame.as_raw(),
        frame.width(),
        frame.height(),
        image::ExtendedColorType::Rgb8,
        image::ImageFormat::Png,
    )
    .map_err(|e| Error::backend("remote", format!("frame encoding failed: {e}")))?;
    Ok(format!(
        "data:image/png;base64,{}",
        base64::engine::general_purpose::STANDARD.encode(&bytes)
    ))
}

/// Chat-completion request body. With images the user content is a part
/// list; text-only prompts stay a plain string. A schema becomes a
/// `response_format` constraint.
pub fn chat_request_body(
    model: &str,
    prompt: &str,
    image_urls: &[String],
    schema: Option<&OutputSchema>,
) -> Value {
    let content = if image_urls.is_empty() {
        json!(prompt)
    } else {
        let mut parts = vec![json!({"type": "text", "text": prompt})];
        for url in image_urls {
            parts.push(json!({"type": "image_url", "image_url": {"url": url}}));
        }
        json!(parts)
    };
    let mut body = json!({
        "model": model,
        "messages": [{"role": "user", "content": content}],
        "temperature": 0,
    });
    if let Some(s) = schema {
        body["response_format"] = json!({
            "type": "json_schema",
            "json_schema": {"name": s.name, "schema": s.json_schema, "strict": true},
        });
    }
    body
}

pub fn embedding_request_body(model: &str, text: &str) -> Value {
    json!({"model": model, "input": [text]})
}

pub fn parse_chat_response(v: &Value) -> Result<String> {
    v["choices"][0]["message"]["content"]
        .as_str()
        .map(str::to_owned)
        .ok_or_else(|| {
            Error::backend(
                "remote",
                format!("chat response has no message content: {}", truncate(v)),
            )
        })
}

pub fn parse_embedding_response(v: &Value) -> Result<Vec<f64>> {
    let arr = v["data"][0]["embedding"].as_array().ok_or_else(|| {
        Error::backend(
            "remote",
            format!("embedding response has no vector: {}", truncate(v)),
        )
    })?;
    arr.iter()
        .map(|x| {
            x.as_f64().ok_or_else(|| {
                Error::backend("remote", "embedding vector holds a non-numeric entry")
            })
        })
        .collect()
}

/// Post-hoc check used when a service cannot enforce the schema itself:
/// the payload must parse as JSON and its root must be the declared type.
/// Finer-grained violations surface from the pipeline's own parsers.
pub fn validate_schema_locally(text: &str, schema: &OutputSchema) -> Result<()> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::SchemaViolation {
        reason: format!("unconstrained response is not valid JSON: {e}"),
        raw: text.to_string(),
    })?;
    let expected = schema.json_schema["type"].as_str().unwrap_or("object");
    let actual = match &value {
        Value::Object(_) => "object",
        Value::Array(_) => "array",
        Value::String(_) => "string",
        Value::Number(_) => "number",
        Value::Bool(_) => "boolean",
        Value::Null => "null",
    };
    if actual != expected {
        return Err(Error::SchemaViolation {
            reason: format!("response root is a JSON {actual}, schema expects {expected}"),
            raw: text.to_string(),
        });
    }
    Ok(())
}

fn truncate(v: &Value) -> String {
    let mut s = v.to_string();
    if s.len() > 200 {
        s.truncate(200);
        s.push_str("...");
    }
    s
}

pub struct RemoteClient {
    agent: ureq::Agent,
    endpoint: String,
    api_key: Option<String>,
    max_retries: u32,
}

impl RemoteClient {
    /// Build a client from the config section, reading the API key from the
    /// environment variable it names. The key never appears in config files
    /// or transcripts.
    pub fn new(section: &RemoteSection) -> Result<Arc<Self>> {
        if section.endpoint.is_empty() {
            return Err(Error::backend("remote", "no endpoint configured"));
        }
        let api_key = match &section.api_key_env {
            Some(var) => Some(std::env::var(var).map_err(|_| {
                Error::backend(
                    "remote",
                    format!("environment variable {var} named by api_key_env is not set"),
                )
            })?),
            None => None,
        };
        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_secs(section.timeout_secs))
            .build();
        Ok(Arc::new(RemoteClient {
            agent,
            endpoint: section.endpoint.trim_end_matches('/').to_string(),
            api_key,
            max_retries: section.max_retries,
        }))
    }

    /// POST with retries on transport errors, 429, and 5xx; other statuses
    /// fail immediately. `Err(status)` in the return carries a client error
    /// so the caller can run the structured-output fallback on 400.
    fn post_json(&self, path: &str, body: &Value) -> std::result::Result<Value, PostError> {
        let url = format!("{}{}", self.endpoint, path);
        let mut attempt = 0u32;
        loop {
            attempt += 1;
            let mut req = self.agent.post(&url);
            if let Some(key) = &self.api_key {
                req = req.set("Authorization", &format!("Bearer {key}"));
            }
            match req.send_json(body.clone()) {
                Ok(resp) => {
                    return resp.into_json::<Value>().map_err(|e| {
                        PostError::Fatal(Error::backend(
                            "remote",
                            format!("{url}: response is not JSON: {e}"),
                        ))
                    })
                }
                Err(ureq::Error::Status(status, resp)) => {
                    let detail = resp.into_string().unwrap_or_default();
                    if (status == 429 || status >= 500) && attempt <= self.max_retries {
                        std::thread::sleep(backoff_delay(attempt));
                        continue;
                    }
                    return Err(PostError::Status(
                        status,
                        Error::backend(
                            "remote",
                            format!("{url}: status {status} after {attempt} attempt(s): {detail}"),
                        ),
                    ));
                }
                Err(ureq::Error::Transport(t)) => {
                    if attempt <= self.max_retries {
                        std::thread::sleep(backoff_delay(attempt));
                        continue;
                    }
                    return Err(PostError::Fatal(Error::backend(
                        "remote",
                        format!("{url}: transport failure after {attempt} attempt(s): {t}"),
                    )));
                }
            }
        }
    }
}

enum PostError {
    /// HTTP status carried separately so callers can branch on it.
    Status(u16, Error),
    Fatal(Error),
}

impl From<PostError> for Error {
    fn from(e: PostError) -> Self {
        match e {
            PostError::Status(_, e) | PostError::Fatal(e) => e,
        }
    }
}

pub struct RemoteVlm {
    pub client: Arc<RemoteClient>,
    pub model: String,
}

impl VlmBackend for RemoteVlm {
    fn describe(&self, prompt: &str, frames: &[Frame]) -> Result<String> {
        let images: Vec<String> = frames
            .iter()
            .map(encode_frame_png_base64)
            .collect::<Result<_>>()?;
        let body = chat_request_body(&self.model, prompt, &images, None);
        let resp = self.client.post_json("/chat/completions", &body).map_err(Error::from)?;
        parse_chat_response(&resp)
    }
}

pub struct RemoteLlm {
    pub client: Arc<RemoteClient>,
    pub model: String,
}

impl LlmBackend for RemoteLlm {
    fn complete(&self, prompt: &str, schema: Option<&OutputSchema>) -> Result<String> {
        let body = chat_request_body(&self.model, prompt, &[], schema);
        match self.client.post_json("/chat/completions", &body) {
            Ok(resp) => parse_chat_response(&resp),
            // A client rejection of a constrained request usually means the
            // service has no structured-output support: ask again without
            // the constraint and validate the answer ourselves.
            Err(PostError::Status(400, _)) if schema.is_some() => {
                let plain = chat_request_body(&self.model, prompt, &[], None);
                let resp = self.client.post_json("/chat/completions", &plain).map_err(Error::from)?;
                let text = parse_chat_response(&resp)?;
                validate_schema_locally(&text, schema.expect("checked above"))?;
                Ok(text)
            }
            Err(e) => Err(e.into()),
        }
    }
}

pub struct RemoteEmbedder {
    pub client: Arc<RemoteClient>,
    pub model: String,
}

impl EmbeddingBackend for RemoteEmbedder {
    fn embed(&self, text: &str) -> Result<Vec<f64>> {
        let body = embedding_request_body(&self.model, text);
        let resp = self.client.post_json("/embeddings", &body).map_err(Error::from)?;
        parse_embedding_response(&resp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backoff_doubles_and_caps() {
        assert_eq!(backoff_delay(1), Duration::from_millis(250));
        assert_eq!(backoff_delay(2), Duration::from_millis(500));
        assert_eq!(backoff_delay(3), Duration::from_millis(1000));
        assert_eq!(backoff_delay(6), Duration::from_millis(4000));
        assert_eq!(backoff_delay(60), Duration::from_millis(4000));
    }

    #[test]
    fn text_only_chat_body_uses_plain_content() {
        let body = chat_request_body("chat-large", "hello", &[], None);
        assert_eq!(body["model"], "chat-large");
        assert_eq!(body["messages"][0]["role"], "user");
        assert_eq!(body["messages"][0]["content"], "hello");
        assert!(body.get("response_format").is_none());
    }

    #[test]
    fn image_chat_body_attaches_data_urls() {
        let frame = Frame::from_pixel(4, 2, image::Rgb([10, 20, 30]));
        let url = encode_frame_png_base64(&frame).unwrap();
        assert!(url.starts_with("data:image/png;base64,"));
        let body = chat_request_body("vlm", "describe", std::slice::from_ref(&url), None);
        let content = body["messages"][0]["content"].as_array().unwrap();
        assert_eq!(content[0]["type"], "text");
        assert_eq!(content[0]["text"], "describe");
        assert_eq!(content[1]["type"], "image_url");
        assert_eq!(content[1]["image_url"]["url"], url.as_str());
    }

    #[test]
    fn encoded_frame_round_trips_through_png() {
        let mut frame = Frame::from_pixel(5, 3, image::Rgb([1, 2, 3]));
        frame.put_pixel(4, 2, image::Rgb([200, 100, 50]));
        let url = encode_frame_png_base64(&frame).unwrap();
        let b64 = url.strip_prefix("data:image/png;base64,").unwrap();
        let bytes = base64::engine::general_purpose::STANDARD.decode(b64).unwrap();
        let decoded = image::load_from_memory(&bytes).unwrap().to_rgb8();
        assert_eq!(decoded.as_raw(), frame.as_raw());
    }

    #[test]
    fn schema_becomes_response_format() {
        let schema = OutputSchema::new("verbs", serde_json::json!({"type": "object"}));
        let body = chat_request_body("m", "p", &[], Some(&schema));
        assert_eq!(body["response_format"]["type"], "json_schema");
        assert_eq!(body["response_format"]["json_schema"]["name"], "verbs");
        assert_eq!(body["response_format"]["json_schema"]["strict"], true);
        assert_eq!(
            body["response_format"]["json_schema"]["schema"]["type"],
            "object"
        );
    }

    #[test]
    fn embedding_body_and_response_round_trip() {
        let body = embedding_request_body("embed-small", "talk");
        assert_eq!(body["input"][0], "talk");
        let resp = serde_json::json!({"data": [{"embedding": [0.25, -1.0, 3.5]}]});
        assert_eq!(parse_embedding_response(&resp).unwrap(), vec![0.25, -1.0, 3.5]);
        let bad = serde_json::json!({"data": []});
        assert!(parse_embedding_response(&bad).is_err());
    }

    #[test]
    fn chat_response_parsing_extracts_content() {
        let resp = serde_json::json!({
            "choices": [{"message": {"role": "assistant", "content": "Two people talk."}}]
        });
        assert_eq!(parse_chat_response(&resp).unwrap(), "Two people talk.");
        assert!(parse_chat_response(&serde_json::json!({"choices": []})).is_err());
    }

    #[test]
    fn local_validation_checks_json_and_root_type() {
        let schema = OutputSchema::new("verbs", serde_json::json!({"type": "object"}));
        assert!(validate_schema_locally("{\"ID_1\":{}}", &schema).is_ok());
        assert!(matches!(
            validate_schema_locally("not json", &schema),
            Err(Error::SchemaViolation { .. })
        ));
        assert!(matches!(
            validate_schema_locally("[1,2]", &schema),
            Err(Error::SchemaViolation { .. })
        ));
    }

    #[test]
    fn missing_api_key_env_is_reported() {
        let section = RemoteSection {
            endpoint: "https://models.example/v1".to_string(),
            api_key_env: Some("SEMTRACK_TEST_KEY_THAT_IS_NOT_SET".to_string()),
            ..RemoteSection::default()
        };
        let err = RemoteClient::new(&section).err().unwrap();
        assert!(err.to_string().contains("SEMTRACK_TEST_KEY_THAT_IS_NOT_SET"));
    }
}
