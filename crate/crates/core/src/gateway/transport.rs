use std::time::Duration;

use serde_json::Value;

use super::GatewayError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TransportError {
    /// Worth retrying: timeouts, connection resets, 429 and 5xx.
    Transient(String),
    /// 401 / 403.
    Auth(String),
    /// Anything else; not retried.
    Fatal(String),
}

/// Posts a JSON body and returns the decoded JSON response.
pub trait Transport: Send + Sync {
    fn post(&self, url: &str, api_key: &str, body: &Value) -> Result<Value, TransportError>;
}

pub struct HttpTransport {
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new(timeout: Duration) -> Result<Self, GatewayError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| GatewayError::Request(e.to_string()))?;
        Ok(Self { client })
    }
}

impl Transport for HttpTransport {
    fn post(&self, url: &str, api_key: &str, body: &Value) -> Result<Value, TransportError> {
        let response = self
            .client
            .post(url)
            .bearer_auth(api_key)
            .json(body)
            .send()
            .map_err(|e| {
                if e.is_timeout() || e.is_connect() || e.is_request() {
                    TransportError::Transient(e.to_string())
                } else {
                    TransportError::Fatal(e.to_string())
                }
            })?;
        let status = response.status();
        let text = response
            .text()
            .map_err(|e| TransportError::Transient(e.to_string()))?;
        match status.as_u16() {
            200..=299 => serde_json::from_str(&text)
                .map_err(|e| TransportError::Fatal(format!("invalid JSON body: {e}"))),
            401 | 403 => Err(TransportError::Auth(format!("{status}: {text}"))),
            408 | 429 | 500..=599 => Err(TransportError::Transient(format!("{status}: {text}"))),
            _ => Err(TransportError::Fatal(format!("{status}: {text}"))),
        }
    }
}
