use thiserror::Error;

use super::{check_text, BackendDiagnostics};

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("request to {endpoint} failed: {message}")]
    Request { endpoint: String, message: String },
    #[error("backend at {endpoint} answered with status {status}")]
    Status { endpoint: String, status: u16 },
    #[error("backend at {endpoint} sent an unreadable response: {message}")]
    Response { endpoint: String, message: String },
}

/// Something that can check a formal document for integrity.
pub trait FormalChecker: Send + Sync {
    fn check(&self, text: &str) -> Result<BackendDiagnostics, TransportError>;
}

/// In-process checking, no network.
#[derive(Debug, Clone, Copy, Default)]
pub struct LocalChecker;

impl FormalChecker for LocalChecker {
    fn check(&self, text: &str) -> Result<BackendDiagnostics, TransportError> {
        Ok(check_text(text))
    }
}

#[derive(Debug, Clone)]
pub struct RemoteChecker {
    pub endpoint: String,
}

impl RemoteChecker {
    pub fn new(endpoint: impl Into<String>) -> Self {
        RemoteChecker {
            endpoint: endpoint.into(),
        }
    }
}

impl FormalChecker for RemoteChecker {
    fn check(&self, text: &str) -> Result<BackendDiagnostics, TransportError> {
        submit_to_backend(&self.endpoint, text)
    }
}

fn check_url(endpoint: &str) -> String {
    let trimmed = endpoint.trim_end_matches('/');
    if trimmed.ends_with("/check") {
        trimmed.to_string()
    } else {
        format!("{trimmed}/check")
    }
}

/// POSTs the document text to `{endpoint}/check` and decodes the diagnostics.
pub fn submit_to_backend(endpoint: &str, text: &str) -> Result<BackendDiagnostics, TransportError> {
    let url = check_url(endpoint);
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .http_status_as_error(false)
        .timeout_global(Some(std::time::Duration::from_secs(30)))
        .build()
        .into();
    let mut response = agent
        .post(&url)
        .content_type("text/plain; charset=utf-8")
        .send(text)
        .map_err(|e| TransportError::Request {
            endpoint: url.clone(),
            message: e.to_string(),
        })?;
    let status = response.status().as_u16();
    if !(200..300).contains(&status) {
        return Err(TransportError::Status { endpoint: url, status });
    }
    let body = response
        .body_mut()
        .read_to_string()
        .map_err(|e| TransportError::Response {
            endpoint: url.clone(),
            message: e.to_string(),
        })?;
    let diagnostics: BackendDiagnostics = serde_json::from_str(&body).map_err(|e| TransportError::Response {
        endpoint: url.clone(),
        message: e.to_string(),
    })?;
    if !diagnostics.is_consistent() {
        return Err(TransportError::Response {
            endpoint: url,
            message: "`ok` disagrees with the reported entries".into(),
        });
    }
    Ok(diagnostics)
}
