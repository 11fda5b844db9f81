//! Shared HTTP error classification for the remote clients.

use std::time::Duration;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetError {
    /// Transport failure or non-success HTTP status.
    #[error("network error: {message}")]
    Network { message: String, retryable: bool },
    /// The server answered but the body could not be understood.
    #[error("protocol error: {0}")]
    Protocol(String),
}

impl NetError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, NetError::Network { retryable: true, .. })
    }
}

impl From<ureq::Error> for NetError {
    fn from(err: ureq::Error) -> Self {
        match err {
            ureq::Error::Status(code, _) => NetError::Network {
                message: format!("HTTP status {code}"),
                retryable: code == 429 || code >= 500,
            },
            ureq::Error::Transport(t) => NetError::Network {
                message: t.to_string(),
                retryable: true,
            },
        }
    }
}

pub(crate) fn agent(timeout: Duration) -> ureq::Agent {
    ureq::AgentBuilder::new().timeout(timeout).build()
}

pub(crate) fn read_body(response: ureq::Response) -> Result<String, NetError> {
    response.into_string().map_err(|e| NetError::Network {
        message: format!("reading response body: {e}"),
        retryable: true,
    })
}
