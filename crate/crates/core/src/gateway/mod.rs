//! One abstraction for the three model roles: the CQL translator, the entity
//! selector used during query repair, and the retrieval reader.
//!
//! A [`Gateway`] wraps a [`ModelBackend`] (the OpenAI-compatible
//! [`HttpBackend`] or the deterministic [`StubBackend`]) and adds request
//! validation, retries for transport failures, and an in-flight cap.

mod http;
mod prompts;
mod stub;

use std::fmt;
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kg::Triple;

pub use http::{HttpBackend, HttpConfig};
pub use prompts::PromptTemplate;
pub use stub::{grounded_tails, most_similar, StubBackend, TranslationTableError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Translator,
    Selector,
    Reader,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Translator => "translator",
            Role::Selector => "selector",
            Role::Reader => "reader",
        })
    }
}

/// Structured form of what a request asks for. Live backends only see the
/// rendered prompt text; stub backends answer from this directly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Task {
    Translate {
        question: String,
    },
    Select {
        question: String,
        mention: String,
        candidates: Vec<String>,
    },
    Read {
        question: String,
        triples: Vec<Triple>,
        verbalized: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelRequest {
    pub role: Role,
    pub system_instruction: String,
    pub user_content: String,
    pub temperature: f64,
    pub max_output: u32,
    pub task: Task,
}

impl ModelRequest {
    pub fn translate(question: &str) -> Self {
        let (system, user) = PromptTemplate::translator().render(&[("question", question)]);
        Self::build(Role::Translator, system, user, 512, Task::Translate {
            question: question.to_owned(),
        })
    }

    pub fn select(question: &str, mention: &str, candidates: &[String]) -> Self {
        let listing: Vec<String> = candidates
            .iter()
            .enumerate()
            .map(|(i, c)| format!("{}. {c}", i + 1))
            .collect();
        let (system, user) = PromptTemplate::selector().render(&[
            ("question", question),
            ("mention", mention),
            ("candidates", &listing.join("\n")),
        ]);
        Self::build(Role::Selector, system, user, 128, Task::Select {
            question: question.to_owned(),
            mention: mention.to_owned(),
            candidates: candidates.to_vec(),
        })
    }

    pub fn read(question: &str, triples: &[Triple], verbalized: &str) -> Self {
        let (system, user) = PromptTemplate::reader()
            .render(&[("question", question), ("knowledge", verbalized)]);
        Self::build(Role::Reader, system, user, 512, Task::Read {
            question: question.to_owned(),
            triples: triples.to_vec(),
            verbalized: verbalized.to_owned(),
        })
    }

    fn build(role: Role, system: String, user: String, max_output: u32, task: Task) -> Self {
        Self {
            role,
            system_instruction: system,
            user_content: user,
            temperature: 0.0,
            max_output,
            task,
        }
    }

    fn validate(&self) -> Result<(), GatewayError> {
        if self.user_content.trim().is_empty() {
            return Err(GatewayError::InvalidRequest("empty user content".into()));
        }
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err(GatewayError::InvalidRequest(format!(
                "temperature {} must be non-negative",
                self.temperature
            )));
        }
        if self.max_output == 0 {
            return Err(GatewayError::InvalidRequest("max_output must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelResponse {
    pub text: String,
    pub latency: Duration,
    pub backend_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GatewayError {
    #[error("{backend}: transport failure after {attempts} attempt(s): {message}")]
    Transport {
        backend: String,
        attempts: u32,
        message: String,
    },
    #[error("{backend}: timed out after {attempts} attempt(s)")]
    Timeout { backend: String, attempts: u32 },
    #[error("{backend}: HTTP status {status} (attempt {attempts}): {body}")]
    Status {
        backend: String,
        status: u16,
        attempts: u32,
        body: String,
    },
    #[error("{backend}: malformed response: {message}")]
    Malformed { backend: String, message: String },
    #[error("invalid request: {0}")]
    InvalidRequest(String),
}

impl GatewayError {
    /// Only transport-level failures are worth another attempt.
    pub fn is_retryable(&self) -> bool {
        matches!(self, GatewayError::Transport { .. } | GatewayError::Timeout { .. })
    }

    fn with_attempts(self, n: u32) -> Self {
        match self {
            GatewayError::Transport { backend, message, .. } => GatewayError::Transport {
                backend,
                attempts: n,
                message,
            },
            GatewayError::Timeout { backend, .. } => GatewayError::Timeout {
                backend,
                attempts: n,
            },
            GatewayError::Status {
                backend,
                status,
                body,
                ..
            } => GatewayError::Status {
                backend,
                status,
                attempts: n,
                body,
            },
            other => other,
        }
    }
}

/// A model endpoint. `complete` performs exactly one exchange and returns
/// the output text verbatim.
pub trait ModelBackend: Send + Sync {
    fn id(&self) -> &str;
    fn complete(&self, request: &ModelRequest) -> Result<String, GatewayError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: 3,
            base_delay_ms: 250,
        }
    }
}

impl RetryPolicy {
    fn delay(&self, retry: u32) -> Duration {
        Duration::from_millis(self.base_delay_ms.saturating_mul(1 << retry.min(16)))
    }
}

/// Counting semaphore bounding in-flight requests.
#[derive(Debug)]
struct Limiter {
    cap: usize,
    in_flight: Mutex<usize>,
    freed: Condvar,
}

impl Limiter {
    fn new(cap: usize) -> Self {
        Self {
            cap: cap.max(1),
            in_flight: Mutex::new(0),
            freed: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut n = self.in_flight.lock().unwrap_or_else(|e| e.into_inner());
        while *n >= self.cap {
            n = self.freed.wait(n).unwrap_or_else(|e| e.into_inner());
        }
        *n += 1;
        Permit(self)
    }
}

struct Permit<'a>(&'a Limiter);

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut n = self.0.in_flight.lock().unwrap_or_else(|e| e.into_inner());
        *n -= 1;
        self.0.freed.notify_one();
    }
}

#[derive(Clone)]
pub struct Gateway {
    backend: Arc<dyn ModelBackend>,
    retry: RetryPolicy,
    limiter: Arc<Limiter>,
}

impl fmt::Debug for Gateway {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Gateway")
            .field("backend", &self.backend.id())
            .field("retry", &self.retry)
            .field("cap", &self.limiter.cap)
            .finish()
    }
}

impl Gateway {
    pub fn new(backend: Arc<dyn ModelBackend>) -> Self {
        Self {
            backend,
            retry: RetryPolicy::default(),
            limiter: Arc::new(Limiter::new(usize::MAX)),
        }
    }

    /// Gateway over a [`StubBackend`] with no translation table.
    pub fn stub() -> Self {
        Self::new(Arc::new(StubBackend::default()))
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn with_concurrency(mut self, cap: usize) -> Self {
        self.limiter = Arc::new(Limiter::new(cap));
        self
    }

    pub fn backend_id(&self) -> &str {
        self.backend.id()
    }

    pub fn generate(&self, request: &ModelRequest) -> Result<ModelResponse, GatewayError> {
        generate_with(request, self.backend.as_ref(), &self.retry, Some(&self.limiter))
    }
}

/// One request against `backend` with the default retry policy.
pub fn generate(request: &ModelRequest, backend: &dyn ModelBackend) -> Result<ModelResponse, GatewayError> {
    generate_with(request, backend, &RetryPolicy::default(), None)
}

fn generate_with(
    request: &ModelRequest,
    backend: &dyn ModelBackend,
    retry: &RetryPolicy,
    limiter: Option<&Limiter>,
) -> Result<ModelResponse, GatewayError> {
    request.validate()?;
    let mut attempt = 0;
    loop {
        attempt += 1;
        let started = Instant::now();
        let outcome = {
            let _permit = limiter.map(Limiter::acquire);
            backend.complete(request)
        };
        match outcome {
            Ok(text) => {
                return Ok(ModelResponse {
                    text,
                    latency: started.elapsed(),
                    backend_id: backend.id().to_owned(),
                })
            }
            Err(e) if e.is_retryable() && attempt <= retry.max_retries => {
                log::warn!("{} {}: {e}; retrying", backend.id(), request.role);
                std::thread::sleep(retry.delay(attempt - 1));
            }
            Err(e) => return Err(e.with_attempts(attempt)),
        }
    }
}
