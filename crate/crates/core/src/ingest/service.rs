//! Client for a remote embedding service, plus the mean-pool-then-normalize
//! contract used when the service returns per-token hidden states.
//!
//! Wire protocol: `POST {base_url}/embed` with `{"texts": [...]}`; the response
//! is `{"embeddings": [[...], ...]}` (one pooled vector per text) or
//! `{"embeddings": [[[...], ...], ...]}` (token states per text).

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::matrix::EmbeddingMatrix;
use crate::linalg::Dense;

pub const MAX_ATTEMPTS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    /// The service returns one finished vector per text.
    #[default]
    ServicePooled,
    /// Average the final-layer token states, then L2-normalize.
    MeanPoolThenNormalize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingServiceConfig {
    pub base_url: String,
    /// Name of the environment variable holding the bearer token, if any.
    pub auth_token_env: Option<String>,
    pub batch_size: usize,
    /// Per-request timeout in seconds.
    pub timeout: f64,
    pub pooling: Pooling,
    /// First retry delay; doubles on each further attempt.
    #[serde(default = "default_backoff_ms")]
    pub backoff_ms: u64,
}

fn default_backoff_ms() -> u64 {
    250
}

impl EmbeddingServiceConfig {
    pub fn new(base_url: impl Into<String>) -> Self {
        EmbeddingServiceConfig {
            base_url: base_url.into(),
            auth_token_env: None,
            batch_size: 32,
            timeout: 30.0,
            pooling: Pooling::ServicePooled,
            backoff_ms: default_backoff_ms(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if !(self.timeout > 0.0 && self.timeout.is_finite()) {
            return Err(Error::Config("timeout must be a positive number of seconds".into()));
        }
        if self.base_url.is_empty() {
            return Err(Error::Config("base_url is empty".into()));
        }
        Ok(())
    }

    /// Resolves the bearer token. A configured but unset variable is an error.
    pub fn resolve_token(&self) -> Result<Option<String>> {
        match &self.auth_token_env {
            None => Ok(None),
            Some(var) => match std::env::var(var) {
                Ok(t) if !t.is_empty() => Ok(Some(t)),
                _ => Err(Error::Config(format!(
                    "environment variable {var} holding the service token is not set"
                ))),
            },
        }
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [String],
}

#[derive(Deserialize)]
#[serde(untagged)]
enum EmbedPayload {
    Pooled(Vec<Vec<f64>>),
    Tokens(Vec<Vec<Vec<f64>>>),
}

#[derive(Deserialize)]
struct EmbedResponse {
    embeddings: EmbedPayload,
}

/// Mean over token states followed by L2 normalization.
pub fn pool_and_normalize(token_states: &Dense) -> Result<Vec<f64>> {
    if token_states.rows() == 0 || token_states.cols() == 0 {
        return Err(Error::invalid("token state matrix is empty"));
    }
    if let Some((r, c)) = token_states.first_non_finite() {
        return Err(Error::NonFinite { row: r + 1, col: c });
    }
    let mut v = token_states.column_means();
    let norm = crate::linalg::norm2(&v);
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::ZeroVector);
    }
    v.iter_mut().for_each(|x| *x /= norm);
    Ok(v)
}

/// Embeds `texts` through the remote service, one row per text in input order.
///
/// Rows get ids `t0, t1, ...`; callers re-key them against their dataset.
pub fn fetch_embeddings(cfg: &EmbeddingServiceConfig, texts: &[String]) -> Result<EmbeddingMatrix> {
    cfg.validate()?;
    if texts.is_empty() {
        return Err(Error::invalid("no texts to embed"));
    }
    let token = cfg.resolve_token()?;
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(Duration::from_secs_f64(cfg.timeout)))
        .http_status_as_error(false)
        .build()
        .into();
    let url = format!("{}/embed", cfg.base_url.trim_end_matches('/'));

    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(texts.len());
    for batch in texts.chunks(cfg.batch_size) {
        let payload = post_with_retry(&agent, &url, token.as_deref(), batch, cfg.backoff_ms)?;
        let vectors = match payload {
            EmbedPayload::Pooled(v) => {
                check_count(batch.len(), v.len())?;
                match cfg.pooling {
                    Pooling::ServicePooled => v,
                    Pooling::MeanPoolThenNormalize => v
                        .iter()
                        .map(|row| pool_and_normalize(&Dense::from_rows(&[row])?))
                        .collect::<Result<_>>()?,
                }
            }
            EmbedPayload::Tokens(t) => {
                check_count(batch.len(), t.len())?;
                if cfg.pooling != Pooling::MeanPoolThenNormalize {
                    return Err(Error::Config(
                        "service returned token states; use pooling = mean_pool_then_normalize"
                            .into(),
                    ));
                }
                t.iter()
                    .map(|states| pool_and_normalize(&Dense::from_rows(states)?))
                    .collect::<Result<_>>()?
            }
        };
        let offset = rows.len();
        for (i, v) in vectors.iter().enumerate() {
            if let Some(col) = v.iter().position(|x| !x.is_finite()) {
                return Err(Error::NonFinite {
                    row: offset + i + 1,
                    col,
                });
            }
        }
        rows.extend(vectors);
    }
    let values = Dense::from_rows(&rows)?;
    let ids = (0..rows.len()).map(|i| format!("t{i}")).collect();
    EmbeddingMatrix::new(ids, values)
}

fn check_count(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::RowCountMismatch { expected, found })
    }
}

enum Attempt {
    Retry(String),
    Fatal(Error),
}

fn post_with_retry(
    agent: &ureq::Agent,
    url: &str,
    token: Option<&str>,
    batch: &[String],
    backoff_ms: u64,
) -> Result<EmbedPayload> {
    let mut last = String::new();
    for attempt in 0..MAX_ATTEMPTS {
        if attempt > 0 {
            std::thread::sleep(Duration::from_millis(backoff_ms << (attempt - 1)));
        }
        match post_once(agent, url, token, batch) {
            Ok(p) => return Ok(p),
            Err(Attempt::Fatal(e)) => return Err(e),
            Err(Attempt::Retry(msg)) => {
                log::warn!("embedding request attempt {} failed: {msg}", attempt + 1);
                last = msg;
            }
        }
    }
    Err(Error::Http {
        attempts: MAX_ATTEMPTS,
        message: last,
    })
}

fn post_once(
    agent: &ureq::Agent,
    url: &str,
    token: Option<&str>,
    batch: &[String],
) -> std::result::Result<EmbedPayload, Attempt> {
    let mut req = agent.post(url);
    if let Some(t) = token {
        req = req.header("Authorization", &format!("Bearer {t}"));
    }
    let mut resp = req
        .send_json(EmbedRequest { texts: batch })
        .map_err(|e| Attempt::Retry(e.to_string()))?;
    let status = resp.status().as_u16();
    if status == 429 || status >= 500 {
        return Err(Attempt::Retry(format!("HTTP status {status}")));
    }
    if status >= 400 {
        return Err(Attempt::Fatal(Error::Http {
            attempts: 1,
            message: format!("HTTP status {status}"),
        }));
    }
    let body: EmbedResponse = resp.body_mut().read_json().map_err(|e| {
        Attempt::Fatal(Error::Malformed {
            row: 0,
            message: format!("embedding response: {e}"),
        })
    })?;
    Ok(body.embeddings)
}
