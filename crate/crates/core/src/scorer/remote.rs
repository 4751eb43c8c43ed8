//! HTTP client for an external critic.
//!
//! `POST /score` with `{"pairs": [["a", "b"], ...]}`; the reply must be
//! `{"scores": [s1, ...]}` with one score in `[0, 1]` per pair, in order.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{Score, Scorer, ScorerError};

#[derive(Serialize)]
struct ScoreRequest<'a> {
    pairs: Vec<[&'a str; 2]>,
}

#[derive(Deserialize)]
struct ScoreResponse {
    scores: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct RemoteScorer {
    endpoint: String,
    agent: ureq::Agent,
}

impl RemoteScorer {
    /// `url` is the service base (`http://host:port`) or the full `/score`
    /// endpoint.
    pub fn new(url: &str) -> Self {
        Self::with_timeout(url, Duration::from_secs(60))
    }

    pub fn with_timeout(url: &str, timeout: Duration) -> Self {
        let base = url.trim_end_matches('/');
        let endpoint = if base.ends_with("/score") { base.to_string() } else { format!("{base}/score") };
        let agent = ureq::AgentBuilder::new().timeout(timeout).build();
        RemoteScorer { endpoint, agent }
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }
}

impl Scorer for RemoteScorer {
    fn score_batch(&self, pairs: &[(&str, &str)]) -> Result<Vec<Score>, ScorerError> {
        if pairs.is_empty() {
            return Ok(Vec::new());
        }
        let request = ScoreRequest { pairs: pairs.iter().map(|(a, b)| [*a, *b]).collect() };
        let response = match self.agent.post(&self.endpoint).send_json(&request) {
            Ok(r) => r,
            Err(ureq::Error::Status(code, r)) => {
                let body = r.into_string().unwrap_or_default();
                return Err(ScorerError::RemoteProtocol(format!("HTTP {code}: {}", body.trim())));
            }
            Err(ureq::Error::Transport(t)) => return Err(ScorerError::RemoteUnavailable(t.to_string())),
        };
        if response.status() != 200 {
            return Err(ScorerError::RemoteProtocol(format!("HTTP {}", response.status())));
        }
        let body = response.into_string().map_err(|e| ScorerError::RemoteProtocol(e.to_string()))?;
        let reply: ScoreResponse =
            serde_json::from_str(&body).map_err(|e| ScorerError::RemoteProtocol(format!("malformed reply: {e}")))?;
        if reply.scores.len() != pairs.len() {
            return Err(ScorerError::RemoteProtocol(format!(
                "{} scores for {} pairs",
                reply.scores.len(),
                pairs.len()
            )));
        }
        reply
            .scores
            .into_iter()
            .map(|s| Score::new(s).map_err(|_| ScorerError::RemoteProtocol(format!("score {s} outside [0, 1]"))))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoint_normalization() {
        assert_eq!(RemoteScorer::new("http://h:1").endpoint(), "http://h:1/score");
        assert_eq!(RemoteScorer::new("http://h:1/").endpoint(), "http://h:1/score");
        assert_eq!(RemoteScorer::new("http://h:1/score").endpoint(), "http://h:1/score");
    }

    #[test]
    fn request_shape() {
        let req = ScoreRequest { pairs: vec![["a", "b"], ["c", "d"]] };
        assert_eq!(serde_json::to_string(&req).unwrap(), r#"{"pairs":[["a","b"],["c","d"]]}"#);
    }

    #[test]
    fn unreachable_service() {
        // Port 9 on localhost is the discard port; nothing listens there in CI.
        let r = RemoteScorer::with_timeout("http://127.0.0.1:9", Duration::from_millis(500));
        assert!(matches!(r.score_batch(&[("a", "b")]), Err(ScorerError::RemoteUnavailable(_))));
        assert!(r.score_batch(&[]).unwrap().is_empty());
    }
}
