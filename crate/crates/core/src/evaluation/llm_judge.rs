//! Topic scoring by an LLM on 4-point coherence and diversity scales.
//!
//! Prompts are sent as a single user message to any chat-completions style
//! endpoint. Responses are parsed for `Cluster <n>: <score>` lines (coherence)
//! and a `Set <name>: <score>` line (diversity).

use std::sync::OnceLock;
use std::thread;
use std::time::Duration;

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

pub const API_KEY_ENV: &str = "CAST_LLM_API_KEY";
pub const MALFORMED_RETRIES: usize = 2;
pub const NETWORK_RETRIES: usize = 2;

const COHERENCE_PROMPT: &str = "I will provide you with sets of clusters, where each cluster is described by a list of keywords: [topic_words]. For each set, evaluate the topic coherence of the clusters based on how interpretable and meaningful the keyword lists are for representing and retrieving distinct topics or subjects. Use this 4-point rating scale:
4 = Keywords are highly coherent and clearly represent a specific, well-defined topic
3 = Keywords are reasonably coherent and suggest a relatively distinct topic
2 = Keywords lack coherence and make the topic difficult to interpret
1 = Keywords are essentially random and meaningless for defining any topic
For each cluster set, provide: The cluster number and your rating score, along with a 1-2 sentence explanation, in this format:
Cluster [X]: [score] - [brief explanation]
Then calculate and provide the average cluster score as the \"Topic Coherence Score\" for that set.";

const DIVERSITY_PROMPT: &str = "I will provide you with sets of clusters, where each cluster is described by a list of keywords: [topic_words]. Evaluate the diversity of topics represented across all the clusters in each set on a 4-point rating scale:
4 = Extremely diverse topics (clusters cover a very wide range of completely distinct and unrelated topics)
3 = High topic diversity (clusters cover many distinct topics with little overlap)
2 = Moderate topic diversity (clusters cover some distinct topics but also significant overlap)
1 = Low topic diversity (clusters cover highly repetitive clusters with very little distinction in topics covered)
For each set, provide your score along with a brief explanation justifying the rating. The response should be in the following format:
Set [name]: [score] [Explanation].";

#[derive(Debug, Error)]
pub enum JudgeError {
    #[error("request to {endpoint} failed: {message}")]
    Network { endpoint: String, message: String },
    #[error("could not parse the {kind} response after {attempts} attempts: {reason}")]
    Unparseable {
        kind: &'static str,
        attempts: usize,
        reason: String,
        transcripts: Vec<Transcript>,
    },
    #[error("{kind} score {score} is outside the 1-4 scale")]
    OutOfRange { kind: &'static str, score: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub kind: String,
    pub prompt: String,
    pub response: String,
}

/// Anything that can answer a single-message chat prompt.
pub trait ChatClient {
    fn complete(&self, prompt: &str) -> Result<String, JudgeError>;
}

impl<F> ChatClient for F
where
    F: Fn(&str) -> Result<String, JudgeError>,
{
    fn complete(&self, prompt: &str) -> Result<String, JudgeError> {
        self(prompt)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointConfig {
    pub url: String,
    pub model: String,
    pub timeout_secs: u64,
}

impl EndpointConfig {
    pub fn new(url: impl Into<String>) -> Self {
        EndpointConfig {
            url: url.into(),
            model: "gpt-4".into(),
            timeout_secs: 120,
        }
    }
}

/// JSON chat-completions client; the bearer token comes from
/// `CAST_LLM_API_KEY` when set.
pub struct HttpChatClient {
    config: EndpointConfig,
    api_key: Option<String>,
    agent: ureq::Agent,
}

impl HttpChatClient {
    pub fn new(config: EndpointConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .http_status_as_error(true)
            .build()
            .into();
        HttpChatClient {
            config,
            api_key: std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty()),
            agent,
        }
    }

    fn request_once(&self, body: &Value) -> Result<String, String> {
        let mut req = self.agent.post(&self.config.url);
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req.send_json(body).map_err(|e| e.to_string())?;
        let value: Value = resp.body_mut().read_json().map_err(|e| e.to_string())?;
        extract_content(&value).ok_or_else(|| format!("response has no message content: {value}"))
    }
}

/// Pulls the reply text out of a chat-completions response.
pub fn extract_content(value: &Value) -> Option<String> {
    value
        .pointer("/choices/0/message/content")
        .or_else(|| value.pointer("/message/content"))
        .or_else(|| value.pointer("/content/0/text"))
        .and_then(Value::as_str)
        .map(str::to_string)
}

pub fn chat_request_body(model: &str, prompt: &str) -> Value {
    json!({
        "model": model,
        "messages": [{"role": "user", "content": prompt}],
    })
}

impl ChatClient for HttpChatClient {
    fn complete(&self, prompt: &str) -> Result<String, JudgeError> {
        let body = chat_request_body(&self.config.model, prompt);
        let mut last = String::new();
        for attempt in 0..=NETWORK_RETRIES {
            if attempt > 0 {
                thread::sleep(Duration::from_millis(250 << (attempt - 1)));
            }
            match self.request_once(&body) {
                Ok(text) => return Ok(text),
                Err(e) => {
                    log::warn!("LLM request attempt {} failed: {e}", attempt + 1);
                    last = e;
                }
            }
        }
        Err(JudgeError::Network {
            endpoint: self.config.url.clone(),
            message: last,
        })
    }
}

/// Keyword lists, one `Cluster <n>: w1, w2, ...` line per topic.
pub fn format_topic_words(topics: &[Vec<String>]) -> String {
    let lines: Vec<String> = topics
        .iter()
        .enumerate()
        .map(|(i, ws)| format!("Cluster {}: {}", i + 1, ws.join(", ")))
        .collect();
    format!("\n{}\n", lines.join("\n"))
}

pub fn coherence_prompt(topics: &[Vec<String>]) -> String {
    COHERENCE_PROMPT.replace("[topic_words]", &format_topic_words(topics))
}

pub fn diversity_prompt(topics: &[Vec<String>]) -> String {
    DIVERSITY_PROMPT.replace("[topic_words]", &format_topic_words(topics))
}

fn cluster_line() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?mi)^[\s*#>-]*Cluster\s*\[?\s*(\d+)\s*\]?\s*\**\s*:\s*\**\s*\[?\s*([0-9]+(?:\.[0-9]+)?)").unwrap()
    })
}

fn set_line() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?mi)^[\s*#>-]*Set\s*\[?([^:\]\n]*)\]?\s*\**\s*:\s*\**\s*\[?\s*([0-9]+(?:\.[0-9]+)?)").unwrap()
    })
}

/// Per-cluster coherence scores, indexed by cluster number (1-based in the
/// text). Every cluster `1..=n_topics` must be present.
pub fn parse_coherence(response: &str, n_topics: usize) -> Result<Vec<f64>, String> {
    let mut scores: Vec<Option<f64>> = vec![None; n_topics];
    for cap in cluster_line().captures_iter(response) {
        let idx: usize = cap[1].parse().map_err(|_| "bad cluster number")?;
        let score: f64 = cap[2].parse().map_err(|_| "bad score")?;
        if idx >= 1 && idx <= n_topics && scores[idx - 1].is_none() {
            scores[idx - 1] = Some(score);
        }
    }
    let missing: Vec<usize> = scores
        .iter()
        .enumerate()
        .filter(|(_, s)| s.is_none())
        .map(|(i, _)| i + 1)
        .collect();
    if !missing.is_empty() {
        return Err(format!("no score for clusters {missing:?}"));
    }
    Ok(scores.into_iter().flatten().collect())
}

pub fn parse_diversity(response: &str) -> Result<f64, String> {
    let cap = set_line()
        .captures(response)
        .ok_or_else(|| "no `Set <name>: <score>` line".to_string())?;
    cap[2].parse().map_err(|_| "bad score".to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeScores {
    pub llm_tc: f64,
    pub llm_td: f64,
    pub per_cluster_tc: Vec<f64>,
    pub transcripts: Vec<Transcript>,
}

fn ask_with_retries<T>(
    client: &dyn ChatClient,
    kind: &'static str,
    prompt: &str,
    transcripts: &mut Vec<Transcript>,
    parse: impl Fn(&str) -> Result<T, String>,
) -> Result<T, JudgeError> {
    let mut reason = String::new();
    let mut attempt_transcripts = Vec::new();
    for _ in 0..=MALFORMED_RETRIES {
        let response = client.complete(prompt)?;
        let t = Transcript {
            kind: kind.to_string(),
            prompt: prompt.to_string(),
            response: response.clone(),
        };
        transcripts.push(t.clone());
        attempt_transcripts.push(t);
        match parse(&response) {
            Ok(v) => return Ok(v),
            Err(e) => {
                log::warn!("unparseable {kind} response: {e}");
                reason = e;
            }
        }
    }
    Err(JudgeError::Unparseable {
        kind,
        attempts: MALFORMED_RETRIES + 1,
        reason,
        transcripts: attempt_transcripts,
    })
}

fn check_range(kind: &'static str, score: f64) -> Result<(), JudgeError> {
    if (1.0..=4.0).contains(&score) {
        Ok(())
    } else {
        Err(JudgeError::OutOfRange { kind, score })
    }
}

/// Runs the coherence prompt then the diversity prompt.
pub fn llm_judge(topics: &[Vec<String>], client: &dyn ChatClient) -> Result<JudgeScores, JudgeError> {
    let mut transcripts = Vec::new();
    let n = topics.len();
    let per_cluster = ask_with_retries(client, "coherence", &coherence_prompt(topics), &mut transcripts, |r| {
        parse_coherence(r, n)
    })?;
    for &s in &per_cluster {
        check_range("coherence", s)?;
    }
    let llm_td = ask_with_retries(client, "diversity", &diversity_prompt(topics), &mut transcripts, parse_diversity)?;
    check_range("diversity", llm_td)?;
    let llm_tc = if per_cluster.is_empty() {
        0.0
    } else {
        per_cluster.iter().sum::<f64>() / per_cluster.len() as f64
    };
    Ok(JudgeScores {
        llm_tc,
        llm_td,
        per_cluster_tc: per_cluster,
        transcripts,
    })
}
