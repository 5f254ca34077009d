//! Topic quality: NPMI coherence, topic diversity and an optional LLM judge.

pub mod llm_judge;
pub mod npmi;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Document;
pub use llm_judge::{llm_judge, ChatClient, EndpointConfig, HttpChatClient, JudgeError, JudgeScores};
pub use npmi::{npmi, NpmiScores, WindowCounts, DEFAULT_EPSILON, DEFAULT_WINDOW_SIZE};

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("reference corpus has no tokens")]
    EmptyReference,
    #[error("no topics to evaluate")]
    NoTopics,
    #[error("topic {topic} has {found} words; at least 2 are needed")]
    TooFewWords { topic: usize, found: usize },
    #[error("topic {topic} has {found} words but {expected} are required")]
    RaggedTopics {
        topic: usize,
        expected: usize,
        found: usize,
    },
}

/// Share of distinct words among all topics' top words. Every topic must have
/// the same number of words.
pub fn topic_diversity(topics: &[Vec<String>]) -> Result<f64, EvalError> {
    let first = topics.first().ok_or(EvalError::NoTopics)?;
    let k = first.len();
    if k == 0 {
        return Err(EvalError::TooFewWords { topic: 0, found: 0 });
    }
    if let Some((i, t)) = topics.iter().enumerate().find(|(_, t)| t.len() != k) {
        return Err(EvalError::RaggedTopics {
            topic: i,
            expected: k,
            found: t.len(),
        });
    }
    let unique: BTreeSet<&String> = topics.iter().flatten().collect();
    Ok(unique.len() as f64 / (topics.len() * k) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalParams {
    pub top_k: usize,
    /// `None` counts co-occurrence over whole documents.
    pub window_size: Option<usize>,
    pub epsilon: f64,
}

impl Default for EvalParams {
    fn default() -> Self {
        EvalParams {
            top_k: crate::topic_model::DEFAULT_TOP_K,
            window_size: Some(DEFAULT_WINDOW_SIZE),
            epsilon: DEFAULT_EPSILON,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub npmi_per_topic: Vec<f64>,
    pub npmi_mean: f64,
    /// `None` when topics have unequal word counts.
    pub topic_diversity: Option<f64>,
    pub llm_tc: Option<f64>,
    pub llm_td: Option<f64>,
    pub params: EvalParams,
    pub warnings: Vec<String>,
}

/// NPMI and diversity over each topic's first `params.top_k` words.
pub fn evaluate(topics: &[Vec<String>], reference: &[Document], params: &EvalParams) -> Result<EvalReport, EvalError> {
    let truncated: Vec<Vec<String>> = topics
        .iter()
        .map(|t| t.iter().take(params.top_k).cloned().collect())
        .collect();
    let scores = npmi(&truncated, reference, params.window_size, params.epsilon)?;
    let mut warnings = Vec::new();
    let topic_diversity = match topic_diversity(&truncated) {
        Ok(td) => {
            if truncated.iter().any(|t| t.len() < params.top_k) {
                warnings.push(format!("topics have fewer than top_k = {} words", params.top_k));
            }
            Some(td)
        }
        Err(e) => {
            warnings.push(format!("topic diversity undefined: {e}"));
            None
        }
    };
    Ok(EvalReport {
        npmi_per_topic: scores.per_topic,
        npmi_mean: scores.mean,
        topic_diversity,
        llm_tc: None,
        llm_td: None,
        params: params.clone(),
        warnings,
    })
}

impl EvalReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, s) in self.npmi_per_topic.iter().enumerate() {
            out.push_str(&format!("topic {i:>3}  npmi {s:>8.4}\n"));
        }
        out.push_str(&format!("mean npmi        {:>8.4}\n", self.npmi_mean));
        match self.topic_diversity {
            Some(td) => out.push_str(&format!("topic diversity  {td:>8.4}\n")),
            None => out.push_str("topic diversity       n/a\n"),
        }
        if let (Some(tc), Some(td)) = (self.llm_tc, self.llm_td) {
            out.push_str(&format!("llm coherence    {tc:>8.4}\nllm diversity    {td:>8.4}\n"));
        }
        for w in &self.warnings {
            out.push_str(&format!("warning: {w}\n"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(ws: &[&str]) -> Vec<String> {
        ws.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn diversity_cases() {
        let disjoint = vec![t(&["a", "b"]), t(&["c", "d"]), t(&["e", "f"]), t(&["g", "h"])];
        assert_eq!(topic_diversity(&disjoint).unwrap(), 1.0);
        let same = vec![t(&["a", "b", "c"]); 4];
        assert_eq!(topic_diversity(&same).unwrap(), 0.25);
        assert_eq!(topic_diversity(&[t(&["a", "b"]), t(&["b", "c"])]).unwrap(), 0.75);
    }

    #[test]
    fn ragged_topics_are_rejected() {
        assert_eq!(
            topic_diversity(&[t(&["a", "b"]), t(&["c"])]),
            Err(EvalError::RaggedTopics { topic: 1, expected: 2, found: 1 })
        );
        assert_eq!(topic_diversity(&[]), Err(EvalError::NoTopics));
    }
}
