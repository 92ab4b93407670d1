use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use super::MetricError;

/// Registered tokenization policies. Scores are only comparable within one policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum TokenPolicy {
    /// NFC, lowercase, split on whitespace, punctuation and symbols detached as
    /// single-character tokens.
    #[default]
    #[serde(rename = "default-v1")]
    Default,
    /// NFC and whitespace split only.
    #[serde(rename = "whitespace-v1")]
    Whitespace,
}

impl TokenPolicy {
    pub fn id(&self) -> &'static str {
        match self {
            TokenPolicy::Default => "default-v1",
            TokenPolicy::Whitespace => "whitespace-v1",
        }
    }

    pub fn joiner(&self) -> &'static str {
        " "
    }
}

impl fmt::Display for TokenPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for TokenPolicy {
    type Err = MetricError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "default" | "default-v1" => Ok(TokenPolicy::Default),
            "whitespace" | "whitespace-v1" => Ok(TokenPolicy::Whitespace),
            other => Err(MetricError::UnknownPolicy(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSequence {
    pub tokens: Vec<String>,
    pub policy: TokenPolicy,
}

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn join(&self) -> String {
        self.tokens.join(self.policy.joiner())
    }

    /// Builds a sequence from pre-split tokens, dropping empty strings.
    pub fn from_tokens<S: Into<String>>(tokens: impl IntoIterator<Item = S>, policy: TokenPolicy) -> Self {
        Self {
            tokens: tokens
                .into_iter()
                .map(Into::into)
                .filter(|t: &String| !t.is_empty())
                .collect(),
            policy,
        }
    }
}

pub fn tokenize(text: &str, policy: TokenPolicy) -> TokenSequence {
    let normalized: String = text.nfc().collect();
    let tokens = match policy {
        TokenPolicy::Whitespace => normalized.split_whitespace().map(String::from).collect(),
        TokenPolicy::Default => {
            let lower = normalized.to_lowercase();
            let mut tokens = Vec::new();
            let mut word = String::new();
            for ch in lower.chars() {
                if ch.is_whitespace() {
                    if !word.is_empty() {
                        tokens.push(std::mem::take(&mut word));
                    }
                } else if ch.is_alphanumeric() {
                    word.push(ch);
                } else {
                    if !word.is_empty() {
                        tokens.push(std::mem::take(&mut word));
                    }
                    tokens.push(ch.to_string());
                }
            }
            if !word.is_empty() {
                tokens.push(word);
            }
            tokens
        }
    };
    TokenSequence { tokens, policy }
}
