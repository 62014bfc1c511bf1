//! Text → unit-norm document vector, by averaging word vectors.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::{EmbeddingModel, ZERO_NORM};
use crate::linalg;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TokenizerConfig {
    /// Retry an unmatched token in lowercase before skipping it.
    pub lowercase_fallback: bool,
    /// Tokens with fewer characters are dropped. Values below 1 act as 1.
    pub min_token_chars: usize,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        TokenizerConfig { lowercase_fallback: true, min_token_chars: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum EmbedError {
    #[error("text contains no tokens")]
    NoTokens,
    #[error("none of the {tokens} tokens are in the vocabulary")]
    AllOutOfVocabulary { tokens: usize },
    #[error("matched word vectors cancel out to a zero vector")]
    ZeroVector,
}

impl EmbedError {
    /// Stable machine-readable reason.
    pub fn reason(&self) -> &'static str {
        match self {
            EmbedError::NoTokens => "NoTokens",
            EmbedError::AllOutOfVocabulary { .. } => "AllOutOfVocabulary",
            EmbedError::ZeroVector => "ZeroVector",
        }
    }
}

/// The aggregate vector of one text plus how much of it the model covered.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DocumentVector {
    pub values: Vec<f32>,
    pub tokens_total: usize,
    pub tokens_matched: usize,
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

/// Splits on Unicode whitespace and strips non-alphanumeric characters from
/// both ends of every token. Inner punctuation ("state-of-the-art", "don't")
/// is kept. Case and order are preserved.
pub fn tokenize<'a>(text: &'a str, config: &TokenizerConfig) -> Vec<&'a str> {
    let min_chars = config.min_token_chars.max(1);
    text.split_whitespace()
        .map(|raw| raw.trim_matches(|c: char| !is_word_char(c)))
        .filter(|token| token.chars().nth(min_chars - 1).is_some())
        .collect()
}

/// Mean of the matched word vectors, L2-normalized.
///
/// Each token is looked up exactly, then lowercased if the config allows;
/// tokens that still miss are skipped.
pub fn embed_text(model: &EmbeddingModel, text: &str, config: &TokenizerConfig) -> Result<DocumentVector, EmbedError> {
    let tokens = tokenize(text, config);
    if tokens.is_empty() {
        return Err(EmbedError::NoTokens);
    }
    let rows: Vec<usize> = tokens
        .iter()
        .filter_map(|token| {
            model.row_of(token).or_else(|| {
                if !config.lowercase_fallback {
                    return None;
                }
                let lower = token.to_lowercase();
                if lower == *token {
                    None
                } else {
                    model.row_of(&lower)
                }
            })
        })
        .collect();
    let Some(&first) = rows.first() else {
        return Err(EmbedError::AllOutOfVocabulary { tokens: tokens.len() });
    };

    // The mean of copies of one unit row is that row; return it untouched so
    // single-word texts match `lookup` bit for bit.
    let values = if rows.iter().all(|&r| r == first) {
        model.row(first).to_vec()
    } else {
        let mut sum = vec![0f64; model.dim()];
        for &row in &rows {
            for (acc, &x) in sum.iter_mut().zip(model.row(row)) {
                *acc += f64::from(x);
            }
        }
        let norm = sum.iter().map(|x| x * x).sum::<f64>().sqrt();
        // Scaling by 1/n does not change the direction, so normalize the sum.
        let mean_norm = norm / rows.len() as f64;
        if mean_norm.is_nan() || mean_norm < ZERO_NORM {
            return Err(EmbedError::ZeroVector);
        }
        let values: Vec<f32> = sum.iter().map(|x| (x / norm) as f32).collect();
        debug_assert!((linalg::norm(&values) - 1.0).abs() <= 1e-6);
        values
    };
    Ok(DocumentVector { values, tokens_total: tokens.len(), tokens_matched: rows.len() })
}
