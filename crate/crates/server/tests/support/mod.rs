#![allow(dead_code)]

use std::path::{Path, PathBuf};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use vsim_core::{EmbeddingModel, ModelFormat};

pub const H: f32 = std::f32::consts::FRAC_1_SQRT_2;

pub fn toy4() -> EmbeddingModel {
    let words = ["spain", "france", "madrid", "paris"].map(String::from).to_vec();
    let vectors = vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, H, 0.0, H, 0.0, H, H];
    EmbeddingModel::from_rows(words, vectors, 3).unwrap()
}

pub const CLAIM_WORDS: &[&str] = &[
    "vaccines", "cause", "autism", "the", "moon", "landing", "was", "staged", "drinking", "bleach", "cures", "covid",
    "towers", "spread", "virus", "really", "do", "children", "in", "5g", "water", "fluoride", "is", "poison",
    "election", "rigged", "stolen", "votes",
];

/// Seeded random rows, so unrelated words are nearly orthogonal in dim 24.
pub fn claims_model() -> EmbeddingModel {
    let dim = 24;
    let mut rng = StdRng::seed_from_u64(7);
    let vectors: Vec<f32> = (0..CLAIM_WORDS.len() * dim).map(|_| rng.random_range(-1.0f32..1.0)).collect();
    EmbeddingModel::from_rows(CLAIM_WORDS.iter().map(|w| w.to_string()).collect(), vectors, dim).unwrap()
}

pub fn write_model(model: &EmbeddingModel, dir: &Path, name: &str) -> PathBuf {
    let path = dir.join(name);
    model.save(&path, ModelFormat::Binary).unwrap();
    path
}

/// Mean of the matched rows computed in f64, normalized. `None` if nothing matches.
pub fn oracle_vector(model: &EmbeddingModel, text: &str) -> Option<Vec<f64>> {
    let mut sum = vec![0.0f64; model.dim()];
    let mut matched = 0;
    for raw in text.split_whitespace() {
        let token = raw.trim_matches(|c: char| !c.is_alphanumeric());
        if token.is_empty() {
            continue;
        }
        let row = model.lookup(token).or_else(|| model.lookup(&token.to_lowercase()));
        if let Some(row) = row {
            for (s, &x) in sum.iter_mut().zip(row) {
                *s += f64::from(x);
            }
            matched += 1;
        }
    }
    if matched == 0 {
        return None;
    }
    let norm = sum.iter().map(|x| x * x).sum::<f64>().sqrt();
    Some(sum.into_iter().map(|x| x / norm).collect())
}

pub fn oracle_cosine(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
}

/// Targets a pending `text` should be matched to: score >= threshold,
/// best first, ids ascending on ties, at most `k`.
pub fn expected_matches(
    model: &EmbeddingModel,
    targets: &[(&str, &str)],
    text: &str,
    threshold: f64,
    k: usize,
) -> Vec<(String, f64)> {
    let query = oracle_vector(model, text).expect("query text has known words");
    let mut scored: Vec<(String, f64)> = targets
        .iter()
        .map(|(id, t)| (id.to_string(), oracle_cosine(&query, &oracle_vector(model, t).unwrap())))
        .filter(|(_, s)| *s >= threshold)
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored.truncate(k);
    scored
}

pub const FACT_CHECKED: &[(&str, &str)] = &[
    ("fc-vaccines", "Vaccines cause autism"),
    ("fc-moon", "The moon landing was staged"),
    ("fc-bleach", "Drinking bleach cures covid"),
];
