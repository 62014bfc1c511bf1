//! WebAssembly bindings for the demo page in `www/`.
//!
//! Every method returns JSON text; the page parses it with `JSON.parse`.

pub mod demo;

use serde::Serialize;
use vsim_core::{embed_text, DocStatus, DocumentRecord, EmbeddingModel, Index, ModelFormat, TokenizerConfig};
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
struct Match<'a> {
    id: &'a str,
    text: &'a str,
    score: f64,
}

#[derive(Serialize)]
struct Info {
    words: usize,
    dim: usize,
    claims: usize,
}

#[wasm_bindgen]
pub struct Explorer {
    model: EmbeddingModel,
    claims: Index,
    tokenizer: TokenizerConfig,
}

impl Explorer {
    pub fn with_model(model: EmbeddingModel) -> Explorer {
        let claims = Index::new(model.dim()).expect("model dim >= 1");
        let mut explorer = Explorer { model, claims, tokenizer: TokenizerConfig::default() };
        for (id, text) in demo::CLAIMS {
            // Claims the loaded vocabulary cannot express are left out.
            let _ = explorer.try_add_claim(id, text);
        }
        explorer
    }

    pub fn model(&self) -> &EmbeddingModel {
        &self.model
    }

    pub fn try_analogy(&self, a: &str, b: &str, c: &str, k: usize) -> Result<String, String> {
        let hits = self.model.analogy(a.trim(), b.trim(), c.trim(), k).map_err(|e| e.to_string())?;
        Ok(serde_json::to_string(&hits).expect("serializable"))
    }

    pub fn try_nearest(&self, word: &str, k: usize) -> Result<String, String> {
        let word = word.trim();
        let query = self.model.lookup(word).ok_or_else(|| format!("unknown word `{word}`"))?;
        let hits = self.model.nearest_words(query, k, &[word]).map_err(|e| e.to_string())?;
        Ok(serde_json::to_string(&hits).expect("serializable"))
    }

    pub fn try_match_claim(&self, text: &str, k: usize) -> Result<String, String> {
        let vector = embed_text(&self.model, text, &self.tokenizer).map_err(|e| e.to_string())?;
        let hits = self.claims.search(&vector.values, k, -1.0, None).map_err(|e| e.to_string())?;
        let matches: Vec<Match<'_>> = hits.iter().map(|h| Match { id: &h.id, text: &h.text, score: h.score }).collect();
        Ok(serde_json::to_string(&matches).expect("serializable"))
    }

    pub fn try_add_claim(&mut self, id: &str, text: &str) -> Result<(), String> {
        let vector = embed_text(&self.model, text, &self.tokenizer).map_err(|e| e.to_string())?;
        let record = DocumentRecord {
            id: id.to_owned(),
            vector: vector.values,
            text: text.to_owned(),
            status: DocStatus::FactChecked,
            metadata: Default::default(),
        };
        self.claims.upsert(record).map(|_| ()).map_err(|e| e.to_string())
    }
}

#[wasm_bindgen]
impl Explorer {
    /// Starts with the built-in demo vocabulary.
    #[wasm_bindgen(constructor)]
    pub fn new() -> Explorer {
        Explorer::with_model(demo::model())
    }

    /// Replaces the vocabulary with a word2vec text-format model.
    #[wasm_bindgen(js_name = fromText)]
    pub fn from_text(text: &str) -> Result<Explorer, JsError> {
        let model =
            EmbeddingModel::read(text.as_bytes(), ModelFormat::Text).map_err(|e| JsError::new(&e.to_string()))?;
        Ok(Explorer::with_model(model))
    }

    pub fn info(&self) -> String {
        let info = Info { words: self.model.vocab_size(), dim: self.model.dim(), claims: self.claims.len() };
        serde_json::to_string(&info).expect("serializable")
    }

    pub fn words(&self) -> String {
        serde_json::to_string(self.model.words()).expect("serializable")
    }

    pub fn analogy(&self, a: &str, b: &str, c: &str, k: usize) -> Result<String, JsError> {
        self.try_analogy(a, b, c, k).map_err(|e| JsError::new(&e))
    }

    pub fn nearest(&self, word: &str, k: usize) -> Result<String, JsError> {
        self.try_nearest(word, k).map_err(|e| JsError::new(&e))
    }

    #[wasm_bindgen(js_name = matchClaim)]
    pub fn match_claim(&self, text: &str, k: usize) -> Result<String, JsError> {
        self.try_match_claim(text, k).map_err(|e| JsError::new(&e))
    }

    #[wasm_bindgen(js_name = addClaim)]
    pub fn add_claim(&mut self, id: &str, text: &str) -> Result<(), JsError> {
        self.try_add_claim(id, text).map_err(|e| JsError::new(&e))
    }

    #[wasm_bindgen(js_name = claims)]
    pub fn claims_json(&self) -> String {
        let mut all: Vec<Match<'_>> =
            self.claims.iter().map(|d| Match { id: d.id, text: d.text, score: 1.0 }).collect();
        all.sort_by(|a, b| a.id.cmp(b.id));
        serde_json::to_string(&all).expect("serializable")
    }
}

impl Default for Explorer {
    fn default() -> Self {
        Explorer::new()
    }
}
