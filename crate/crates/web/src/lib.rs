//! Browser bindings: dependency-graph attention, pattern mining on pasted
//! parses, and Dist-n on pasted responses.
//!
//! Each export has a plain Rust twin returning `Result<String, String>` so
//! the logic runs and is tested natively.

use std::path::Path;

use escm_core::autograd::Tape;
use escm_core::corpus::{
    build_vocab, encode_example, parse_conllu, tokenize, Batch, Dialogue, EmotionLexicon, ParseMap, RelationSet,
    SentenceKey, Speaker, Utterance,
};
use escm_core::emotion::{Emotion, EMOTION_LABELS};
use escm_core::metrics::distinct_n;
use escm_core::miner::{coverage_fractions, coverage_stats, extract_patterns, CorrelationCounts};
use escm_core::model::layers::Dropout;
use escm_core::model::{tiny_config, Model};
use serde_json::json;
use wasm_bindgen::prelude::*;

const DEMO_ID: &str = "demo";

/// Re-labels pasted sentences `demo/0`, `demo/1`, ... in input order.
fn relabel(conllu: &str) -> (String, usize) {
    let mut out = String::new();
    let mut k = 0;
    for block in conllu.split("\n\n").map(str::trim).filter(|b| !b.is_empty()) {
        out.push_str(&format!("# sent_id = {DEMO_ID}/{k}\n"));
        for line in block.lines().filter(|l| !l.trim_start().starts_with("# sent_id")) {
            out.push_str(line);
            out.push('\n');
        }
        out.push('\n');
        k += 1;
    }
    (out, k)
}

fn read_parses(conllu: &str) -> Result<(ParseMap, usize), String> {
    let (text, n) = relabel(&conllu.replace("\r\n", "\n"));
    if n == 0 {
        return Err("no sentences".into());
    }
    let parses = parse_conllu(&text, Path::new("input")).map_err(|e| e.to_string())?;
    Ok((parses, n))
}

/// Treats the pasted sentences as alternating speaker and listener turns,
/// builds an untrained small model from `seed`, and returns the token
/// graph with the correlation-layer attention restricted to it.
pub fn dialogue_graph(conllu: &str, seed: u64) -> Result<String, String> {
    let (parses, n) = read_parses(conllu)?;
    let utterances = (0..n)
        .map(|k| Utterance {
            speaker: if k % 2 == 0 { Speaker::Speaker } else { Speaker::Listener },
            tokens: parses[&SentenceKey::context(DEMO_ID, k)]
                .iter()
                .map(|t| tokenize(&t.surface).concat())
                .collect(),
        })
        .collect();
    let dialogue = Dialogue {
        id: DEMO_ID.into(),
        emotion: Emotion::from_id(0).expect("label 0"),
        utterances,
        response: vec!["ok".into()],
    };
    let dialogues = [dialogue];
    let vocab = build_vocab(&dialogues, 1);
    let relations = RelationSet::from_parses(&parses);
    let ex = encode_example(&dialogues[0], &parses, &vocab, &relations).map_err(|e| e.to_string())?;
    let model = Model::new(tiny_config(vocab.len(), relations.len()), seed, Some(&vocab), None)
        .map_err(|e| e.to_string())?;

    let batch = Batch::new(&[&ex]);
    let mut t = Tape::new(&model.params);
    let f = model
        .forward_batch(&mut t, &batch, &mut Dropout::off())
        .map_err(|e| e.to_string())?;
    let tr = f.examples[0].materialize(&t);

    let l = ex.len();
    let tokens: Vec<&str> = ex.context_ids.iter().map(|&id| vocab.token(id).unwrap_or("?")).collect();
    let adjacency: Vec<Vec<u8>> = (0..l).map(|i| ex.adjacency.row(i)[..l].to_vec()).collect();
    let attention: Vec<Vec<f64>> = (0..l).map(|i| tr.p.row(i)[..l].to_vec()).collect();
    let p_e: Vec<f64> = tr.p_e.row(0).to_vec();
    let top = escm_core::model::argmax(&p_e);
    Ok(json!({
        "tokens": tokens,
        "adjacency": adjacency,
        "attention": attention,
        "predicted_emotion": EMOTION_LABELS[top],
    })
    .to_string())
}

/// Patterns per pasted sentence, with coverage of the most frequent ones.
pub fn mine_text(conllu: &str, lexicon_tsv: &str, emotion: &str) -> Result<String, String> {
    let (parses, n) = read_parses(conllu)?;
    let lexicon = EmotionLexicon::parse(lexicon_tsv, Path::new("lexicon")).map_err(|e| e.to_string())?;
    let emotion: Emotion = emotion.parse().map_err(|e: escm_core::Error| e.to_string())?;
    let mut counts = CorrelationCounts::default();
    let mut sentences = Vec::new();
    for k in 0..n {
        let tokens = &parses[&SentenceKey::context(DEMO_ID, k)];
        let found: Vec<String> = extract_patterns(tokens, &lexicon).iter().map(|p| p.key()).collect();
        for key in &found {
            counts.add(emotion, key, 1);
        }
        let words: Vec<&str> = tokens.iter().map(|t| t.surface.as_str()).collect();
        sentences.push(json!({ "text": words.join(" "), "patterns": found }));
    }
    let ranked: Vec<_> = counts.ranked().into_iter().map(|(k, c)| json!([k, c])).collect();
    let coverage: Vec<_> = if counts.is_empty() {
        Vec::new()
    } else {
        coverage_fractions()
            .map(|f| coverage_stats(&counts, f).map(|c| json!([f, c])))
            .collect::<escm_core::Result<_>>()
            .map_err(|e| e.to_string())?
    };
    Ok(json!({ "sentences": sentences, "ranked": ranked, "coverage": coverage }).to_string())
}

/// One response per line.
pub fn distinct_text(responses: &str) -> String {
    let rows: Vec<Vec<String>> = responses
        .lines()
        .map(tokenize)
        .filter(|r| !r.is_empty())
        .collect();
    json!({
        "responses": rows.len(),
        "dist1": distinct_n(&rows, 1),
        "dist2": distinct_n(&rows, 2),
    })
    .to_string()
}

#[wasm_bindgen]
pub fn emotion_labels() -> String {
    json!(EMOTION_LABELS).to_string()
}

#[wasm_bindgen(js_name = dialogueGraph)]
pub fn dialogue_graph_js(conllu: &str, seed: u32) -> Result<String, JsError> {
    dialogue_graph(conllu, seed as u64).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = minePatterns)]
pub fn mine_patterns_js(conllu: &str, lexicon_tsv: &str, emotion: &str) -> Result<String, JsError> {
    mine_text(conllu, lexicon_tsv, emotion).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = distinct)]
pub fn distinct_js(responses: &str) -> String {
    distinct_text(responses)
}
