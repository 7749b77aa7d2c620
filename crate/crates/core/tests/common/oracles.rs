//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use escm_core::corpus::{Dialogue, EmotionLexicon, ParseMap, SentenceKey, Speaker, Token, Utterance};
use escm_core::emotion::{Emotion, NUM_EMOTIONS};
use rand::seq::SliceRandom;
use rand::Rng;

pub const WORDS: [&str; 12] = [
    "happy", "scared", "nice", "angry", "proud", "lonely", "table", "dog", "walk", "it", "the", "very",
];
pub const EMOTION_WORDS: [&str; 6] = ["happy", "scared", "nice", "angry", "proud", "lonely"];
pub const UPOS: [&str; 7] = ["NOUN", "VERB", "ADJ", "PRON", "DET", "ADV", "AUX"];
pub const DEPRELS: [&str; 6] = ["nsubj", "obj", "amod", "advmod", "det", "dep"];

pub fn lexicon() -> EmotionLexicon {
    EmotionLexicon::from_words(EMOTION_WORDS.iter().map(|w| (*w, "joy")))
}

/// A random dependency tree over `n` tokens: a shuffled order where each
/// token after the first hangs off an earlier one.
pub fn random_tree(rng: &mut impl Rng, n: usize) -> Vec<Token> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut heads = vec![None; n];
    for k in 1..n {
        heads[order[k]] = Some(order[rng.random_range(0..k)]);
    }
    heads
        .into_iter()
        .map(|h| {
            let w = WORDS[rng.random_range(0..WORDS.len())];
            let upos = UPOS[rng.random_range(0..UPOS.len())];
            let rel = if h.is_none() { "root" } else { DEPRELS[rng.random_range(0..DEPRELS.len())] };
            Token::new(w, upos, h, rel)
        })
        .collect()
}

/// Random dialogues with parses for every utterance and most responses.
pub fn random_corpus(rng: &mut impl Rng, dialogues: usize) -> (Vec<Dialogue>, ParseMap) {
    let mut ds = Vec::new();
    let mut parses = ParseMap::new();
    for d in 0..dialogues {
        let id = format!("d{d:03}");
        let mut utterances = Vec::new();
        for u in 0..rng.random_range(1..4) {
            let len = rng.random_range(1..7);
            let tree = random_tree(rng, len);
            utterances.push(Utterance {
                speaker: if u % 2 == 0 { Speaker::Speaker } else { Speaker::Listener },
                tokens: tree.iter().map(|t| t.surface.clone()).collect(),
            });
            parses.insert(SentenceKey::context(&id, u), tree);
        }
        let len = rng.random_range(1..5);
        let response = random_tree(rng, len);
        let words = response.iter().map(|t| t.surface.clone()).collect();
        if rng.random_bool(0.7) {
            parses.insert(SentenceKey::response(&id), response);
        }
        ds.push(Dialogue {
            id,
            emotion: Emotion::from_id(rng.random_range(0..NUM_EMOTIONS)).unwrap(),
            utterances,
            response: words,
        });
    }
    (ds, parses)
}

pub type Tally = BTreeMap<String, u64>;

/// Enumerates every ordered token pair and keeps those joined by an edge.
pub fn brute_force_mine(
    dialogues: &[Dialogue],
    parses: &ParseMap,
    emotion_words: &BTreeSet<String>,
    include_responses: bool,
) -> (Tally, BTreeMap<Emotion, Tally>) {
    let mut global = Tally::new();
    let mut per: BTreeMap<Emotion, Tally> = BTreeMap::new();
    let mut bump = |e: Emotion, key: String| {
        *global.entry(key.clone()).or_insert(0) += 1;
        *per.entry(e).or_default().entry(key).or_insert(0) += 1;
    };
    for d in dialogues {
        let mut keys: Vec<SentenceKey> = (0..d.utterances.len()).map(|i| SentenceKey::context(&d.id, i)).collect();
        if include_responses {
            keys.push(SentenceKey::response(&d.id));
        }
        for key in keys {
            let Some(s) = parses.get(&key) else { continue };
            let emo = |t: &Token| emotion_words.contains(&t.surface.to_lowercase());
            for (j, dep) in s.iter().enumerate() {
                if dep.head.is_none() && emo(dep) {
                    bump(d.emotion, format!("ROOT-root-{}-b", dep.upos.to_uppercase()));
                }
                for (i, head) in s.iter().enumerate() {
                    if i == j || dep.head != Some(i) {
                        continue;
                    }
                    let stem = format!("{}-{}-{}", head.upos.to_uppercase(), dep.deprel.to_lowercase(), dep.upos.to_uppercase());
                    if emo(head) {
                        bump(d.emotion, format!("{stem}-f"));
                    }
                    if emo(dep) {
                        bump(d.emotion, format!("{stem}-b"));
                    }
                }
            }
        }
    }
    (global, per)
}

/// Literal double loop over the masked attention and value aggregation:
/// `p[i][j] = a_ij exp(q_i·q_j) / Σ_k a_ik exp(q_i·q_k)` and
/// `h[i] = relu(Σ_j p[i][j] (V_j W + b))`.
pub fn dcgcn_oracle(
    q: &[Vec<f64>],
    v: &[Vec<f64>],
    adj: &[Vec<bool>],
    w: &[Vec<f64>],
    b: &[f64],
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let l = q.len();
    let width = b.len();
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
    let mut p = vec![vec![0.0; l]; l];
    let mut h = vec![vec![0.0; width]; l];
    for i in 0..l {
        let mut m = f64::NEG_INFINITY;
        for k in 0..l {
            if adj[i][k] {
                m = m.max(dot(&q[i], &q[k]));
            }
        }
        let mut z = 0.0;
        for k in 0..l {
            if adj[i][k] {
                z += (dot(&q[i], &q[k]) - m).exp();
            }
        }
        for j in 0..l {
            if adj[i][j] {
                p[i][j] = (dot(&q[i], &q[j]) - m).exp() / z;
            }
        }
        for c in 0..width {
            let mut acc = 0.0;
            for j in 0..l {
                let mut val = b[c];
                for r in 0..v[j].len() {
                    val += v[j][r] * w[r][c];
                }
                acc += p[i][j] * val;
            }
            h[i][c] = acc.max(0.0);
        }
    }
    (p, h)
}
