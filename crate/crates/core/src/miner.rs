//! Correlation-pattern mining over dependency parses.
//!
//! A pattern names a dependency edge that touches a lexicon emotion word:
//! `HEADPOS-rel-DEPPOS-slot`, where slot `f` marks the emotion word in the
//! head position and `b` in the dependent position. Root edges use the
//! `ROOT` head sentinel and relation `root`.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::fs;
use std::path::Path;

use crate::corpus::{Dialogue, EmotionLexicon, ParseMap, SentenceKey, Token};
use crate::emotion::Emotion;
use crate::error::{Error, Result};

pub const ROOT_POS: &str = "ROOT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Slot {
    /// Emotion word is the dependent.
    B,
    /// Emotion word is the head.
    F,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CorrelationPattern {
    pub head_pos: String,
    pub rel: String,
    pub dep_pos: String,
    pub slot: Slot,
}

impl CorrelationPattern {
    pub fn new(head_pos: &str, rel: &str, dep_pos: &str, slot: Slot) -> Self {
        CorrelationPattern {
            head_pos: head_pos.to_uppercase(),
            rel: rel.to_lowercase(),
            dep_pos: dep_pos.to_uppercase(),
            slot,
        }
    }

    pub fn key(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for CorrelationPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let slot = match self.slot {
            Slot::B => "b",
            Slot::F => "f",
        };
        write!(f, "{}-{}-{}-{}", self.head_pos, self.rel, self.dep_pos, slot)
    }
}

/// One pattern per emotion-word endpoint of every edge in a parsed sentence.
pub fn extract_patterns(tokens: &[Token], lexicon: &EmotionLexicon) -> Vec<CorrelationPattern> {
    let mut out = Vec::new();
    for dep in tokens {
        let dep_emotional = lexicon.is_emotion_word(&dep.surface);
        match dep.head {
            None => {
                if dep_emotional {
                    out.push(CorrelationPattern::new(ROOT_POS, "root", &dep.upos, Slot::B));
                }
            }
            Some(h) => {
                let head = &tokens[h];
                if lexicon.is_emotion_word(&head.surface) {
                    out.push(CorrelationPattern::new(&head.upos, &dep.deprel, &dep.upos, Slot::F));
                }
                if dep_emotional {
                    out.push(CorrelationPattern::new(&head.upos, &dep.deprel, &dep.upos, Slot::B));
                }
            }
        }
    }
    out
}

/// Pattern counts keyed by canonical pattern string.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorrelationCounts {
    pub global: BTreeMap<String, u64>,
    pub per_emotion: BTreeMap<Emotion, BTreeMap<String, u64>>,
}

impl CorrelationCounts {
    pub fn add(&mut self, emotion: Emotion, key: &str, n: u64) {
        *self.global.entry(key.to_string()).or_default() += n;
        *self
            .per_emotion
            .entry(emotion)
            .or_default()
            .entry(key.to_string())
            .or_default() += n;
    }

    pub fn merge(&mut self, other: &CorrelationCounts) {
        for (e, m) in &other.per_emotion {
            for (k, &n) in m {
                self.add(*e, k, n);
            }
        }
    }

    pub fn total(&self) -> u64 {
        self.global.values().sum()
    }

    pub fn emotion_total(&self, emotion: Emotion) -> u64 {
        self.per_emotion.get(&emotion).map_or(0, |m| m.values().sum())
    }

    pub fn num_patterns(&self) -> usize {
        self.global.len()
    }

    pub fn is_empty(&self) -> bool {
        self.global.is_empty()
    }

    /// Patterns by descending count, ties by ascending key.
    pub fn ranked(&self) -> Vec<(&str, u64)> {
        rank(&self.global)
    }
}

fn rank(m: &BTreeMap<String, u64>) -> Vec<(&str, u64)> {
    let mut v: Vec<(&str, u64)> = m.iter().map(|(k, &n)| (k.as_str(), n)).collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    v
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MineResult {
    pub counts: CorrelationCounts,
    /// Sentences skipped for lack of a parse.
    pub skipped: usize,
}

/// Counts every extracted pattern under its dialogue's gold emotion.
/// Responses are mined only with `include_responses`.
pub fn mine(dialogues: &[Dialogue], parses: &ParseMap, lexicon: &EmotionLexicon, include_responses: bool) -> MineResult {
    let mut out = MineResult::default();
    for d in dialogues {
        let mut keys: Vec<SentenceKey> = (0..d.utterances.len())
            .map(|i| SentenceKey::context(&d.id, i))
            .collect();
        if include_responses {
            keys.push(SentenceKey::response(&d.id));
        }
        for key in keys {
            let Some(tokens) = parses.get(&key) else {
                log::warn!("no parse for sentence {key}; skipped");
                out.skipped += 1;
                continue;
            };
            for p in extract_patterns(tokens, lexicon) {
                out.counts.add(d.emotion, &p.key(), 1);
            }
        }
    }
    out
}

/// Share of all uses covered by the top `ceil(fraction · #patterns)` patterns.
pub fn coverage_stats(counts: &CorrelationCounts, fraction: f64) -> Result<f64> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Validation(format!("fraction {fraction} outside (0, 1]")));
    }
    if counts.is_empty() {
        return Err(Error::Empty("no correlation patterns counted".into()));
    }
    let ranked = counts.ranked();
    let take = top_count(fraction, ranked.len());
    let covered: u64 = ranked[..take].iter().map(|(_, n)| n).sum();
    Ok(covered as f64 / counts.total() as f64)
}

/// `ceil(fraction · n)`, tolerant of products like `0.3 · 10` landing a
/// rounding error above an integer.
fn top_count(fraction: f64, n: usize) -> usize {
    ((fraction * n as f64 - 1e-9).ceil() as usize).clamp(1, n)
}

/// Top `k` patterns for `emotion` with their share of its uses, in percent.
pub fn per_emotion_top(counts: &CorrelationCounts, emotion: Emotion, k: usize) -> Result<Vec<(String, f64)>> {
    let m = counts
        .per_emotion
        .get(&emotion)
        .ok_or_else(|| Error::Validation(format!("no patterns counted for emotion {emotion}")))?;
    let total = counts.emotion_total(emotion) as f64;
    Ok(rank(m)
        .into_iter()
        .take(k)
        .map(|(key, n)| (key.to_string(), 100.0 * n as f64 / total))
        .collect())
}

/// Coverage curve sample points: 0.05, 0.10, …, 1.00.
pub fn coverage_fractions() -> impl Iterator<Item = f64> {
    (1..=20).map(|i| i as f64 / 20.0)
}

pub fn patterns_csv(counts: &CorrelationCounts) -> String {
    let total = counts.total() as f64;
    let mut s = String::from("pattern,count,percent\n");
    for (k, n) in counts.ranked() {
        let _ = writeln!(s, "{k},{n},{:.4}", 100.0 * n as f64 / total);
    }
    s
}

pub fn coverage_csv(counts: &CorrelationCounts) -> String {
    let mut s = String::from("fraction,top_patterns,coverage\n");
    if counts.is_empty() {
        return s;
    }
    for f in coverage_fractions() {
        let c = coverage_stats(counts, f).expect("non-empty counts");
        let _ = writeln!(s, "{f:.2},{},{c:.6}", top_count(f, counts.num_patterns()));
    }
    s
}

const GLOBAL_TOP: usize = 20;

pub fn report_markdown(result: &MineResult, fraction: f64, top_k: usize) -> Result<String> {
    let c = &result.counts;
    let mut s = String::from("# Correlation patterns\n\n");
    let _ = writeln!(s, "- patterns: {}", c.num_patterns());
    let _ = writeln!(s, "- uses: {}", c.total());
    let _ = writeln!(s, "- skipped sentences: {}", result.skipped);
    if c.is_empty() {
        s.push_str("\nNo correlation patterns were found.\n");
        return Ok(s);
    }
    let _ = writeln!(
        s,
        "- top {:.0}% of patterns cover {:.2}% of uses",
        100.0 * fraction,
        100.0 * coverage_stats(c, fraction)?
    );

    s.push_str("\n## Coverage\n\n| fraction | patterns | coverage |\n|---|---|---|\n");
    for f in coverage_fractions() {
        let _ = writeln!(
            s,
            "| {f:.2} | {} | {:.4} |",
            top_count(f, c.num_patterns()),
            coverage_stats(c, f)?
        );
    }

    let total = c.total() as f64;
    s.push_str("\n## Most frequent patterns\n\n| pattern | count | percent |\n|---|---|---|\n");
    for (k, n) in c.ranked().into_iter().take(GLOBAL_TOP) {
        let _ = writeln!(s, "| {k} | {n} | {:.2} |", 100.0 * n as f64 / total);
    }

    s.push_str("\n## Per emotion\n\n| emotion | top patterns |\n|---|---|\n");
    for &e in c.per_emotion.keys() {
        let top: Vec<String> = per_emotion_top(c, e, top_k)?
            .into_iter()
            .map(|(k, p)| format!("{k}({p:.2})"))
            .collect();
        let _ = writeln!(s, "| {e}({}) | {} |", c.emotion_total(e), top.join(", "));
    }
    Ok(s)
}

/// Writes `patterns.csv`, `coverage.csv` and `report.md` into `dir`.
pub fn write_report(result: &MineResult, dir: &Path, fraction: f64, top_k: usize) -> Result<()> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Validation(format!("fraction {fraction} outside (0, 1]")));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = [
        ("patterns.csv", patterns_csv(&result.counts)),
        ("coverage.csv", coverage_csv(&result.counts)),
        ("report.md", report_markdown(result, fraction, top_k)?),
    ];
    for (name, text) in files {
        let path = dir.join(name);
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}
