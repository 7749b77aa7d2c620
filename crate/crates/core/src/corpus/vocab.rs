use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::{Dialogue, ParseMap};

/// Word vocabulary with five reserved entries at fixed ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub const PAD: usize = 0;
    pub const UNK: usize = 1;
    pub const CLS: usize = 2;
    pub const BOS: usize = 3;
    pub const EOS: usize = 4;
    pub const RESERVED: [&'static str; 5] = ["<pad>", "<unk>", "<cls>", "<bos>", "<eos>"];

    pub fn reserved_only() -> Self {
        Self::from(Self::RESERVED.iter().map(|s| s.to_string()).collect::<Vec<_>>())
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    /// Id of `token`, falling back to UNK.
    pub fn id(&self, token: &str) -> usize {
        self.get(token).unwrap_or(Self::UNK)
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn is_special(id: usize) -> bool {
        id < Self::RESERVED.len()
    }
}

impl From<Vec<String>> for Vocabulary {
    fn from(tokens: Vec<String>) -> Self {
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vocabulary { tokens, index }
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.tokens
    }
}

/// Builds a vocabulary from context and response tokens. Reserved ids come
/// first, then words by descending frequency with lexicographic tie-breaks.
pub fn build_vocab(dialogues: &[Dialogue], min_freq: usize) -> Vocabulary {
    let min_freq = min_freq.max(1);
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for d in dialogues {
        let words = d
            .utterances
            .iter()
            .flat_map(|u| u.tokens.iter())
            .chain(d.response.iter());
        for w in words {
            *counts.entry(w.as_str()).or_default() += 1;
        }
    }
    let mut ranked: Vec<(&str, usize)> = counts
        .into_iter()
        .filter(|(w, c)| *c >= min_freq && !Vocabulary::RESERVED.contains(w))
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let mut tokens: Vec<String> = Vocabulary::RESERVED.iter().map(|s| s.to_string()).collect();
    tokens.extend(ranked.into_iter().map(|(w, _)| w.to_string()));
    Vocabulary::from(tokens)
}

/// Universal POS inventory plus PAD and CLS entries.
#[derive(Debug, Clone, Copy, Default)]
pub struct UposSet;

impl UposSet {
    pub const PAD: usize = 0;
    pub const CLS: usize = 1;
    pub const TAGS: [&'static str; 17] = [
        "ADJ", "ADP", "ADV", "AUX", "CCONJ", "DET", "INTJ", "NOUN", "NUM", "PART", "PRON",
        "PROPN", "PUNCT", "SCONJ", "SYM", "VERB", "X",
    ];

    pub const fn len() -> usize {
        Self::TAGS.len() + 2
    }

    /// Unknown tags map to `X`.
    pub fn id(tag: &str) -> usize {
        let upper = tag.to_ascii_uppercase();
        let pos = Self::TAGS
            .iter()
            .position(|t| *t == upper)
            .unwrap_or(Self::TAGS.len() - 1);
        pos + 2
    }

    pub fn name(id: usize) -> &'static str {
        match id {
            Self::PAD => "<pad>",
            Self::CLS => "<cls>",
            i => Self::TAGS.get(i - 2).copied().unwrap_or("X"),
        }
    }
}

/// Dependency-relation inventory collected from parses. `root` maps to the
/// ROOT entry, which also serves the CLS position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct RelationSet {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl RelationSet {
    pub const PAD: usize = 0;
    pub const ROOT: usize = 1;
    pub const UNK: usize = 2;

    pub fn from_parses(parses: &ParseMap) -> Self {
        let rels: BTreeSet<String> = parses
            .values()
            .flatten()
            .map(|t| t.deprel.to_lowercase())
            .filter(|r| r != "root")
            .collect();
        let mut names = vec!["<pad>".to_string(), "root".to_string(), "<unk>".to_string()];
        names.extend(rels);
        Self::from(names)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn id(&self, rel: &str) -> usize {
        let rel = rel.to_lowercase();
        self.index.get(&rel).copied().unwrap_or(Self::UNK)
    }

    pub fn name(&self, id: usize) -> Option<&str> {
        self.names.get(id).map(String::as_str)
    }
}

impl From<Vec<String>> for RelationSet {
    fn from(names: Vec<String>) -> Self {
        let index = names.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        RelationSet { names, index }
    }
}

impl From<RelationSet> for Vec<String> {
    fn from(r: RelationSet) -> Self {
        r.names
    }
}
