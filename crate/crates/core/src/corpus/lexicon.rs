use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Word-level emotion lexicon read from `word<TAB>emotion<TAB>0|1` rows.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EmotionLexicon {
    entries: BTreeMap<String, BTreeSet<String>>,
}

impl EmotionLexicon {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut lex = EmotionLexicon::default();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            let bad = |msg: &str| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg: msg.to_string(),
            };
            if cols.len() != 3 {
                return Err(bad("expected word<TAB>emotion<TAB>flag"));
            }
            let set = lex.entries.entry(cols[0].trim().to_lowercase()).or_default();
            match cols[2].trim() {
                "1" => {
                    set.insert(cols[1].trim().to_string());
                }
                "0" => {}
                _ => return Err(bad("flag must be 0 or 1")),
            }
        }
        Ok(lex)
    }

    pub fn from_words<'a>(words: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        let mut lex = EmotionLexicon::default();
        for (w, e) in words {
            lex.entries
                .entry(w.to_lowercase())
                .or_default()
                .insert(e.to_string());
        }
        lex
    }

    /// Emotion tags of `word`; empty for non-emotion or unknown words.
    pub fn tags(&self, word: &str) -> Option<&BTreeSet<String>> {
        self.entries.get(&word.to_lowercase())
    }

    pub fn is_emotion_word(&self, word: &str) -> bool {
        self.tags(word).is_some_and(|s| !s.is_empty())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
