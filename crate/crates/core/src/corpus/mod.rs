//! Dialogue ingestion: the JSON-lines corpus, dependency parses, the emotion
//! lexicon and pretrained vectors, plus vocabulary building and encoding.

mod batch;
mod conllu;
mod encode;
mod lexicon;
mod vectors;
mod vocab;

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::emotion::Emotion;
use crate::error::{Error, Result};

pub use batch::{make_batches, sequential_batches, Batch, PaddedExample};
pub use conllu::{load_parses, parse_conllu, ParseMap, SentenceKey, UtteranceRef};
pub use encode::{build_adjacency, encode_example, encode_all, Adjacency, EncodedExample, State};
pub use lexicon::EmotionLexicon;
pub use vectors::{load_vectors, PretrainedVectors};
pub use vocab::{build_vocab, RelationSet, UposSet, Vocabulary};

/// One token of a dependency parse.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub upos: String,
    /// 0-based index of the head within the same utterance; `None` for the root.
    pub head: Option<usize>,
    pub deprel: String,
}

impl Token {
    pub fn new(surface: &str, upos: &str, head: Option<usize>, deprel: &str) -> Self {
        Token {
            surface: surface.to_string(),
            upos: upos.to_string(),
            head,
            deprel: deprel.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Speaker {
    Speaker,
    Listener,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Utterance {
    pub speaker: Speaker,
    pub tokens: Vec<String>,
}

/// A dialogue context with its gold emotion and gold reply.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dialogue {
    pub id: String,
    pub emotion: Emotion,
    pub utterances: Vec<Utterance>,
    pub response: Vec<String>,
}

/// Whitespace tokenization with lowercasing; the only tokenization performed.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_lowercase).collect()
}

#[derive(Deserialize)]
struct RawUtterance {
    speaker: Speaker,
    text: String,
}

#[derive(Deserialize)]
struct RawDialogue {
    id: String,
    emotion: String,
    utterances: Vec<RawUtterance>,
    response: String,
}

/// Reads a JSON-lines dialogue file, keeping file order.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<Dialogue>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(&text, path)
}

pub fn parse_corpus(text: &str, path: &Path) -> Result<Vec<Dialogue>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let lineno = i + 1;
        let raw: RawDialogue = serde_json::from_str(line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: lineno,
            msg: e.to_string(),
        })?;
        let emotion: Emotion = raw
            .emotion
            .parse()
            .map_err(|_| Error::Validation(format!("line {lineno}: unknown emotion label {:?}", raw.emotion)))?;
        if raw.utterances.is_empty() {
            return Err(Error::Validation(format!(
                "line {lineno}: dialogue {:?} has no utterances",
                raw.id
            )));
        }
        let mut utterances = Vec::with_capacity(raw.utterances.len());
        for (k, u) in raw.utterances.into_iter().enumerate() {
            let tokens = tokenize(&u.text);
            if tokens.is_empty() {
                return Err(Error::Validation(format!(
                    "line {lineno}: utterance {k} of dialogue {:?} is empty",
                    raw.id
                )));
            }
            utterances.push(Utterance {
                speaker: u.speaker,
                tokens,
            });
        }
        out.push(Dialogue {
            id: raw.id,
            emotion,
            utterances,
            response: tokenize(&raw.response),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<Vec<Dialogue>> {
        parse_corpus(s, Path::new("mem.jsonl"))
    }

    #[test]
    fn empty_file_is_empty_list() {
        assert!(parse("").unwrap().is_empty());
    }

    #[test]
    fn minimal_dialogue() {
        let d = parse(
            r#"{"id":"d0","emotion":"joyful","utterances":[{"speaker":"speaker","text":"I love dogs"}],"response":"Me too"}"#,
        )
        .unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].utterances[0].tokens, ["i", "love", "dogs"]);
        assert_eq!(d[0].response, ["me", "too"]);
        assert_eq!(d[0].emotion.label(), "joyful");
    }

    #[test]
    fn unknown_emotion_is_validation_error() {
        let err = parse(
            r#"{"id":"d0","emotion":"happy","utterances":[{"speaker":"speaker","text":"hi"}],"response":"hi"}"#,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
    }

    #[test]
    fn malformed_line_names_line_number() {
        let ok = r#"{"id":"d0","emotion":"sad","utterances":[{"speaker":"speaker","text":"hi"}],"response":"hi"}"#;
        let err = parse(&format!("{ok}\n{{not json\n")).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn empty_utterance_rejected() {
        let err = parse(
            r#"{"id":"d0","emotion":"sad","utterances":[{"speaker":"speaker","text":"  "}],"response":"hi"}"#,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }
}
