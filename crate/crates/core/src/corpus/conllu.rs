//! Reader for dependency parses in CoNLL-U form.
//!
//! Both the full 10-column layout and a reduced 5-column layout
//! (`ID FORM UPOS HEAD DEPREL`) are accepted. Every sentence must carry a
//! `# sent_id = <dialogue_id>/<utterance_index>` comment; the gold reply may
//! use `r` as its utterance index.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;

use super::Token;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum UtteranceRef {
    Context(usize),
    Response,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SentenceKey {
    pub dialogue: String,
    pub utterance: UtteranceRef,
}

impl SentenceKey {
    pub fn context(dialogue: &str, index: usize) -> Self {
        SentenceKey {
            dialogue: dialogue.to_string(),
            utterance: UtteranceRef::Context(index),
        }
    }

    pub fn response(dialogue: &str) -> Self {
        SentenceKey {
            dialogue: dialogue.to_string(),
            utterance: UtteranceRef::Response,
        }
    }
}

impl fmt::Display for SentenceKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.utterance {
            UtteranceRef::Context(i) => write!(f, "{}/{}", self.dialogue, i),
            UtteranceRef::Response => write!(f, "{}/r", self.dialogue),
        }
    }
}

pub type ParseMap = BTreeMap<SentenceKey, Vec<Token>>;

pub fn load_parses(path: impl AsRef<Path>) -> Result<ParseMap> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_conllu(&text, path)
}

struct Pending {
    key: Option<SentenceKey>,
    start_line: usize,
    rows: Vec<(usize, String, String, usize, String)>,
}

pub fn parse_conllu(text: &str, path: &Path) -> Result<ParseMap> {
    let err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut out = ParseMap::new();
    let mut cur: Option<Pending> = None;

    let finish = |p: Pending, out: &mut ParseMap| -> Result<()> {
        let key = p
            .key
            .ok_or_else(|| err(p.start_line, "sentence has no `# sent_id` comment".into()))?;
        let n = p.rows.len();
        let mut tokens = Vec::with_capacity(n);
        for (i, (line, form, upos, head, deprel)) in p.rows.into_iter().enumerate() {
            let head = match head {
                0 => None,
                h if h > n => {
                    return Err(err(line, format!("head {h} out of range for {n}-token sentence")))
                }
                h if h - 1 == i => return Err(err(line, "token is its own head".into())),
                h => Some(h - 1),
            };
            tokens.push(Token {
                surface: form,
                upos,
                head,
                deprel: deprel.to_lowercase(),
            });
        }
        if out.insert(key.clone(), tokens).is_some() {
            return Err(err(p.start_line, format!("duplicate sentence id {key}")));
        }
        Ok(())
    };

    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            if let Some(p) = cur.take() {
                finish(p, &mut out)?;
            }
            continue;
        }
        let pending = cur.get_or_insert_with(|| Pending {
            key: None,
            start_line: lineno,
            rows: Vec::new(),
        });
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((k, v)) = comment.split_once('=') {
                if k.trim() == "sent_id" {
                    pending.key = Some(parse_sent_id(v.trim()).map_err(|m| err(lineno, m))?);
                }
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let (id, form, upos, head, deprel) = match cols.len() {
            10 => (cols[0], cols[1], cols[3], cols[6], cols[7]),
            5 => (cols[0], cols[1], cols[2], cols[3], cols[4]),
            n => return Err(err(lineno, format!("expected 5 or 10 tab-separated columns, found {n}"))),
        };
        // Multiword ranges and empty nodes carry no tree edges.
        if id.contains('-') || id.contains('.') {
            continue;
        }
        let id: usize = id
            .parse()
            .map_err(|_| err(lineno, format!("bad token id {id:?}")))?;
        if id != pending.rows.len() + 1 {
            return Err(err(lineno, format!("token id {id} out of sequence")));
        }
        let head: usize = head
            .parse()
            .map_err(|_| err(lineno, format!("bad head {head:?}")))?;
        if upos.is_empty() || upos == "_" || deprel.is_empty() || deprel == "_" {
            return Err(err(lineno, "missing UPOS or DEPREL".into()));
        }
        pending
            .rows
            .push((lineno, form.to_string(), upos.to_string(), head, deprel.to_string()));
    }
    if let Some(p) = cur.take() {
        finish(p, &mut out)?;
    }
    Ok(out)
}

fn parse_sent_id(v: &str) -> std::result::Result<SentenceKey, String> {
    let (dialogue, idx) = v
        .rsplit_once('/')
        .ok_or_else(|| format!("sent_id {v:?} is not of the form <dialogue>/<index>"))?;
    let utterance = if idx == "r" {
        UtteranceRef::Response
    } else {
        UtteranceRef::Context(
            idx.parse()
                .map_err(|_| format!("bad utterance index {idx:?} in sent_id"))?,
        )
    };
    Ok(SentenceKey {
        dialogue: dialogue.to_string(),
        utterance,
    })
}
