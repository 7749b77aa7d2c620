use serde::{Deserialize, Serialize};

use super::{Dialogue, ParseMap, RelationSet, SentenceKey, Speaker, Token, UposSet, Vocabulary};
use crate::error::{Error, Result};

/// Role of a context position, indexing the state embedding table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum State {
    Cls = 0,
    Speaker = 1,
    Listener = 2,
}

impl From<Speaker> for State {
    fn from(s: Speaker) -> Self {
        match s {
            Speaker::Speaker => State::Speaker,
            Speaker::Listener => State::Listener,
        }
    }
}

/// Square 0/1 matrix over context positions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Adjacency {
    n: usize,
    cells: Vec<u8>,
}

impl Adjacency {
    pub fn identity(n: usize) -> Self {
        let mut a = Adjacency {
            n,
            cells: vec![0; n * n],
        };
        for i in 0..n {
            a.set(i, i);
        }
        a
    }

    pub fn from_rows(rows: &[Vec<u8>]) -> Self {
        let n = rows.len();
        let mut cells = Vec::with_capacity(n * n);
        for r in rows {
            assert_eq!(r.len(), n, "adjacency rows must be square");
            cells.extend(r.iter().map(|&v| u8::from(v != 0)));
        }
        Adjacency { n, cells }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.cells[i * self.n + j] != 0
    }

    /// Sets an undirected edge.
    pub fn set(&mut self, i: usize, j: usize) {
        self.cells[i * self.n + j] = 1;
        self.cells[j * self.n + i] = 1;
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.cells[i * self.n..(i + 1) * self.n]
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.row(i)
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0)
            .map(|(j, _)| j)
    }

    /// Embeds into an `n`×`n` matrix whose extra rows carry self-loops only.
    pub fn padded(&self, n: usize) -> Adjacency {
        assert!(n >= self.n);
        let mut a = Adjacency::identity(n);
        for i in 0..self.n {
            for j in 0..self.n {
                a.cells[i * n + j] = self.cells[i * self.n + j];
            }
        }
        a
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..self.n).all(|j| self.get(i, j) == self.get(j, i)))
    }
}

/// Builds the context adjacency: position 0 is CLS, utterances follow in
/// order. Entries are 1 on the diagonal and between a token and its head
/// within the same utterance; CLS links only to itself.
pub fn build_adjacency(utterances: &[&[Token]]) -> Adjacency {
    let n = 1 + utterances.iter().map(|u| u.len()).sum::<usize>();
    let mut a = Adjacency::identity(n);
    let mut offset = 1;
    for u in utterances {
        for (i, t) in u.iter().enumerate() {
            if let Some(h) = t.head {
                a.set(offset + i, offset + h);
            }
        }
        offset += u.len();
    }
    a
}

/// A dialogue converted to id sequences plus its dependency adjacency.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedExample {
    pub id: String,
    pub context_ids: Vec<usize>,
    pub state_ids: Vec<usize>,
    pub pos_ids: Vec<usize>,
    pub deprel_in_ids: Vec<usize>,
    pub adjacency: Adjacency,
    /// `BOS response EOS`.
    pub target_ids: Vec<usize>,
    pub emotion_id: usize,
}

impl EncodedExample {
    pub fn len(&self) -> usize {
        self.context_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.context_ids.is_empty()
    }
}

pub fn encode_example(
    dialogue: &Dialogue,
    parses: &ParseMap,
    vocab: &Vocabulary,
    relations: &RelationSet,
) -> Result<EncodedExample> {
    let mut trees: Vec<&[Token]> = Vec::with_capacity(dialogue.utterances.len());
    for (k, u) in dialogue.utterances.iter().enumerate() {
        let key = SentenceKey::context(&dialogue.id, k);
        let tree = parses
            .get(&key)
            .ok_or_else(|| Error::Alignment(format!("no parse for utterance {key}")))?;
        if tree.len() != u.tokens.len() {
            return Err(Error::Alignment(format!(
                "utterance {key} has {} tokens but its parse has {}",
                u.tokens.len(),
                tree.len()
            )));
        }
        trees.push(tree);
    }

    let mut context_ids = vec![Vocabulary::CLS];
    let mut state_ids = vec![State::Cls as usize];
    let mut pos_ids = vec![UposSet::CLS];
    let mut deprel_in_ids = vec![RelationSet::ROOT];
    for (u, tree) in dialogue.utterances.iter().zip(&trees) {
        for (word, tok) in u.tokens.iter().zip(tree.iter()) {
            context_ids.push(vocab.id(word));
            state_ids.push(State::from(u.speaker) as usize);
            pos_ids.push(UposSet::id(&tok.upos));
            deprel_in_ids.push(if tok.head.is_none() {
                RelationSet::ROOT
            } else {
                relations.id(&tok.deprel)
            });
        }
    }

    let mut target_ids = Vec::with_capacity(dialogue.response.len() + 2);
    target_ids.push(Vocabulary::BOS);
    target_ids.extend(dialogue.response.iter().map(|w| vocab.id(w)));
    target_ids.push(Vocabulary::EOS);

    Ok(EncodedExample {
        id: dialogue.id.clone(),
        context_ids,
        state_ids,
        pos_ids,
        deprel_in_ids,
        adjacency: build_adjacency(&trees),
        target_ids,
        emotion_id: dialogue.emotion.id(),
    })
}

pub fn encode_all(
    dialogues: &[Dialogue],
    parses: &ParseMap,
    vocab: &Vocabulary,
    relations: &RelationSet,
) -> Result<Vec<EncodedExample>> {
    dialogues
        .iter()
        .map(|d| encode_example(d, parses, vocab, relations))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_vocab, tokenize, Utterance};
    use crate::emotion::Emotion;

    fn i_love_dogs() -> Vec<Token> {
        vec![
            Token::new("I", "PRON", Some(1), "nsubj"),
            Token::new("love", "VERB", None, "root"),
            Token::new("dogs", "NOUN", Some(1), "obj"),
        ]
    }

    #[test]
    fn adjacency_for_single_sentence() {
        let t = i_love_dogs();
        let a = build_adjacency(&[&t]);
        let ones = [(0, 0), (1, 1), (2, 2), (3, 3), (1, 2), (2, 1), (2, 3), (3, 2)];
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(a.get(i, j), ones.contains(&(i, j)), "({i},{j})");
            }
        }
    }

    #[test]
    fn single_token_utterance_is_identity() {
        let t = vec![Token::new("hi", "INTJ", None, "root")];
        assert_eq!(build_adjacency(&[&t]), Adjacency::identity(2));
    }

    #[test]
    fn two_utterances_are_block_diagonal() {
        let t = i_love_dogs();
        let a = build_adjacency(&[&t, &t]);
        assert_eq!(a.len(), 7);
        for i in 1..4 {
            for j in 4..7 {
                assert!(!a.get(i, j) && !a.get(j, i));
            }
        }
        assert!(a.get(5, 4) && a.get(5, 6));
        assert!(a.is_symmetric());
    }

    fn setup() -> (Dialogue, ParseMap) {
        let d = Dialogue {
            id: "d0".into(),
            emotion: "joyful".parse::<Emotion>().unwrap(),
            utterances: vec![Utterance {
                speaker: Speaker::Speaker,
                tokens: tokenize("I love dogs"),
            }],
            response: tokenize("me too"),
        };
        let mut parses = ParseMap::new();
        parses.insert(SentenceKey::context("d0", 0), i_love_dogs());
        (d, parses)
    }

    #[test]
    fn encodes_one_utterance() {
        let (d, parses) = setup();
        let vocab = build_vocab(std::slice::from_ref(&d), 1);
        let rels = RelationSet::from_parses(&parses);
        let ex = encode_example(&d, &parses, &vocab, &rels).unwrap();
        assert_eq!(ex.len(), 4);
        assert_eq!(ex.context_ids[0], Vocabulary::CLS);
        assert_eq!(ex.deprel_in_ids[2], RelationSet::ROOT);
        assert_eq!(ex.deprel_in_ids[0], RelationSet::ROOT);
        assert_eq!(rels.name(ex.deprel_in_ids[1]), Some("nsubj"));
        assert_eq!(ex.pos_ids[0], UposSet::CLS);
        assert_eq!(UposSet::name(ex.pos_ids[3]), "NOUN");
        assert_eq!(ex.state_ids, [0, 1, 1, 1]);
        assert_eq!(ex.target_ids.first(), Some(&Vocabulary::BOS));
        assert_eq!(ex.target_ids.last(), Some(&Vocabulary::EOS));
    }

    #[test]
    fn oov_maps_to_unk() {
        let (d, parses) = setup();
        let vocab = Vocabulary::reserved_only();
        let rels = RelationSet::from_parses(&parses);
        let ex = encode_example(&d, &parses, &vocab, &rels).unwrap();
        assert!(ex.context_ids[1..].iter().all(|&i| i == Vocabulary::UNK));
    }

    #[test]
    fn length_mismatch_is_alignment_error() {
        let (mut d, parses) = setup();
        d.utterances[0].tokens.push("extra".into());
        let vocab = build_vocab(std::slice::from_ref(&d), 1);
        let rels = RelationSet::from_parses(&parses);
        let err = encode_example(&d, &parses, &vocab, &rels).unwrap_err();
        assert!(matches!(err, Error::Alignment(_)));
    }
}
