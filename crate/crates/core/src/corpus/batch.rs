use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Adjacency, EncodedExample, RelationSet, State, UposSet, Vocabulary};

/// An example padded to its batch's context and target lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct PaddedExample {
    pub id: String,
    pub context_ids: Vec<usize>,
    pub state_ids: Vec<usize>,
    pub pos_ids: Vec<usize>,
    pub deprel_in_ids: Vec<usize>,
    /// Pad rows hold a self-loop only and are nobody's neighbor.
    pub adjacency: Adjacency,
    /// `true` at real context positions.
    pub context_mask: Vec<bool>,
    /// Decoder input: `BOS y1 ... yn`, padded.
    pub decoder_input: Vec<usize>,
    /// Gold next tokens: `y1 ... yn EOS`, padded.
    pub decoder_gold: Vec<usize>,
    pub target_mask: Vec<bool>,
    pub emotion_id: usize,
}

impl PaddedExample {
    pub fn from_encoded(ex: &EncodedExample, len: usize, target_len: usize) -> Self {
        let n = ex.len();
        assert!(len >= n && target_len + 1 >= ex.target_ids.len());
        let pad = |v: &[usize], fill: usize, to: usize| {
            let mut out = v.to_vec();
            out.resize(to, fill);
            out
        };
        let steps = ex.target_ids.len() - 1;
        let mut context_mask = vec![true; n];
        context_mask.resize(len, false);
        let mut target_mask = vec![true; steps];
        target_mask.resize(target_len, false);
        PaddedExample {
            id: ex.id.clone(),
            context_ids: pad(&ex.context_ids, Vocabulary::PAD, len),
            state_ids: pad(&ex.state_ids, State::Cls as usize, len),
            pos_ids: pad(&ex.pos_ids, UposSet::PAD, len),
            deprel_in_ids: pad(&ex.deprel_in_ids, RelationSet::PAD, len),
            adjacency: ex.adjacency.padded(len),
            context_mask,
            decoder_input: pad(&ex.target_ids[..steps], Vocabulary::PAD, target_len),
            decoder_gold: pad(&ex.target_ids[1..], Vocabulary::PAD, target_len),
            target_mask,
            emotion_id: ex.emotion_id,
        }
    }

    pub fn context_len(&self) -> usize {
        self.context_ids.len()
    }

    pub fn target_len(&self) -> usize {
        self.decoder_input.len()
    }

    pub fn real_targets(&self) -> usize {
        self.target_mask.iter().filter(|&&m| m).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub examples: Vec<PaddedExample>,
}

impl Batch {
    pub fn new(examples: &[&EncodedExample]) -> Self {
        let len = examples.iter().map(|e| e.len()).max().unwrap_or(1);
        let target_len = examples
            .iter()
            .map(|e| e.target_ids.len() - 1)
            .max()
            .unwrap_or(1);
        Batch {
            examples: examples
                .iter()
                .map(|e| PaddedExample::from_encoded(e, len, target_len))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }
}

/// Shuffles with a seeded generator and cuts into padded batches.
pub fn make_batches(examples: &[EncodedExample], batch_size: usize, seed: u64) -> Vec<Batch> {
    let batch_size = batch_size.max(1);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    order
        .chunks(batch_size)
        .map(|chunk| {
            let refs: Vec<&EncodedExample> = chunk.iter().map(|&i| &examples[i]).collect();
            Batch::new(&refs)
        })
        .collect()
}

/// Batches in corpus order, without shuffling.
pub fn sequential_batches(examples: &[EncodedExample], batch_size: usize) -> Vec<Batch> {
    examples
        .chunks(batch_size.max(1))
        .map(|c| Batch::new(&c.iter().collect::<Vec<_>>()))
        .collect()
}
