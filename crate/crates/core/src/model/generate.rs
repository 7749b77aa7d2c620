//! Free-running decoding.

use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::heads::{aggregate_attention, argmax, predict_emotion};
use super::layers::Dropout;
use super::{dcgcn, dynamic_emotion, dynamic_semantic, fuse_and_encode, fuse_memory, guiding_vectors, Model};
use crate::autograd::Tape;
use crate::corpus::{Batch, EncodedExample, Vocabulary};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Greedy,
    /// Sample among the `k` most probable tokens with a seeded generator.
    TopK { k: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Inference {
    /// Generated token ids, without BOS/EOS.
    pub response: Vec<usize>,
    /// Summed head distributions.
    pub emotion_scores: Vec<f64>,
    pub emotion: usize,
}

impl Model {
    /// Predicts the emotion and decodes a response of at most `max_len` tokens.
    pub fn infer(&self, ex: &EncodedExample, max_len: usize, strategy: Strategy) -> Result<Inference> {
        if max_len == 0 {
            return Err(Error::Validation("max_len must be at least 1".into()));
        }
        let batch = Batch::new(&[ex]);
        let pex = &batch.examples[0];
        let mut t = Tape::new(&self.params);
        let mut drop = Dropout::off();
        let a = &self.arch;

        let emotions = self.projected_emotions(&mut t);
        let (e_c, e_tilde) = self.embed_context(&mut t, pex)?;
        let (h_ctx, _) = a.context_encoder.forward(&mut t, e_tilde, &pex.context_mask, &mut drop);
        let e_ds = dynamic_semantic(&mut t, &a.dynamic, e_c);
        let (_, e_de) = dynamic_emotion(&mut t, &a.dynamic, e_c, emotions);
        let (v_des, h_des, _) = fuse_and_encode(&mut t, &a.dynamic, e_de, e_ds, &pex.context_mask, &mut drop);
        let v_qk = guiding_vectors(&mut t, &a.dynamic, h_des, &pex.pos_ids, &pex.deprel_in_ids)?;
        let (_, h_cor) = dcgcn(&mut t, v_qk, v_des, &pex.adjacency, &a.dynamic.value)?;
        let hc = aggregate_attention(&mut t, &a.head_ctx, h_ctx, &pex.context_mask);
        let hr = aggregate_attention(&mut t, &a.head_cor, h_cor, &pex.context_mask);
        let p_e = predict_emotion(&mut t, &hc, &hr);
        let emotion_scores = t.value(p_e).data().to_vec();
        let (_, memory) = fuse_memory(&mut t, &a.decoder, h_ctx, h_cor);

        let mut rng = match strategy {
            Strategy::TopK { seed, .. } => Some(ChaCha8Rng::seed_from_u64(seed)),
            Strategy::Greedy => None,
        };
        let mut inputs = vec![Vocabulary::BOS];
        let mut response = Vec::new();
        for _ in 0..max_len {
            let steps = a.decoder.steps(
                &mut t,
                self,
                memory,
                &pex.context_ids,
                &pex.context_mask,
                &inputs,
                &mut drop,
            )?;
            let dist = t.value(steps.p_final).row(inputs.len() - 1).to_vec();
            let next = match (strategy, rng.as_mut()) {
                (Strategy::TopK { k, .. }, Some(rng)) => sample_top_k(&dist, k, rng),
                _ => argmax(&dist),
            };
            if next == Vocabulary::EOS {
                break;
            }
            response.push(next);
            inputs.push(next);
        }
        Ok(Inference {
            emotion: argmax(&emotion_scores),
            emotion_scores,
            response,
        })
    }
}

fn sample_top_k(dist: &[f64], k: usize, rng: &mut ChaCha8Rng) -> usize {
    let mut order: Vec<usize> = (0..dist.len()).collect();
    order.sort_by(|&a, &b| dist[b].total_cmp(&dist[a]).then(a.cmp(&b)));
    order.truncate(k.max(1));
    match WeightedIndex::new(order.iter().map(|&i| dist[i])) {
        Ok(w) => order[w.sample(rng)],
        Err(_) => order[0],
    }
}

/// Decoded token ids for one example.
pub fn generate(model: &Model, ex: &EncodedExample, max_len: usize, strategy: Strategy) -> Result<Vec<usize>> {
    Ok(model.infer(ex, max_len, strategy)?.response)
}
