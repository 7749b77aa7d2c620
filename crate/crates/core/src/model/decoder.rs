//! Pointer-generator response decoder.

use super::embed::check_ids;
use super::layers::{sinusoidal_positions, DecoderLayer, Dropout, Init, Linear};
use super::{Model, ModelConfig};
use crate::autograd::{Tape, Var};
use crate::corpus::PaddedExample;
use crate::error::Result;

#[derive(Debug, Clone)]
pub struct PointerDecoder {
    /// Maps the concatenated memory back to width `d`; absent when the
    /// decoder attends over the raw concatenation.
    pub memory: Option<Linear>,
    pub layers: Vec<DecoderLayer>,
    pub out: Linear,
    pub gate: Linear,
}

impl PointerDecoder {
    pub(crate) fn new(init: &mut Init<'_>, c: &ModelConfig) -> Self {
        let memory = c
            .memory_projection
            .then(|| Linear::new(init, "memory", c.d_memory_raw(), c.d));
        let d_mem = c.d_memory();
        PointerDecoder {
            memory,
            layers: (0..c.layers)
                .map(|l| DecoderLayer::new(init, &format!("decoder.l{l}"), c.d, d_mem, c.heads, c.ff_mult))
                .collect(),
            out: Linear::new(init, "decoder.out", c.d, c.vocab_size),
            gate: Linear::new(init, "pointer.gate", 2 * c.d + d_mem, 1),
        }
    }
}

/// `H = H_ctx ⊕ H_cor`, then the optional projection. Returns `(raw, memory)`.
pub fn fuse_memory(t: &mut Tape<'_>, dec: &PointerDecoder, h_ctx: Var, h_cor: Var) -> (Var, Var) {
    let raw = t.concat(&[h_ctx, h_cor]);
    let mem = match &dec.memory {
        Some(proj) => proj.forward(t, raw),
        None => raw,
    };
    (raw, mem)
}

#[derive(Debug, Clone)]
pub struct DecodeOutput {
    pub memory_raw: Var,
    pub memory: Var,
    pub self_attention: Vec<Var>,
    pub cross_attention: Vec<Var>,
    /// Decoder states, T×d.
    pub states: Var,
    pub p_vocab: Var,
    /// Head-averaged cross-attention scattered onto context token ids.
    pub p_copy: Var,
    /// Generation gate, T×1.
    pub p_gen: Var,
    pub p_final: Var,
    /// Sum of −ln P(gold) over real target positions, 1×1.
    pub nll_sum: Var,
}

/// Per-step distributions for decoder inputs `inputs`, attending over
/// `memory`.
pub struct Steps {
    pub self_attention: Vec<Var>,
    pub cross_attention: Vec<Var>,
    pub states: Var,
    pub p_vocab: Var,
    pub p_copy: Var,
    pub p_gen: Var,
    pub p_final: Var,
}

impl PointerDecoder {
    pub fn steps(
        &self,
        t: &mut Tape<'_>,
        model: &Model,
        memory: Var,
        context_ids: &[usize],
        context_mask: &[bool],
        inputs: &[usize],
        drop: &mut Dropout<'_>,
    ) -> Result<Steps> {
        let c = &model.config;
        check_ids(inputs, c.vocab_size, "word table")?;
        let steps = inputs.len();
        let ctx_len = context_ids.len();
        let word = t.param(model.arch.word);
        let prev = t.gather_rows(word, inputs);
        let pos = t.constant(sinusoidal_positions(steps, c.d));
        let mut x = t.add(prev, pos);

        let causal: Vec<bool> = (0..steps * steps).map(|k| k % steps <= k / steps).collect();
        let cross: Vec<bool> = (0..steps * ctx_len).map(|k| context_mask[k % ctx_len]).collect();
        let mut self_attention = Vec::new();
        let mut cross_attention = Vec::new();
        let mut last_cross = Vec::new();
        for layer in &self.layers {
            let o = layer.forward(t, x, memory, &causal, &cross, drop);
            x = o.out;
            self_attention.extend(o.self_probs);
            last_cross = o.cross_probs.clone();
            cross_attention.extend(o.cross_probs);
        }
        let states = x;

        let logits = self.out.forward(t, states);
        let p_vocab = t.softmax(logits);

        let mut attn = last_cross[0];
        for &p in &last_cross[1..] {
            attn = t.add(attn, p);
        }
        let attn = t.scale(attn, 1.0 / last_cross.len() as f64);
        let p_copy = t.scatter_cols(attn, context_ids, c.vocab_size);
        let context = t.matmul(attn, memory);

        let gate_in = t.concat(&[states, context, prev]);
        let gate = self.gate.forward(t, gate_in);
        let p_gen = t.sigmoid(gate);
        let gen_part = t.mul_col(p_vocab, p_gen);
        let q = t.one_minus(p_gen);
        let copy_part = t.mul_col(p_copy, q);
        let p_final = t.add(gen_part, copy_part);
        Ok(Steps {
            self_attention,
            cross_attention,
            states,
            p_vocab,
            p_copy,
            p_gen,
            p_final,
        })
    }

    /// Teacher-forced decoding of one padded example.
    pub fn decode(
        &self,
        t: &mut Tape<'_>,
        model: &Model,
        ex: &PaddedExample,
        h_ctx: Var,
        h_cor: Var,
        drop: &mut Dropout<'_>,
    ) -> Result<DecodeOutput> {
        let (memory_raw, memory) = fuse_memory(t, self, h_ctx, h_cor);
        let s = self.steps(t, model, memory, &ex.context_ids, &ex.context_mask, &ex.decoder_input, drop)?;
        let cells: Vec<(usize, usize)> = ex
            .decoder_gold
            .iter()
            .enumerate()
            .filter(|(i, _)| ex.target_mask[*i])
            .map(|(i, &g)| (i, g))
            .collect();
        let picked = t.pick(s.p_final, &cells);
        let logs = t.ln(picked);
        let sum = t.sum(logs);
        let nll_sum = t.scale(sum, -1.0);
        Ok(DecodeOutput {
            memory_raw,
            memory,
            self_attention: s.self_attention,
            cross_attention: s.cross_attention,
            states: s.states,
            p_vocab: s.p_vocab,
            p_copy: s.p_copy,
            p_gen: s.p_gen,
            p_final: s.p_final,
            nll_sum,
        })
    }
}

/// Token-mean negative log-likelihood from a summed NLL and a token count.
pub fn generation_loss(t: &mut Tape<'_>, nll_sum: Var, tokens: usize) -> Var {
    t.scale(nll_sum, 1.0 / tokens.max(1) as f64)
}

/// Unweighted sum of the three loss terms.
pub fn total_loss(t: &mut Tape<'_>, l_gen: Var, l_ctx: Var, l_cor: Var) -> Var {
    let s = t.add(l_gen, l_ctx);
    t.add(s, l_cor)
}
