//! Attention-pooled emotion classifiers.

use super::layers::{Init, Linear};
use crate::autograd::{Tape, Var};
use crate::emotion::NUM_EMOTIONS;

/// Token scoring, weighted pooling, and a tanh layer before the emotion
/// softmax. The context and correlation heads share this shape but not
/// parameters.
#[derive(Debug, Clone)]
pub struct EmotionHead {
    pub hidden1: Linear,
    pub score: Linear,
    pub hidden2: Linear,
    pub classify: Linear,
}

impl EmotionHead {
    pub(crate) fn new(init: &mut Init<'_>, name: &str, width: usize) -> Self {
        EmotionHead {
            hidden1: Linear::new(init, &format!("{name}.hidden1"), width, width),
            score: Linear::new(init, &format!("{name}.score"), width, 1),
            hidden2: Linear::new(init, &format!("{name}.hidden2"), width, width),
            classify: Linear::new(init, &format!("{name}.classify"), width, NUM_EMOTIONS),
        }
    }

    pub fn param_ids(&self) -> Vec<crate::params::ParamId> {
        [self.hidden1, self.score, self.hidden2, self.classify]
            .iter()
            .flat_map(Linear::ids)
            .collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct HeadOutput {
    /// Token weights as a 1×L row (zero at pads).
    pub p_s: Var,
    /// Pooled representation, 1×w.
    pub h2: Var,
    /// Emotion distribution, 1×32.
    pub p_e: Var,
}

pub fn aggregate_attention(t: &mut Tape<'_>, head: &EmotionHead, h: Var, mask: &[bool]) -> HeadOutput {
    let h1 = head.hidden1.forward(t, h);
    let h1 = t.tanh(h1);
    let scores = head.score.forward(t, h1);
    let scores = t.transpose(scores);
    let p_s = t.masked_softmax(scores, Some(mask));
    let h2 = t.matmul(p_s, h);
    let h2a = head.hidden2.forward(t, h2);
    let h2a = t.tanh(h2a);
    let logits = head.classify.forward(t, h2a);
    let p_e = t.softmax(logits);
    HeadOutput { p_s, h2, p_e }
}

/// Sum of the two heads' distributions.
pub fn predict_emotion(t: &mut Tape<'_>, ctx: &HeadOutput, cor: &HeadOutput) -> Var {
    t.add(ctx.p_e, cor.p_e)
}

/// Argmax with ties going to the lowest index.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// Per-example `(−ln P_ctx[gold], −ln P_cor[gold])`.
pub fn emotion_losses(t: &mut Tape<'_>, ctx: &HeadOutput, cor: &HeadOutput, gold: usize) -> (Var, Var) {
    let nll = |t: &mut Tape<'_>, p: Var| {
        let g = t.pick(p, &[(0, gold)]);
        let l = t.ln(g);
        t.scale(l, -1.0)
    };
    (nll(t, ctx.p_e), nll(t, cor.p_e))
}
