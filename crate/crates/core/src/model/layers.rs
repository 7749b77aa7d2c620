//! Transformer building blocks on top of the tape.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::autograd::{Tape, Var};
use crate::params::{ParamId, ParamStore};
use crate::tensor::Matrix;

/// Seeded parameter initialization.
pub(crate) struct Init<'a> {
    pub store: &'a mut ParamStore,
    pub rng: &'a mut ChaCha8Rng,
}

impl Init<'_> {
    pub fn xavier(&mut self, name: &str, fan_in: usize, fan_out: usize) -> ParamId {
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let data = (0..fan_in * fan_out)
            .map(|_| self.rng.random_range(-bound..bound))
            .collect();
        self.store.add(name, Matrix::from_vec(fan_in, fan_out, data))
    }

    pub fn normal(&mut self, name: &str, rows: usize, cols: usize, std: f64) -> ParamId {
        let m = self.normal_matrix(rows, cols, std);
        self.store.add(name, m)
    }

    pub fn normal_matrix(&mut self, rows: usize, cols: usize, std: f64) -> Matrix {
        let dist = Normal::new(0.0, std).expect("positive std");
        Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| dist.sample(self.rng)).collect())
    }

    pub fn constant(&mut self, name: &str, rows: usize, cols: usize, v: f64) -> ParamId {
        self.store.add(name, Matrix::filled(rows, cols, v))
    }
}

/// Training-time randomness; `None` evaluates deterministically.
pub struct Dropout<'r> {
    pub rate: f64,
    pub rng: Option<&'r mut ChaCha8Rng>,
}

impl Dropout<'_> {
    pub fn off() -> Dropout<'static> {
        Dropout { rate: 0.0, rng: None }
    }

    pub fn apply(&mut self, t: &mut Tape<'_>, x: Var) -> Var {
        let Some(rng) = self.rng.as_deref_mut() else { return x };
        if self.rate <= 0.0 {
            return x;
        }
        let (r, c) = t.shape(x);
        let keep = 1.0 / (1.0 - self.rate);
        let mask = (0..r * c)
            .map(|_| if rng.random::<f64>() < self.rate { 0.0 } else { keep })
            .collect();
        let m = t.constant(Matrix::from_vec(r, c, mask));
        t.mul(x, m)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Linear {
    pub w: ParamId,
    pub b: ParamId,
}

impl Linear {
    pub(crate) fn new(init: &mut Init<'_>, name: &str, fan_in: usize, fan_out: usize) -> Self {
        Linear {
            w: init.xavier(&format!("{name}.w"), fan_in, fan_out),
            b: init.constant(&format!("{name}.b"), 1, fan_out, 0.0),
        }
    }

    pub fn forward(&self, t: &mut Tape<'_>, x: Var) -> Var {
        let (w, b) = (t.param(self.w), t.param(self.b));
        t.linear(x, w, b)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LayerNorm {
    pub gamma: ParamId,
    pub beta: ParamId,
}

impl LayerNorm {
    pub(crate) fn new(init: &mut Init<'_>, name: &str, width: usize) -> Self {
        LayerNorm {
            gamma: init.constant(&format!("{name}.gamma"), 1, width, 1.0),
            beta: init.constant(&format!("{name}.beta"), 1, width, 0.0),
        }
    }

    pub fn forward(&self, t: &mut Tape<'_>, x: Var) -> Var {
        let (g, b) = (t.param(self.gamma), t.param(self.beta));
        t.layer_norm(x, g, b)
    }
}

/// Multi-head scaled dot-product attention. Keys and values may come from a
/// memory of different width than the queries.
#[derive(Debug, Clone)]
pub struct MultiHeadAttention {
    pub heads: usize,
    pub width: usize,
    pub q: Linear,
    pub k: Linear,
    pub v: Linear,
    pub o: Linear,
}

pub struct AttentionOutput {
    pub out: Var,
    /// One probability matrix (queries × keys) per head.
    pub probs: Vec<Var>,
}

impl MultiHeadAttention {
    pub(crate) fn new(init: &mut Init<'_>, name: &str, width: usize, kv_width: usize, heads: usize) -> Self {
        assert!(width % heads == 0, "width {width} not divisible by {heads} heads");
        MultiHeadAttention {
            heads,
            width,
            q: Linear::new(init, &format!("{name}.q"), width, width),
            k: Linear::new(init, &format!("{name}.k"), kv_width, width),
            v: Linear::new(init, &format!("{name}.v"), kv_width, width),
            o: Linear::new(init, &format!("{name}.o"), width, width),
        }
    }

    /// `allowed` is a row-major queries × keys mask.
    pub fn forward(&self, t: &mut Tape<'_>, x: Var, memory: Var, allowed: &[bool]) -> AttentionOutput {
        let q = self.q.forward(t, x);
        let k = self.k.forward(t, memory);
        let v = self.v.forward(t, memory);
        let dh = self.width / self.heads;
        let scale = 1.0 / (dh as f64).sqrt();
        let mut outs = Vec::with_capacity(self.heads);
        let mut probs = Vec::with_capacity(self.heads);
        for h in 0..self.heads {
            let qh = t.slice_cols(q, h * dh, dh);
            let kh = t.slice_cols(k, h * dh, dh);
            let vh = t.slice_cols(v, h * dh, dh);
            let s = t.matmul_t(qh, false, kh, true);
            let s = t.scale(s, scale);
            let p = t.masked_softmax(s, Some(allowed));
            outs.push(t.matmul(p, vh));
            probs.push(p);
        }
        let cat = if outs.len() == 1 { outs[0] } else { t.concat(&outs) };
        AttentionOutput {
            out: self.o.forward(t, cat),
            probs,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FeedForward {
    pub up: Linear,
    pub down: Linear,
}

impl FeedForward {
    pub(crate) fn new(init: &mut Init<'_>, name: &str, width: usize, hidden: usize) -> Self {
        FeedForward {
            up: Linear::new(init, &format!("{name}.up"), width, hidden),
            down: Linear::new(init, &format!("{name}.down"), hidden, width),
        }
    }

    pub fn forward(&self, t: &mut Tape<'_>, x: Var) -> Var {
        let h = self.up.forward(t, x);
        let h = t.relu(h);
        self.down.forward(t, h)
    }
}

/// Post-norm encoder layer.
#[derive(Debug, Clone)]
pub struct EncoderLayer {
    pub attn: MultiHeadAttention,
    pub norm1: LayerNorm,
    pub ffn: FeedForward,
    pub norm2: LayerNorm,
}

impl EncoderLayer {
    pub(crate) fn new(init: &mut Init<'_>, name: &str, width: usize, heads: usize, ff_mult: usize) -> Self {
        EncoderLayer {
            attn: MultiHeadAttention::new(init, &format!("{name}.attn"), width, width, heads),
            norm1: LayerNorm::new(init, &format!("{name}.norm1"), width),
            ffn: FeedForward::new(init, &format!("{name}.ffn"), width, ff_mult * width),
            norm2: LayerNorm::new(init, &format!("{name}.norm2"), width),
        }
    }

    pub fn forward(&self, t: &mut Tape<'_>, x: Var, allowed: &[bool], drop: &mut Dropout<'_>) -> (Var, Vec<Var>) {
        let a = self.attn.forward(t, x, x, allowed);
        let h = drop.apply(t, a.out);
        let h = t.add(x, h);
        let h = self.norm1.forward(t, h);
        let f = self.ffn.forward(t, h);
        let f = drop.apply(t, f);
        let out = t.add(h, f);
        (self.norm2.forward(t, out), a.probs)
    }
}

/// Stack of encoder layers.
#[derive(Debug, Clone)]
pub struct Encoder {
    pub layers: Vec<EncoderLayer>,
}

impl Encoder {
    pub(crate) fn new(init: &mut Init<'_>, name: &str, width: usize, heads: usize, ff_mult: usize, layers: usize) -> Self {
        Encoder {
            layers: (0..layers)
                .map(|l| EncoderLayer::new(init, &format!("{name}.l{l}"), width, heads, ff_mult))
                .collect(),
        }
    }

    /// Self-attention over positions with `key_mask[j] == true`.
    pub fn forward(&self, t: &mut Tape<'_>, x: Var, key_mask: &[bool], drop: &mut Dropout<'_>) -> (Var, Vec<Var>) {
        let n = key_mask.len();
        let allowed: Vec<bool> = (0..n * n).map(|k| key_mask[k % n]).collect();
        let mut h = x;
        let mut probs = Vec::new();
        for layer in &self.layers {
            let (out, p) = layer.forward(t, h, &allowed, drop);
            h = out;
            probs.extend(p);
        }
        (h, probs)
    }
}

/// Post-norm decoder layer: causal self-attention, cross-attention, feed-forward.
#[derive(Debug, Clone)]
pub struct DecoderLayer {
    pub self_attn: MultiHeadAttention,
    pub norm1: LayerNorm,
    pub cross_attn: MultiHeadAttention,
    pub norm2: LayerNorm,
    pub ffn: FeedForward,
    pub norm3: LayerNorm,
}

pub struct DecoderLayerOutput {
    pub out: Var,
    pub self_probs: Vec<Var>,
    pub cross_probs: Vec<Var>,
}

impl DecoderLayer {
    pub(crate) fn new(
        init: &mut Init<'_>,
        name: &str,
        width: usize,
        memory_width: usize,
        heads: usize,
        ff_mult: usize,
    ) -> Self {
        DecoderLayer {
            self_attn: MultiHeadAttention::new(init, &format!("{name}.self"), width, width, heads),
            norm1: LayerNorm::new(init, &format!("{name}.norm1"), width),
            cross_attn: MultiHeadAttention::new(init, &format!("{name}.cross"), width, memory_width, heads),
            norm2: LayerNorm::new(init, &format!("{name}.norm2"), width),
            ffn: FeedForward::new(init, &format!("{name}.ffn"), width, ff_mult * width),
            norm3: LayerNorm::new(init, &format!("{name}.norm3"), width),
        }
    }

    pub fn forward(
        &self,
        t: &mut Tape<'_>,
        x: Var,
        memory: Var,
        causal: &[bool],
        cross: &[bool],
        drop: &mut Dropout<'_>,
    ) -> DecoderLayerOutput {
        let a = self.self_attn.forward(t, x, x, causal);
        let h = drop.apply(t, a.out);
        let h = t.add(x, h);
        let h = self.norm1.forward(t, h);
        let c = self.cross_attn.forward(t, h, memory, cross);
        let hc = drop.apply(t, c.out);
        let hc = t.add(h, hc);
        let hc = self.norm2.forward(t, hc);
        let f = self.ffn.forward(t, hc);
        let f = drop.apply(t, f);
        let out = t.add(hc, f);
        DecoderLayerOutput {
            out: self.norm3.forward(t, out),
            self_probs: a.probs,
            cross_probs: c.probs,
        }
    }
}

/// Sinusoidal position table: `sin` on even columns, `cos` on odd ones.
pub fn sinusoidal_positions(len: usize, width: usize) -> Matrix {
    let mut m = Matrix::zeros(len, width);
    for pos in 0..len {
        for i in 0..width {
            let exponent = (2 * (i / 2)) as f64 / width as f64;
            let angle = pos as f64 / 10000f64.powf(exponent);
            m[(pos, i)] = if i % 2 == 0 { angle.sin() } else { angle.cos() };
        }
    }
    m
}
