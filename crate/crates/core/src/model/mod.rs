//! The emotion-semantic correlation model.
//!
//! A context encoder and a dependency-masked correlation network feed two
//! emotion classifiers and a pointer-generator decoder. All computation runs
//! on an [`autograd::Tape`](crate::autograd::Tape) so the same code serves
//! training, evaluation and gradient checking.

mod decoder;
mod dynamic;
mod embed;
mod generate;
mod heads;
pub mod layers;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autograd::{Tape, Var};
use crate::corpus::{Batch, PaddedExample, PretrainedVectors, Vocabulary};
use crate::emotion::{EMOTION_LABELS, NUM_EMOTIONS};
use crate::error::{Error, Result};
use crate::params::{ParamId, ParamStore};
use crate::tensor::Matrix;

pub use decoder::{fuse_memory, generation_loss, total_loss, DecodeOutput, PointerDecoder};
pub use dynamic::{dcgcn, dynamic_emotion, dynamic_semantic, fuse_and_encode, guiding_vectors, DynamicCorrelation};
pub use generate::{generate, Inference, Strategy};
pub use heads::{aggregate_attention, argmax, emotion_losses, predict_emotion, EmotionHead, HeadOutput};
use layers::{Dropout, Encoder, Init, Linear};

/// Architecture widths and regularization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Word-embedding and context-encoder width.
    pub d: usize,
    /// Width of the dynamic semantic vectors.
    pub d_s: usize,
    /// Width of the part-of-speech and dependency-relation embeddings.
    pub d_pr: usize,
    pub heads: usize,
    pub layers: usize,
    /// Feed-forward hidden width as a multiple of the layer width.
    pub ff_mult: usize,
    pub dropout: f64,
    /// Project the concatenated decoder memory back to width `d`.
    pub memory_projection: bool,
    pub vocab_size: usize,
    pub pos_size: usize,
    pub rel_size: usize,
}

impl ModelConfig {
    /// Number of emotion categories; also the dynamic emotion width.
    pub const fn d_e(&self) -> usize {
        NUM_EMOTIONS
    }

    /// Width of the emotion-semantic vectors.
    pub fn d_des(&self) -> usize {
        self.d_s + self.d_e()
    }

    /// Width of the per-token guiding vectors.
    pub fn d_qk(&self) -> usize {
        self.d_des() + 2 * self.d_pr
    }

    /// Width of the concatenated decoder memory before projection.
    pub fn d_memory_raw(&self) -> usize {
        self.d + self.d_des()
    }

    pub fn d_memory(&self) -> usize {
        if self.memory_projection {
            self.d
        } else {
            self.d_memory_raw()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("d", self.d),
            ("d_s", self.d_s),
            ("d_pr", self.d_pr),
            ("heads", self.heads),
            ("layers", self.layers),
            ("ff_mult", self.ff_mult),
            ("vocab_size", self.vocab_size),
            ("pos_size", self.pos_size),
            ("rel_size", self.rel_size),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Validation(format!("{name} must be positive")));
            }
        }
        if self.d % self.heads != 0 || self.d_des() % self.heads != 0 {
            return Err(Error::Validation(format!(
                "widths {} and {} must be divisible by {} heads",
                self.d,
                self.d_des(),
                self.heads
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Validation("dropout must lie in [0, 1)".into()));
        }
        if self.vocab_size < Vocabulary::RESERVED.len() {
            return Err(Error::Validation("vocabulary lacks reserved tokens".into()));
        }
        Ok(())
    }
}

/// Parameter handles for every component.
#[derive(Debug, Clone)]
pub struct Architecture {
    pub word: ParamId,
    pub state: ParamId,
    pub emotion: ParamId,
    pub context_encoder: Encoder,
    pub dynamic: DynamicCorrelation,
    pub head_ctx: EmotionHead,
    pub head_cor: EmotionHead,
    pub decoder: PointerDecoder,
}

#[derive(Debug, Clone)]
pub struct Model {
    pub config: ModelConfig,
    pub arch: Architecture,
    pub params: ParamStore,
}

impl Model {
    /// Builds a freshly initialized model. Word rows (and emotion rows, via
    /// the label words) come from `vectors` when present there.
    pub fn new(config: ModelConfig, seed: u64, vocab: Option<&Vocabulary>, vectors: Option<&PretrainedVectors>) -> Result<Self> {
        config.validate()?;
        let mut params = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut init = Init {
            store: &mut params,
            rng: &mut rng,
        };
        let c = &config;
        let emb_std = 1.0 / (c.d as f64).sqrt();

        let mut word_table = init.normal_matrix(c.vocab_size, c.d, emb_std);
        word_table.row_mut(Vocabulary::PAD).fill(0.0);
        let mut emotion_table = init.normal_matrix(NUM_EMOTIONS, c.d, emb_std);
        if let Some(vectors) = vectors.filter(|v| v.dim > 0) {
            if vectors.dim != c.d {
                return Err(Error::Validation(format!(
                    "pretrained vectors have dimension {}, model expects {}",
                    vectors.dim, c.d
                )));
            }
            if let Some(vocab) = vocab {
                for (id, tok) in vocab.tokens().iter().enumerate().skip(Vocabulary::RESERVED.len()) {
                    if let Some(v) = vectors.get(tok) {
                        word_table.row_mut(id).copy_from_slice(v);
                    }
                }
            }
            for (e, label) in EMOTION_LABELS.iter().enumerate() {
                if let Some(v) = label_vector(label, vectors) {
                    emotion_table.row_mut(e).copy_from_slice(&v);
                }
            }
        }
        let word = init.store.add("embed.word", word_table);
        let state = init.normal("embed.state", 3, c.d, emb_std);
        let emotion = init.store.add("embed.emotion", emotion_table);

        let context_encoder = Encoder::new(&mut init, "context_encoder", c.d, c.heads, c.ff_mult, c.layers);
        let dynamic = DynamicCorrelation::new(&mut init, c);
        let head_ctx = EmotionHead::new(&mut init, "head_ctx", c.d);
        let head_cor = EmotionHead::new(&mut init, "head_cor", c.d_des());
        let decoder = PointerDecoder::new(&mut init, c);

        Ok(Model {
            arch: Architecture {
                word,
                state,
                emotion,
                context_encoder,
                dynamic,
                head_ctx,
                head_cor,
                decoder,
            },
            config,
            params,
        })
    }

    /// Component a parameter belongs to, from its name prefix.
    pub fn component_of(name: &str) -> &str {
        name.split('.').next().unwrap_or(name)
    }
}

/// Mean of the vectors of a label's words; `None` if any word is missing.
fn label_vector(label: &str, vectors: &PretrainedVectors) -> Option<Vec<f64>> {
    let words: Vec<&str> = label.split(|c: char| c == '_' || c.is_whitespace()).collect();
    let mut acc = vec![0.0; vectors.dim];
    for w in &words {
        let v = vectors.get(w)?;
        acc.iter_mut().zip(v).for_each(|(a, b)| *a += b);
    }
    acc.iter_mut().for_each(|a| *a /= words.len() as f64);
    Some(acc)
}

/// Tape variables produced for one example.
#[derive(Debug, Clone)]
pub struct ExampleVars {
    pub e_c: Var,
    pub e_tilde: Var,
    pub h_ctx: Var,
    pub ctx_attention: Vec<Var>,
    pub e_ds: Var,
    pub e_dot: Var,
    pub e_de: Var,
    pub v_des: Var,
    pub h_des: Var,
    pub des_attention: Vec<Var>,
    pub v_qk: Var,
    pub p: Var,
    pub h_cor: Var,
    pub head_ctx: HeadOutput,
    pub head_cor: HeadOutput,
    pub p_e: Var,
    pub decode: DecodeOutput,
    /// −ln P(gold) for the ctx and cor heads, 1×1 each.
    pub nll_ctx: Var,
    pub nll_cor: Var,
}

/// Owned copies of every intermediate of one example's forward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub e_c: Matrix,
    pub e_tilde: Matrix,
    pub h_ctx: Matrix,
    pub ctx_attention: Vec<Matrix>,
    pub e_ds: Matrix,
    pub e_dot: Matrix,
    pub e_de: Matrix,
    pub v_des: Matrix,
    pub h_des: Matrix,
    pub des_attention: Vec<Matrix>,
    pub v_qk: Matrix,
    pub p: Matrix,
    pub h_cor: Matrix,
    pub p_s_ctx: Matrix,
    pub p_s_cor: Matrix,
    pub p_e_ctx: Matrix,
    pub p_e_cor: Matrix,
    pub p_e: Matrix,
    pub memory_raw: Matrix,
    pub dec_self_attention: Vec<Matrix>,
    pub dec_cross_attention: Vec<Matrix>,
    pub p_vocab: Matrix,
    pub p_copy: Matrix,
    pub p_gen: Matrix,
    pub p_final: Matrix,
}

impl ExampleVars {
    pub fn materialize(&self, t: &Tape<'_>) -> ForwardTrace {
        let v = |x: Var| t.value(x).clone();
        let vs = |xs: &[Var]| xs.iter().map(|&x| t.value(x).clone()).collect();
        ForwardTrace {
            e_c: v(self.e_c),
            e_tilde: v(self.e_tilde),
            h_ctx: v(self.h_ctx),
            ctx_attention: vs(&self.ctx_attention),
            e_ds: v(self.e_ds),
            e_dot: v(self.e_dot),
            e_de: v(self.e_de),
            v_des: v(self.v_des),
            h_des: v(self.h_des),
            des_attention: vs(&self.des_attention),
            v_qk: v(self.v_qk),
            p: v(self.p),
            h_cor: v(self.h_cor),
            p_s_ctx: v(self.head_ctx.p_s),
            p_s_cor: v(self.head_cor.p_s),
            p_e_ctx: v(self.head_ctx.p_e),
            p_e_cor: v(self.head_cor.p_e),
            p_e: v(self.p_e),
            memory_raw: v(self.decode.memory_raw),
            dec_self_attention: vs(&self.decode.self_attention),
            dec_cross_attention: vs(&self.decode.cross_attention),
            p_vocab: v(self.decode.p_vocab),
            p_copy: v(self.decode.p_copy),
            p_gen: v(self.decode.p_gen),
            p_final: v(self.decode.p_final),
        }
    }
}

/// Loss terms of one batch.
#[derive(Debug, Clone)]
pub struct BatchForward {
    pub examples: Vec<ExampleVars>,
    pub l_gen: Var,
    pub l_ctx: Var,
    pub l_cor: Var,
    pub total: Var,
    /// Sum of −ln P over all real target tokens, and their count.
    pub gen_nll_sum: Var,
    pub target_tokens: usize,
}

impl Model {
    /// Runs one example end to end (teacher forcing on the decoder).
    pub fn forward_example(&self, t: &mut Tape<'_>, ex: &PaddedExample, emotions: Var, drop: &mut Dropout<'_>) -> Result<ExampleVars> {
        let a = &self.arch;
        let (e_c, e_tilde) = self.embed_context(t, ex)?;
        let (h_ctx, ctx_attention) = a.context_encoder.forward(t, e_tilde, &ex.context_mask, drop);

        let e_ds = dynamic_semantic(t, &a.dynamic, e_c);
        let (e_dot, e_de) = dynamic_emotion(t, &a.dynamic, e_c, emotions);
        let (v_des, h_des, des_attention) = fuse_and_encode(t, &a.dynamic, e_de, e_ds, &ex.context_mask, drop);
        let v_qk = guiding_vectors(t, &a.dynamic, h_des, &ex.pos_ids, &ex.deprel_in_ids)?;
        let (p, h_cor) = dcgcn(t, v_qk, v_des, &ex.adjacency, &a.dynamic.value)?;

        let head_ctx = aggregate_attention(t, &a.head_ctx, h_ctx, &ex.context_mask);
        let head_cor = aggregate_attention(t, &a.head_cor, h_cor, &ex.context_mask);
        let p_e = predict_emotion(t, &head_ctx, &head_cor);
        let (nll_ctx, nll_cor) = emotion_losses(t, &head_ctx, &head_cor, ex.emotion_id);

        let decode = a.decoder.decode(t, self, ex, h_ctx, h_cor, drop)?;
        Ok(ExampleVars {
            e_c,
            e_tilde,
            h_ctx,
            ctx_attention,
            e_ds,
            e_dot,
            e_de,
            v_des,
            h_des,
            des_attention,
            v_qk,
            p,
            h_cor,
            head_ctx,
            head_cor,
            p_e,
            decode,
            nll_ctx,
            nll_cor,
        })
    }

    /// Forward pass over a batch with token-mean generation loss and
    /// batch-mean emotion losses, summed unweighted.
    pub fn forward_batch(&self, t: &mut Tape<'_>, batch: &Batch, drop: &mut Dropout<'_>) -> Result<BatchForward> {
        if batch.is_empty() {
            return Err(Error::Empty("batch has no examples".into()));
        }
        let emotions = self.projected_emotions(t);
        let mut examples = Vec::with_capacity(batch.len());
        for ex in &batch.examples {
            examples.push(self.forward_example(t, ex, emotions, drop)?);
        }
        let n = batch.len() as f64;
        let gen_sums: Vec<Var> = examples.iter().map(|e| e.decode.nll_sum).collect();
        let ctx: Vec<Var> = examples.iter().map(|e| e.nll_ctx).collect();
        let cor: Vec<Var> = examples.iter().map(|e| e.nll_cor).collect();
        let target_tokens: usize = batch.examples.iter().map(PaddedExample::real_targets).sum();

        let gen_nll_sum = sum_scalars(t, &gen_sums);
        let l_gen = generation_loss(t, gen_nll_sum, target_tokens);
        let s_ctx = sum_scalars(t, &ctx);
        let l_ctx = t.scale(s_ctx, 1.0 / n);
        let s_cor = sum_scalars(t, &cor);
        let l_cor = t.scale(s_cor, 1.0 / n);
        let total = total_loss(t, l_gen, l_ctx, l_cor);
        Ok(BatchForward {
            examples,
            l_gen,
            l_ctx,
            l_cor,
            total,
            gen_nll_sum,
            target_tokens,
        })
    }
}

fn sum_scalars(t: &mut Tape<'_>, xs: &[Var]) -> Var {
    let cat = t.concat(xs);
    t.sum(cat)
}

/// Small configuration for tests and demos.
pub fn tiny_config(vocab_size: usize, rel_size: usize) -> ModelConfig {
    ModelConfig {
        d: 8,
        d_s: 4,
        d_pr: 3,
        heads: 2,
        layers: 1,
        ff_mult: 2,
        dropout: 0.0,
        memory_projection: true,
        vocab_size,
        pos_size: crate::corpus::UposSet::len(),
        rel_size,
    }
}

impl Linear {
    pub(crate) fn ids(&self) -> [ParamId; 2] {
        [self.w, self.b]
    }
}
