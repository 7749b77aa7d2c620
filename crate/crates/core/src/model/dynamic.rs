//! Dynamic emotion-semantic vectors and the dependency-masked correlation
//! aggregation.

use super::embed::check_ids;
use super::layers::{Dropout, Encoder, Init, Linear};
use super::{Model, ModelConfig};
use crate::autograd::{Tape, Var};
use crate::corpus::Adjacency;
use crate::emotion::NUM_EMOTIONS;
use crate::error::{Error, Result};
use crate::params::ParamId;

#[derive(Debug, Clone)]
pub struct DynamicCorrelation {
    /// `E_c -> E_ds`.
    pub semantic: Linear,
    /// Context side of the emotion interaction.
    pub context_proj: Linear,
    /// Emotion-table side of the emotion interaction.
    pub emotion_proj: Linear,
    /// `E_dot -> E_de`.
    pub interact: Linear,
    pub encoder: Encoder,
    pub pos: ParamId,
    pub deprel: ParamId,
    /// Value map applied to `V_des` before aggregation.
    pub value: Linear,
}

impl DynamicCorrelation {
    pub(crate) fn new(init: &mut Init<'_>, c: &ModelConfig) -> Self {
        let d_des = c.d_des();
        let pr_std = 1.0 / (c.d_pr as f64).sqrt();
        DynamicCorrelation {
            semantic: Linear::new(init, "dynamic.semantic", c.d, c.d_s),
            context_proj: Linear::new(init, "dynamic.context_proj", c.d, c.d),
            emotion_proj: Linear::new(init, "dynamic.emotion_proj", c.d, c.d),
            interact: Linear::new(init, "dynamic.interact", NUM_EMOTIONS, NUM_EMOTIONS),
            encoder: Encoder::new(init, "des_encoder", d_des, c.heads, c.ff_mult, c.layers),
            pos: init.normal("dcgcn.pos", c.pos_size, c.d_pr, pr_std),
            deprel: init.normal("dcgcn.deprel", c.rel_size, c.d_pr, pr_std),
            value: Linear::new(init, "dcgcn.value", d_des, d_des),
        }
    }
}

impl Model {
    /// `W_e E_e + b_e` over all 32 emotion embeddings; shared by a batch.
    pub fn projected_emotions(&self, t: &mut Tape<'_>) -> Var {
        let table = t.param(self.arch.emotion);
        self.arch.dynamic.emotion_proj.forward(t, table)
    }
}

/// `E_ds = W_s E_c + b_s`.
pub fn dynamic_semantic(t: &mut Tape<'_>, m: &DynamicCorrelation, e_c: Var) -> Var {
    m.semantic.forward(t, e_c)
}

/// Interaction of every context word with every projected emotion
/// embedding, returning `(E_dot, E_de)`.
pub fn dynamic_emotion(t: &mut Tape<'_>, m: &DynamicCorrelation, e_c: Var, projected_emotions: Var) -> (Var, Var) {
    let ctx = m.context_proj.forward(t, e_c);
    let e_dot = t.matmul_t(ctx, false, projected_emotions, true);
    let e_de = m.interact.forward(t, e_dot);
    (e_dot, e_de)
}

/// `V_des = E_de ⊕ E_ds` and its encoding `H_des`.
pub fn fuse_and_encode(
    t: &mut Tape<'_>,
    m: &DynamicCorrelation,
    e_de: Var,
    e_ds: Var,
    mask: &[bool],
    drop: &mut Dropout<'_>,
) -> (Var, Var, Vec<Var>) {
    let v_des = t.concat(&[e_de, e_ds]);
    let (h_des, attn) = m.encoder.forward(t, v_des, mask, drop);
    (v_des, h_des, attn)
}

/// Per-token guiding vectors: `H_des[i] ⊕ pos[i] ⊕ deprel_in[i]`.
pub fn guiding_vectors(
    t: &mut Tape<'_>,
    m: &DynamicCorrelation,
    h_des: Var,
    pos_ids: &[usize],
    deprel_ids: &[usize],
) -> Result<Var> {
    let pos_table = t.param(m.pos);
    let rel_table = t.param(m.deprel);
    check_ids(pos_ids, t.value(pos_table).rows(), "POS table")?;
    check_ids(deprel_ids, t.value(rel_table).rows(), "relation table")?;
    let vp = t.gather_rows(pos_table, pos_ids);
    let vr = t.gather_rows(rel_table, deprel_ids);
    Ok(t.concat(&[h_des, vp, vr]))
}

/// Attention restricted to dependency neighbours:
/// `p[i][j] ∝ a[i][j]·exp(V_qk[i]·V_qk[j])` and
/// `H_cor[i] = ReLU(Σ_j p[i][j] (V_des[j] W_v + b_v))`.
pub fn dcgcn(t: &mut Tape<'_>, v_qk: Var, v_des: Var, adjacency: &Adjacency, value: &Linear) -> Result<(Var, Var)> {
    let n = t.shape(v_qk).0;
    if adjacency.len() != n || t.shape(v_des).0 != n {
        return Err(Error::Contract(format!(
            "adjacency is {0}x{0} but the sequence has {n} positions",
            adjacency.len()
        )));
    }
    if let Some(i) = (0..n).find(|&i| adjacency.row(i).iter().all(|&v| v == 0)) {
        return Err(Error::Contract(format!("adjacency row {i} has no entries")));
    }
    let allowed: Vec<bool> = (0..n).flat_map(|i| adjacency.row(i).iter().map(|&v| v != 0)).collect();
    let scores = t.matmul_t(v_qk, false, v_qk, true);
    let p = t.masked_softmax(scores, Some(&allowed));
    let values = value.forward(t, v_des);
    let agg = t.matmul(p, values);
    Ok((p, t.relu(agg)))
}
