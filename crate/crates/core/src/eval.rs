//! Split evaluation: teacher-forced PPL and accuracy, greedy Dist-n.

use serde::{Deserialize, Serialize};

use crate::autograd::Tape;
use crate::checkpoint::Checkpoint;
use crate::corpus::{encode_all, sequential_batches, Dialogue, EncodedExample, ParseMap, Vocabulary};
use crate::emotion::Emotion;
use crate::error::{Error, Result};
use crate::metrics::{distinct_n, emotion_accuracy, perplexity};
use crate::model::layers::Dropout;
use crate::model::{argmax, Model, Strategy};

const EVAL_BATCH: usize = 16;

/// Teacher-forced statistics over a split.
#[derive(Debug, Clone, PartialEq)]
pub struct Scores {
    pub nll_sum: f64,
    pub tokens: usize,
    pub predicted: Vec<usize>,
    pub gold: Vec<usize>,
}

impl Scores {
    pub fn perplexity(&self) -> Result<f64> {
        perplexity(self.nll_sum, self.tokens)
    }

    pub fn accuracy(&self) -> f64 {
        emotion_accuracy(&self.predicted, &self.gold)
    }
}

/// Runs every example through the model without dropout, in split order.
pub fn teacher_forced_scores(model: &Model, examples: &[EncodedExample]) -> Result<Scores> {
    let mut s = Scores {
        nll_sum: 0.0,
        tokens: 0,
        predicted: Vec::with_capacity(examples.len()),
        gold: Vec::with_capacity(examples.len()),
    };
    for batch in sequential_batches(examples, EVAL_BATCH) {
        let mut t = Tape::new(&model.params);
        let f = model.forward_batch(&mut t, &batch, &mut Dropout::off())?;
        s.nll_sum += t.scalar(f.gen_nll_sum);
        s.tokens += f.target_tokens;
        for (ex, vars) in batch.examples.iter().zip(&f.examples) {
            s.predicted.push(argmax(t.value(vars.p_e).data()));
            s.gold.push(ex.emotion_id);
        }
    }
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub split: String,
    pub n_examples: usize,
    pub ppl: f64,
    pub emotion_accuracy: f64,
    pub dist1: f64,
    pub dist2: f64,
    pub dist1_percent: f64,
    pub dist2_percent: f64,
    pub seed: u64,
    pub checkpoint: String,
    pub config_hash: String,
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

/// One greedy decode, ready for JSONL output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedResponse {
    pub id: String,
    pub gold_emotion: Emotion,
    pub pred_emotion: Emotion,
    pub response: String,
}

/// Encodes a split with the checkpoint's vocabularies.
pub fn encode_split(ckpt: &Checkpoint, dialogues: &[Dialogue], parses: &ParseMap) -> Result<Vec<EncodedExample>> {
    encode_all(dialogues, parses, &ckpt.vocab, &ckpt.relations)
}

fn words(vocab: &Vocabulary, ids: &[usize]) -> Vec<String> {
    ids.iter()
        .filter(|&&i| !Vocabulary::is_special(i) || i == Vocabulary::UNK)
        .map(|&i| vocab.token(i).unwrap_or("<unk>").to_string())
        .collect()
}

pub fn generate_responses(ckpt: &Checkpoint, examples: &[EncodedExample]) -> Result<Vec<GeneratedResponse>> {
    let max_len = ckpt.train_config.max_response_len;
    examples
        .iter()
        .map(|ex| {
            let inf = ckpt.model.infer(ex, max_len, Strategy::Greedy)?;
            Ok(GeneratedResponse {
                id: ex.id.clone(),
                gold_emotion: Emotion::from_id(ex.emotion_id).expect("encoded emotion id"),
                pred_emotion: Emotion::from_id(inf.emotion).expect("argmax over emotion classes"),
                response: words(&ckpt.vocab, &inf.response).join(" "),
            })
        })
        .collect()
}

/// Full evaluation of `dialogues` under a checkpoint.
pub fn evaluate(
    ckpt: &Checkpoint,
    checkpoint_path: &str,
    split: &str,
    dialogues: &[Dialogue],
    parses: &ParseMap,
) -> Result<EvalReport> {
    if dialogues.is_empty() {
        return Err(Error::Empty(format!("split {split:?} has no dialogues")));
    }
    let examples = encode_split(ckpt, dialogues, parses)?;
    let scores = teacher_forced_scores(&ckpt.model, &examples)?;
    let generated = generate_responses(ckpt, &examples)?;
    let responses: Vec<Vec<&str>> = generated
        .iter()
        .map(|g| g.response.split_whitespace().collect())
        .collect();
    let dist1 = distinct_n(&responses, 1);
    let dist2 = distinct_n(&responses, 2);
    Ok(EvalReport {
        split: split.to_string(),
        n_examples: examples.len(),
        ppl: scores.perplexity()?,
        emotion_accuracy: scores.accuracy(),
        dist1,
        dist2,
        dist1_percent: 100.0 * dist1,
        dist2_percent: 100.0 * dist2,
        seed: ckpt.train_config.seed,
        checkpoint: checkpoint_path.to_string(),
        config_hash: ckpt.train_config.content_hash(),
    })
}
