//! Seeded Adam training loop with periodic checkpoints.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::autograd::Tape;
use crate::checkpoint::Checkpoint;
use crate::config::TrainConfig;
use crate::corpus::{
    build_vocab, encode_all, make_batches, Batch, Dialogue, EncodedExample, ParseMap, PretrainedVectors, RelationSet,
    UposSet, Vocabulary,
};
use crate::error::{Error, Result};
use crate::model::layers::Dropout;
use crate::model::{Model, ModelConfig};
use crate::params::{Grads, ParamStore};
use crate::tensor::Matrix;

impl TrainConfig {
    pub fn model_config(&self, vocab_size: usize, rel_size: usize) -> ModelConfig {
        ModelConfig {
            d: self.d,
            d_s: self.d_s,
            d_pr: self.d_pr,
            heads: self.heads,
            layers: self.layers,
            ff_mult: self.ff_mult,
            dropout: self.dropout,
            memory_projection: self.memory_projection,
            vocab_size,
            pos_size: UposSet::len(),
            rel_size,
        }
    }
}

/// Encoded training split with the vocabularies built from it.
#[derive(Debug, Clone)]
pub struct TrainData {
    pub vocab: Vocabulary,
    pub relations: RelationSet,
    pub examples: Vec<EncodedExample>,
}

impl TrainData {
    pub fn prepare(config: &TrainConfig, dialogues: &[Dialogue], parses: &ParseMap) -> Result<Self> {
        if dialogues.is_empty() {
            return Err(Error::Empty("training corpus has no dialogues".into()));
        }
        let vocab = build_vocab(dialogues, config.min_freq);
        let relations = RelationSet::from_parses(parses);
        let examples = encode_all(dialogues, parses, &vocab, &relations)?;
        Ok(TrainData { vocab, relations, examples })
    }
}

/// Loss terms measured at one iteration, before that iteration's update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossRecord {
    pub iteration: usize,
    pub total: f64,
    pub gen: f64,
    pub ctx: f64,
    pub cor: f64,
}

/// Adam with bias correction. Parameters that received no gradient in a
/// step keep their moments and values.
#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    step: i32,
    m: Vec<Matrix>,
    v: Vec<Matrix>,
}

impl Adam {
    pub fn new(params: &ParamStore, lr: f64, beta1: f64, beta2: f64, eps: f64) -> Self {
        let zeros: Vec<Matrix> = params.iter().map(|(_, _, p)| Matrix::zeros(p.rows(), p.cols())).collect();
        Adam {
            lr,
            beta1,
            beta2,
            eps,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn update(&mut self, params: &mut ParamStore, grads: &Grads) {
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step);
        let c2 = 1.0 - self.beta2.powi(self.step);
        for (id, g) in grads.iter() {
            let i = id.index();
            let p = params.get_mut(id).data_mut();
            let m = self.m[i].data_mut();
            let v = self.v[i].data_mut();
            for (((p, m), v), &g) in p.iter_mut().zip(m.iter_mut()).zip(v.iter_mut()).zip(g.data()) {
                *m = self.beta1 * *m + (1.0 - self.beta1) * g;
                *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
                *p -= self.lr * (*m / c1) / ((*v / c2).sqrt() + self.eps);
            }
        }
    }
}

pub struct Trainer {
    pub config: TrainConfig,
    pub model: Model,
    pub data: TrainData,
    optimizer: Adam,
    dropout_rng: ChaCha8Rng,
    epoch: u64,
    pending: Vec<Batch>,
    iteration: usize,
}

impl Trainer {
    pub fn new(config: TrainConfig, data: TrainData, vectors: Option<&PretrainedVectors>) -> Result<Self> {
        config.validate()?;
        if data.examples.is_empty() {
            return Err(Error::Empty("training split has no examples".into()));
        }
        let mc = config.model_config(data.vocab.len(), data.relations.len());
        let model = Model::new(mc, config.seed, Some(&data.vocab), vectors)?;
        let optimizer = Adam::new(&model.params, config.learning_rate, config.beta1, config.beta2, config.adam_eps);
        Ok(Trainer {
            dropout_rng: ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed_d20f),
            config,
            model,
            data,
            optimizer,
            epoch: 0,
            pending: Vec::new(),
            iteration: 0,
        })
    }

    /// Iterations completed so far.
    pub fn iteration(&self) -> usize {
        self.iteration
    }

    fn next_batch(&mut self) -> Batch {
        if self.pending.is_empty() {
            let seed = self.config.seed.wrapping_add(self.epoch);
            self.pending = make_batches(&self.data.examples, self.config.batch_size, seed);
            self.pending.reverse();
            self.epoch += 1;
        }
        self.pending.pop().expect("non-empty split yields a batch")
    }

    /// One forward/backward pass and Adam update.
    pub fn step(&mut self) -> Result<LossRecord> {
        let batch = self.next_batch();
        let (record, mut grads) = {
            let mut t = Tape::new(&self.model.params);
            let mut drop = Dropout {
                rate: self.config.dropout,
                rng: Some(&mut self.dropout_rng),
            };
            let f = self.model.forward_batch(&mut t, &batch, &mut drop)?;
            let record = LossRecord {
                iteration: self.iteration,
                total: t.scalar(f.total),
                gen: t.scalar(f.l_gen),
                ctx: t.scalar(f.l_ctx),
                cor: t.scalar(f.l_cor),
            };
            let terms = [
                ("L_gen", record.gen),
                ("L_ctx", record.ctx),
                ("L_cor", record.cor),
                ("total", record.total),
            ];
            if let Some(&(term, value)) = terms.iter().find(|(_, v)| !v.is_finite()) {
                return Err(Error::NonFinite {
                    iteration: self.iteration,
                    term,
                    value,
                });
            }
            (record, t.backward(f.total))
        };
        if self.config.grad_clip > 0.0 {
            let norm = grads.norm();
            if norm > self.config.grad_clip {
                grads.scale(self.config.grad_clip / norm);
            }
        }
        self.optimizer.update(&mut self.model.params, &grads);
        self.iteration += 1;
        Ok(record)
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            train_config: self.config.clone(),
            vocab: self.data.vocab.clone(),
            relations: self.data.relations.clone(),
            model: self.model.clone(),
            iteration: self.iteration,
        }
    }
}

/// Whether the loop should keep going after an observed iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub losses: Vec<LossRecord>,
    pub checkpoints: Vec<PathBuf>,
    pub final_checkpoint: Checkpoint,
}

/// Runs up to `max_iterations` steps. With `out_dir`, writes
/// `ckpt-{n}.escm` every `checkpoint_interval` steps, `final.escm` at the
/// end and a `losses.tsv` log. The observer sees each record after its
/// update and may stop the run early.
pub fn train(
    config: TrainConfig,
    data: TrainData,
    vectors: Option<&PretrainedVectors>,
    out_dir: Option<&Path>,
    mut observer: impl FnMut(&LossRecord, &Trainer) -> Control,
) -> Result<TrainOutcome> {
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let cfg = dir.join("config.txt");
        fs::write(&cfg, config.to_text()).map_err(|e| Error::io(&cfg, e))?;
    }
    let mut trainer = Trainer::new(config, data, vectors)?;
    let mut losses = Vec::new();
    let mut checkpoints = Vec::new();
    let result = (|| -> Result<()> {
        while trainer.iteration() < trainer.config.max_iterations {
            let record = trainer.step()?;
            losses.push(record);
            let done = trainer.iteration();
            if let Some(dir) = out_dir {
                if done % trainer.config.checkpoint_interval == 0 && done < trainer.config.max_iterations {
                    let path = dir.join(format!("ckpt-{done}.escm"));
                    trainer.checkpoint().save(&path)?;
                    checkpoints.push(path);
                }
            }
            if observer(&record, &trainer) == Control::Stop {
                break;
            }
        }
        Ok(())
    })();
    if let Some(dir) = out_dir {
        write_losses(&dir.join("losses.tsv"), &losses)?;
    }
    result?;
    let final_checkpoint = trainer.checkpoint();
    if let Some(dir) = out_dir {
        let path = dir.join("final.escm");
        final_checkpoint.save(&path)?;
        checkpoints.push(path);
    }
    Ok(TrainOutcome {
        losses,
        checkpoints,
        final_checkpoint,
    })
}

pub fn format_losses(losses: &[LossRecord]) -> String {
    let mut s = String::from("iteration\ttotal\tgen\tctx\tcor\n");
    for r in losses {
        let _ = writeln!(s, "{}\t{}\t{}\t{}\t{}", r.iteration, r.total, r.gen, r.ctx, r.cor);
    }
    s
}

fn write_losses(path: &Path, losses: &[LossRecord]) -> Result<()> {
    fs::write(path, format_losses(losses)).map_err(|e| Error::io(path, e))
}
