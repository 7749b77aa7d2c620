//! Training configuration in a flat `key = value` text format.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha1::{Digest, Sha1};

use crate::emotion::NUM_EMOTIONS;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub d: usize,
    pub d_s: usize,
    pub d_e: usize,
    pub d_pr: usize,
    pub heads: usize,
    pub layers: usize,
    pub ff_mult: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub dropout: f64,
    /// Global gradient-norm bound; 0 disables clipping.
    pub grad_clip: f64,
    pub seed: u64,
    pub max_iterations: usize,
    pub checkpoint_interval: usize,
    pub memory_projection: bool,
    pub min_freq: usize,
    pub max_response_len: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            d: 300,
            d_s: 10,
            d_e: NUM_EMOTIONS,
            d_pr: 50,
            heads: 2,
            layers: 1,
            ff_mult: 4,
            batch_size: 16,
            learning_rate: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            dropout: 0.1,
            grad_clip: 0.0,
            seed: 0,
            max_iterations: 13500,
            checkpoint_interval: 1000,
            memory_projection: true,
            min_freq: 1,
            max_response_len: 30,
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, v: &str, line: usize) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Validation(format!("config line {line}: invalid value {v:?} for {key}")))
}

fn parse_bool(key: &str, v: &str, line: usize) -> Result<bool> {
    match v {
        "true" | "on" | "1" => Ok(true),
        "false" | "off" | "0" => Ok(false),
        _ => Err(Error::Validation(format!("config line {line}: invalid value {v:?} for {key}"))),
    }
}

impl TrainConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Parses `key = value` lines over the defaults. Blank lines and `#`
    /// comments are ignored; unknown keys are errors.
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = TrainConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let l = raw.split('#').next().unwrap_or("").trim();
            if l.is_empty() {
                continue;
            }
            let (k, v) = l
                .split_once('=')
                .ok_or_else(|| Error::Validation(format!("config line {line}: expected key=value")))?;
            let (k, v) = (k.trim(), v.trim());
            match k {
                "d" => c.d = parse_value(k, v, line)?,
                "d_s" => c.d_s = parse_value(k, v, line)?,
                "d_e" => c.d_e = parse_value(k, v, line)?,
                "d_pr" => c.d_pr = parse_value(k, v, line)?,
                "heads" => c.heads = parse_value(k, v, line)?,
                "layers" => c.layers = parse_value(k, v, line)?,
                "ff_mult" => c.ff_mult = parse_value(k, v, line)?,
                "batch_size" => c.batch_size = parse_value(k, v, line)?,
                "learning_rate" => c.learning_rate = parse_value(k, v, line)?,
                "beta1" => c.beta1 = parse_value(k, v, line)?,
                "beta2" => c.beta2 = parse_value(k, v, line)?,
                "adam_eps" => c.adam_eps = parse_value(k, v, line)?,
                "dropout" => c.dropout = parse_value(k, v, line)?,
                "grad_clip" => c.grad_clip = parse_value(k, v, line)?,
                "seed" => c.seed = parse_value(k, v, line)?,
                "max_iterations" => c.max_iterations = parse_value(k, v, line)?,
                "checkpoint_interval" => c.checkpoint_interval = parse_value(k, v, line)?,
                "memory_projection" => c.memory_projection = parse_bool(k, v, line)?,
                "min_freq" => c.min_freq = parse_value(k, v, line)?,
                "max_response_len" => c.max_response_len = parse_value(k, v, line)?,
                other => {
                    return Err(Error::Validation(format!("config line {line}: unknown key {other:?}")))
                }
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_e != NUM_EMOTIONS {
            return Err(Error::Validation(format!(
                "d_e is the number of emotion categories and must be {NUM_EMOTIONS}"
            )));
        }
        let counts = [
            ("d", self.d),
            ("d_s", self.d_s),
            ("d_pr", self.d_pr),
            ("heads", self.heads),
            ("layers", self.layers),
            ("ff_mult", self.ff_mult),
            ("batch_size", self.batch_size),
            ("max_iterations", self.max_iterations),
            ("checkpoint_interval", self.checkpoint_interval),
            ("min_freq", self.min_freq),
            ("max_response_len", self.max_response_len),
        ];
        for (k, v) in counts {
            if v == 0 {
                return Err(Error::Validation(format!("{k} must be positive")));
            }
        }
        if !(self.learning_rate > 0.0) || !(self.adam_eps > 0.0) {
            return Err(Error::Validation("learning_rate and adam_eps must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::Validation("Adam betas must lie in [0, 1)".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) || self.grad_clip < 0.0 {
            return Err(Error::Validation("dropout must lie in [0, 1) and grad_clip be non-negative".into()));
        }
        Ok(())
    }

    /// Canonical text form: every key in a fixed order.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let c = self;
        let _ = writeln!(s, "d = {}", c.d);
        let _ = writeln!(s, "d_s = {}", c.d_s);
        let _ = writeln!(s, "d_e = {}", c.d_e);
        let _ = writeln!(s, "d_pr = {}", c.d_pr);
        let _ = writeln!(s, "heads = {}", c.heads);
        let _ = writeln!(s, "layers = {}", c.layers);
        let _ = writeln!(s, "ff_mult = {}", c.ff_mult);
        let _ = writeln!(s, "batch_size = {}", c.batch_size);
        let _ = writeln!(s, "learning_rate = {:e}", c.learning_rate);
        let _ = writeln!(s, "beta1 = {}", c.beta1);
        let _ = writeln!(s, "beta2 = {}", c.beta2);
        let _ = writeln!(s, "adam_eps = {:e}", c.adam_eps);
        let _ = writeln!(s, "dropout = {}", c.dropout);
        let _ = writeln!(s, "grad_clip = {}", c.grad_clip);
        let _ = writeln!(s, "seed = {}", c.seed);
        let _ = writeln!(s, "max_iterations = {}", c.max_iterations);
        let _ = writeln!(s, "checkpoint_interval = {}", c.checkpoint_interval);
        let _ = writeln!(s, "memory_projection = {}", if c.memory_projection { "on" } else { "off" });
        let _ = writeln!(s, "min_freq = {}", c.min_freq);
        let _ = writeln!(s, "max_response_len = {}", c.max_response_len);
        s
    }

    /// Git blob hash (SHA-1 over `blob <len>\0<content>`) of the canonical text.
    pub fn content_hash(&self) -> String {
        git_blob_hash(&self.to_text())
    }
}

fn git_blob_hash(text: &str) -> String {
    let mut h = Sha1::new();
    h.update(format!("blob {}\0", text.len()).as_bytes());
    h.update(text.as_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}
