//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits non-zero if any blocking criterion fails.

#[path = "../../core/tests/common/oracles.rs"]
mod oracles;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use escm_core::autograd::Tape;
use escm_core::checkpoint::Checkpoint;
use escm_core::config::TrainConfig;
use escm_core::corpus::{
    build_adjacency, build_vocab, encode_all, load_corpus, load_parses, parse_conllu, parse_corpus, sequential_batches,
    Adjacency, Batch, EmotionLexicon, RelationSet, Token,
};
use escm_core::eval::teacher_forced_scores;
use escm_core::gradcheck::{check_coordinates, sample_coordinates};
use escm_core::metrics::{distinct_n, perplexity};
use escm_core::miner::{extract_patterns, mine};
use escm_core::model::layers::{Dropout, Linear};
use escm_core::model::{dcgcn, tiny_config, Model};
use escm_core::params::ParamStore;
use escm_core::tensor::Matrix;
use escm_core::train::{Trainer, TrainData};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Tolerances and budgets.
const DCGCN_TOL: f64 = 1e-10;
const LOCALITY_TOL: f64 = 1e-12;
const PROB_TOL: f64 = 1e-6;
const GRAD_STEP: f64 = 1e-5;
const GRAD_TOL: f64 = 1e-4;
const GRAD_FRACTION: f64 = 0.05;
const PPL_TOL: f64 = 1e-9;
const OVERFIT_MAX_ITERS: usize = 2000;
const OVERFIT_PPL: f64 = 1.5;
const OVERFIT_CHECK_EVERY: usize = 10;
const DETERMINISM_ITERS: usize = 10;
const FAST_BUDGET: Duration = Duration::from_secs(10);
const GRAD_BUDGET: Duration = Duration::from_secs(120);
const OVERFIT_BUDGET: Duration = Duration::from_secs(300);

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn toy_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/toy")
}

fn uniform(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Matrix {
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.random_range(-scale..scale)).collect())
}

fn rows_of(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

/// Context adjacency of 1–2 random trees covering `l - 1` tokens after CLS.
fn random_adjacency(rng: &mut ChaCha8Rng, l: usize) -> Adjacency {
    let n = l - 1;
    let first = if n >= 2 && rng.random_bool(0.5) { rng.random_range(1..n) } else { n };
    let mut trees: Vec<Vec<Token>> = vec![oracles::random_tree(rng, first)];
    if first < n {
        trees.push(oracles::random_tree(rng, n - first));
    }
    let refs: Vec<&[Token]> = trees.iter().map(Vec::as_slice).collect();
    build_adjacency(&refs)
}

struct GraphInstance {
    params: ParamStore,
    value: Linear,
    v_qk: Matrix,
    v_des: Matrix,
    adj: Adjacency,
}

impl GraphInstance {
    fn random(rng: &mut ChaCha8Rng) -> Self {
        let l = rng.random_range(4..=8);
        let mut params = ParamStore::new();
        let value = Linear {
            w: params.add("value.w", uniform(rng, 42, 42, 0.3)),
            b: params.add("value.b", uniform(rng, 1, 42, 0.3)),
        };
        GraphInstance {
            value,
            v_qk: uniform(rng, l, 142, 0.4),
            v_des: uniform(rng, l, 42, 1.0),
            adj: random_adjacency(rng, l),
            params,
        }
    }

    fn run(&self, v_qk: &Matrix, v_des: &Matrix) -> (Matrix, Matrix) {
        let mut t = Tape::new(&self.params);
        let q = t.constant(v_qk.clone());
        let v = t.constant(v_des.clone());
        let (p, h) = dcgcn(&mut t, q, v, &self.adj, &self.value).expect("valid adjacency");
        (t.value(p).clone(), t.value(h).clone())
    }
}

fn criterion_1() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let g = GraphInstance::random(&mut rng);
        let (p, h) = g.run(&g.v_qk, &g.v_des);
        let l = g.adj.len();
        let adj: Vec<Vec<bool>> = (0..l).map(|i| (0..l).map(|j| g.adj.get(i, j)).collect()).collect();
        let (po, ho) = oracles::dcgcn_oracle(
            &rows_of(&g.v_qk),
            &rows_of(&g.v_des),
            &adj,
            &rows_of(g.params.get(g.value.w)),
            g.params.get(g.value.b).row(0),
        );
        for i in 0..l {
            for j in 0..l {
                worst = worst.max((p[(i, j)] - po[i][j]).abs());
            }
            for c in 0..42 {
                worst = worst.max((h[(i, c)] - ho[i][c]).abs());
            }
        }
    }
    let took = start.elapsed();
    ensure!(worst <= DCGCN_TOL, "max deviation {worst:e} > {DCGCN_TOL:e}");
    ensure!(took < FAST_BUDGET, "took {took:?}");
    Ok(format!("100 instances, max |Δ| {worst:.2e}, {:.2}s", took.as_secs_f64()))
}

fn criterion_2() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut compared = 0usize;
    let mut not_bitwise = 0usize;
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let g = GraphInstance::random(&mut rng);
        let l = g.adj.len();
        let (_, base) = g.run(&g.v_qk, &g.v_des);
        for j in 0..l {
            let mut q = g.v_qk.clone();
            let mut v = g.v_des.clone();
            q.row_mut(j).iter_mut().for_each(|x| *x += rng.random_range(-2.0..2.0));
            v.row_mut(j).iter_mut().for_each(|x| *x += rng.random_range(-2.0..2.0));
            let (_, h) = g.run(&q, &v);
            for i in (0..l).filter(|&i| !g.adj.get(i, j)) {
                compared += 1;
                if h.row(i) != base.row(i) {
                    not_bitwise += 1;
                }
                for (a, b) in h.row(i).iter().zip(base.row(i)) {
                    worst = worst.max((a - b).abs());
                }
            }
        }
    }
    let took = start.elapsed();
    ensure!(compared > 0, "no non-neighbour pairs sampled");
    ensure!(worst <= LOCALITY_TOL, "row changed by {worst:e}");
    ensure!(not_bitwise == 0, "{not_bitwise} of {compared} rows not bit-identical");
    ensure!(took < FAST_BUDGET, "took {took:?}");
    Ok(format!("{compared} non-neighbour rows bit-identical, {:.2}s", took.as_secs_f64()))
}

fn criterion_3() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (dialogues, parses) = oracles::random_corpus(&mut rng, 32);
    let vocab = build_vocab(&dialogues, 1);
    let relations = RelationSet::from_parses(&parses);
    let examples = encode_all(&dialogues, &parses, &vocab, &relations).map_err(|e| e.to_string())?;
    let cfg = TrainConfig::default().model_config(vocab.len(), relations.len());
    let model = Model::new(cfg, 3, Some(&vocab), None).map_err(|e| e.to_string())?;
    let mut rows = 0usize;
    let mut worst: f64 = 0.0;
    for batch in sequential_batches(&examples, 8) {
        let mut t = Tape::new(&model.params);
        let f = model.forward_batch(&mut t, &batch, &mut Dropout::off()).map_err(|e| e.to_string())?;
        for vars in &f.examples {
            let tr = vars.materialize(&t);
            let mut mats: Vec<&Matrix> = vec![
                &tr.p, &tr.p_s_ctx, &tr.p_s_cor, &tr.p_e_ctx, &tr.p_e_cor, &tr.p_vocab, &tr.p_copy, &tr.p_final,
            ];
            mats.extend(&tr.ctx_attention);
            mats.extend(&tr.des_attention);
            mats.extend(&tr.dec_self_attention);
            mats.extend(&tr.dec_cross_attention);
            for m in mats {
                for i in 0..m.rows() {
                    rows += 1;
                    worst = worst.max((m.row(i).iter().sum::<f64>() - 1.0).abs());
                }
            }
        }
    }
    ensure!(worst <= PROB_TOL, "a distribution sums to 1 ± {worst:e}");
    Ok(format!("{rows} rows over 32 examples, max |Σ−1| {worst:.2e}"))
}

fn toy_fixture() -> Result<(Vec<escm_core::corpus::Dialogue>, escm_core::corpus::ParseMap), String> {
    let dir = toy_dir();
    let d = load_corpus(dir.join("train.jsonl")).map_err(|e| e.to_string())?;
    let p = load_parses(dir.join("parses.conllu")).map_err(|e| e.to_string())?;
    Ok((d, p))
}

fn criterion_4() -> Check {
    let start = Instant::now();
    let (dialogues, parses) = toy_fixture()?;
    let vocab = build_vocab(&dialogues, 1);
    let relations = RelationSet::from_parses(&parses);
    let examples = encode_all(&dialogues[..2], &parses, &vocab, &relations).map_err(|e| e.to_string())?;
    let mut model = Model::new(tiny_config(vocab.len(), relations.len()), 4, Some(&vocab), None)
        .map_err(|e| e.to_string())?;
    let frozen = model.clone();
    let batch = Batch::new(&examples.iter().collect::<Vec<_>>());
    let objective = |t: &mut Tape<'_>| {
        frozen
            .forward_batch(t, &batch, &mut Dropout::off())
            .expect("forward")
            .total
    };
    let ids: Vec<_> = model.params.ids().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let coords = sample_coordinates(&model.params, &ids, GRAD_FRACTION, 1, &mut rng);
    let report = check_coordinates(&mut model.params, &objective, &coords, GRAD_STEP);
    let components: BTreeSet<&str> = report.entries.iter().map(|e| Model::component_of(&e.param)).collect();
    let worst = report.worst().cloned();
    let took = start.elapsed();
    let max = report.max_rel_error();
    ensure!(
        max < GRAD_TOL,
        "max relative error {max:e} at {:?}",
        worst.map(|w| (w.param, w.index, w.analytic, w.numeric))
    );
    ensure!(took < GRAD_BUDGET, "took {took:?}");
    Ok(format!(
        "{} coordinates across {} components, max rel err {max:.2e}, {:.1}s",
        report.entries.len(),
        components.len(),
        took.as_secs_f64()
    ))
}

fn criterion_5() -> Check {
    let (dialogues, parses) = toy_fixture()?;
    let vocab = build_vocab(&dialogues, 1);
    let relations = RelationSet::from_parses(&parses);
    let examples = encode_all(&dialogues, &parses, &vocab, &relations).map_err(|e| e.to_string())?;
    let model = Model::new(tiny_config(vocab.len(), relations.len()), 5, Some(&vocab), None)
        .map_err(|e| e.to_string())?;
    let batch = escm_core::corpus::make_batches(&examples, 4, 5).remove(0);
    let mut t = Tape::new(&model.params);
    let f = model.forward_batch(&mut t, &batch, &mut Dropout::off()).map_err(|e| e.to_string())?;
    let g_ctx = t.backward(f.l_ctx);
    let g_cor = t.backward(f.l_cor);
    let mut checked = 0usize;
    for (loss, grads, other) in [("L_ctx", &g_ctx, &model.arch.head_cor), ("L_cor", &g_cor, &model.arch.head_ctx)] {
        for id in other.param_ids() {
            checked += 1;
            if let Some(g) = grads.get(id) {
                ensure!(
                    g.data().iter().all(|&x| x == 0.0),
                    "{loss} reaches {}",
                    model.params.name(id)
                );
            }
        }
    }
    // The own head must receive signal, or the check is vacuous.
    let own = g_ctx.get(model.arch.head_ctx.param_ids()[0]).map_or(0.0, Matrix::max_abs);
    ensure!(own > 0.0, "L_ctx has no gradient on its own head");
    Ok(format!("{checked} private head tensors, all exactly zero"))
}

fn criterion_6() -> Check {
    let start = Instant::now();
    let (dialogues, parses) = toy_fixture()?;
    ensure!(dialogues.len() == 16, "toy corpus has {} dialogues", dialogues.len());
    let config = TrainConfig {
        max_iterations: OVERFIT_MAX_ITERS,
        ..TrainConfig::default()
    };
    let data = TrainData::prepare(&config, &dialogues, &parses).map_err(|e| e.to_string())?;
    let mut trainer = Trainer::new(config, data, None).map_err(|e| e.to_string())?;
    let mut last = (0.0, f64::INFINITY);
    while trainer.iteration() < OVERFIT_MAX_ITERS {
        trainer.step().map_err(|e| e.to_string())?;
        if trainer.iteration() % OVERFIT_CHECK_EVERY == 0 {
            let s = teacher_forced_scores(&trainer.model, &trainer.data.examples).map_err(|e| e.to_string())?;
            last = (s.accuracy(), s.perplexity().map_err(|e| e.to_string())?);
            if last.0 == 1.0 && last.1 < OVERFIT_PPL {
                break;
            }
        }
        ensure!(start.elapsed() < OVERFIT_BUDGET, "budget exhausted at iteration {}", trainer.iteration());
    }
    let took = start.elapsed();
    ensure!(
        last.0 == 1.0 && last.1 < OVERFIT_PPL,
        "after {} iterations: accuracy {} ppl {}",
        trainer.iteration(),
        last.0,
        last.1
    );
    Ok(format!(
        "accuracy 1.0, ppl {:.4} after {} iterations, {:.1}s",
        last.1,
        trainer.iteration(),
        took.as_secs_f64()
    ))
}

/// Five-word vocabulary: with the reserved tokens, V = 10.
const TEN_JSONL: &str = r#"{"id": "u0", "emotion": "afraid", "utterances": [{"speaker": "speaker", "text": "a b"}], "response": "c d e"}
{"id": "u1", "emotion": "afraid", "utterances": [{"speaker": "speaker", "text": "c"}], "response": "a"}
{"id": "u2", "emotion": "afraid", "utterances": [{"speaker": "speaker", "text": "d e"}], "response": "b b"}
{"id": "u3", "emotion": "angry", "utterances": [{"speaker": "speaker", "text": "e"}], "response": "e a"}
"#;

const TEN_CONLLU: &str = "# sent_id = u0/0
1\ta\tNOUN\t2\tnsubj
2\tb\tVERB\t0\troot

# sent_id = u1/0
1\tc\tNOUN\t0\troot

# sent_id = u2/0
1\td\tADJ\t2\tamod
2\te\tNOUN\t0\troot

# sent_id = u3/0
1\te\tNOUN\t0\troot
";

fn criterion_7() -> Check {
    let corpus: Vec<Vec<&str>> = ["a b a", "b c"].iter().map(|s| s.split_whitespace().collect()).collect();
    ensure!(distinct_n(&corpus, 1) == 0.6, "dist-1 = {}", distinct_n(&corpus, 1));
    ensure!(distinct_n(&corpus, 2) == 1.0, "dist-2 = {}", distinct_n(&corpus, 2));

    // A model whose output layer is zero and whose gate is saturated open
    // predicts the uniform distribution over the vocabulary.
    let dialogues = parse_corpus(TEN_JSONL, Path::new("ten.jsonl")).map_err(|e| e.to_string())?;
    let parses = parse_conllu(TEN_CONLLU, Path::new("ten.conllu")).map_err(|e| e.to_string())?;
    let vocab = build_vocab(&dialogues, 1);
    ensure!(vocab.len() == 10, "vocabulary has {} entries", vocab.len());
    let relations = RelationSet::from_parses(&parses);
    let examples = encode_all(&dialogues, &parses, &vocab, &relations).map_err(|e| e.to_string())?;
    let mut model = Model::new(tiny_config(10, relations.len()), 7, Some(&vocab), None).map_err(|e| e.to_string())?;
    let a = model.arch.clone();
    for id in [a.decoder.out.w, a.decoder.out.b] {
        model.params.get_mut(id).data_mut().fill(0.0);
    }
    model.params.get_mut(a.decoder.gate.b).data_mut()[0] = 1000.0;
    // Both heads always favour emotion 0 ("afraid"): three of four golds.
    for head in [&a.head_ctx, &a.head_cor] {
        model.params.get_mut(head.classify.w).data_mut().fill(0.0);
        let b = model.params.get_mut(head.classify.b).data_mut();
        b.fill(0.0);
        b[0] = 5.0;
    }
    let s = teacher_forced_scores(&model, &examples).map_err(|e| e.to_string())?;
    let ppl = perplexity(s.nll_sum, s.tokens).map_err(|e| e.to_string())?;
    ensure!((ppl - 10.0).abs() <= PPL_TOL, "uniform ppl {ppl}");
    ensure!(s.accuracy() == 0.75, "accuracy {}", s.accuracy());
    Ok(format!("dist-1 0.6, dist-2 1.0, uniform ppl {ppl:.12}, accuracy 0.75"))
}

fn criterion_8() -> Check {
    let dir = toy_dir();
    let dialogues = load_corpus(dir.join("mini.jsonl")).map_err(|e| e.to_string())?;
    ensure!(dialogues.len() == 20, "mini corpus has {} dialogues", dialogues.len());
    let parses = load_parses(dir.join("parses.conllu")).map_err(|e| e.to_string())?;
    let lexicon = EmotionLexicon::load(dir.join("lexicon.tsv")).map_err(|e| e.to_string())?;
    let words: BTreeSet<String> = parses
        .values()
        .flatten()
        .map(|t| t.surface.to_lowercase())
        .filter(|w| lexicon.is_emotion_word(w))
        .collect();
    let mut uses = 0;
    for responses in [false, true] {
        let got = mine(&dialogues, &parses, &lexicon, responses);
        let (global, per) = oracles::brute_force_mine(&dialogues, &parses, &words, responses);
        ensure!(got.counts.global == global, "global counts differ (responses: {responses})");
        ensure!(got.counts.per_emotion == per, "per-emotion counts differ (responses: {responses})");
        let split: u64 = got.counts.per_emotion.keys().map(|&e| got.counts.emotion_total(e)).sum();
        ensure!(split == got.counts.total(), "partition broken: {split} vs {}", got.counts.total());
        uses = uses.max(got.counts.total());
    }

    let key_set = |tokens: &[Token]| -> BTreeSet<String> {
        extract_patterns(tokens, &lexicon).iter().map(|p| p.key()).collect()
    };
    let joyful = [Token::new("joyful", "ADJ", None, "root")];
    let good_time = [
        Token::new("good", "ADJ", Some(1), "amod"),
        Token::new("time", "NOUN", None, "root"),
    ];
    let nice_it = [
        Token::new("it", "PRON", Some(2), "nsubj"),
        Token::new("was", "AUX", Some(2), "cop"),
        Token::new("nice", "ADJ", None, "root"),
    ];
    for (tokens, key) in [
        (&joyful[..], "ROOT-root-ADJ-b"),
        (&good_time[..], "NOUN-amod-ADJ-b"),
        (&nice_it[..], "ADJ-nsubj-PRON-f"),
    ] {
        ensure!(key_set(tokens).contains(key), "{key} not extracted");
    }
    Ok(format!("20 dialogues, {uses} uses match the oracle; 3 reference keys extracted"))
}

fn escm(args: &[&str]) -> Result<std::process::Output, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_escm"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("escm {} failed: {}", args[0], String::from_utf8_lossy(&out.stderr)));
    }
    Ok(out)
}

fn criterion_9() -> Check {
    let tmp = std::env::temp_dir().join(format!("escm-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&tmp).map_err(|e| e.to_string())?;
    let cfg = tmp.join("config.txt");
    std::fs::write(&cfg, format!("max_iterations = {DETERMINISM_ITERS}\ncheckpoint_interval = 1000\nseed = 9\nmax_response_len = 8\n"))
        .map_err(|e| e.to_string())?;
    let dir = toy_dir();
    let (corpus, parses) = (dir.join("train.jsonl"), dir.join("parses.conllu"));
    let mut logs = Vec::new();
    for run in ["a", "b"] {
        let out = tmp.join(run);
        escm(&[
            "train",
            "--config",
            cfg.to_str().unwrap(),
            "--corpus",
            corpus.to_str().unwrap(),
            "--parses",
            parses.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ])?;
        logs.push(std::fs::read_to_string(out.join("losses.tsv")).map_err(|e| e.to_string())?);
    }
    ensure!(logs[0].lines().count() == DETERMINISM_ITERS + 1, "loss log has {} lines", logs[0].lines().count());
    ensure!(logs[0] == logs[1], "loss logs differ");

    let ckpt = tmp.join("a/final.escm");
    ensure!(Checkpoint::load(&ckpt).is_ok(), "final checkpoint unreadable");
    let eval = || {
        escm(&[
            "evaluate",
            "--checkpoint",
            ckpt.to_str().unwrap(),
            "--corpus",
            corpus.to_str().unwrap(),
            "--parses",
            parses.to_str().unwrap(),
            "--split",
            "train",
        ])
        .map(|o| o.stdout)
    };
    let (r1, r2) = (eval()?, eval()?);
    let _ = std::fs::remove_dir_all(&tmp);
    ensure!(!r1.is_empty() && r1 == r2, "evaluate output differs between runs");
    Ok(format!("{DETERMINISM_ITERS} identical loss rows; evaluate byte-identical ({} bytes)", r1.len()))
}

/// Runs only when `ESCM_FULL_DATA` names a directory with `train.jsonl`,
/// `train.conllu`, `test.jsonl`, `test.conllu` and `vectors.txt`.
fn criterion_10() -> Option<Check> {
    let root = PathBuf::from(std::env::var_os("ESCM_FULL_DATA")?);
    let p = |f: &str| root.join(f).to_string_lossy().into_owned();
    let out = std::env::temp_dir().join("escm-full-run");
    let run = || -> Check {
        escm(&[
            "train",
            "--corpus",
            &p("train.jsonl"),
            "--parses",
            &p("train.conllu"),
            "--vectors",
            &p("vectors.txt"),
            "--out",
            out.to_str().unwrap(),
        ])?;
        let report = escm(&[
            "evaluate",
            "--checkpoint",
            out.join("final.escm").to_str().unwrap(),
            "--corpus",
            &p("test.jsonl"),
            "--parses",
            &p("test.conllu"),
        ])?;
        Ok(String::from_utf8_lossy(&report.stdout).split_whitespace().collect::<Vec<_>>().join(" "))
    };
    Some(run())
}

fn run(n: usize, name: &str, f: impl FnOnce() -> Check) -> bool {
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into()))
    });
    match outcome {
        Ok(detail) => {
            println!("criterion {n:>2} {name}: PASS ({detail})");
            true
        }
        Err(why) => {
            println!("criterion {n:>2} {name}: FAIL ({why})");
            false
        }
    }
}

fn main() {
    let filter: Option<usize> = std::env::args().nth(1).and_then(|a| a.parse().ok());
    let wanted = |n: usize| filter.is_none_or(|f| f == n);
    let criteria: [(usize, &str, fn() -> Check); 9] = [
        (1, "dcgcn oracle", criterion_1),
        (2, "locality", criterion_2),
        (3, "probability invariants", criterion_3),
        (4, "gradient check", criterion_4),
        (5, "loss-head separation", criterion_5),
        (6, "overfit smoke test", criterion_6),
        (7, "metric oracles", criterion_7),
        (8, "miner oracle", criterion_8),
        (9, "determinism", criterion_9),
    ];
    let mut failed = 0;
    for (n, name, f) in criteria {
        if wanted(n) && !run(n, name, f) {
            failed += 1;
        }
    }
    if wanted(10) {
        match criterion_10() {
            Some(check) => {
                // Non-blocking: reported, never counted as a failure.
                run(10, "full-scale harness (non-blocking)", || check);
            }
            None => println!("criterion 10 full-scale harness (non-blocking): NOT RUN (set ESCM_FULL_DATA)"),
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all blocking acceptance criteria passed");
}
