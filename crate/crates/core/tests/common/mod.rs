#![allow(dead_code)]

pub mod oracles;

use std::path::{Path, PathBuf};

use escm_core::autograd::Tape;
use escm_core::corpus::{
    build_vocab, encode_all, load_corpus, load_parses, parse_conllu, parse_corpus, Batch, Dialogue, EncodedExample,
    ParseMap, RelationSet, Vocabulary,
};
use escm_core::model::layers::Dropout;
use escm_core::model::{ForwardTrace, Model, ModelConfig};

pub fn toy_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/toy")
}

pub struct Fixture {
    pub dialogues: Vec<Dialogue>,
    pub parses: ParseMap,
    pub vocab: Vocabulary,
    pub relations: RelationSet,
    pub examples: Vec<EncodedExample>,
}

impl Fixture {
    pub fn build(dialogues: Vec<Dialogue>, parses: ParseMap) -> Self {
        let vocab = build_vocab(&dialogues, 1);
        let relations = RelationSet::from_parses(&parses);
        let examples = encode_all(&dialogues, &parses, &vocab, &relations).unwrap();
        Fixture {
            dialogues,
            parses,
            vocab,
            relations,
            examples,
        }
    }

    pub fn toy(file: &str) -> Self {
        let dir = toy_dir();
        Self::build(
            load_corpus(dir.join(file)).unwrap(),
            load_parses(dir.join("parses.conllu")).unwrap(),
        )
    }

    pub fn from_text(jsonl: &str, conllu: &str) -> Self {
        Self::build(
            parse_corpus(jsonl, Path::new("inline.jsonl")).unwrap(),
            parse_conllu(conllu, Path::new("inline.conllu")).unwrap(),
        )
    }

    /// Paper-width configuration sized to this fixture's vocabularies.
    pub fn full_config(&self) -> ModelConfig {
        escm_core::config::TrainConfig::default().model_config(self.vocab.len(), self.relations.len())
    }

    pub fn tiny_config(&self) -> ModelConfig {
        escm_core::model::tiny_config(self.vocab.len(), self.relations.len())
    }
}

/// Deterministic forward traces of `examples` batched together.
pub fn traces(model: &Model, examples: &[&EncodedExample]) -> Vec<ForwardTrace> {
    let batch = Batch::new(examples);
    let mut t = Tape::new(&model.params);
    let f = model.forward_batch(&mut t, &batch, &mut Dropout::off()).unwrap();
    f.examples.iter().map(|e| e.materialize(&t)).collect()
}

pub fn row_sums(m: &escm_core::tensor::Matrix) -> Vec<f64> {
    (0..m.rows()).map(|i| m.row(i).iter().sum()).collect()
}

/// One speaker utterance "dogs like dogs" with a regular tree.
pub const REPEAT_JSONL: &str = r#"{"id": "r", "emotion": "content", "utterances": [{"speaker": "speaker", "text": "dogs like dogs"}], "response": "me too"}
{"id": "s", "emotion": "sad", "utterances": [{"speaker": "speaker", "text": "i lost my dog"}, {"speaker": "listener", "text": "so sorry"}], "response": "thanks"}
"#;

pub const REPEAT_CONLLU: &str = "# sent_id = r/0
1\tdogs\tNOUN\t2\tnsubj
2\tlike\tVERB\t0\troot
3\tdogs\tNOUN\t2\tobj

# sent_id = s/0
1\ti\tPRON\t2\tnsubj
2\tlost\tVERB\t0\troot
3\tmy\tPRON\t4\tposs
4\tdog\tNOUN\t2\tobj

# sent_id = s/1
1\tso\tADV\t2\tadvmod
2\tsorry\tADJ\t0\troot
";
