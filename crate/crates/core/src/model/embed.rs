use super::layers::sinusoidal_positions;
use super::Model;
use crate::autograd::{Tape, Var};
use crate::corpus::PaddedExample;
use crate::error::{Error, Result};

pub(crate) fn check_ids(ids: &[usize], size: usize, what: &'static str) -> Result<()> {
    match ids.iter().find(|&&i| i >= size) {
        Some(&index) => Err(Error::Index { what, index, size }),
        None => Ok(()),
    }
}

impl Model {
    /// Context word embeddings `E_c` and their sum with position and state
    /// embeddings.
    pub fn embed_context(&self, t: &mut Tape<'_>, ex: &PaddedExample) -> Result<(Var, Var)> {
        check_ids(&ex.context_ids, self.config.vocab_size, "word table")?;
        check_ids(&ex.state_ids, 3, "state table")?;
        let word = t.param(self.arch.word);
        let state = t.param(self.arch.state);
        let e_c = t.gather_rows(word, &ex.context_ids);
        let s = t.gather_rows(state, &ex.state_ids);
        let pos = t.constant(sinusoidal_positions(ex.context_len(), self.config.d));
        let sum = t.add(e_c, pos);
        let e_tilde = t.add(sum, s);
        Ok((e_c, e_tilde))
    }
}
