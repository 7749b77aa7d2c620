//! Central-difference gradient checking against the tape's analytic gradients.

use rand::seq::index::sample;
use rand::Rng;

use crate::autograd::{Tape, Var};
use crate::params::{Grads, ParamId, ParamStore};

/// Relative error with a floor on the denominator, so that gradients that
/// are zero up to rounding compare as equal.
///
/// A central difference at step 1e-5 on a loss near 10 cannot resolve
/// anything below about 2e-10 (one ulp over 2h), so the floor sits at 1e-5.
pub const DENOM_FLOOR: f64 = 1e-5;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let denom = analytic.abs().max(numeric.abs()).max(DENOM_FLOOR);
    (analytic - numeric).abs() / denom
}

#[derive(Debug, Clone)]
pub struct CheckedEntry {
    pub param: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, Default)]
pub struct GradCheckReport {
    pub entries: Vec<CheckedEntry>,
}

impl GradCheckReport {
    pub fn max_rel_error(&self) -> f64 {
        self.entries.iter().map(|e| e.rel_error).fold(0.0, f64::max)
    }

    pub fn worst(&self) -> Option<&CheckedEntry> {
        self.entries
            .iter()
            .max_by(|a, b| a.rel_error.total_cmp(&b.rel_error))
    }
}

/// Scalar-valued function of the parameters, built on a fresh tape.
pub trait Objective {
    fn eval<'p>(&self, tape: &mut Tape<'p>) -> Var;
}

impl<F> Objective for F
where
    F: for<'p> Fn(&mut Tape<'p>) -> Var,
{
    fn eval<'p>(&self, tape: &mut Tape<'p>) -> Var {
        self(tape)
    }
}

pub fn value_and_grads(params: &ParamStore, f: &impl Objective) -> (f64, Grads) {
    let mut tape = Tape::new(params);
    let loss = f.eval(&mut tape);
    (tape.scalar(loss), tape.backward(loss))
}

fn value(params: &ParamStore, f: &impl Objective) -> f64 {
    let mut tape = Tape::new(params);
    let loss = f.eval(&mut tape);
    tape.scalar(loss)
}

/// Compares analytic and central-difference derivatives at the given
/// `(parameter, flat index)` coordinates.
pub fn check_coordinates(
    params: &mut ParamStore,
    f: &impl Objective,
    coords: &[(ParamId, usize)],
    step: f64,
) -> GradCheckReport {
    let (_, grads) = value_and_grads(params, f);
    let mut report = GradCheckReport::default();
    for &(id, k) in coords {
        let analytic = grads.get(id).map_or(0.0, |g| g.data()[k]);
        let orig = params.get(id).data()[k];
        params.get_mut(id).data_mut()[k] = orig + step;
        let up = value(params, f);
        params.get_mut(id).data_mut()[k] = orig - step;
        let down = value(params, f);
        params.get_mut(id).data_mut()[k] = orig;
        let numeric = (up - down) / (2.0 * step);
        report.entries.push(CheckedEntry {
            param: params.name(id).to_string(),
            index: k,
            analytic,
            numeric,
            rel_error: relative_error(analytic, numeric),
        });
    }
    report
}

/// Draws `fraction` of the scalars of each listed parameter (at least
/// `min_per_param`) uniformly without replacement.
pub fn sample_coordinates(
    params: &ParamStore,
    ids: &[ParamId],
    fraction: f64,
    min_per_param: usize,
    rng: &mut impl Rng,
) -> Vec<(ParamId, usize)> {
    let mut out = Vec::new();
    for &id in ids {
        let n = params.get(id).len();
        let k = ((n as f64 * fraction).ceil() as usize).max(min_per_param).min(n);
        let mut picked = sample(rng, n, k).into_vec();
        picked.sort_unstable();
        out.extend(picked.into_iter().map(|i| (id, i)));
    }
    out
}
