//! Reverse-mode differentiation over [`Matrix`] values.
//!
//! A [`Tape`] records every operation of one forward pass. Parameters are
//! read in place from a borrowed [`ParamStore`]; [`Tape::backward`] walks the
//! record in reverse and returns gradients keyed by parameter.

use std::collections::HashMap;

use crate::params::{Grads, ParamId, ParamStore};
use crate::tensor::{gemm_acc, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

const LN_EPS: f64 = 1e-5;

#[derive(Debug)]
enum Op {
    Leaf,
    Param(ParamId),
    MatMul { a: Var, b: Var, ta: bool, tb: bool },
    Add(Var, Var),
    AddRow(Var, Var),
    Mul(Var, Var),
    MulCol(Var, Var),
    Scale(Var, f64),
    AddScalar(Var),
    Concat(Vec<Var>),
    SliceCols(Var, usize),
    GatherRows(Var, Vec<usize>),
    Relu(Var),
    Tanh(Var),
    Sigmoid(Var),
    Softmax(Var),
    LayerNorm { x: Var, gamma: Var, beta: Var, xhat: Matrix, inv_std: Vec<f64> },
    Transpose(Var),
    Log(Var),
    Pick(Var, Vec<(usize, usize)>),
    ScatterCols(Var, Vec<usize>),
    Sum(Var),
}

#[derive(Debug)]
struct Node {
    value: Option<Matrix>,
    op: Op,
    needs_grad: bool,
}

pub struct Tape<'p> {
    params: &'p ParamStore,
    nodes: Vec<Node>,
    param_vars: HashMap<ParamId, Var>,
}

impl<'p> Tape<'p> {
    pub fn new(params: &'p ParamStore) -> Self {
        Tape {
            params,
            nodes: Vec::new(),
            param_vars: HashMap::new(),
        }
    }

    pub fn params(&self) -> &'p ParamStore {
        self.params
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Matrix, op: Op, needs_grad: bool) -> Var {
        self.nodes.push(Node {
            value: Some(value),
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn ng(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    pub fn value(&self, v: Var) -> &Matrix {
        let n = &self.nodes[v.0];
        match (&n.value, &n.op) {
            (Some(m), _) => m,
            (None, Op::Param(id)) => self.params.get(*id),
            _ => unreachable!("node without value"),
        }
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        self.value(v).shape()
    }

    /// A constant input.
    pub fn constant(&mut self, m: Matrix) -> Var {
        self.push(m, Op::Leaf, false)
    }

    /// A trainable parameter; repeated calls return the same variable.
    pub fn param(&mut self, id: ParamId) -> Var {
        if let Some(&v) = self.param_vars.get(&id) {
            return v;
        }
        self.nodes.push(Node {
            value: None,
            op: Op::Param(id),
            needs_grad: true,
        });
        let v = Var(self.nodes.len() - 1);
        self.param_vars.insert(id, v);
        v
    }

    /// `op(a) * op(b)` with optional transposes.
    pub fn matmul_t(&mut self, a: Var, ta: bool, b: Var, tb: bool) -> Var {
        let (av, bv) = (self.value(a), self.value(b));
        let m = if ta { av.cols() } else { av.rows() };
        let n = if tb { bv.rows() } else { bv.cols() };
        let mut out = Matrix::zeros(m, n);
        gemm_acc(1.0, av, ta, bv, tb, &mut out);
        let ng = self.ng(a) || self.ng(b);
        self.push(out, Op::MatMul { a, b, ta, tb }, ng)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        self.matmul_t(a, false, b, false)
    }

    /// `x W + b` with `W` stored input-major and `b` a row vector.
    pub fn linear(&mut self, x: Var, w: Var, b: Var) -> Var {
        let xw = self.matmul(x, w);
        self.add_row(xw, b)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let mut out = self.value(a).clone();
        out.add_assign(self.value(b));
        let ng = self.ng(a) || self.ng(b);
        self.push(out, Op::Add(a, b), ng)
    }

    /// Adds the 1×n row `row` to every row of `a`.
    pub fn add_row(&mut self, a: Var, row: Var) -> Var {
        let r = self.value(row);
        assert_eq!(r.rows(), 1);
        assert_eq!(r.cols(), self.value(a).cols());
        let mut out = self.value(a).clone();
        for i in 0..out.rows() {
            for (x, y) in out.row_mut(i).iter_mut().zip(r.data()) {
                *x += y;
            }
        }
        let ng = self.ng(a) || self.ng(row);
        self.push(out, Op::AddRow(a, row), ng)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let (av, bv) = (self.value(a), self.value(b));
        assert_eq!(av.shape(), bv.shape());
        let data = av.data().iter().zip(bv.data()).map(|(x, y)| x * y).collect();
        let out = Matrix::from_vec(av.rows(), av.cols(), data);
        let ng = self.ng(a) || self.ng(b);
        self.push(out, Op::Mul(a, b), ng)
    }

    /// Scales row `i` of `a` by `col[i]`, where `col` is n×1.
    pub fn mul_col(&mut self, a: Var, col: Var) -> Var {
        let c = self.value(col);
        assert_eq!(c.cols(), 1);
        assert_eq!(c.rows(), self.value(a).rows());
        let mut out = self.value(a).clone();
        for i in 0..out.rows() {
            let s = c[(i, 0)];
            out.row_mut(i).iter_mut().for_each(|x| *x *= s);
        }
        let ng = self.ng(a) || self.ng(col);
        self.push(out, Op::MulCol(a, col), ng)
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        let out = self.value(a).map(|x| x * s);
        let ng = self.ng(a);
        self.push(out, Op::Scale(a, s), ng)
    }

    pub fn add_scalar(&mut self, a: Var, s: f64) -> Var {
        let out = self.value(a).map(|x| x + s);
        let ng = self.ng(a);
        self.push(out, Op::AddScalar(a), ng)
    }

    /// `1 - a`.
    pub fn one_minus(&mut self, a: Var) -> Var {
        let neg = self.scale(a, -1.0);
        self.add_scalar(neg, 1.0)
    }

    /// Column-wise concatenation.
    pub fn concat(&mut self, parts: &[Var]) -> Var {
        let rows = self.value(parts[0]).rows();
        let cols: usize = parts.iter().map(|&p| self.value(p).cols()).sum();
        let mut out = Matrix::zeros(rows, cols);
        let mut off = 0;
        for &p in parts {
            let v = self.value(p);
            assert_eq!(v.rows(), rows, "concat row mismatch");
            for i in 0..rows {
                out.row_mut(i)[off..off + v.cols()].copy_from_slice(v.row(i));
            }
            off += v.cols();
        }
        let ng = parts.iter().any(|&p| self.ng(p));
        self.push(out, Op::Concat(parts.to_vec()), ng)
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, len: usize) -> Var {
        let out = self.value(a).cols_slice(start, len);
        let ng = self.ng(a);
        self.push(out, Op::SliceCols(a, start), ng)
    }

    /// Rows of `table` selected by `ids`.
    pub fn gather_rows(&mut self, table: Var, ids: &[usize]) -> Var {
        let t = self.value(table);
        let mut out = Matrix::zeros(ids.len(), t.cols());
        for (r, &id) in ids.iter().enumerate() {
            out.row_mut(r).copy_from_slice(t.row(id));
        }
        let ng = self.ng(table);
        self.push(out, Op::GatherRows(table, ids.to_vec()), ng)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let out = self.value(a).map(|x| x.max(0.0));
        let ng = self.ng(a);
        self.push(out, Op::Relu(a), ng)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let out = self.value(a).map(f64::tanh);
        let ng = self.ng(a);
        self.push(out, Op::Tanh(a), ng)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let out = self.value(a).map(|x| 1.0 / (1.0 + (-x).exp()));
        let ng = self.ng(a);
        self.push(out, Op::Sigmoid(a), ng)
    }

    /// Row-wise softmax restricted to entries where `allowed` is true;
    /// disallowed entries come out as exact zeros. Each row's maximum allowed
    /// score is subtracted before exponentiation. Every row needs at least one
    /// allowed entry.
    pub fn masked_softmax(&mut self, a: Var, allowed: Option<&[bool]>) -> Var {
        let x = self.value(a);
        let (rows, cols) = x.shape();
        if let Some(m) = allowed {
            assert_eq!(m.len(), rows * cols, "mask shape mismatch");
        }
        let ok = |i: usize, j: usize| allowed.is_none_or(|m| m[i * cols + j]);
        let mut out = Matrix::zeros(rows, cols);
        for i in 0..rows {
            let row = x.row(i);
            let max = (0..cols)
                .filter(|&j| ok(i, j))
                .map(|j| row[j])
                .fold(f64::NEG_INFINITY, f64::max);
            assert!(max > f64::NEG_INFINITY, "softmax row {i} has no allowed entries");
            let o = out.row_mut(i);
            let mut z = 0.0;
            for j in 0..cols {
                if ok(i, j) {
                    o[j] = (row[j] - max).exp();
                    z += o[j];
                }
            }
            o.iter_mut().for_each(|v| *v /= z);
        }
        let ng = self.ng(a);
        self.push(out, Op::Softmax(a), ng)
    }

    pub fn softmax(&mut self, a: Var) -> Var {
        self.masked_softmax(a, None)
    }

    /// Per-row normalization with learned gain `gamma` and shift `beta` (1×n).
    pub fn layer_norm(&mut self, x: Var, gamma: Var, beta: Var) -> Var {
        let xv = self.value(x);
        let (rows, cols) = xv.shape();
        let g = self.value(gamma).data();
        let b = self.value(beta).data();
        let mut xhat = Matrix::zeros(rows, cols);
        let mut out = Matrix::zeros(rows, cols);
        let mut inv_std = Vec::with_capacity(rows);
        for i in 0..rows {
            let r = xv.row(i);
            let mean = r.iter().sum::<f64>() / cols as f64;
            let var = r.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / cols as f64;
            let is = 1.0 / (var + LN_EPS).sqrt();
            inv_std.push(is);
            for j in 0..cols {
                let h = (r[j] - mean) * is;
                xhat[(i, j)] = h;
                out[(i, j)] = g[j] * h + b[j];
            }
        }
        let ng = self.ng(x) || self.ng(gamma) || self.ng(beta);
        self.push(
            out,
            Op::LayerNorm {
                x,
                gamma,
                beta,
                xhat,
                inv_std,
            },
            ng,
        )
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let out = self.value(a).transpose();
        let ng = self.ng(a);
        self.push(out, Op::Transpose(a), ng)
    }

    pub fn ln(&mut self, a: Var) -> Var {
        let out = self.value(a).map(f64::ln);
        let ng = self.ng(a);
        self.push(out, Op::Log(a), ng)
    }

    /// Column vector of the entries at `cells`.
    pub fn pick(&mut self, a: Var, cells: &[(usize, usize)]) -> Var {
        let x = self.value(a);
        let data = cells.iter().map(|&(i, j)| x[(i, j)]).collect();
        let out = Matrix::from_vec(cells.len(), 1, data);
        let ng = self.ng(a);
        self.push(out, Op::Pick(a, cells.to_vec()), ng)
    }

    /// Accumulates column `l` of `a` into column `targets[l]` of a
    /// `rows × width` output.
    pub fn scatter_cols(&mut self, a: Var, targets: &[usize], width: usize) -> Var {
        let x = self.value(a);
        assert_eq!(x.cols(), targets.len());
        let mut out = Matrix::zeros(x.rows(), width);
        for i in 0..x.rows() {
            for (l, &c) in targets.iter().enumerate() {
                out[(i, c)] += x[(i, l)];
            }
        }
        let ng = self.ng(a);
        self.push(out, Op::ScatterCols(a, targets.to_vec()), ng)
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let out = Matrix::from_vec(1, 1, vec![self.value(a).sum()]);
        let ng = self.ng(a);
        self.push(out, Op::Sum(a), ng)
    }

    pub fn scalar(&self, v: Var) -> f64 {
        let m = self.value(v);
        assert_eq!(m.shape(), (1, 1), "not a scalar");
        m[(0, 0)]
    }

    /// Gradients of the 1×1 variable `loss` with respect to every parameter
    /// it depends on.
    pub fn backward(&self, loss: Var) -> Grads {
        assert_eq!(self.shape(loss), (1, 1), "backward needs a scalar");
        let mut grads: Vec<Option<Matrix>> = Vec::new();
        grads.resize_with(loss.0 + 1, || None);
        grads[loss.0] = Some(Matrix::filled(1, 1, 1.0));
        let mut out = Grads::new(self.params.len());

        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if !node.needs_grad {
                continue;
            }
            let Some(g) = grads[idx].take() else { continue };
            self.backprop_node(node, idx, g, &mut grads, &mut out);
        }
        out
    }

    fn backprop_node(
        &self,
        node: &Node,
        idx: usize,
        g: Matrix,
        grads: &mut [Option<Matrix>],
        out: &mut Grads,
    ) {
        // Accumulates into the gradient slot of `v`, creating it on demand.
        fn slot<'a>(grads: &'a mut [Option<Matrix>], v: Var, shape: (usize, usize)) -> &'a mut Matrix {
            grads[v.0].get_or_insert_with(|| Matrix::zeros(shape.0, shape.1))
        }
        let y = self.value(Var(idx));
        match &node.op {
            Op::Leaf => {}
            Op::Param(id) => out.accumulate(*id, g),
            Op::MatMul { a, b, ta, tb } => {
                let (av, bv) = (self.value(*a), self.value(*b));
                if self.ng(*a) {
                    let da = slot(grads, *a, av.shape());
                    if *ta {
                        gemm_acc(1.0, bv, *tb, &g, true, da);
                    } else {
                        gemm_acc(1.0, &g, false, bv, !*tb, da);
                    }
                }
                if self.ng(*b) {
                    let db = slot(grads, *b, bv.shape());
                    if *tb {
                        gemm_acc(1.0, &g, true, av, *ta, db);
                    } else {
                        gemm_acc(1.0, av, !*ta, &g, false, db);
                    }
                }
            }
            Op::Add(a, b) => {
                for v in [*a, *b] {
                    if self.ng(v) {
                        slot(grads, v, g.shape()).add_assign(&g);
                    }
                }
            }
            Op::AddRow(a, row) => {
                if self.ng(*a) {
                    slot(grads, *a, g.shape()).add_assign(&g);
                }
                if self.ng(*row) {
                    let dr = slot(grads, *row, (1, g.cols()));
                    for i in 0..g.rows() {
                        for (d, x) in dr.data_mut().iter_mut().zip(g.row(i)) {
                            *d += x;
                        }
                    }
                }
            }
            Op::Mul(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                if self.ng(*a) {
                    let da = slot(grads, *a, av.shape());
                    for ((d, gi), bi) in da.data_mut().iter_mut().zip(g.data()).zip(bv.data()) {
                        *d += gi * bi;
                    }
                }
                if self.ng(*b) {
                    let db = slot(grads, *b, bv.shape());
                    for ((d, gi), ai) in db.data_mut().iter_mut().zip(g.data()).zip(av.data()) {
                        *d += gi * ai;
                    }
                }
            }
            Op::MulCol(a, col) => {
                let (av, cv) = (self.value(*a), self.value(*col));
                if self.ng(*a) {
                    let da = slot(grads, *a, av.shape());
                    for i in 0..g.rows() {
                        let s = cv[(i, 0)];
                        for (d, gi) in da.row_mut(i).iter_mut().zip(g.row(i)) {
                            *d += gi * s;
                        }
                    }
                }
                if self.ng(*col) {
                    let dc = slot(grads, *col, cv.shape());
                    for i in 0..g.rows() {
                        dc[(i, 0)] += g.row(i).iter().zip(av.row(i)).map(|(x, y)| x * y).sum::<f64>();
                    }
                }
            }
            Op::Scale(a, s) => {
                if self.ng(*a) {
                    let da = slot(grads, *a, g.shape());
                    for (d, gi) in da.data_mut().iter_mut().zip(g.data()) {
                        *d += gi * s;
                    }
                }
            }
            Op::AddScalar(a) => {
                if self.ng(*a) {
                    slot(grads, *a, g.shape()).add_assign(&g);
                }
            }
            Op::Concat(parts) => {
                let mut off = 0;
                for &p in parts {
                    let w = self.value(p).cols();
                    if self.ng(p) {
                        let dp = slot(grads, p, (g.rows(), w));
                        for i in 0..g.rows() {
                            for (d, x) in dp.row_mut(i).iter_mut().zip(&g.row(i)[off..off + w]) {
                                *d += x;
                            }
                        }
                    }
                    off += w;
                }
            }
            Op::SliceCols(a, start) => {
                if self.ng(*a) {
                    let shape = self.value(*a).shape();
                    let da = slot(grads, *a, shape);
                    for i in 0..g.rows() {
                        for (d, x) in da.row_mut(i)[*start..*start + g.cols()].iter_mut().zip(g.row(i)) {
                            *d += x;
                        }
                    }
                }
            }
            Op::GatherRows(table, ids) => {
                if self.ng(*table) {
                    let shape = self.value(*table).shape();
                    let dt = slot(grads, *table, shape);
                    for (r, &id) in ids.iter().enumerate() {
                        for (d, x) in dt.row_mut(id).iter_mut().zip(g.row(r)) {
                            *d += x;
                        }
                    }
                }
            }
            Op::Relu(a) => self.unary(grads, *a, y, &g, |_, y| if y > 0.0 { 1.0 } else { 0.0 }),
            Op::Tanh(a) => self.unary(grads, *a, y, &g, |_, y| 1.0 - y * y),
            Op::Sigmoid(a) => self.unary(grads, *a, y, &g, |_, y| y * (1.0 - y)),
            Op::Log(a) => self.unary(grads, *a, y, &g, |x, _| 1.0 / x),
            Op::Softmax(a) => {
                if self.ng(*a) {
                    let da = slot(grads, *a, g.shape());
                    for i in 0..g.rows() {
                        let (yr, gr) = (y.row(i), g.row(i));
                        let dot: f64 = yr.iter().zip(gr).map(|(p, q)| p * q).sum();
                        for ((d, p), q) in da.row_mut(i).iter_mut().zip(yr).zip(gr) {
                            *d += p * (q - dot);
                        }
                    }
                }
            }
            Op::LayerNorm {
                x,
                gamma,
                beta,
                xhat,
                inv_std,
            } => {
                let (rows, cols) = g.shape();
                if self.ng(*gamma) {
                    let dg = slot(grads, *gamma, (1, cols));
                    for i in 0..rows {
                        for j in 0..cols {
                            dg[(0, j)] += g[(i, j)] * xhat[(i, j)];
                        }
                    }
                }
                if self.ng(*beta) {
                    let db = slot(grads, *beta, (1, cols));
                    for i in 0..rows {
                        for j in 0..cols {
                            db[(0, j)] += g[(i, j)];
                        }
                    }
                }
                if self.ng(*x) {
                    let gam = self.value(*gamma).data().to_vec();
                    let dx = slot(grads, *x, (rows, cols));
                    let n = cols as f64;
                    for i in 0..rows {
                        let dxh: Vec<f64> = (0..cols).map(|j| g[(i, j)] * gam[j]).collect();
                        let s1: f64 = dxh.iter().sum();
                        let s2: f64 = dxh.iter().zip(xhat.row(i)).map(|(a, b)| a * b).sum();
                        for j in 0..cols {
                            dx[(i, j)] += inv_std[i] / n * (n * dxh[j] - s1 - xhat[(i, j)] * s2);
                        }
                    }
                }
            }
            Op::Transpose(a) => {
                if self.ng(*a) {
                    slot(grads, *a, (g.cols(), g.rows())).add_assign(&g.transpose());
                }
            }
            Op::Pick(a, cells) => {
                if self.ng(*a) {
                    let shape = self.value(*a).shape();
                    let da = slot(grads, *a, shape);
                    for (k, &(i, j)) in cells.iter().enumerate() {
                        da[(i, j)] += g[(k, 0)];
                    }
                }
            }
            Op::ScatterCols(a, targets) => {
                if self.ng(*a) {
                    let shape = self.value(*a).shape();
                    let da = slot(grads, *a, shape);
                    for i in 0..shape.0 {
                        for (l, &c) in targets.iter().enumerate() {
                            da[(i, l)] += g[(i, c)];
                        }
                    }
                }
            }
            Op::Sum(a) => {
                if self.ng(*a) {
                    let s = g[(0, 0)];
                    let shape = self.value(*a).shape();
                    let da = slot(grads, *a, shape);
                    da.data_mut().iter_mut().for_each(|d| *d += s);
                }
            }
        }
    }

    /// Elementwise op with derivative `f(x, y)` at input `x`, output `y`.
    fn unary(&self, grads: &mut [Option<Matrix>], a: Var, y: &Matrix, g: &Matrix, f: impl Fn(f64, f64) -> f64) {
        if !self.ng(a) {
            return;
        }
        let xv = self.value(a);
        let da = grads[a.0].get_or_insert_with(|| Matrix::zeros(xv.rows(), xv.cols()));
        for (((d, gi), x), y) in da
            .data_mut()
            .iter_mut()
            .zip(g.data())
            .zip(xv.data())
            .zip(y.data())
        {
            *d += gi * f(*x, *y);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcheck::check_coordinates;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
        Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect())
    }

    fn all_coords(p: &ParamStore) -> Vec<(ParamId, usize)> {
        p.iter().flat_map(|(id, _, m)| (0..m.len()).map(move |k| (id, k))).collect()
    }

    fn check(p: &mut ParamStore, f: impl for<'a> Fn(&mut Tape<'a>) -> Var) {
        let coords = all_coords(p);
        let r = check_coordinates(p, &f, &coords, 1e-5);
        assert!(r.max_rel_error() < 1e-6, "{:?}", r.worst());
    }

    #[test]
    fn matmul_all_transposes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for (ta, tb) in [(false, false), (true, false), (false, true), (true, true)] {
            let mut p = ParamStore::new();
            let a = p.add("a", if ta { random(4, 3, &mut rng) } else { random(3, 4, &mut rng) });
            let b = p.add("b", if tb { random(2, 4, &mut rng) } else { random(4, 2, &mut rng) });
            let w = random(3, 2, &mut rng);
            check(&mut p, move |t| {
                let (a, b) = (t.param(a), t.param(b));
                let c = t.matmul_t(a, ta, b, tb);
                let w = t.constant(w.clone());
                let m = t.mul(c, w);
                t.sum(m)
            });
        }
    }

    #[test]
    fn elementwise_and_structural_ops() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut p = ParamStore::new();
        let x = p.add("x", random(3, 4, &mut rng));
        let r = p.add("r", random(1, 4, &mut rng));
        let c = p.add("c", random(3, 1, &mut rng));
        let w = random(3, 6, &mut rng);
        check(&mut p, move |t| {
            let (x, r, c) = (t.param(x), t.param(r), t.param(c));
            let a = t.add_row(x, r);
            let a = t.tanh(a);
            let b = t.sigmoid(x);
            let s = t.scale(b, 0.7);
            let s = t.one_minus(s);
            let m = t.mul_col(s, c);
            let cat = t.concat(&[a, m]);
            let left = t.slice_cols(cat, 1, 6);
            let left = t.relu(left);
            let right = t.slice_cols(cat, 2, 6);
            let sum = t.add(left, right);
            let tr = t.transpose(sum);
            let tr = t.transpose(tr);
            let w = t.constant(w.clone());
            let out = t.mul(tr, w);
            t.sum(out)
        });
    }

    #[test]
    fn masked_softmax_layer_norm_gather_log_pick() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut p = ParamStore::new();
        let x = p.add("x", random(3, 5, &mut rng));
        let g = p.add("g", random(1, 5, &mut rng));
        let b = p.add("b", random(1, 5, &mut rng));
        let table = p.add("table", random(6, 5, &mut rng));
        let mask: Vec<bool> = (0..15).map(|k| k % 3 != 1).collect();
        check(&mut p, move |t| {
            let (x, g, b, table) = (t.param(x), t.param(g), t.param(b), t.param(table));
            let e = t.gather_rows(table, &[4, 0, 4]);
            let h = t.add(x, e);
            let h = t.layer_norm(h, g, b);
            let sm = t.masked_softmax(h, Some(&mask));
            let sc = t.scatter_cols(sm, &[1, 0, 1, 3, 2], 4);
            let picked = t.pick(sc, &[(0, 0), (1, 2), (2, 3), (2, 1)]);
            let l = t.ln(picked);
            t.sum(l)
        });
    }

    #[test]
    fn masked_entries_are_exact_zero_and_rows_sum_to_one() {
        let p = ParamStore::new();
        let mut t = Tape::new(&p);
        let x = t.constant(Matrix::from_rows(&[vec![1000.0, 2.0, -5.0], vec![0.5, 0.5, 900.0]]));
        let mask = [true, false, true, true, true, false];
        let s = t.masked_softmax(x, Some(&mask));
        let v = t.value(s);
        assert_eq!(v[(0, 1)], 0.0);
        assert_eq!(v[(1, 2)], 0.0);
        for i in 0..2 {
            assert!((v.row(i).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn unreachable_params_get_no_gradient() {
        let mut p = ParamStore::new();
        let a = p.add("a", Matrix::filled(1, 1, 2.0));
        let b = p.add("b", Matrix::filled(1, 1, 3.0));
        let mut t = Tape::new(&p);
        let av = t.param(a);
        let _bv = t.param(b);
        let l = t.scale(av, 4.0);
        let g = t.backward(l);
        assert_eq!(g.get(a).unwrap()[(0, 0)], 4.0);
        assert!(g.get(b).is_none());
    }
}
