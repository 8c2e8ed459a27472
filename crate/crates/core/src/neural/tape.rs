use std::sync::Arc;

use super::params::{ParamId, ParamStore};
use super::tensor::{gemm, NeuralError, SparseMatrix, Tensor};

/// Guard added under the square root of the prediction norm in the cosine
/// loss so an all-zero prediction stays differentiable.
pub const COSINE_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Const,
    Param(ParamId),
    MatMul(Var, Var),
    AddRow(Var, Var),
    Add(Var, Var),
    Relu(Var),
    Spmm(Arc<SparseMatrix>, Var),
    OnePlusScale(Var, Var),
    Scale(Var, f64),
    MeanRows(Var),
    ConcatCols(Vec<Var>),
    SelectRow(Var, usize),
    GatherSum(Var, Vec<usize>),
    CosineDistance(Var, Arc<Vec<f64>>),
}

#[derive(Debug)]
struct Node {
    /// `None` for parameters, which are read from the store.
    value: Option<Tensor>,
    op: Op,
}

/// Records a forward computation for reverse-mode differentiation.
#[derive(Debug)]
pub struct Tape<'p> {
    params: &'p ParamStore,
    nodes: Vec<Node>,
}

fn mismatch(op: &'static str, a: &Tensor, b: &Tensor) -> NeuralError {
    NeuralError::ShapeMismatch {
        op,
        left: a.shape().to_vec(),
        right: b.shape().to_vec(),
    }
}

impl<'p> Tape<'p> {
    pub fn new(params: &'p ParamStore) -> Self {
        Tape {
            params,
            nodes: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        let node = &self.nodes[v.0];
        match (&node.value, &node.op) {
            (Some(t), _) => t,
            (None, Op::Param(id)) => self.params.get(*id),
            _ => unreachable!("only parameters lack a stored value"),
        }
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node { value: Some(value), op });
        Var(self.nodes.len() - 1)
    }

    pub fn constant(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Const)
    }

    pub fn param(&mut self, id: ParamId) -> Var {
        self.nodes.push(Node {
            value: None,
            op: Op::Param(id),
        });
        Var(self.nodes.len() - 1)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, NeuralError> {
        let (ta, tb) = (self.value(a), self.value(b));
        let out = super::tensor::matmul(ta, tb)?;
        Ok(self.push(out, Op::MatMul(a, b)))
    }

    /// Adds a 1 x d row to every row of `x`.
    pub fn add_row(&mut self, x: Var, b: Var) -> Result<Var, NeuralError> {
        let (tx, tb) = (self.value(x), self.value(b));
        if tb.rows() != 1 || tb.cols() != tx.cols() {
            return Err(mismatch("add_row", tx, tb));
        }
        let mut out = tx.clone();
        let d = tx.cols();
        for (i, v) in out.data_mut().iter_mut().enumerate() {
            *v += tb.data()[i % d];
        }
        Ok(self.push(out, Op::AddRow(x, b)))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, NeuralError> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() != tb.shape() {
            return Err(mismatch("add", ta, tb));
        }
        let mut out = ta.clone();
        out.add_scaled(tb, 1.0);
        Ok(self.push(out, Op::Add(a, b)))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let mut out = self.value(x).clone();
        out.data_mut().iter_mut().for_each(|v| *v = v.max(0.0));
        self.push(out, Op::Relu(x))
    }

    /// Sparse constant times dense variable.
    pub fn spmm(&mut self, a: Arc<SparseMatrix>, x: Var) -> Result<Var, NeuralError> {
        let tx = self.value(x);
        if a.n_cols() != tx.rows() {
            return Err(NeuralError::ShapeMismatch {
                op: "spmm",
                left: vec![a.n_rows(), a.n_cols()],
                right: tx.shape().to_vec(),
            });
        }
        let d = tx.cols();
        let mut out = Tensor::zeros(a.n_rows(), d);
        a.mul_dense_into(tx.data(), d, out.data_mut());
        Ok(self.push(out, Op::Spmm(a, x)))
    }

    /// `(1 + eps) * x` for a 1 x 1 `eps`.
    pub fn one_plus_scale(&mut self, x: Var, eps: Var) -> Result<Var, NeuralError> {
        let (tx, te) = (self.value(x), self.value(eps));
        if te.shape() != [1, 1] {
            return Err(mismatch("one_plus_scale", tx, te));
        }
        let s = 1.0 + te.data()[0];
        let mut out = tx.clone();
        out.data_mut().iter_mut().for_each(|v| *v *= s);
        Ok(self.push(out, Op::OnePlusScale(x, eps)))
    }

    pub fn scale(&mut self, x: Var, c: f64) -> Var {
        let mut out = self.value(x).clone();
        out.data_mut().iter_mut().for_each(|v| *v *= c);
        self.push(out, Op::Scale(x, c))
    }

    /// Column means, giving 1 x d. An empty input gives zeros.
    pub fn mean_rows(&mut self, x: Var) -> Var {
        let tx = self.value(x);
        let (n, d) = (tx.rows(), tx.cols());
        let mut out = Tensor::zeros(1, d);
        for i in 0..n {
            for (o, v) in out.data_mut().iter_mut().zip(tx.row(i)) {
                *o += v;
            }
        }
        if n > 0 {
            out.data_mut().iter_mut().for_each(|v| *v /= n as f64);
        }
        self.push(out, Op::MeanRows(x))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var, NeuralError> {
        let rows = self.value(parts[0]).rows();
        let mut cols = 0;
        for &p in parts {
            let t = self.value(p);
            if t.rows() != rows {
                return Err(mismatch("concat_cols", self.value(parts[0]), t));
            }
            cols += t.cols();
        }
        let mut out = Tensor::zeros(rows, cols);
        let mut offset = 0;
        for &p in parts {
            let t = self.value(p);
            let c = t.cols();
            for i in 0..rows {
                out.data_mut()[i * cols + offset..i * cols + offset + c].copy_from_slice(t.row(i));
            }
            offset += c;
        }
        Ok(self.push(out, Op::ConcatCols(parts.to_vec())))
    }

    pub fn select_row(&mut self, x: Var, i: usize) -> Var {
        let out = Tensor::row_vector(self.value(x).row(i).to_vec());
        self.push(out, Op::SelectRow(x, i))
    }

    /// Sum of the given rows of `w`: a linear map applied to a binary
    /// indicator vector without materializing it.
    pub fn gather_sum(&mut self, w: Var, rows: &[usize]) -> Var {
        let tw = self.value(w);
        let mut out = Tensor::zeros(1, tw.cols());
        for &r in rows {
            for (o, v) in out.data_mut().iter_mut().zip(tw.row(r)) {
                *o += v;
            }
        }
        self.push(out, Op::GatherSum(w, rows.to_vec()))
    }

    /// `1 - <p, t> / (sqrt(|p|^2 + guard) |t|)` for a 1 x m prediction.
    pub fn cosine_distance(&mut self, pred: Var, target: Arc<Vec<f64>>) -> Result<Var, NeuralError> {
        let tp = self.value(pred);
        if tp.rows() != 1 || tp.cols() != target.len() {
            return Err(NeuralError::ShapeMismatch {
                op: "cosine_distance",
                left: tp.shape().to_vec(),
                right: vec![1, target.len()],
            });
        }
        let (dot, np, nt) = cosine_parts(tp.data(), &target);
        let d = if nt > 0.0 { 1.0 - dot / (np * nt) } else { 1.0 };
        Ok(self.push(Tensor::scalar(d), Op::CosineDistance(pred, target)))
    }

    /// Gradients of a 1 x 1 `loss` for every parameter, in store order.
    pub fn backward(&self, loss: Var) -> Result<Vec<Tensor>, NeuralError> {
        let mut acc = self.params.zeros_like();
        self.backward_into(loss, 1.0, &mut acc)?;
        Ok(acc)
    }

    /// Adds `scale * d loss / d param` into `acc`.
    pub fn backward_into(&self, loss: Var, scale: f64, acc: &mut [Tensor]) -> Result<(), NeuralError> {
        let tl = self.value(loss);
        if tl.shape() != [1, 1] {
            return Err(mismatch("backward", tl, &Tensor::scalar(0.0)));
        }
        let mut grads: Vec<Option<Vec<f64>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(vec![scale]);
        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            let mut sink = Sink {
                tape: self,
                grads: &mut grads,
                acc,
                at: i,
            };
            match &node.op {
                Op::Const => {}
                Op::Param(id) => {
                    for (a, x) in acc_slot(sink.acc, *id).iter_mut().zip(&g) {
                        *a += x;
                    }
                }
                Op::MatMul(a, b) => {
                    let (ta, tb) = (self.value(*a), self.value(*b));
                    let (m, k, n) = (ta.rows(), ta.cols(), tb.cols());
                    // dA = G B^T, dB = A^T G
                    sink.with(*a, |da| {
                        gemm(m, n, k, &g, n as isize, 1, tb.data(), 1, n as isize, 1.0, da)
                    })?;
                    sink.with(*b, |db| {
                        gemm(k, m, n, ta.data(), 1, k as isize, &g, n as isize, 1, 1.0, db)
                    })?;
                }
                Op::AddRow(x, b) => {
                    let d = self.value(*b).cols();
                    sink.with(*x, |dx| add_into(dx, &g))?;
                    sink.with(*b, |db| {
                        for (k, v) in g.iter().enumerate() {
                            db[k % d] += v;
                        }
                    })?;
                }
                Op::Add(a, b) => {
                    sink.with(*a, |da| add_into(da, &g))?;
                    sink.with(*b, |db| add_into(db, &g))?;
                }
                Op::Relu(x) => {
                    let out = node.value.as_ref().unwrap();
                    sink.with(*x, |dx| {
                        for ((d, gv), o) in dx.iter_mut().zip(&g).zip(out.data()) {
                            if *o > 0.0 {
                                *d += gv;
                            }
                        }
                    })?;
                }
                Op::Spmm(a, x) => {
                    let d = self.value(*x).cols();
                    sink.with(*x, |dx| a.mul_t_dense_into(&g, d, dx))?;
                }
                Op::OnePlusScale(x, eps) => {
                    let tx = self.value(*x);
                    let s = 1.0 + self.value(*eps).data()[0];
                    sink.with(*x, |dx| {
                        for (d, gv) in dx.iter_mut().zip(&g) {
                            *d += s * gv;
                        }
                    })?;
                    let de: f64 = g.iter().zip(tx.data()).map(|(a, b)| a * b).sum();
                    sink.with(*eps, |d| d[0] += de)?;
                }
                Op::Scale(x, c) => {
                    sink.with(*x, |dx| {
                        for (d, gv) in dx.iter_mut().zip(&g) {
                            *d += c * gv;
                        }
                    })?;
                }
                Op::MeanRows(x) => {
                    let tx = self.value(*x);
                    let (n, d) = (tx.rows(), tx.cols());
                    if n > 0 {
                        let inv = 1.0 / n as f64;
                        sink.with(*x, |dx| {
                            for (k, v) in dx.iter_mut().enumerate() {
                                *v += g[k % d] * inv;
                            }
                        })?;
                    }
                }
                Op::ConcatCols(parts) => {
                    let total = node.value.as_ref().unwrap().cols();
                    let mut offset = 0;
                    for &p in parts {
                        let tp = self.value(p);
                        let (rows, c) = (tp.rows(), tp.cols());
                        sink.with(p, |dp| {
                            for r in 0..rows {
                                add_into(
                                    &mut dp[r * c..(r + 1) * c],
                                    &g[r * total + offset..r * total + offset + c],
                                );
                            }
                        })?;
                        offset += c;
                    }
                }
                Op::SelectRow(x, r) => {
                    let d = self.value(*x).cols();
                    sink.with(*x, |dx| add_into(&mut dx[r * d..(r + 1) * d], &g))?;
                }
                Op::GatherSum(w, rows) => {
                    let d = self.value(*w).cols();
                    sink.with(*w, |dw| {
                        for &r in rows {
                            add_into(&mut dw[r * d..(r + 1) * d], &g);
                        }
                    })?;
                }
                Op::CosineDistance(p, t) => {
                    let tp = self.value(*p);
                    let (dot, np, nt) = cosine_parts(tp.data(), t);
                    if nt > 0.0 {
                        let g0 = g[0];
                        sink.with(*p, |dp| {
                            for ((d, pi), ti) in dp.iter_mut().zip(tp.data()).zip(t.iter()) {
                                *d += g0 * (dot * pi / (np * np * np * nt) - ti / (np * nt));
                            }
                        })?;
                    }
                }
            }
        }
        Ok(())
    }
}

fn cosine_parts(p: &[f64], t: &[f64]) -> (f64, f64, f64) {
    let dot: f64 = p.iter().zip(t).map(|(a, b)| a * b).sum();
    let np = (p.iter().map(|x| x * x).sum::<f64>() + COSINE_GUARD).sqrt();
    let nt = t.iter().map(|x| x * x).sum::<f64>().sqrt();
    (dot, np, nt)
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

fn acc_slot(acc: &mut [Tensor], id: ParamId) -> &mut [f64] {
    acc[id.index()].data_mut()
}

/// Routes an input's gradient either into the parameter accumulator or into
/// the node's own buffer.
struct Sink<'a, 't> {
    tape: &'a Tape<'t>,
    grads: &'a mut [Option<Vec<f64>>],
    acc: &'a mut [Tensor],
    at: usize,
}

impl Sink<'_, '_> {
    fn with(&mut self, v: Var, f: impl FnOnce(&mut [f64])) -> Result<(), NeuralError> {
        if v.0 >= self.at {
            return Err(NeuralError::GraphCycle(self.at));
        }
        match self.tape.nodes[v.0].op {
            Op::Const => {}
            Op::Param(id) => f(acc_slot(self.acc, id)),
            _ => {
                let len = self.tape.value(v).data().len();
                f(self.grads[v.0].get_or_insert_with(|| vec![0.0; len]));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_derivative() {
        let mut store = ParamStore::default();
        let x = store.add("x", Tensor::scalar(3.0));
        let mut tape = Tape::new(&store);
        let xv = tape.param(x);
        let xv2 = tape.param(x);
        let f = tape.matmul(xv, xv2).unwrap();
        assert_eq!(tape.value(f).data(), &[9.0]);
        let g = tape.backward(f).unwrap();
        assert_eq!(g[0].data(), &[6.0]);
    }

    #[test]
    fn constant_loss_has_zero_gradient() {
        let mut store = ParamStore::default();
        let w = store.add("w", Tensor::from_vec(2, 2, vec![1., 2., 3., 4.]).unwrap());
        let mut tape = Tape::new(&store);
        let wv = tape.param(w);
        let zero = tape.scale(wv, 0.0);
        let m = tape.mean_rows(zero);
        let one = tape.constant(Tensor::from_vec(2, 1, vec![1.0, 1.0]).unwrap());
        let s = tape.matmul(m, one).unwrap();
        let g = tape.backward(s).unwrap();
        assert!(g[0].data().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn cosine_loss_value() {
        let store = ParamStore::default();
        let mut tape = Tape::new(&store);
        let p = tape.constant(Tensor::row_vector(vec![1.0, 1.0, 0.0]));
        let d = tape.cosine_distance(p, Arc::new(vec![1.0, 0.0, 0.0])).unwrap();
        assert!((tape.value(d).data()[0] - (1.0 - std::f64::consts::FRAC_1_SQRT_2)).abs() < 1e-9);
        let zero = tape.constant(Tensor::row_vector(vec![0.0; 3]));
        let d = tape.cosine_distance(zero, Arc::new(vec![1.0, 0.0, 0.0])).unwrap();
        assert_eq!(tape.value(d).data()[0], 1.0);
    }

    #[test]
    fn shape_errors() {
        let store = ParamStore::default();
        let mut tape = Tape::new(&store);
        let a = tape.constant(Tensor::zeros(2, 3));
        let b = tape.constant(Tensor::zeros(2, 3));
        assert!(matches!(tape.matmul(a, b), Err(NeuralError::ShapeMismatch { .. })));
        assert!(tape.backward(a).is_err());
    }
}
