//! Reverse-mode differentiation over the model's operation set.
//!
//! A [`Tape`] records a forward computation as a flat list of nodes, each
//! holding its value and the operation that produced it. [`Tape::backward`]
//! walks the list in reverse from a scalar loss node and accumulates
//! gradients for every node on a differentiable path. Leaves registered
//! with [`Tape::param`] receive gradients; [`Tape::constant`] leaves do not,
//! and subgraphs that only depend on constants skip gradient bookkeeping
//! entirely, which is what makes inference passes cheap.
//!
//! Gradients accumulate additively, so a parameter used several times ends
//! up with the sum of all path contributions.

use crate::tensor::{leaky_relu, log_sigmoid, sigmoid, Tensor};

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct NodeRef(usize);

#[derive(Debug)]
enum Op {
    Leaf,
    Matmul(NodeRef, NodeRef),
    Hadamard(NodeRef, NodeRef),
    Add(NodeRef, NodeRef),
    Sub(NodeRef, NodeRef),
    Scale(NodeRef, f64),
    LeakyRelu(NodeRef, f64),
    SoftmaxRows(NodeRef),
    LogSigmoid(NodeRef),
    Sum(NodeRef),
    ConcatCols(Vec<NodeRef>),
    RowAsCol(NodeRef, usize),
}

struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

/// Recorded forward computation.
pub struct Tape {
    nodes: Vec<Node>,
    backward_done: bool,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape {
            nodes: Vec::new(),
            backward_done: false,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Registers a trainable leaf.
    pub fn param(&mut self, value: Tensor) -> NodeRef {
        self.push(value, Op::Leaf, true)
    }

    /// Registers a non-trainable leaf (inputs, frozen parameters).
    pub fn constant(&mut self, value: Tensor) -> NodeRef {
        self.push(value, Op::Leaf, false)
    }

    pub fn value(&self, node: NodeRef) -> &Tensor {
        &self.nodes[node.0].value
    }

    /// Convenience for `1x1` nodes.
    pub fn scalar_value(&self, node: NodeRef) -> f64 {
        let t = self.value(node);
        assert_eq!(t.shape(), (1, 1), "scalar_value on non-scalar node");
        t.at(0, 0)
    }

    fn push(&mut self, value: Tensor, op: Op, requires_grad: bool) -> NodeRef {
        debug_assert!(value.all_finite(), "non-finite tensor entering tape: {op:?}");
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        NodeRef(self.nodes.len() - 1)
    }

    fn rg(&self, node: NodeRef) -> bool {
        self.nodes[node.0].requires_grad
    }

    pub fn matmul(&mut self, a: NodeRef, b: NodeRef) -> NodeRef {
        let value = self.value(a).matmul(self.value(b));
        let rg = self.rg(a) || self.rg(b);
        self.push(value, Op::Matmul(a, b), rg)
    }

    pub fn hadamard(&mut self, a: NodeRef, b: NodeRef) -> NodeRef {
        let value = self.value(a).hadamard(self.value(b));
        let rg = self.rg(a) || self.rg(b);
        self.push(value, Op::Hadamard(a, b), rg)
    }

    pub fn add(&mut self, a: NodeRef, b: NodeRef) -> NodeRef {
        let value = self.value(a).add(self.value(b));
        let rg = self.rg(a) || self.rg(b);
        self.push(value, Op::Add(a, b), rg)
    }

    pub fn sub(&mut self, a: NodeRef, b: NodeRef) -> NodeRef {
        let value = self.value(a).sub(self.value(b));
        let rg = self.rg(a) || self.rg(b);
        self.push(value, Op::Sub(a, b), rg)
    }

    pub fn scale(&mut self, a: NodeRef, c: f64) -> NodeRef {
        let value = self.value(a).scale(c);
        let rg = self.rg(a);
        self.push(value, Op::Scale(a, c), rg)
    }

    /// Elementwise LeakyReLU. `slope` must lie in `(0, 1)`.
    pub fn leaky_relu(&mut self, a: NodeRef, slope: f64) -> NodeRef {
        assert!(
            slope > 0.0 && slope < 1.0,
            "leaky_relu slope must be in (0,1), got {slope}"
        );
        let value = self.value(a).map(|v| leaky_relu(v, slope));
        let rg = self.rg(a);
        self.push(value, Op::LeakyRelu(a, slope), rg)
    }

    /// Softmax over each row, computed with max subtraction.
    pub fn softmax_rows(&mut self, a: NodeRef) -> NodeRef {
        let x = self.value(a);
        let (rows, cols) = x.shape();
        let mut out = Tensor::zeros(rows, cols);
        for r in 0..rows {
            let row = x.row_slice(r);
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut denom = 0.0;
            for c in 0..cols {
                let e = (row[c] - max).exp();
                out.set(r, c, e);
                denom += e;
            }
            for c in 0..cols {
                let v = out.at(r, c) / denom;
                out.set(r, c, v);
            }
        }
        let rg = self.rg(a);
        self.push(out, Op::SoftmaxRows(a), rg)
    }

    /// Elementwise `ln(sigmoid(x))`, stable for large magnitudes.
    pub fn log_sigmoid(&mut self, a: NodeRef) -> NodeRef {
        let value = self.value(a).map(log_sigmoid);
        let rg = self.rg(a);
        self.push(value, Op::LogSigmoid(a), rg)
    }

    /// Sum of all entries as a `1x1` node.
    pub fn sum(&mut self, a: NodeRef) -> NodeRef {
        let value = Tensor::from_vec(1, 1, vec![self.value(a).sum()]);
        let rg = self.rg(a);
        self.push(value, Op::Sum(a), rg)
    }

    /// Inner product of two identically shaped nodes.
    pub fn dot(&mut self, a: NodeRef, b: NodeRef) -> NodeRef {
        let h = self.hadamard(a, b);
        self.sum(h)
    }

    /// Stacks column vectors `(d x 1)` into a `(d x n)` matrix.
    pub fn concat_cols(&mut self, cols: &[NodeRef]) -> NodeRef {
        assert!(!cols.is_empty(), "concat_cols needs at least one column");
        let d = self.value(cols[0]).rows();
        let n = cols.len();
        let mut out = Tensor::zeros(d, n);
        let mut rg = false;
        for (j, &c) in cols.iter().enumerate() {
            let v = self.value(c);
            assert_eq!(v.shape(), (d, 1), "concat_cols expects d x 1 columns");
            for r in 0..d {
                out.set(r, j, v.at(r, 0));
            }
            rg |= self.rg(c);
        }
        self.push(out, Op::ConcatCols(cols.to_vec()), rg)
    }

    /// Extracts row `r` of a matrix node as a column vector.
    pub fn row_as_col(&mut self, a: NodeRef, r: usize) -> NodeRef {
        let value = self.value(a).row_as_col(r);
        let rg = self.rg(a);
        self.push(value, Op::RowAsCol(a, r), rg)
    }

    /// Reverse pass from a scalar loss node.
    ///
    /// Panics if `loss` is not `1x1` or if backward already ran on this tape.
    pub fn backward(&mut self, loss: NodeRef) -> Gradients {
        assert!(
            !self.backward_done,
            "backward called twice on the same tape"
        );
        assert_eq!(
            self.value(loss).shape(),
            (1, 1),
            "backward requires a scalar loss node"
        );
        self.backward_done = true;

        let mut grads: Vec<Option<Tensor>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::from_vec(1, 1, vec![1.0]));

        for idx in (0..=loss.0).rev() {
            if !self.nodes[idx].requires_grad {
                grads[idx] = None;
                continue;
            }
            let Some(g) = grads[idx].take() else {
                continue;
            };
            match &self.nodes[idx].op {
                Op::Leaf => {
                    grads[idx] = Some(g);
                }
                Op::Matmul(a, b) => {
                    let (a, b) = (*a, *b);
                    if self.rg(a) {
                        let da = g.matmul_nt(&self.nodes[b.0].value);
                        accumulate(&mut grads[a.0], da);
                    }
                    if self.rg(b) {
                        let db = self.nodes[a.0].value.matmul_tn(&g);
                        accumulate(&mut grads[b.0], db);
                    }
                }
                Op::Hadamard(a, b) => {
                    let (a, b) = (*a, *b);
                    if self.rg(a) {
                        let da = g.hadamard(&self.nodes[b.0].value);
                        accumulate(&mut grads[a.0], da);
                    }
                    if self.rg(b) {
                        let db = g.hadamard(&self.nodes[a.0].value);
                        accumulate(&mut grads[b.0], db);
                    }
                }
                Op::Add(a, b) => {
                    let (a, b) = (*a, *b);
                    if self.rg(a) {
                        accumulate(&mut grads[a.0], g.clone());
                    }
                    if self.rg(b) {
                        accumulate(&mut grads[b.0], g.clone());
                    }
                }
                Op::Sub(a, b) => {
                    let (a, b) = (*a, *b);
                    if self.rg(a) {
                        accumulate(&mut grads[a.0], g.clone());
                    }
                    if self.rg(b) {
                        accumulate(&mut grads[b.0], g.scale(-1.0));
                    }
                }
                Op::Scale(a, c) => {
                    let (a, c) = (*a, *c);
                    accumulate(&mut grads[a.0], g.scale(c));
                }
                Op::LeakyRelu(a, slope) => {
                    let (a, slope) = (*a, *slope);
                    let x = &self.nodes[a.0].value;
                    let mut da = g.clone();
                    for (dv, &xv) in da.data_mut().iter_mut().zip(x.data()) {
                        if xv <= 0.0 {
                            *dv *= slope;
                        }
                    }
                    accumulate(&mut grads[a.0], da);
                }
                Op::SoftmaxRows(a) => {
                    let a = *a;
                    let y = &self.nodes[idx].value;
                    let (rows, cols) = y.shape();
                    let mut da = Tensor::zeros(rows, cols);
                    for r in 0..rows {
                        let mut inner = 0.0;
                        for c in 0..cols {
                            inner += g.at(r, c) * y.at(r, c);
                        }
                        for c in 0..cols {
                            da.set(r, c, y.at(r, c) * (g.at(r, c) - inner));
                        }
                    }
                    accumulate(&mut grads[a.0], da);
                }
                Op::LogSigmoid(a) => {
                    let a = *a;
                    // d/dx ln(sigmoid(x)) = sigmoid(-x)
                    let x = &self.nodes[a.0].value;
                    let mut da = g.clone();
                    for (dv, &xv) in da.data_mut().iter_mut().zip(x.data()) {
                        *dv *= sigmoid(-xv);
                    }
                    accumulate(&mut grads[a.0], da);
                }
                Op::Sum(a) => {
                    let a = *a;
                    let gv = g.at(0, 0);
                    let shape = self.nodes[a.0].value.shape();
                    let mut da = Tensor::zeros(shape.0, shape.1);
                    for v in da.data_mut() {
                        *v = gv;
                    }
                    accumulate(&mut grads[a.0], da);
                }
                Op::ConcatCols(cols) => {
                    let cols = cols.clone();
                    for (j, c) in cols.iter().enumerate() {
                        if !self.rg(*c) {
                            continue;
                        }
                        let d = g.rows();
                        let mut dc = Tensor::zeros(d, 1);
                        for r in 0..d {
                            dc.set(r, 0, g.at(r, j));
                        }
                        accumulate(&mut grads[c.0], dc);
                    }
                }
                Op::RowAsCol(a, r) => {
                    let (a, r) = (*a, *r);
                    let parent_shape = self.nodes[a.0].value.shape();
                    let slot = &mut grads[a.0];
                    if slot.is_none() {
                        *slot = Some(Tensor::zeros(parent_shape.0, parent_shape.1));
                    }
                    let da = slot.as_mut().unwrap();
                    for c in 0..parent_shape.1 {
                        let v = da.at(r, c) + g.at(c, 0);
                        da.set(r, c, v);
                    }
                }
            }
        }

        Gradients { grads }
    }
}

fn accumulate(slot: &mut Option<Tensor>, delta: Tensor) {
    match slot {
        Some(g) => g.add_assign(&delta),
        None => *slot = Some(delta),
    }
}

/// Per-node gradients produced by [`Tape::backward`].
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    /// Gradient of a node, if any path reached it.
    pub fn get(&self, node: NodeRef) -> Option<&Tensor> {
        self.grads.get(node.0).and_then(|g| g.as_ref())
    }

    /// Gradient of a node, densified to zeros when untouched.
    pub fn dense(&self, node: NodeRef, like: &Tensor) -> Tensor {
        match self.get(node) {
            Some(g) => g.clone(),
            None => Tensor::zeros_like(like),
        }
    }
}

/// Central-difference gradient check.
///
/// `f` evaluates the scalar objective at the given parameter values;
/// `analytic` holds one gradient tensor per parameter, shape-aligned with
/// `params`. Returns the maximum over all coordinates of
/// `|analytic - numeric| / max(|analytic|, |numeric|, 1e-8)`.
///
/// LeakyReLU kinks sitting exactly under a probed coordinate produce false
/// positives; callers are expected to keep inputs away from them.
pub fn finite_diff_check<F>(mut f: F, params: &[Tensor], analytic: &[Tensor], eps: f64) -> f64
where
    F: FnMut(&[Tensor]) -> f64,
{
    assert!(eps > 0.0, "finite_diff_check requires eps > 0");
    assert_eq!(params.len(), analytic.len());
    let mut scratch: Vec<Tensor> = params.to_vec();
    let mut worst = 0.0f64;
    for p in 0..params.len() {
        assert_eq!(params[p].shape(), analytic[p].shape());
        for i in 0..params[p].len() {
            let orig = scratch[p].data()[i];
            scratch[p].data_mut()[i] = orig + eps;
            let up = f(&scratch);
            scratch[p].data_mut()[i] = orig - eps;
            let down = f(&scratch);
            scratch[p].data_mut()[i] = orig;
            let numeric = (up - down) / (2.0 * eps);
            let a = analytic[p].data()[i];
            let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
            worst = worst.max(err);
        }
    }
    worst
}
