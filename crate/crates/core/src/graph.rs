//! Reverse-mode automatic differentiation over f64 vectors.
//!
//! Networks at desk scale are small fully-connected stacks, but the training
//! losses compose them heavily (encoders feeding decoders feeding encoders,
//! with shared subexpressions). A tape keeps the gradients honest; finite
//! differences check them in the test suites.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of a parameter tensor inside a [`ParamSet`].
pub type ParamId = usize;

/// Index of a node inside a [`Graph`].
pub type NodeId = usize;

/// Row-major matrix; vectors are stored as `rows x 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// Named collection of parameter tensors.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParamSet {
    names: Vec<String>,
    tensors: Vec<Tensor>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, tensor: Tensor) -> ParamId {
        self.names.push(name.into());
        self.tensors.push(tensor);
        self.tensors.len() - 1
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.tensors[id]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.tensors[id]
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id]
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.names.iter().map(|n| n.as_str()).zip(self.tensors.iter())
    }

    pub fn all_finite(&self) -> bool {
        self.tensors
            .iter()
            .all(|t| t.data.iter().all(|v| v.is_finite()))
    }
}

/// Per-parameter gradient accumulator aligned with a [`ParamSet`].
#[derive(Debug, Clone)]
pub struct Grads {
    slots: Vec<Vec<f64>>,
}

impl Grads {
    pub fn zeros(params: &ParamSet) -> Self {
        Self {
            slots: params.tensors.iter().map(|t| vec![0.0; t.len()]).collect(),
        }
    }

    pub fn slot(&self, id: ParamId) -> &[f64] {
        &self.slots[id]
    }

    pub fn reset(&mut self) {
        for s in &mut self.slots {
            s.iter_mut().for_each(|v| *v = 0.0);
        }
    }
}

#[derive(Debug, Clone)]
enum Op {
    Input,
    Linear { w: ParamId, b: ParamId, x: NodeId },
    Relu { x: NodeId },
    Sigmoid { x: NodeId },
    Clamp { x: NodeId, lo: f64, hi: f64 },
    Ln { x: NodeId },
    Exp { x: NodeId },
    Abs { x: NodeId },
    Add { a: NodeId, b: NodeId },
    Sub { a: NodeId, b: NodeId },
    Mul { a: NodeId, b: NodeId },
    /// scale * x + offset, elementwise; the offset drops out of the backward pass.
    Affine { x: NodeId, scale: f64 },
    Concat { a: NodeId, b: NodeId },
    Sum { x: NodeId },
    LogSoftmax { x: NodeId },
    Pick { x: NodeId, idx: usize },
    AddMany { xs: Vec<NodeId> },
}

struct Node {
    value: Vec<f64>,
    op: Op,
}

/// A computation tape over one parameter set.
pub struct Graph<'p> {
    params: &'p ParamSet,
    nodes: Vec<Node>,
}

impl<'p> Graph<'p> {
    pub fn new(params: &'p ParamSet) -> Self {
        Self {
            params,
            nodes: Vec::new(),
        }
    }

    fn push(&mut self, value: Vec<f64>, op: Op) -> NodeId {
        self.nodes.push(Node { value, op });
        self.nodes.len() - 1
    }

    pub fn value(&self, id: NodeId) -> &[f64] {
        &self.nodes[id].value
    }

    /// Value of a length-one node.
    pub fn scalar(&self, id: NodeId) -> f64 {
        debug_assert_eq!(self.nodes[id].value.len(), 1);
        self.nodes[id].value[0]
    }

    pub fn input(&mut self, v: Vec<f64>) -> NodeId {
        self.push(v, Op::Input)
    }

    pub fn constant(&mut self, c: f64) -> NodeId {
        self.push(vec![c], Op::Input)
    }

    pub fn linear(&mut self, w: ParamId, b: ParamId, x: NodeId) -> Result<NodeId> {
        let wt = self.params.get(w);
        let bt = self.params.get(b);
        let xv = &self.nodes[x].value;
        if wt.cols != xv.len() || bt.rows != wt.rows || bt.cols != 1 {
            return Err(Error::DimensionMismatch(format!(
                "linear {}: W {}x{}, b {}x{}, x len {}",
                self.params.name(w),
                wt.rows,
                wt.cols,
                bt.rows,
                bt.cols,
                xv.len()
            )));
        }
        let mut out = bt.data.clone();
        for (i, o) in out.iter_mut().enumerate() {
            let row = &wt.data[i * wt.cols..(i + 1) * wt.cols];
            *o += row.iter().zip(xv.iter()).map(|(a, b)| a * b).sum::<f64>();
        }
        Ok(self.push(out, Op::Linear { w, b, x }))
    }

    pub fn relu(&mut self, x: NodeId) -> NodeId {
        let v = self.nodes[x].value.iter().map(|&a| a.max(0.0)).collect();
        self.push(v, Op::Relu { x })
    }

    pub fn sigmoid(&mut self, x: NodeId) -> NodeId {
        let v = self.nodes[x].value.iter().map(|&t| stable_sigmoid(t)).collect();
        self.push(v, Op::Sigmoid { x })
    }

    pub fn clamp(&mut self, x: NodeId, lo: f64, hi: f64) -> NodeId {
        let v = self.nodes[x].value.iter().map(|&a| a.clamp(lo, hi)).collect();
        self.push(v, Op::Clamp { x, lo, hi })
    }

    pub fn ln(&mut self, x: NodeId) -> NodeId {
        let v = self.nodes[x].value.iter().map(|&a| a.ln()).collect();
        self.push(v, Op::Ln { x })
    }

    pub fn exp(&mut self, x: NodeId) -> NodeId {
        let v = self.nodes[x].value.iter().map(|&a| a.exp()).collect();
        self.push(v, Op::Exp { x })
    }

    pub fn abs(&mut self, x: NodeId) -> NodeId {
        let v = self.nodes[x].value.iter().map(|&a| a.abs()).collect();
        self.push(v, Op::Abs { x })
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = zip_vals(&self.nodes[a].value, &self.nodes[b].value, |x, y| x + y);
        self.push(v, Op::Add { a, b })
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = zip_vals(&self.nodes[a].value, &self.nodes[b].value, |x, y| x - y);
        self.push(v, Op::Sub { a, b })
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = zip_vals(&self.nodes[a].value, &self.nodes[b].value, |x, y| x * y);
        self.push(v, Op::Mul { a, b })
    }

    pub fn affine(&mut self, x: NodeId, scale: f64, offset: f64) -> NodeId {
        let v = self.nodes[x]
            .value
            .iter()
            .map(|&a| scale * a + offset)
            .collect();
        self.push(v, Op::Affine { x, scale })
    }

    pub fn concat(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let mut v = self.nodes[a].value.clone();
        v.extend_from_slice(&self.nodes[b].value);
        self.push(v, Op::Concat { a, b })
    }

    pub fn sum(&mut self, x: NodeId) -> NodeId {
        let s = self.nodes[x].value.iter().sum();
        self.push(vec![s], Op::Sum { x })
    }

    pub fn log_softmax(&mut self, x: NodeId) -> NodeId {
        let xv = &self.nodes[x].value;
        let max = xv.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + xv.iter().map(|&a| (a - max).exp()).sum::<f64>().ln();
        let v = xv.iter().map(|&a| a - lse).collect();
        self.push(v, Op::LogSoftmax { x })
    }

    pub fn pick(&mut self, x: NodeId, idx: usize) -> NodeId {
        let v = vec![self.nodes[x].value[idx]];
        self.push(v, Op::Pick { x, idx })
    }

    pub fn add_many(&mut self, xs: Vec<NodeId>) -> NodeId {
        assert!(!xs.is_empty());
        let mut v = self.nodes[xs[0]].value.clone();
        for &x in &xs[1..] {
            for (o, a) in v.iter_mut().zip(&self.nodes[x].value) {
                *o += a;
            }
        }
        self.push(v, Op::AddMany { xs })
    }

    /// Mean of same-length nodes.
    pub fn mean_of(&mut self, xs: Vec<NodeId>) -> NodeId {
        let n = xs.len() as f64;
        let s = self.add_many(xs);
        self.affine(s, 1.0 / n, 0.0)
    }

    /// Accumulate d(root)/d(params) into `grads`. `root` must be a scalar node.
    pub fn backward(&self, root: NodeId, grads: &mut Grads) {
        assert_eq!(self.nodes[root].value.len(), 1, "backward root must be scalar");
        let mut adj: Vec<Vec<f64>> = self.nodes.iter().map(|_| Vec::new()).collect();
        adj[root] = vec![1.0];

        for id in (0..=root).rev() {
            if adj[id].is_empty() {
                continue;
            }
            let g = std::mem::take(&mut adj[id]);
            match &self.nodes[id].op {
                Op::Input => {}
                Op::Linear { w, b, x } => {
                    let wt = self.params.get(*w);
                    let xv = &self.nodes[*x].value;
                    {
                        let gw = &mut grads.slots[*w];
                        for (i, &gi) in g.iter().enumerate() {
                            let row = &mut gw[i * wt.cols..(i + 1) * wt.cols];
                            for (j, r) in row.iter_mut().enumerate() {
                                *r += gi * xv[j];
                            }
                        }
                    }
                    {
                        let gb = &mut grads.slots[*b];
                        for (i, &gi) in g.iter().enumerate() {
                            gb[i] += gi;
                        }
                    }
                    let gx = ensure(&mut adj[*x], xv.len());
                    for (i, &gi) in g.iter().enumerate() {
                        let row = &wt.data[i * wt.cols..(i + 1) * wt.cols];
                        for (j, gxj) in gx.iter_mut().enumerate() {
                            *gxj += gi * row[j];
                        }
                    }
                }
                Op::Relu { x } => {
                    let xv = &self.nodes[*x].value;
                    let gx = ensure(&mut adj[*x], xv.len());
                    for (i, &gi) in g.iter().enumerate() {
                        if xv[i] > 0.0 {
                            gx[i] += gi;
                        }
                    }
                }
                Op::Sigmoid { x } => {
                    let yv = &self.nodes[id].value;
                    let gx = ensure(&mut adj[*x], yv.len());
                    for (i, &gi) in g.iter().enumerate() {
                        gx[i] += gi * yv[i] * (1.0 - yv[i]);
                    }
                }
                Op::Clamp { x, lo, hi } => {
                    let xv = &self.nodes[*x].value;
                    let gx = ensure(&mut adj[*x], xv.len());
                    for (i, &gi) in g.iter().enumerate() {
                        if xv[i] > *lo && xv[i] < *hi {
                            gx[i] += gi;
                        }
                    }
                }
                Op::Ln { x } => {
                    let xv = &self.nodes[*x].value;
                    let gx = ensure(&mut adj[*x], xv.len());
                    for (i, &gi) in g.iter().enumerate() {
                        gx[i] += gi / xv[i];
                    }
                }
                Op::Exp { x } => {
                    let yv = &self.nodes[id].value;
                    let gx = ensure(&mut adj[*x], yv.len());
                    for (i, &gi) in g.iter().enumerate() {
                        gx[i] += gi * yv[i];
                    }
                }
                Op::Abs { x } => {
                    let xv = &self.nodes[*x].value;
                    let gx = ensure(&mut adj[*x], xv.len());
                    for (i, &gi) in g.iter().enumerate() {
                        // subgradient 0 at the kink
                        gx[i] += gi * sign0(xv[i]);
                    }
                }
                Op::Add { a, b } => {
                    accumulate(&mut adj[*a], &g);
                    accumulate(&mut adj[*b], &g);
                }
                Op::Sub { a, b } => {
                    accumulate(&mut adj[*a], &g);
                    let gb = ensure(&mut adj[*b], g.len());
                    for (o, &gi) in gb.iter_mut().zip(&g) {
                        *o -= gi;
                    }
                }
                Op::Mul { a, b } => {
                    let av = self.nodes[*a].value.clone();
                    let bv = self.nodes[*b].value.clone();
                    {
                        let ga = ensure(&mut adj[*a], av.len());
                        for (i, &gi) in g.iter().enumerate() {
                            ga[i] += gi * bv[i];
                        }
                    }
                    let gb = ensure(&mut adj[*b], bv.len());
                    for (i, &gi) in g.iter().enumerate() {
                        gb[i] += gi * av[i];
                    }
                }
                Op::Affine { x, scale, .. } => {
                    let gx = ensure(&mut adj[*x], g.len());
                    for (o, &gi) in gx.iter_mut().zip(&g) {
                        *o += gi * scale;
                    }
                }
                Op::Concat { a, b } => {
                    let na = self.nodes[*a].value.len();
                    {
                        let ga = ensure(&mut adj[*a], na);
                        for (o, &gi) in ga.iter_mut().zip(&g[..na]) {
                            *o += gi;
                        }
                    }
                    let nb = self.nodes[*b].value.len();
                    let gb = ensure(&mut adj[*b], nb);
                    for (o, &gi) in gb.iter_mut().zip(&g[na..]) {
                        *o += gi;
                    }
                }
                Op::Sum { x } => {
                    let n = self.nodes[*x].value.len();
                    let gx = ensure(&mut adj[*x], n);
                    for o in gx.iter_mut() {
                        *o += g[0];
                    }
                }
                Op::LogSoftmax { x } => {
                    let yv = &self.nodes[id].value; // log-softmax values
                    let gsum: f64 = g.iter().sum();
                    let gx = ensure(&mut adj[*x], yv.len());
                    for (i, &gi) in g.iter().enumerate() {
                        gx[i] += gi - yv[i].exp() * gsum;
                    }
                }
                Op::Pick { x, idx } => {
                    let n = self.nodes[*x].value.len();
                    let gx = ensure(&mut adj[*x], n);
                    gx[*idx] += g[0];
                }
                Op::AddMany { xs } => {
                    for &x in xs {
                        accumulate(&mut adj[x], &g);
                    }
                }
            }
        }
    }
}

fn zip_vals(a: &[f64], b: &[f64], f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect()
}

fn ensure(slot: &mut Vec<f64>, len: usize) -> &mut Vec<f64> {
    if slot.is_empty() {
        slot.resize(len, 0.0);
    }
    slot
}

fn accumulate(slot: &mut Vec<f64>, g: &[f64]) {
    let s = ensure(slot, g.len());
    for (o, &gi) in s.iter_mut().zip(g) {
        *o += gi;
    }
}

fn sign0(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn stable_sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Adam optimizer state for one parameter group.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(params: &ParamSet, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: params.tensors.iter().map(|t| vec![0.0; t.len()]).collect(),
            v: params.tensors.iter().map(|t| vec![0.0; t.len()]).collect(),
        }
    }

    /// One update of the listed parameters. `direction` is -1.0 for descent
    /// and +1.0 for ascent (discriminator maximization).
    pub fn step(
        &mut self,
        params: &mut ParamSet,
        grads: &Grads,
        group: &[ParamId],
        direction: f64,
    ) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for &id in group {
            let g = &grads.slots[id];
            let m = &mut self.m[id];
            let v = &mut self.v[id];
            let theta = &mut params.tensors[id].data;
            for i in 0..g.len() {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                let mh = m[i] / bc1;
                let vh = v[i] / bc2;
                theta[i] += direction * self.lr * mh / (vh.sqrt() + self.eps);
            }
        }
    }
}

/// Central finite-difference gradient of `f` with respect to every entry of
/// the listed parameters. Test-suite oracle for the tape.
pub fn finite_difference_grads(
    params: &mut ParamSet,
    group: &[ParamId],
    step: f64,
    mut f: impl FnMut(&ParamSet) -> f64,
) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(group.len());
    for &id in group {
        let n = params.tensors[id].data.len();
        let mut g = vec![0.0; n];
        for i in 0..n {
            let orig = params.tensors[id].data[i];
            params.tensors[id].data[i] = orig + step;
            let fp = f(params);
            params.tensors[id].data[i] = orig - step;
            let fm = f(params);
            params.tensors[id].data[i] = orig;
            g[i] = (fp - fm) / (2.0 * step);
        }
        out.push(g);
    }
    out
}

/// Largest relative error between analytic and finite-difference gradients.
pub fn max_relative_error(analytic: &[&[f64]], numeric: &[Vec<f64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for (a, n) in analytic.iter().zip(numeric) {
        for (&ga, &gn) in a.iter().zip(n) {
            let denom = ga.abs().max(gn.abs()).max(1e-6);
            worst = worst.max((ga - gn).abs() / denom);
        }
    }
    worst
}
