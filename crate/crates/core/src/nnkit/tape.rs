//! Define-by-run reverse-mode differentiation.
//!
//! Every op appends a node holding its forward value; [`Tape::backward`]
//! walks the nodes in reverse insertion order, which is a valid reverse
//! topological order because parents always precede children.

use alloc::vec;
use alloc::vec::Vec;

use super::{sigmoid, Tensor};
use crate::{Error, Result};

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Probabilities below this are clamped before taking a log.
const LOG_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    MatVec(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    AddScalar(Var),
    Sigmoid(Var),
    Tanh(Var),
    Relu(Var),
    Softmax(Var),
    Concat(Vec<Var>),
    Dot(Var, Var),
    Sum(Var),
    SumSquares(Var),
    Pick(Var, usize),
    NegLogPick(Var, usize),
    Bilinear {
        x: Var,
        t: Var,
        y: Var,
    },
    Conv1d {
        seq: Var,
        kernel: Var,
        bias: Var,
        positions: usize,
    },
    MaxPool {
        input: Var,
        argmax: Vec<Option<usize>>,
    },
}

#[derive(Debug, Clone)]
struct Node {
    value: Tensor,
    op: Op,
}

#[derive(Debug, Clone, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Number of conv output rows whose whole window lies inside the first
/// `valid_len` input rows.
pub fn conv_valid_positions(valid_len: usize, window: usize) -> usize {
    if valid_len >= window {
        valid_len - window + 1
    } else {
        0
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn leaf(&mut self, value: Tensor) -> Var {
        let mut value = value;
        value.grad = None;
        self.push(value, Op::Leaf)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    /// Scalar value of a single-element node.
    pub fn scalar(&self, v: Var) -> f64 {
        self.nodes[v.0].value.data()[0]
    }

    pub fn grad(&self, v: Var) -> Option<&[f64]> {
        self.nodes[v.0].value.grad.as_deref()
    }

    fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    fn data(&self, v: Var) -> &[f64] {
        self.nodes[v.0].value.data()
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa.len() != 2 || sb.len() != 2 || sa[1] != sb[0] {
            return Err(Error::shape("matmul", sa, sb));
        }
        let (m, k, n) = (sa[0], sa[1], sb[1]);
        let (da, db) = (self.data(a), self.data(b));
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            for p in 0..k {
                let x = da[i * k + p];
                if x == 0.0 {
                    continue;
                }
                let row = &db[p * n..(p + 1) * n];
                for (o, w) in out[i * n..(i + 1) * n].iter_mut().zip(row) {
                    *o += x * w;
                }
            }
        }
        Ok(self.push(Tensor::new(&[m, n], out)?, Op::MatMul(a, b)))
    }

    /// `a` of shape `[m, n]` times vector `x` of length `n`.
    pub fn matvec(&mut self, a: Var, x: Var) -> Result<Var> {
        let (sa, sx) = (self.shape(a), self.shape(x));
        if sa.len() != 2 || sx.len() != 1 || sa[1] != sx[0] {
            return Err(Error::shape("matvec", sa, sx));
        }
        let (m, n) = (sa[0], sa[1]);
        let (da, dx) = (self.data(a), self.data(x));
        let out = (0..m)
            .map(|i| da[i * n..(i + 1) * n].iter().zip(dx).map(|(w, v)| w * v).sum())
            .collect();
        Ok(self.push(Tensor::vector(out), Op::MatVec(a, x)))
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        if self.shape(a) != self.shape(b) {
            return Err(Error::shape(op, self.shape(a), self.shape(b)));
        }
        Ok(())
    }

    fn zip_with(&mut self, a: Var, b: Var, op: Op, f: impl Fn(f64, f64) -> f64) -> Var {
        let shape = self.shape(a).to_vec();
        let out = self.data(a).iter().zip(self.data(b)).map(|(x, y)| f(*x, *y)).collect();
        self.push(Tensor::new(&shape, out).expect("shape preserved"), op)
    }

    fn map(&mut self, a: Var, op: Op, f: impl Fn(f64) -> f64) -> Var {
        let shape = self.shape(a).to_vec();
        let out = self.data(a).iter().map(|x| f(*x)).collect();
        self.push(Tensor::new(&shape, out).expect("shape preserved"), op)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("add", a, b)?;
        Ok(self.zip_with(a, b, Op::Add(a, b), |x, y| x + y))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("sub", a, b)?;
        Ok(self.zip_with(a, b, Op::Sub(a, b), |x, y| x - y))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("mul", a, b)?;
        Ok(self.zip_with(a, b, Op::Mul(a, b), |x, y| x * y))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        self.map(a, Op::Scale(a, c), |x| x * c)
    }

    pub fn add_scalar(&mut self, a: Var, c: f64) -> Var {
        self.map(a, Op::AddScalar(a), |x| x + c)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.map(a, Op::Sigmoid(a), sigmoid)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.map(a, Op::Tanh(a), libm::tanh)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.map(a, Op::Relu(a), |x| x.max(0.0))
    }

    pub fn softmax(&mut self, a: Var) -> Result<Var> {
        let x = self.data(a);
        if self.shape(a).len() != 1 {
            return Err(Error::shape("softmax", self.shape(a), &[]));
        }
        let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = x.iter().map(|v| libm::exp(v - max)).collect();
        let z: f64 = exps.iter().sum();
        let out = exps.into_iter().map(|e| e / z).collect();
        Ok(self.push(Tensor::vector(out), Op::Softmax(a)))
    }

    /// Flattening concatenation of any number of nodes into one vector.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        if parts.is_empty() {
            return Err(Error::Empty("concat"));
        }
        let mut out = Vec::new();
        for &p in parts {
            out.extend_from_slice(self.data(p));
        }
        Ok(self.push(Tensor::vector(out), Op::Concat(parts.to_vec())))
    }

    pub fn dot(&mut self, a: Var, b: Var) -> Result<Var> {
        if self.data(a).len() != self.data(b).len() {
            return Err(Error::shape("dot", self.shape(a), self.shape(b)));
        }
        let s = self.data(a).iter().zip(self.data(b)).map(|(x, y)| x * y).sum();
        Ok(self.push(Tensor::scalar(s), Op::Dot(a, b)))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.data(a).iter().sum();
        self.push(Tensor::scalar(s), Op::Sum(a))
    }

    pub fn sum_squares(&mut self, a: Var) -> Var {
        let s = self.value(a).sum_squares();
        self.push(Tensor::scalar(s), Op::SumSquares(a))
    }

    pub fn pick(&mut self, a: Var, index: usize) -> Result<Var> {
        let x = *self
            .data(a)
            .get(index)
            .ok_or_else(|| Error::shape("pick", self.shape(a), &[index]))?;
        Ok(self.push(Tensor::scalar(x), Op::Pick(a, index)))
    }

    /// `-ln(a[index])`, the cross-entropy of a probability vector against a
    /// one-hot target.
    pub fn neg_log_pick(&mut self, a: Var, index: usize) -> Result<Var> {
        let p = *self
            .data(a)
            .get(index)
            .ok_or_else(|| Error::shape("neg_log_pick", self.shape(a), &[index]))?;
        Ok(self.push(Tensor::scalar(-libm::log(p.max(LOG_FLOOR))), Op::NegLogPick(a, index)))
    }

    /// `out[i] = x^T t[i] y` for `t` of shape `[k, |x|, |y|]`.
    pub fn bilinear(&mut self, x: Var, t: Var, y: Var) -> Result<Var> {
        let st = self.shape(t);
        let (nx, ny) = (self.data(x).len(), self.data(y).len());
        if st.len() != 3 || st[1] != nx || st[2] != ny {
            return Err(Error::shape("bilinear", st, &[nx, ny]));
        }
        let k = st[0];
        let (dx, dt, dy) = (self.data(x), self.data(t), self.data(y));
        let mut out = vec![0.0; k];
        for (i, o) in out.iter_mut().enumerate() {
            let slab = &dt[i * nx * ny..(i + 1) * nx * ny];
            let mut acc = 0.0;
            for j in 0..nx {
                if dx[j] == 0.0 {
                    continue;
                }
                let row = &slab[j * ny..(j + 1) * ny];
                acc += dx[j] * row.iter().zip(dy).map(|(a, b)| a * b).sum::<f64>();
            }
            *o = acc;
        }
        Ok(self.push(Tensor::vector(out), Op::Bilinear { x, t, y }))
    }

    /// Valid 1-D convolution over time.
    ///
    /// `seq` is `[L, d_in]`, `kernel` is `[w, d_in, d_out]`, `bias` is
    /// `[d_out]`. The output is `[L - w + 1, d_out]`; only rows whose window
    /// lies entirely within the first `valid_len` input rows are computed,
    /// the remaining rows are zero and carry no gradient.
    pub fn conv1d(&mut self, seq: Var, kernel: Var, bias: Var, valid_len: usize) -> Result<Var> {
        let (ss, sk, sb) = (self.shape(seq), self.shape(kernel), self.shape(bias));
        if ss.len() != 2 || sk.len() != 3 || ss[1] != sk[1] || sb != [sk[2]] {
            return Err(Error::shape("conv1d", ss, sk));
        }
        let (len, d_in, w, d_out) = (ss[0], ss[1], sk[0], sk[2]);
        if len < w {
            return Err(Error::invalid(alloc::format!(
                "conv1d: sequence length {len} shorter than window {w}; zero-pad first"
            )));
        }
        if valid_len > len {
            return Err(Error::invalid("conv1d: valid_len exceeds sequence length"));
        }
        let out_len = len - w + 1;
        let positions = conv_valid_positions(valid_len, w);
        let (ds, dk, db) = (self.data(seq), self.data(kernel), self.data(bias));
        let mut out = vec![0.0; out_len * d_out];
        for p in 0..positions {
            let o = &mut out[p * d_out..(p + 1) * d_out];
            o.copy_from_slice(db);
            for j in 0..w {
                for i in 0..d_in {
                    let s = ds[(p + j) * d_in + i];
                    if s == 0.0 {
                        continue;
                    }
                    let krow = &dk[(j * d_in + i) * d_out..(j * d_in + i + 1) * d_out];
                    for (acc, k) in o.iter_mut().zip(krow) {
                        *acc += s * k;
                    }
                }
            }
        }
        let value = Tensor::new(&[out_len, d_out], out)?;
        Ok(self.push(
            value,
            Op::Conv1d {
                seq,
                kernel,
                bias,
                positions,
            },
        ))
    }

    /// Per-channel max over the first `valid` rows of `[L, d]`; all-zero when
    /// `valid == 0`.
    pub fn maxpool_time(&mut self, input: Var, valid: usize) -> Result<Var> {
        let s = self.shape(input);
        if s.len() != 2 || valid > s[0] {
            return Err(Error::shape("maxpool_time", s, &[valid]));
        }
        let d = s[1];
        let x = self.data(input);
        let mut out = vec![0.0; d];
        let mut argmax = vec![None; d];
        for c in 0..d {
            for r in 0..valid {
                let v = x[r * d + c];
                if argmax[c].is_none() || v > out[c] {
                    out[c] = v;
                    argmax[c] = Some(r);
                }
            }
        }
        Ok(self.push(Tensor::vector(out), Op::MaxPool { input, argmax }))
    }

    /// Accumulate d(output)/d(node) for every node reachable from `output`,
    /// seeding the output gradient with ones. Gradients from a previous
    /// call are cleared first.
    pub fn backward(&mut self, output: Var) {
        for node in &mut self.nodes {
            node.value.grad = None;
        }
        let n = self.nodes[output.0].value.len();
        self.nodes[output.0].value.grad = Some(vec![1.0; n]);

        for i in (0..=output.0).rev() {
            let (before, rest) = self.nodes.split_at_mut(i);
            let node = &rest[0];
            let Some(g) = node.value.grad.as_deref() else {
                continue;
            };
            let y = node.value.data();
            let contribs = node_backward(before, &node.op, &node.value, y, g);
            for (v, c) in contribs {
                let t = &mut before[v.0].value;
                match &mut t.grad {
                    Some(acc) => acc.iter_mut().zip(&c).for_each(|(a, b)| *a += b),
                    None => t.grad = Some(c),
                }
            }
        }
    }
}

fn node_backward(nodes: &[Node], op: &Op, out: &Tensor, y: &[f64], g: &[f64]) -> Vec<(Var, Vec<f64>)> {
    let val = |v: Var| nodes[v.0].value.data();
    let shp = |v: Var| nodes[v.0].value.shape();
    match op {
        Op::Leaf => Vec::new(),
        Op::MatMul(a, b) => {
            let (m, k) = (shp(*a)[0], shp(*a)[1]);
            let n = shp(*b)[1];
            let (da, db) = (val(*a), val(*b));
            let mut ga = vec![0.0; m * k];
            let mut gb = vec![0.0; k * n];
            for i in 0..m {
                for p in 0..k {
                    let mut s = 0.0;
                    for j in 0..n {
                        s += g[i * n + j] * db[p * n + j];
                        gb[p * n + j] += da[i * k + p] * g[i * n + j];
                    }
                    ga[i * k + p] = s;
                }
            }
            vec![(*a, ga), (*b, gb)]
        }
        Op::MatVec(a, x) => {
            let n = shp(*a)[1];
            let (da, dx) = (val(*a), val(*x));
            let mut ga = vec![0.0; da.len()];
            let mut gx = vec![0.0; n];
            for (i, gi) in g.iter().enumerate() {
                if *gi == 0.0 {
                    continue;
                }
                let row = &da[i * n..(i + 1) * n];
                for j in 0..n {
                    ga[i * n + j] = gi * dx[j];
                    gx[j] += gi * row[j];
                }
            }
            vec![(*a, ga), (*x, gx)]
        }
        Op::Add(a, b) => vec![(*a, g.to_vec()), (*b, g.to_vec())],
        Op::Sub(a, b) => vec![(*a, g.to_vec()), (*b, g.iter().map(|x| -x).collect())],
        Op::Mul(a, b) => {
            let (da, db) = (val(*a), val(*b));
            vec![
                (*a, g.iter().zip(db).map(|(g, y)| g * y).collect()),
                (*b, g.iter().zip(da).map(|(g, x)| g * x).collect()),
            ]
        }
        Op::Scale(a, c) => vec![(*a, g.iter().map(|x| x * c).collect())],
        Op::AddScalar(a) => vec![(*a, g.to_vec())],
        Op::Sigmoid(a) => vec![(*a, g.iter().zip(y).map(|(g, y)| g * y * (1.0 - y)).collect())],
        Op::Tanh(a) => vec![(*a, g.iter().zip(y).map(|(g, y)| g * (1.0 - y * y)).collect())],
        Op::Relu(a) => {
            let x = val(*a);
            vec![(
                *a,
                g.iter().zip(x).map(|(g, x)| if *x > 0.0 { *g } else { 0.0 }).collect(),
            )]
        }
        Op::Softmax(a) => {
            let gy: f64 = g.iter().zip(y).map(|(g, y)| g * y).sum();
            vec![(*a, g.iter().zip(y).map(|(g, y)| y * (g - gy)).collect())]
        }
        Op::Concat(parts) => {
            let mut off = 0;
            parts
                .iter()
                .map(|p| {
                    let n = val(*p).len();
                    let c = g[off..off + n].to_vec();
                    off += n;
                    (*p, c)
                })
                .collect()
        }
        Op::Dot(a, b) => {
            let (da, db) = (val(*a), val(*b));
            vec![
                (*a, db.iter().map(|y| g[0] * y).collect()),
                (*b, da.iter().map(|x| g[0] * x).collect()),
            ]
        }
        Op::Sum(a) => vec![(*a, vec![g[0]; val(*a).len()])],
        Op::SumSquares(a) => vec![(*a, val(*a).iter().map(|x| 2.0 * x * g[0]).collect())],
        Op::Pick(a, idx) => {
            let mut c = vec![0.0; val(*a).len()];
            c[*idx] = g[0];
            vec![(*a, c)]
        }
        Op::NegLogPick(a, idx) => {
            let p = val(*a)[*idx];
            let mut c = vec![0.0; val(*a).len()];
            if p > LOG_FLOOR {
                c[*idx] = -g[0] / p;
            }
            vec![(*a, c)]
        }
        Op::Bilinear { x, t, y: yv } => {
            let (dx, dt, dy) = (val(*x), val(*t), val(*yv));
            let (nx, ny) = (dx.len(), dy.len());
            let mut gx = vec![0.0; nx];
            let mut gt = vec![0.0; dt.len()];
            let mut gy = vec![0.0; ny];
            for (i, gi) in g.iter().enumerate() {
                if *gi == 0.0 {
                    continue;
                }
                let base = i * nx * ny;
                for j in 0..nx {
                    let row = &dt[base + j * ny..base + (j + 1) * ny];
                    let grow = &mut gt[base + j * ny..base + (j + 1) * ny];
                    let gx_j = gi * dx[j];
                    let mut ty = 0.0;
                    for l in 0..ny {
                        ty += row[l] * dy[l];
                        grow[l] = gx_j * dy[l];
                        gy[l] += gx_j * row[l];
                    }
                    gx[j] += gi * ty;
                }
            }
            vec![(*x, gx), (*t, gt), (*yv, gy)]
        }
        Op::Conv1d {
            seq,
            kernel,
            bias,
            positions,
        } => {
            let (d_in, d_out) = (shp(*seq)[1], shp(*kernel)[2]);
            let w = shp(*kernel)[0];
            let (ds, dk) = (val(*seq), val(*kernel));
            let mut gs = vec![0.0; ds.len()];
            let mut gk = vec![0.0; dk.len()];
            let mut gb = vec![0.0; d_out];
            for p in 0..*positions {
                let go = &g[p * d_out..(p + 1) * d_out];
                gb.iter_mut().zip(go).for_each(|(b, x)| *b += x);
                for j in 0..w {
                    for i in 0..d_in {
                        let s = ds[(p + j) * d_in + i];
                        let at = (j * d_in + i) * d_out;
                        let krow = &dk[at..at + d_out];
                        let gkrow = &mut gk[at..at + d_out];
                        let mut acc = 0.0;
                        for o in 0..d_out {
                            gkrow[o] += s * go[o];
                            acc += krow[o] * go[o];
                        }
                        gs[(p + j) * d_in + i] += acc;
                    }
                }
            }
            vec![(*seq, gs), (*kernel, gk), (*bias, gb)]
        }
        Op::MaxPool { input, argmax } => {
            let d = out.len();
            let mut c = vec![0.0; val(*input).len()];
            for (ch, am) in argmax.iter().enumerate() {
                if let Some(r) = am {
                    c[r * d + ch] += g[ch];
                }
            }
            vec![(*input, c)]
        }
    }
}
