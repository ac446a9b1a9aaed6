use crate::error::{Error, Result};

use super::params::ParamId;

/// A dense 64-bit tensor: vectors have shape `[n]`, matrices `[rows, cols]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Value {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Value {
    pub fn vector(data: Vec<f64>) -> Self {
        Value {
            shape: vec![data.len()],
            data,
        }
    }

    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(rows * cols, data.len(), "matrix data length mismatch");
        Value {
            shape: vec![rows, cols],
            data,
        }
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Value {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }

    pub fn scalar(x: f64) -> Self {
        Value::vector(vec![x])
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn is_scalar(&self) -> bool {
        self.data.len() == 1
    }

    fn rows(&self) -> usize {
        self.shape[0]
    }

    fn cols(&self) -> usize {
        self.shape[1]
    }

    fn shape_str(&self) -> String {
        format!("{:?}", self.shape)
    }
}

/// Handle to a node on a tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(pub(crate) usize);

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatVec { w: Var, x: Var },
    MatMat { a: Var, b: Var },
    WeightedRows { m: Var, w: Var },
    Add { a: Var, b: Var },
    Mul { a: Var, b: Var },
    Scale { x: Var, c: f64 },
    AddN { xs: Vec<Var> },
    Concat { xs: Vec<Var> },
    Stack { xs: Vec<Var> },
    Tanh { x: Var },
    Sigmoid { x: Var },
    Softmax { x: Var },
    EmbedLookup { table: Var, index: usize },
    CrossEntropy { logits: Var, target: usize },
}

/// Recorded computation graph. Nodes are appended in execution order, so the
/// record is always topologically sorted and a single reverse sweep suffices
/// for backpropagation.
pub struct Tape {
    ops: Vec<Op>,
    vals: Vec<Value>,
    needs_grad: Vec<bool>,
    /// Softmax probabilities saved by cross-entropy nodes.
    aux: Vec<Option<Vec<f64>>>,
    /// Leased parameter leaves, for exporting gradients per parameter.
    leased: Vec<(ParamId, Var)>,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape {
            ops: Vec::new(),
            vals: Vec::new(),
            needs_grad: Vec::new(),
            aux: Vec::new(),
            leased: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn value(&self, v: Var) -> &Value {
        &self.vals[v.0]
    }

    pub fn data(&self, v: Var) -> &[f64] {
        &self.vals[v.0].data
    }

    fn push(&mut self, op: Op, val: Value, needs_grad: bool) -> Var {
        self.ops.push(op);
        self.vals.push(val);
        self.needs_grad.push(needs_grad);
        self.aux.push(None);
        Var(self.ops.len() - 1)
    }

    fn ng(&self, v: Var) -> bool {
        self.needs_grad[v.0]
    }

    /// A constant leaf (no gradient).
    pub fn constant(&mut self, val: Value) -> Var {
        self.push(Op::Leaf, val, false)
    }

    pub fn constant_vector(&mut self, data: Vec<f64>) -> Var {
        self.constant(Value::vector(data))
    }

    /// A differentiable leaf.
    pub fn leaf(&mut self, val: Value) -> Var {
        self.push(Op::Leaf, val, true)
    }

    /// Lease a named parameter onto the tape as a differentiable leaf.
    pub fn param(&mut self, id: ParamId, val: Value, trainable: bool) -> Var {
        let var = self.push(Op::Leaf, val, trainable);
        if trainable {
            self.leased.push((id, var));
        }
        var
    }

    pub fn matvec(&mut self, w: Var, x: Var) -> Result<Var> {
        let (wv, xv) = (&self.vals[w.0], &self.vals[x.0]);
        if wv.shape.len() != 2 || xv.shape.len() != 1 || wv.cols() != xv.len() {
            return Err(Error::dimension("matvec", "[r,c]·[c]", format!("{}·{}", wv.shape_str(), xv.shape_str())));
        }
        let (rows, cols) = (wv.rows(), wv.cols());
        let mut out = vec![0.0; rows];
        for i in 0..rows {
            let row = &wv.data[i * cols..(i + 1) * cols];
            let mut acc = 0.0;
            for (a, b) in row.iter().zip(xv.data.iter()) {
                acc += a * b;
            }
            out[i] = acc;
        }
        let ng = self.ng(w) || self.ng(x);
        Ok(self.push(Op::MatVec { w, x }, Value::vector(out), ng))
    }

    pub fn matmat(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (&self.vals[a.0], &self.vals[b.0]);
        if av.shape.len() != 2 || bv.shape.len() != 2 || av.cols() != bv.rows() {
            return Err(Error::dimension("matmul", "[r,c]·[c,k]", format!("{}·{}", av.shape_str(), bv.shape_str())));
        }
        let (r, c, k) = (av.rows(), av.cols(), bv.cols());
        let mut out = vec![0.0; r * k];
        for i in 0..r {
            for j in 0..c {
                let aij = av.data[i * c + j];
                let brow = &bv.data[j * k..(j + 1) * k];
                let orow = &mut out[i * k..(i + 1) * k];
                for (o, bval) in orow.iter_mut().zip(brow.iter()) {
                    *o += aij * bval;
                }
            }
        }
        let ng = self.ng(a) || self.ng(b);
        Ok(self.push(Op::MatMat { a, b }, Value::matrix(r, k, out), ng))
    }

    /// Row-weighted sum: `m` is `[n,d]`, `w` is `[n]`, result `[d]` equals
    /// `sum_i w[i] * m[i,:]`. This is the attention context combination.
    pub fn weighted_rows(&mut self, m: Var, w: Var) -> Result<Var> {
        let (mv, wv) = (&self.vals[m.0], &self.vals[w.0]);
        if mv.shape.len() != 2 || wv.shape.len() != 1 || mv.rows() != wv.len() {
            return Err(Error::dimension(
                "weighted_rows",
                "[n,d] with [n]",
                format!("{} with {}", mv.shape_str(), wv.shape_str()),
            ));
        }
        let (n, d) = (mv.rows(), mv.cols());
        let mut out = vec![0.0; d];
        for i in 0..n {
            let wi = wv.data[i];
            let row = &mv.data[i * d..(i + 1) * d];
            for (o, x) in out.iter_mut().zip(row.iter()) {
                *o += wi * x;
            }
        }
        let ng = self.ng(m) || self.ng(w);
        Ok(self.push(Op::WeightedRows { m, w }, Value::vector(out), ng))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (&self.vals[a.0], &self.vals[b.0]);
        if av.shape != bv.shape {
            return Err(Error::dimension("add", av.shape_str(), bv.shape_str()));
        }
        let data = av.data.iter().zip(bv.data.iter()).map(|(x, y)| x + y).collect();
        let val = Value { shape: av.shape.clone(), data };
        let ng = self.ng(a) || self.ng(b);
        Ok(self.push(Op::Add { a, b }, val, ng))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (&self.vals[a.0], &self.vals[b.0]);
        if av.shape != bv.shape {
            return Err(Error::dimension("mul", av.shape_str(), bv.shape_str()));
        }
        let data = av.data.iter().zip(bv.data.iter()).map(|(x, y)| x * y).collect();
        let val = Value { shape: av.shape.clone(), data };
        let ng = self.ng(a) || self.ng(b);
        Ok(self.push(Op::Mul { a, b }, val, ng))
    }

    pub fn scale(&mut self, x: Var, c: f64) -> Var {
        let xv = &self.vals[x.0];
        let val = Value {
            shape: xv.shape.clone(),
            data: xv.data.iter().map(|v| v * c).collect(),
        };
        let ng = self.ng(x);
        self.push(Op::Scale { x, c }, val, ng)
    }

    pub fn add_n(&mut self, xs: &[Var]) -> Result<Var> {
        let first = xs
            .first()
            .ok_or_else(|| Error::Contract("add_n over empty list".into()))?;
        let shape = self.vals[first.0].shape.clone();
        let mut data = vec![0.0; shape.iter().product()];
        for v in xs {
            let val = &self.vals[v.0];
            if val.shape != shape {
                return Err(Error::dimension("add_n", format!("{shape:?}"), val.shape_str()));
            }
            for (o, x) in data.iter_mut().zip(val.data.iter()) {
                *o += x;
            }
        }
        let ng = xs.iter().any(|v| self.ng(*v));
        Ok(self.push(Op::AddN { xs: xs.to_vec() }, Value { shape, data }, ng))
    }

    pub fn concat(&mut self, xs: &[Var]) -> Result<Var> {
        if xs.is_empty() {
            return Err(Error::Contract("concat over empty list".into()));
        }
        let mut data = Vec::new();
        for v in xs {
            let val = &self.vals[v.0];
            if val.shape.len() != 1 {
                return Err(Error::dimension("concat", "1-D inputs", val.shape_str()));
            }
            data.extend_from_slice(&val.data);
        }
        let ng = xs.iter().any(|v| self.ng(*v));
        Ok(self.push(Op::Concat { xs: xs.to_vec() }, Value::vector(data), ng))
    }

    /// Stack `n` vectors of length `d` into an `[n,d]` matrix.
    pub fn stack(&mut self, xs: &[Var]) -> Result<Var> {
        let first = xs
            .first()
            .ok_or_else(|| Error::Contract("stack over empty list".into()))?;
        let d = self.vals[first.0].len();
        let mut data = Vec::with_capacity(xs.len() * d);
        for v in xs {
            let val = &self.vals[v.0];
            if val.shape.len() != 1 || val.len() != d {
                return Err(Error::dimension("stack", format!("[{d}]"), val.shape_str()));
            }
            data.extend_from_slice(&val.data);
        }
        let ng = xs.iter().any(|v| self.ng(*v));
        Ok(self.push(Op::Stack { xs: xs.to_vec() }, Value::matrix(xs.len(), d, data), ng))
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        let xv = &self.vals[x.0];
        let val = Value {
            shape: xv.shape.clone(),
            data: xv.data.iter().map(|v| v.tanh()).collect(),
        };
        let ng = self.ng(x);
        self.push(Op::Tanh { x }, val, ng)
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        let xv = &self.vals[x.0];
        let val = Value {
            shape: xv.shape.clone(),
            data: xv.data.iter().map(|v| 1.0 / (1.0 + (-v).exp())).collect(),
        };
        let ng = self.ng(x);
        self.push(Op::Sigmoid { x }, val, ng)
    }

    pub fn softmax(&mut self, x: Var) -> Result<Var> {
        let xv = &self.vals[x.0];
        if xv.shape.len() != 1 || xv.is_empty() {
            return Err(Error::dimension("softmax", "non-empty 1-D", xv.shape_str()));
        }
        let max = xv.data.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = xv.data.iter().map(|v| (v - max).exp()).collect();
        let sum: f64 = exps.iter().sum();
        let data = exps.into_iter().map(|e| e / sum).collect();
        let ng = self.ng(x);
        Ok(self.push(Op::Softmax { x }, Value::vector(data), ng))
    }

    pub fn embed_lookup(&mut self, table: Var, index: usize) -> Result<Var> {
        let tv = &self.vals[table.0];
        if tv.shape.len() != 2 || index >= tv.rows() {
            return Err(Error::dimension(
                "embed_lookup",
                format!("row {index} of a matrix"),
                tv.shape_str(),
            ));
        }
        let cols = tv.cols();
        let data = tv.data[index * cols..(index + 1) * cols].to_vec();
        let ng = self.ng(table);
        Ok(self.push(Op::EmbedLookup { table, index }, Value::vector(data), ng))
    }

    /// Numerically stable `-log softmax(logits)[target]`.
    pub fn cross_entropy(&mut self, logits: Var, target: usize) -> Result<Var> {
        let lv = &self.vals[logits.0];
        if lv.shape.len() != 1 || target >= lv.len() {
            return Err(Error::dimension(
                "cross_entropy",
                format!("1-D logits with target {target} in range"),
                lv.shape_str(),
            ));
        }
        let max = lv.data.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + lv.data.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        let loss = lse - lv.data[target];
        let probs: Vec<f64> = lv.data.iter().map(|v| (v - lse).exp()).collect();
        let ng = self.ng(logits);
        let var = self.push(Op::CrossEntropy { logits, target }, Value::scalar(loss), ng);
        self.aux[var.0] = Some(probs);
        Ok(var)
    }

    pub fn scalar(&self, v: Var) -> f64 {
        self.vals[v.0].data[0]
    }

    /// Reverse sweep from a scalar loss. Returns one gradient buffer per
    /// leased parameter, accumulated into `accum` (indexed by [`ParamId`]).
    pub fn backward(&self, loss: Var, accum: &mut super::params::GradAccum) -> Result<()> {
        if !self.vals[loss.0].is_scalar() {
            return Err(Error::Contract(format!(
                "backward requires a scalar loss, got shape {}",
                self.vals[loss.0].shape_str()
            )));
        }
        if !self.needs_grad[loss.0] {
            // Loss does not depend on any parameter; all gradients are zero.
            return Ok(());
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; self.ops.len()];
        grads[loss.0] = Some(vec![1.0]);

        for id in (0..=loss.0).rev() {
            if !self.needs_grad[id] {
                continue;
            }
            let gout = match grads[id].take() {
                Some(g) => g,
                None => continue,
            };
            match &self.ops[id] {
                Op::Leaf => {
                    grads[id] = Some(gout);
                }
                Op::MatVec { w, x } => {
                    let (wv, xv) = (&self.vals[w.0], &self.vals[x.0]);
                    let (rows, cols) = (wv.rows(), wv.cols());
                    if self.ng(*w) {
                        let gw = grads[w.0].get_or_insert_with(|| vec![0.0; wv.len()]);
                        for i in 0..rows {
                            let gi = gout[i];
                            let row = &mut gw[i * cols..(i + 1) * cols];
                            for (g, xj) in row.iter_mut().zip(xv.data.iter()) {
                                *g += gi * xj;
                            }
                        }
                    }
                    if self.ng(*x) {
                        let gx = grads[x.0].get_or_insert_with(|| vec![0.0; xv.len()]);
                        for i in 0..rows {
                            let gi = gout[i];
                            let row = &wv.data[i * cols..(i + 1) * cols];
                            for (g, wij) in gx.iter_mut().zip(row.iter()) {
                                *g += gi * wij;
                            }
                        }
                    }
                }
                Op::MatMat { a, b } => {
                    let (av, bv) = (&self.vals[a.0], &self.vals[b.0]);
                    let (r, c, k) = (av.rows(), av.cols(), bv.cols());
                    if self.ng(*a) {
                        let ga = grads[a.0].get_or_insert_with(|| vec![0.0; av.len()]);
                        for i in 0..r {
                            for j in 0..c {
                                let brow = &bv.data[j * k..(j + 1) * k];
                                let grow = &gout[i * k..(i + 1) * k];
                                let mut acc = 0.0;
                                for (bval, g) in brow.iter().zip(grow.iter()) {
                                    acc += bval * g;
                                }
                                ga[i * c + j] += acc;
                            }
                        }
                    }
                    if self.ng(*b) {
                        let gb = grads[b.0].get_or_insert_with(|| vec![0.0; bv.len()]);
                        for i in 0..r {
                            for j in 0..c {
                                let aij = av.data[i * c + j];
                                let grow = &gout[i * k..(i + 1) * k];
                                let gbrow = &mut gb[j * k..(j + 1) * k];
                                for (g, go) in gbrow.iter_mut().zip(grow.iter()) {
                                    *g += aij * go;
                                }
                            }
                        }
                    }
                }
                Op::WeightedRows { m, w } => {
                    let (mv, wv) = (&self.vals[m.0], &self.vals[w.0]);
                    let (n, d) = (mv.rows(), mv.cols());
                    if self.ng(*m) {
                        let gm = grads[m.0].get_or_insert_with(|| vec![0.0; mv.len()]);
                        for i in 0..n {
                            let wi = wv.data[i];
                            let row = &mut gm[i * d..(i + 1) * d];
                            for (g, go) in row.iter_mut().zip(gout.iter()) {
                                *g += wi * go;
                            }
                        }
                    }
                    if self.ng(*w) {
                        let gw = grads[w.0].get_or_insert_with(|| vec![0.0; n]);
                        for i in 0..n {
                            let row = &mv.data[i * d..(i + 1) * d];
                            let mut acc = 0.0;
                            for (x, go) in row.iter().zip(gout.iter()) {
                                acc += x * go;
                            }
                            gw[i] += acc;
                        }
                    }
                }
                Op::Add { a, b } => {
                    for v in [a, b] {
                        if self.ng(*v) {
                            let g = grads[v.0].get_or_insert_with(|| vec![0.0; gout.len()]);
                            for (gi, go) in g.iter_mut().zip(gout.iter()) {
                                *gi += go;
                            }
                        }
                    }
                }
                Op::Mul { a, b } => {
                    let (av, bv) = (&self.vals[a.0], &self.vals[b.0]);
                    if self.ng(*a) {
                        let g = grads[a.0].get_or_insert_with(|| vec![0.0; av.len()]);
                        for i in 0..g.len() {
                            g[i] += gout[i] * bv.data[i];
                        }
                    }
                    if self.ng(*b) {
                        let g = grads[b.0].get_or_insert_with(|| vec![0.0; bv.len()]);
                        for i in 0..g.len() {
                            g[i] += gout[i] * av.data[i];
                        }
                    }
                }
                Op::Scale { x, c } => {
                    if self.ng(*x) {
                        let g = grads[x.0].get_or_insert_with(|| vec![0.0; gout.len()]);
                        for (gi, go) in g.iter_mut().zip(gout.iter()) {
                            *gi += c * go;
                        }
                    }
                }
                Op::AddN { xs } => {
                    for v in xs {
                        if self.ng(*v) {
                            let g = grads[v.0].get_or_insert_with(|| vec![0.0; gout.len()]);
                            for (gi, go) in g.iter_mut().zip(gout.iter()) {
                                *gi += go;
                            }
                        }
                    }
                }
                Op::Concat { xs } => {
                    let mut offset = 0;
                    for v in xs {
                        let len = self.vals[v.0].len();
                        if self.ng(*v) {
                            let g = grads[v.0].get_or_insert_with(|| vec![0.0; len]);
                            for (gi, go) in g.iter_mut().zip(gout[offset..offset + len].iter()) {
                                *gi += go;
                            }
                        }
                        offset += len;
                    }
                }
                Op::Stack { xs } => {
                    let d = self.vals[xs[0].0].len();
                    for (i, v) in xs.iter().enumerate() {
                        if self.ng(*v) {
                            let g = grads[v.0].get_or_insert_with(|| vec![0.0; d]);
                            for (gi, go) in g.iter_mut().zip(gout[i * d..(i + 1) * d].iter()) {
                                *gi += go;
                            }
                        }
                    }
                }
                Op::Tanh { x } => {
                    if self.ng(*x) {
                        let y = &self.vals[id].data;
                        let g = grads[x.0].get_or_insert_with(|| vec![0.0; y.len()]);
                        for i in 0..g.len() {
                            g[i] += gout[i] * (1.0 - y[i] * y[i]);
                        }
                    }
                }
                Op::Sigmoid { x } => {
                    if self.ng(*x) {
                        let y = &self.vals[id].data;
                        let g = grads[x.0].get_or_insert_with(|| vec![0.0; y.len()]);
                        for i in 0..g.len() {
                            g[i] += gout[i] * y[i] * (1.0 - y[i]);
                        }
                    }
                }
                Op::Softmax { x } => {
                    if self.ng(*x) {
                        let y = &self.vals[id].data;
                        let dot: f64 = y.iter().zip(gout.iter()).map(|(yi, gi)| yi * gi).sum();
                        let g = grads[x.0].get_or_insert_with(|| vec![0.0; y.len()]);
                        for i in 0..g.len() {
                            g[i] += y[i] * (gout[i] - dot);
                        }
                    }
                }
                Op::EmbedLookup { table, index } => {
                    if self.ng(*table) {
                        let tv = &self.vals[table.0];
                        let cols = tv.cols();
                        let g = grads[table.0].get_or_insert_with(|| vec![0.0; tv.len()]);
                        let row = &mut g[index * cols..(index + 1) * cols];
                        for (gi, go) in row.iter_mut().zip(gout.iter()) {
                            *gi += go;
                        }
                    }
                }
                Op::CrossEntropy { logits, target } => {
                    if self.ng(*logits) {
                        let probs = self.aux[id].as_ref().expect("cross entropy saves probs");
                        let g = grads[logits.0].get_or_insert_with(|| vec![0.0; probs.len()]);
                        let go = gout[0];
                        for i in 0..g.len() {
                            let delta = if i == *target { 1.0 } else { 0.0 };
                            g[i] += go * (probs[i] - delta);
                        }
                    }
                }
            }
        }

        for (pid, var) in &self.leased {
            if let Some(g) = &grads[var.0] {
                accum.add(*pid, g);
            }
        }
        Ok(())
    }
}
