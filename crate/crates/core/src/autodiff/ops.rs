use alloc::vec;
use alloc::vec::Vec;

use super::conv::{
    avg_pool_backward, avg_pool_forward, conv2d_backward, conv2d_forward, upsample_backward,
    upsample_forward,
};
use super::{Op, Tape, Var};
use crate::error::{Error, Result};
use crate::tensor::{matmul_a_bt_acc, matmul_at_b_acc, matmul_raw, Tensor};

/// Logistic function, evaluated without overflow for large `|x|`.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

fn mat_dims(t: &Tensor, op: &'static str) -> Result<(usize, usize)> {
    match t.shape() {
        [r, c] => Ok((*r, *c)),
        s => Err(Error::dim(op, s, &[0, 0])),
    }
}

impl Tape {
    fn same_shape(&self, a: Var, b: Var, op: &'static str) -> Result<()> {
        if self.shape(a) != self.shape(b) {
            return Err(Error::dim(op, self.shape(a), self.shape(b)));
        }
        Ok(())
    }

    fn zip_map(&self, a: Var, b: Var, f: impl Fn(f64, f64) -> f64) -> Tensor {
        let (ta, tb) = (self.value(a), self.value(b));
        let data = ta
            .data()
            .iter()
            .zip(tb.data())
            .map(|(&x, &y)| f(x, y))
            .collect();
        Tensor::new(ta.shape().to_vec(), data).expect("same shape")
    }

    /// `[m×k] · [k×n] -> [m×n]`.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (m, k) = mat_dims(self.value(a), "matmul")?;
        let (k2, n) = mat_dims(self.value(b), "matmul")?;
        if k != k2 {
            return Err(Error::dim("matmul", self.shape(a), self.shape(b)));
        }
        let c = matmul_raw(self.value(a).data(), self.value(b).data(), m, k, n);
        let value = Tensor::new(vec![m, n], c)?;
        Ok(self.push(value, Op::MatMul(a, b), &[a, b]))
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        let (m, n) = mat_dims(self.value(a), "transpose")?;
        let src = self.value(a).data();
        let mut data = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                data[j * m + i] = src[i * n + j];
            }
        }
        let value = Tensor::new(vec![n, m], data)?;
        Ok(self.push(value, Op::Transpose(a), &[a]))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "add")?;
        let value = self.zip_map(a, b, |x, y| x + y);
        Ok(self.push(value, Op::Add(a, b), &[a, b]))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "sub")?;
        let value = self.zip_map(a, b, |x, y| x - y);
        Ok(self.push(value, Op::Sub(a, b), &[a, b]))
    }

    /// Elementwise (Hadamard) product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "mul")?;
        let value = self.zip_map(a, b, |x, y| x * y);
        Ok(self.push(value, Op::Mul(a, b), &[a, b]))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let value = self.value(a).map(|x| x * c);
        self.push(value, Op::Scale(a, c), &[a])
    }

    /// Adds a `[C]` bias to every row of `x`, where `C` is `x`'s last extent.
    pub fn add_row_bias(&mut self, x: Var, bias: Var) -> Result<Var> {
        let c = self.value(x).last_dim();
        if self.shape(bias) != [c] {
            return Err(Error::dim("add_row_bias", self.shape(x), self.shape(bias)));
        }
        let b = self.value(bias).data().to_vec();
        let mut value = self.value(x).clone();
        for row in value.data_mut().chunks_mut(c) {
            for (v, bv) in row.iter_mut().zip(&b) {
                *v += bv;
            }
        }
        Ok(self.push(value, Op::AddRowBias(x, bias), &[x, bias]))
    }

    /// `a + I` for square `a`.
    pub fn add_identity(&mut self, a: Var) -> Result<Var> {
        let (m, n) = mat_dims(self.value(a), "add_identity")?;
        if m != n {
            return Err(Error::dim("add_identity", self.shape(a), &[m, m]));
        }
        let mut value = self.value(a).clone();
        for i in 0..n {
            value.data_mut()[i * n + i] += 1.0;
        }
        Ok(self.push(value, Op::AddIdentity(a), &[a]))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let value = self.value(a).map(sigmoid);
        self.push(value, Op::Sigmoid(a), &[a])
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let value = self.value(a).map(libm::tanh);
        self.push(value, Op::Tanh(a), &[a])
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let value = self.value(a).map(|x| if x > 0.0 { x } else { 0.0 });
        self.push(value, Op::Relu(a), &[a])
    }

    /// Row-wise `softmax(x_row / scale)` with per-row max subtraction.
    /// Ties need no special handling: equal logits get equal mass.
    pub fn scaled_row_softmax(&mut self, x: Var, scale: f64) -> Result<Var> {
        if !(scale > 0.0) {
            return Err(Error::Config(alloc::format!(
                "softmax scale must be positive, got {scale}"
            )));
        }
        let (_, c) = mat_dims(self.value(x), "scaled_row_softmax")?;
        let mut value = self.value(x).clone();
        for row in value.data_mut().chunks_mut(c) {
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for v in row.iter_mut() {
                *v = libm::exp((*v - max) / scale);
                total += *v;
            }
            for v in row.iter_mut() {
                *v /= total;
            }
        }
        Ok(self.push(value, Op::RowSoftmax { x, scale }, &[x]))
    }

    /// Column-wise max over the rows of `[T×C]`, giving `[C]`. Ties resolve to
    /// the lowest row index, which also receives the gradient.
    pub fn max_pool_over_rows(&mut self, q: Var) -> Result<Var> {
        let (t, c) = mat_dims(self.value(q), "max_pool_over_rows")?;
        if t == 0 {
            return Err(Error::Empty {
                op: "max_pool_over_rows",
            });
        }
        let src = self.value(q).data();
        let mut out = src[..c].to_vec();
        let mut argmax = vec![0usize; c];
        for r in 1..t {
            for j in 0..c {
                let v = src[r * c + j];
                if v > out[j] {
                    out[j] = v;
                    argmax[j] = r;
                }
            }
        }
        let value = Tensor::new(vec![c], out)?;
        Ok(self.push(value, Op::MaxPoolRows { x: q, argmax }, &[q]))
    }

    /// Concatenates along the last axis. All parts must agree on every other
    /// extent.
    pub fn concat_channels(&mut self, parts: &[Var]) -> Result<Var> {
        let first = *parts.first().ok_or(Error::Empty {
            op: "concat_channels",
        })?;
        let lead = self.shape(first)[..self.shape(first).len() - 1].to_vec();
        for &p in parts {
            let s = self.shape(p);
            if s.len() != lead.len() + 1 || s[..s.len() - 1] != lead[..] {
                return Err(Error::dim("concat_channels", self.shape(first), s));
            }
        }
        let widths: Vec<usize> = parts.iter().map(|&p| self.value(p).last_dim()).collect();
        let total: usize = widths.iter().sum();
        let rows = self.value(first).rows();
        let mut data = Vec::with_capacity(rows * total);
        for r in 0..rows {
            for (&p, &w) in parts.iter().zip(&widths) {
                data.extend_from_slice(&self.value(p).data()[r * w..(r + 1) * w]);
            }
        }
        let mut shape = lead;
        shape.push(total);
        let value = Tensor::new(shape, data)?;
        Ok(self.push(value, Op::ConcatLast(parts.to_vec()), parts))
    }

    /// Stacks 2-D parts with equal column counts along the first axis.
    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var> {
        let first = *parts.first().ok_or(Error::Empty { op: "concat_rows" })?;
        let (_, c) = mat_dims(self.value(first), "concat_rows")?;
        let mut rows = 0;
        let mut data = Vec::new();
        for &p in parts {
            let (r, pc) = mat_dims(self.value(p), "concat_rows")?;
            if pc != c {
                return Err(Error::dim("concat_rows", self.shape(first), self.shape(p)));
            }
            rows += r;
            data.extend_from_slice(self.value(p).data());
        }
        let value = Tensor::new(vec![rows, c], data)?;
        Ok(self.push(value, Op::ConcatRows(parts.to_vec()), parts))
    }

    /// Channels `[start, start + len)` of the last axis.
    pub fn slice_channels(&mut self, x: Var, start: usize, len: usize) -> Result<Var> {
        let c = self.value(x).last_dim();
        if len == 0 || start + len > c {
            return Err(Error::dim("slice_channels", self.shape(x), &[start, len]));
        }
        let data = self
            .value(x)
            .data()
            .chunks(c)
            .flat_map(|row| row[start..start + len].iter().copied())
            .collect();
        let mut shape = self.shape(x).to_vec();
        *shape.last_mut().unwrap() = len;
        let value = Tensor::new(shape, data)?;
        Ok(self.push(value, Op::SliceLast { x, start }, &[x]))
    }

    /// Row `row` of a 2-D tensor as a `[1×C]` tensor.
    pub fn select_row(&mut self, x: Var, row: usize) -> Result<Var> {
        let (r, c) = mat_dims(self.value(x), "select_row")?;
        if row >= r {
            return Err(Error::dim("select_row", self.shape(x), &[row]));
        }
        let value = Tensor::new(vec![1, c], self.value(x).row(row).to_vec())?;
        Ok(self.push(value, Op::SelectRow { x, row }, &[x]))
    }

    pub fn reshape(&mut self, x: Var, shape: &[usize]) -> Result<Var> {
        let value = self.value(x).clone().reshape(shape)?;
        Ok(self.push(value, Op::Reshape(x), &[x]))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.value(x).data().iter().sum();
        self.push(Tensor::scalar(s), Op::Sum(x), &[x])
    }

    pub fn mean(&mut self, x: Var) -> Var {
        let t = self.value(x);
        let s = t.data().iter().sum::<f64>() / t.numel() as f64;
        self.push(Tensor::scalar(s), Op::Mean(x), &[x])
    }

    /// Same-padded stride-1 cross-correlation. `x: [H×W×Cin]`,
    /// `w: [k×k×Cin×Cout]`, `b: [Cout]`, `k` odd.
    pub fn conv2d_same(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let value = conv2d_forward(self.value(x), self.value(w), self.value(b))?;
        Ok(self.push(value, Op::Conv2d { x, w, b }, &[x, w, b]))
    }

    /// Non-overlapping `factor×factor` average pooling of `[H×W×C]`.
    pub fn avg_pool(&mut self, x: Var, factor: usize) -> Result<Var> {
        let value = avg_pool_forward(self.value(x), factor)?;
        Ok(self.push(value, Op::AvgPool { x, factor }, &[x]))
    }

    /// Bilinear upsampling of `[H×W×C]` by an integer factor (half-pixel
    /// centers, edge clamped). Factor 1 is the identity.
    pub fn upsample_bilinear(&mut self, x: Var, factor: usize) -> Result<Var> {
        let value = upsample_forward(self.value(x), factor)?;
        Ok(self.push(value, Op::Upsample { x, factor }, &[x]))
    }

    /// Row lookup into a `[V×C]` table giving `[ids.len()×C]`.
    pub fn embed_rows(&mut self, table: Var, ids: &[usize]) -> Result<Var> {
        let (v, c) = mat_dims(self.value(table), "embed_rows")?;
        if ids.is_empty() {
            return Err(Error::Empty { op: "embed_rows" });
        }
        if let Some(&bad) = ids.iter().find(|&&i| i >= v) {
            return Err(Error::dim("embed_rows", self.shape(table), &[bad]));
        }
        let t = self.value(table);
        let data = ids.iter().flat_map(|&i| t.row(i).iter().copied()).collect();
        let value = Tensor::new(vec![ids.len(), c], data)?;
        Ok(self.push(
            value,
            Op::EmbedRows {
                table,
                ids: ids.to_vec(),
            },
            &[table],
        ))
    }

    /// Repeats a `[C]` vector into `[n×C]`.
    pub fn tile_rows(&mut self, x: Var, n: usize) -> Result<Var> {
        let t = self.value(x);
        if t.ndim() != 1 || n == 0 {
            return Err(Error::dim("tile_rows", t.shape(), &[n]));
        }
        let c = t.numel();
        let data = (0..n).flat_map(|_| t.data().iter().copied()).collect();
        let value = Tensor::new(vec![n, c], data)?;
        Ok(self.push(value, Op::TileRows(x), &[x]))
    }

    /// Mean binary cross-entropy on logits, in the stable form
    /// `max(l,0) - l*g + ln(1 + exp(-|l|))`.
    pub fn bce_with_logits(&mut self, logits: Var, target: &Tensor) -> Result<Var> {
        if self.shape(logits) != target.shape() {
            return Err(Error::dim(
                "bce_with_logits",
                self.shape(logits),
                target.shape(),
            ));
        }
        if target.data().iter().any(|&g| g != 0.0 && g != 1.0) {
            return Err(Error::Input("bce target must be binary".into()));
        }
        let l = self.value(logits).data();
        let n = l.len() as f64;
        let total: f64 = l
            .iter()
            .zip(target.data())
            .map(|(&l, &g)| l.max(0.0) - l * g + libm::log1p(libm::exp(-l.abs())))
            .sum();
        let value = Tensor::scalar(total / n);
        let op = Op::BceWithLogits {
            logits,
            target: target.data().to_vec(),
        };
        Ok(self.push(value, op, &[logits]))
    }

    /// Pushes the adjoint `g` of node `i` into its parents' adjoints.
    pub(super) fn propagate(&self, i: usize, g: &[f64], adj: &mut [Option<Vec<f64>>]) {
        let node = &self.nodes[i];
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (m, k) = (self.shape(*a)[0], self.shape(*a)[1]);
                let n = self.shape(*b)[1];
                if let Some(da) = self.adj_mut(adj, *a) {
                    // dA = dC · Bᵀ
                    matmul_a_bt_acc(g, self.value(*b).data(), da, m, n, k);
                }
                if let Some(db) = self.adj_mut(adj, *b) {
                    // dB = Aᵀ · dC
                    matmul_at_b_acc(self.value(*a).data(), g, db, m, k, n);
                }
            }
            Op::Transpose(a) => {
                let (m, n) = (self.shape(*a)[0], self.shape(*a)[1]);
                if let Some(da) = self.adj_mut(adj, *a) {
                    for i in 0..m {
                        for j in 0..n {
                            da[i * n + j] += g[j * m + i];
                        }
                    }
                }
            }
            Op::Add(a, b) => {
                for p in [*a, *b] {
                    if let Some(d) = self.adj_mut(adj, p) {
                        acc(d, g);
                    }
                }
            }
            Op::Sub(a, b) => {
                if let Some(d) = self.adj_mut(adj, *a) {
                    acc(d, g);
                }
                if let Some(d) = self.adj_mut(adj, *b) {
                    for (dv, gv) in d.iter_mut().zip(g) {
                        *dv -= gv;
                    }
                }
            }
            Op::Mul(a, b) => {
                let (va, vb) = (self.value(*a).data(), self.value(*b).data());
                if let Some(d) = self.adj_mut(adj, *a) {
                    for ((dv, gv), bv) in d.iter_mut().zip(g).zip(vb) {
                        *dv += gv * bv;
                    }
                }
                if let Some(d) = self.adj_mut(adj, *b) {
                    for ((dv, gv), av) in d.iter_mut().zip(g).zip(va) {
                        *dv += gv * av;
                    }
                }
            }
            Op::Scale(a, c) => {
                if let Some(d) = self.adj_mut(adj, *a) {
                    for (dv, gv) in d.iter_mut().zip(g) {
                        *dv += gv * c;
                    }
                }
            }
            Op::AddRowBias(x, b) => {
                if let Some(d) = self.adj_mut(adj, *x) {
                    acc(d, g);
                }
                let c = self.value(*b).numel();
                if let Some(d) = self.adj_mut(adj, *b) {
                    for row in g.chunks(c) {
                        acc(d, row);
                    }
                }
            }
            Op::AddIdentity(a) => {
                if let Some(d) = self.adj_mut(adj, *a) {
                    acc(d, g);
                }
            }
            Op::Sigmoid(a) => {
                let y = node.value.data();
                if let Some(d) = self.adj_mut(adj, *a) {
                    for ((dv, gv), yv) in d.iter_mut().zip(g).zip(y) {
                        *dv += gv * yv * (1.0 - yv);
                    }
                }
            }
            Op::Tanh(a) => {
                let y = node.value.data();
                if let Some(d) = self.adj_mut(adj, *a) {
                    for ((dv, gv), yv) in d.iter_mut().zip(g).zip(y) {
                        *dv += gv * (1.0 - yv * yv);
                    }
                }
            }
            Op::Relu(a) => {
                let x = self.value(*a).data();
                if let Some(d) = self.adj_mut(adj, *a) {
                    for ((dv, gv), xv) in d.iter_mut().zip(g).zip(x) {
                        if *xv > 0.0 {
                            *dv += gv;
                        }
                    }
                }
            }
            Op::RowSoftmax { x, scale } => {
                let c = node.value.last_dim();
                let y = node.value.data();
                if let Some(d) = self.adj_mut(adj, *x) {
                    for ((drow, grow), yrow) in d.chunks_mut(c).zip(g.chunks(c)).zip(y.chunks(c)) {
                        let dot: f64 = grow.iter().zip(yrow).map(|(a, b)| a * b).sum();
                        for ((dv, gv), yv) in drow.iter_mut().zip(grow).zip(yrow) {
                            *dv += yv * (gv - dot) / scale;
                        }
                    }
                }
            }
            Op::MaxPoolRows { x, argmax } => {
                let c = argmax.len();
                if let Some(d) = self.adj_mut(adj, *x) {
                    for (j, &r) in argmax.iter().enumerate() {
                        d[r * c + j] += g[j];
                    }
                }
            }
            Op::ConcatLast(parts) => {
                let total = node.value.last_dim();
                let rows = node.value.rows();
                let mut offset = 0;
                for &p in parts {
                    let w = self.value(p).last_dim();
                    if let Some(d) = self.adj_mut(adj, p) {
                        for r in 0..rows {
                            acc(
                                &mut d[r * w..(r + 1) * w],
                                &g[r * total + offset..r * total + offset + w],
                            );
                        }
                    }
                    offset += w;
                }
            }
            Op::ConcatRows(parts) => {
                let mut offset = 0;
                for &p in parts {
                    let n = self.value(p).numel();
                    if let Some(d) = self.adj_mut(adj, p) {
                        acc(d, &g[offset..offset + n]);
                    }
                    offset += n;
                }
            }
            Op::SliceLast { x, start } => {
                let len = node.value.last_dim();
                let c = self.value(*x).last_dim();
                if let Some(d) = self.adj_mut(adj, *x) {
                    for (drow, grow) in d.chunks_mut(c).zip(g.chunks(len)) {
                        acc(&mut drow[*start..start + len], grow);
                    }
                }
            }
            Op::SelectRow { x, row } => {
                let c = node.value.last_dim();
                if let Some(d) = self.adj_mut(adj, *x) {
                    acc(&mut d[row * c..(row + 1) * c], g);
                }
            }
            Op::Reshape(x) => {
                if let Some(d) = self.adj_mut(adj, *x) {
                    acc(d, g);
                }
            }
            Op::Sum(x) => {
                if let Some(d) = self.adj_mut(adj, *x) {
                    for dv in d.iter_mut() {
                        *dv += g[0];
                    }
                }
            }
            Op::Mean(x) => {
                let n = self.value(*x).numel() as f64;
                if let Some(d) = self.adj_mut(adj, *x) {
                    for dv in d.iter_mut() {
                        *dv += g[0] / n;
                    }
                }
            }
            Op::Conv2d { x, w, b } => {
                let xv = self.value(*x);
                let wv = self.value(*w);
                let needs = [
                    self.nodes[x.0].requires_grad,
                    self.nodes[w.0].requires_grad,
                    self.nodes[b.0].requires_grad,
                ];
                let (dx, dw, db) = conv2d_backward(xv, wv, g, needs);
                if let (Some(d), Some(src)) = (self.adj_mut(adj, *x), dx) {
                    acc(d, &src);
                }
                if let (Some(d), Some(src)) = (self.adj_mut(adj, *w), dw) {
                    acc(d, &src);
                }
                if let (Some(d), Some(src)) = (self.adj_mut(adj, *b), db) {
                    acc(d, &src);
                }
            }
            Op::AvgPool { x, factor } => {
                let shape = self.shape(*x).to_vec();
                if let Some(d) = self.adj_mut(adj, *x) {
                    avg_pool_backward(&shape, *factor, g, d);
                }
            }
            Op::Upsample { x, factor } => {
                let shape = self.shape(*x).to_vec();
                if let Some(d) = self.adj_mut(adj, *x) {
                    upsample_backward(&shape, *factor, g, d);
                }
            }
            Op::EmbedRows { table, ids } => {
                let c = node.value.last_dim();
                if let Some(d) = self.adj_mut(adj, *table) {
                    for (r, &id) in ids.iter().enumerate() {
                        acc(&mut d[id * c..(id + 1) * c], &g[r * c..(r + 1) * c]);
                    }
                }
            }
            Op::TileRows(x) => {
                let c = self.value(*x).numel();
                if let Some(d) = self.adj_mut(adj, *x) {
                    for row in g.chunks(c) {
                        acc(d, row);
                    }
                }
            }
            Op::BceWithLogits { logits, target } => {
                let l = self.value(*logits).data();
                let n = l.len() as f64;
                if let Some(d) = self.adj_mut(adj, *logits) {
                    for ((dv, lv), tv) in d.iter_mut().zip(l).zip(target) {
                        *dv += g[0] * (sigmoid(*lv) - tv) / n;
                    }
                }
            }
        }
    }
}

fn acc(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}
