//! Dense multilayer perceptrons with reverse-mode gradients and Adam.
//!
//! Parameters live in one flat [`ParamTensor`] per network so optimizers,
//! soft target updates and checkpoints treat every network the same way.
//! Forward passes run over row-major batches and record a [`Tape`] that
//! [`backward_batch`] consumes. Backward returns the gradient with respect
//! to the network input so callers can chain through several networks.

use std::io::{Read, Write};
use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Silu,
    Tanh,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Silu => x / (1.0 + (-x).exp()),
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
        }
    }

    /// Derivative given the pre-activation `x` and activation `y`.
    #[inline]
    fn derivative(self, x: f64, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Silu => {
                let s = 1.0 / (1.0 + (-x).exp());
                s * (1.0 + x * (1.0 - s))
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Identity => 1.0,
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "silu" => Ok(Activation::Silu),
            "tanh" => Ok(Activation::Tanh),
            "identity" => Ok(Activation::Identity),
            other => Err(Error::Format(format!("unknown activation {other:?}"))),
        }
    }
}

/// Layer widths and activations of a fully connected network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSpec {
    widths: Vec<usize>,
    hidden: Vec<Activation>,
    output: Activation,
}

impl MlpSpec {
    /// Same activation on every hidden layer.
    pub fn new(widths: Vec<usize>, hidden: Activation, output: Activation) -> Result<Self> {
        let n_hidden = widths.len().saturating_sub(2);
        Self::with_activations(widths, vec![hidden; n_hidden], output)
    }

    pub fn with_activations(
        widths: Vec<usize>,
        hidden: Vec<Activation>,
        output: Activation,
    ) -> Result<Self> {
        if widths.len() < 2 {
            return Err(Error::config("mlp.widths", "need at least input and output widths"));
        }
        if widths.contains(&0) {
            return Err(Error::config("mlp.widths", "widths must be positive"));
        }
        if hidden.len() != widths.len() - 2 {
            return Err(Error::config(
                "mlp.activations",
                format!("{} hidden activations for {} hidden layers", hidden.len(), widths.len() - 2),
            ));
        }
        Ok(Self {
            widths,
            hidden,
            output,
        })
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.widths.last().unwrap()
    }

    pub fn num_layers(&self) -> usize {
        self.widths.len() - 1
    }

    pub fn activation(&self, layer: usize) -> Activation {
        if layer + 1 == self.num_layers() {
            self.output
        } else {
            self.hidden[layer]
        }
    }

    pub fn param_count(&self) -> usize {
        self.widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }
}

/// Location of one dense layer inside the flat parameter vector. Weights
/// are stored row-major as `rows × cols` = `fan_out × fan_in`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerShape {
    pub rows: usize,
    pub cols: usize,
    pub weight_offset: usize,
    pub bias_offset: usize,
}

static NEXT_TENSOR_ID: AtomicU64 = AtomicU64::new(1);

fn next_id() -> u64 {
    NEXT_TENSOR_ID.fetch_add(1, Ordering::Relaxed)
}

/// Flat parameter storage with a matching gradient buffer.
///
/// Every mutation of the values bumps a version counter; tapes remember the
/// identity and version they were recorded against so a backward pass over
/// stale parameters is rejected.
#[derive(Debug)]
pub struct ParamTensor {
    values: Vec<f64>,
    grads: Vec<f64>,
    layers: Vec<LayerShape>,
    id: u64,
    version: u64,
}

impl Clone for ParamTensor {
    fn clone(&self) -> Self {
        Self {
            values: self.values.clone(),
            grads: self.grads.clone(),
            layers: self.layers.clone(),
            id: next_id(),
            version: 0,
        }
    }
}

impl PartialEq for ParamTensor {
    fn eq(&self, other: &Self) -> bool {
        self.values == other.values && self.layers == other.layers
    }
}

impl ParamTensor {
    pub fn zeros(spec: &MlpSpec) -> Self {
        let mut offset = 0;
        let layers = spec
            .widths
            .windows(2)
            .map(|w| {
                let shape = LayerShape {
                    rows: w[1],
                    cols: w[0],
                    weight_offset: offset,
                    bias_offset: offset + w[0] * w[1],
                };
                offset += w[0] * w[1] + w[1];
                shape
            })
            .collect();
        Self {
            values: vec![0.0; offset],
            grads: vec![0.0; offset],
            layers,
            id: next_id(),
            version: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn layers(&self) -> &[LayerShape] {
        &self.layers
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        self.version += 1;
        &mut self.values
    }

    pub fn grads(&self) -> &[f64] {
        &self.grads
    }

    pub fn grads_mut(&mut self) -> &mut [f64] {
        &mut self.grads
    }

    pub fn zero_grads(&mut self) {
        self.grads.fill(0.0);
    }

    pub fn weights(&self, layer: usize) -> &[f64] {
        let l = self.layers[layer];
        &self.values[l.weight_offset..l.bias_offset]
    }

    pub fn bias(&self, layer: usize) -> &[f64] {
        let l = self.layers[layer];
        &self.values[l.bias_offset..l.bias_offset + l.rows]
    }

    pub fn grad_norm(&self) -> f64 {
        self.grads.iter().map(|g| g * g).sum::<f64>().sqrt()
    }

    /// Rescales gradients so their global L2 norm is at most `max_norm`.
    /// Returns the norm before clipping.
    pub fn clip_grad_norm(&mut self, max_norm: f64) -> f64 {
        let norm = self.grad_norm();
        if norm > max_norm && norm > 0.0 {
            let s = max_norm / norm;
            self.grads.iter_mut().for_each(|g| *g *= s);
        }
        norm
    }

    fn check_shape(&self, other: &ParamTensor) -> Result<()> {
        if self.layers != other.layers {
            return Err(Error::Usage("parameter tensors have different shapes".into()));
        }
        Ok(())
    }

    pub fn copy_from(&mut self, other: &ParamTensor) -> Result<()> {
        self.check_shape(other)?;
        self.values_mut().copy_from_slice(&other.values);
        Ok(())
    }

    /// Polyak averaging `θ' ← τθ + (1−τ)θ'` with `self` as the target.
    pub fn soft_update_from(&mut self, online: &ParamTensor, tau: f64) -> Result<()> {
        self.check_shape(online)?;
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::Domain(format!("tau must lie in [0, 1], got {tau}")));
        }
        for (t, &o) in self.values_mut().iter_mut().zip(&online.values) {
            *t = tau * o + (1.0 - tau) * *t;
        }
        Ok(())
    }

    fn matches(&self, spec: &MlpSpec) -> bool {
        self.layers.len() == spec.num_layers()
            && self
                .layers
                .iter()
                .zip(spec.widths.windows(2))
                .all(|(l, w)| l.cols == w[0] && l.rows == w[1])
    }
}

/// Row-major dense matrix; rows are batch entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Usage(format!(
                "{} values for a {rows}×{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.as_ref().len() != cols {
                return Err(Error::Usage("ragged rows".into()));
            }
            data.extend_from_slice(r.as_ref());
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Concatenates matrices with equal row counts side by side.
    pub fn hconcat(parts: &[&Matrix]) -> Result<Matrix> {
        let rows = parts.first().map_or(0, |m| m.rows);
        if parts.iter().any(|m| m.rows != rows) {
            return Err(Error::Usage("row count mismatch in hconcat".into()));
        }
        let cols = parts.iter().map(|m| m.cols).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for m in parts {
                data.extend_from_slice(m.row(r));
            }
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Columns `start..end` as a new matrix.
    pub fn columns(&self, start: usize, end: usize) -> Matrix {
        let mut data = Vec::with_capacity(self.rows * (end - start));
        for r in 0..self.rows {
            data.extend_from_slice(&self.row(r)[start..end]);
        }
        Matrix {
            rows: self.rows,
            cols: end - start,
            data,
        }
    }
}

/// Intermediate values of one forward pass.
#[derive(Debug, Clone)]
pub struct Tape {
    tensor_id: u64,
    version: u64,
    /// Input of every layer; `inputs[0]` is the network input.
    inputs: Vec<Matrix>,
    pre: Vec<Matrix>,
    output: Matrix,
}

impl Tape {
    pub fn output(&self) -> &Matrix {
        &self.output
    }

    pub fn batch(&self) -> usize {
        self.output.rows
    }
}

// C (m×n) = alpha · A (m×k) · B (k×n) + beta · C with explicit strides.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    rsa: usize,
    csa: usize,
    b: &[f64],
    rsb: usize,
    csb: usize,
    beta: f64,
    c: &mut [f64],
) {
    if m == 0 || n == 0 {
        return;
    }
    assert!(k == 0 || (m - 1) * rsa + (k - 1) * csa < a.len());
    assert!(k == 0 || (k - 1) * rsb + (n - 1) * csb < b.len());
    assert!((m - 1) * n + (n - 1) < c.len());
    // SAFETY: the asserts above keep every strided access inside the slices,
    // and `c` is a unique borrow disjoint from `a` and `b`.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Glorot-uniform weights, zero biases; deterministic per seed.
pub fn mlp_init(spec: &MlpSpec, seed: u64) -> ParamTensor {
    let mut params = ParamTensor::zeros(spec);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layers = params.layers.clone();
    let values = params.values_mut();
    for l in layers {
        let bound = (6.0 / (l.rows + l.cols) as f64).sqrt();
        for w in &mut values[l.weight_offset..l.bias_offset] {
            *w = rng.random_range(-bound..=bound);
        }
    }
    params
}

/// Batched forward pass; rows of `input` are independent samples.
pub fn forward_batch(params: &ParamTensor, spec: &MlpSpec, input: &Matrix) -> Result<(Matrix, Tape)> {
    if !params.matches(spec) {
        return Err(Error::Usage("parameters do not match the network spec".into()));
    }
    if input.cols != spec.input_dim() {
        return Err(Error::Usage(format!(
            "input width {} does not match network input {}",
            input.cols,
            spec.input_dim()
        )));
    }
    let batch = input.rows;
    let mut inputs = Vec::with_capacity(spec.num_layers());
    let mut pre = Vec::with_capacity(spec.num_layers());
    let mut x = input.clone();
    for (i, l) in params.layers.iter().enumerate() {
        let mut z = Matrix::zeros(batch, l.rows);
        for r in 0..batch {
            z.row_mut(r).copy_from_slice(params.bias(i));
        }
        // Z = X · Wᵀ + b
        gemm(
            batch,
            l.cols,
            l.rows,
            &x.data,
            l.cols,
            1,
            params.weights(i),
            1,
            l.cols,
            1.0,
            &mut z.data,
        );
        let act = spec.activation(i);
        let y = Matrix {
            rows: batch,
            cols: l.rows,
            data: z.data.iter().map(|&v| act.apply(v)).collect(),
        };
        inputs.push(x);
        pre.push(z);
        x = y;
    }
    let tape = Tape {
        tensor_id: params.id,
        version: params.version,
        inputs,
        pre,
        output: x.clone(),
    };
    Ok((x, tape))
}

/// Single-sample forward pass.
pub fn mlp_forward(params: &ParamTensor, spec: &MlpSpec, input: &[f64]) -> Result<(Vec<f64>, Tape)> {
    let (out, tape) = forward_batch(params, spec, &Matrix::from_vec(1, input.len(), input.to_vec())?)?;
    Ok((out.data, tape))
}

fn backward_impl(
    params: &ParamTensor,
    spec: &MlpSpec,
    tape: &Tape,
    output_grad: &Matrix,
    mut grads: Option<&mut [f64]>,
) -> Result<Matrix> {
    if tape.tensor_id != params.id || tape.version != params.version {
        return Err(Error::Usage("tape was recorded against different or since-modified parameters".into()));
    }
    if !params.matches(spec) || tape.pre.len() != spec.num_layers() {
        return Err(Error::Usage("tape does not match the network spec".into()));
    }
    if output_grad.rows != tape.batch() || output_grad.cols != spec.output_dim() {
        return Err(Error::Usage("output gradient shape does not match the tape".into()));
    }
    let batch = tape.batch();
    let mut upstream = output_grad.clone();
    for i in (0..spec.num_layers()).rev() {
        let l = params.layers[i];
        let act = spec.activation(i);
        let z = &tape.pre[i];
        let y = if i + 1 == spec.num_layers() {
            &tape.output
        } else {
            &tape.inputs[i + 1]
        };
        // dZ = dY ⊙ f'(Z)
        let mut dz = upstream;
        if act != Activation::Identity {
            for ((g, &zv), &yv) in dz.data.iter_mut().zip(&z.data).zip(&y.data) {
                *g *= act.derivative(zv, yv);
            }
        }
        if let Some(grads) = grads.as_deref_mut() {
            // dW += dZᵀ · X
            gemm(
                l.rows,
                batch,
                l.cols,
                &dz.data,
                1,
                l.rows,
                &tape.inputs[i].data,
                l.cols,
                1,
                1.0,
                &mut grads[l.weight_offset..l.bias_offset],
            );
            let db = &mut grads[l.bias_offset..l.bias_offset + l.rows];
            for r in 0..batch {
                for (d, g) in db.iter_mut().zip(dz.row(r)) {
                    *d += g;
                }
            }
        }
        // dX = dZ · W
        let mut dx = Matrix::zeros(batch, l.cols);
        gemm(
            batch,
            l.rows,
            l.cols,
            &dz.data,
            l.rows,
            1,
            params.weights(i),
            l.cols,
            1,
            0.0,
            &mut dx.data,
        );
        upstream = dx;
    }
    Ok(upstream)
}

/// Batched reverse pass. Accumulates parameter gradients into
/// `params.grads` and returns the gradient with respect to the input.
pub fn backward_batch(
    params: &mut ParamTensor,
    spec: &MlpSpec,
    tape: &Tape,
    output_grad: &Matrix,
) -> Result<Matrix> {
    let mut grads = std::mem::take(&mut params.grads);
    let result = backward_impl(params, spec, tape, output_grad, Some(&mut grads));
    params.grads = grads;
    result
}

/// Input gradient only; parameter gradients are left untouched.
pub fn input_gradient_batch(
    params: &ParamTensor,
    spec: &MlpSpec,
    tape: &Tape,
    output_grad: &Matrix,
) -> Result<Matrix> {
    backward_impl(params, spec, tape, output_grad, None)
}

pub fn mlp_backward(
    params: &mut ParamTensor,
    spec: &MlpSpec,
    tape: &Tape,
    output_grad: &[f64],
) -> Result<Vec<f64>> {
    let g = Matrix::from_vec(1, output_grad.len(), output_grad.to_vec())?;
    Ok(backward_batch(params, spec, tape, &g)?.data)
}

/// Adam optimizer state for one parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    pub step_count: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(len: usize, lr: f64) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            step_count: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.m
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.v
    }
}

/// One bias-corrected Adam step using the gradients currently held in
/// `params`. Gradients are left for the caller to clear.
pub fn adam_step(params: &mut ParamTensor, adam: &mut AdamState) -> Result<()> {
    if adam.m.len() != params.len() {
        return Err(Error::Usage("optimizer state does not match the parameters".into()));
    }
    adam.step_count += 1;
    let t = adam.step_count as i32;
    let c1 = 1.0 - adam.beta1.powi(t);
    let c2 = 1.0 - adam.beta2.powi(t);
    let (b1, b2, lr, eps) = (adam.beta1, adam.beta2, adam.lr, adam.eps);
    let grads = std::mem::take(&mut params.grads);
    for (((p, &g), m), v) in params
        .values_mut()
        .iter_mut()
        .zip(&grads)
        .zip(adam.m.iter_mut())
        .zip(adam.v.iter_mut())
    {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= lr * m_hat / (v_hat.sqrt() + eps);
    }
    params.grads = grads;
    Ok(())
}

/// Options for [`finite_diff_check`].
#[derive(Debug, Clone, Copy)]
pub struct FiniteDiffOptions {
    /// Central-difference step.
    pub step: f64,
    /// Number of parameter coordinates to probe (all if fewer exist).
    pub samples: usize,
    /// Absolute floor of the relative-error denominator.
    pub floor: f64,
    pub seed: u64,
}

impl Default for FiniteDiffOptions {
    fn default() -> Self {
        Self {
            step: 1e-5,
            samples: 128,
            floor: 1e-6,
            seed: 0,
        }
    }
}

/// Largest relative error between analytic parameter gradients and
/// central differences of `loss(forward(input))`.
///
/// `loss` returns the scalar loss and its gradient with respect to the
/// network output. The relative error of one coordinate is
/// `|a − n| / max(|a|, |n|, floor)`.
pub fn finite_diff_check<F>(
    params: &ParamTensor,
    spec: &MlpSpec,
    input: &[f64],
    loss: F,
    opts: FiniteDiffOptions,
) -> Result<f64>
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let mut work = params.clone();
    work.zero_grads();
    let (out, tape) = mlp_forward(&work, spec, input)?;
    let (_, dout) = loss(&out);
    mlp_backward(&mut work, spec, &tape, &dout)?;
    let analytic = work.grads().to_vec();

    let n = work.len();
    let coords: Vec<usize> = if opts.samples >= n {
        (0..n).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rand::seq::index::sample(&mut rng, n, opts.samples).into_vec()
    };
    let mut worst = 0.0f64;
    for i in coords {
        let orig = work.values()[i];
        work.values_mut()[i] = orig + opts.step;
        let up = loss(&mlp_forward(&work, spec, input)?.0).0;
        work.values_mut()[i] = orig - opts.step;
        let down = loss(&mlp_forward(&work, spec, input)?.0).0;
        work.values_mut()[i] = orig;
        let numeric = (up - down) / (2.0 * opts.step);
        let a = analytic[i];
        let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(opts.floor);
        worst = worst.max(err);
    }
    Ok(worst)
}

const BLOB_MAGIC: &[u8] = b"LYAPGDM-PARAMS 1\n";

/// JSON header line of a parameter blob.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlobHeader {
    pub spec: MlpSpec,
    pub seed: u64,
    pub count: usize,
}

/// Writes `magic`, one JSON header line, then `count` little-endian f64.
pub fn save_params<W: Write>(mut w: W, params: &ParamTensor, spec: &MlpSpec, seed: u64) -> std::io::Result<()> {
    let header = BlobHeader {
        spec: spec.clone(),
        seed,
        count: params.len(),
    };
    w.write_all(BLOB_MAGIC)?;
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    for v in params.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()
}

pub fn load_params<R: Read>(mut r: R) -> Result<(BlobHeader, ParamTensor)> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)
        .map_err(|e| Error::Format(format!("read failed: {e}")))?;
    let rest = bytes
        .strip_prefix(BLOB_MAGIC)
        .ok_or_else(|| Error::Format("missing parameter blob magic".into()))?;
    let nl = rest
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::Format("unterminated header".into()))?;
    let header: BlobHeader =
        serde_json::from_slice(&rest[..nl]).map_err(|e| Error::Format(format!("bad header: {e}")))?;
    let spec = MlpSpec::with_activations(header.spec.widths.clone(), header.spec.hidden.clone(), header.spec.output)
        .map_err(|e| Error::Format(e.to_string()))?;
    let body = &rest[nl + 1..];
    if header.count != spec.param_count() || body.len() != header.count * 8 {
        return Err(Error::Format(format!(
            "expected {} parameters, header says {}, body holds {} bytes",
            spec.param_count(),
            header.count,
            body.len()
        )));
    }
    let mut params = ParamTensor::zeros(&spec);
    for (v, chunk) in params.values_mut().iter_mut().zip(body.chunks_exact(8)) {
        *v = f64::from_le_bytes(chunk.try_into().unwrap());
    }
    Ok((header, params))
}
