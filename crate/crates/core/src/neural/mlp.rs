use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::scalar::Real;

/// One dense layer inside the flat parameter vector. Weights are stored
/// input-major: `w[i * n_out + j]` connects input `i` to output `j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub n_in: usize,
    pub n_out: usize,
    pub w_offset: usize,
    pub b_offset: usize,
    /// ELU after the affine map.
    pub elu: bool,
}

impl DenseLayer {
    pub fn n_params(&self) -> usize {
        self.n_in * self.n_out + self.n_out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<DenseLayer>,
}

/// Activations of a batched forward pass, each stored `batch x width`
/// row-major.
#[derive(Debug, Clone, Default)]
pub struct MlpBatchCache<T> {
    pub batch: usize,
    pub acts: Vec<Vec<T>>,
}

impl<T: Real> MlpBatchCache<T> {
    pub fn output(&self) -> &[T] {
        self.acts.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Activations of one forward pass: `acts[0]` is the input, `acts[k + 1]` the
/// output of layer `k`.
#[derive(Debug, Clone, Default)]
pub struct MlpCache<T> {
    pub acts: Vec<Vec<T>>,
}

impl<T: Real> MlpCache<T> {
    pub fn output(&self) -> &[T] {
        self.acts.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

#[inline]
fn elu<T: Real>(z: T) -> T {
    if z > T::zero() {
        z
    } else {
        z.exp_m1()
    }
}

/// ELU derivative expressed through its output.
#[inline]
fn elu_grad_from_output<T: Real>(y: T) -> T {
    if y > T::zero() {
        T::one()
    } else {
        y + T::one()
    }
}

impl Mlp {
    /// Lays out consecutive layers `sizes[0] -> sizes[1] -> ...` starting at
    /// `*offset`, advancing it past the new parameters.
    pub fn new(sizes: &[usize], elu_on_output: bool, offset: &mut usize) -> Mlp {
        assert!(sizes.len() >= 2, "an MLP needs input and output sizes");
        let n = sizes.len() - 1;
        let layers = (0..n)
            .map(|k| {
                let (n_in, n_out) = (sizes[k], sizes[k + 1]);
                let w_offset = *offset;
                let b_offset = w_offset + n_in * n_out;
                *offset = b_offset + n_out;
                DenseLayer { n_in, n_out, w_offset, b_offset, elu: k + 1 < n || elu_on_output }
            })
            .collect();
        Mlp { layers }
    }

    pub fn n_in(&self) -> usize {
        self.layers[0].n_in
    }

    pub fn n_out(&self) -> usize {
        self.layers.last().expect("non-empty").n_out
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(DenseLayer::n_params).sum()
    }

    pub fn forward<T: Real>(&self, params: &[T], input: Vec<T>) -> MlpCache<T> {
        debug_assert_eq!(input.len(), self.n_in());
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(input);
        for layer in &self.layers {
            let x = acts.last().expect("input present");
            let w = &params[layer.w_offset..layer.w_offset + layer.n_in * layer.n_out];
            let mut out = params[layer.b_offset..layer.b_offset + layer.n_out].to_vec();
            for (i, &xi) in x.iter().enumerate() {
                if xi == T::zero() {
                    continue;
                }
                let row = &w[i * layer.n_out..(i + 1) * layer.n_out];
                for (o, &wij) in out.iter_mut().zip(row) {
                    *o += wij * xi;
                }
            }
            if layer.elu {
                for o in out.iter_mut() {
                    *o = elu(*o);
                }
            }
            acts.push(out);
        }
        MlpCache { acts }
    }

    /// Accumulates parameter gradients into `grad` given `d_out`, the loss
    /// gradient at the network output. Returns the gradient at the input when
    /// `want_input` is set.
    pub fn backward<T: Real>(
        &self,
        params: &[T],
        cache: &MlpCache<T>,
        d_out: &[T],
        grad: &mut [T],
        want_input: bool,
    ) -> Option<Vec<T>> {
        let mut delta = d_out.to_vec();
        for (k, layer) in self.layers.iter().enumerate().rev() {
            let y = &cache.acts[k + 1];
            if layer.elu {
                for (d, &yj) in delta.iter_mut().zip(y) {
                    *d *= elu_grad_from_output(yj);
                }
            }
            let x = &cache.acts[k];
            for (g, &d) in grad[layer.b_offset..layer.b_offset + layer.n_out].iter_mut().zip(&delta) {
                *g += d;
            }
            let w = &params[layer.w_offset..layer.w_offset + layer.n_in * layer.n_out];
            let gw = &mut grad[layer.w_offset..layer.w_offset + layer.n_in * layer.n_out];
            for (i, &xi) in x.iter().enumerate() {
                if xi == T::zero() {
                    continue;
                }
                let grow = &mut gw[i * layer.n_out..(i + 1) * layer.n_out];
                for (g, &d) in grow.iter_mut().zip(&delta) {
                    *g += xi * d;
                }
            }
            if k == 0 && !want_input {
                return None;
            }
            let mut d_in = vec![T::zero(); layer.n_in];
            for (i, di) in d_in.iter_mut().enumerate() {
                let row = &w[i * layer.n_out..(i + 1) * layer.n_out];
                *di = dot(row, &delta);
            }
            delta = d_in;
        }
        Some(delta)
    }

    /// Forward pass over `batch` inputs stored row-major in `input`.
    pub fn forward_batch<T: Real>(&self, params: &[T], input: Vec<T>, batch: usize) -> MlpBatchCache<T> {
        debug_assert_eq!(input.len(), batch * self.n_in());
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(input);
        for layer in &self.layers {
            let x = acts.last().expect("input present");
            let bias = &params[layer.b_offset..layer.b_offset + layer.n_out];
            let mut out: Vec<T> = bias.iter().copied().cycle().take(batch * layer.n_out).collect();
            if batch > 0 {
                let w = &params[layer.w_offset..layer.w_offset + layer.n_in * layer.n_out];
                // out (batch x n_out) += x (batch x n_in) . w (n_in x n_out)
                unsafe {
                    T::gemm(
                        batch,
                        layer.n_in,
                        layer.n_out,
                        T::one(),
                        x.as_ptr(),
                        layer.n_in as isize,
                        1,
                        w.as_ptr(),
                        layer.n_out as isize,
                        1,
                        T::one(),
                        out.as_mut_ptr(),
                        layer.n_out as isize,
                        1,
                    );
                }
            }
            if layer.elu {
                for o in out.iter_mut() {
                    *o = elu(*o);
                }
            }
            acts.push(out);
        }
        MlpBatchCache { batch, acts }
    }

    /// Batched counterpart of [`Mlp::backward`]; `d_out` is `batch x n_out`.
    /// Gradients are summed over the batch.
    pub fn backward_batch<T: Real>(
        &self,
        params: &[T],
        cache: &MlpBatchCache<T>,
        d_out: Vec<T>,
        grad: &mut [T],
        want_input: bool,
    ) -> Option<Vec<T>> {
        let batch = cache.batch;
        let mut delta = d_out;
        for (k, layer) in self.layers.iter().enumerate().rev() {
            let (n_in, n_out) = (layer.n_in, layer.n_out);
            if layer.elu {
                for (d, &y) in delta.iter_mut().zip(&cache.acts[k + 1]) {
                    *d *= elu_grad_from_output(y);
                }
            }
            if batch == 0 {
                return want_input.then(Vec::new);
            }
            let gb = &mut grad[layer.b_offset..layer.b_offset + n_out];
            for row in delta.chunks_exact(n_out) {
                for (g, &d) in gb.iter_mut().zip(row) {
                    *g += d;
                }
            }
            let x = &cache.acts[k];
            let w = &params[layer.w_offset..layer.w_offset + n_in * n_out];
            let gw = &mut grad[layer.w_offset..layer.w_offset + n_in * n_out];
            // gw (n_in x n_out) += x^T (n_in x batch) . delta (batch x n_out)
            unsafe {
                T::gemm(
                    n_in,
                    batch,
                    n_out,
                    T::one(),
                    x.as_ptr(),
                    1,
                    n_in as isize,
                    delta.as_ptr(),
                    n_out as isize,
                    1,
                    T::one(),
                    gw.as_mut_ptr(),
                    n_out as isize,
                    1,
                );
            }
            if k == 0 && !want_input {
                return None;
            }
            // d_in (batch x n_in) = delta (batch x n_out) . w^T (n_out x n_in)
            let mut d_in = vec![T::zero(); batch * n_in];
            unsafe {
                T::gemm(
                    batch,
                    n_out,
                    n_in,
                    T::one(),
                    delta.as_ptr(),
                    n_out as isize,
                    1,
                    w.as_ptr(),
                    1,
                    n_out as isize,
                    T::zero(),
                    d_in.as_mut_ptr(),
                    n_in as isize,
                    1,
                );
            }
            delta = d_in;
        }
        Some(delta)
    }

    /// Orthogonal initialisation with `hidden_gain` on hidden layers and
    /// `output_gain` on the last layer; biases start at zero.
    pub fn init<T: Real, R: Rng + ?Sized>(&self, params: &mut [T], hidden_gain: f64, output_gain: f64, rng: &mut R) {
        let last = self.layers.len() - 1;
        for (k, layer) in self.layers.iter().enumerate() {
            let gain = if k == last { output_gain } else { hidden_gain };
            let w = orthogonal(layer.n_in, layer.n_out, rng);
            for (p, v) in params[layer.w_offset..layer.w_offset + layer.n_in * layer.n_out].iter_mut().zip(w) {
                *p = T::from_f64(gain * v);
            }
            for p in &mut params[layer.b_offset..layer.b_offset + layer.n_out] {
                *p = T::zero();
            }
        }
    }
}

/// Four-way unrolled dot product (keeps the reduction order fixed).
#[inline]
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    let mut acc = [T::zero(); 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        for l in 0..4 {
            acc[l] += a[4 * c + l] * b[4 * c + l];
        }
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in 4 * chunks..a.len() {
        s += a[i] * b[i];
    }
    s
}

/// `n_in x n_out` matrix (input-major) with orthonormal rows or columns.
fn orthogonal<R: Rng + ?Sized>(n_in: usize, n_out: usize, rng: &mut R) -> Vec<f64> {
    let (rows, cols) = (n_in.max(n_out), n_in.min(n_out));
    // Columns of a rows x cols Gaussian matrix, orthonormalised.
    let mut q: Vec<Vec<f64>> = (0..cols).map(|_| (0..rows).map(|_| rng.sample(StandardNormal)).collect()).collect();
    for c in 0..cols {
        for p in 0..c {
            let proj: f64 = q[c].iter().zip(&q[p]).map(|(a, b)| a * b).sum();
            let prev = q[p].clone();
            for (v, pv) in q[c].iter_mut().zip(prev) {
                *v -= proj * pv;
            }
        }
        let norm = q[c].iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
        for v in q[c].iter_mut() {
            *v /= norm;
        }
    }
    let mut w = vec![0.0; n_in * n_out];
    for i in 0..n_in {
        for j in 0..n_out {
            w[i * n_out + j] = if n_in >= n_out { q[j][i] } else { q[i][j] };
        }
    }
    w
}
