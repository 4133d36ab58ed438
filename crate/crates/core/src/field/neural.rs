//! Coordinate MLP with positional encoding, hand-rolled reverse mode, and
//! batched matrix kernels.
//!
//! The network is a plain feed-forward stack: `num_layers` linear layers,
//! rectifier on hidden layers, absolute value on the output so the field is
//! non-negative everywhere. Parameters live in one flat vector (per layer a
//! row-major `(out, in)` weight block followed by the bias), which keeps
//! checkpoints, the optimizer, and perturbation tests trivial.
//!
//! Three derivative paths are provided:
//!
//! * input gradients (reverse through the encoding) for pulling queries,
//! * parameter gradients of `sum_i g_i * f(p_i)` for training,
//! * parameter gradients of `sum_i (a_i * f(p_i) + v_i . grad f(p_i))`,
//!   the mixed term needed when loss gradients flow through the normalized
//!   field gradient (forward-over-reverse; biases get no contribution from
//!   the tangent term because it is linear in the weights almost everywhere).

use super::arch::{ArchError, FieldArch};
use super::encoding::{encode_into, encoding_jvp, encoding_vjp};
use super::{assert_finite, DistanceField, FieldGradient};
use crate::math::Vec3;
use alloc::vec;
use alloc::vec::Vec;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Chunk size for streaming batch evaluation; bounds retained activations.
const EVAL_CHUNK: usize = 1024;

/// Trainable unsigned distance field.
#[derive(Debug, Clone)]
pub struct NeuralField {
    arch: FieldArch,
    seed: u64,
    params: Vec<f64>,
    offsets: Vec<usize>,
    widths: Vec<usize>,
}

/// Flat parameter gradient with the same layout as [`NeuralField::params`].
#[derive(Debug, Clone)]
pub struct ParamGrad {
    data: Vec<f64>,
}

impl ParamGrad {
    pub fn zeros(arch: &FieldArch) -> Self {
        Self {
            data: vec![0.0; arch.param_count()],
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn fill_zero(&mut self) {
        self.data.iter_mut().for_each(|g| *g = 0.0);
    }

    /// `self += s * other`.
    pub fn scaled_add(&mut self, other: &ParamGrad, s: f64) {
        assert_eq!(self.data.len(), other.data.len());
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += s * b;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|g| g.is_finite())
    }
}

/// Reusable forward/backward scratch. Holding one across calls avoids
/// reallocating activation buffers in training loops.
#[derive(Debug, Default)]
pub struct BatchBuffers {
    n: usize,
    enc: Vec<f64>,
    /// Post-rectifier activations per hidden layer, each `n x hidden_width`.
    hidden: Vec<Vec<f64>>,
    /// Final pre-activation, length `n`.
    z_out: Vec<f64>,
    /// `|z_out|`, length `n`.
    values: Vec<f64>,
    // Reverse scratch (ping-pong).
    d_cur: Vec<f64>,
    d_next: Vec<f64>,
    // Tangent retention for the mixed second-order path.
    enc_dot: Vec<f64>,
    hidden_dot: Vec<Vec<f64>>,
}

impl BatchBuffers {
    pub fn new() -> Self {
        Self::default()
    }

    /// Field values from the last retained forward pass.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn prepare(&mut self, arch: &FieldArch, n: usize) {
        let w0 = arch.encoded_dim();
        let hw = arch.hidden_width;
        let hidden_layers = arch.num_layers - 1;
        self.n = n;
        self.enc.resize(n * w0, 0.0);
        self.hidden.resize_with(hidden_layers, Vec::new);
        for h in &mut self.hidden {
            h.resize(n * hw, 0.0);
        }
        self.z_out.resize(n, 0.0);
        self.values.resize(n, 0.0);
        let scratch = n * w0.max(hw);
        self.d_cur.resize(scratch, 0.0);
        self.d_next.resize(scratch, 0.0);
    }

    fn prepare_tangent(&mut self, arch: &FieldArch) {
        let n = self.n;
        let w0 = arch.encoded_dim();
        let hw = arch.hidden_width;
        self.enc_dot.resize(n * w0, 0.0);
        self.hidden_dot.resize_with(arch.num_layers - 1, Vec::new);
        for h in &mut self.hidden_dot {
            h.resize(n * hw, 0.0);
        }
    }
}

#[allow(clippy::too_many_arguments)]
#[inline]
fn dgemm(
    m: usize,
    k: usize,
    n: usize,
    alpha: f64,
    a: &[f64],
    rsa: isize,
    csa: isize,
    b: &[f64],
    rsb: isize,
    csb: isize,
    beta: f64,
    c: &mut [f64],
    rsc: isize,
    csc: isize,
) {
    if m == 0 || n == 0 {
        return;
    }
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            rsc,
            csc,
        );
    }
}

impl NeuralField {
    /// Deterministic fan-in-scaled initialization: weights are zero-mean
    /// normal with std `sqrt(2/fan_in)` on rectifier layers and
    /// `sqrt(1/fan_in)` on the output layer; biases start at zero.
    pub fn init(arch: FieldArch, seed: u64) -> Result<Self, ArchError> {
        arch.validate()?;
        let widths = arch.widths();
        let offsets = arch.layer_offsets();
        let mut params = vec![0.0; arch.param_count()];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for l in 0..arch.num_layers {
            let (fan_in, fan_out) = (widths[l], widths[l + 1]);
            let gain = if l + 1 == arch.num_layers { 1.0 } else { 2.0 };
            let std = crate::math::sqrt(gain / fan_in as f64);
            let normal = Normal::new(0.0, std).expect("std is finite and positive");
            let w = &mut params[offsets[l]..offsets[l] + fan_in * fan_out];
            for x in w.iter_mut() {
                *x = normal.sample(&mut rng);
            }
            // biases stay zero
        }
        Ok(Self {
            arch,
            seed,
            params,
            offsets,
            widths,
        })
    }

    /// Rebuilds a field from a stored parameter vector.
    pub fn from_params(arch: FieldArch, seed: u64, params: Vec<f64>) -> Result<Self, ArchError> {
        arch.validate()?;
        if params.len() != arch.param_count() {
            return Err(ArchError::ZeroWidth); // unreachable via public loaders
        }
        let offsets = arch.layer_offsets();
        let widths = arch.widths();
        Ok(Self {
            arch,
            seed,
            params,
            offsets,
            widths,
        })
    }

    pub fn arch(&self) -> &FieldArch {
        &self.arch
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    #[inline]
    fn layer(&self, l: usize) -> (&[f64], &[f64], usize, usize) {
        let (fan_in, fan_out) = (self.widths[l], self.widths[l + 1]);
        let o = self.offsets[l];
        let w = &self.params[o..o + fan_in * fan_out];
        let b = &self.params[o + fan_in * fan_out..o + fan_in * fan_out + fan_out];
        (w, b, fan_in, fan_out)
    }

    /// Forward pass retaining activations for subsequent reverse passes.
    pub fn forward_retained(&self, points: &[Vec3], buf: &mut BatchBuffers) {
        let n = points.len();
        buf.prepare(&self.arch, n);
        let w0 = self.arch.encoded_dim();
        let freq = self.arch.encoding_frequencies;
        for (i, &p) in points.iter().enumerate() {
            assert_finite(p);
            encode_into(p, freq, &mut buf.enc[i * w0..(i + 1) * w0]);
        }
        let last = self.arch.num_layers - 1;
        for l in 0..self.arch.num_layers {
            let (w, b, fan_in, fan_out) = self.layer(l);
            // Split borrows: inputs come from enc or an earlier hidden array.
            let (inputs, out): (&[f64], &mut [f64]) = if l == 0 {
                if last == 0 {
                    (&buf.enc, &mut buf.z_out)
                } else {
                    (&buf.enc, &mut buf.hidden[0])
                }
            } else if l == last {
                (&buf.hidden[l - 1], &mut buf.z_out)
            } else {
                let (lo, hi) = buf.hidden.split_at_mut(l);
                (&lo[l - 1], &mut hi[0])
            };
            dgemm(
                n,
                fan_in,
                fan_out,
                1.0,
                inputs,
                fan_in as isize,
                1,
                w,
                1,
                fan_in as isize,
                0.0,
                out,
                fan_out as isize,
                1,
            );
            if l == last {
                for (zi, v) in out.iter_mut().zip(buf.values.iter_mut()) {
                    *zi += b[0];
                    *v = crate::math::abs(*zi);
                }
            } else {
                for row in out.chunks_exact_mut(fan_out) {
                    for (zij, bj) in row.iter_mut().zip(b.iter()) {
                        *zij += bj;
                        if *zij < 0.0 {
                            *zij = 0.0;
                        }
                    }
                }
            }
        }
    }

    /// Input gradients for every point of the last retained forward pass.
    pub fn input_grads(&self, buf: &mut BatchBuffers, out: &mut Vec<Vec3>) {
        let n = buf.n;
        let freq = self.arch.encoding_frequencies;
        let w0 = self.arch.encoded_dim();
        // delta over the output layer: d|z|/dz, +1 at zero.
        buf.d_cur.truncate(0);
        buf.d_cur
            .extend(buf.z_out.iter().map(|&z| if z >= 0.0 { 1.0 } else { -1.0 }));
        for l in (0..self.arch.num_layers).rev() {
            let (w, _, fan_in, fan_out) = self.layer(l);
            buf.d_next.resize(n * fan_in, 0.0);
            dgemm(
                n,
                fan_out,
                fan_in,
                1.0,
                &buf.d_cur,
                fan_out as isize,
                1,
                w,
                fan_in as isize,
                1,
                0.0,
                &mut buf.d_next,
                fan_in as isize,
                1,
            );
            if l > 0 {
                let acts = &buf.hidden[l - 1];
                for (d, &a) in buf.d_next.iter_mut().zip(acts.iter()) {
                    if a <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            core::mem::swap(&mut buf.d_cur, &mut buf.d_next);
        }
        out.clear();
        out.reserve(n);
        for i in 0..n {
            let mut g = [0.0; 3];
            let enc_row = &buf.enc[i * w0..(i + 1) * w0];
            let u_row = &buf.d_cur[i * w0..(i + 1) * w0];
            encoding_vjp(freq, enc_row, u_row, &mut g);
            out.push(g);
        }
    }

    /// Accumulates the gradient of `sum_i upstream[i] * f(p_i)` into `grad`.
    /// Requires a retained forward pass over the same points.
    pub fn param_backward(&self, buf: &mut BatchBuffers, upstream: &[f64], grad: &mut ParamGrad) {
        let n = buf.n;
        assert_eq!(upstream.len(), n, "upstream length mismatch");
        assert_eq!(grad.data.len(), self.params.len());
        buf.d_cur.truncate(0);
        buf.d_cur.extend(
            buf.z_out
                .iter()
                .zip(upstream.iter())
                .map(|(&z, &g)| if z >= 0.0 { g } else { -g }),
        );
        for l in (0..self.arch.num_layers).rev() {
            let (fan_in, fan_out) = (self.widths[l], self.widths[l + 1]);
            let o = self.offsets[l];
            let acts: &[f64] = if l == 0 { &buf.enc } else { &buf.hidden[l - 1] };
            {
                let (dw, rest) = grad.data[o..o + fan_in * fan_out + fan_out]
                    .split_at_mut(fan_in * fan_out);
                // dW += delta^T . acts
                dgemm(
                    fan_out,
                    n,
                    fan_in,
                    1.0,
                    &buf.d_cur,
                    1,
                    fan_out as isize,
                    acts,
                    fan_in as isize,
                    1,
                    1.0,
                    dw,
                    fan_in as isize,
                    1,
                );
                for row in buf.d_cur[..n * fan_out].chunks_exact(fan_out) {
                    for (db, d) in rest.iter_mut().zip(row.iter()) {
                        *db += d;
                    }
                }
            }
            if l > 0 {
                let w = &self.params[o..o + fan_in * fan_out];
                buf.d_next.resize(n * fan_in, 0.0);
                dgemm(
                    n,
                    fan_out,
                    fan_in,
                    1.0,
                    &buf.d_cur,
                    fan_out as isize,
                    1,
                    w,
                    fan_in as isize,
                    1,
                    0.0,
                    &mut buf.d_next,
                    fan_in as isize,
                    1,
                );
                let acts = &buf.hidden[l - 1];
                for (d, &a) in buf.d_next.iter_mut().zip(acts.iter()) {
                    if a <= 0.0 {
                        *d = 0.0;
                    }
                }
                core::mem::swap(&mut buf.d_cur, &mut buf.d_next);
            }
        }
    }

    /// Accumulates the gradient of
    /// `sum_i (alphas[i] * f(p_i) + tangents[i] . grad f(p_i))`
    /// with respect to the parameters.
    ///
    /// Requires a retained forward pass over the same points. The tangent
    /// contribution is exact almost everywhere: activation masks and output
    /// signs are piecewise constant, so only the bilinear tangent path
    /// contributes, and biases receive nothing from it.
    pub fn param_backward_with_tangent(
        &self,
        buf: &mut BatchBuffers,
        alphas: &[f64],
        tangents: &[Vec3],
        grad: &mut ParamGrad,
    ) {
        let n = buf.n;
        assert_eq!(alphas.len(), n);
        assert_eq!(tangents.len(), n);
        assert_eq!(grad.data.len(), self.params.len());
        buf.prepare_tangent(&self.arch);
        let w0 = self.arch.encoded_dim();
        let freq = self.arch.encoding_frequencies;
        // Tangent forward: enc_dot = J_enc v, then through masked layers.
        for (i, &v) in tangents.iter().enumerate() {
            let enc_row = &buf.enc[i * w0..(i + 1) * w0];
            encoding_jvp(freq, enc_row, v, &mut buf.enc_dot[i * w0..(i + 1) * w0]);
        }
        let hidden_layers = self.arch.num_layers - 1;
        for l in 0..hidden_layers {
            let (w, _, fan_in, fan_out) = self.layer(l);
            let (inputs, out): (&[f64], &mut [f64]) = if l == 0 {
                (&buf.enc_dot, &mut buf.hidden_dot[0])
            } else {
                let (lo, hi) = buf.hidden_dot.split_at_mut(l);
                (&lo[l - 1], &mut hi[0])
            };
            dgemm(
                n,
                fan_in,
                fan_out,
                1.0,
                inputs,
                fan_in as isize,
                1,
                w,
                1,
                fan_in as isize,
                0.0,
                out,
                fan_out as isize,
                1,
            );
            for (t, &a) in out.iter_mut().zip(buf.hidden[l].iter()) {
                if a <= 0.0 {
                    *t = 0.0;
                }
            }
        }
        // Two delta streams share the downward recursion; d_cur holds the
        // value stream (scaled by alpha) and d_tan the tangent stream.
        let sign =
            |z: f64| {
                if z >= 0.0 {
                    1.0
                } else {
                    -1.0
                }
            };
        buf.d_cur.truncate(0);
        buf.d_cur.extend(
            buf.z_out
                .iter()
                .zip(alphas.iter())
                .map(|(&z, &a)| a * sign(z)),
        );
        let mut d_tan: Vec<f64> = buf.z_out.iter().map(|&z| sign(z)).collect();
        let mut d_tan_next: Vec<f64> = Vec::new();
        for l in (0..self.arch.num_layers).rev() {
            let (fan_in, fan_out) = (self.widths[l], self.widths[l + 1]);
            let o = self.offsets[l];
            let acts: &[f64] = if l == 0 { &buf.enc } else { &buf.hidden[l - 1] };
            let acts_dot: &[f64] = if l == 0 {
                &buf.enc_dot
            } else {
                &buf.hidden_dot[l - 1]
            };
            {
                let (dw, rest) = grad.data[o..o + fan_in * fan_out + fan_out]
                    .split_at_mut(fan_in * fan_out);
                dgemm(
                    fan_out,
                    n,
                    fan_in,
                    1.0,
                    &buf.d_cur,
                    1,
                    fan_out as isize,
                    acts,
                    fan_in as isize,
                    1,
                    1.0,
                    dw,
                    fan_in as isize,
                    1,
                );
                dgemm(
                    fan_out,
                    n,
                    fan_in,
                    1.0,
                    &d_tan,
                    1,
                    fan_out as isize,
                    acts_dot,
                    fan_in as isize,
                    1,
                    1.0,
                    dw,
                    fan_in as isize,
                    1,
                );
                for row in buf.d_cur[..n * fan_out].chunks_exact(fan_out) {
                    for (db, d) in rest.iter_mut().zip(row.iter()) {
                        *db += d;
                    }
                }
            }
            if l > 0 {
                let w = &self.params[o..o + fan_in * fan_out];
                buf.d_next.resize(n * fan_in, 0.0);
                d_tan_next.resize(n * fan_in, 0.0);
                dgemm(
                    n,
                    fan_out,
                    fan_in,
                    1.0,
                    &buf.d_cur,
                    fan_out as isize,
                    1,
                    w,
                    fan_in as isize,
                    1,
                    0.0,
                    &mut buf.d_next,
                    fan_in as isize,
                    1,
                );
                dgemm(
                    n,
                    fan_out,
                    fan_in,
                    1.0,
                    &d_tan,
                    fan_out as isize,
                    1,
                    w,
                    fan_in as isize,
                    1,
                    0.0,
                    &mut d_tan_next,
                    fan_in as isize,
                    1,
                );
                let acts = &buf.hidden[l - 1];
                for ((d, t), &a) in buf
                    .d_next
                    .iter_mut()
                    .zip(d_tan_next.iter_mut())
                    .zip(acts.iter())
                {
                    if a <= 0.0 {
                        *d = 0.0;
                        *t = 0.0;
                    }
                }
                core::mem::swap(&mut buf.d_cur, &mut buf.d_next);
                core::mem::swap(&mut d_tan, &mut d_tan_next);
            }
        }
    }

    /// Gradient of `sum_i upstream[i] * f(points[i])` over all parameters.
    pub fn backward(&self, points: &[Vec3], upstream: &[f64]) -> ParamGrad {
        assert!(!points.is_empty(), "backward needs a nonempty batch");
        assert_eq!(points.len(), upstream.len(), "dimension mismatch");
        let mut buf = BatchBuffers::new();
        let mut grad = ParamGrad::zeros(&self.arch);
        self.forward_retained(points, &mut buf);
        self.param_backward(&mut buf, upstream, &mut grad);
        grad
    }

    /// Single-point forward returning the value, the minimum absolute
    /// pre-activation over all units, and a packed sign pattern of every
    /// rectifier unit plus the output sign.
    pub fn probe(&self, p: Vec3) -> (f64, f64, Vec<u64>) {
        assert_finite(p);
        let freq = self.arch.encoding_frequencies;
        let mut x = vec![0.0; self.arch.encoded_dim()];
        encode_into(p, freq, &mut x);
        let mut min_abs = f64::INFINITY;
        let total_units: usize = self.widths[1..].iter().sum();
        let mut signature = vec![0u64; total_units.div_ceil(64)];
        let mut bit = 0usize;
        let push_bit = |sig: &mut Vec<u64>, on: bool, bit: &mut usize| {
            if on {
                sig[*bit / 64] |= 1u64 << (*bit % 64);
            }
            *bit += 1;
        };
        let last = self.arch.num_layers - 1;
        let mut value = 0.0;
        for l in 0..self.arch.num_layers {
            let (w, b, fan_in, fan_out) = self.layer(l);
            let mut z = vec![0.0; fan_out];
            for (j, zj) in z.iter_mut().enumerate() {
                let row = &w[j * fan_in..(j + 1) * fan_in];
                let mut acc = b[j];
                for (wi, xi) in row.iter().zip(x.iter()) {
                    acc += wi * xi;
                }
                *zj = acc;
                let az = crate::math::abs(acc);
                if az < min_abs {
                    min_abs = az;
                }
                push_bit(&mut signature, acc > 0.0, &mut bit);
            }
            if l == last {
                value = crate::math::abs(z[0]);
            } else {
                for zj in z.iter_mut() {
                    if *zj < 0.0 {
                        *zj = 0.0;
                    }
                }
                x = z;
            }
        }
        (value, min_abs, signature)
    }
}

impl DistanceField for NeuralField {
    fn eval(&self, p: Vec3) -> f64 {
        self.probe(p).0
    }

    fn eval_with_grad(&self, p: Vec3) -> FieldGradient {
        let mut buf = BatchBuffers::new();
        let mut grads = Vec::with_capacity(1);
        self.forward_retained(&[p], &mut buf);
        self.input_grads(&mut buf, &mut grads);
        FieldGradient {
            value: buf.values[0],
            grad: grads[0],
        }
    }

    fn eval_batch(&self, points: &[Vec3], out: &mut Vec<f64>) {
        out.clear();
        out.reserve(points.len());
        let mut buf = BatchBuffers::new();
        for chunk in points.chunks(EVAL_CHUNK) {
            self.forward_retained(chunk, &mut buf);
            out.extend_from_slice(&buf.values);
        }
    }

    fn eval_with_grad_batch(&self, points: &[Vec3], out: &mut Vec<FieldGradient>) {
        out.clear();
        out.reserve(points.len());
        let mut buf = BatchBuffers::new();
        let mut grads = Vec::new();
        for chunk in points.chunks(EVAL_CHUNK) {
            self.forward_retained(chunk, &mut buf);
            self.input_grads(&mut buf, &mut grads);
            for (i, &g) in grads.iter().enumerate() {
                out.push(FieldGradient {
                    value: buf.values[i],
                    grad: g,
                });
            }
        }
    }

    /// Minimum absolute pre-activation over all units; pre-activation space,
    /// not input space.
    fn kink_gap(&self, p: Vec3) -> f64 {
        self.probe(p).1
    }

    /// A stencil is generic when no rectifier unit (or the output sign)
    /// changes state across any of the six stencil points and every
    /// pre-activation stays clear of zero at the center.
    fn fd_stencil_generic(&self, p: Vec3, h: f64) -> bool {
        let (_, min_abs, sig) = self.probe(p);
        if min_abs < 1e-6 {
            return false;
        }
        for axis in 0..3 {
            for s in [-1.0, 1.0] {
                let mut q = p;
                q[axis] += s * h;
                if self.probe(q).2 != sig {
                    return false;
                }
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math;
    use rand::Rng;

    fn small_arch() -> FieldArch {
        FieldArch {
            num_layers: 3,
            hidden_width: 24,
            encoding_frequencies: 2,
        }
    }

    fn rand_point(rng: &mut ChaCha8Rng) -> Vec3 {
        [
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ]
    }

    #[test]
    fn init_is_deterministic_and_seed_sensitive() {
        let arch = FieldArch::default();
        let a = NeuralField::init(arch, 7).unwrap();
        let b = NeuralField::init(arch, 7).unwrap();
        assert_eq!(a.params(), b.params());
        let c = NeuralField::init(arch, 8).unwrap();
        assert_ne!(a.params(), c.params());
        assert_eq!(a.param_count(), 405_249);
    }

    #[test]
    fn output_is_nonnegative() {
        let field = NeuralField::init(small_arch(), 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let p = rand_point(&mut rng);
            assert!(field.eval(p) >= 0.0);
        }
    }

    #[test]
    fn batch_eval_matches_single_eval() {
        let field = NeuralField::init(small_arch(), 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let pts: Vec<Vec3> = (0..37).map(|_| rand_point(&mut rng)).collect();
        let mut batch = Vec::new();
        field.eval_batch(&pts, &mut batch);
        for (i, &p) in pts.iter().enumerate() {
            assert_eq!(batch[i], field.eval(p), "point {i}");
        }
        let mut with_grad = Vec::new();
        field.eval_with_grad_batch(&pts, &mut with_grad);
        for (i, &p) in pts.iter().enumerate() {
            let single = field.eval_with_grad(p);
            assert_eq!(with_grad[i].value, single.value);
            assert_eq!(with_grad[i].grad, single.grad);
        }
    }

    /// Central finite differences over the inputs at stencil-generic points.
    #[test]
    fn input_gradients_match_finite_differences() {
        let field = NeuralField::init(FieldArch::default(), 42).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        let h = 1e-4;
        let mut checked = 0;
        let mut worst = 0.0f64;
        while checked < 100 {
            let p = rand_point(&mut rng);
            let (_, min_abs, sig) = field.probe(p);
            if min_abs < 1e-6 {
                continue;
            }
            let mut generic = true;
            for axis in 0..3 {
                for s in [-1.0, 1.0] {
                    let mut q = p;
                    q[axis] += s * h;
                    if field.probe(q).2 != sig {
                        generic = false;
                    }
                }
            }
            if !generic {
                continue;
            }
            let g = field.eval_with_grad(p);
            let mut fd = [0.0; 3];
            for axis in 0..3 {
                let mut pp = p;
                pp[axis] += h;
                let mut pm = p;
                pm[axis] -= h;
                fd[axis] = (field.eval(pp) - field.eval(pm)) / (2.0 * h);
            }
            let rel = math::dist(fd, g.grad) / math::norm(g.grad).max(1e-12);
            worst = worst.max(rel);
            checked += 1;
        }
        assert!(worst < 1e-3, "max relative error {worst}");
    }

    /// Perturbation oracle over randomly chosen parameters.
    #[test]
    fn param_backward_matches_perturbation() {
        let mut field = NeuralField::init(small_arch(), 9).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let pts: Vec<Vec3> = (0..4).map(|_| rand_point(&mut rng)).collect();
        let upstream = [1.0, -0.5, 2.0, 0.25];
        let grad = field.backward(&pts, &upstream);

        let loss = |f: &NeuralField| -> f64 {
            pts.iter()
                .zip(upstream.iter())
                .map(|(&p, &g)| g * f.eval(p))
                .sum()
        };
        let delta = 1e-6;
        let count = field.param_count();
        let mut worst = 0.0f64;
        for t in 0..50 {
            let idx = (t * 7919 + 13) % count;
            let orig = field.params()[idx];
            field.params_mut()[idx] = orig + delta;
            let up = loss(&field);
            field.params_mut()[idx] = orig - delta;
            let down = loss(&field);
            field.params_mut()[idx] = orig;
            let fd = (up - down) / (2.0 * delta);
            let an = grad.as_slice()[idx];
            let rel = (fd - an).abs() / an.abs().max(1e-8);
            worst = worst.max(rel);
        }
        assert!(worst < 1e-3, "max relative error {worst}");
    }

    #[test]
    fn backward_is_linear_in_upstream() {
        let field = NeuralField::init(small_arch(), 21).unwrap();
        let p1 = [0.1, -0.4, 0.3];
        let p2 = [-0.7, 0.2, 0.5];
        let (a, b) = (0.7, -1.3);
        let combined = field.backward(&[p1, p2], &[a, b]);
        let g1 = field.backward(&[p1], &[1.0]);
        let g2 = field.backward(&[p2], &[1.0]);
        for i in 0..field.param_count() {
            let expect = a * g1.as_slice()[i] + b * g2.as_slice()[i];
            assert!(
                (combined.as_slice()[i] - expect).abs() < 1e-12 * (1.0 + expect.abs()),
                "param {i}"
            );
        }
    }

    #[test]
    fn zero_upstream_gives_zero_grad() {
        let field = NeuralField::init(small_arch(), 33).unwrap();
        let grad = field.backward(&[[0.2, 0.1, -0.3]], &[0.0]);
        assert!(grad.as_slice().iter().all(|&g| g == 0.0));
    }

    /// The tangent term of the mixed reverse pass must differentiate
    /// `v . grad f` exactly; compare against parameter perturbation of the
    /// directional derivative.
    #[test]
    fn tangent_backward_matches_perturbation() {
        let mut field = NeuralField::init(small_arch(), 55).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let pts: Vec<Vec3> = (0..3).map(|_| rand_point(&mut rng)).collect();
        let dirs: Vec<Vec3> = (0..3).map(|_| rand_point(&mut rng)).collect();
        let alphas = [0.4, -0.2, 1.1];

        let mut buf = BatchBuffers::new();
        let mut grad = ParamGrad::zeros(field.arch());
        field.forward_retained(&pts, &mut buf);
        field.param_backward_with_tangent(&mut buf, &alphas, &dirs, &mut grad);

        let objective = |f: &NeuralField| -> f64 {
            pts.iter()
                .zip(dirs.iter())
                .zip(alphas.iter())
                .map(|((&p, &v), &a)| {
                    let g = f.eval_with_grad(p);
                    a * g.value + math::dot(v, g.grad)
                })
                .sum()
        };
        let delta = 1e-6;
        let count = field.param_count();
        let mut worst = 0.0f64;
        for t in 0..60 {
            let idx = (t * 5077 + 3) % count;
            let orig = field.params()[idx];
            field.params_mut()[idx] = orig + delta;
            let up = objective(&field);
            field.params_mut()[idx] = orig - delta;
            let down = objective(&field);
            field.params_mut()[idx] = orig;
            let fd = (up - down) / (2.0 * delta);
            let an = grad.as_slice()[idx];
            let rel = (fd - an).abs() / an.abs().max(1e-7);
            worst = worst.max(rel);
        }
        assert!(worst < 1e-3, "max relative error {worst}");
    }
}
