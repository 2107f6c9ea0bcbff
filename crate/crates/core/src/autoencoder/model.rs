//! Forward pass and hand-derived reverse pass.
//!
//! Batches are flat row-major buffers of `batch x input_len` values.

use super::{Attention, Dense, ModelConfig, ModelParams};
use crate::imaging::FrameTensor;
use crate::numerics::{gemm, MatRef};
use crate::scalar::Real;

/// Attention-pooled latent vector of one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentFeature<T = f32> {
    pub z: Vec<T>,
    pub frame_index: usize,
}

/// Result of [`forward`].
#[derive(Debug, Clone)]
pub struct Forward<T> {
    /// `batch x input_len` reconstructions.
    pub reconstructions: Vec<T>,
    /// `batch x latent_dim`.
    pub latents: Vec<T>,
    /// `batch x token_count` attention weights.
    pub alpha: Vec<T>,
    pub loss: T,
}

/// Intermediate values kept for the reverse pass.
struct Trace<T> {
    batch: usize,
    /// Post-ReLU output of every encoder layer; the last one holds the tokens.
    enc: Vec<Vec<T>>,
    /// `tanh(t W + b)` per token, `(batch * L) x D`.
    act: Vec<T>,
    alpha: Vec<T>,
    z: Vec<T>,
    /// Output of every decoder layer; the last one is the sigmoid output.
    dec: Vec<Vec<T>>,
}

/// Flattens frames into a batch buffer in the requested precision.
pub fn stack_frames<T: Real>(frames: &[&FrameTensor]) -> Vec<T> {
    let mut out = Vec::with_capacity(frames.iter().map(|f| f.data.len()).sum());
    for f in frames {
        out.extend(f.data.iter().map(|&v| T::lit(v as f64)));
    }
    out
}

fn batch_size(cfg: &ModelConfig, x: &[impl Copy]) -> usize {
    let p = cfg.input_len();
    assert!(!x.is_empty(), "empty batch");
    assert_eq!(
        x.len() % p,
        0,
        "batch length {} is not a multiple of {p}",
        x.len()
    );
    x.len() / p
}

/// `out = relu?(x W + b)` for `rows` input rows.
fn dense<T: Real>(layer: &Dense<T>, x: &[T], rows: usize, relu: bool) -> Vec<T> {
    let (fan_in, fan_out) = layer.w.dims2();
    let mut out = Vec::with_capacity(rows * fan_out);
    for _ in 0..rows {
        out.extend_from_slice(layer.b.data());
    }
    gemm(
        T::one(),
        MatRef::row_major(x, rows, fan_in),
        layer.w.view(),
        T::one(),
        &mut out,
    );
    if relu {
        out.iter_mut().for_each(|v| *v = v.max(T::zero()));
    }
    out
}

fn sigmoid<T: Real>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// Attention pooling of `batch` token sets. Returns `(act, alpha, z)`.
fn attend<T: Real>(
    att: &Attention<T>,
    tokens: &[T],
    batch: usize,
    l: usize,
    d: usize,
) -> (Vec<T>, Vec<T>, Vec<T>) {
    let n = batch * l;
    let mut act = Vec::with_capacity(n * d);
    for _ in 0..n {
        act.extend_from_slice(att.b.data());
    }
    gemm(
        T::one(),
        MatRef::row_major(tokens, n, d),
        att.w.view(),
        T::one(),
        &mut act,
    );
    act.iter_mut().for_each(|v| *v = v.tanh());

    let v = att.v.data();
    let mut alpha: Vec<T> = act.chunks_exact(d).map(|a| dot(a, v)).collect();
    for scores in alpha.chunks_exact_mut(l) {
        crate::numerics::softmax_in_place(scores);
    }

    let mut z = vec![T::zero(); batch * d];
    for b in 0..batch {
        let zb = &mut z[b * d..(b + 1) * d];
        for i in 0..l {
            let w = alpha[b * l + i];
            let t = &tokens[(b * l + i) * d..(b * l + i + 1) * d];
            zb.iter_mut().zip(t).for_each(|(acc, &ti)| *acc += w * ti);
        }
    }
    (act, alpha, z)
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

fn encode_trace<T: Real>(
    params: &ModelParams<T>,
    cfg: &ModelConfig,
    x: &[T],
    batch: usize,
) -> (Vec<Vec<T>>, Vec<T>, Vec<T>, Vec<T>) {
    let mut enc: Vec<Vec<T>> = Vec::with_capacity(params.encoder.len());
    for layer in &params.encoder {
        let input = enc.last().map_or(x, |h| h.as_slice());
        enc.push(dense(layer, input, batch, true));
    }
    let tokens = enc.last().expect("encoder has layers");
    let (act, alpha, z) = attend(
        &params.attention,
        tokens,
        batch,
        cfg.token_count,
        cfg.token_dim,
    );
    (enc, act, alpha, z)
}

fn decode<T: Real>(params: &ModelParams<T>, z: &[T], batch: usize) -> Vec<Vec<T>> {
    let last = params.decoder.len() - 1;
    let mut dec: Vec<Vec<T>> = Vec::with_capacity(params.decoder.len());
    for (j, layer) in params.decoder.iter().enumerate() {
        let input = dec.last().map_or(z, |h| h.as_slice());
        let mut out = dense(layer, input, batch, j != last);
        if j == last {
            out.iter_mut().for_each(|v| *v = sigmoid(*v));
        }
        dec.push(out);
    }
    dec
}

fn trace<T: Real>(params: &ModelParams<T>, cfg: &ModelConfig, x: &[T]) -> Trace<T> {
    let batch = batch_size(cfg, x);
    let (enc, act, alpha, z) = encode_trace(params, cfg, x, batch);
    let dec = decode(params, &z, batch);
    Trace {
        batch,
        enc,
        act,
        alpha,
        z,
        dec,
    }
}

fn mse<T: Real>(x: &[T], y: &[T]) -> T {
    let sum = x.iter().zip(y).fold(0.0f64, |acc, (&a, &b)| {
        let d = (a - b).as_f64();
        acc + d * d
    });
    T::lit(sum / x.len() as f64)
}

/// Latent vectors and attention weights for a batch: `(batch x D, batch x L)`.
pub fn encode_batch<T: Real>(
    params: &ModelParams<T>,
    cfg: &ModelConfig,
    x: &[T],
) -> (Vec<T>, Vec<T>) {
    let batch = batch_size(cfg, x);
    let (_, _, alpha, z) = encode_trace(params, cfg, x, batch);
    (z, alpha)
}

/// Latent feature and attention weights of a single frame.
pub fn encode<T: Real>(
    params: &ModelParams<T>,
    cfg: &ModelConfig,
    frame: &FrameTensor,
) -> (LatentFeature<T>, Vec<T>) {
    let [c, h, w] = cfg.input_shape;
    assert_eq!(
        frame.shape(),
        [c, h, w],
        "frame shape does not match the model"
    );
    let x = stack_frames(&[frame]);
    let (z, alpha) = encode_batch(params, cfg, &x);
    (
        LatentFeature {
            z,
            frame_index: frame.source_index,
        },
        alpha,
    )
}

/// Reconstructions, latents and mean squared error of a batch.
pub fn forward<T: Real>(params: &ModelParams<T>, cfg: &ModelConfig, x: &[T]) -> Forward<T> {
    let tr = trace(params, cfg, x);
    let recon = tr.dec.into_iter().last().expect("decoder has layers");
    let loss = mse(x, &recon);
    Forward {
        reconstructions: recon,
        latents: tr.z,
        alpha: tr.alpha,
        loss,
    }
}

/// Mean squared error of a batch without keeping intermediates.
pub fn batch_loss<T: Real>(params: &ModelParams<T>, cfg: &ModelConfig, x: &[T]) -> T {
    forward(params, cfg, x).loss
}

/// Smallest `|pre-activation|` over every ReLU unit for a batch.
///
/// Finite-difference checks are only meaningful when this exceeds the step
/// size times the input scale; otherwise a perturbation can cross a kink.
pub fn relu_margin<T: Real>(params: &ModelParams<T>, cfg: &ModelConfig, x: &[T]) -> T {
    let batch = batch_size(cfg, x);
    let mut margin = T::infinity();
    let mut track = |pre: &[T]| {
        for &v in pre {
            margin = margin.min(v.abs());
        }
    };
    let mut h = x.to_vec();
    for layer in &params.encoder {
        let pre = dense(layer, &h, batch, false);
        track(&pre);
        h = pre.into_iter().map(|v| v.max(T::zero())).collect();
    }
    let (_, _, z) = attend(&params.attention, &h, batch, cfg.token_count, cfg.token_dim);
    let mut h = z;
    for layer in &params.decoder[..params.decoder.len() - 1] {
        let pre = dense(layer, &h, batch, false);
        track(&pre);
        h = pre.into_iter().map(|v| v.max(T::zero())).collect();
    }
    margin
}

/// Loss and gradients of every parameter; `grads` is overwritten.
pub fn loss_and_grads_into<T: Real>(
    params: &ModelParams<T>,
    cfg: &ModelConfig,
    x: &[T],
    grads: &mut ModelParams<T>,
) -> T {
    let tr = trace(params, cfg, x);
    let batch = tr.batch;
    let (l, d) = (cfg.token_count, cfg.token_dim);
    let out = tr.dec.last().expect("decoder has layers");
    let loss = mse(x, out);

    // Output pre-activation gradient: dL/dy * sigmoid'.
    let scale = T::lit(2.0 / x.len() as f64);
    let mut delta: Vec<T> = out
        .iter()
        .zip(x)
        .map(|(&y, &t)| scale * (y - t) * y * (T::one() - y))
        .collect();

    for j in (0..params.decoder.len()).rev() {
        let input = if j == 0 { &tr.z } else { &tr.dec[j - 1] };
        delta = dense_backward(
            &params.decoder[j],
            &mut grads.decoder[j],
            input,
            &delta,
            batch,
            true,
        );
        if j > 0 {
            relu_mask(&mut delta, input);
        }
    }
    let gz = delta;

    let tokens = tr.enc.last().expect("encoder has layers");
    let mut gtokens = attention_backward(
        &params.attention,
        &mut grads.attention,
        tokens,
        &tr,
        &gz,
        l,
        d,
    );
    relu_mask(&mut gtokens, tokens);

    let mut delta = gtokens;
    for k in (0..params.encoder.len()).rev() {
        let input = if k == 0 { x } else { &tr.enc[k - 1] };
        delta = dense_backward(
            &params.encoder[k],
            &mut grads.encoder[k],
            input,
            &delta,
            batch,
            k > 0,
        );
        if k > 0 {
            relu_mask(&mut delta, input);
        }
    }
    loss
}

/// Loss and freshly allocated gradients.
pub fn loss_and_grads<T: Real>(
    params: &ModelParams<T>,
    cfg: &ModelConfig,
    x: &[T],
) -> (T, ModelParams<T>) {
    let mut grads = ModelParams::zeros(cfg);
    let loss = loss_and_grads_into(params, cfg, x, &mut grads);
    (loss, grads)
}

fn relu_mask<T: Real>(grad: &mut [T], output: &[T]) {
    grad.iter_mut().zip(output).for_each(|(g, &h)| {
        if h <= T::zero() {
            *g = T::zero()
        }
    });
}

/// Fills the layer gradients from the pre-activation gradient `delta` and
/// returns the gradient w.r.t. the layer input when `want_input` is set.
fn dense_backward<T: Real>(
    layer: &Dense<T>,
    grad: &mut Dense<T>,
    input: &[T],
    delta: &[T],
    rows: usize,
    want_input: bool,
) -> Vec<T> {
    let (fan_in, fan_out) = layer.w.dims2();
    let x = MatRef::row_major(input, rows, fan_in);
    let dm = MatRef::row_major(delta, rows, fan_out);
    gemm(T::one(), x.t(), dm, T::zero(), grad.w.data_mut());
    column_sums(delta, fan_out, grad.b.data_mut());
    if !want_input {
        return Vec::new();
    }
    let mut gin = vec![T::zero(); rows * fan_in];
    gemm(T::one(), dm, layer.w.view().t(), T::zero(), &mut gin);
    gin
}

fn column_sums<T: Real>(m: &[T], cols: usize, out: &mut [T]) {
    out.fill(T::zero());
    for row in m.chunks_exact(cols) {
        out.iter_mut().zip(row).for_each(|(o, &v)| *o += v);
    }
}

fn attention_backward<T: Real>(
    att: &Attention<T>,
    grad: &mut Attention<T>,
    tokens: &[T],
    tr: &Trace<T>,
    gz: &[T],
    l: usize,
    d: usize,
) -> Vec<T> {
    let batch = tr.batch;
    let n = batch * l;
    let v = att.v.data();

    // Through z = sum_i alpha_i t_i and the softmax.
    let mut ge = vec![T::zero(); n];
    let mut gtokens = vec![T::zero(); n * d];
    for b in 0..batch {
        let gzb = &gz[b * d..(b + 1) * d];
        let ga: Vec<T> = (0..l)
            .map(|i| dot(gzb, &tokens[(b * l + i) * d..(b * l + i + 1) * d]))
            .collect();
        let alpha = &tr.alpha[b * l..(b + 1) * l];
        let mean = dot(alpha, &ga);
        for i in 0..l {
            ge[b * l + i] = alpha[i] * (ga[i] - mean);
            let gt = &mut gtokens[(b * l + i) * d..(b * l + i + 1) * d];
            gt.iter_mut()
                .zip(gzb)
                .for_each(|(g, &gzk)| *g = alpha[i] * gzk);
        }
    }

    // Through e = v . tanh(u).
    let gv = grad.v.data_mut();
    gv.fill(T::zero());
    let mut gu = vec![T::zero(); n * d];
    for r in 0..n {
        let a = &tr.act[r * d..(r + 1) * d];
        gv.iter_mut().zip(a).for_each(|(g, &ak)| *g += ge[r] * ak);
        let gur = &mut gu[r * d..(r + 1) * d];
        for k in 0..d {
            gur[k] = ge[r] * v[k] * (T::one() - a[k] * a[k]);
        }
    }

    // Through u = t W + b.
    let tm = MatRef::row_major(tokens, n, d);
    let gum = MatRef::row_major(&gu, n, d);
    gemm(T::one(), tm.t(), gum, T::zero(), grad.w.data_mut());
    column_sums(&gu, d, grad.b.data_mut());
    gemm(T::one(), gum, att.w.view().t(), T::one(), &mut gtokens);
    gtokens
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Tensor;
    use crate::rng::Rng;

    fn random_params(cfg: &ModelConfig, seed: u64) -> ModelParams<f64> {
        let mut rng = Rng::new(seed);
        let mut p: ModelParams<f64> = ModelParams::init(cfg, &mut rng);
        // Non-zero biases so their gradients are exercised.
        for t in p.tensors_mut() {
            if t.shape().len() == 1 {
                t.data_mut()
                    .iter_mut()
                    .for_each(|v| *v = rng.uniform_range(-0.3, 0.3));
            }
        }
        p
    }

    fn random_batch(cfg: &ModelConfig, batch: usize, rng: &mut Rng) -> Vec<f64> {
        (0..batch * cfg.input_len())
            .map(|_| rng.uniform())
            .collect()
    }

    #[test]
    fn zero_params_give_half_and_zero_latent() {
        let cfg = ModelConfig::small();
        let p: ModelParams<f64> = ModelParams::zeros(&cfg);
        let mut rng = Rng::new(1);
        let x = random_batch(&cfg, 3, &mut rng);
        let f = forward(&p, &cfg, &x);
        assert!(f.reconstructions.iter().all(|&v| v == 0.5));
        assert!(f.latents.iter().all(|&v| v == 0.0));
        assert!(f.alpha.iter().all(|&a| (a - 0.25).abs() < 1e-15));
        let expected = x.iter().map(|v| (v - 0.5) * (v - 0.5)).sum::<f64>() / x.len() as f64;
        assert!((f.loss - expected).abs() < 1e-12);
    }

    #[test]
    fn identical_tokens_pool_to_the_token() {
        let cfg = ModelConfig::small();
        let mut p: ModelParams<f64> = ModelParams::init(&cfg, &mut Rng::new(4));
        let last = p.encoder.len() - 1;
        p.encoder[last].w.fill(0.0);
        let tau = [0.3, 0.0, 1.2, 0.7];
        let bias: Vec<f64> = (0..cfg.token_count).flat_map(|_| tau).collect();
        p.encoder[last].b = Tensor::from_vec(&[bias.len()], bias).unwrap();
        let x = random_batch(&cfg, 1, &mut Rng::new(5));
        let (z, alpha) = encode_batch(&p, &cfg, &x);
        for a in &alpha {
            assert!((a - 0.25).abs() < 1e-12);
        }
        for (zk, tk) in z.iter().zip(tau) {
            assert!((zk - tk).abs() < 1e-12);
        }
    }

    #[test]
    fn perfect_reconstruction_has_zero_loss() {
        let x = vec![0.25f64, 0.5, 0.75];
        assert_eq!(mse(&x, &x), 0.0);
        assert_eq!(mse(&[0.5f64; 4], &[0.0; 4]), 0.25);
    }

    #[test]
    fn attention_weights_form_a_distribution() {
        let cfg = ModelConfig::small();
        for seed in 0..20 {
            let p = random_params(&cfg, seed);
            let x = random_batch(&cfg, 2, &mut Rng::new(seed + 100));
            let (_, alpha) = encode_batch(&p, &cfg, &x);
            for row in alpha.chunks_exact(cfg.token_count) {
                assert!(row.iter().all(|&a| a > 0.0));
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-6);
            }
        }
    }

    /// Independent straight-line evaluation of the encoder formulas.
    fn encode_oracle(p: &ModelParams<f64>, cfg: &ModelConfig, x: &[f64]) -> Vec<f64> {
        let mut h = x.to_vec();
        for layer in &p.encoder {
            let (fi, fo) = layer.w.dims2();
            let w = layer.w.data();
            let mut next = vec![0.0; fo];
            for o in 0..fo {
                let mut s = layer.b.data()[o];
                for i in 0..fi {
                    s += h[i] * w[i * fo + o];
                }
                next[o] = s.max(0.0);
            }
            h = next;
        }
        let (l, d) = (cfg.token_count, cfg.token_dim);
        let wa = p.attention.w.data();
        let mut e = vec![0.0; l];
        for i in 0..l {
            let t = &h[i * d..(i + 1) * d];
            for k in 0..d {
                let mut u = p.attention.b.data()[k];
                for j in 0..d {
                    u += t[j] * wa[j * d + k];
                }
                e[i] += p.attention.v.data()[k] * u.tanh();
            }
        }
        let m = e.iter().cloned().fold(f64::MIN, f64::max);
        let ex: Vec<f64> = e.iter().map(|v| (v - m).exp()).collect();
        let s: f64 = ex.iter().sum();
        let mut z = vec![0.0; d];
        for i in 0..l {
            for k in 0..d {
                z[k] += ex[i] / s * h[i * d + k];
            }
        }
        z
    }

    #[test]
    fn encode_matches_oracle() {
        let cfg = ModelConfig::small();
        let p = random_params(&cfg, 42);
        let x = random_batch(&cfg, 1, &mut Rng::new(7));
        let (z, _) = encode_batch(&p, &cfg, &x);
        let want = encode_oracle(&p, &cfg, &x);
        for (a, b) in z.iter().zip(&want) {
            assert!((a - b).abs() < 1e-5, "{a} vs {b}");
        }
        // The f32 path agrees with the f64 oracle as well.
        let p32: ModelParams<f32> = p.cast();
        let x32: Vec<f32> = x.iter().map(|&v| v as f32).collect();
        let (z32, _) = encode_batch(&p32, &cfg, &x32);
        for (a, b) in z32.iter().zip(&want) {
            assert!((*a as f64 - b).abs() < 1e-5, "{a} vs {b}");
        }
    }

    #[test]
    fn duplicated_batch_has_same_loss_and_grads() {
        let cfg = ModelConfig::small();
        let p = random_params(&cfg, 3);
        let x = random_batch(&cfg, 2, &mut Rng::new(9));
        let p_len = cfg.input_len();
        let mut xx = Vec::new();
        for s in x.chunks_exact(p_len) {
            xx.extend_from_slice(s);
            xx.extend_from_slice(s);
        }
        let (l1, g1) = loss_and_grads(&p, &cfg, &x);
        let (l2, g2) = loss_and_grads(&p, &cfg, &xx);
        assert!((l1 - l2).abs() < 1e-12);
        for (a, b) in g1.tensors().iter().zip(g2.tensors()) {
            for (u, v) in a.data().iter().zip(b.data()) {
                assert!((u - v).abs() <= 1e-12 * (1.0 + u.abs()));
            }
        }
    }

    #[test]
    fn zero_residual_gives_zero_gradient() {
        // Zero output weights make the reconstruction sigmoid(b) for every input.
        let cfg = ModelConfig::small();
        let mut p = random_params(&cfg, 8);
        let last = p.decoder.len() - 1;
        p.decoder[last].w.fill(0.0);
        let target: Vec<f64> = p.decoder[last]
            .b
            .data()
            .iter()
            .map(|&b| sigmoid(b))
            .collect();
        let x: Vec<f64> = [target.clone(), target].concat();
        let (loss, g) = loss_and_grads(&p, &cfg, &x);
        assert_eq!(loss, 0.0);
        assert!(g
            .tensors()
            .iter()
            .all(|t| t.data().iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn encode_is_pure() {
        let cfg = ModelConfig::small();
        let p: ModelParams<f32> = random_params(&cfg, 11).cast();
        let frame = FrameTensor {
            data: (0..cfg.input_len()).map(|i| (i % 7) as f32 / 7.0).collect(),
            height: 4,
            width: 4,
            source_index: 12,
        };
        let (a, _) = encode(&p, &cfg, &frame);
        let (b, _) = encode(&p, &cfg, &frame);
        assert_eq!(a, b);
        assert_eq!(a.frame_index, 12);
        assert_eq!(a.z.len(), cfg.latent_dim());
    }
}
