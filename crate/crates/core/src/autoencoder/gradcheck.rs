//! Central finite differences against the analytic backward pass.

use super::config::ModelConfig;
use super::model::{batch_loss, loss_and_grads};
use super::params::ModelParams;

/// Central-difference gradient of the batch loss for every parameter.
pub fn finite_difference_grads(
    params: &ModelParams<f64>,
    cfg: &ModelConfig,
    x: &[f64],
    h: f64,
) -> ModelParams<f64> {
    let mut work = params.clone();
    let mut out = params.clone();
    let count = params.tensors().len();
    for ti in 0..count {
        for e in 0..params.tensors()[ti].len() {
            let orig = params.tensors()[ti].data()[e];
            work.tensors_mut()[ti].data_mut()[e] = orig + h;
            let up = batch_loss(&work, cfg, x);
            work.tensors_mut()[ti].data_mut()[e] = orig - h;
            let down = batch_loss(&work, cfg, x);
            work.tensors_mut()[ti].data_mut()[e] = orig;
            out.tensors_mut()[ti].data_mut()[e] = (up - down) / (2.0 * h);
        }
    }
    out
}

fn norm(v: impl Iterator<Item = f64>) -> f64 {
    v.map(|x| x * x).sum::<f64>().sqrt()
}

/// `||a - n|| / max(||a||, ||n||)`, or 0 when both are zero.
pub fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let diff = norm(analytic.iter().zip(numeric).map(|(a, n)| a - n));
    let scale = norm(analytic.iter().copied()).max(norm(numeric.iter().copied()));
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

/// Relative error of the analytic gradient, per named tensor.
pub fn gradient_errors(
    params: &ModelParams<f64>,
    cfg: &ModelConfig,
    x: &[f64],
    h: f64,
) -> Vec<(String, f64)> {
    let (_, analytic) = loss_and_grads(params, cfg, x);
    let numeric = finite_difference_grads(params, cfg, x, h);
    analytic
        .named_tensors()
        .into_iter()
        .zip(numeric.tensors())
        .map(|((name, a), n)| (name, relative_error(a.data(), n.data())))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_error_cases() {
        assert_eq!(relative_error(&[0.0, 0.0], &[0.0, 0.0]), 0.0);
        assert_eq!(relative_error(&[3.0, 4.0], &[3.0, 4.0]), 0.0);
        assert!((relative_error(&[3.0, 4.0], &[0.0, 0.0]) - 1.0).abs() < 1e-15);
        assert!((relative_error(&[1.0], &[2.0]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_params_match_numerics() {
        let cfg = ModelConfig::small();
        let p = ModelParams::<f64>::zeros(&cfg);
        let x: Vec<f64> = (0..cfg.input_len()).map(|i| (i % 7) as f64 / 7.0).collect();
        let fd = finite_difference_grads(&p, &cfg, &x, 1e-4);
        let (_, g) = loss_and_grads(&p, &cfg, &x);
        let dec = fd.decoder.len() - 1;
        assert!(relative_error(g.decoder[dec].b.data(), fd.decoder[dec].b.data()) < 1e-8);
    }
}
