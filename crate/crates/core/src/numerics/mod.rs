//! Dense tensor primitives, initialization, softmax and the Adam optimizer.
//!
//! Reductions written here run sequentially in ascending index order. Matrix
//! products go through the `matrixmultiply` kernels, which are deterministic
//! for a given build and CPU but use their own blocked accumulation order.

mod adam;
mod tensor;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use tensor::{gemm, MatRef, Tensor};

use crate::rng::Rng;
use crate::scalar::Real;

/// Glorot-uniform `rows x cols` matrix: values in `[-a, a]`, `a = sqrt(6 / (rows + cols))`.
///
/// Consumes exactly `rows * cols` uniform draws, row-major.
pub fn glorot_init<T: Real>(rows: usize, cols: usize, rng: &mut Rng) -> Tensor<T> {
    assert!(rows >= 1 && cols >= 1, "glorot_init needs positive dims");
    let a = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols)
        .map(|_| T::lit(rng.uniform_range(-a, a)))
        .collect();
    Tensor::from_vec(&[rows, cols], data).expect("shape matches data")
}

/// Numerically stable softmax. Panics on empty input.
pub fn softmax<T: Real>(x: &[T]) -> Vec<T> {
    let mut out = x.to_vec();
    softmax_in_place(&mut out);
    out
}

pub fn softmax_in_place<T: Real>(x: &mut [T]) {
    assert!(!x.is_empty(), "softmax of an empty vector");
    let max = x.iter().copied().fold(T::neg_infinity(), T::max);
    let mut sum = T::zero();
    for v in x.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in x.iter_mut() {
        *v /= sum;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;
    use proptest::prelude::*;

    #[test]
    fn glorot_bound_single_row() {
        let mut rng = Rng::new(0);
        let w: Tensor<f32> = glorot_init(1, 5, &mut rng);
        assert_eq!(w.shape(), &[1, 5]);
        assert!(w.data().iter().all(|v| v.abs() <= 1.0));
    }

    #[test]
    fn glorot_mean_near_zero() {
        // 10^4 redraws of a 3x3 matrix over independent seeds.
        let mut sum = 0.0f64;
        let mut count = 0usize;
        for seed in 0..10_000u64 {
            let w: Tensor<f64> = glorot_init(3, 3, &mut Rng::new(seed));
            assert!(w.data().iter().all(|v| v.abs() <= 1.0));
            sum += w.data().iter().sum::<f64>();
            count += w.len();
        }
        let mean = sum / count as f64;
        assert!(mean.abs() < 0.05, "mean {mean}");
    }

    #[test]
    fn glorot_deterministic() {
        let a: Tensor<f32> = glorot_init(4, 7, &mut Rng::new(11));
        let b: Tensor<f32> = glorot_init(4, 7, &mut Rng::new(11));
        assert_eq!(
            a.data().iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
            b.data().iter().map(|x| x.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn softmax_uniform() {
        let s = softmax(&[0.0f64, 0.0, 0.0]);
        for v in s {
            assert!((v - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn softmax_large_logits() {
        let s = softmax(&[1000.0f32, 0.0]);
        assert!(s.iter().all(|v| v.is_finite()));
        assert!((s[0] - 1.0).abs() < 1e-6);
        assert!(s[1] < 1e-6);
    }

    #[test]
    fn softmax_log_weights() {
        let s = softmax(&[1.0f64.ln(), 2.0f64.ln(), 3.0f64.ln()]);
        let want = [1.0 / 6.0, 2.0 / 6.0, 3.0 / 6.0];
        for (a, b) in s.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    #[should_panic(expected = "empty")]
    fn softmax_empty_panics() {
        softmax::<f32>(&[]);
    }

    fn random_matrix(rng: &mut Rng, n: usize) -> Tensor<f32> {
        let data = (0..n * n)
            .map(|_| rng.uniform_range(-1.0, 1.0) as f32)
            .collect();
        Tensor::from_vec(&[n, n], data).unwrap()
    }

    #[test]
    fn matmul_associative() {
        let mut rng = Rng::new(5);
        for _ in 0..20 {
            let a = random_matrix(&mut rng, 8);
            let b = random_matrix(&mut rng, 8);
            let c = random_matrix(&mut rng, 8);
            let left = a.matmul(&b).matmul(&c);
            let right = a.matmul(&b.matmul(&c));
            let norm: f32 = left.data().iter().map(|x| x * x).sum::<f32>().sqrt();
            let diff: f32 = left
                .data()
                .iter()
                .zip(right.data())
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f32>()
                .sqrt();
            assert!(diff <= 1e-4 * norm, "rel err {}", diff / norm);
        }
    }

    proptest! {
        #[test]
        fn softmax_is_distribution(x in prop::collection::vec(-1e4f64..1e4, 1..32)) {
            let s = softmax(&x);
            let sum: f64 = s.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-6);
            prop_assert!(s.iter().all(|&v| v >= 0.0 && v.is_finite()));
            let argmax = |v: &[f64]| v.iter().enumerate().fold(0, |b, (i, &y)| if y > v[b] { i } else { b });
            prop_assert_eq!(argmax(&x), argmax(&s));
        }

        #[test]
        fn softmax_strictly_positive_moderate(x in prop::collection::vec(-300f64..300.0, 1..16)) {
            prop_assert!(softmax(&x).iter().all(|&v| v > 0.0));
        }

        #[test]
        fn softmax_shift_invariant(
            x in prop::collection::vec(-50f64..50.0, 1..16),
            c in -1e3f64..1e3,
        ) {
            let a = softmax(&x);
            let shifted: Vec<f64> = x.iter().map(|v| v + c).collect();
            let b = softmax(&shifted);
            for (p, q) in a.iter().zip(&b) {
                prop_assert!((p - q).abs() < 1e-6);
            }
        }
    }
}
