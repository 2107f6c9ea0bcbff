//! Vector distances and pairwise distance matrices.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Distance used for representative selection and deduplication.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Euclidean,
    Manhattan,
    Cosine,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Euclidean => "euclidean",
            Metric::Manhattan => "manhattan",
            Metric::Cosine => "cosine",
        }
    }

    pub fn distance<T: Real>(self, a: &[T], b: &[T]) -> Result<T> {
        match self {
            Metric::Euclidean => euclidean(a, b),
            Metric::Manhattan => manhattan(a, b),
            Metric::Cosine => cosine_distance(a, b),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(Metric::Euclidean),
            "manhattan" => Ok(Metric::Manhattan),
            "cosine" => Ok(Metric::Cosine),
            other => Err(Error::InvalidConfig(format!(
                "unknown metric `{other}` (expected euclidean, manhattan or cosine)"
            ))),
        }
    }
}

fn check_len<T>(a: &[T], b: &[T]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "vectors of length {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

pub fn euclidean<T: Real>(a: &[T], b: &[T]) -> Result<T> {
    check_len(a, b)?;
    Ok(squared_euclidean(a, b).sqrt())
}

/// Sum of squared differences; callers guarantee equal lengths.
pub(crate) fn squared_euclidean<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| {
        let d = x - y;
        acc + d * d
    })
}

pub fn manhattan<T: Real>(a: &[T], b: &[T]) -> Result<T> {
    check_len(a, b)?;
    Ok(a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (&x, &y)| acc + (x - y).abs()))
}

/// `1 - cos(a, b)`, clamped to `[0, 2]`. A zero vector on either side gives 1.
pub fn cosine_distance<T: Real>(a: &[T], b: &[T]) -> Result<T> {
    check_len(a, b)?;
    let (mut dot, mut na, mut nb) = (T::zero(), T::zero(), T::zero());
    for (&x, &y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == T::zero() || nb == T::zero() {
        return Ok(T::one());
    }
    let d = T::one() - dot / (na * nb).sqrt();
    Ok(d.max(T::zero()).min(T::lit(2.0)))
}

/// Symmetric `n x n` matrix of pairwise distances.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix<T> {
    n: usize,
    values: Vec<T>,
}

impl<T: Real> DistanceMatrix<T> {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[i * self.n + j]
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Strict upper triangle, row by row.
    pub fn upper_triangle(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.n).flat_map(move |i| (i + 1..self.n).map(move |j| (i, j, self.get(i, j))))
    }
}

/// Distances between every pair of points. Only `i < j` is evaluated; the
/// lower triangle is a mirror, so the matrix equals its transpose bitwise.
pub fn pairwise<T: Real, P: AsRef<[T]>>(points: &[P], metric: Metric) -> Result<DistanceMatrix<T>> {
    let n = points.len();
    let mut values = vec![T::zero(); n * n];
    for i in 0..n {
        for j in i + 1..n {
            let d = metric.distance(points[i].as_ref(), points[j].as_ref())?;
            values[i * n + j] = d;
            values[j * n + i] = d;
        }
    }
    Ok(DistanceMatrix { n, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn euclidean_examples() {
        assert_eq!(euclidean(&[0.0f64, 0.0], &[3.0, 4.0]).unwrap(), 5.0);
        assert_eq!(euclidean(&[1.5f64, -2.0], &[1.5, -2.0]).unwrap(), 0.0);
        let d = euclidean(&[1.0f64, 1.0, 1.0], &[2.0, 2.0, 2.0]).unwrap();
        assert!((d - 3.0f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn manhattan_examples() {
        assert_eq!(manhattan(&[0.0f64, 0.0], &[3.0, 4.0]).unwrap(), 7.0);
        assert_eq!(manhattan(&[2.0f32, 9.0], &[2.0, 9.0]).unwrap(), 0.0);
        assert_eq!(manhattan(&[-1.0f64], &[1.0]).unwrap(), 2.0);
    }

    #[test]
    fn cosine_examples() {
        let a = [0.3f64, -1.2, 4.0];
        let twice: Vec<f64> = a.iter().map(|x| 2.0 * x).collect();
        assert!(cosine_distance(&a, &twice).unwrap().abs() < 1e-12);
        assert!((cosine_distance(&[1.0f64, 0.0], &[0.0, 1.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((cosine_distance(&[1.0f64, 0.0], &[-1.0, 0.0]).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn cosine_zero_vector_convention() {
        assert_eq!(cosine_distance(&[0.0f32, 0.0], &[1.0, 2.0]).unwrap(), 1.0);
        assert_eq!(cosine_distance(&[0.0f32, 0.0], &[0.0, 0.0]).unwrap(), 1.0);
    }

    #[test]
    fn length_mismatch_is_error() {
        for m in [Metric::Euclidean, Metric::Manhattan, Metric::Cosine] {
            assert!(m.distance(&[1.0f32, 2.0], &[1.0]).is_err());
        }
    }

    #[test]
    fn metric_names_round_trip() {
        for m in [Metric::Euclidean, Metric::Manhattan, Metric::Cosine] {
            assert_eq!(m.name().parse::<Metric>().unwrap(), m);
        }
        assert!("mahalanobis".parse::<Metric>().is_err());
    }

    #[test]
    fn pairwise_examples() {
        let one = pairwise(&[vec![1.0f64, 2.0]], Metric::Euclidean).unwrap();
        assert_eq!(one.values(), &[0.0]);

        let m = pairwise(&[vec![0.0f64], vec![3.0], vec![4.0]], Metric::Euclidean).unwrap();
        assert_eq!(m.get(0, 1), 3.0);
        assert_eq!(m.get(0, 2), 4.0);
        assert_eq!(m.get(1, 2), 1.0);
        let upper: Vec<f64> = m.upper_triangle().map(|(_, _, d)| d).collect();
        assert_eq!(upper, vec![3.0, 4.0, 1.0]);
    }

    fn vec3() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-100.0f64..100.0, 3)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn triangle_inequality(a in vec3(), b in vec3(), c in vec3()) {
            for m in [Metric::Euclidean, Metric::Manhattan] {
                let ab = m.distance(&a, &b).unwrap();
                let bc = m.distance(&b, &c).unwrap();
                let ac = m.distance(&a, &c).unwrap();
                prop_assert!(ac <= ab + bc + 1e-6);
            }
        }
    }

    proptest! {
        #[test]
        fn identity_symmetry_and_range(a in vec3(), b in vec3()) {
            for m in [Metric::Euclidean, Metric::Manhattan, Metric::Cosine] {
                prop_assert_eq!(m.distance(&a, &a).unwrap(), 0.0);
                prop_assert_eq!(m.distance(&a, &b).unwrap(), m.distance(&b, &a).unwrap());
                prop_assert!(m.distance(&a, &b).unwrap() >= 0.0);
            }
            let c = cosine_distance(&a, &b).unwrap();
            prop_assert!((0.0..=2.0).contains(&c));
        }

        #[test]
        fn pairwise_matrix_is_symmetric(points in prop::collection::vec(vec3(), 1..8)) {
            for m in [Metric::Euclidean, Metric::Manhattan, Metric::Cosine] {
                let dm = pairwise(&points, m).unwrap();
                for i in 0..dm.len() {
                    prop_assert_eq!(dm.get(i, i), 0.0);
                    for j in 0..dm.len() {
                        prop_assert_eq!(dm.get(i, j).to_bits(), dm.get(j, i).to_bits());
                        prop_assert!(dm.get(i, j) >= 0.0);
                    }
                }
            }
        }
    }
}
