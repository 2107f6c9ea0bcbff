//! Representative selection, near-duplicate removal and end-to-end extraction.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::autoencoder::{
    encode_batch, load_model, stack_frames, LatentFeature, ModelConfig, ModelParams,
};
use crate::clustering::{kmeans_fit, ClusterModel, KMeansParams};
use crate::distances::{pairwise, DistanceMatrix, Metric};
use crate::error::{Error, Result};
use crate::imaging::{load_frame_sequence, preprocess_frame_to, FrameTensor, RawFrame};
use crate::rng::Rng;
use crate::scalar::Real;

/// Frames encoded per forward pass during extraction.
const ENCODE_CHUNK: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    #[serde(rename = "frame")]
    pub frame_index: usize,
    pub cluster: usize,
    pub centroid_distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub kept: usize,
    pub dropped: usize,
    pub distance: f64,
}

/// Distance statistics behind the merge threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DedupPolicy {
    pub metric: Metric,
    pub mu: f64,
    /// Population standard deviation.
    pub sigma: f64,
    /// `mu - 2 * sigma`; pairs strictly closer than this merge.
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DedupOutcome {
    pub policy: DedupPolicy,
    pub survivors: Vec<Candidate>,
    pub merges: Vec<Merge>,
    /// Candidate distance matrix, rows in candidate order.
    pub distances: DistanceMatrix<f64>,
}

/// One candidate per cluster: the member nearest its centroid under `metric`,
/// ties to the lowest frame index. Ordered by frame index.
pub fn select_representatives<T: Real>(
    latents: &[LatentFeature<T>],
    model: &ClusterModel<T>,
    metric: Metric,
) -> Result<Vec<Candidate>> {
    if latents.len() != model.assignments.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} latents but {} cluster assignments",
            latents.len(),
            model.assignments.len()
        )));
    }
    let mut best: Vec<Option<Candidate>> = vec![None; model.k];
    for (lat, &c) in latents.iter().zip(&model.assignments) {
        let d = metric.distance(&lat.z, &model.centroids[c])?.as_f64();
        let better = match &best[c] {
            None => true,
            Some(b) => match d.total_cmp(&b.centroid_distance) {
                Ordering::Less => true,
                Ordering::Equal => lat.frame_index < b.frame_index,
                Ordering::Greater => false,
            },
        };
        if better {
            best[c] = Some(Candidate {
                frame_index: lat.frame_index,
                cluster: c,
                centroid_distance: d,
            });
        }
    }
    let mut out = Vec::with_capacity(model.k);
    for (c, cand) in best.into_iter().enumerate() {
        out.push(cand.ok_or_else(|| Error::Internal(format!("cluster {c} has no members")))?);
    }
    out.sort_by_key(|c| c.frame_index);
    Ok(out)
}

/// Mean and population standard deviation of the strict upper triangle.
fn upper_triangle_stats(m: &DistanceMatrix<f64>) -> (f64, f64) {
    let values: Vec<f64> = m.upper_triangle().map(|(_, _, d)| d).collect();
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mu = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|d| (d - mu) * (d - mu)).sum::<f64>() / n;
    (mu, var.sqrt())
}

/// Greedy near-duplicate removal over candidate latents.
///
/// Pairs are visited by ascending distance (ties by index pair). A pair closer
/// than `mu - 2 sigma` whose members are both still alive drops the member
/// farther from its own centroid (ties drop the higher frame index).
pub fn dedup<T: Real>(
    candidates: &[Candidate],
    latents: &[LatentFeature<T>],
    metric: Metric,
) -> Result<DedupOutcome> {
    let by_frame: HashMap<usize, &[T]> = latents
        .iter()
        .map(|l| (l.frame_index, l.z.as_slice()))
        .collect();
    let points: Vec<Vec<f64>> = candidates
        .iter()
        .map(|c| {
            by_frame
                .get(&c.frame_index)
                .map(|z| z.iter().map(|v| v.as_f64()).collect())
                .ok_or_else(|| Error::Internal(format!("no latent for frame {}", c.frame_index)))
        })
        .collect::<Result<_>>()?;
    let distances = pairwise::<f64, _>(&points, metric)?;
    let (mu, sigma) = upper_triangle_stats(&distances);
    let threshold = mu - 2.0 * sigma;
    let policy = DedupPolicy {
        metric,
        mu,
        sigma,
        threshold,
    };

    let mut alive = vec![true; candidates.len()];
    let mut merges = Vec::new();
    if candidates.len() >= 2 && threshold > 0.0 {
        let mut pairs: Vec<(usize, usize, f64)> = distances.upper_triangle().collect();
        pairs.sort_by(|a, b| a.2.total_cmp(&b.2).then((a.0, a.1).cmp(&(b.0, b.1))));
        for (i, j, d) in pairs {
            if d >= threshold {
                break;
            }
            if !(alive[i] && alive[j]) {
                continue;
            }
            let (a, b) = (&candidates[i], &candidates[j]);
            let drop_j = match a.centroid_distance.total_cmp(&b.centroid_distance) {
                Ordering::Less => true,
                Ordering::Greater => false,
                Ordering::Equal => b.frame_index > a.frame_index,
            };
            let (keep, drop) = if drop_j { (i, j) } else { (j, i) };
            alive[drop] = false;
            merges.push(Merge {
                kept: candidates[keep].frame_index,
                dropped: candidates[drop].frame_index,
                distance: d,
            });
        }
    }
    let survivors = candidates
        .iter()
        .zip(&alive)
        .filter(|(_, &a)| a)
        .map(|(c, _)| *c)
        .collect();
    Ok(DedupOutcome {
        policy,
        survivors,
        merges,
        distances,
    })
}

/// Keeps the `k` survivors from the largest clusters (ties to the lower
/// cluster id), returned in frame order.
pub fn trim_to_k(survivors: &[Candidate], cluster_sizes: &[usize], k: usize) -> Vec<Candidate> {
    let mut ranked = survivors.to_vec();
    ranked.sort_by(|a, b| {
        cluster_sizes[b.cluster]
            .cmp(&cluster_sizes[a.cluster])
            .then(a.cluster.cmp(&b.cluster))
    });
    ranked.truncate(k);
    ranked.sort_by_key(|c| c.frame_index);
    ranked
}

/// `ceil(factor * k)`, guarding against representation noise such as `1.1 * 10`.
pub fn oversampled_k(requested_k: usize, factor: f64) -> usize {
    ((factor * requested_k as f64) - 1e-9).ceil().max(1.0) as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractConfig {
    pub requested_k: usize,
    pub oversample: f64,
    pub metric: Metric,
    pub seed: u64,
    pub restarts: usize,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        Self {
            requested_k: 5,
            oversample: 1.5,
            metric: Metric::Euclidean,
            seed: 0,
            restarts: 8,
        }
    }
}

impl ExtractConfig {
    pub fn validate(&self) -> Result<()> {
        if self.requested_k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        if !(self.oversample.is_finite() && self.oversample >= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "oversample factor must be a finite number >= 1, got {}",
                self.oversample
            )));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidConfig("restarts must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeyframeSet {
    pub requested_k: usize,
    pub oversampled_k: usize,
    pub policy: DedupPolicy,
    /// One per cluster, frame order.
    pub candidates: Vec<Candidate>,
    /// Candidates left after deduplication.
    pub survivors: Vec<Candidate>,
    pub merges: Vec<Merge>,
    /// Final keyframes after trimming to `requested_k`, frame order.
    pub keyframes: Vec<Candidate>,
    pub cluster_sizes: Vec<usize>,
}

impl KeyframeSet {
    pub fn frame_indices(&self) -> Vec<usize> {
        self.keyframes.iter().map(|c| c.frame_index).collect()
    }

    pub fn report(&self, video: &str) -> KeyframeReport {
        KeyframeReport {
            video: video.to_string(),
            requested_k: self.requested_k,
            oversampled_k: self.oversampled_k,
            metric: self.policy.metric,
            mu: self.policy.mu,
            sigma: self.policy.sigma,
            threshold: self.policy.threshold,
            keyframes: self.keyframes.clone(),
            merges: self.merges.clone(),
        }
    }
}

/// JSON keyframe report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeyframeReport {
    pub video: String,
    pub requested_k: usize,
    pub oversampled_k: usize,
    pub metric: Metric,
    pub mu: f64,
    pub sigma: f64,
    pub threshold: f64,
    pub keyframes: Vec<Candidate>,
    pub merges: Vec<Merge>,
}

impl KeyframeReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_slice(&std::fs::read(path)?)?)
    }

    pub fn frame_indices(&self) -> Vec<usize> {
        self.keyframes.iter().map(|c| c.frame_index).collect()
    }
}

/// Preprocesses raw frames to the model's input size.
pub fn prepare_frames(raw: &[RawFrame], cfg: &ModelConfig) -> Result<Vec<FrameTensor>> {
    let [c, h, w] = cfg.input_shape;
    if c != 3 {
        return Err(Error::DimensionMismatch(format!(
            "model expects {c} channels; frames have 3"
        )));
    }
    Ok(raw
        .iter()
        .enumerate()
        .map(|(i, f)| preprocess_frame_to(f, i, w, h))
        .collect())
}

/// Latent vectors of every frame, in frame order.
pub fn encode_frames(
    params: &ModelParams<f32>,
    cfg: &ModelConfig,
    frames: &[FrameTensor],
) -> Vec<LatentFeature<f64>> {
    let d = cfg.latent_dim();
    let mut out = Vec::with_capacity(frames.len());
    for chunk in frames.chunks(ENCODE_CHUNK) {
        let refs: Vec<&FrameTensor> = chunk.iter().collect();
        let x: Vec<f32> = stack_frames(&refs);
        let (z, _) = encode_batch(params, cfg, &x);
        for (f, zf) in chunk.iter().zip(z.chunks_exact(d)) {
            out.push(LatentFeature {
                z: zf.iter().map(|&v| v as f64).collect(),
                frame_index: f.source_index,
            });
        }
    }
    out
}

/// Cluster, select, deduplicate and trim, starting from latent vectors.
pub fn keyframes_from_latents(
    latents: &[LatentFeature<f64>],
    ecfg: &ExtractConfig,
) -> Result<KeyframeSet> {
    ecfg.validate()?;
    let k = oversampled_k(ecfg.requested_k, ecfg.oversample);
    if latents.len() < k {
        return Err(Error::TooFewFrames {
            needed: k,
            clusters: k,
            available: latents.len(),
        });
    }
    let points: Vec<&[f64]> = latents.iter().map(|l| l.z.as_slice()).collect();
    let kp = KMeansParams {
        restarts: ecfg.restarts,
        ..Default::default()
    };
    let model = kmeans_fit(&points, k, &mut Rng::new(ecfg.seed), &kp)?;
    log::info!(
        "k-means: k = {k}, inertia {:.6}, {} iterations",
        model.inertia,
        model.iterations
    );
    let candidates = select_representatives(latents, &model, ecfg.metric)?;
    let outcome = dedup(&candidates, latents, ecfg.metric)?;
    let cluster_sizes = model.cluster_sizes();
    let keyframes = trim_to_k(&outcome.survivors, &cluster_sizes, ecfg.requested_k);
    Ok(KeyframeSet {
        requested_k: ecfg.requested_k,
        oversampled_k: k,
        policy: outcome.policy,
        candidates,
        survivors: outcome.survivors,
        merges: outcome.merges,
        keyframes,
        cluster_sizes,
    })
}

/// Full pipeline over already loaded frames.
pub fn extract_from_frames(
    raw: &[RawFrame],
    params: &ModelParams<f32>,
    cfg: &ModelConfig,
    ecfg: &ExtractConfig,
) -> Result<KeyframeSet> {
    ecfg.validate()?;
    let k = oversampled_k(ecfg.requested_k, ecfg.oversample);
    if raw.len() < k {
        return Err(Error::TooFewFrames {
            needed: k,
            clusters: k,
            available: raw.len(),
        });
    }
    let frames = prepare_frames(raw, cfg)?;
    let latents = encode_frames(params, cfg, &frames);
    keyframes_from_latents(&latents, ecfg)
}

/// Loads frames and model from disk and runs the full pipeline.
pub fn extract_keyframes(
    frames_dir: &Path,
    model_path: &Path,
    ecfg: &ExtractConfig,
) -> Result<KeyframeSet> {
    ecfg.validate()?;
    let raw = load_frame_sequence(frames_dir)?;
    let (params, cfg) = load_model(model_path)?;
    extract_from_frames(&raw, &params, &cfg, ecfg)
}
