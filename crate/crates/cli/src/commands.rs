use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use keyframe_core::autoencoder::{save_model, train as train_model, ModelConfig, TrainConfig};
use keyframe_core::evaluation::{match_intervals, ConfusionMatrix, GroundTruth, ScoreReport};
use keyframe_core::imaging::{
    generate_synthetic_sequence, list_frame_files, load_frame_sequence, preprocess_frame_to,
    render_contact_sheet, write_atomic, write_png, RawFrame, SceneSpec,
};
use keyframe_core::keyframe::{extract_from_frames, ExtractConfig, KeyframeReport};
use keyframe_core::numerics::AdamConfig;
use serde::Serialize;

use crate::{EvalArgs, ExtractArgs, SynthArgs, TrainArgs};

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_atomic(path, s.as_bytes()).with_context(|| format!("writing {}", path.display()))
}

fn default_log_path(model: &Path) -> PathBuf {
    model.with_extension("log.json")
}

pub fn train(a: &TrainArgs) -> Result<()> {
    let mcfg = ModelConfig::default();
    let tcfg = TrainConfig {
        epochs: a.epochs as usize,
        batch_size: a.batch_size as usize,
        seed: a.seed,
        validation_stride: a.validation_stride,
        early_stop_patience: a.patience,
        adam: AdamConfig {
            lr: a.lr,
            ..Default::default()
        },
    };
    tcfg.validate().context("train: invalid configuration")?;

    let raw = load_frame_sequence(&a.frames).context("train: loading frames")?;
    let [_, h, w] = mcfg.input_shape;
    let frames: Vec<_> = raw
        .iter()
        .enumerate()
        .map(|(i, f)| preprocess_frame_to(f, i, w, h))
        .collect();
    let (params, log) = train_model(&frames, &mcfg, &tcfg).context("train: training")?;

    save_model(&params, &mcfg, &a.out).context("train: saving model")?;
    let log_path = a.log.clone().unwrap_or_else(|| default_log_path(&a.out));
    write_json(&log_path, &log).context("train: writing log")?;
    log::info!(
        "saved {} and {} (loss {:.6} -> {:.6})",
        a.out.display(),
        log_path.display(),
        log.initial_train_loss,
        log.final_train_loss
    );
    Ok(())
}

pub fn extract(a: &ExtractArgs) -> Result<()> {
    let ecfg = ExtractConfig {
        requested_k: a.k as usize,
        oversample: a.oversample,
        metric: a.metric,
        seed: a.seed,
        restarts: a.restarts as usize,
    };
    ecfg.validate().context("extract: invalid configuration")?;

    let raw = load_frame_sequence(&a.frames).context("extract: loading frames")?;
    let (params, mcfg) =
        keyframe_core::autoencoder::load_model(&a.model).context("extract: loading model")?;
    let set =
        extract_from_frames(&raw, &params, &mcfg, &ecfg).context("extract: keyframe selection")?;

    let report = set.report(&a.frames.display().to_string());
    write_atomic(&a.out, report.to_json().as_bytes()).context("extract: writing report")?;
    log::info!(
        "{} keyframes ({} candidates, {} merged): {:?}",
        set.keyframes.len(),
        set.candidates.len(),
        set.merges.len(),
        set.frame_indices()
    );

    if let Some(sheet) = &a.sheet {
        let picked: Vec<(usize, &RawFrame)> = set
            .frame_indices()
            .into_iter()
            .map(|i| (i, &raw[i]))
            .collect();
        let img = render_contact_sheet(&picked, a.sheet_cols as usize);
        write_png(sheet, &img).context("extract: writing contact sheet")?;
    }
    if let Some(dir) = &a.save_frames {
        save_frames(&a.frames, dir, &set.frame_indices())
            .context("extract: saving keyframe images")?;
    }
    Ok(())
}

fn save_frames(frames_dir: &Path, out: &Path, indices: &[usize]) -> Result<()> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let files = list_frame_files(frames_dir)?;
    for &i in indices {
        let src = &files[i];
        let name = src.file_name().context("frame path has no file name")?;
        let bytes = std::fs::read(src).with_context(|| format!("reading {}", src.display()))?;
        write_atomic(&out.join(name), &bytes)?;
    }
    Ok(())
}

pub fn eval(a: &EvalArgs) -> Result<()> {
    let confusion = match (&a.confusion, &a.report) {
        (Some([tp, fp, fn_, tn]), _) => ConfusionMatrix {
            tp: *tp,
            fp: *fp,
            fn_: *fn_,
            tn: *tn,
        },
        (None, Some(report_path)) => {
            let report = KeyframeReport::load(report_path)
                .with_context(|| format!("eval: reading report {}", report_path.display()))?;
            let truth_path = a
                .truth
                .as_ref()
                .context("eval: --truth is required with --report")?;
            let truth = GroundTruth::load(truth_path)
                .with_context(|| format!("eval: reading ground truth {}", truth_path.display()))?;
            match_intervals(&report.frame_indices(), &truth).context("eval: matching keyframes")?
        }
        (None, None) => anyhow::bail!("eval: either --report or --confusion is required"),
    };
    let scores = ScoreReport::new(confusion);
    print!("{}", scores.table());
    if let Some(out) = &a.out {
        write_json(out, &scores).context("eval: writing scores")?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SynthManifest {
    spec: SceneSpec,
    total_frames: usize,
    frames: String,
    truth: String,
    positive_intervals: usize,
}

pub fn synth(a: &SynthArgs) -> Result<()> {
    let spec = SceneSpec {
        scene_count: a.scenes as usize,
        frames_per_scene: a.frames_per_scene as usize,
        seed: a.seed,
    };
    let truth = generate_synthetic_sequence(&spec, &a.out).context("synth: writing frames")?;
    write_atomic(&a.truth, truth.to_json().as_bytes()).context("synth: writing ground truth")?;
    let manifest = a
        .manifest
        .clone()
        .unwrap_or_else(|| a.out.join("manifest.json"));
    let m = SynthManifest {
        spec,
        total_frames: spec.total_frames(),
        frames: a.out.display().to_string(),
        truth: a.truth.display().to_string(),
        positive_intervals: truth.positive_count(),
    };
    write_json(&manifest, &m).context("synth: writing manifest")?;
    log::info!(
        "wrote {} frames to {} ({} positive intervals)",
        spec.total_frames(),
        a.out.display(),
        truth.positive_count()
    );
    Ok(())
}
