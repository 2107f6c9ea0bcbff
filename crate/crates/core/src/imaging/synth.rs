//! Synthetic multi-scene sequences with known ground truth.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::frame::RawFrame;
use super::io::{frame_file_name, write_png};
use crate::error::{Error, Result};
use crate::evaluation::{GroundTruth, Interval};
use crate::rng::Rng;

pub const SYNTH_WIDTH: usize = 128;
pub const SYNTH_HEIGHT: usize = 96;
const SQUARE: usize = 8;
const SPEED: i64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub scene_count: usize,
    pub frames_per_scene: usize,
    pub seed: u64,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        if self.scene_count == 0 || self.frames_per_scene == 0 {
            return Err(Error::InvalidConfig(
                "scene_count and frames_per_scene must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn total_frames(&self) -> usize {
        self.scene_count * self.frames_per_scene
    }

    /// Background hue of scene `s`, evenly spaced in `[0, 1)`.
    pub fn scene_hue(&self, s: usize) -> f64 {
        s as f64 / self.scene_count as f64
    }
}

/// Start corner and per-frame step of the moving square in one scene.
#[derive(Debug, Clone, Copy)]
struct Motion {
    x0: i64,
    y0: i64,
    dx: i64,
    dy: i64,
}

fn motions(spec: &SceneSpec) -> Vec<Motion> {
    let mut rng = Rng::new(spec.seed);
    (0..spec.scene_count)
        .map(|_| {
            let x0 = rng.below((SYNTH_WIDTH - SQUARE + 1) as u64) as i64;
            let y0 = rng.below((SYNTH_HEIGHT - SQUARE + 1) as u64) as i64;
            let (dx, dy) = match rng.below(4) {
                0 => (SPEED, 0),
                1 => (-SPEED, 0),
                2 => (0, SPEED),
                _ => (0, -SPEED),
            };
            Motion { x0, y0, dx, dy }
        })
        .collect()
}

/// Position on `[0, span]` bouncing off both ends.
fn reflect(p: i64, span: i64) -> i64 {
    if span == 0 {
        return 0;
    }
    let period = 2 * span;
    let m = p.rem_euclid(period);
    if m <= span {
        m
    } else {
        period - m
    }
}

/// Fully saturated, full-value color for hue `h` in `[0, 1)`, as `[b, g, r]`.
fn hue_to_bgr(h: f64) -> [u8; 3] {
    let hp = h * 6.0;
    let sector = hp.floor() as i64;
    let f = hp - sector as f64;
    let up = (f * 255.0).round() as u8;
    let down = ((1.0 - f) * 255.0).round() as u8;
    let (r, g, b) = match sector.rem_euclid(6) {
        0 => (255, up, 0),
        1 => (down, 255, 0),
        2 => (0, 255, up),
        3 => (0, down, 255),
        4 => (up, 0, 255),
        _ => (255, 0, down),
    };
    [b, g, r]
}

/// Frame `index` of the sequence described by `spec`.
pub fn render_synthetic_frame(spec: &SceneSpec, index: usize) -> RawFrame {
    render_with(spec, &motions(spec), index)
}

fn render_with(spec: &SceneSpec, motions: &[Motion], index: usize) -> RawFrame {
    let scene = index / spec.frames_per_scene;
    let t = (index % spec.frames_per_scene) as i64;
    let m = motions[scene];
    let sx = reflect(m.x0 + m.dx * t, (SYNTH_WIDTH - SQUARE) as i64) as usize;
    let sy = reflect(m.y0 + m.dy * t, (SYNTH_HEIGHT - SQUARE) as i64) as usize;
    let mut frame = RawFrame::filled(SYNTH_WIDTH, SYNTH_HEIGHT, hue_to_bgr(spec.scene_hue(scene)));
    for y in sy..sy + SQUARE {
        for x in sx..sx + SQUARE {
            frame.pixels[y * SYNTH_WIDTH + x] = [0, 0, 0];
        }
    }
    frame
}

/// Middle half of every scene is positive; the leading and trailing quarters are negative.
pub fn synthetic_truth(spec: &SceneSpec) -> GroundTruth {
    let f = spec.frames_per_scene;
    let q = f / 4;
    let mut intervals = Vec::new();
    for s in 0..spec.scene_count {
        let base = s * f;
        for (start, end, label) in [(0, q, 0), (q, f - q, 1), (f - q, f, 0)] {
            if start < end {
                intervals.push(Interval {
                    start: base + start,
                    end: base + end,
                    label,
                });
            }
        }
    }
    GroundTruth::new(spec.total_frames(), intervals).expect("synthetic intervals tile the sequence")
}

/// Writes every frame as `frame_%06d.png` under `out_dir` and returns the truth.
pub fn generate_synthetic_sequence(spec: &SceneSpec, out_dir: &Path) -> Result<GroundTruth> {
    spec.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let motions = motions(spec);
    for i in 0..spec.total_frames() {
        let frame = render_with(spec, &motions, i);
        write_png(
            &out_dir.join(frame_file_name(i, "png")),
            &frame.to_rgb_image(),
        )?;
    }
    Ok(synthetic_truth(spec))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::color::bgr_to_hsv;
    use crate::imaging::frame::preprocess_frame;

    #[test]
    fn counts_and_intervals() {
        let spec = SceneSpec {
            scene_count: 2,
            frames_per_scene: 10,
            seed: 1,
        };
        let dir = tempfile::tempdir().unwrap();
        let truth = generate_synthetic_sequence(&spec, dir.path()).unwrap();
        let files = crate::imaging::list_frame_files(dir.path()).unwrap();
        assert_eq!(files.len(), 20);
        assert_eq!(truth.total_frames, 20);
        assert_eq!(truth.positive_count(), 2);
    }

    #[test]
    fn forty_frame_scene_truth() {
        let spec = SceneSpec {
            scene_count: 5,
            frames_per_scene: 40,
            seed: 3,
        };
        let truth = synthetic_truth(&spec);
        let positives: Vec<(usize, usize)> = truth
            .intervals
            .iter()
            .filter(|iv| iv.label == 1)
            .map(|iv| (iv.start, iv.end))
            .collect();
        assert_eq!(
            positives,
            vec![(10, 30), (50, 70), (90, 110), (130, 150), (170, 190)]
        );
    }

    #[test]
    fn same_seed_same_bytes() {
        let spec = SceneSpec {
            scene_count: 2,
            frames_per_scene: 3,
            seed: 77,
        };
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        generate_synthetic_sequence(&spec, a.path()).unwrap();
        generate_synthetic_sequence(&spec, b.path()).unwrap();
        for i in 0..6 {
            let name = frame_file_name(i, "png");
            assert_eq!(
                std::fs::read(a.path().join(&name)).unwrap(),
                std::fs::read(b.path().join(&name)).unwrap()
            );
        }
    }

    #[test]
    fn scene_hues_evenly_spaced() {
        let spec = SceneSpec {
            scene_count: 4,
            frames_per_scene: 1,
            seed: 0,
        };
        let hues: Vec<f64> = (0..4).map(|s| spec.scene_hue(s)).collect();
        assert_eq!(hues, vec![0.0, 0.25, 0.5, 0.75]);
        // The rendered background decodes back to the same hue.
        for (s, &hue) in hues.iter().enumerate() {
            let f = render_synthetic_frame(&spec, s);
            let corner = if f.pixels[0] == [0, 0, 0] {
                f.pixels[f.pixels.len() - 1]
            } else {
                f.pixels[0]
            };
            let (h, sat, v) = bgr_to_hsv(corner[0], corner[1], corner[2]);
            // 8-bit channels quantize hue to within 1 / (6 * 255).
            assert!(
                (h as f64 - hue).abs() <= 1.0 / (6.0 * 255.0),
                "scene {s}: {h}"
            );
            assert_eq!((sat, v), (1.0, 1.0));
        }
    }

    #[test]
    fn square_moves_two_pixels() {
        let spec = SceneSpec {
            scene_count: 1,
            frames_per_scene: 3,
            seed: 5,
        };
        let black = |f: &RawFrame| {
            let i = f.pixels.iter().position(|&p| p == [0, 0, 0]).unwrap();
            ((i % SYNTH_WIDTH) as i64, (i / SYNTH_WIDTH) as i64)
        };
        let a = black(&render_synthetic_frame(&spec, 0));
        let b = black(&render_synthetic_frame(&spec, 1));
        let step = (b.0 - a.0).abs() + (b.1 - a.1).abs();
        // 2 px unless the square bounced off an edge within the step.
        assert!(step == 2 || step == 0 || step == 1, "{a:?} -> {b:?}");
    }

    #[test]
    fn scenes_separable_in_mean_hue() {
        for n in [2usize, 3, 5, 8] {
            let spec = SceneSpec {
                scene_count: n,
                frames_per_scene: 6,
                seed: n as u64,
            };
            let means: Vec<Vec<f64>> = (0..n)
                .map(|s| {
                    (0..6)
                        .map(|t| {
                            let ft = preprocess_frame(&render_synthetic_frame(&spec, s * 6 + t), 0);
                            ft.plane(0).iter().map(|&v| v as f64).sum::<f64>() / 4096.0
                        })
                        .collect()
                })
                .collect();
            for a in 0..n {
                for b in a + 1..n {
                    for x in &means[a] {
                        for y in &means[b] {
                            assert!(
                                (x - y).abs() >= 1.0 / (2.0 * n as f64),
                                "n={n} scenes {a},{b}"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn reflect_bounces() {
        let v: Vec<i64> = (0..8).map(|p| reflect(p, 3)).collect();
        assert_eq!(v, vec![0, 1, 2, 3, 2, 1, 0, 1]);
        assert_eq!(reflect(-1, 3), 1);
    }

    #[test]
    fn unwritable_dir_errors() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("blocker");
        std::fs::write(&file, "x").unwrap();
        let spec = SceneSpec {
            scene_count: 1,
            frames_per_scene: 1,
            seed: 0,
        };
        assert!(generate_synthetic_sequence(&spec, &file.join("sub")).is_err());
    }
}
