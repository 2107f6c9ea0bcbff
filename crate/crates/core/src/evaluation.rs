//! Interval hit testing, confusion matrix and per-class scores.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Half-open frame range `[start, end)` with a binary label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interval {
    pub start: usize,
    pub end: usize,
    pub label: u8,
}

impl Interval {
    pub fn contains(&self, frame: usize) -> bool {
        self.start <= frame && frame < self.end
    }
}

/// Annotated intervals tiling `[0, total_frames)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GroundTruth {
    pub total_frames: usize,
    pub intervals: Vec<Interval>,
}

#[derive(Deserialize)]
struct RawTruth {
    total_frames: usize,
    intervals: Vec<Interval>,
}

impl<'de> Deserialize<'de> for GroundTruth {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawTruth::deserialize(d)?;
        GroundTruth::new(raw.total_frames, raw.intervals).map_err(serde::de::Error::custom)
    }
}

impl GroundTruth {
    /// Sorts by start and checks labels, non-overlap and full coverage.
    pub fn new(total_frames: usize, mut intervals: Vec<Interval>) -> Result<Self> {
        if total_frames == 0 {
            return Err(Error::InvalidTruth("total_frames must be positive".into()));
        }
        for (i, iv) in intervals.iter().enumerate() {
            if iv.label > 1 {
                return Err(Error::InvalidTruth(format!(
                    "intervals[{i}].label must be 0 or 1"
                )));
            }
            if iv.start >= iv.end {
                return Err(Error::InvalidTruth(format!(
                    "intervals[{i}]: start {} must be below end {}",
                    iv.start, iv.end
                )));
            }
        }
        intervals.sort_by_key(|iv| (iv.start, iv.end));
        let mut cursor = 0;
        for iv in &intervals {
            if iv.start < cursor {
                return Err(Error::InvalidTruth("intervals overlap".into()));
            }
            if iv.start > cursor {
                return Err(Error::InvalidTruth(format!(
                    "intervals leave frames [{cursor}, {}) uncovered",
                    iv.start
                )));
            }
            cursor = iv.end;
        }
        if cursor != total_frames {
            return Err(Error::InvalidTruth(format!(
                "intervals end at {cursor} but total_frames is {total_frames}"
            )));
        }
        Ok(Self {
            total_frames,
            intervals,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("truth serializes")
    }

    pub fn positive_count(&self) -> usize {
        self.intervals.iter().filter(|iv| iv.label == 1).count()
    }
}

/// Interval-level confusion counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

impl std::ops::Add for ConfusionMatrix {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            fn_: self.fn_ + o.fn_,
            tn: self.tn + o.tn,
        }
    }
}

/// An interval is predicted positive when it holds at least one keyframe.
pub fn match_intervals(keyframes: &[usize], truth: &GroundTruth) -> Result<ConfusionMatrix> {
    if let Some(&bad) = keyframes.iter().find(|&&k| k >= truth.total_frames) {
        return Err(Error::FrameOutOfRange {
            index: bad,
            total: truth.total_frames,
        });
    }
    let mut cm = ConfusionMatrix::default();
    for iv in &truth.intervals {
        let hit = keyframes.iter().any(|&k| iv.contains(k));
        match (iv.label == 1, hit) {
            (true, true) => cm.tp += 1,
            (true, false) => cm.fn_ += 1,
            (false, true) => cm.fp += 1,
            (false, false) => cm.tn += 1,
        }
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl ClassScore {
    fn from_counts(hit: u64, false_alarm: u64, miss: u64) -> Self {
        let ratio = |num: u64, den: u64| {
            if den == 0 {
                0.0
            } else {
                num as f64 / den as f64
            }
        };
        let precision = ratio(hit, hit + false_alarm);
        let recall = ratio(hit, hit + miss);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Self {
            precision,
            recall,
            f1,
        }
    }
}

/// One-vs-rest scores for the negative (0) and positive (1) class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub class0: ClassScore,
    pub class1: ClassScore,
}

/// Precision, recall and F1 per class; any 0/0 ratio is 0.
pub fn scores(cm: &ConfusionMatrix) -> ClassScores {
    ClassScores {
        class0: ClassScore::from_counts(cm.tn, cm.fn_, cm.fp),
        class1: ClassScore::from_counts(cm.tp, cm.fp, cm.fn_),
    }
}

/// Evaluation output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub confusion: ConfusionMatrix,
    pub class0: ClassScore,
    pub class1: ClassScore,
}

impl ScoreReport {
    pub fn new(confusion: ConfusionMatrix) -> Self {
        let s = scores(&confusion);
        Self {
            confusion,
            class0: s.class0,
            class1: s.class1,
        }
    }

    /// Two-row table, values at two decimals.
    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<6} {:>9} {:>9} {:>9}",
            "class", "precision", "recall", "f1-score"
        );
        for (name, s) in [("0", self.class0), ("1", self.class1)] {
            let _ = writeln!(
                out,
                "{:<6} {:>9.2} {:>9.2} {:>9.2}",
                name, s.precision, s.recall, s.f1
            );
        }
        out
    }
}
