use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::frame::RawFrame;
use crate::error::{Error, Result};

/// Parses `frame_<digits>.png` / `frame_<digits>.ppm` (at least six digits).
fn frame_index(name: &str) -> Option<usize> {
    let stem = name.strip_prefix("frame_")?;
    let digits = stem
        .strip_suffix(".png")
        .or_else(|| stem.strip_suffix(".ppm"))?;
    if digits.len() < 6 || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

/// File name for frame `index`.
pub fn frame_file_name(index: usize, ext: &str) -> String {
    format!("frame_{index:06}.{ext}")
}

/// Frame files in index order. Indices must be contiguous from 0.
///
/// A missing or unreadable directory is reported the same way as an empty one.
pub fn list_frame_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = match fs::read_dir(dir) {
        Ok(e) => e,
        Err(_) => return Err(Error::NoFrames(dir.to_path_buf())),
    };
    let mut found: BTreeMap<usize, PathBuf> = BTreeMap::new();
    for entry in entries {
        let entry = entry?;
        let name = entry.file_name();
        let Some(index) = name.to_str().and_then(frame_index) else {
            continue;
        };
        let path = entry.path();
        if let Some(prev) = found.insert(index, path.clone()) {
            let (first, second) = if prev < path {
                (prev, path)
            } else {
                (path, prev)
            };
            return Err(Error::DuplicateFrame {
                index,
                first,
                second,
            });
        }
    }
    if found.is_empty() {
        return Err(Error::NoFrames(dir.to_path_buf()));
    }
    for (expected, &index) in found.keys().enumerate() {
        if index != expected {
            return Err(Error::MissingFrame(expected));
        }
    }
    Ok(found.into_values().collect())
}

pub fn read_frame(path: &Path) -> Result<RawFrame> {
    let img = image::open(path).map_err(|e| Error::UnreadableFrame {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    Ok(RawFrame::from_rgb_image(&img.into_rgb8()))
}

/// Decodes every frame of a directory, checking that all share one size.
pub fn load_frame_sequence(dir: &Path) -> Result<Vec<RawFrame>> {
    let files = list_frame_files(dir)?;
    let mut frames: Vec<RawFrame> = Vec::with_capacity(files.len());
    for path in &files {
        let f = read_frame(path)?;
        if let Some(first) = frames.first() {
            if (f.width, f.height) != (first.width, first.height) {
                return Err(Error::MixedDimensions {
                    path: path.clone(),
                    got_w: f.width as u32,
                    got_h: f.height as u32,
                    want_w: first.width as u32,
                    want_h: first.height as u32,
                });
            }
        }
        frames.push(f);
    }
    Ok(frames)
}

/// Writes `bytes` to a sibling temporary file, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::InvalidConfig(format!("not a file path: {}", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(file_name);
    tmp_name.push(format!(".{}.tmp", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}

pub fn encode_png(img: &image::RgbImage) -> Result<Vec<u8>> {
    let mut out = std::io::Cursor::new(Vec::new());
    img.write_to(&mut out, image::ImageFormat::Png)?;
    Ok(out.into_inner())
}

pub fn write_png(path: &Path, img: &image::RgbImage) -> Result<()> {
    write_atomic(path, &encode_png(img)?)
}
