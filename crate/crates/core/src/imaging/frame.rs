use super::color::bgr_to_hsv;
use super::resize::{resize_bilinear, PlaneImage};

/// Side length of the square model input.
pub const FRAME_SIZE: usize = 64;

/// Decoded 8-bit frame, pixels stored as `[b, g, r]`, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawFrame {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<[u8; 3]>,
}

impl RawFrame {
    pub fn new(width: usize, height: usize, pixels: Vec<[u8; 3]>) -> Self {
        assert!(width >= 1 && height >= 1, "frame must be non-empty");
        assert_eq!(pixels.len(), width * height, "pixel count");
        Self {
            width,
            height,
            pixels,
        }
    }

    pub fn filled(width: usize, height: usize, bgr: [u8; 3]) -> Self {
        Self::new(width, height, vec![bgr; width * height])
    }

    pub fn from_rgb_image(img: &image::RgbImage) -> Self {
        let pixels = img.pixels().map(|p| [p.0[2], p.0[1], p.0[0]]).collect();
        Self::new(img.width() as usize, img.height() as usize, pixels)
    }

    pub fn to_rgb_image(&self) -> image::RgbImage {
        let mut buf = Vec::with_capacity(self.pixels.len() * 3);
        for &[b, g, r] in &self.pixels {
            buf.extend_from_slice(&[r, g, b]);
        }
        image::RgbImage::from_raw(self.width as u32, self.height as u32, buf)
            .expect("buffer matches dimensions")
    }

    /// Per-pixel HSV, planar in H, S, V order, at the native resolution.
    pub fn to_hsv_planes(&self) -> PlaneImage {
        let n = self.pixels.len();
        let mut data = vec![0.0f32; 3 * n];
        for (i, &[b, g, r]) in self.pixels.iter().enumerate() {
            let (h, s, v) = bgr_to_hsv(b, g, r);
            data[i] = h;
            data[n + i] = s;
            data[2 * n + i] = v;
        }
        PlaneImage::new(3, self.width, self.height, data)
    }
}

/// Model input: HSV planes in `[0, 1]`, shape `3 x height x width`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameTensor {
    pub data: Vec<f32>,
    pub height: usize,
    pub width: usize,
    /// Position of the frame in its sequence.
    pub source_index: usize,
}

impl FrameTensor {
    pub fn shape(&self) -> [usize; 3] {
        [3, self.height, self.width]
    }

    pub fn plane(&self, c: usize) -> &[f32] {
        let n = self.width * self.height;
        &self.data[c * n..(c + 1) * n]
    }
}

/// BGR bytes to HSV, then bilinear resize to `FRAME_SIZE x FRAME_SIZE`.
pub fn preprocess_frame(raw: &RawFrame, source_index: usize) -> FrameTensor {
    preprocess_frame_to(raw, source_index, FRAME_SIZE, FRAME_SIZE)
}

/// As [`preprocess_frame`] with an explicit output size.
///
/// Hue is interpolated linearly like the other channels, so a resize across
/// the red wrap-around (hue near 0 and near 1) blends to intermediate hues.
pub fn preprocess_frame_to(
    raw: &RawFrame,
    source_index: usize,
    width: usize,
    height: usize,
) -> FrameTensor {
    let hsv = raw.to_hsv_planes();
    let resized = resize_bilinear(&hsv, width, height);
    FrameTensor {
        data: resized
            .data
            .into_iter()
            .map(|v| v.clamp(0.0, 1.0))
            .collect(),
        height,
        width,
        source_index,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn uniform_red_frame() {
        let t = preprocess_frame(&RawFrame::filled(128, 128, [0, 0, 255]), 0);
        assert_eq!(t.shape(), [3, 64, 64]);
        assert!(t.plane(0).iter().all(|&v| v == 0.0));
        assert!(t.plane(1).iter().all(|&v| v == 1.0));
        assert!(t.plane(2).iter().all(|&v| v == 1.0));
    }

    #[test]
    fn black_frame_is_zero() {
        let t = preprocess_frame(&RawFrame::filled(50, 30, [0, 0, 0]), 3);
        assert!(t.data.iter().all(|&v| v == 0.0));
        assert_eq!(t.source_index, 3);
    }

    #[test]
    fn half_red_half_blue_identity_size() {
        // At 64x64 the resize samples pixel centers exactly, so the split stays sharp.
        let pixels = (0..64 * 64)
            .map(|i| {
                if i % 64 < 32 {
                    [0, 0, 255]
                } else {
                    [255, 0, 0]
                }
            })
            .collect();
        let t = preprocess_frame(&RawFrame::new(64, 64, pixels), 0);
        for y in 0..64 {
            for x in 0..64 {
                let h = t.plane(0)[y * 64 + x];
                let want = if x < 32 { 0.0 } else { 240.0 / 360.0 };
                assert!((h - want).abs() < 1e-6, "({x},{y}) = {h}");
            }
        }
    }

    #[test]
    fn half_red_half_blue_downsampled_has_one_blended_column() {
        let pixels = (0..128 * 128)
            .map(|i| {
                if i % 128 < 63 {
                    [0, 0, 255]
                } else {
                    [255, 0, 0]
                }
            })
            .collect();
        let t = preprocess_frame(&RawFrame::new(128, 128, pixels), 0);
        let row = &t.plane(0)[..64];
        let blended: Vec<usize> = (0..64)
            .filter(|&x| row[x] > 1e-6 && (row[x] - 240.0 / 360.0).abs() > 1e-6)
            .collect();
        assert_eq!(blended, vec![31]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn output_in_unit_range(
            w in 1usize..40,
            h in 1usize..40,
            seed in any::<u64>(),
        ) {
            let mut rng = crate::rng::Rng::new(seed);
            let pixels = (0..w * h).map(|_| [0, 1, 2].map(|_| rng.below(256) as u8)).collect();
            let t = preprocess_frame(&RawFrame::new(w, h, pixels), 0);
            prop_assert!(t.data.iter().all(|v| (0.0..=1.0).contains(v)));
            prop_assert_eq!(t.data.len(), 3 * 64 * 64);
        }
    }
}
