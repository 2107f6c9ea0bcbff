/// Planar float image: `channels` planes of `height x width`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneImage {
    pub channels: usize,
    pub width: usize,
    pub height: usize,
    pub data: Vec<f32>,
}

impl PlaneImage {
    pub fn new(channels: usize, width: usize, height: usize, data: Vec<f32>) -> Self {
        assert!(channels >= 1 && width >= 1 && height >= 1, "empty image");
        assert_eq!(data.len(), channels * width * height, "plane data size");
        Self {
            channels,
            width,
            height,
            data,
        }
    }

    pub fn plane(&self, c: usize) -> &[f32] {
        let n = self.width * self.height;
        &self.data[c * n..(c + 1) * n]
    }

    pub fn at(&self, c: usize, y: usize, x: usize) -> f32 {
        self.data[(c * self.height + y) * self.width + x]
    }
}

/// Source sample positions for one axis: `(i0, i1, frac)` per output index.
fn taps(src: usize, dst: usize) -> Vec<(usize, usize, f32)> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|i| {
            let pos = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (src - 1) as f64);
            let i0 = pos.floor() as usize;
            let i1 = (i0 + 1).min(src - 1);
            (i0, i1, (pos - i0 as f64) as f32)
        })
        .collect()
}

/// Bilinear resize with pixel-center alignment, each channel independently.
pub fn resize_bilinear(img: &PlaneImage, out_w: usize, out_h: usize) -> PlaneImage {
    assert!(out_w >= 1 && out_h >= 1, "target size must be positive");
    let xs = taps(img.width, out_w);
    let ys = taps(img.height, out_h);
    let mut data = Vec::with_capacity(img.channels * out_w * out_h);
    for c in 0..img.channels {
        let plane = img.plane(c);
        for &(y0, y1, fy) in &ys {
            let row0 = &plane[y0 * img.width..(y0 + 1) * img.width];
            let row1 = &plane[y1 * img.width..(y1 + 1) * img.width];
            for &(x0, x1, fx) in &xs {
                let top = row0[x0] + (row0[x1] - row0[x0]) * fx;
                let bottom = row1[x0] + (row1[x1] - row1[x0]) * fx;
                data.push(top + (bottom - top) * fy);
            }
        }
    }
    PlaneImage::new(img.channels, out_w, out_h, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    #[test]
    fn same_size_is_identity() {
        let mut rng = Rng::new(4);
        let data: Vec<f32> = (0..3 * 7 * 5).map(|_| rng.uniform() as f32).collect();
        let img = PlaneImage::new(3, 7, 5, data);
        let out = resize_bilinear(&img, 7, 5);
        for (a, b) in out.data.iter().zip(&img.data) {
            assert!((a - b).abs() <= 1e-6);
        }
    }

    #[test]
    fn two_by_two_to_one() {
        let img = PlaneImage::new(1, 2, 2, vec![0.0, 1.0, 1.0, 0.0]);
        assert_eq!(resize_bilinear(&img, 1, 1).data, vec![0.5]);
    }

    #[test]
    fn upsample_row() {
        let img = PlaneImage::new(1, 2, 1, vec![0.0, 1.0]);
        assert_eq!(resize_bilinear(&img, 4, 1).data, vec![0.0, 0.25, 0.75, 1.0]);
    }

    #[test]
    fn output_stays_in_input_range() {
        let mut rng = Rng::new(8);
        let data: Vec<f32> = (0..2 * 13 * 9).map(|_| rng.uniform() as f32).collect();
        let img = PlaneImage::new(2, 13, 9, data);
        for (w, h) in [(64, 64), (3, 17), (1, 1)] {
            let out = resize_bilinear(&img, w, h);
            assert!(out.data.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }
}
