use image::{Rgb, RgbImage};

use super::frame::RawFrame;
use super::resize::{resize_bilinear, PlaneImage};

pub const CELL: u32 = 128;
pub const BORDER: u32 = 2;
const BORDER_COLOR: Rgb<u8> = Rgb([96, 96, 96]);

/// Canvas `(width, height)` for `n` thumbnails in `cols` columns: a 2 px grid
/// line around and between 128 px cells.
pub fn sheet_size(n: usize, cols: usize) -> (u32, u32) {
    let cols = cols.min(n).max(1) as u32;
    let rows = n.div_ceil(cols as usize).max(1) as u32;
    (
        cols * CELL + (cols + 1) * BORDER,
        rows * CELL + (rows + 1) * BORDER,
    )
}

fn thumbnail(frame: &RawFrame) -> RgbImage {
    let n = frame.pixels.len();
    let mut data = vec![0.0f32; 3 * n];
    for (i, &[b, g, r]) in frame.pixels.iter().enumerate() {
        data[i] = r as f32;
        data[n + i] = g as f32;
        data[2 * n + i] = b as f32;
    }
    let src = PlaneImage::new(3, frame.width, frame.height, data);
    let out = resize_bilinear(&src, CELL as usize, CELL as usize);
    let plane = (CELL * CELL) as usize;
    RgbImage::from_fn(CELL, CELL, |x, y| {
        let i = (y * CELL + x) as usize;
        let px = |c: usize| out.data[c * plane + i].round().clamp(0.0, 255.0) as u8;
        Rgb([px(0), px(1), px(2)])
    })
}

/// Grid montage of keyframes, row-major by ascending frame index. Unused cells
/// stay black. Panics on an empty list or `cols == 0`.
pub fn render_contact_sheet(keyframes: &[(usize, &RawFrame)], cols: usize) -> RgbImage {
    assert!(
        !keyframes.is_empty(),
        "contact sheet needs at least one frame"
    );
    assert!(cols >= 1, "contact sheet needs at least one column");
    let mut ordered: Vec<&(usize, &RawFrame)> = keyframes.iter().collect();
    ordered.sort_by_key(|(i, _)| *i);

    let cols_used = cols.min(ordered.len());
    let (w, h) = sheet_size(ordered.len(), cols);
    let mut canvas = RgbImage::from_pixel(w, h, BORDER_COLOR);
    let rows = ordered.len().div_ceil(cols_used);
    for slot in 0..rows * cols_used {
        let (r, c) = ((slot / cols_used) as u32, (slot % cols_used) as u32);
        let ox = BORDER + c * (CELL + BORDER);
        let oy = BORDER + r * (CELL + BORDER);
        let thumb = ordered.get(slot).map(|(_, f)| thumbnail(f));
        for y in 0..CELL {
            for x in 0..CELL {
                let px = thumb
                    .as_ref()
                    .map_or(Rgb([0, 0, 0]), |t| *t.get_pixel(x, y));
                canvas.put_pixel(ox + x, oy + y, px);
            }
        }
    }
    canvas
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_arithmetic() {
        assert_eq!(sheet_size(1, 3), (132, 132));
        assert_eq!(sheet_size(5, 3), (392, 262));
        assert_eq!(sheet_size(6, 3), (392, 262));
    }

    #[test]
    fn five_frames_leave_one_black_cell() {
        let frames: Vec<RawFrame> = (0..5)
            .map(|i| RawFrame::filled(16, 9, [0, 0, 50 * i as u8 + 40]))
            .collect();
        let list: Vec<(usize, &RawFrame)> = frames.iter().enumerate().collect();
        let sheet = render_contact_sheet(&list, 3);
        assert_eq!(sheet.dimensions(), (392, 262));
        // Cell (row 1, col 2) is empty.
        let ox = BORDER + 2 * (CELL + BORDER) + CELL / 2;
        let oy = BORDER + (CELL + BORDER) + CELL / 2;
        assert_eq!(*sheet.get_pixel(ox, oy), Rgb([0, 0, 0]));
        // Cell (row 1, col 1) holds frame 4.
        let ox = BORDER + (CELL + BORDER) + CELL / 2;
        assert_eq!(*sheet.get_pixel(ox, oy), Rgb([240, 0, 0]));
        assert_eq!(*sheet.get_pixel(0, 0), BORDER_COLOR);
    }

    #[test]
    fn sorted_by_frame_index() {
        let a = RawFrame::filled(4, 4, [0, 0, 200]);
        let b = RawFrame::filled(4, 4, [200, 0, 0]);
        let sheet = render_contact_sheet(&[(9, &a), (2, &b)], 2);
        assert_eq!(*sheet.get_pixel(BORDER + 5, BORDER + 5), Rgb([0, 0, 200]));
    }

    #[test]
    fn single_frame_grid() {
        let f = RawFrame::filled(3, 3, [1, 2, 3]);
        let sheet = render_contact_sheet(&[(0, &f)], 4);
        assert_eq!(sheet.dimensions(), (132, 132));
    }
}
