/// Hexcone BGR to HSV, each output channel in `[0, 1]`.
///
/// Hue is computed in degrees and divided by 360. Achromatic pixels get hue 0.
/// When several channels share the maximum, red takes precedence over green and
/// green over blue.
pub fn bgr_to_hsv(b: u8, g: u8, r: u8) -> (f32, f32, f32) {
    let (r, g, b) = (r as f32 / 255.0, g as f32 / 255.0, b as f32 / 255.0);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let v = max;
    let s = if max > 0.0 { delta / max } else { 0.0 };
    if delta == 0.0 {
        return (0.0, s, v);
    }
    let mut deg = if max == r {
        60.0 * ((g - b) / delta)
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    if deg < 0.0 {
        deg += 360.0;
    }
    let h = deg / 360.0;
    // -0.0 + 360 rounding can land exactly on 1.0
    (if h >= 1.0 { 0.0 } else { h }, s, v)
}
