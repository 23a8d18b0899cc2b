use crate::tensor::Tensor;

pub const COORD_CHANNELS: usize = 8;

/// Per-cell `[x_min, y_min, x_max, y_max, x_center, y_center, 1/W, 1/H]`, with
/// box coordinates of the cell normalized to `[-1, 1]`.
pub fn coord_feature(h: usize, w: usize) -> Tensor {
    assert!(h >= 1 && w >= 1, "coord_feature needs a non-empty grid");
    let mut t = Tensor::zeros(&[h, w, COORD_CHANNELS]);
    let data = t.data_mut();
    let (hf, wf) = (h as f64, w as f64);
    for y in 0..h {
        for x in 0..w {
            let x_min = 2.0 * x as f64 / wf - 1.0;
            let x_max = 2.0 * (x + 1) as f64 / wf - 1.0;
            let y_min = 2.0 * y as f64 / hf - 1.0;
            let y_max = 2.0 * (y + 1) as f64 / hf - 1.0;
            let cell = [
                x_min,
                y_min,
                x_max,
                y_max,
                (2.0 * x as f64 + 1.0 - wf) / wf,
                (2.0 * y as f64 + 1.0 - hf) / hf,
                1.0 / wf,
                1.0 / hf,
            ];
            let base = (y * w + x) * COORD_CHANNELS;
            data[base..base + COORD_CHANNELS].copy_from_slice(&cell);
        }
    }
    t
}
