//! Spatial kernels on `[H×W×C]` tensors: convolution, pooling, resampling.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

fn hwc(t: &Tensor, op: &'static str) -> Result<(usize, usize, usize)> {
    match t.shape() {
        [h, w, c] => Ok((*h, *w, *c)),
        s => Err(Error::dim(op, s, &[0, 0, 0])),
    }
}

pub(crate) fn conv2d_forward(x: &Tensor, w: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (h, wd, cin) = hwc(x, "conv2d_same")?;
    let (k, cout) = match w.shape() {
        [k, k2, ci, co] if k == k2 && *ci == cin => (*k, *co),
        s => return Err(Error::dim("conv2d_same", x.shape(), s)),
    };
    if k % 2 == 0 {
        return Err(Error::Config(alloc::format!(
            "conv2d_same kernel must be odd, got {k}"
        )));
    }
    if b.shape() != [cout] {
        return Err(Error::dim("conv2d_same", w.shape(), b.shape()));
    }
    let pad = (k - 1) / 2;
    let (xs, ws, bs) = (x.data(), w.data(), b.data());
    let mut out = vec![0.0; h * wd * cout];
    for y in 0..h {
        for xx in 0..wd {
            let o = &mut out[(y * wd + xx) * cout..(y * wd + xx + 1) * cout];
            o.copy_from_slice(bs);
            for ky in 0..k {
                let Some(iy) = (y + ky).checked_sub(pad).filter(|&v| v < h) else {
                    continue;
                };
                for kx in 0..k {
                    let Some(ix) = (xx + kx).checked_sub(pad).filter(|&v| v < wd) else {
                        continue;
                    };
                    let xin = &xs[(iy * wd + ix) * cin..(iy * wd + ix + 1) * cin];
                    let wbase = (ky * k + kx) * cin * cout;
                    for (ci, &xv) in xin.iter().enumerate() {
                        if xv == 0.0 {
                            continue;
                        }
                        let wrow = &ws[wbase + ci * cout..wbase + (ci + 1) * cout];
                        for (ov, wv) in o.iter_mut().zip(wrow) {
                            *ov += xv * wv;
                        }
                    }
                }
            }
        }
    }
    Tensor::new(vec![h, wd, cout], out)
}

type ConvGrads = (Option<Vec<f64>>, Option<Vec<f64>>, Option<Vec<f64>>);

pub(crate) fn conv2d_backward(x: &Tensor, w: &Tensor, g: &[f64], needs: [bool; 3]) -> ConvGrads {
    let (h, wd, cin) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    let (k, cout) = (w.shape()[0], w.shape()[3]);
    let pad = (k - 1) / 2;
    let (xs, ws) = (x.data(), w.data());
    let mut dx = needs[0].then(|| vec![0.0; xs.len()]);
    let mut dw = needs[1].then(|| vec![0.0; ws.len()]);
    let db = needs[2].then(|| {
        let mut db = vec![0.0; cout];
        for grow in g.chunks(cout) {
            for (d, gv) in db.iter_mut().zip(grow) {
                *d += gv;
            }
        }
        db
    });
    if dx.is_none() && dw.is_none() {
        return (dx, dw, db);
    }
    for y in 0..h {
        for xx in 0..wd {
            let grow = &g[(y * wd + xx) * cout..(y * wd + xx + 1) * cout];
            for ky in 0..k {
                let Some(iy) = (y + ky).checked_sub(pad).filter(|&v| v < h) else {
                    continue;
                };
                for kx in 0..k {
                    let Some(ix) = (xx + kx).checked_sub(pad).filter(|&v| v < wd) else {
                        continue;
                    };
                    let xbase = (iy * wd + ix) * cin;
                    let wbase = (ky * k + kx) * cin * cout;
                    for ci in 0..cin {
                        let wrow = wbase + ci * cout..wbase + (ci + 1) * cout;
                        if let Some(dx) = dx.as_mut() {
                            let s: f64 =
                                ws[wrow.clone()].iter().zip(grow).map(|(a, b)| a * b).sum();
                            dx[xbase + ci] += s;
                        }
                        if let Some(dw) = dw.as_mut() {
                            let xv = xs[xbase + ci];
                            if xv != 0.0 {
                                for (d, gv) in dw[wrow].iter_mut().zip(grow) {
                                    *d += xv * gv;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    (dx, dw, db)
}

pub(crate) fn avg_pool_forward(x: &Tensor, f: usize) -> Result<Tensor> {
    let (h, w, c) = hwc(x, "avg_pool")?;
    if f == 0 || h % f != 0 || w % f != 0 {
        return Err(Error::dim("avg_pool", x.shape(), &[f]));
    }
    let (oh, ow) = (h / f, w / f);
    let norm = 1.0 / (f * f) as f64;
    let mut out = vec![0.0; oh * ow * c];
    let xs = x.data();
    for y in 0..h {
        for xx in 0..w {
            let o = ((y / f) * ow + xx / f) * c;
            let i = (y * w + xx) * c;
            for ch in 0..c {
                out[o + ch] += xs[i + ch] * norm;
            }
        }
    }
    Tensor::new(vec![oh, ow, c], out)
}

pub(crate) fn avg_pool_backward(shape: &[usize], f: usize, g: &[f64], d: &mut [f64]) {
    let (w, c) = (shape[1], shape[2]);
    let ow = w / f;
    let norm = 1.0 / (f * f) as f64;
    for y in 0..shape[0] {
        for xx in 0..w {
            let o = ((y / f) * ow + xx / f) * c;
            let i = (y * w + xx) * c;
            for ch in 0..c {
                d[i + ch] += g[o + ch] * norm;
            }
        }
    }
}

/// Source indices and weights for half-pixel bilinear upsampling along one
/// axis: output `i` reads `(1 - t)·src[i0] + t·src[i1]`.
pub(crate) fn bilinear_weights(n: usize, factor: usize) -> Vec<(usize, usize, f64)> {
    (0..n * factor)
        .map(|i| {
            let s = ((i as f64 + 0.5) / factor as f64 - 0.5).max(0.0);
            let i0 = (libm::floor(s) as usize).min(n - 1);
            let i1 = (i0 + 1).min(n - 1);
            let t = if i1 == i0 { 0.0 } else { s - i0 as f64 };
            (i0, i1, t)
        })
        .collect()
}

pub(crate) fn upsample_forward(x: &Tensor, f: usize) -> Result<Tensor> {
    let (h, w, c) = hwc(x, "upsample_bilinear")?;
    if f == 0 {
        return Err(Error::Config("upsample factor must be at least 1".into()));
    }
    if f == 1 {
        return Ok(x.clone());
    }
    let (ry, rx) = (bilinear_weights(h, f), bilinear_weights(w, f));
    let ow = w * f;
    let xs = x.data();
    let mut out = vec![0.0; h * f * ow * c];
    for (oy, &(y0, y1, ty)) in ry.iter().enumerate() {
        for (ox, &(x0, x1, tx)) in rx.iter().enumerate() {
            let o = (oy * ow + ox) * c;
            let taps = [
                (y0, x0, (1.0 - ty) * (1.0 - tx)),
                (y0, x1, (1.0 - ty) * tx),
                (y1, x0, ty * (1.0 - tx)),
                (y1, x1, ty * tx),
            ];
            for (sy, sx, wt) in taps {
                if wt == 0.0 {
                    continue;
                }
                let i = (sy * w + sx) * c;
                for ch in 0..c {
                    out[o + ch] += wt * xs[i + ch];
                }
            }
        }
    }
    Tensor::new(vec![h * f, ow, c], out)
}

pub(crate) fn upsample_backward(shape: &[usize], f: usize, g: &[f64], d: &mut [f64]) {
    let (h, w, c) = (shape[0], shape[1], shape[2]);
    if f == 1 {
        for (dv, gv) in d.iter_mut().zip(g) {
            *dv += gv;
        }
        return;
    }
    let (ry, rx) = (bilinear_weights(h, f), bilinear_weights(w, f));
    let ow = w * f;
    for (oy, &(y0, y1, ty)) in ry.iter().enumerate() {
        for (ox, &(x0, x1, tx)) in rx.iter().enumerate() {
            let o = (oy * ow + ox) * c;
            let taps = [
                (y0, x0, (1.0 - ty) * (1.0 - tx)),
                (y0, x1, (1.0 - ty) * tx),
                (y1, x0, ty * (1.0 - tx)),
                (y1, x1, ty * tx),
            ];
            for (sy, sx, wt) in taps {
                if wt == 0.0 {
                    continue;
                }
                let i = (sy * w + sx) * c;
                for ch in 0..c {
                    d[i + ch] += wt * g[o + ch];
                }
            }
        }
    }
}
