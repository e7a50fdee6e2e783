use crate::tensor::{ShapeError, Tensor};

#[inline]
fn source_coord(out_index: usize, in_len: usize, out_len: usize) -> (usize, usize, f64) {
    let s = (out_index as f64 + 0.5) * in_len as f64 / out_len as f64 - 0.5;
    let s = s.clamp(0.0, (in_len - 1) as f64);
    let i0 = libm::floor(s) as usize;
    let i1 = (i0 + 1).min(in_len - 1);
    (i0, i1, s - i0 as f64)
}

/// `a + (b - a) t`, kept inside `[min(a, b), max(a, b)]`.
#[inline]
pub(crate) fn lerp(a: f64, b: f64, t: f64) -> f64 {
    if a == b {
        return a;
    }
    (a + (b - a) * t).clamp(a.min(b), a.max(b))
}

/// Bilinear resampling of an `H x W x C` tensor using pixel-center
/// alignment: output `(i, j)` samples the source at
/// `((i + 0.5) H / out_h - 0.5, (j + 0.5) W / out_w - 0.5)`, clamped to the border.
pub fn resize_bilinear(src: &Tensor, out_h: usize, out_w: usize) -> Result<Tensor, ShapeError> {
    let &[h, w, c] = src.shape() else {
        return Err(ShapeError::BadShape("resize input must be H x W x C"));
    };
    if out_h == 0 || out_w == 0 {
        return Err(ShapeError::BadShape("output size must be at least 1x1"));
    }
    if h == 0 || w == 0 {
        return Err(ShapeError::BadShape("input size must be at least 1x1"));
    }
    let d = src.data();
    let mut out = Tensor::zeros(&[out_h, out_w, c]);
    let o = out.data_mut();
    for i in 0..out_h {
        let (y0, y1, ty) = source_coord(i, h, out_h);
        for j in 0..out_w {
            let (x0, x1, tx) = source_coord(j, w, out_w);
            for ch in 0..c {
                let at = |y: usize, x: usize| d[(y * w + x) * c + ch];
                let top = lerp(at(y0, x0), at(y0, x1), tx);
                let bottom = lerp(at(y1, x0), at(y1, x1), tx);
                o[(i * out_w + j) * c + ch] = lerp(top, bottom, ty);
            }
        }
    }
    Ok(out)
}
