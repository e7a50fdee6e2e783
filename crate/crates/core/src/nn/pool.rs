use alloc::vec::Vec;

use crate::tensor::{ShapeError, Tensor};

pub(crate) fn pool_output(shape: &[usize], pool_h: usize, pool_w: usize, stride: usize) -> Result<[usize; 3], ShapeError> {
    let &[h, w, c] = shape else {
        return Err(ShapeError::BadShape("max-pool input must be H x W x C"));
    };
    if pool_h == 0 || pool_w == 0 || stride == 0 {
        return Err(ShapeError::BadShape("pool sizes must be positive"));
    }
    if h < pool_h || w < pool_w {
        return Err(ShapeError::BadShape("pool window larger than input"));
    }
    Ok([(h - pool_h) / stride + 1, (w - pool_w) / stride + 1, c])
}

/// Window maximum per channel; trailing rows/columns that do not fill a
/// window are dropped. Returns the flat input index of each selected
/// element (first maximum in row-major window order).
pub fn maxpool_forward(x: &Tensor, pool_h: usize, pool_w: usize, stride: usize) -> Result<(Tensor, Vec<usize>), ShapeError> {
    let [oh, ow, c] = pool_output(x.shape(), pool_h, pool_w, stride)?;
    let w = x.shape()[1];
    let data = x.data();
    let mut out = Tensor::zeros(&[oh, ow, c]);
    let mut argmax = Vec::with_capacity(oh * ow * c);
    let od = out.data_mut();
    for oy in 0..oh {
        for ox in 0..ow {
            for ch in 0..c {
                let mut best_idx = ((oy * stride) * w + ox * stride) * c + ch;
                let mut best = data[best_idx];
                for py in 0..pool_h {
                    for px in 0..pool_w {
                        let idx = ((oy * stride + py) * w + ox * stride + px) * c + ch;
                        if data[idx] > best {
                            best = data[idx];
                            best_idx = idx;
                        }
                    }
                }
                od[(oy * ow + ox) * c + ch] = best;
                argmax.push(best_idx);
            }
        }
    }
    Ok((out, argmax))
}

/// Routes each output gradient to the input element recorded in `argmax`.
pub fn maxpool_backward(grad_out: &Tensor, argmax: &[usize], input_shape: &[usize]) -> Result<Tensor, ShapeError> {
    if grad_out.len() != argmax.len() {
        return Err(ShapeError::ShapeMismatch { expected: grad_out.shape().into(), actual: alloc::vec![argmax.len()] });
    }
    let mut g = Tensor::zeros(input_shape);
    let n = g.len();
    for (&gv, &idx) in grad_out.data().iter().zip(argmax) {
        if idx >= n {
            return Err(ShapeError::BadShape("pool index out of range"));
        }
        g[idx] += gv;
    }
    Ok(g)
}
