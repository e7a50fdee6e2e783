use alloc::vec;

use crate::tensor::{ShapeError, Tensor};

fn check(x: &Tensor, weights: &Tensor) -> Result<(usize, usize), ShapeError> {
    weights.expect_rank(2)?;
    let (n, m) = (weights.shape()[0], weights.shape()[1]);
    if x.len() != n {
        return Err(ShapeError::ShapeMismatch { expected: vec![n], actual: x.shape().into() });
    }
    Ok((n, m))
}

pub(crate) fn dense_forward_into(x: &[f64], weights: &[f64], bias: &[f64], out: &mut [f64]) {
    let m = bias.len();
    out.copy_from_slice(bias);
    for (i, &xv) in x.iter().enumerate() {
        if xv == 0.0 {
            continue;
        }
        for (o, &w) in out.iter_mut().zip(&weights[i * m..(i + 1) * m]) {
            *o += xv * w;
        }
    }
}

pub(crate) fn dense_backward_accumulate(
    grad_out: &[f64],
    x: &[f64],
    weights: &[f64],
    grad_x: Option<&mut [f64]>,
    grad_w: &mut [f64],
    grad_b: &mut [f64],
) {
    let m = grad_out.len();
    for (b, &g) in grad_b.iter_mut().zip(grad_out) {
        *b += g;
    }
    for (i, &xv) in x.iter().enumerate() {
        for (gw, &g) in grad_w[i * m..(i + 1) * m].iter_mut().zip(grad_out) {
            *gw += xv * g;
        }
    }
    if let Some(gx) = grad_x {
        for (i, gxi) in gx.iter_mut().enumerate() {
            let mut s = 0.0;
            for (&w, &g) in weights[i * m..(i + 1) * m].iter().zip(grad_out) {
                s += w * g;
            }
            *gxi += s;
        }
    }
}

/// `x W + b` for `x` of any shape with `n` elements, `W` of shape `n x m`.
pub fn dense_forward(x: &Tensor, weights: &Tensor, bias: &Tensor) -> Result<Tensor, ShapeError> {
    let (_, m) = check(x, weights)?;
    if bias.shape() != [m] {
        return Err(ShapeError::ShapeMismatch { expected: vec![m], actual: bias.shape().into() });
    }
    let mut out = Tensor::zeros(&[m]);
    dense_forward_into(x.data(), weights.data(), bias.data(), out.data_mut());
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct DenseGrads {
    /// Same shape as the forward input.
    pub input: Tensor,
    pub weights: Tensor,
    pub bias: Tensor,
}

pub fn dense_backward(grad_out: &Tensor, x: &Tensor, weights: &Tensor) -> Result<DenseGrads, ShapeError> {
    let (_, m) = check(x, weights)?;
    if grad_out.len() != m {
        return Err(ShapeError::ShapeMismatch { expected: vec![m], actual: grad_out.shape().into() });
    }
    let mut grads = DenseGrads {
        input: Tensor::zeros(x.shape()),
        weights: Tensor::zeros(weights.shape()),
        bias: Tensor::zeros(&[m]),
    };
    dense_backward_accumulate(
        grad_out.data(),
        x.data(),
        weights.data(),
        Some(grads.input.data_mut()),
        grads.weights.data_mut(),
        grads.bias.data_mut(),
    );
    Ok(grads)
}
