use crate::tensor::{ShapeError, Tensor};

/// Lower clamp applied to probabilities before taking the logarithm.
pub const PROB_FLOOR: f64 = 1e-12;

/// `e^{z_i} / sum_j e^{z_j}`, evaluated after subtracting `max(z)`.
pub fn softmax(z: &Tensor) -> Result<Tensor, ShapeError> {
    if z.is_empty() {
        return Err(ShapeError::BadShape("softmax of an empty vector"));
    }
    let mut out = z.clone();
    softmax_in_place(out.data_mut());
    Ok(out)
}

pub(crate) fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = libm::exp(*v - max);
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}

/// `-sum_i y_i ln(y_hat_i)` with `y_hat` clamped below at [`PROB_FLOOR`].
pub fn cross_entropy(y: &Tensor, y_hat: &Tensor) -> Result<f64, ShapeError> {
    if y.len() != y_hat.len() || y.is_empty() {
        return Err(ShapeError::ShapeMismatch { expected: y.shape().into(), actual: y_hat.shape().into() });
    }
    Ok(cross_entropy_slice(y.data(), y_hat.data()))
}

pub(crate) fn cross_entropy_slice(y: &[f64], y_hat: &[f64]) -> f64 {
    let mut loss = 0.0;
    for (&t, &p) in y.iter().zip(y_hat) {
        if t != 0.0 {
            loss -= t * libm::log(p.max(PROB_FLOOR));
        }
    }
    // -0.0 when every target term is ln(1)
    loss + 0.0
}

/// Gradient of `cross_entropy(y, softmax(z))` with respect to the logits: `softmax(z) - y`.
pub fn softmax_xent_backward(y: &Tensor, z: &Tensor) -> Result<Tensor, ShapeError> {
    if y.len() != z.len() {
        return Err(ShapeError::ShapeMismatch { expected: z.shape().into(), actual: y.shape().into() });
    }
    let mut p = softmax(z)?;
    p.axpy(-1.0, y);
    Ok(p)
}
