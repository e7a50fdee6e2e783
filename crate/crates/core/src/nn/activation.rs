use crate::tensor::{ShapeError, Tensor};

pub fn relu_forward(x: &Tensor) -> Tensor {
    x.map(|v| if v > 0.0 { v } else { 0.0 })
}

/// Passes the gradient where `x > 0`; zero elsewhere, including at `x == 0`.
pub fn relu_backward(grad_out: &Tensor, x: &Tensor) -> Result<Tensor, ShapeError> {
    if grad_out.shape() != x.shape() {
        return Err(ShapeError::ShapeMismatch {
            expected: x.shape().into(),
            actual: grad_out.shape().into(),
        });
    }
    let mut g = grad_out.clone();
    for (gv, &xv) in g.data_mut().iter_mut().zip(x.data()) {
        if xv <= 0.0 {
            *gv = 0.0;
        }
    }
    Ok(g)
}
