use alloc::vec;

use crate::tensor::{ShapeError, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Padding {
    /// Zero padding so the output is `ceil(input / stride)` on each axis.
    Same,
    Valid,
}

/// Resolved sizes for one convolution application.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvGeometry {
    pub in_h: usize,
    pub in_w: usize,
    pub in_c: usize,
    pub kernel_h: usize,
    pub kernel_w: usize,
    pub filters: usize,
    pub stride: usize,
    pub pad_top: usize,
    pub pad_left: usize,
    pub out_h: usize,
    pub out_w: usize,
}

fn axis(input: usize, kernel: usize, stride: usize, padding: Padding) -> Result<(usize, usize), ShapeError> {
    match padding {
        Padding::Same => {
            let out = input.div_ceil(stride);
            let total = ((out - 1) * stride + kernel).saturating_sub(input);
            Ok((out, total / 2))
        }
        Padding::Valid => {
            if input < kernel {
                return Err(ShapeError::BadShape("kernel larger than input under valid padding"));
            }
            Ok(((input - kernel) / stride + 1, 0))
        }
    }
}

impl ConvGeometry {
    pub fn new(
        input_shape: &[usize],
        kernel_h: usize,
        kernel_w: usize,
        filters: usize,
        stride: usize,
        padding: Padding,
    ) -> Result<Self, ShapeError> {
        let &[in_h, in_w, in_c] = input_shape else {
            return Err(ShapeError::BadShape("convolution input must be H x W x C"));
        };
        if kernel_h == 0 || kernel_w == 0 || filters == 0 || stride == 0 {
            return Err(ShapeError::BadShape("convolution sizes must be positive"));
        }
        let (out_h, pad_top) = axis(in_h, kernel_h, stride, padding)?;
        let (out_w, pad_left) = axis(in_w, kernel_w, stride, padding)?;
        Ok(Self { in_h, in_w, in_c, kernel_h, kernel_w, filters, stride, pad_top, pad_left, out_h, out_w })
    }

    pub fn kernel_shape(&self) -> [usize; 4] {
        [self.kernel_h, self.kernel_w, self.in_c, self.filters]
    }

    pub fn output_shape(&self) -> [usize; 3] {
        [self.out_h, self.out_w, self.filters]
    }

    fn check(&self, input: &Tensor, kernels: &Tensor) -> Result<(), ShapeError> {
        if input.shape() != [self.in_h, self.in_w, self.in_c] {
            return Err(ShapeError::ShapeMismatch {
                expected: vec![self.in_h, self.in_w, self.in_c],
                actual: input.shape().into(),
            });
        }
        if kernels.shape() != self.kernel_shape() {
            return Err(ShapeError::ShapeMismatch {
                expected: self.kernel_shape().into(),
                actual: kernels.shape().into(),
            });
        }
        Ok(())
    }

    /// Input row/column for an output coordinate and kernel offset, if inside the image.
    #[inline]
    fn source(&self, out: usize, k: usize, pad: usize, limit: usize) -> Option<usize> {
        (out * self.stride + k).checked_sub(pad).filter(|&i| i < limit)
    }

    /// Cross-correlation plus bias, written into `out`.
    pub fn forward_into(&self, input: &[f64], kernels: &[f64], bias: &[f64], out: &mut [f64]) {
        let (c_in, nf) = (self.in_c, self.filters);
        for oy in 0..self.out_h {
            for ox in 0..self.out_w {
                let o = &mut out[(oy * self.out_w + ox) * nf..][..nf];
                o.copy_from_slice(bias);
                for ky in 0..self.kernel_h {
                    let Some(iy) = self.source(oy, ky, self.pad_top, self.in_h) else { continue };
                    for kx in 0..self.kernel_w {
                        let Some(ix) = self.source(ox, kx, self.pad_left, self.in_w) else { continue };
                        let inp = &input[(iy * self.in_w + ix) * c_in..][..c_in];
                        let kbase = (ky * self.kernel_w + kx) * c_in * nf;
                        for (c, &v) in inp.iter().enumerate() {
                            if v == 0.0 {
                                continue;
                            }
                            let krow = &kernels[kbase + c * nf..][..nf];
                            for (acc, &k) in o.iter_mut().zip(krow) {
                                *acc += v * k;
                            }
                        }
                    }
                }
            }
        }
    }

    /// Accumulates (`+=`) gradients for input, kernels and bias.
    pub fn backward_accumulate(
        &self,
        grad_out: &[f64],
        input: &[f64],
        kernels: &[f64],
        grad_input: Option<&mut [f64]>,
        grad_kernels: &mut [f64],
        grad_bias: &mut [f64],
    ) {
        let (c_in, nf) = (self.in_c, self.filters);
        let mut grad_input = grad_input;
        for oy in 0..self.out_h {
            for ox in 0..self.out_w {
                let g = &grad_out[(oy * self.out_w + ox) * nf..][..nf];
                if g.iter().all(|&v| v == 0.0) {
                    continue;
                }
                for (b, &gv) in grad_bias.iter_mut().zip(g) {
                    *b += gv;
                }
                for ky in 0..self.kernel_h {
                    let Some(iy) = self.source(oy, ky, self.pad_top, self.in_h) else { continue };
                    for kx in 0..self.kernel_w {
                        let Some(ix) = self.source(ox, kx, self.pad_left, self.in_w) else { continue };
                        let ibase = (iy * self.in_w + ix) * c_in;
                        let kbase = (ky * self.kernel_w + kx) * c_in * nf;
                        for c in 0..c_in {
                            let v = input[ibase + c];
                            let off = kbase + c * nf;
                            if v != 0.0 {
                                for (gk, &gv) in grad_kernels[off..off + nf].iter_mut().zip(g) {
                                    *gk += v * gv;
                                }
                            }
                            if let Some(gi) = grad_input.as_deref_mut() {
                                let mut s = 0.0;
                                for (&k, &gv) in kernels[off..off + nf].iter().zip(g) {
                                    s += k * gv;
                                }
                                gi[ibase + c] += s;
                            }
                        }
                    }
                }
            }
        }
    }
}

/// 2-D cross-correlation (no kernel flip) of an `H x W x C` input with
/// `kh x kw x C x F` kernels, plus a per-filter bias.
pub fn conv2d_forward(
    input: &Tensor,
    kernels: &Tensor,
    bias: &Tensor,
    stride: usize,
    padding: Padding,
) -> Result<Tensor, ShapeError> {
    input.expect_rank(3)?;
    kernels.expect_rank(4)?;
    let ks = kernels.shape();
    let geom = ConvGeometry::new(input.shape(), ks[0], ks[1], ks[3], stride, padding)?;
    geom.check(input, kernels)?;
    if bias.shape() != [geom.filters] {
        return Err(ShapeError::ShapeMismatch { expected: vec![geom.filters], actual: bias.shape().into() });
    }
    let mut out = Tensor::zeros(&geom.output_shape());
    geom.forward_into(input.data(), kernels.data(), bias.data(), out.data_mut());
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct ConvGrads {
    pub input: Tensor,
    pub kernels: Tensor,
    pub bias: Tensor,
}

pub fn conv2d_backward(
    grad_out: &Tensor,
    input: &Tensor,
    kernels: &Tensor,
    stride: usize,
    padding: Padding,
) -> Result<ConvGrads, ShapeError> {
    input.expect_rank(3)?;
    kernels.expect_rank(4)?;
    let ks = kernels.shape();
    let geom = ConvGeometry::new(input.shape(), ks[0], ks[1], ks[3], stride, padding)?;
    geom.check(input, kernels)?;
    if grad_out.shape() != geom.output_shape() {
        return Err(ShapeError::ShapeMismatch {
            expected: geom.output_shape().into(),
            actual: grad_out.shape().into(),
        });
    }
    let mut grads = ConvGrads {
        input: Tensor::zeros(input.shape()),
        kernels: Tensor::zeros(kernels.shape()),
        bias: Tensor::zeros(&[geom.filters]),
    };
    geom.backward_accumulate(
        grad_out.data(),
        input.data(),
        kernels.data(),
        Some(grads.input.data_mut()),
        grads.kernels.data_mut(),
        grads.bias.data_mut(),
    );
    Ok(grads)
}
