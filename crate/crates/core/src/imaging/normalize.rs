use alloc::vec;
use alloc::vec::Vec;

use crate::tensor::{ShapeError, Tensor};

/// Per-channel arithmetic mean over every pixel of every patch. Channels
/// are the last axis.
pub fn compute_channel_mean(patches: &[Tensor]) -> Result<Vec<f64>, ShapeError> {
    let first = patches.first().ok_or(ShapeError::BadShape("no patches to average"))?;
    let c = *first.shape().last().ok_or(ShapeError::BadShape("scalar patch"))?;
    let mut sums = vec![0.0; c];
    let mut count = 0usize;
    for p in patches {
        if p.shape().last() != Some(&c) {
            return Err(ShapeError::ShapeMismatch { expected: first.shape().into(), actual: p.shape().into() });
        }
        for px in p.data().chunks_exact(c) {
            for (s, &v) in sums.iter_mut().zip(px) {
                *s += v;
            }
        }
        count += p.len() / c;
    }
    if count == 0 {
        return Err(ShapeError::BadShape("patches contain no pixels"));
    }
    Ok(sums.into_iter().map(|s| s / count as f64).collect())
}

fn shift(patch: &Tensor, mean: &[f64], sign: f64) -> Result<Tensor, ShapeError> {
    let c = *patch.shape().last().ok_or(ShapeError::BadShape("scalar patch"))?;
    if c != mean.len() {
        return Err(ShapeError::ShapeMismatch { expected: vec![mean.len()], actual: patch.shape().into() });
    }
    let mut out = patch.clone();
    for px in out.data_mut().chunks_exact_mut(c) {
        for (v, &m) in px.iter_mut().zip(mean) {
            *v += sign * m;
        }
    }
    Ok(out)
}

/// `patch - mean`, broadcast over the channel axis. No variance scaling.
pub fn normalize(patch: &Tensor, mean: &[f64]) -> Result<Tensor, ShapeError> {
    shift(patch, mean, -1.0)
}

/// Inverse of [`normalize`].
pub fn denormalize(patch: &Tensor, mean: &[f64]) -> Result<Tensor, ShapeError> {
    shift(patch, mean, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_patches() {
        let m = compute_channel_mean(&[Tensor::filled(&[3, 4, 1], 0.5), Tensor::filled(&[2, 2, 1], 0.5)]).unwrap();
        assert_eq!(m, vec![0.5]);
        let m = compute_channel_mean(&[Tensor::filled(&[3, 4, 1], 0.0), Tensor::filled(&[3, 4, 1], 1.0)]).unwrap();
        assert_eq!(m, vec![0.5]);
    }

    #[test]
    fn per_channel() {
        let p = Tensor::from_vec(&[1, 2, 2], vec![1.0, 10.0, 3.0, 20.0]).unwrap();
        assert_eq!(compute_channel_mean(&[p]).unwrap(), vec![2.0, 15.0]);
    }

    #[test]
    fn empty_input_rejected() {
        assert!(compute_channel_mean(&[]).is_err());
    }

    #[test]
    fn normalize_mean_patch_gives_zero() {
        let p = Tensor::filled(&[2, 2, 1], 0.42);
        assert!(normalize(&p, &[0.42]).unwrap().data().iter().all(|&v| v == 0.0));
        assert_eq!(normalize(&p, &[0.0]).unwrap(), p);
        assert!(normalize(&p, &[0.1, 0.2]).is_err());
    }
}
