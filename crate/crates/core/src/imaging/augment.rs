use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::resize::lerp;
use crate::tensor::Tensor;

/// Random geometric augmentation settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentSpec {
    pub hflip_prob: f64,
    pub vflip_prob: f64,
    /// Rotation drawn uniformly from `[-max, max]` degrees.
    pub max_rotation_deg: f64,
    /// Translation drawn uniformly from `[-max, max]` times each dimension.
    pub max_translation: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum AugmentSpecError {
    #[error("flip probability {0} outside [0, 1]")]
    Probability(f64),
    #[error("rotation {0} outside [0, 45] degrees")]
    Rotation(f64),
    #[error("translation {0} outside [0, 0.25]")]
    Translation(f64),
}

impl Default for AugmentSpec {
    fn default() -> Self {
        Self { hflip_prob: 0.5, vflip_prob: 0.5, max_rotation_deg: 15.0, max_translation: 0.1, seed: 0 }
    }
}

impl AugmentSpec {
    pub fn new(hflip_prob: f64, vflip_prob: f64, max_rotation_deg: f64, max_translation: f64, seed: u64) -> Result<Self, AugmentSpecError> {
        let spec = Self { hflip_prob, vflip_prob, max_rotation_deg, max_translation, seed };
        spec.validate()?;
        Ok(spec)
    }

    /// A spec whose application is the identity.
    pub fn identity() -> Self {
        Self { hflip_prob: 0.0, vflip_prob: 0.0, max_rotation_deg: 0.0, max_translation: 0.0, seed: 0 }
    }

    pub fn validate(&self) -> Result<(), AugmentSpecError> {
        for p in [self.hflip_prob, self.vflip_prob] {
            if !(0.0..=1.0).contains(&p) {
                return Err(AugmentSpecError::Probability(p));
            }
        }
        if !(0.0..=45.0).contains(&self.max_rotation_deg) {
            return Err(AugmentSpecError::Rotation(self.max_rotation_deg));
        }
        if !(0.0..=0.25).contains(&self.max_translation) {
            return Err(AugmentSpecError::Translation(self.max_translation));
        }
        Ok(())
    }
}

struct View<'a> {
    data: &'a [f64],
    h: usize,
    w: usize,
    c: usize,
}

impl View<'_> {
    /// Bilinear sample at fractional `(y, x)`; `fill[ch]` outside the image.
    fn sample(&self, y: f64, x: f64, ch: usize, fill: f64) -> f64 {
        let (hf, wf) = ((self.h - 1) as f64, (self.w - 1) as f64);
        let tol = 1e-9;
        if !(y > -tol && y < hf + tol && x > -tol && x < wf + tol) {
            return fill;
        }
        let (y, x) = (y.clamp(0.0, hf), x.clamp(0.0, wf));
        let (y0, x0) = (libm::floor(y) as usize, libm::floor(x) as usize);
        let (y1, x1) = ((y0 + 1).min(self.h - 1), (x0 + 1).min(self.w - 1));
        let (ty, tx) = (y - y0 as f64, x - x0 as f64);
        let at = |yy: usize, xx: usize| self.data[(yy * self.w + xx) * self.c + ch];
        lerp(lerp(at(y0, x0), at(y0, x1), tx), lerp(at(y1, x0), at(y1, x1), tx), ty)
    }
}

fn remap(t: &Tensor, fill: &[f64], map: impl Fn(f64, f64) -> (f64, f64)) -> Tensor {
    let (h, w, c) = (t.shape()[0], t.shape()[1], t.shape()[2]);
    let view = View { data: t.data(), h, w, c };
    let mut out = Tensor::zeros(t.shape());
    let o = out.data_mut();
    for y in 0..h {
        for x in 0..w {
            let (sy, sx) = map(y as f64, x as f64);
            for ch in 0..c {
                o[(y * w + x) * c + ch] = view.sample(sy, sx, ch, fill[ch]);
            }
        }
    }
    out
}

fn flip(t: &Tensor, horizontal: bool) -> Tensor {
    let (h, w, c) = (t.shape()[0], t.shape()[1], t.shape()[2]);
    let d = t.data();
    let mut out = Tensor::zeros(t.shape());
    let o = out.data_mut();
    for y in 0..h {
        for x in 0..w {
            let (sy, sx) = if horizontal { (y, w - 1 - x) } else { (h - 1 - y, x) };
            o[(y * w + x) * c..][..c].copy_from_slice(&d[(sy * w + sx) * c..][..c]);
        }
    }
    out
}

fn channel_mean(t: &Tensor) -> Vec<f64> {
    let c = t.shape()[2];
    let mut sums = vec![0.0; c];
    for px in t.data().chunks_exact(c) {
        for (s, &v) in sums.iter_mut().zip(px) {
            *s += v;
        }
    }
    let n = (t.len() / c) as f64;
    sums.into_iter().map(|s| s / n).collect()
}

/// Horizontal flip, vertical flip, rotation about the centre, then
/// translation; uncovered pixels take the patch's per-channel mean.
///
/// Exactly five values are drawn from `rng` per call, whatever the spec, so
/// the stream position after a call does not depend on the outcome.
pub fn augment<R: Rng + ?Sized>(patch: &Tensor, spec: &AugmentSpec, rng: &mut R) -> Tensor {
    assert_eq!(patch.shape().len(), 3, "augment expects an H x W x C patch");
    let u_h: f64 = rng.random();
    let u_v: f64 = rng.random();
    let u_rot: f64 = rng.random();
    let u_dx: f64 = rng.random();
    let u_dy: f64 = rng.random();

    let (h, w) = (patch.shape()[0] as f64, patch.shape()[1] as f64);
    let fill = channel_mean(patch);
    let mut out = patch.clone();
    if u_h < spec.hflip_prob {
        out = flip(&out, true);
    }
    if u_v < spec.vflip_prob {
        out = flip(&out, false);
    }
    let angle = (2.0 * u_rot - 1.0) * spec.max_rotation_deg.to_radians();
    if angle != 0.0 {
        let (s, c) = (libm::sin(angle), libm::cos(angle));
        let (cy, cx) = ((h - 1.0) / 2.0, (w - 1.0) / 2.0);
        out = remap(&out, &fill, |y, x| {
            let (dy, dx) = (y - cy, x - cx);
            (cy - s * dx + c * dy, cx + c * dx + s * dy)
        });
    }
    let shift_x = (2.0 * u_dx - 1.0) * spec.max_translation * w;
    let shift_y = (2.0 * u_dy - 1.0) * spec.max_translation * h;
    if shift_x != 0.0 || shift_y != 0.0 {
        out = remap(&out, &fill, |y, x| (y - shift_y, x - shift_x));
    }
    out
}
