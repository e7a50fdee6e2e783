//! Raster images, the PNM codec, and patch preprocessing.

mod augment;
mod normalize;
mod pnm;
mod raster;
mod resize;

pub use augment::{augment, AugmentSpec, AugmentSpecError};
pub use normalize::{compute_channel_mean, denormalize, normalize};
pub use pnm::{decode_pnm, encode_pnm, PnmError};
pub use raster::{to_grayscale, RasterError, RasterImage};
pub use resize::resize_bilinear;
