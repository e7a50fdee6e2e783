//! Hand-written CNN kernels, architecture descriptions, and optimizers.
//!
//! Activations use channels-last layout: an image-like tensor has shape
//! `[height, width, channels]`, convolution kernels `[kh, kw, in_c, filters]`,
//! dense weights `[inputs, units]`.

mod activation;
mod conv;
mod dense;
mod loss;
mod model;
mod optim;
mod pool;
mod spec;

pub use activation::{relu_backward, relu_forward};
pub use conv::{conv2d_backward, conv2d_forward, ConvGeometry, ConvGrads, Padding};
pub use dense::{dense_backward, dense_forward, DenseGrads};
pub use loss::{cross_entropy, softmax, softmax_xent_backward, PROB_FLOOR};
pub use model::{argmax, init_params, Model, ModelError, SampleOutcome};
pub use optim::{OptimState, OptimizerKind};
pub use pool::{maxpool_backward, maxpool_forward};
pub use spec::{desk_preset, paper_preset, parse_layer_specs, specs_to_text, LayerSpec, SpecParseError};
