//! From-scratch neural network core: the fixed grid-aligned architecture,
//! explicit forward/backward passes, two optimizers, and the receptive-field
//! geometry calculator.

pub mod batchnorm;
pub mod conv;
pub mod dense;
pub mod geometry;
pub mod network;
pub mod optim;
pub mod scalar;
pub mod softmax;
pub mod tensor;
pub mod weights;

pub use batchnorm::{BatchNorm, BnCache};
pub use conv::Conv2d;
pub use dense::Dense;
pub use geometry::{
    input_geom, rf_chain, table1_conv_specs, table1_specs, Activation, LayerGeom, LayerKind,
    LayerSpec, TABLE1_EXPECTED_GEOMETRY,
};
pub use network::{
    CodingCnn, Gradients, NetOptimizer, DEFAULT_WIDTH, MIN_WIDTH, PATCH_SIDE,
};
pub use optim::{optimizer_step, OptState, OptimizerKind, TrainConfig};
pub use scalar::Scalar;
pub use softmax::{softmax_row, softmax_xent};
pub use tensor::Tensor;
pub use weights::{
    load_weights, save_weights, weights_from_bytes, weights_to_bytes, WEIGHTS_MAGIC,
    WEIGHTS_VERSION,
};
