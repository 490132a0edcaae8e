//! Synthetic block-based intra codec family, procedural sources, raw-video
//! ingestion.

pub mod encode;
pub mod texture;
pub mod transform;
pub mod y4m;

pub use encode::{
    delta_from_q, encode_frame, encode_sequence, encode_sequence_gop, CodecConfig, Flavor,
    QualityFamily,
};
pub use texture::{gen_texture, TextureParams};
pub use transform::{dct8, hadamard8, intdct8, Transform8, BLOCK};
pub use y4m::{load_y4m, write_y4m};
