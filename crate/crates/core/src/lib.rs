//! Reversible data hiding in 8-bit grayscale images using dual
//! pixel-value-ordering: a forward minimum/maximum PVO pass on 1x3 blocks
//! followed by a backward pairwise pass that pulls part of the forward
//! distortion back while carrying extra bits.

pub mod aux_codec;
pub mod backward;
pub mod cli;
pub mod error;
pub mod forward;
pub mod image;
pub mod li;
pub mod metrics;
pub mod pipeline;

pub use aux_codec::BitString;
pub use error::{Error, Result};
pub use image::GrayImage;
pub use pipeline::{decode, encode, BackwardSets, EmbedOptions, EmbedReport, Scheme};
