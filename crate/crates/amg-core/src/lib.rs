//! Anti-memorization guidance for latent diffusion sampling, end to end at
//! desk scale: a small tensor/autodiff core, DDIM-style diffusion, a tiny
//! conditional denoiser trained to memorize deliberately duplicated records,
//! differentiable audio descriptors with exact nearest-neighbor search, the
//! three guidance strategies that steer sampling away from memorized data,
//! and the distributional metrics used to measure the effect.
//!
//! The crate is `no_std` + `alloc`: all float transcendentals go through
//! `libm` and randomness is counter-based, so identically seeded runs are
//! bit-identical across platforms. File formats, configuration, and the CLI
//! live in the companion `amg-lab` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod error;
pub mod linalg;
pub mod rng;
pub mod tape;
pub mod tensor;

pub use error::{Error, Result};
pub use rng::RngStream;
pub use tensor::Tensor;
