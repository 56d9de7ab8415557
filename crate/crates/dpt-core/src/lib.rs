//! Core of a dual-path (self-attention ∥ depth-wise convolution) scene-text
//! detector: a reverse-mode autodiff engine with CPU kernels, the hybrid
//! backbone and attention decoder, differentiable binarization, polygon label
//! generation and post-processing, losses, the SGD/poly-lr optimizer, and a
//! synthetic-scene pipeline for desk-scale training and evaluation.
//!
//! The crate is `no_std` + `alloc`; everything that touches the filesystem
//! (checkpoints, map files, images, logs, the CLI) lives in the companion
//! `dpt-cli` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod autodiff;
pub mod backbone;
pub mod decoder;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod loss;
pub mod model;
pub mod nn;
pub mod optim;
pub mod rng;
pub mod scalar;
pub mod synth;
pub mod train;

pub use autodiff::{Graph, Tensor};
pub use error::{Error, Result};
pub use scalar::Scalar;
