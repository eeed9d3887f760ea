//! Quality-saturation detection for re-encoding previously compressed
//! (user generated) frames.
//!
//! The crate is `no_std` and only needs `alloc`. It contains the whole
//! numeric pipeline: a JPEG-style intra patch codec, simple denoisers, the
//! per-patch Lagrangian RD table and sweeps, and the geometric saturation
//! detector that turns two RD curves (one measured against the input `U`,
//! one against a denoised reference `Z`) into the saturation Lagrangian
//! `lambda*_U` and its QP equivalent. File IO, parallel table builds and
//! the command-line front end live in the `satrdo` crate.

#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;

pub mod codec;
pub mod denoise;
mod error;
pub mod frame;
pub mod metrics;
pub mod pipeline;
pub mod rdo;
pub mod saturation;
pub mod synth;

pub use error::{Error, Result};
pub use frame::{Frame, FrameSet, PatchGrid};
