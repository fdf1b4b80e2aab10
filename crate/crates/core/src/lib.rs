//! Social network sensors for early disaster awareness.
//!
//! Sample a control group of users uniformly and a sensor group of their
//! friends, then compare when each group first posts about an event. Also
//! included: geography (gazetteer geocoding, storm affected areas, grids),
//! lexicon sentiment trends, grid-based sentiment sensing, and a diffusion
//! simulator that produces synthetic input in the same file formats.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geo;
pub mod ingest;
pub mod leadtime;
pub mod network;
pub mod pipeline;
pub mod sampling;
pub mod sensing;
pub mod sentiment;
pub mod simulator;
pub mod text;

pub use error::{Error, Result};
