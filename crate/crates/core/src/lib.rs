//! Synthetic radiographs and lung-structure training data from CT volumes.
//!
//! The crate covers the model-free half of a lung-enhancement pipeline:
//!
//! * [`drr`] projects a CT volume into a digitally reconstructed radiograph.
//! * [`lungseg`] derives 3D lung masks and their 2D projections.
//! * [`targets`] builds lung-only radiographs, nodule masks, paired
//!   augmentations and whole training datasets.
//! * [`enhance`] preprocesses radiographs and fuses them with an extracted
//!   lung-structure image.
//! * [`metrics`] holds the losses and evaluation metrics.
//! * [`volio`] defines the shared types and file formats.
//!
//! With the default `parallel` feature the heavy loops run on rayon; the
//! sequential build produces bit-identical results.

// `!(a > b)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod drr;
pub mod enhance;
pub mod error;
pub mod exec;
pub mod lungseg;
pub mod metrics;
pub mod phantom;
pub mod targets;
pub mod volio;

pub use error::{Error, ErrorClass, Result};
