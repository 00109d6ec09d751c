//! Edge detection toolkit: a CNN feature extractor feeding a per-pixel linear
//! SVM, six classical baseline detectors, and a boundary benchmark computing
//! ODS, OIS and AP over datasets of images with annotated boundaries.
//!
//! The crate is organised bottom-up:
//!
//! * [`image`] – grayscale rasters, decoding, resizing and 2-D correlation.
//! * [`detectors`] – Sobel, Prewitt, Roberts, LoG, zero-crossing and Canny.
//! * [`nn`] – a small f64 tensor type with explicit forward/backward layers.
//! * [`cnn`] – the encoder/decoder backbone, its training loop and feature
//!   flattening.
//! * [`svm`] – linear SVM trained by dual coordinate descent.
//! * [`pipeline`] – the hybrid detector, score calibration and morphological
//!   post-processing.
//! * [`eval`] – boundary matching, PR sweeps, ODS/OIS/AP and reports.
//! * [`dataset`] – manifests, ground-truth loading and synthetic fixtures.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cnn;
pub mod dataset;
pub mod detectors;
pub mod edgemap;
pub mod error;
pub mod eval;
pub mod image;
pub mod method;
pub mod nn;
pub mod pipeline;
pub mod svm;
pub mod sys;

pub use crate::edgemap::{BinaryMap, EdgeMap};
pub use crate::error::{Error, Result};
pub use crate::image::{GrayImage, RangeTag, RealMap};
pub use crate::method::{Detector, Method};

/// Side length every image is resized to before detection and evaluation.
pub const WORKING_SIZE: usize = 256;
