//! Photograph to pebble mosaic stylization.
//!
//! The pipeline segments an image into oriented, elongated regions, smooths each
//! region's outline with a truncated Fourier series, builds a smooth heightfield
//! per pebble from a constrained Laplace problem, and shades the result.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod contour;
pub mod error;
pub mod heightfield;
pub mod pipeline;
pub mod raster;
pub mod render;
mod rng;
pub mod segmentation;
pub mod tensor;

pub use error::{Error, Result};
pub use raster::{
    export_heightfield, import_heightfield, load_image, rgb_to_lab, write_image, LabImage, Mask, RasterImage, Rgb,
    ScalarField,
};
pub use segmentation::{Cluster, LabelMap, SegParams, Segmentation};
pub use tensor::{OrientedBasis, StructureTensor, TensorEigen, TensorField, Vec2};
