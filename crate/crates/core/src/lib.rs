//! Derivate-based component-trees for images with any number of channels.
//!
//! The pipeline is: [`preprocess::smooth`] the image, compute the magnitudes
//! of all horizontal and vertical pixel differences
//! ([`preprocess::compute_derivates`]), bin them ([`preprocess::quantize`]),
//! lay them out on the bordered derivate graph ([`dgraph::build_grid`]) and
//! flood it into a component-tree ([`ctree::build_tree`]). Stable regions are
//! then read off the tree with [`regions::extract_stable`].
//!
//! The same flooding engine builds classical gray-value trees over a
//! [`ctree::PixelGrid`], which gives the MSER baseline.

pub mod ctree;
pub mod dgraph;
pub mod error;
pub mod fixtures;
pub mod mcimage;
pub mod oracle;
pub mod pipeline;
pub mod preprocess;
pub mod regions;
pub mod unionfind;

pub use error::{Error, Result};
