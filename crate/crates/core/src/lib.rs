//! Unsupervised dynamic scene-change detection for video.
//!
//! The pipeline has four stages:
//!
//! 1. [`quantizer`]: frames become grids of codebook indices.
//! 2. [`similarity`]: two code maps are compared cell by cell on a grid.
//! 3. [`windowing`]: each window pairs frame `i` with frame `i + l/2` and
//!    summarizes the pair scores as `(mean, std)`.
//! 4. [`detector`]: two-cluster K-means over the window statistics separates
//!    changed from not-changed windows.
//!
//! [`evaluation`] scores per-frame predictions against annotations, [`io`]
//! holds the file formats and [`pipeline`] wires everything together for the
//! `seadsc` binary.
//!
//! ```
//! use seadsc::quantizer::CodeIndexMap;
//! use seadsc::similarity::{map_similarity, SimilarityParams};
//!
//! let params = SimilarityParams { grid_rows: 1, grid_cols: 2, n_top: 2, delta_sim: 1 };
//! let a = CodeIndexMap::new(2, 4, 8, vec![0, 1, 2, 3, 0, 1, 2, 3]).unwrap();
//! let b = CodeIndexMap::new(2, 4, 8, vec![0, 1, 6, 7, 0, 1, 6, 7]).unwrap();
//! assert_eq!(map_similarity(&a, &b, &params).unwrap(), 0.5);
//! ```

pub mod cli;
pub mod detector;
pub mod error;
pub mod evaluation;
pub mod io;
mod label;
pub mod pipeline;
pub mod quantizer;
pub mod similarity;
pub mod synthetic;
pub mod windowing;

pub use error::{Error, Result};
pub use label::Label;
