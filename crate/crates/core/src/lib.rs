//! # mscope
//!
//! Distance-based unsupervised analysis of high-dimensional point clouds.
//!
//! | module          | what it does |
//! |-----------------|--------------|
//! | [`dataset`]     | point clouds, `MSD1`/CSV files, benchmark manifolds |
//! | [`neighbors`]   | exact kNN graphs (blocked brute force) |
//! | [`id`]          | Gride / TwoNN / MLE intrinsic dimension, scale scans, posterior, CDF checks |
//! | [`density`]     | fixed-k and point-adaptive (PAk) kNN density |
//! | [`peaks`]       | density-peak clustering, saddles, Z-merging, WPGMA, 2-D peak map |
//! | [`compare`]     | neighborhood overlap, ARI, CKA, discrete entropy |
//! | [`redundancy`]  | chunk reconstruction, residual correlation, power-law fits |
//! | [`pipeline`]    | end-to-end runs shared by the CLI and host bindings |
//!
//! ## Quick start
//!
//! ```no_run
//! use mscope::dataset::{generate, Family, ManifoldSpec};
//! use mscope::neighbors::build_knn;
//! use mscope::id::gride_scan;
//!
//! let data = generate(&ManifoldSpec::new(Family::Hypercube, 2, 4000).seed(1)).unwrap();
//! let graph = build_knn(&data, 64).unwrap();
//! for est in gride_scan(&graph, 64).unwrap().estimates() {
//!     println!("N/k = {:8.1}  d = {:.3}", est.scale_param, est.d_hat);
//! }
//! ```
//!
//! Runnable programs for every capability live in `examples/`.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod compare;
pub mod dataset;
pub mod density;
mod error;
pub mod export;
pub mod id;
pub mod neighbors;
pub mod peaks;
pub mod pipeline;
pub mod redundancy;
pub mod rng;

pub use dataset::Dataset;
pub use error::{Error, Result};
pub use neighbors::NeighborGraph;
