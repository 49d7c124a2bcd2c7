//! Hierarchical clustering and ultrametric analysis.
//!
//! The crate is organised around the [`Dendrogram`] type and the
//! ultrametric it induces on its terminals:
//!
//! * [`ultra`]: ultrametric verification, cophenetic matrices and the
//!   ordered ultrametric-matrix form;
//! * [`agglomerate`]: nearest neighbor chain clustering with the
//!   Lance-Williams criteria, contiguity-constrained complete link and cuts;
//! * [`baire`]: longest-common-prefix (Baire) clustering of randomly
//!   projected data in `O(n log n)`;
//! * [`padic`]: signed p-adic codes of dendrogram terminals, decoding,
//!   code distance and the dilation operator;
//! * [`glattice`]: set-valued dissimilarities on boolean attributes and the
//!   clusters they induce at a cardinality level;
//! * [`haar`]: the Haar wavelet transform of data over a dendrogram;
//! * [`umetry`]: triangle-based ultrametricity measurement and synthetic
//!   point clouds;
//! * [`segment`]: window embedding, distance histograms, Gaussian mixture
//!   selection by BIC, principal coordinates and signal segmentation.

pub mod agglomerate;
pub mod baire;
pub mod dendrogram;
pub mod error;
pub mod glattice;
pub mod haar;
pub mod matrix;
pub mod padic;
pub mod rng;
pub mod segment;
pub mod ultra;
pub mod umetry;

pub use agglomerate::{cluster_distances, cluster_observations, constrained_cluster, cut, Criterion};
pub use dendrogram::{Dendrogram, Node, NodeRef};
pub use error::{Error, Result};
pub use matrix::{DistanceMatrix, ObservationMatrix, UltrametricMatrix};
pub use ultra::{cophenetic, ultrametric_order, verify_ultrametric};
