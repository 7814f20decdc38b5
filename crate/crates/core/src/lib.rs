//! Nearest-neighbor search and classification.
//!
//! * [`metrics`]: points and Minkowski-family distances, with a checker for
//!   the metric axioms.
//! * [`linear_scan`]: datasets, result lists and brute-force search, the
//!   reference every index is tested against.
//! * [`kdtree`]: median-split K-d tree with exact k-NN, fixed-radius and
//!   `(1 + ε)`-approximate nearest-neighbor queries.
//! * [`proximity`]: Euclidean minimum spanning tree and diameter.
//! * [`classifier`]: k-NN classification with normalization, seeded splits,
//!   evaluation and nearest-neighbor risk bounds.
//! * [`synth_data`]: generators for RSS fingerprint localization, LoS/NLoS
//!   and sleeping-cell detection, Gaussian mixtures, and CSV I/O.
//! * [`cli`]: the `nnkit` command line.
//!
//! ```
//! use nnkit::{Dataset, KdTree, MetricKind};
//!
//! let flat = vec![7., 2., 5., 4., 9., 6., 2., 3., 4., 7., 8., 1.];
//! let tree = KdTree::build(Dataset::from_flat(flat, 2, MetricKind::Euclidean)?)?;
//! let nearest = tree.query_knn(&[9., 2.], 2)?;
//! assert_eq!(nearest.indices(), vec![5, 0]);
//! # Ok::<(), nnkit::Error>(())
//! ```

pub mod classifier;
pub mod cli;
mod error;
pub mod kdtree;
pub mod linear_scan;
pub mod metrics;
pub mod proximity;
pub mod synth_data;

pub use classifier::{bayes_bounds, fit, normalize_fit, split, EvalReport, KnnModel, Label, TrainingSet};
pub use error::{Error, Result};
pub use kdtree::KdTree;
pub use linear_scan::{scan_knn, scan_nn, scan_radius, Dataset, Neighbor, NeighborList, NeighborSearch};
pub use metrics::{check_metric_axioms, distance, MetricKind, Point};
pub use proximity::{diameter, mst, Edge, EdgeList};
