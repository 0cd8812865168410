//! Inductive node2vec embeddings with post-hoc extension to unseen nodes.
//!
//! Embeddings are trained on the subgraph induced by the training nodes and
//! then propagated to the remaining nodes with [`extend::in2v_extend`], or
//! with the Feature Propagation and MatMul baselines.

pub mod data;
pub mod downstream;
pub mod embedding;
pub mod error;
pub mod extend;
pub mod graph;
pub mod pipeline;
pub mod rng;
pub mod split;
pub mod train;
pub mod walk;

pub use data::{Dataset, FeatureMatrix, LabelSource, NodeLabels};
pub use embedding::EmbeddingMatrix;
pub use error::{In2vError, Result};
pub use extend::{extend, AdjacencyNorm, ExtendConfig, ExtendMethod, ExtendReport};
pub use graph::{Graph, SubgraphMapping, UNREACHABLE};
pub use split::SplitAssignment;
pub use train::{train, TrainConfig, TrainOutcome};
pub use walk::WalkParams;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
