//! Attribute embeddings, relational graph convolution, pooling and the
//! trained classifiers built on them.

mod detector;
mod embed;
mod layer;
mod nodeclass;

pub use detector::{argmax, softmax_rows, train_detect, DetectConfig, DetectOutcome, Detector, FitReport};
pub use embed::{cosine, EmbeddingTable};
pub use layer::{
    init_mlp, init_rgcn, mean_pool, mlp, pool_matrix, rgcn_layer, Activation, Aggregation, GnnConfig, RelGraph,
};
pub use nodeclass::{train_nodeclass, NodeClassConfig, NodeClassModel};
