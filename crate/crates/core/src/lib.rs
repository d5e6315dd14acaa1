//! Structure-induced similarity for interleaved image-text documents.
//!
//! Documents are sequences of slice embeddings (one per image or sentence).
//! The crate provides:
//!
//! - [`kernel`]: the triple-kernel distance between slices and the local
//!   kernel derived from it,
//! - [`gak`]: the global alignment kernel between sequences, with an
//!   enumeration oracle and a single-slice closed form,
//! - [`loss`] and [`train`]: label/representation similarity matrices, their
//!   mean-squared discrepancy with analytic gradients, and a linear projector
//!   trainer,
//! - [`retrieval`] and [`persist`]: exact top-k search, Recall@k and
//!   Winoground scoring, and the binary index format,
//! - [`manifest`]: the JSON-lines ingestion format.
//!
//! ```
//! use gakit::{gak_forward, InterleavedSequence, KernelConfig, Modality, SliceEmbedding};
//!
//! let a = SliceEmbedding::atomic(Modality::Image, &[1.0, 0.0]).unwrap();
//! let b = SliceEmbedding::atomic(Modality::Text, &[0.0, 1.0]).unwrap();
//! let x = InterleavedSequence::new("x", vec![a.clone(), b.clone()]).unwrap();
//! let k = gak_forward(x.slices(), x.slices(), &KernelConfig::default()).unwrap();
//! assert!(k > 1.0); // raw values are not bounded by 1
//! ```

pub mod error;
pub mod gak;
pub mod kernel;
pub mod loss;
pub mod manifest;
pub mod model;
pub mod persist;
pub mod retrieval;
pub mod selftest;
pub mod synthetic;
pub mod train;
mod vecmath;

pub use error::{Error, Result};
pub use gak::{
    alignment_score, best_path, enumerate_alignments, forward_table, gak_bruteforce, gak_forward,
    mean_pairwise_similarity, single_slice_gak, AlignmentPath, DpTable,
};
pub use kernel::{local_kernel, sigma, slice_cosine, triple_distance, LocalKernelValue};
pub use loss::{
    label_matrix, loss_and_gradient, loss_gradient, mse_loss, representation_matrix,
    SimilarityKind, SimilarityMatrix,
};
pub use model::{
    make_prefix_views, pool_representation, sample_cuts, sequence_representation,
    validate_slice, InterleavedSequence, KernelConfig, KernelMode, LabelMode, Modality,
    PoolingPolicy, PrefixView, RepresentationVector, SliceEmbedding, SliceForm, SliceShape,
    ValidationReport,
};
pub use persist::{load_index, save_index};
pub use retrieval::{
    build_index, query_topk, recall_at_k, winoground_scores, EvalCase, EvalReport, Hit,
    IndexInput, Query, QueryShape, RetrievalIndex, WinogroundExample, WinogroundScores,
};
pub use train::{train_projector, Projector, TrainOutcome, TrainerConfig};
