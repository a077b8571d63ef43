//! Region-conditioned skip-gram embeddings with a hierarchical softmax.

mod huffman;
mod io;
mod model;
mod train;

pub use huffman::HuffmanTree;
pub use io::{FORMAT_VERSION, MAGIC};
pub use model::{context_probability, nearest_neighbors, region_embedding, EmbeddingModel, PairGradient};
pub use train::{
    mean_pair_loss, train, train_encoded, EncodedCorpus, LrSchedule, Trainer, TrainingConfig, MAX_REPEATED_WEIGHT,
};

use crate::corpus::Vocabulary;
use crate::error::Result;

/// Huffman tree over the vocabulary's word counts.
pub fn build_huffman_tree(vocab: &Vocabulary) -> Result<HuffmanTree> {
    HuffmanTree::build(vocab.counts())
}
