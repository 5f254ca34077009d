//! Corpus-aware self-similarity topic modelling.
//!
//! The pipeline runs in stages that can also be used on their own:
//!
//! 1. [`corpus`] loads and tokenizes documents and builds the vocabulary.
//! 2. [`embedding_store`] reads the CASTEMB interchange file carrying document
//!    embeddings and one contextualized vector per word occurrence.
//! 3. [`word_aggregation`] averages occurrence vectors into corpus-level word
//!    embeddings and scores each word's self-similarity.
//! 4. [`reducer`] projects document embeddings to a handful of dimensions
//!    (UMAP or PCA) and [`clusterer`] runs HDBSCAN on the projection.
//! 5. [`topic_model`] turns the largest clusters into topic vectors and assigns
//!    the surviving candidate words to their nearest topic.
//! 6. [`evaluation`] scores the result with NPMI, topic diversity and an
//!    optional LLM judge.

pub mod clusterer;
pub mod corpus;
pub mod embedding_store;
pub mod evaluation;
pub mod reducer;
pub mod topic_model;
pub mod vector;
pub mod word_aggregation;

pub use clusterer::{hdbscan, ClusterParams, ClusterResult};
pub use corpus::{build_vocabulary, load_corpus, tokenize, CorpusFormat, Document, Vocabulary};
pub use embedding_store::{read_castemb, write_castemb, EmbeddingStore, OccurrenceEmbedding};
pub use evaluation::{npmi, topic_diversity, EvalReport};
pub use reducer::{ReduceMethod, ReduceParams, ReducedEmbeddings};
pub use topic_model::{fit, FitParams, Topic, TopicModel};
pub use word_aggregation::{self_similarity, WordProfile};
