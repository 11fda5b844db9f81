//! Knowledge-graph driven rescoring of speech recognizer N-best lists.
//!
//! Hypotheses are annotated with knowledge-graph entities, the RDF molecules
//! (triples) around each entity are embedded with TransE, and each hypothesis
//! receives a semantic relatedness cost (SRC) computed from the distances
//! between molecule embeddings of adjacent entities. Lower SRC means the
//! entities are more strongly connected, and the N-best list is re-ranked on it.
//!
//! The pipeline stages map onto modules:
//!
//! - [`nbest`]: N-best and reference parsing, rescoring, word error rate.
//! - [`annotate`]: entity linking through a Spotlight-compatible service or an
//!   offline gazetteer.
//! - [`kgstore`]: N-Triples ingestion, the indexed triple store, molecule
//!   extraction (local or remote with an on-disk cache).
//! - [`transe`]: embedding initialization, margin-loss SGD training, link
//!   prediction evaluation and model files.
//! - [`relatedness`]: adjacency costs, sentence costs and the chain DP.
//! - [`pipeline`]: configuration and the end-to-end driver.
//!
//! Data-parallel loops go through [`par::Executor`]. With the `parallel`
//! feature (default) it fans out on a rayon pool; without it, or with one job,
//! everything runs sequentially and produces identical results.

pub mod annotate;
pub mod kgstore;
pub mod nbest;
pub mod net;
pub mod par;
pub mod pipeline;
pub mod relatedness;
pub mod transe;

pub use annotate::{Annotation, Gazetteer};
pub use kgstore::{MoleculeSet, Term, Triple, TripleStore};
pub use nbest::{Hypothesis, NBestList, RescoredList};
pub use par::Executor;
pub use pipeline::{run_pipeline, PipelineConfig};
pub use relatedness::RelatednessCost;
pub use transe::{EmbeddingModel, NormKind, TrainConfig};
