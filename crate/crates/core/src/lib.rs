//! Keyword search over a knowledge graph by query graph assembly.
//!
//! Keywords are segmented into annotated queries by lexical matching
//! ([`lexicon`]), each annotated query becomes candidate vertex and edge sets
//! that are wired into a minimum-cost query graph ([`assembler`]) using
//! translation-embedding costs ([`embedding`]), missing relations are
//! predicted ([`predictor`]) and the result is rendered and evaluated as
//! SPARQL ([`sparql`]) against the triple store ([`store`]).

pub mod assembler;
pub mod embedding;
pub mod error;
pub mod lexicon;
pub mod pipeline;
pub mod predictor;
pub mod sparql;
pub mod store;

#[cfg(test)]
mod proptests;

pub use assembler::{
    build_candidate_sets, build_condensed_graph, solve_qga, CandidateSets, CondensedBipartiteGraph,
    EdgeCostSource, LowerBound, QueryEdge, QueryGraph, QueryVertex, SearchStats, Vertex,
};
pub use embedding::{EmbeddingTable, TrainConfig};
pub use error::{Error, Result};
pub use lexicon::{tokenize, AnnotatedQuery, CandidateTerm, Character, Lexicon, Span};
pub use pipeline::{answer_keywords, Answer, PipelineConfig};
pub use sparql::{Bindings, StructuredQuery};
pub use store::{ItemId, ItemKind, KnowledgeGraph, Triple};
