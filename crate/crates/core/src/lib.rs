//! Entity graphs over threaded online conversations.
//!
//! Threads are parsed ([`corpus`]), every comment is reduced to the set of
//! knowledge-base entities it mentions ([`linking`]), and the resulting entity
//! trees are aggregated into a layered, star-expanded graph ([`graph`]). On
//! top of the graph sit next-set prediction scored by Word Mover's Distance
//! ([`predict`], [`transport`]), a depth-pinned force layout ([`layout`]),
//! spreading activation ([`activation`]) and the viewer bundle export
//! ([`export`]).

pub mod activation;
pub mod corpus;
pub mod embedding;
pub mod entity;
pub mod error;
pub mod export;
pub mod graph;
pub mod layout;
pub mod linking;
pub mod pipeline;
pub mod predict;
pub mod rewire;
pub mod stats;
pub mod synth;
pub mod transport;
pub mod tree;

pub use activation::{ActivationParams, ActivationState, Normalization};
pub use corpus::{Comment, Corpus, DumpFormat, Thread};
pub use embedding::EmbeddingTable;
pub use entity::{EntityId, EntitySet};
pub use error::{Error, Result};
pub use export::ViewerBundle;
pub use graph::{EdgeKind, EntityGraph, GraphVertex, Payload, VertexKind, Weights};
pub use layout::{LayoutConfig, LayoutResult};
pub use predict::ThreadPaths;
pub use rewire::RewiredView;
pub use tree::{ConversationPath, EntityTree};
