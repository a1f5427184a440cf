//! Set-level view of a star-expanded graph.
//!
//! A set `S` at depth `l` inherits the outgoing transitions of every recorded
//! set-vertex at `l` that shares at least one entity with it, reached through
//! the entity-vertices of the star expansion. Each underlying transition
//! contributes its weight once per source, even when several shared entities
//! lead to it. Destinations are never generalized.

use std::collections::{BTreeMap, BTreeSet};

use crate::entity::EntitySet;
use crate::error::{Error, Result};
use crate::graph::{add_weights, EntityGraph, GraphVertex, Weights};

#[derive(Debug, Clone, Copy)]
pub struct RewiredView<'g> {
    graph: &'g EntityGraph,
}

impl<'g> RewiredView<'g> {
    pub fn new(graph: &'g EntityGraph) -> Result<RewiredView<'g>> {
        if !graph.is_star_expanded() && !graph.is_empty() {
            return Err(Error::NotExpanded);
        }
        Ok(RewiredView { graph })
    }

    pub fn graph(&self) -> &'g EntityGraph {
        self.graph
    }

    /// Recorded set-vertices at `depth` that share an entity with `set`.
    pub fn sources(&self, set: &EntitySet, depth: usize) -> BTreeSet<&'g GraphVertex> {
        set.iter()
            .filter_map(|e| self.graph.sets_containing(&GraphVertex::entity(e.clone(), depth)))
            .flat_map(|sets| sets.keys())
            .collect()
    }

    /// Whether `set` at `depth` shares any entity with the graph.
    pub fn is_anchored(&self, set: &EntitySet, depth: usize) -> bool {
        set.iter().any(|e| self.graph.sets_containing(&GraphVertex::entity(e.clone(), depth)).is_some())
    }

    /// Outgoing view edges of `(set, depth)`; `set` need not be a recorded
    /// vertex.
    pub fn successors(&self, set: &EntitySet, depth: usize) -> BTreeMap<GraphVertex, Weights> {
        let mut out: BTreeMap<GraphVertex, Weights> = BTreeMap::new();
        for src in self.sources(set, depth) {
            if let Some(succ) = self.graph.successors(src) {
                for (dst, w) in succ {
                    add_weights(out.entry(dst.clone()).or_default(), w);
                }
            }
        }
        out
    }

    pub fn successors_of(&self, vertex: &GraphVertex) -> BTreeMap<GraphVertex, Weights> {
        match vertex.as_set() {
            Some(set) => self.successors(set, vertex.depth),
            None => BTreeMap::new(),
        }
    }

    /// Every view edge whose source is a recorded set-vertex.
    pub fn edges(&self) -> BTreeMap<(GraphVertex, GraphVertex), Weights> {
        let mut out = BTreeMap::new();
        for (src, _) in self.graph.set_vertices() {
            for (dst, w) in self.successors_of(src) {
                out.insert((src.clone(), dst), w);
            }
        }
        out
    }
}
