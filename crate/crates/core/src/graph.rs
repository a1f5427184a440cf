//! The layered entity graph.
//!
//! Set-vertices are `(entity set, depth)` pairs joined by transition edges
//! from depth `l` to `l + 1`. Every edge weight counts distinct threads, per
//! corpus label. Star expansion adds one entity-vertex per `(entity, depth)`
//! and a membership edge to each set-vertex containing it, weighted by that
//! set-vertex's occurrence count.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::entity::{EntityId, EntitySet};
use crate::error::{Error, Result};
use crate::tree::ConversationPath;

pub const GRAPH_FORMAT_VERSION: u32 = 1;

/// Per-corpus-label weights. Absent labels weigh zero; stored weights are
/// always positive.
pub type Weights = BTreeMap<String, u64>;

pub fn total_weight(w: &Weights) -> u64 {
    w.values().sum()
}

pub(crate) fn add_weights(into: &mut Weights, from: &Weights) {
    for (label, w) in from {
        *into.entry(label.clone()).or_default() += w;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VertexKind {
    Set,
    Entity,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Payload {
    Set(EntitySet),
    Entity(EntityId),
}

/// Vertex identity is `(depth, kind, payload)`; the derived order sorts by
/// depth first.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GraphVertex {
    pub depth: usize,
    pub payload: Payload,
}

impl GraphVertex {
    pub fn set(set: EntitySet, depth: usize) -> GraphVertex {
        GraphVertex { depth, payload: Payload::Set(set) }
    }

    pub fn entity(entity: EntityId, depth: usize) -> GraphVertex {
        GraphVertex { depth, payload: Payload::Entity(entity) }
    }

    pub fn kind(&self) -> VertexKind {
        match self.payload {
            Payload::Set(_) => VertexKind::Set,
            Payload::Entity(_) => VertexKind::Entity,
        }
    }

    pub fn as_set(&self) -> Option<&EntitySet> {
        match &self.payload {
            Payload::Set(s) => Some(s),
            Payload::Entity(_) => None,
        }
    }

    pub fn entities(&self) -> Vec<&EntityId> {
        match &self.payload {
            Payload::Set(s) => s.iter().collect(),
            Payload::Entity(e) => vec![e],
        }
    }

    /// Stable textual id: `s<depth>:<A|B>` or `e<depth>:<A>`.
    pub fn id(&self) -> String {
        self.to_string()
    }

    pub fn parse_id(id: &str) -> Result<GraphVertex> {
        let bad = || Error::UnknownVertex(id.to_string());
        let (head, body) = id.split_once(':').ok_or_else(bad)?;
        let mut chars = head.chars();
        let kind = chars.next().ok_or_else(bad)?;
        let depth: usize = chars.as_str().parse().map_err(|_| bad())?;
        match kind {
            's' => Ok(GraphVertex::set(EntitySet::from_key(body).map_err(|_| bad())?, depth)),
            'e' => Ok(GraphVertex::entity(EntityId::new(body).map_err(|_| bad())?, depth)),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for GraphVertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.payload {
            Payload::Set(s) => write!(f, "s{}:{}", self.depth, s.key()),
            Payload::Entity(e) => write!(f, "e{}:{}", self.depth, e),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    Transition,
    Membership,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EntityGraph {
    labels: BTreeSet<String>,
    /// Set-vertex → distinct threads containing it, per label.
    occurrences: BTreeMap<GraphVertex, Weights>,
    /// Adjacency of transition edges.
    transitions: BTreeMap<GraphVertex, BTreeMap<GraphVertex, Weights>>,
    /// Entity-vertex → set-vertices containing it, with membership weights.
    members: BTreeMap<GraphVertex, BTreeMap<GraphVertex, Weights>>,
    star_expanded: bool,
}

impl EntityGraph {
    pub fn empty() -> EntityGraph {
        EntityGraph::default()
    }

    pub fn labels(&self) -> &BTreeSet<String> {
        &self.labels
    }

    pub fn is_star_expanded(&self) -> bool {
        self.star_expanded
    }

    pub fn is_empty(&self) -> bool {
        self.occurrences.is_empty()
    }

    pub fn max_depth(&self) -> usize {
        self.occurrences.keys().map(|v| v.depth).max().unwrap_or(0)
    }

    pub fn set_vertices(&self) -> impl Iterator<Item = (&GraphVertex, &Weights)> {
        self.occurrences.iter()
    }

    pub fn entity_vertices(&self) -> impl Iterator<Item = &GraphVertex> {
        self.members.keys()
    }

    pub fn vertices(&self) -> BTreeSet<&GraphVertex> {
        self.occurrences.keys().chain(self.members.keys()).collect()
    }

    pub fn vertex_count(&self) -> usize {
        self.occurrences.len() + self.members.len()
    }

    pub fn contains(&self, v: &GraphVertex) -> bool {
        self.occurrences.contains_key(v) || self.members.contains_key(v)
    }

    pub fn occurrences(&self, v: &GraphVertex) -> Option<&Weights> {
        self.occurrences.get(v)
    }

    pub fn successors(&self, v: &GraphVertex) -> Option<&BTreeMap<GraphVertex, Weights>> {
        self.transitions.get(v)
    }

    pub fn transitions(&self) -> impl Iterator<Item = (&GraphVertex, &GraphVertex, &Weights)> {
        self.transitions.iter().flat_map(|(src, out)| out.iter().map(move |(dst, w)| (src, dst, w)))
    }

    pub fn transition_count(&self) -> usize {
        self.transitions.values().map(BTreeMap::len).sum()
    }

    /// Set-vertices containing the entity-vertex, with membership weights.
    pub fn sets_containing(&self, entity_vertex: &GraphVertex) -> Option<&BTreeMap<GraphVertex, Weights>> {
        self.members.get(entity_vertex)
    }

    /// `(entity-vertex, set-vertex, weight)` for every membership edge.
    pub fn memberships(&self) -> impl Iterator<Item = (&GraphVertex, &GraphVertex, &Weights)> {
        self.members.iter().flat_map(|(e, sets)| sets.iter().map(move |(s, w)| (e, s, w)))
    }

    pub fn membership_count(&self) -> usize {
        self.members.values().map(BTreeMap::len).sum()
    }

    fn check_layered(&self) -> Result<()> {
        for (src, dst, w) in self.transitions() {
            if dst.depth != src.depth + 1 || src.kind() != VertexKind::Set || dst.kind() != VertexKind::Set {
                return Err(Error::Schema(format!("transition {src} -> {dst} is not layered")));
            }
            if !self.occurrences.contains_key(src) || !self.occurrences.contains_key(dst) {
                return Err(Error::Schema(format!("transition {src} -> {dst} references a missing vertex")));
            }
            if w.is_empty() || w.values().any(|&x| x == 0) {
                return Err(Error::Schema(format!("transition {src} -> {dst} has a zero weight")));
            }
        }
        Ok(())
    }
}

/// Aggregate conversation paths into a graph under one corpus label.
///
/// Each transition and each set-vertex is counted at most once per thread,
/// however many of that thread's paths contain it.
pub fn build_graph(corpus_paths: &BTreeMap<String, Vec<ConversationPath>>, label: &str) -> EntityGraph {
    let mut graph = EntityGraph::empty();
    graph.labels.insert(label.to_string());
    for paths in corpus_paths.values() {
        let mut seen_vertices: BTreeSet<GraphVertex> = BTreeSet::new();
        let mut seen_edges: BTreeSet<(GraphVertex, GraphVertex)> = BTreeSet::new();
        for path in paths {
            for (depth, set) in path.steps.iter().enumerate() {
                seen_vertices.insert(GraphVertex::set(set.clone(), depth));
            }
            for (depth, from, to) in path.transitions() {
                seen_edges.insert((GraphVertex::set(from.clone(), depth), GraphVertex::set(to.clone(), depth + 1)));
            }
        }
        for v in seen_vertices {
            *graph.occurrences.entry(v).or_default().entry(label.to_string()).or_default() += 1;
        }
        for (src, dst) in seen_edges {
            *graph.transitions.entry(src).or_default().entry(dst).or_default().entry(label.to_string()).or_default() += 1;
        }
    }
    graph
}

/// Add an entity-vertex per `(entity, depth)` and a membership edge to every
/// set-vertex containing it, weighted by the set-vertex's occurrences.
pub fn star_expand(graph: &EntityGraph) -> Result<EntityGraph> {
    if graph.star_expanded {
        return Err(Error::AlreadyExpanded);
    }
    let mut out = graph.clone();
    for (set_vertex, occ) in &graph.occurrences {
        let Payload::Set(set) = &set_vertex.payload else { continue };
        for e in set {
            out.members
                .entry(GraphVertex::entity(e.clone(), set_vertex.depth))
                .or_default()
                .insert(set_vertex.clone(), occ.clone());
        }
    }
    out.star_expanded = true;
    Ok(out)
}

/// Union of two graphs built from different corpora. Edges are matched by
/// identity and keep their per-label weights.
pub fn merge_corpora(a: &EntityGraph, b: &EntityGraph) -> Result<EntityGraph> {
    if let Some(label) = a.labels.intersection(&b.labels).next() {
        return Err(Error::LabelCollision(label.clone()));
    }
    if !a.is_empty() && !b.is_empty() && a.star_expanded != b.star_expanded {
        return Err(Error::Schema("cannot merge an expanded graph with an unexpanded one".into()));
    }
    let mut out = a.clone();
    out.star_expanded = if a.is_empty() { b.star_expanded } else { a.star_expanded };
    out.labels.extend(b.labels.iter().cloned());
    for (v, w) in &b.occurrences {
        add_weights(out.occurrences.entry(v.clone()).or_default(), w);
    }
    for (src, dst, w) in b.transitions() {
        add_weights(out.transitions.entry(src.clone()).or_default().entry(dst.clone()).or_default(), w);
    }
    for (e, s, w) in b.memberships() {
        add_weights(out.members.entry(e.clone()).or_default().entry(s.clone()).or_default(), w);
    }
    Ok(out)
}

#[derive(Serialize, Deserialize)]
struct GraphFile {
    version: u32,
    labels: BTreeSet<String>,
    max_depth: usize,
    star_expanded: bool,
    vertices: Vec<VertexRecord>,
    edges: Vec<EdgeRecord>,
}

#[derive(Serialize, Deserialize)]
struct VertexRecord {
    id: String,
    kind: VertexKind,
    depth: usize,
    entities: Vec<EntityId>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    occurrences: Weights,
}

#[derive(Serialize, Deserialize)]
struct EdgeRecord {
    src: String,
    dst: String,
    kind: EdgeKind,
    weights: Weights,
}

impl EntityGraph {
    /// Versioned JSON. Vertices and edges are emitted in sorted order, so equal
    /// graphs serialize to identical bytes.
    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        let vertices = self
            .vertices()
            .into_iter()
            .map(|v| VertexRecord {
                id: v.id(),
                kind: v.kind(),
                depth: v.depth,
                entities: v.entities().into_iter().cloned().collect(),
                occurrences: self.occurrences.get(v).cloned().unwrap_or_default(),
            })
            .collect();
        let mut edges: Vec<EdgeRecord> = self
            .transitions()
            .map(|(s, d, w)| EdgeRecord { src: s.id(), dst: d.id(), kind: EdgeKind::Transition, weights: w.clone() })
            .collect();
        let mut memberships: Vec<(&GraphVertex, &GraphVertex, &Weights)> = self.memberships().collect();
        memberships.sort();
        edges.extend(memberships.into_iter().map(|(e, s, w)| EdgeRecord {
            src: e.id(),
            dst: s.id(),
            kind: EdgeKind::Membership,
            weights: w.clone(),
        }));
        let file = GraphFile {
            version: GRAPH_FORMAT_VERSION,
            labels: self.labels.clone(),
            max_depth: self.max_depth(),
            star_expanded: self.star_expanded,
            vertices,
            edges,
        };
        serde_json::to_writer(out, &file)?;
        Ok(())
    }

    pub fn to_json_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_json(&mut buf).expect("serializing to memory");
        String::from_utf8(buf).expect("json is utf-8")
    }

    pub fn read_json<R: Read>(input: R) -> Result<EntityGraph> {
        let file: GraphFile = serde_json::from_reader(input)?;
        if file.version != GRAPH_FORMAT_VERSION {
            return Err(Error::Schema(format!("unsupported graph version {}", file.version)));
        }
        let mut g = EntityGraph { labels: file.labels, star_expanded: file.star_expanded, ..EntityGraph::default() };
        let mut entity_vertices = BTreeSet::new();
        for rec in file.vertices {
            let v = GraphVertex::parse_id(&rec.id)?;
            if v.kind() != rec.kind || v.depth != rec.depth {
                return Err(Error::Schema(format!("vertex record {} is inconsistent", rec.id)));
            }
            match v.kind() {
                VertexKind::Set => {
                    if rec.occurrences.is_empty() {
                        return Err(Error::Schema(format!("set-vertex {} has no occurrences", rec.id)));
                    }
                    g.occurrences.insert(v, rec.occurrences);
                }
                VertexKind::Entity => {
                    entity_vertices.insert(v);
                }
            }
        }
        for rec in file.edges {
            let src = GraphVertex::parse_id(&rec.src)?;
            let dst = GraphVertex::parse_id(&rec.dst)?;
            if rec.weights.keys().any(|l| !g.labels.contains(l)) {
                return Err(Error::Schema(format!("edge {} -> {} uses an undeclared label", rec.src, rec.dst)));
            }
            match rec.kind {
                EdgeKind::Transition => {
                    g.transitions.entry(src).or_default().insert(dst, rec.weights);
                }
                EdgeKind::Membership => {
                    let ok = entity_vertices.contains(&src)
                        && g.occurrences.contains_key(&dst)
                        && src.depth == dst.depth
                        && dst.entities().iter().any(|e| src.entities()[0] == *e);
                    if !ok {
                        return Err(Error::Schema(format!("bad membership edge {} -> {}", rec.src, rec.dst)));
                    }
                    g.members.entry(src).or_default().insert(dst, rec.weights);
                }
            }
        }
        if entity_vertices.len() != g.members.len() {
            return Err(Error::Schema("entity-vertex without membership edges".into()));
        }
        if !g.star_expanded && !g.members.is_empty() {
            return Err(Error::Schema("membership edges in an unexpanded graph".into()));
        }
        g.check_layered()?;
        if g.max_depth() != file.max_depth {
            return Err(Error::Schema(format!("max_depth {} does not match vertices", file.max_depth)));
        }
        Ok(g)
    }
}
