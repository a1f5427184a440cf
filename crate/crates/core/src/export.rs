//! Viewer bundle: the single JSON file the browser viewer loads.
//!
//! Only set-vertices are emitted; links are the edges of the set-level view,
//! so entity-vertices never appear. Link opacity is log-scaled against the
//! heaviest link. With exactly two corpora every link carries a blend value
//! comparing its transition probability in each corpus.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::activation::ActivationFile;
use crate::error::{Error, Result};
use crate::graph::{total_weight, EntityGraph, GraphVertex, VertexKind, Weights};
use crate::layout::LayoutResult;
use crate::rewire::RewiredView;

pub const BUNDLE_FORMAT_VERSION: u32 = 1;

/// Share of corpus `a` in the pair of transition probabilities.
pub fn compute_blend(p_a: f64, p_b: f64) -> Option<f64> {
    let total = p_a + p_b;
    if total > 0.0 {
        Some(p_a / total)
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleMeta {
    pub version: u32,
    pub labels: Vec<String>,
    pub max_depth: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleNode {
    pub id: String,
    pub kind: VertexKind,
    pub depth: usize,
    pub x: f64,
    pub y: f64,
    pub label: String,
    pub entities: Vec<String>,
    pub occurrences: Weights,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleLink {
    pub src: String,
    pub dst: String,
    pub weights: Weights,
    pub opacity: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blend: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewerBundle {
    pub meta: BundleMeta,
    pub nodes: Vec<BundleNode>,
    pub links: Vec<BundleLink>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub activation: Option<ActivationFile>,
}

/// Blend of two transition probabilities given as `weight / out_weight`
/// fractions. Cross-multiplying keeps the ratio exact until the final
/// division.
pub fn blend_from_counts(w_a: u64, out_a: u64, w_b: u64, out_b: u64) -> Option<f64> {
    let a = if out_a == 0 { 0 } else { w_a as u128 * out_b.max(1) as u128 };
    let b = if out_b == 0 { 0 } else { w_b as u128 * out_a.max(1) as u128 };
    if a + b == 0 {
        None
    } else {
        Some(a as f64 / (a + b) as f64)
    }
}

/// Per-label edge weight and total out-weight of its source.
fn label_counts(
    edges: &BTreeMap<(GraphVertex, GraphVertex), Weights>,
    label: &str,
) -> BTreeMap<(GraphVertex, GraphVertex), (u64, u64)> {
    let mut out_sum: BTreeMap<&GraphVertex, u64> = BTreeMap::new();
    for ((src, _), w) in edges {
        *out_sum.entry(src).or_default() += w.get(label).copied().unwrap_or(0);
    }
    edges.iter().map(|((src, dst), w)| ((src.clone(), dst.clone()), (w.get(label).copied().unwrap_or(0), out_sum[src]))).collect()
}

pub fn export_bundle(graph: &EntityGraph, layout: &LayoutResult, activation: Option<&ActivationFile>) -> Result<ViewerBundle> {
    let view = RewiredView::new(graph)?;
    let vertices = graph.vertices();
    if vertices.len() != layout.positions.len() || vertices.iter().any(|v| !layout.positions.contains_key(*v)) {
        return Err(Error::LayoutMismatch(format!(
            "graph has {} vertices, layout has {}",
            vertices.len(),
            layout.positions.len()
        )));
    }

    let nodes = graph
        .set_vertices()
        .map(|(v, occ)| {
            let (x, y) = layout.positions[v];
            let entities: Vec<String> = v.entities().iter().map(|e| e.as_str().to_owned()).collect();
            BundleNode {
                id: v.id(),
                kind: VertexKind::Set,
                depth: v.depth,
                x,
                y,
                label: entities.join(", "),
                entities,
                occurrences: occ.clone(),
            }
        })
        .collect();

    let edges = view.edges();
    let labels: Vec<String> = graph.labels().iter().cloned().collect();
    let counts =
        if labels.len() == 2 { Some((label_counts(&edges, &labels[0]), label_counts(&edges, &labels[1]))) } else { None };
    let w_max = edges.values().map(total_weight).max().unwrap_or(1);
    let mut links = Vec::with_capacity(edges.len());
    for (key, weights) in &edges {
        let blend = match &counts {
            Some((ca, cb)) => match blend_from_counts(ca[key].0, ca[key].1, cb[key].0, cb[key].1) {
                Some(b) => Some(b),
                None => continue,
            },
            None => None,
        };
        links.push(BundleLink {
            src: key.0.id(),
            dst: key.1.id(),
            weights: weights.clone(),
            opacity: (1.0 + total_weight(weights) as f64).ln() / (1.0 + w_max as f64).ln(),
            blend,
        });
    }

    let bundle = ViewerBundle {
        meta: BundleMeta { version: BUNDLE_FORMAT_VERSION, labels, max_depth: graph.max_depth() },
        nodes,
        links,
        activation: activation.cloned(),
    };
    bundle.validate()?;
    Ok(bundle)
}

impl ViewerBundle {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Schema(msg));
        if self.meta.version != BUNDLE_FORMAT_VERSION {
            return fail(format!("unsupported bundle version {}", self.meta.version));
        }
        let labels: BTreeSet<&str> = self.meta.labels.iter().map(String::as_str).collect();
        if labels.len() != self.meta.labels.len() {
            return fail("duplicate corpus label".into());
        }
        let mut ids = BTreeSet::new();
        for node in &self.nodes {
            let v = GraphVertex::parse_id(&node.id)?;
            if v.kind() != VertexKind::Set || node.kind != VertexKind::Set || v.depth != node.depth {
                return fail(format!("node {} is not a consistent set-vertex", node.id));
            }
            if node.depth > self.meta.max_depth {
                return fail(format!("node {} is deeper than max_depth", node.id));
            }
            if !(node.x.is_finite() && node.y.is_finite()) {
                return fail(format!("node {} has a non-finite position", node.id));
            }
            if node.occurrences.keys().any(|l| !labels.contains(l.as_str())) {
                return fail(format!("node {} uses an undeclared label", node.id));
            }
            if !ids.insert(node.id.as_str()) {
                return fail(format!("duplicate node {}", node.id));
            }
        }
        let two = self.meta.labels.len() == 2;
        for link in &self.links {
            if !ids.contains(link.src.as_str()) || !ids.contains(link.dst.as_str()) {
                return fail(format!("link {} -> {} has a missing endpoint", link.src, link.dst));
            }
            if !(link.opacity > 0.0 && link.opacity <= 1.0) {
                return fail(format!("link {} -> {} has opacity {}", link.src, link.dst, link.opacity));
            }
            if link.weights.keys().any(|l| !labels.contains(l.as_str())) {
                return fail(format!("link {} -> {} uses an undeclared label", link.src, link.dst));
            }
            match link.blend {
                Some(b) if !two || !(0.0..=1.0).contains(&b) => {
                    return fail(format!("link {} -> {} has an invalid blend", link.src, link.dst));
                }
                None if two => return fail(format!("link {} -> {} lacks a blend", link.src, link.dst)),
                _ => {}
            }
        }
        if let Some(act) = &self.activation {
            if !ids.contains(act.source.as_str()) {
                return fail(format!("activation source {} is not a node", act.source));
            }
            if let Some(rec) = act.activations.iter().find(|r| !ids.contains(r.vertex_id.as_str())) {
                return fail(format!("activation vertex {} is not a node", rec.vertex_id));
            }
        }
        Ok(())
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer(out, self)?;
        Ok(())
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("bundle serializes")
    }

    pub fn read_json<R: Read>(input: R) -> Result<ViewerBundle> {
        let bundle: ViewerBundle = serde_json::from_reader(input)?;
        bundle.validate()?;
        Ok(bundle)
    }
}
