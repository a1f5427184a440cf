//! Spreading activation over the set-level view of an entity graph.
//!
//! The source receives activation 1 and fires. A firing vertex sends
//! `A * w * D` along each outgoing view edge, where `w` is the edge weight
//! normalized either by the vertex's total out-weight or by the largest edge
//! weight in the view. Propagation is level-synchronous: every contribution
//! into depth `l + 1` is summed before any vertex there decides whether it
//! fires (strictly above the threshold `F`). A vertex fires at most once.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{parameter, Error, Result};
use crate::graph::{total_weight, GraphVertex, Weights};
use crate::rewire::RewiredView;

pub const ACTIVATION_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    #[default]
    OutNormalized,
    GlobalMax,
}

impl std::str::FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "out-normalized" => Ok(Normalization::OutNormalized),
            "global-max" => Ok(Normalization::GlobalMax),
            other => Err(parameter("normalization", format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActivationParams {
    pub firing_threshold: f64,
    pub decay: f64,
    #[serde(default)]
    pub normalization: Normalization,
}

impl ActivationParams {
    pub fn new(firing_threshold: f64, decay: f64) -> ActivationParams {
        ActivationParams { firing_threshold, decay, normalization: Normalization::OutNormalized }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.firing_threshold) {
            return Err(parameter("firing_threshold", format!("{} is outside [0, 1]", self.firing_threshold)));
        }
        if !(0.0..=1.0).contains(&self.decay) {
            return Err(parameter("decay", format!("{} is outside [0, 1]", self.decay)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActivationState {
    pub source: GraphVertex,
    pub params: ActivationParams,
    pub label: Option<String>,
    /// Vertices that received signal, plus the source.
    pub activation: BTreeMap<GraphVertex, f64>,
    pub fired: BTreeSet<GraphVertex>,
    /// Vertices in the order they fired.
    pub fire_order: Vec<GraphVertex>,
    /// Edges that carried a positive contribution.
    pub propagation: BTreeSet<(GraphVertex, GraphVertex)>,
}

impl ActivationState {
    pub fn get(&self, v: &GraphVertex) -> f64 {
        self.activation.get(v).copied().unwrap_or(0.0)
    }
}

fn weight_under(w: &Weights, label: Option<&str>) -> u64 {
    match label {
        Some(l) => w.get(l).copied().unwrap_or(0),
        None => total_weight(w),
    }
}

pub fn spread(
    view: &RewiredView<'_>,
    source: &GraphVertex,
    params: ActivationParams,
    label: Option<&str>,
) -> Result<ActivationState> {
    params.validate()?;
    let graph = view.graph();
    if source.as_set().is_none() || graph.occurrences(source).is_none() {
        return Err(Error::UnknownVertex(source.id()));
    }
    if let Some(l) = label {
        if !graph.labels().contains(l) {
            return Err(parameter("label", format!("graph has no corpus {l:?}")));
        }
    }

    let global_max = match params.normalization {
        Normalization::GlobalMax => view.edges().values().map(|w| weight_under(w, label)).max().unwrap_or(0),
        Normalization::OutNormalized => 0,
    };

    let mut state = ActivationState {
        source: source.clone(),
        params,
        label: label.map(str::to_owned),
        activation: BTreeMap::from([(source.clone(), 1.0)]),
        fired: BTreeSet::from([source.clone()]),
        fire_order: vec![source.clone()],
        propagation: BTreeSet::new(),
    };

    let mut frontier = vec![source.clone()];
    while !frontier.is_empty() {
        let mut incoming: BTreeMap<GraphVertex, f64> = BTreeMap::new();
        for v in &frontier {
            let a = state.activation[v];
            let out: Vec<(GraphVertex, u64)> = view
                .successors_of(v)
                .into_iter()
                .map(|(dst, w)| (dst, weight_under(&w, label)))
                .filter(|&(_, w)| w > 0)
                .collect();
            let denom = match params.normalization {
                Normalization::OutNormalized => out.iter().map(|&(_, w)| w).sum::<u64>(),
                Normalization::GlobalMax => global_max,
            };
            for (dst, w) in out {
                let signal = a * (w as f64 / denom as f64) * params.decay;
                if signal > 0.0 {
                    *incoming.entry(dst.clone()).or_default() += signal;
                    state.propagation.insert((v.clone(), dst));
                }
            }
        }

        let mut next = Vec::new();
        for (dst, signal) in incoming {
            let a = state.activation.entry(dst.clone()).or_default();
            *a += signal;
            if *a > params.firing_threshold && !state.fired.contains(&dst) {
                state.fired.insert(dst.clone());
                state.fire_order.push(dst.clone());
                next.push(dst);
            }
        }
        frontier = next;
    }
    Ok(state)
}

/// Activated portion of the graph with per-vertex display radii.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationSubgraph {
    pub radii: BTreeMap<GraphVertex, f64>,
    pub edges: BTreeSet<(GraphVertex, GraphVertex)>,
}

pub fn activation_subgraph(state: &ActivationState, min_radius: f64, max_radius: f64) -> ActivationSubgraph {
    let active: BTreeMap<&GraphVertex, f64> = state.activation.iter().filter(|(_, &a)| a > 0.0).map(|(v, &a)| (v, a)).collect();
    let lo = active.values().copied().fold(f64::INFINITY, f64::min);
    let hi = active.values().copied().fold(f64::NEG_INFINITY, f64::max);
    let radii = active
        .iter()
        .map(|(&v, &a)| {
            let r = if hi > lo { min_radius + (a - lo) / (hi - lo) * (max_radius - min_radius) } else { max_radius };
            (v.clone(), r)
        })
        .collect();
    let edges = state.propagation.iter().filter(|(s, d)| active.contains_key(s) && active.contains_key(d)).cloned().collect();
    ActivationSubgraph { radii, edges }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivationRecord {
    pub vertex_id: String,
    #[serde(rename = "A")]
    pub activation: f64,
    pub fired: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivationFile {
    pub version: u32,
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub params: ActivationParams,
    pub activations: Vec<ActivationRecord>,
}

impl ActivationFile {
    pub fn from_state(state: &ActivationState) -> ActivationFile {
        ActivationFile {
            version: ACTIVATION_FORMAT_VERSION,
            source: state.source.id(),
            label: state.label.clone(),
            params: state.params,
            activations: state
                .activation
                .iter()
                .map(|(v, &a)| ActivationRecord { vertex_id: v.id(), activation: a, fired: state.fired.contains(v) })
                .collect(),
        }
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer(out, self)?;
        Ok(())
    }

    pub fn read_json<R: Read>(input: R) -> Result<ActivationFile> {
        let file: ActivationFile = serde_json::from_reader(input)?;
        if file.version != ACTIVATION_FORMAT_VERSION {
            return Err(Error::Schema(format!("unsupported activation version {}", file.version)));
        }
        file.params.validate()?;
        GraphVertex::parse_id(&file.source)?;
        for rec in &file.activations {
            GraphVertex::parse_id(&rec.vertex_id)?;
            if !(rec.activation.is_finite() && rec.activation >= 0.0) {
                return Err(Error::Schema(format!("bad activation for {}", rec.vertex_id)));
            }
        }
        Ok(file)
    }
}
