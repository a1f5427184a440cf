//! Depth-pinned force-directed layout.
//!
//! Every vertex sits in a fixed column: set-vertices at `depth * spacing`,
//! entity-vertices half a column to their left. Only `y` is simulated. Columns
//! freeze from left to right: vertices of depth `l` are damped linearly over
//! iterations `[(l-1)N, lN)` and locked at `lN` (the root column shares the
//! first window). When a payload locks at its lowest depth, every copy of it
//! at a deeper depth snaps to the same `y` and locks too, so a recurring set
//! or entity reads as a horizontal line.
//!
//! Forces follow Fruchterman-Reingold in one dimension: springs along
//! membership and transition edges, scaled by `ln(1 + weight)`, and
//! repulsion between vertices of the same column. Displacements are computed
//! synchronously and clamped by the current temperature.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{parameter, Error, Result};
use crate::graph::{total_weight, EntityGraph, GraphVertex, Payload, VertexKind};

pub const LAYOUT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutConfig {
    pub iterations_per_depth: usize,
    pub column_spacing: f64,
    /// Entity columns sit this fraction of a column left of their sets.
    pub entity_column_offset: f64,
    /// Preferred distance between neighbours in a column.
    pub ideal_distance: f64,
    pub repulsion: f64,
    pub spring: f64,
    /// Largest per-iteration displacement at the start of the simulation.
    pub initial_temperature: f64,
    pub seed: u64,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        LayoutConfig {
            iterations_per_depth: 100,
            column_spacing: 10.0,
            entity_column_offset: 0.5,
            ideal_distance: 1.0,
            repulsion: 1.0,
            spring: 1.0,
            initial_temperature: 2.0,
            seed: 0,
        }
    }
}

impl LayoutConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("column_spacing", self.column_spacing),
            ("ideal_distance", self.ideal_distance),
            ("repulsion", self.repulsion),
            ("spring", self.spring),
            ("initial_temperature", self.initial_temperature),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(parameter(name, format!("{value} must be positive")));
            }
        }
        if self.iterations_per_depth == 0 {
            return Err(parameter("iterations_per_depth", "must be positive"));
        }
        if !(self.entity_column_offset > 0.0 && self.entity_column_offset < 1.0) {
            return Err(parameter("entity_column_offset", "must lie in (0, 1)"));
        }
        Ok(())
    }

    pub fn x_of(&self, v: &GraphVertex) -> f64 {
        match v.kind() {
            VertexKind::Set => v.depth as f64 * self.column_spacing,
            VertexKind::Entity => (v.depth as f64 - self.entity_column_offset) * self.column_spacing,
        }
    }

    /// Iteration at which vertices of `depth` lock.
    pub fn lock_iteration(&self, depth: usize) -> usize {
        depth.max(1) * self.iterations_per_depth
    }

    /// Depth damping in `[0, 1]`: 1 before the depth's window, linear inside
    /// it, 0 from the lock iteration on.
    pub fn damping(&self, depth: usize, iteration: usize) -> f64 {
        let n = self.iterations_per_depth;
        let lock = self.lock_iteration(depth);
        let start = lock - n;
        if iteration < start {
            1.0
        } else if iteration >= lock {
            0.0
        } else {
            (lock - iteration) as f64 / n as f64
        }
    }

    /// Global cooling schedule.
    pub fn temperature(&self, iteration: usize) -> f64 {
        self.initial_temperature / (1.0 + iteration as f64 / self.iterations_per_depth as f64)
    }

    /// Largest displacement a vertex of `depth` may take at `iteration`.
    pub fn step_scale(&self, depth: usize, iteration: usize) -> f64 {
        self.temperature(iteration) * self.damping(depth, iteration)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LayoutResult {
    pub positions: BTreeMap<GraphVertex, (f64, f64)>,
    pub lock_iteration: BTreeMap<GraphVertex, usize>,
}

struct Sim<'a> {
    config: &'a LayoutConfig,
    vertices: Vec<GraphVertex>,
    x: Vec<f64>,
    y: Vec<f64>,
    locked: Vec<Option<usize>>,
    /// Indices sharing a column, per vertex.
    columns: Vec<std::sync::Arc<Vec<usize>>>,
    springs: Vec<Vec<(usize, f64)>>,
}

pub fn compute_layout(graph: &EntityGraph, config: &LayoutConfig) -> Result<LayoutResult> {
    config.validate()?;
    if !graph.is_star_expanded() && !graph.is_empty() {
        return Err(Error::NotExpanded);
    }
    let vertices: Vec<GraphVertex> = graph.vertices().into_iter().cloned().collect();
    if vertices.is_empty() {
        return Ok(LayoutResult::default());
    }
    let index: HashMap<&GraphVertex, usize> = vertices.iter().enumerate().map(|(i, v)| (v, i)).collect();

    let mut column_members: BTreeMap<(usize, VertexKind), Vec<usize>> = BTreeMap::new();
    for (i, v) in vertices.iter().enumerate() {
        column_members.entry((v.depth, v.kind())).or_default().push(i);
    }
    let tallest = column_members.values().map(Vec::len).max().unwrap_or(1);
    let height = tallest as f64 * config.ideal_distance;
    let mut columns: Vec<std::sync::Arc<Vec<usize>>> = (0..vertices.len()).map(|_| std::sync::Arc::default()).collect();
    for members in column_members.into_values() {
        let shared = std::sync::Arc::new(members);
        for &i in shared.iter() {
            columns[i] = shared.clone();
        }
    }

    let mut springs: Vec<Vec<(usize, f64)>> = vec![Vec::new(); vertices.len()];
    let mut connect = |a: &GraphVertex, b: &GraphVertex, w: u64| {
        let (ia, ib) = (index[a], index[b]);
        let s = config.spring * (1.0 + w as f64).ln();
        springs[ia].push((ib, s));
        springs[ib].push((ia, s));
    };
    for (src, dst, w) in graph.transitions() {
        connect(src, dst, total_weight(w));
    }
    for (e, s, w) in graph.memberships() {
        connect(e, s, total_weight(w));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let y: Vec<f64> = vertices.iter().map(|_| rng.gen_range(0.0..=height)).collect();
    let x: Vec<f64> = vertices.iter().map(|v| config.x_of(v)).collect();

    let mut sim = Sim { config, locked: vec![None; vertices.len()], vertices, x, y, columns, springs };
    sim.run(graph.max_depth());

    let mut result = LayoutResult::default();
    for (i, v) in sim.vertices.iter().enumerate() {
        result.positions.insert(v.clone(), (sim.x[i], sim.y[i]));
        result.lock_iteration.insert(v.clone(), sim.locked[i].expect("every vertex locks by the last iteration"));
    }
    Ok(result)
}

impl Sim<'_> {
    fn run(&mut self, max_depth: usize) {
        let cfg = self.config;
        let total = cfg.iterations_per_depth * max_depth.max(1);

        // Lowest depth of each payload, and the copies to snap when it locks.
        let mut copies: BTreeMap<&Payload, Vec<usize>> = BTreeMap::new();
        for (i, v) in self.vertices.iter().enumerate() {
            copies.entry(&v.payload).or_default().push(i);
        }
        let mut snaps: BTreeMap<usize, Vec<(usize, Vec<usize>)>> = BTreeMap::new();
        for (_, mut idx) in copies {
            // Vertex order is depth-first, so idx[0] is the lowest depth.
            let first = idx.remove(0);
            let at = cfg.lock_iteration(self.vertices[first].depth);
            snaps.entry(at).or_default().push((first, idx));
        }
        let lock_at: Vec<usize> = self.vertices.iter().map(|v| cfg.lock_iteration(v.depth)).collect();
        let depth: Vec<usize> = self.vertices.iter().map(|v| v.depth).collect();

        for iteration in 0..total {
            let disp: Vec<f64> = (0..self.vertices.len())
                .into_par_iter()
                .map(|i| if self.locked[i].is_some() { 0.0 } else { self.force(i) })
                .collect();
            for (i, d) in disp.into_iter().enumerate() {
                if self.locked[i].is_some() {
                    continue;
                }
                let scale = cfg.step_scale(depth[i], iteration);
                self.y[i] += d.clamp(-scale, scale);
            }

            // Copies snap before the regular lock so that a copy locking in
            // the same iteration as its lowest-depth vertex is aligned too.
            let done = iteration + 1;
            if let Some(batch) = snaps.get(&done) {
                for (first, others) in batch {
                    for &j in others {
                        self.y[j] = self.y[*first];
                        self.locked[j] = Some(done);
                    }
                }
            }
            for (locked, &at) in self.locked.iter_mut().zip(&lock_at) {
                if locked.is_none() && at == done {
                    *locked = Some(done);
                }
            }
        }
    }

    fn force(&self, i: usize) -> f64 {
        let cfg = self.config;
        let k = cfg.ideal_distance;
        let floor = 1e-3 * k;
        let yi = self.y[i];
        let mut f = 0.0;
        for &j in self.columns[i].iter() {
            if j == i {
                continue;
            }
            let dy = yi - self.y[j];
            let dist = dy.abs().max(floor);
            let dir = if dy > 0.0 || (dy == 0.0 && i > j) { 1.0 } else { -1.0 };
            f += dir * cfg.repulsion * k * k / dist;
        }
        for &(j, strength) in &self.springs[i] {
            let dy = self.y[j] - yi;
            f += strength * dy * dy.abs() / k;
        }
        f
    }
}

#[derive(Serialize, Deserialize)]
struct LayoutFile {
    version: u32,
    vertices: Vec<LayoutRecord>,
}

#[derive(Serialize, Deserialize)]
struct LayoutRecord {
    vertex_id: String,
    x: f64,
    y: f64,
    lock_iteration: usize,
}

impl LayoutResult {
    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        let vertices = self
            .positions
            .iter()
            .map(|(v, &(x, y))| LayoutRecord {
                vertex_id: v.id(),
                x,
                y,
                lock_iteration: self.lock_iteration.get(v).copied().unwrap_or_default(),
            })
            .collect();
        serde_json::to_writer(out, &LayoutFile { version: LAYOUT_FORMAT_VERSION, vertices })?;
        Ok(())
    }

    pub fn to_json_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_json(&mut buf).expect("serializing to memory");
        String::from_utf8(buf).expect("json is utf-8")
    }

    pub fn read_json<R: Read>(input: R) -> Result<LayoutResult> {
        let file: LayoutFile = serde_json::from_reader(input)?;
        if file.version != LAYOUT_FORMAT_VERSION {
            return Err(Error::Schema(format!("unsupported layout version {}", file.version)));
        }
        let mut out = LayoutResult::default();
        for rec in file.vertices {
            if !(rec.x.is_finite() && rec.y.is_finite()) {
                return Err(Error::Schema(format!("non-finite position for {}", rec.vertex_id)));
            }
            let v = GraphVertex::parse_id(&rec.vertex_id)?;
            out.lock_iteration.insert(v.clone(), rec.lock_iteration);
            out.positions.insert(v, (rec.x, rec.y));
        }
        Ok(out)
    }
}
