//! Cross-validated evaluation of entity graphs: per-depth generalization and
//! Markov next-set prediction scored by Word Mover's Distance.

use std::collections::BTreeMap;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingTable;
use crate::entity::EntitySet;
use crate::error::{parameter, Error, Result};
use crate::graph::{build_graph, star_expand, EntityGraph, GraphVertex};
use crate::rewire::RewiredView;
use crate::stats::{ci95_half_width, mean, BoxStats};
use crate::transport::wmd;
use crate::tree::ConversationPath;

pub const REPORT_FORMAT_VERSION: u32 = 1;

/// Conversation paths grouped by thread id.
pub type ThreadPaths = BTreeMap<String, Vec<ConversationPath>>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSplit {
    pub fold: usize,
    pub train: Vec<String>,
    pub test: Vec<String>,
}

/// Seeded shuffle of the (sorted) thread ids followed by a contiguous
/// partition into `k` test blocks; the first `n % k` blocks get one extra.
pub fn kfold_split<S: AsRef<str>>(thread_ids: &[S], k: usize, seed: u64) -> Result<Vec<FoldSplit>> {
    if k < 2 {
        return Err(parameter("k", "at least two folds are required"));
    }
    if thread_ids.len() < k {
        return Err(Error::TooFewThreads { threads: thread_ids.len(), folds: k });
    }
    let mut ids: Vec<String> = thread_ids.iter().map(|s| s.as_ref().to_string()).collect();
    ids.sort();
    ids.dedup();
    if ids.len() < k {
        return Err(Error::TooFewThreads { threads: ids.len(), folds: k });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ids.shuffle(&mut rng);

    let (base, extra) = (ids.len() / k, ids.len() % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for fold in 0..k {
        let size = base + usize::from(fold < extra);
        let mut test = ids[start..start + size].to_vec();
        let mut train: Vec<String> = ids[..start].iter().chain(&ids[start + size..]).cloned().collect();
        test.sort();
        train.sort();
        folds.push(FoldSplit { fold, train, test });
        start += size;
    }
    Ok(folds)
}

fn subset(paths: &ThreadPaths, ids: &[String]) -> ThreadPaths {
    ids.iter().filter_map(|id| paths.get(id).map(|p| (id.clone(), p.clone()))).collect()
}

/// Star-expanded train and test graphs of one fold.
pub fn fold_graphs(paths: &ThreadPaths, split: &FoldSplit, label: &str) -> (EntityGraph, EntityGraph) {
    let expand = |ids: &[String]| star_expand(&build_graph(&subset(paths, ids), label)).expect("fresh graph is unexpanded");
    (expand(&split.train), expand(&split.test))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthCoverage {
    /// Fraction of distinct test set-vertices sharing an entity with the train
    /// graph at the same depth.
    pub overlap: f64,
    /// Fraction of distinct test set-vertices present verbatim in train.
    pub exact: f64,
    pub test_vertices: usize,
}

/// Per-depth coverage of `test` by `train`. Depths without test vertices are
/// absent from the result.
pub fn generalization(train: &EntityGraph, test: &EntityGraph) -> Result<BTreeMap<usize, DepthCoverage>> {
    let view = RewiredView::new(train)?;
    let mut counts: BTreeMap<usize, (usize, usize, usize)> = BTreeMap::new();
    for (v, _) in test.set_vertices() {
        let Some(set) = v.as_set() else { continue };
        let entry = counts.entry(v.depth).or_default();
        entry.0 += 1;
        if view.is_anchored(set, v.depth) {
            entry.1 += 1;
        }
        if train.occurrences(v).is_some() {
            entry.2 += 1;
        }
    }
    Ok(counts
        .into_iter()
        .map(|(depth, (total, overlap, exact))| {
            (
                depth,
                DepthCoverage {
                    overlap: overlap as f64 / total as f64,
                    exact: exact as f64 / total as f64,
                    test_vertices: total,
                },
            )
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralizationDepth {
    pub depth: usize,
    pub overlap_mean: f64,
    pub overlap_ci95: f64,
    pub overlap_folds: Vec<f64>,
    pub exact_mean: f64,
    pub exact_ci95: f64,
    pub exact_folds: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GeneralizationReport {
    pub depths: Vec<GeneralizationDepth>,
}

impl GeneralizationReport {
    /// Aggregate per-fold coverage maps. A depth missing from some fold is
    /// averaged over the folds where it occurs.
    pub fn from_folds(folds: &[BTreeMap<usize, DepthCoverage>]) -> GeneralizationReport {
        let mut by_depth: BTreeMap<usize, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
        for fold in folds {
            for (&d, c) in fold {
                let e = by_depth.entry(d).or_default();
                e.0.push(c.overlap);
                e.1.push(c.exact);
            }
        }
        let depths = by_depth
            .into_iter()
            .map(|(depth, (overlap, exact))| GeneralizationDepth {
                depth,
                overlap_mean: mean(&overlap),
                overlap_ci95: ci95_half_width(&overlap),
                exact_mean: mean(&exact),
                exact_ci95: ci95_half_width(&exact),
                overlap_folds: overlap,
                exact_folds: exact,
            })
            .collect();
        GeneralizationReport { depths }
    }
}

/// Next-set distribution from one vertex.
#[derive(Debug, Clone, PartialEq)]
pub enum Prediction {
    /// Successors with probabilities summing to one, in vertex order.
    Distribution(Vec<(GraphVertex, f64)>),
    /// No outgoing weight under the requested label.
    DeadEnd,
}

impl Prediction {
    /// Most probable successor; ties go to the smallest entity set.
    pub fn argmax(&self) -> Option<&GraphVertex> {
        match self {
            Prediction::DeadEnd => None,
            Prediction::Distribution(d) => d
                .iter()
                .fold(None::<&(GraphVertex, f64)>, |best, cand| match best {
                    Some(b) if b.1 >= cand.1 => Some(b),
                    _ => Some(cand),
                })
                .map(|(v, _)| v),
        }
    }
}

/// Empirical transition probabilities out of `(set, depth)` in the rewired
/// view, using weights under `label`.
pub fn predict_next(view: &RewiredView<'_>, set: &EntitySet, depth: usize, label: &str) -> Prediction {
    let weighted: Vec<(GraphVertex, u64)> = view
        .successors(set, depth)
        .into_iter()
        .filter_map(|(v, w)| w.get(label).copied().filter(|&x| x > 0).map(|x| (v, x)))
        .collect();
    let total: u64 = weighted.iter().map(|(_, w)| w).sum();
    if total == 0 {
        return Prediction::DeadEnd;
    }
    Prediction::Distribution(weighted.into_iter().map(|(v, w)| (v, w as f64 / total as f64)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WmdDepth {
    pub depth: usize,
    pub stats: BoxStats,
    pub samples: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WmdReport {
    pub depths: Vec<WmdDepth>,
    /// Test paths whose root set is not a train root.
    pub unmatched_roots: usize,
    /// Scored steps where either side had no embedded entity.
    pub undefined_distances: usize,
    /// Walks stopped because the current vertex had no successors.
    pub dead_ends: usize,
    /// Walks stopped because the true next set shares nothing with train.
    pub unanchored: usize,
}

#[derive(Debug, Default)]
struct WalkTally {
    samples: BTreeMap<usize, Vec<f64>>,
    unmatched_roots: usize,
    undefined_distances: usize,
    dead_ends: usize,
    unanchored: usize,
}

/// Score one test path against a train graph. Distances are keyed by the depth
/// of the predicted set, so the first prediction (from the root) lands at 1.
fn walk_path(view: &RewiredView<'_>, path: &ConversationPath, emb: &EmbeddingTable, label: &str, tally: &mut WalkTally) {
    let Some(root) = path.steps.first() else { return };
    if view.graph().occurrences(&GraphVertex::set(root.clone(), 0)).is_none() {
        tally.unmatched_roots += 1;
        return;
    }
    let mut current = root;
    for (depth, actual) in path.steps.iter().enumerate().skip(1) {
        let prediction = predict_next(view, current, depth - 1, label);
        let Some(predicted) = prediction.argmax() else {
            tally.dead_ends += 1;
            return;
        };
        let predicted = predicted.as_set().expect("transitions join set-vertices");
        match wmd(predicted, actual, emb) {
            Some(d) => tally.samples.entry(depth).or_default().push(d),
            None => tally.undefined_distances += 1,
        }
        if !view.is_anchored(actual, depth) {
            tally.unanchored += 1;
            return;
        }
        current = actual;
    }
}

/// Run the prediction protocol over every fold and pool the distances per
/// depth.
pub fn evaluate_prediction(folds: &[FoldSplit], paths: &ThreadPaths, emb: &EmbeddingTable, label: &str) -> WmdReport {
    let tallies: Vec<WalkTally> = folds
        .par_iter()
        .map(|split| {
            let (train, _) = fold_graphs(paths, split, label);
            let view = RewiredView::new(&train).expect("fold graph is expanded");
            let mut tally = WalkTally::default();
            for id in &split.test {
                for path in paths.get(id).into_iter().flatten() {
                    walk_path(&view, path, emb, label, &mut tally);
                }
            }
            tally
        })
        .collect();

    let mut report = WmdReport::default();
    let mut pooled: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for t in tallies {
        report.unmatched_roots += t.unmatched_roots;
        report.undefined_distances += t.undefined_distances;
        report.dead_ends += t.dead_ends;
        report.unanchored += t.unanchored;
        for (d, s) in t.samples {
            pooled.entry(d).or_default().extend(s);
        }
    }
    report.depths = pooled
        .into_iter()
        .filter_map(|(depth, samples)| BoxStats::from_samples(&samples).map(|stats| WmdDepth { depth, stats, samples }))
        .collect();
    report
}

/// Generalization of every fold's test graph against its train graph.
pub fn evaluate_generalization(folds: &[FoldSplit], paths: &ThreadPaths, label: &str) -> GeneralizationReport {
    let per_fold: Vec<BTreeMap<usize, DepthCoverage>> = folds
        .par_iter()
        .map(|split| {
            let (train, test) = fold_graphs(paths, split, label);
            generalization(&train, &test).expect("fold graph is expanded")
        })
        .collect();
    GeneralizationReport::from_folds(&per_fold)
}

/// Both experiments over one set of folds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionReport {
    pub version: u32,
    pub label: String,
    pub folds: usize,
    pub seed: u64,
    pub generalization: GeneralizationReport,
    pub wmd: WmdReport,
}

pub fn cross_validate(paths: &ThreadPaths, emb: &EmbeddingTable, label: &str, k: usize, seed: u64) -> Result<PredictionReport> {
    let ids: Vec<&String> = paths.keys().collect();
    let folds = kfold_split(&ids, k, seed)?;
    Ok(PredictionReport {
        version: REPORT_FORMAT_VERSION,
        label: label.to_string(),
        folds: k,
        seed,
        generalization: evaluate_generalization(&folds, paths, label),
        wmd: evaluate_prediction(&folds, paths, emb, label),
    })
}

impl PredictionReport {
    /// `depth,mean,ci95,exact_mean,exact_ci95`
    pub fn write_generalization_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "depth,mean,ci95,exact_mean,exact_ci95")?;
        for d in &self.generalization.depths {
            writeln!(out, "{},{},{},{},{}", d.depth, d.overlap_mean, d.overlap_ci95, d.exact_mean, d.exact_ci95)?;
        }
        Ok(())
    }

    /// `depth,median,q1,q3,lo,hi,n`
    pub fn write_wmd_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "depth,median,q1,q3,lo,hi,n")?;
        for d in &self.wmd.depths {
            let s = &d.stats;
            writeln!(out, "{},{},{},{},{},{},{}", d.depth, s.median, s.q1, s.q3, s.lo, s.hi, s.n)?;
        }
        Ok(())
    }
}
