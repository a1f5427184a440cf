#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::type_complexity)]

//! Acceptance suite. Every criterion prints one PASS or FAIL line; the
//! process exits nonzero if any criterion fails.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::BufReader;
use std::panic;
use std::path::PathBuf;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use entigraph::activation::{activation_subgraph, spread, ActivationFile, ActivationParams, Normalization};
use entigraph::corpus::{filter_bots, filter_top_fraction, load_botlist, parse_dump};
use entigraph::embedding::load_embeddings;
use entigraph::entity_set;
use entigraph::export::{export_bundle, ViewerBundle};
use entigraph::graph::{build_graph, merge_corpora, star_expand, total_weight};
use entigraph::layout::{compute_layout, LayoutConfig};
use entigraph::linking::{link_corpus, Gazetteer, DEFAULT_MIN_PRIOR};
use entigraph::pipeline::{corpus_graph, thread_paths};
use entigraph::predict::{cross_validate, fold_graphs, generalization, kfold_split, ThreadPaths};
use entigraph::synth::{drift_corpus, random_corpus, DriftParams, RandomCorpusParams};
use entigraph::transport::{euclidean, wmd};
use entigraph::tree::ConversationPath;
use entigraph::{DumpFormat, EmbeddingTable, EntityGraph, EntityId, EntitySet, GraphVertex, RewiredView, VertexKind};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn main() {
    let criteria: &[(&str, fn() -> Outcome)] = &[
        ("graph construction oracle", graph_construction_oracle),
        ("star expansion", star_expansion),
        ("generalization metric", generalization_metric),
        ("trend reproduction", trend_reproduction),
        ("word mover's distance", word_movers_distance),
        ("layout", layout),
        ("spreading activation", spreading_activation),
        ("end-to-end", end_to_end),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failures = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = panic::catch_unwind(check).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail} [{secs:.2}s]"),
            Err(detail) => {
                failures += 1;
                println!("FAIL {name}: {detail} [{secs:.2}s]");
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}

fn random_params(rng: &mut ChaCha8Rng) -> RandomCorpusParams {
    RandomCorpusParams {
        threads: rng.gen_range(1..=50),
        max_depth: rng.gen_range(1..=6),
        alphabet: rng.gen_range(1..=20),
        max_children: 3,
        max_set_size: 3,
        empty_prob: 0.05,
    }
}

fn graph_construction_oracle() -> Outcome {
    let start = Instant::now();
    let mut edges = 0;
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = random_params(&mut rng);
        let (corpus, sets) = random_corpus(&mut rng, &params, "r");
        let (_, graph) = corpus_graph(&corpus, &sets, 3).map_err(|e| e.to_string())?;
        let expected = common::brute_transitions(&corpus, &sets, 3);
        let actual: BTreeMap<(usize, String, String), u64> = graph
            .transitions()
            .map(|(s, d, w)| ((s.depth, s.as_set().unwrap().key(), d.as_set().unwrap().key()), w["r"]))
            .collect();
        ensure!(actual == expected, "corpus {seed}: transition weights differ from the recount");
        edges += actual.len();
    }
    let elapsed = start.elapsed().as_secs_f64();
    ensure!(elapsed < 10.0, "took {elapsed:.2}s");
    Ok(format!("100 corpora, {edges} transitions match the recount in {elapsed:.2}s"))
}

fn star_expansion() -> Outcome {
    let mut checked = 0;
    for seed in 100..150 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = random_params(&mut rng);
        let (corpus, sets) = random_corpus(&mut rng, &params, "r");
        let paths = thread_paths(&corpus, &sets, 3);
        let plain = build_graph(&paths, "r");
        let expanded = star_expand(&plain).map_err(|e| e.to_string())?;

        let pairs: BTreeSet<(usize, &EntityId)> =
            plain.set_vertices().flat_map(|(v, _)| v.as_set().unwrap().iter().map(move |e| (v.depth, e))).collect();
        ensure!(
            expanded.entity_vertices().count() == pairs.len(),
            "corpus {seed}: {} entity-vertices for {} (entity, depth) pairs",
            expanded.entity_vertices().count(),
            pairs.len()
        );
        let occurrences = common::brute_occurrences(&corpus, &sets, 3);
        let mut memberships = 0;
        for (e, s, w) in expanded.memberships() {
            let key = (s.depth, s.as_set().unwrap().key());
            ensure!(w.get("r") == occurrences.get(&key), "corpus {seed}: membership {} -> {} weight", e.id(), s.id());
            memberships += 1;
        }
        let expected_memberships: usize = plain.set_vertices().map(|(v, _)| v.as_set().unwrap().len()).sum();
        ensure!(memberships == expected_memberships, "corpus {seed}: membership edge count");
        let before: Vec<_> = plain.transitions().collect();
        let after: Vec<_> = expanded.transitions().collect();
        ensure!(before == after, "corpus {seed}: transitions changed");
        checked += 1;
    }
    Ok(format!("{checked} corpora: entity-vertex counts, membership weights and transitions exact"))
}

fn paths_of(threads: &[(&str, Vec<EntitySet>)]) -> ThreadPaths {
    let mut out: ThreadPaths = BTreeMap::new();
    for (id, steps) in threads {
        out.entry(id.to_string()).or_default().push(ConversationPath::new(steps.clone()));
    }
    out
}

fn expanded(paths: &ThreadPaths) -> EntityGraph {
    star_expand(&build_graph(paths, "x")).unwrap()
}

fn generalization_metric() -> Outcome {
    let train = expanded(&paths_of(&[("a", vec![entity_set!["R"], entity_set!["A"], entity_set!["X"]])]));
    let test = expanded(&paths_of(&[
        ("b", vec![entity_set!["R"], entity_set!["A", "B"], entity_set!["Y"]]),
        ("c", vec![entity_set!["R"], entity_set!["C"], entity_set!["Y"]]),
    ]));
    let cov = generalization(&train, &test).map_err(|e| e.to_string())?;
    ensure!(cov[&1].overlap == 0.5, "{{A,B}},{{C}} vs {{A}}: overlap {}", cov[&1].overlap);
    ensure!(cov[&1].exact == 0.0, "{{A,B}},{{C}} vs {{A}}: exact {}", cov[&1].exact);
    ensure!(cov[&0].overlap == 1.0 && cov[&2].overlap == 0.0, "root and leaf coverage");

    let train = expanded(&paths_of(&[("a", vec![entity_set!["R"], entity_set!["A"], entity_set!["B"]])]));
    let test = expanded(&paths_of(&[
        ("b", vec![entity_set!["R"], entity_set!["A"], entity_set!["B"]]),
        ("c", vec![entity_set!["R"], entity_set!["D"], entity_set!["B"]]),
        ("d", vec![entity_set!["R"], entity_set!["E"], entity_set!["B"]]),
        ("e", vec![entity_set!["R"], entity_set!["A", "F"], entity_set!["B"]]),
    ]));
    let cov = generalization(&train, &test).map_err(|e| e.to_string())?;
    ensure!(cov[&1].overlap == 0.5 && cov[&1].exact == 0.25, "second fixture: {:?}", cov[&1]);

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (corpus, sets) =
        random_corpus(&mut rng, &RandomCorpusParams { threads: 50, alphabet: 15, ..RandomCorpusParams::default() }, "x");
    let paths = thread_paths(&corpus, &sets, 3);
    let full = expanded(&paths);
    for (d, c) in generalization(&full, &full).map_err(|e| e.to_string())? {
        ensure!(c.overlap == 1.0 && c.exact == 1.0, "train = test: depth {d} coverage {:?}", c);
    }

    let ids: Vec<String> = paths.keys().cloned().collect();
    let (test_ids, train_ids) = ids.split_at(10);
    let subset = |keep: &[String]| -> ThreadPaths { keep.iter().map(|id| (id.clone(), paths[id].clone())).collect() };
    let test = expanded(&subset(test_ids));
    let base = generalization(&expanded(&subset(train_ids)), &test).map_err(|e| e.to_string())?;
    for trial in 0..50 {
        let mut kept = train_ids.to_vec();
        kept.shuffle(&mut rng);
        kept.truncate(rng.gen_range(0..train_ids.len()));
        let reduced = generalization(&expanded(&subset(&kept)), &test).map_err(|e| e.to_string())?;
        for (d, c) in &reduced {
            let b = &base[d];
            ensure!(c.overlap <= b.overlap && c.exact <= b.exact, "deletion {trial}: depth {d} rose from {:?} to {:?}", b, c);
        }
    }
    Ok("fixtures exact (0.5 overlap case), train = test gives 1.0, 50 deletions never raise coverage".into())
}

fn drift() -> (ThreadPaths, EmbeddingTable) {
    let synth = drift_corpus(&DriftParams::default(), "drift");
    let (paths, _) = corpus_graph(&synth.corpus, &synth.sets, 3).unwrap();
    (paths, synth.embeddings)
}

fn trend_reproduction() -> Outcome {
    let (paths, _) = drift();
    let ids: Vec<&String> = paths.keys().collect();
    let folds = kfold_split(&ids, 5, 42).map_err(|e| e.to_string())?;
    let mut good = 0;
    let mut curves = Vec::new();
    for split in &folds {
        let (train, test) = fold_graphs(&paths, split, "drift");
        let cov = generalization(&train, &test).map_err(|e| e.to_string())?;
        let curve: Vec<f64> = cov.range(1..).map(|(_, c)| c.overlap).collect();
        if curve.windows(2).all(|w| w[1] <= w[0]) {
            good += 1;
        }
        curves.push(curve.iter().map(|c| format!("{c:.2}")).collect::<Vec<_>>().join(" "));
    }
    ensure!(good >= 4, "only {good} of 5 folds decline: {curves:?}");
    Ok(format!("{good}/5 folds non-increasing; fold 1 coverage by depth: {}", curves[0]))
}

fn word_movers_distance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut pairs = 0;
    let mut worst: f64 = 0.0;
    for fixture in 0..200 {
        let dim = rng.gen_range(1..=5);
        let mut emb = EmbeddingTable::new(dim).unwrap();
        let ids: Vec<EntityId> = (0..8).map(|k| EntityId::new(format!("N{k}")).unwrap()).collect();
        for id in &ids {
            emb.insert(id.clone(), (0..dim).map(|_| rng.gen_range(-3.0..3.0)).collect()).unwrap();
        }
        for n in 1..=4 {
            for m in 1..=4 {
                let a: EntitySet = ids.choose_multiple(&mut rng, n).cloned().collect();
                let b: EntitySet = ids.choose_multiple(&mut rng, m).cloned().collect();
                let cost: Vec<Vec<f64>> = a
                    .iter()
                    .map(|x| b.iter().map(|y| euclidean(emb.get(x.as_str()).unwrap(), emb.get(y.as_str()).unwrap())).collect())
                    .collect();
                let oracle = common::brute_transport(&cost);
                let ab = wmd(&a, &b, &emb).unwrap();
                let ba = wmd(&b, &a, &emb).unwrap();
                worst = worst.max((ab - oracle).abs());
                ensure!((ab - oracle).abs() <= 1e-6, "fixture {fixture}: {a} vs {b}: {ab} != oracle {oracle}");
                ensure!((ab - ba).abs() <= 1e-12, "fixture {fixture}: asymmetric {ab} vs {ba}");
                ensure!(wmd(&a, &a, &emb) == Some(0.0), "fixture {fixture}: wmd(a, a) != 0");
                pairs += 1;
            }
        }
    }

    let (paths, emb) = drift();
    let report = cross_validate(&paths, &emb, "drift", 5, 42).map_err(|e| e.to_string())?;
    let medians: Vec<(usize, f64)> = report.wmd.depths.iter().map(|d| (d.depth, d.stats.median)).collect();
    ensure!(medians.len() >= 3, "too few depths with samples: {medians:?}");
    ensure!(medians.windows(2).all(|w| w[1].1 >= w[0].1), "medians decrease: {medians:?}");
    let shown: Vec<String> = medians.iter().map(|(d, m)| format!("{d}:{m:.2}")).collect();
    Ok(format!("{pairs} pairs within {worst:.1e} of the oracle; drift medians by depth {}", shown.join(" ")))
}

fn cluster_fixture(rng: &mut ChaCha8Rng) -> EntityGraph {
    let mut paths: ThreadPaths = BTreeMap::new();
    for c in 0..3 {
        let members: Vec<EntityId> = (0..4).map(|k| EntityId::new(format!("C{c}_{k}")).unwrap()).collect();
        for t in 0..8 {
            let steps: Vec<EntitySet> = (0..3).map(|_| members.choose_multiple(rng, 2).cloned().collect()).collect();
            paths.insert(format!("c{c}t{t}"), vec![ConversationPath::new(steps)]);
        }
    }
    expanded(&paths)
}

fn cluster_of(v: &GraphVertex) -> usize {
    v.entities()[0].as_str()[1..2].parse().unwrap()
}

fn layout() -> Outcome {
    let synth = drift_corpus(&DriftParams { threads: 60, ..DriftParams::default() }, "lay");
    let (_, graph) = corpus_graph(&synth.corpus, &synth.sets, 3).map_err(|e| e.to_string())?;
    let cfg = LayoutConfig { seed: 11, ..LayoutConfig::default() };
    let first = compute_layout(&graph, &cfg).map_err(|e| e.to_string())?;
    for (v, &(x, _)) in &first.positions {
        let expected = match v.kind() {
            VertexKind::Set => v.depth as f64 * cfg.column_spacing,
            VertexKind::Entity => (v.depth as f64 - cfg.entity_column_offset) * cfg.column_spacing,
        };
        ensure!(x == expected, "{} has x = {x}, expected {expected}", v.id());
    }
    let mut by_payload: BTreeMap<_, Vec<u64>> = BTreeMap::new();
    for (v, &(_, y)) in &first.positions {
        by_payload.entry(&v.payload).or_default().push(y.to_bits());
    }
    let repeated = by_payload.values().filter(|ys| ys.len() > 1).count();
    ensure!(by_payload.values().all(|ys| ys.iter().all(|&y| y == ys[0])), "a payload has differing y across depths");
    let second = compute_layout(&graph, &cfg).map_err(|e| e.to_string())?;
    ensure!(first.to_json_string() == second.to_json_string(), "same seed gave different bytes");

    let mut separated = 0;
    for seed in 0..30u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let g = cluster_fixture(&mut rng);
        let r = compute_layout(&g, &LayoutConfig { seed, ..LayoutConfig::default() }).map_err(|e| e.to_string())?;
        let sets: Vec<(&GraphVertex, f64)> =
            r.positions.iter().filter(|(v, _)| v.kind() == VertexKind::Set).map(|(v, &(_, y))| (v, y)).collect();
        let (mut intra, mut inter) = ((0.0, 0), (0.0, 0));
        for (i, (u, yu)) in sets.iter().enumerate() {
            for (v, yv) in &sets[i + 1..] {
                if u.depth != v.depth {
                    continue;
                }
                let d = (yu - yv).abs();
                if cluster_of(u) == cluster_of(v) {
                    intra = (intra.0 + d, intra.1 + 1);
                } else {
                    inter = (inter.0 + d, inter.1 + 1);
                }
            }
        }
        if intra.0 / (intra.1 as f64) < inter.0 / (inter.1 as f64) {
            separated += 1;
        }
    }
    ensure!(separated >= 27, "clusters separated in only {separated} of 30 seeds");
    Ok(format!(
        "{} vertices on exact columns, {repeated} recurring payloads aligned, deterministic, clusters separated in {separated}/30 seeds",
        first.positions.len()
    ))
}

fn set_vertex(key: &str, depth: usize) -> GraphVertex {
    GraphVertex::set(EntitySet::from_key(key).unwrap(), depth)
}

fn spreading_activation() -> Outcome {
    let chain = expanded(&paths_of(&[("t", vec![entity_set!["A"], entity_set!["B"], entity_set!["C"], entity_set!["D"]])]));
    let view = RewiredView::new(&chain).unwrap();
    let s = spread(&view, &set_vertex("A", 0), ActivationParams::new(0.3, 0.5), None).map_err(|e| e.to_string())?;
    let got = [s.get(&set_vertex("A", 0)), s.get(&set_vertex("B", 1)), s.get(&set_vertex("C", 2)), s.get(&set_vertex("D", 3))];
    ensure!(
        (got[0] - 1.0).abs() < 1e-12 && (got[1] - 0.5).abs() < 1e-12 && (got[2] - 0.25).abs() < 1e-12 && got[3] == 0.0,
        "chain activations {got:?}"
    );
    ensure!(!s.fired.contains(&set_vertex("C", 2)), "third chain vertex fired");
    let sub = activation_subgraph(&s, 1.0, 4.0);
    ensure!(sub.radii.len() == 3, "chain subgraph has {} vertices", sub.radii.len());

    let s = spread(&view, &set_vertex("A", 0), ActivationParams::new(0.0, 0.0), None).map_err(|e| e.to_string())?;
    ensure!(s.activation.len() == 1 && s.fired.len() == 1, "D = 0 reached {} vertices", s.activation.len());

    // Global-max weights 8, 8, 10 make each parent send 0.4 * 1 * 0.5 = 0.2.
    let mut threads = Vec::new();
    for _ in 0..8 {
        threads.push(("s", vec![entity_set!["S"], entity_set!["P"], entity_set!["C"]]));
        threads.push(("s", vec![entity_set!["S"], entity_set!["Q"], entity_set!["C"]]));
    }
    let mut convergent: ThreadPaths = BTreeMap::new();
    for (i, (_, steps)) in threads.into_iter().enumerate() {
        convergent.insert(format!("s{i}"), vec![ConversationPath::new(steps)]);
    }
    for i in 0..2 {
        convergent
            .insert(format!("x{i}p"), vec![ConversationPath::new(vec![entity_set!["X"], entity_set!["P"], entity_set!["C"]])]);
        convergent
            .insert(format!("x{i}q"), vec![ConversationPath::new(vec![entity_set!["X"], entity_set!["Q"], entity_set!["C"]])]);
    }
    let g = expanded(&convergent);
    let view = RewiredView::new(&g).unwrap();
    let params = ActivationParams { firing_threshold: 0.3, decay: 0.5, normalization: Normalization::GlobalMax };
    let s = spread(&view, &set_vertex("S", 0), params, None).map_err(|e| e.to_string())?;
    let child = s.get(&set_vertex("C", 2));
    ensure!((child - 0.4).abs() < 1e-12, "convergent child has A = {child}");
    ensure!(s.fired.contains(&set_vertex("C", 2)), "convergent child did not fire");

    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for trial in 0..100 {
        let params = random_params(&mut rng);
        let (corpus, sets) = random_corpus(&mut rng, &params, "r");
        let (_, g) = corpus_graph(&corpus, &sets, 2).map_err(|e| e.to_string())?;
        let sources: Vec<&GraphVertex> = g.set_vertices().map(|(v, _)| v).collect();
        let Some(&source) = sources.choose(&mut rng) else { continue };
        let view = RewiredView::new(&g).unwrap();
        let params = ActivationParams {
            firing_threshold: rng.gen_range(0.0..=1.0),
            decay: rng.gen_range(0.0..=1.0),
            normalization: if rng.gen_bool(0.5) { Normalization::OutNormalized } else { Normalization::GlobalMax },
        };
        let s = spread(&view, source, params, None).map_err(|e| e.to_string())?;
        let distinct: BTreeSet<&GraphVertex> = s.fire_order.iter().collect();
        ensure!(distinct.len() == s.fire_order.len(), "trial {trial}: a vertex fired twice");
        ensure!(distinct.len() == s.fired.len(), "trial {trial}: fired set and firing order disagree");
        for v in &s.fire_order[1..] {
            ensure!(s.get(v) > params.firing_threshold, "trial {trial}: {} fired at or below F", v.id());
        }
        for (src, _) in &s.propagation {
            ensure!(s.fired.contains(src), "trial {trial}: {} sent signal without firing", src.id());
        }
        ensure!(s.fire_order.iter().all(|v| v.depth <= g.max_depth()), "trial {trial}: propagation passed the last depth");
        if params.normalization == Normalization::OutNormalized {
            for depth in source.depth..g.max_depth() {
                let fired: f64 = s.fired.iter().filter(|v| v.depth == depth).map(|v| s.get(v)).sum();
                let next = s.activation.iter().filter(|(v, _)| v.depth == depth + 1).map(|(_, &a)| a).fold(0.0, f64::max);
                ensure!(next <= params.decay * fired + 1e-12, "trial {trial}: depth {} exceeds the ceiling", depth + 1);
            }
        }
    }
    Ok("chain (1, 0.5, 0.25), D = 0 isolation, convergent 0.4 fires, 100 random graphs fire once and terminate".into())
}

fn sample_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/sample")
}

fn run_sample() -> Result<String, String> {
    let dir = sample_dir();
    let open = |name: &str| File::open(dir.join(name)).map(BufReader::new).map_err(|e| format!("{name}: {e}"));
    let (corpus, _) = parse_dump(open("dump.jsonl")?, DumpFormat::RedditJsonl, "sample").map_err(|e| e.to_string())?;
    let corpus = filter_top_fraction(&corpus, 1.0).map_err(|e| e.to_string())?;
    let bots = load_botlist(open("botlist.txt")?).map_err(|e| e.to_string())?;
    let corpus = filter_bots(&corpus, &bots);
    let gaz = Gazetteer::load(open("gazetteer.tsv")?).map_err(|e| e.to_string())?;
    let sets = link_corpus(&corpus, &gaz, DEFAULT_MIN_PRIOR);
    let (paths, graph) = corpus_graph(&corpus, &sets, 3).map_err(|e| e.to_string())?;
    let entities: BTreeSet<EntityId> = sets.values().flat_map(|s| s.iter().cloned()).collect();
    let (emb, _) = load_embeddings(open("embeddings.txt")?, &entities).map_err(|e| e.to_string())?;
    let report = cross_validate(&paths, &emb, "sample", 5, 42).map_err(|e| e.to_string())?;
    if report.wmd.depths.is_empty() {
        return Err("prediction produced no distances".into());
    }
    let layout = compute_layout(&graph, &LayoutConfig::default()).map_err(|e| e.to_string())?;
    let source = graph
        .set_vertices()
        .filter(|(v, _)| v.depth == 0)
        .max_by_key(|(v, w)| (total_weight(w), std::cmp::Reverse((*v).clone())))
        .map(|(v, _)| v.clone())
        .ok_or("graph has no roots")?;
    let view = RewiredView::new(&graph).map_err(|e| e.to_string())?;
    let state = spread(&view, &source, ActivationParams::new(0.1, 0.8), None).map_err(|e| e.to_string())?;
    let bundle = export_bundle(&graph, &layout, Some(&ActivationFile::from_state(&state))).map_err(|e| e.to_string())?;
    let text = bundle.to_json_string();
    ViewerBundle::read_json(text.as_bytes()).map_err(|e| e.to_string())?;
    Ok(text)
}

fn end_to_end() -> Outcome {
    let start = Instant::now();
    let first = run_sample()?;
    let elapsed = start.elapsed().as_secs_f64();
    ensure!(elapsed < 60.0, "sample pipeline took {elapsed:.1}s");
    let second = run_sample()?;
    ensure!(first == second, "bundle bytes differ between runs");
    let bundle: ViewerBundle = serde_json::from_str(&first).map_err(|e| e.to_string())?;

    let mut a: ThreadPaths = BTreeMap::new();
    let mut b: ThreadPaths = BTreeMap::new();
    for i in 0..10 {
        let next_a = if i < 3 { "B" } else { "C" };
        let next_b = if i < 1 { "B" } else { "C" };
        a.insert(
            format!("a{i}"),
            vec![ConversationPath::new(vec![entity_set!["A"], EntitySet::from_key(next_a).unwrap(), entity_set!["Z"]])],
        );
        b.insert(
            format!("b{i}"),
            vec![ConversationPath::new(vec![entity_set!["A"], EntitySet::from_key(next_b).unwrap(), entity_set!["Z"]])],
        );
    }
    let merged = merge_corpora(&star_expand(&build_graph(&a, "a")).unwrap(), &star_expand(&build_graph(&b, "b")).unwrap())
        .map_err(|e| e.to_string())?;
    let dual =
        export_bundle(&merged, &compute_layout(&merged, &LayoutConfig::default()).unwrap(), None).map_err(|e| e.to_string())?;
    let link = dual.links.iter().find(|l| l.src == "s0:A" && l.dst == "s1:B").ok_or("A -> B link missing")?;
    ensure!(link.blend == Some(0.75), "blend {:?}, expected exactly 0.75", link.blend);

    Ok(format!(
        "sample bundle ({} nodes, {} links) valid and byte-identical across runs, first run {elapsed:.1}s; blend 0.75 exact",
        bundle.nodes.len(),
        bundle.links.len()
    ))
}
