use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use log::{info, warn};

use entigraph::activation::{spread, ActivationFile, ActivationParams, Normalization};
use entigraph::corpus::{filter_bots, filter_top_fraction, load_botlist, parse_dump, write_canonical};
use entigraph::embedding::load_embeddings;
use entigraph::export::export_bundle;
use entigraph::graph::merge_corpora;
use entigraph::layout::{compute_layout, LayoutConfig};
use entigraph::linking::{link_corpus, load_prelinked, write_annotations, Gazetteer};
use entigraph::pipeline::{corpus_graph, PathsFile};
use entigraph::predict::cross_validate;
use entigraph::{Corpus, DumpFormat, EntityGraph, EntityId, GraphVertex, LayoutResult, RewiredView};

use crate::{ActivateArgs, BuildArgs, ExportArgs, IngestArgs, LayoutArgs, LinkArgs, MergeArgs, PredictArgs};

fn open(path: &Path) -> Result<BufReader<File>> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(BufReader::new(file))
}

fn write_with<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> entigraph::Result<()>,
{
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    let mut out = BufWriter::new(file);
    f(&mut out).with_context(|| format!("writing {}", path.display()))?;
    out.flush()?;
    Ok(())
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "corpus".into())
}

fn read_corpus(path: &Path, label: &str) -> Result<Corpus> {
    let (corpus, report) = parse_dump(open(path)?, DumpFormat::CanonicalJson, label)
        .with_context(|| format!("reading corpus {}", path.display()))?;
    if report.malformed > 0 {
        warn!("{}: skipped {} malformed lines", path.display(), report.malformed);
    }
    Ok(corpus)
}

fn read_graph(path: &Path) -> Result<EntityGraph> {
    EntityGraph::read_json(open(path)?).with_context(|| format!("reading graph {}", path.display()))
}

pub fn ingest(args: IngestArgs) -> Result<()> {
    let format: DumpFormat = args.format.parse()?;
    let label = stem(&args.output);
    let (corpus, report) = parse_dump(open(&args.input)?, format, &label)?;
    info!("parsed {} lines: {} threads, {} malformed, {} orphans", report.lines, corpus.len(), report.malformed, report.orphans);
    let mut corpus = filter_top_fraction(&corpus, args.top_fraction)?;
    info!("kept the top {} threads", corpus.len());
    if let Some(path) = &args.botlist {
        let bots = load_botlist(open(path)?)?;
        let before = corpus.comment_total();
        corpus = filter_bots(&corpus, &bots);
        info!("bot filter removed {} comments", before - corpus.comment_total());
    }
    write_with(&args.output, |out| write_canonical(&corpus, out))?;
    if let Some(path) = &args.report {
        write_with(path, |out| Ok(serde_json::to_writer_pretty(out, &report)?))?;
    }
    Ok(())
}

pub fn link(args: LinkArgs) -> Result<()> {
    let corpus = read_corpus(&args.corpus, &stem(&args.corpus))?;
    let sets = match (&args.gazetteer, &args.prelinked) {
        (Some(path), _) => {
            let gaz = Gazetteer::load(open(path)?).with_context(|| format!("reading gazetteer {}", path.display()))?;
            info!("gazetteer has {} surfaces", gaz.len());
            link_corpus(&corpus, &gaz, args.min_prior)
        }
        (None, Some(path)) => {
            let known: BTreeSet<String> = corpus.threads().iter().flat_map(|t| t.comments().map(|c| c.id.clone())).collect();
            let ann = load_prelinked(open(path)?, Some(&known))?;
            if ann.skipped > 0 {
                warn!("skipped {} malformed annotation records", ann.skipped);
            }
            if !ann.unknown.is_empty() {
                warn!("{} annotated comments are not in the corpus", ann.unknown.len());
            }
            ann.sets
        }
        (None, None) => bail!("either --gazetteer or --prelinked is required"),
    };
    let linked = sets.values().filter(|s| !s.is_empty()).count();
    info!("{linked} of {} comments link at least one entity", sets.len());
    write_with(&args.output, |out| write_annotations(&sets, out))
}

pub fn build(args: BuildArgs) -> Result<()> {
    let label = args.label.clone().unwrap_or_else(|| stem(&args.corpus));
    let corpus = read_corpus(&args.corpus, &label)?;
    let ann = load_prelinked(open(&args.annotations)?, None)?;
    let (paths, graph) = corpus_graph(&corpus, &ann.sets, args.min_path_len)?;
    info!(
        "{} paths over {} threads: {} set-vertices, {} transitions, max depth {}",
        paths.values().map(Vec::len).sum::<usize>(),
        paths.len(),
        graph.set_vertices().count(),
        graph.transition_count(),
        graph.max_depth()
    );
    write_with(&args.output, |out| graph.write_json(out))?;
    if let Some(path) = &args.paths_out {
        let file = PathsFile::new(&label, args.min_path_len, &paths);
        write_with(path, |out| file.write_json(out))?;
    }
    Ok(())
}

pub fn merge(args: MergeArgs) -> Result<()> {
    let mut merged = EntityGraph::empty();
    for path in &args.graphs {
        merged = merge_corpora(&merged, &read_graph(path)?).with_context(|| format!("merging {}", path.display()))?;
    }
    info!("merged corpora {:?}", merged.labels());
    write_with(&args.output, |out| merged.write_json(out))
}

pub fn predict(args: PredictArgs) -> Result<()> {
    let file = PathsFile::read_json(open(&args.paths)?).with_context(|| format!("reading paths {}", args.paths.display()))?;
    let paths = file.paths()?;
    let entities: BTreeSet<EntityId> =
        paths.values().flatten().flat_map(|p| p.steps.iter().flat_map(|s| s.iter().cloned())).collect();
    let (emb, missing) = load_embeddings(open(&args.embeddings)?, &entities)?;
    if !missing.is_empty() {
        warn!("{} entities have no embedding and are ignored by the distance", missing.len());
    }
    let report = cross_validate(&paths, &emb, &file.label, args.folds, args.seed)?;
    for d in &report.generalization.depths {
        info!("depth {}: generalization {:.3} +/- {:.3}", d.depth, d.overlap_mean, d.overlap_ci95);
    }
    write_with(&args.output, |out| Ok(serde_json::to_writer_pretty(out, &report)?))?;
    if let Some(path) = &args.generalization_csv {
        write_with(path, |out| report.write_generalization_csv(out))?;
    }
    if let Some(path) = &args.wmd_csv {
        write_with(path, |out| report.write_wmd_csv(out))?;
    }
    Ok(())
}

pub fn layout(args: LayoutArgs) -> Result<()> {
    let graph = read_graph(&args.graph)?;
    let config = LayoutConfig {
        iterations_per_depth: args.iterations_per_depth,
        column_spacing: args.column_spacing,
        ideal_distance: args.ideal_distance,
        initial_temperature: args.initial_temperature,
        seed: args.seed,
        ..LayoutConfig::default()
    };
    let result = compute_layout(&graph, &config)?;
    info!("placed {} vertices", result.positions.len());
    write_with(&args.output, |out| result.write_json(out))
}

pub fn activate(args: ActivateArgs) -> Result<()> {
    let graph = read_graph(&args.graph)?;
    let view = RewiredView::new(&graph)?;
    let source = GraphVertex::parse_id(&args.source)?;
    let normalization: Normalization = args.normalization.parse()?;
    let params = ActivationParams { firing_threshold: args.firing_threshold, decay: args.decay, normalization };
    let state = spread(&view, &source, params, args.label.as_deref())?;
    info!("{} vertices activated, {} fired", state.activation.len(), state.fired.len());
    let file = ActivationFile::from_state(&state);
    write_with(&args.output, |out| file.write_json(out))
}

pub fn export(args: ExportArgs) -> Result<()> {
    let graph = read_graph(&args.graph)?;
    let layout =
        LayoutResult::read_json(open(&args.layout)?).with_context(|| format!("reading layout {}", args.layout.display()))?;
    let activation = match &args.activation {
        Some(path) => {
            Some(ActivationFile::read_json(open(path)?).with_context(|| format!("reading activation {}", path.display()))?)
        }
        None => None,
    };
    let bundle = export_bundle(&graph, &layout, activation.as_ref())?;
    info!("bundle has {} nodes and {} links", bundle.nodes.len(), bundle.links.len());
    write_with(&args.output, |out| bundle.write_json(out))
}
