//! Synthetic corpora for tests, benchmarks and the bundled sample.

use std::collections::BTreeMap;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::corpus::{Comment, Corpus, Thread};
use crate::embedding::EmbeddingTable;
use crate::entity::{EntityId, EntitySet};
use crate::error::Result;

#[derive(Debug, Clone, Copy)]
pub struct RandomCorpusParams {
    pub threads: usize,
    pub max_depth: usize,
    pub alphabet: usize,
    pub max_children: usize,
    pub max_set_size: usize,
    /// Probability that a comment links no entity.
    pub empty_prob: f64,
}

impl Default for RandomCorpusParams {
    fn default() -> Self {
        RandomCorpusParams { threads: 50, max_depth: 6, alphabet: 20, max_children: 3, max_set_size: 3, empty_prob: 0.05 }
    }
}

fn comment(thread: &str, id: String, parent: Option<&str>, created_at: i64, author: &str, text: String) -> Comment {
    Comment {
        id,
        parent_id: parent.map(str::to_owned),
        thread_id: thread.to_string(),
        author: author.to_string(),
        text,
        created_at,
        is_root: parent.is_none(),
    }
}

/// Random comment trees with random entity sets drawn from `E00..`.
pub fn random_corpus<R: Rng>(rng: &mut R, params: &RandomCorpusParams, label: &str) -> (Corpus, BTreeMap<String, EntitySet>) {
    let alphabet: Vec<EntityId> =
        (0..params.alphabet.max(1)).map(|k| EntityId::new(format!("E{k:02}")).expect("valid id")).collect();
    let mut sets = BTreeMap::new();
    let mut threads = Vec::new();
    for t in 0..params.threads.max(1) {
        let tid = format!("{label}{t:03}");
        let mut comments = Vec::new();
        let mut stack: Vec<(String, Option<String>, usize)> = vec![(format!("{tid}_0"), None, 0)];
        let mut next = 1;
        while let Some((id, parent, depth)) = stack.pop() {
            let set: EntitySet = if rng.gen_bool(params.empty_prob) {
                EntitySet::new()
            } else {
                let size = rng.gen_range(1..=params.max_set_size.max(1));
                (0..size).map(|_| alphabet.choose(rng).expect("alphabet").clone()).collect()
            };
            sets.insert(id.clone(), set);
            comments.push(comment(&tid, id.clone(), parent.as_deref(), next as i64, "user", String::new()));
            if depth < params.max_depth {
                for _ in 0..rng.gen_range(0..=params.max_children) {
                    stack.push((format!("{tid}_{next}"), Some(id.clone()), depth + 1));
                    next += 1;
                }
            }
        }
        threads.push(Thread::from_comments(tid, comments).expect("generated thread has a root"));
    }
    (Corpus::new(label, threads).expect("unique thread ids"), sets)
}

#[derive(Debug, Clone)]
pub struct DriftParams {
    pub threads: usize,
    pub max_depth: usize,
    pub dimension: usize,
    /// Popular entity names; fresh entities are `Topic_<n>`.
    pub popular: Vec<String>,
    /// Fraction of authors replaced by a bot account.
    pub bot_rate: f64,
    pub seed: u64,
}

pub const POPULAR_ENTITIES: &[&str] = &[
    "United_States",
    "Donald_Trump",
    "China",
    "Barack_Obama",
    "Joe_Biden",
    "Russia",
    "Republican_Party",
    "Democratic_Party",
    "White_House",
    "Islam",
    "Italy",
    "Germany",
    "India",
    "Sweden",
    "Canada",
    "Japan",
    "Mexico",
    "Vladimir_Putin",
    "European_Union",
    "Hillary_Clinton",
];

impl Default for DriftParams {
    fn default() -> Self {
        DriftParams {
            threads: 400,
            max_depth: 6,
            dimension: 8,
            popular: POPULAR_ENTITIES.iter().map(|s| s.to_string()).collect(),
            bot_rate: 0.0,
            seed: 7,
        }
    }
}

/// Probability that a comment at `depth` moves to a never-seen topic.
pub fn drift_probability(depth: usize) -> f64 {
    (0.2 * (depth as f64 + 1.0)).min(1.0)
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub corpus: Corpus,
    pub sets: BTreeMap<String, EntitySet>,
    pub embeddings: EmbeddingTable,
}

impl SynthCorpus {
    /// `surface<TAB>entity<TAB>prior` lines covering every generated entity.
    pub fn gazetteer_lines(&self) -> Vec<String> {
        let mut entities: Vec<&EntityId> = self.sets.values().flat_map(|s| s.iter()).collect();
        entities.sort();
        entities.dedup();
        entities.into_iter().map(|e| format!("{}\t{}\t1.0", surface_of(e), e)).collect()
    }
}

pub fn surface_of(entity: &EntityId) -> String {
    entity.as_str().replace('_', " ").to_lowercase()
}

fn text_for(set: &EntitySet, rng: &mut ChaCha8Rng) -> String {
    const OPENERS: &[&str] = &["I think", "Honestly", "Not sure about", "What about", "Remember when", "So"];
    let opener = OPENERS.choose(rng).expect("non-empty");
    if set.is_empty() {
        return format!("{opener} this is going nowhere.");
    }
    let names: Vec<String> = set.iter().map(|e| e.as_str().replace('_', " ")).collect();
    format!("{opener} {} matters here.", names.join(" and "))
}

fn random_direction(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-3 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Threads whose topics drift away from a small popular pool with depth.
///
/// Roots draw from the popular pool (Zipf-weighted). A reply at depth `l`
/// introduces a fresh entity with probability [`drift_probability`]`(l)`,
/// otherwise it reuses one or two popular entities. Popular vectors sit near
/// the origin; a fresh entity introduced at depth `l` sits at radius
/// `4 + 2l`, so drifting further also moves further in embedding space.
pub fn drift_corpus(params: &DriftParams, label: &str) -> SynthCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let popular: Vec<EntityId> = params.popular.iter().map(|p| EntityId::new(p.as_str()).expect("valid id")).collect();
    let zipf: Vec<f64> = (0..popular.len()).map(|k| 1.0 / (k as f64 + 1.0)).collect();
    let mut embeddings = EmbeddingTable::new(params.dimension).expect("positive dimension");
    for e in &popular {
        let v: Vec<f64> = (0..params.dimension).map(|_| rng.gen_range(-0.5..0.5)).collect();
        embeddings.insert(e.clone(), v).expect("fresh id");
    }

    let pick_popular = |rng: &mut ChaCha8Rng| -> EntitySet {
        let size = if rng.gen_bool(0.6) { 1 } else { 2 };
        (0..size)
            .map(|_| {
                let idx = (0..popular.len()).collect::<Vec<_>>();
                let k = *idx.choose_weighted(rng, |&i| zipf[i]).expect("weights");
                popular[k].clone()
            })
            .collect()
    };

    let mut sets = BTreeMap::new();
    let mut threads = Vec::new();
    let mut fresh = 0usize;
    for t in 0..params.threads {
        let tid = format!("{label}{t:04}");
        let mut comments = Vec::new();
        let mut stack: Vec<(String, Option<String>, usize)> = vec![(tid.clone(), None, 0)];
        let mut next = 0usize;
        while let Some((id, parent, depth)) = stack.pop() {
            let set = if depth > 0 && rng.gen_bool(drift_probability(depth)) {
                let e = EntityId::new(format!("Topic_{fresh}")).expect("valid id");
                fresh += 1;
                let radius = 4.0 + 2.0 * depth as f64;
                let v = random_direction(&mut rng, params.dimension).into_iter().map(|x| x * radius).collect();
                embeddings.insert(e.clone(), v).expect("fresh id");
                EntitySet::from_iter([e])
            } else {
                pick_popular(&mut rng)
            };
            let author = if depth > 0 && rng.gen_bool(params.bot_rate) {
                "AutoModerator".to_string()
            } else {
                format!("user{}", rng.gen_range(0..500))
            };
            let created_at = 1_600_000_000 + 3600 * t as i64 + 30 * comments.len() as i64;
            comments.push(comment(&tid, id.clone(), parent.as_deref(), created_at, &author, text_for(&set, &mut rng)));
            sets.insert(id.clone(), set);
            if depth < params.max_depth {
                let children =
                    if depth == 0 { rng.gen_range(2..=4) } else { *[0usize, 1, 1, 2].choose(&mut rng).expect("non-empty") };
                for _ in 0..children {
                    next += 1;
                    stack.push((format!("{tid}_{next}"), Some(id.clone()), depth + 1));
                }
            }
        }
        threads.push(Thread::from_comments(tid, comments).expect("generated thread has a root"));
    }
    SynthCorpus { corpus: Corpus::new(label, threads).expect("unique thread ids"), sets, embeddings }
}

/// Write a corpus as Pushshift-style posts and comments, one JSON object per
/// line, in timestamp order.
pub fn write_reddit_jsonl<W: Write>(corpus: &Corpus, mut out: W) -> Result<()> {
    let mut records: Vec<(i64, String, serde_json::Value)> = Vec::new();
    for thread in corpus.threads() {
        let root = thread.root();
        records.push((
            root.created_at,
            root.id.clone(),
            json!({
                "id": root.id,
                "name": format!("t3_{}", root.id),
                "author": root.author,
                "title": root.text,
                "selftext": "",
                "subreddit": corpus.label(),
                "created_utc": root.created_at,
            }),
        ));
        for c in thread.replies() {
            let parent = c.parent_id.as_deref().expect("replies have parents");
            let parent = if parent == root.id { format!("t3_{parent}") } else { format!("t1_{parent}") };
            records.push((
                c.created_at,
                c.id.clone(),
                json!({
                    "id": c.id,
                    "parent_id": parent,
                    "link_id": format!("t3_{}", thread.id()),
                    "author": c.author,
                    "body": c.text,
                    "subreddit": corpus.label(),
                    "created_utc": c.created_at,
                }),
            ));
        }
    }
    records.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));
    for (_, _, rec) in records {
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
