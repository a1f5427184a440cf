//! Threaded-conversation ingestion.
//!
//! Dumps are parsed into [`Thread`] trees grouped into a [`Corpus`]. Two line
//! formats are accepted: Pushshift-style Reddit JSON lines (one submission or
//! comment per line) and a canonical format with one whole thread per line:
//!
//! ```text
//! {"thread_id":"t1","comments":[{"id":"t1","parent_id":null,"author":"a","text":"...","created_at":0}, ...]}
//! ```
//!
//! Grouping is by thread id and every collection is sorted by id, so the
//! resulting corpus does not depend on input line order.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::io::{BufRead, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{parameter, Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Comment {
    pub id: String,
    pub parent_id: Option<String>,
    pub thread_id: String,
    pub author: String,
    pub text: String,
    pub created_at: i64,
    pub is_root: bool,
}

/// One conversation: the root post and every reply reachable from it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Thread {
    id: String,
    root: Comment,
    /// Replies sorted by (depth, id).
    replies: Vec<Comment>,
    depth_of: BTreeMap<String, usize>,
    children: BTreeMap<String, Vec<String>>,
    /// Comments whose parent chain never reaches the root.
    orphans: Vec<Comment>,
}

impl Thread {
    /// Assemble a thread from an unordered bag of comments.
    ///
    /// The root is the parentless comment with the smallest `(created_at, id)`;
    /// additional parentless comments and anything not reachable from the root
    /// land in the orphan list. Returns `None` when no comment is parentless.
    pub fn from_comments(id: impl Into<String>, mut comments: Vec<Comment>) -> Option<Thread> {
        let id = id.into();
        comments.sort_by(|a, b| (&a.id, a.created_at, &a.author, &a.text).cmp(&(&b.id, b.created_at, &b.author, &b.text)));
        comments.dedup_by(|a, b| a.id == b.id);

        let root_idx = comments
            .iter()
            .enumerate()
            .filter(|(_, c)| c.parent_id.is_none())
            .min_by(|(_, a), (_, b)| (a.created_at, &a.id).cmp(&(b.created_at, &b.id)))
            .map(|(i, _)| i)?;
        let mut root = comments.swap_remove(root_idx);
        root.is_root = true;
        root.thread_id = id.clone();

        let mut by_parent: BTreeMap<String, Vec<Comment>> = BTreeMap::new();
        let mut orphans = Vec::new();
        for mut c in comments {
            c.thread_id = id.clone();
            c.is_root = false;
            match c.parent_id.clone() {
                Some(p) if p != c.id => by_parent.entry(p).or_default().push(c),
                _ => orphans.push(c),
            }
        }

        let mut depth_of = BTreeMap::new();
        let mut children: BTreeMap<String, Vec<String>> = BTreeMap::new();
        let mut replies = Vec::new();
        depth_of.insert(root.id.clone(), 0);
        let mut queue = VecDeque::from([(root.id.clone(), 0usize)]);
        while let Some((parent, depth)) = queue.pop_front() {
            let Some(mut kids) = by_parent.remove(&parent) else {
                continue;
            };
            kids.sort_by(|a, b| a.id.cmp(&b.id));
            for kid in kids {
                if depth_of.contains_key(&kid.id) {
                    orphans.push(kid);
                    continue;
                }
                depth_of.insert(kid.id.clone(), depth + 1);
                children.entry(parent.clone()).or_default().push(kid.id.clone());
                queue.push_back((kid.id.clone(), depth + 1));
                replies.push(kid);
            }
        }
        orphans.extend(by_parent.into_values().flatten());
        orphans.sort_by(|a, b| a.id.cmp(&b.id));
        replies.sort_by(|a, b| (depth_of[&a.id], &a.id).cmp(&(depth_of[&b.id], &b.id)));

        Some(Thread { id, root, replies, depth_of, children, orphans })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn root(&self) -> &Comment {
        &self.root
    }

    pub fn replies(&self) -> &[Comment] {
        &self.replies
    }

    pub fn orphans(&self) -> &[Comment] {
        &self.orphans
    }

    /// Root followed by every reply in (depth, id) order.
    pub fn comments(&self) -> impl Iterator<Item = &Comment> {
        std::iter::once(&self.root).chain(self.replies.iter())
    }

    /// Number of replies to the post; the post itself is not counted.
    pub fn comment_count(&self) -> usize {
        self.replies.len()
    }

    pub fn depth_of(&self, comment_id: &str) -> Option<usize> {
        self.depth_of.get(comment_id).copied()
    }

    pub fn children_of(&self, comment_id: &str) -> &[String] {
        self.children.get(comment_id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn max_depth(&self) -> usize {
        self.depth_of.values().copied().max().unwrap_or(0)
    }
}

/// A labelled collection of threads, sorted by thread id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    label: String,
    threads: Vec<Thread>,
}

impl Corpus {
    pub fn new(label: impl Into<String>, mut threads: Vec<Thread>) -> Result<Corpus> {
        threads.sort_by(|a, b| a.id.cmp(&b.id));
        if let Some(w) = threads.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(parameter("threads", format!("duplicate thread id {:?}", w[0].id)));
        }
        Ok(Corpus { label: label.into(), threads })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn threads(&self) -> &[Thread] {
        &self.threads
    }

    pub fn thread(&self, id: &str) -> Option<&Thread> {
        self.threads.binary_search_by(|t| t.id.as_str().cmp(id)).ok().map(|i| &self.threads[i])
    }

    pub fn len(&self) -> usize {
        self.threads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.threads.is_empty()
    }

    pub fn thread_ids(&self) -> Vec<String> {
        self.threads.iter().map(|t| t.id.clone()).collect()
    }

    /// Sub-corpus restricted to the given thread ids; unknown ids are ignored.
    pub fn subset<'a>(&self, ids: impl IntoIterator<Item = &'a String>) -> Corpus {
        let keep: BTreeSet<&String> = ids.into_iter().collect();
        Corpus { label: self.label.clone(), threads: self.threads.iter().filter(|t| keep.contains(&t.id)).cloned().collect() }
    }

    pub fn comment_total(&self) -> usize {
        self.threads.iter().map(|t| 1 + t.replies.len()).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DumpFormat {
    RedditJsonl,
    CanonicalJson,
}

impl FromStr for DumpFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reddit-jsonl" => Ok(DumpFormat::RedditJsonl),
            "canonical-json" => Ok(DumpFormat::CanonicalJson),
            other => Err(parameter("format", format!("unknown dump format {other:?}"))),
        }
    }
}

/// Counters collected while parsing a dump.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IngestReport {
    pub lines: usize,
    pub malformed: usize,
    pub duplicate_ids: usize,
    pub orphans: usize,
    pub rootless_threads: usize,
}

#[derive(Deserialize)]
struct CanonicalThread {
    thread_id: String,
    comments: Vec<CanonicalComment>,
}

#[derive(Serialize, Deserialize)]
struct CanonicalComment {
    id: String,
    parent_id: Option<String>,
    author: String,
    text: String,
    created_at: i64,
}

/// Parse a line-delimited dump into a corpus.
///
/// Malformed lines are skipped and counted. Comments whose parent never
/// appears are kept in their thread's orphan list. Threads without a root
/// post are dropped; if nothing survives the result is [`Error::EmptyCorpus`].
pub fn parse_dump<R: BufRead>(reader: R, format: DumpFormat, label: &str) -> Result<(Corpus, IngestReport)> {
    let mut raw = Vec::new();
    for line in reader.split(b'\n') {
        raw.push(line?);
    }

    let parsed: Vec<Option<Vec<Comment>>> = raw
        .par_iter()
        .map(|bytes| {
            let line = std::str::from_utf8(bytes).ok()?.trim();
            if line.is_empty() {
                return Some(Vec::new());
            }
            match format {
                DumpFormat::RedditJsonl => parse_reddit_record(line).map(|c| vec![c]),
                DumpFormat::CanonicalJson => parse_canonical_record(line),
            }
        })
        .collect();

    let mut report = IngestReport::default();
    let mut grouped: BTreeMap<String, Vec<Comment>> = BTreeMap::new();
    for (bytes, record) in raw.iter().zip(parsed) {
        if bytes.iter().all(u8::is_ascii_whitespace) {
            continue;
        }
        report.lines += 1;
        match record {
            Some(comments) => {
                for c in comments {
                    grouped.entry(c.thread_id.clone()).or_default().push(c);
                }
            }
            None => {
                report.malformed += 1;
                log::warn!("skipping malformed record on line {}", report.lines);
            }
        }
    }

    let mut threads = Vec::with_capacity(grouped.len());
    for (thread_id, comments) in grouped {
        let distinct: BTreeSet<&str> = comments.iter().map(|c| c.id.as_str()).collect();
        report.duplicate_ids += comments.len() - distinct.len();
        match Thread::from_comments(thread_id, comments) {
            Some(thread) => {
                report.orphans += thread.orphans.len();
                threads.push(thread);
            }
            None => report.rootless_threads += 1,
        }
    }
    if threads.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok((Corpus::new(label, threads)?, report))
}

fn strip_fullname(id: &str) -> &str {
    match id.split_once('_') {
        Some((prefix, rest)) if prefix.len() == 2 && prefix.starts_with('t') && !rest.is_empty() => rest,
        _ => id,
    }
}

fn json_str<'a>(v: &'a Value, key: &str) -> Option<&'a str> {
    v.get(key).and_then(Value::as_str)
}

fn json_time(v: &Value) -> Option<i64> {
    let t = v.get("created_utc").or_else(|| v.get("created_at"))?;
    match t {
        Value::Number(n) => n.as_i64().or_else(|| n.as_f64().map(|f| f as i64)),
        Value::String(s) => s.parse::<i64>().ok().or_else(|| s.parse::<f64>().ok().map(|f| f as i64)),
        _ => None,
    }
}

fn parse_reddit_record(line: &str) -> Option<Comment> {
    let v: Value = serde_json::from_str(line).ok()?;
    let id = strip_fullname(json_str(&v, "id")?).to_string();
    if id.is_empty() {
        return None;
    }
    let author = json_str(&v, "author").unwrap_or("[deleted]").to_string();
    let created_at = json_time(&v).unwrap_or(0);
    let parent = json_str(&v, "parent_id").map(strip_fullname).filter(|p| *p != id);

    match parent {
        None => {
            let text = json_str(&v, "title").or_else(|| json_str(&v, "body"))?.to_string();
            Some(Comment { thread_id: id.clone(), id, parent_id: None, author, text, created_at, is_root: true })
        }
        Some(parent) => {
            let thread_id = strip_fullname(json_str(&v, "link_id")?).to_string();
            let text = json_str(&v, "body").unwrap_or_default().to_string();
            Some(Comment { id, parent_id: Some(parent.to_string()), thread_id, author, text, created_at, is_root: false })
        }
    }
}

fn parse_canonical_record(line: &str) -> Option<Vec<Comment>> {
    let t: CanonicalThread = serde_json::from_str(line).ok()?;
    if t.thread_id.is_empty() {
        return None;
    }
    Some(
        t.comments
            .into_iter()
            .map(|c| Comment {
                is_root: c.parent_id.is_none(),
                id: c.id,
                parent_id: c.parent_id,
                thread_id: t.thread_id.clone(),
                author: c.author,
                text: c.text,
                created_at: c.created_at,
            })
            .collect(),
    )
}

/// Write the corpus in the canonical one-thread-per-line format. Orphans are
/// not written.
pub fn write_canonical<W: Write>(corpus: &Corpus, mut out: W) -> Result<()> {
    #[derive(Serialize)]
    struct Line<'a> {
        thread_id: &'a str,
        comments: Vec<CanonicalComment>,
    }
    for thread in &corpus.threads {
        let comments = thread
            .comments()
            .map(|c| CanonicalComment {
                id: c.id.clone(),
                parent_id: c.parent_id.clone(),
                author: c.author.clone(),
                text: c.text.clone(),
                created_at: c.created_at,
            })
            .collect();
        serde_json::to_writer(&mut out, &Line { thread_id: &thread.id, comments })?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Keep the `ceil(fraction * N)` threads with the most comments. Ties are
/// broken by ascending thread id.
pub fn filter_top_fraction(corpus: &Corpus, fraction: f64) -> Result<Corpus> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(parameter("fraction", format!("{fraction} is outside (0, 1]")));
    }
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let keep = top_count(corpus.len(), fraction);
    let mut ranked: Vec<&Thread> = corpus.threads.iter().collect();
    ranked.sort_by(|a, b| b.comment_count().cmp(&a.comment_count()).then_with(|| a.id.cmp(&b.id)));
    let threads = ranked.into_iter().take(keep).cloned().collect();
    Corpus::new(corpus.label.clone(), threads)
}

/// `ceil(fraction * n)`, tolerant of binary rounding in the product
/// (0.7 * 10 must give 7, not 8).
fn top_count(n: usize, fraction: f64) -> usize {
    let exact = fraction * n as f64;
    let rounded = exact.round();
    let count = if (exact - rounded).abs() <= 1e-9 * exact.max(1.0) { rounded } else { exact.ceil() };
    (count as usize).clamp(1, n)
}

/// Parse a newline-delimited bot list. Blank lines and `#` comments are
/// skipped; names are case-folded since Reddit usernames are case-insensitive.
pub fn load_botlist<R: BufRead>(reader: R) -> Result<BTreeSet<String>> {
    let mut bots = BTreeSet::new();
    for line in reader.lines() {
        let line = line?;
        let name = line.trim();
        if !name.is_empty() && !name.starts_with('#') {
            bots.insert(name.to_lowercase());
        }
    }
    Ok(bots)
}

/// Remove every comment written by a listed author together with its whole
/// reply subtree. A thread whose root is bot-authored is dropped.
pub fn filter_bots(corpus: &Corpus, botlist: &BTreeSet<String>) -> Corpus {
    if botlist.is_empty() {
        return corpus.clone();
    }
    let is_bot = |c: &Comment| botlist.contains(&c.author.to_lowercase()) || botlist.contains(&c.author);
    let threads = corpus
        .threads
        .iter()
        .filter(|t| !is_bot(&t.root))
        .filter_map(|t| {
            let mut kept: BTreeSet<&str> = BTreeSet::from([t.root.id.as_str()]);
            for c in &t.replies {
                // Replies are in depth order, so the parent's verdict is known.
                let parent = c.parent_id.as_deref().unwrap_or_default();
                if kept.contains(parent) && !is_bot(c) {
                    kept.insert(&c.id);
                }
            }
            let comments = t.comments().filter(|c| kept.contains(c.id.as_str())).cloned().collect();
            let mut thread = Thread::from_comments(t.id.clone(), comments)?;
            thread.orphans = t.orphans.iter().filter(|c| !is_bot(c)).cloned().collect();
            Some(thread)
        })
        .collect();
    Corpus { label: corpus.label.clone(), threads }
}
