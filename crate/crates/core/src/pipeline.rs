//! Corpus-to-graph glue shared by the CLI and the tests.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::entity::EntitySet;
use crate::error::{Error, Result};
use crate::graph::{build_graph, star_expand, EntityGraph};
use crate::predict::ThreadPaths;
use crate::tree::{build_entity_tree, extract_paths, ConversationPath};

pub const PATHS_FORMAT_VERSION: u32 = 1;

/// Retained conversation paths of every thread. Threads without a retained
/// path map to an empty list so fold splits still see them.
pub fn thread_paths(corpus: &Corpus, sets: &BTreeMap<String, EntitySet>, min_len: usize) -> ThreadPaths {
    corpus
        .threads()
        .par_iter()
        .map(|t| {
            let tree = build_entity_tree(t, sets);
            (t.id().to_string(), extract_paths(&tree, min_len))
        })
        .collect()
}

/// Paths and the star-expanded graph of one corpus.
pub fn corpus_graph(corpus: &Corpus, sets: &BTreeMap<String, EntitySet>, min_len: usize) -> Result<(ThreadPaths, EntityGraph)> {
    let paths = thread_paths(corpus, sets, min_len);
    let graph = star_expand(&build_graph(&paths, corpus.label()))?;
    Ok((paths, graph))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathsFile {
    pub version: u32,
    pub label: String,
    pub min_path_len: usize,
    /// Thread id to paths, each path a list of `|`-joined entity sets.
    pub threads: BTreeMap<String, Vec<Vec<String>>>,
}

impl PathsFile {
    pub fn new(label: &str, min_path_len: usize, paths: &ThreadPaths) -> PathsFile {
        let threads = paths
            .iter()
            .map(|(id, ps)| (id.clone(), ps.iter().map(|p| p.steps.iter().map(EntitySet::key).collect()).collect()))
            .collect();
        PathsFile { version: PATHS_FORMAT_VERSION, label: label.to_string(), min_path_len, threads }
    }

    pub fn paths(&self) -> Result<ThreadPaths> {
        self.threads
            .iter()
            .map(|(id, ps)| {
                let ps = ps
                    .iter()
                    .map(|steps| {
                        if steps.len() < self.min_path_len.max(1) {
                            return Err(Error::Schema(format!("thread {id} has a path shorter than {}", self.min_path_len)));
                        }
                        let steps = steps.iter().map(|k| EntitySet::from_key(k)).collect::<Result<Vec<_>>>()?;
                        if steps.iter().any(EntitySet::is_empty) {
                            return Err(Error::Schema(format!("thread {id} has an empty entity set")));
                        }
                        Ok(ConversationPath::new(steps))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok((id.clone(), ps))
            })
            .collect()
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer(out, self)?;
        Ok(())
    }

    pub fn read_json<R: Read>(input: R) -> Result<PathsFile> {
        let file: PathsFile = serde_json::from_reader(input)?;
        if file.version != PATHS_FORMAT_VERSION {
            return Err(Error::Schema(format!("unsupported paths version {}", file.version)));
        }
        file.paths()?;
        Ok(file)
    }
}
