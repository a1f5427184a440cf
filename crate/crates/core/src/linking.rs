//! Entity linking: mention detection against a gazetteer, plus an adapter for
//! annotations produced by any external linker.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, Write};

use serde::Serialize;
use serde_json::Value;

use crate::corpus::Corpus;
use crate::entity::{EntityId, EntitySet};
use crate::error::{Error, Result};

/// Default minimum prior for a gazetteer match. Favors precision over recall.
pub const DEFAULT_MIN_PRIOR: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mention {
    /// Byte offsets `[start, end)` into the comment text.
    pub start: usize,
    pub end: usize,
    pub surface: String,
    pub entity: EntityId,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq)]
struct Candidate {
    entity: EntityId,
    prior: f64,
}

/// Surface form → candidate entities with prior probabilities.
///
/// Surfaces are stored as their case-folded token sequence, so `"New York"`,
/// `"new  york"` and `"NEW-YORK"` are the same key.
#[derive(Debug, Clone, Default)]
pub struct Gazetteer {
    surfaces: HashMap<String, Vec<Candidate>>,
    max_tokens: usize,
}

impl Gazetteer {
    pub fn new() -> Gazetteer {
        Gazetteer::default()
    }

    pub fn insert(&mut self, surface: &str, entity: EntityId, prior: f64) -> Result<()> {
        let key = normalize_surface(surface);
        let reason = if key.is_empty() {
            Some("surface has no word characters".to_string())
        } else if !(0.0..=1.0).contains(&prior) {
            Some(format!("prior {prior} outside [0, 1]"))
        } else {
            None
        };
        if let Some(reason) = reason {
            return Err(Error::Gazetteer { line: 0, reason });
        }
        let candidates = self.surfaces.entry(key.clone()).or_default();
        if candidates.iter().any(|c| c.entity == entity) {
            return Err(Error::Gazetteer { line: 0, reason: format!("duplicate entry {key:?} -> {entity}") });
        }
        let total: f64 = candidates.iter().map(|c| c.prior).sum::<f64>() + prior;
        if total > 1.0 + 1e-9 {
            return Err(Error::Gazetteer { line: 0, reason: format!("priors for {key:?} sum to {total}") });
        }
        candidates.push(Candidate { entity, prior });
        candidates.sort_by(|a, b| b.prior.total_cmp(&a.prior).then_with(|| a.entity.cmp(&b.entity)));
        self.max_tokens = self.max_tokens.max(key.split(' ').count());
        Ok(())
    }

    /// Load `surface<TAB>entity_id<TAB>prior` lines. Blank lines and lines
    /// starting with `#` are ignored.
    pub fn load<R: BufRead>(reader: R) -> Result<Gazetteer> {
        let mut gaz = Gazetteer::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = i + 1;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let err = |reason: String| Error::Gazetteer { line: lineno, reason };
            let [surface, entity, prior] = fields[..] else {
                return Err(err(format!("expected 3 tab-separated fields, found {}", fields.len())));
            };
            let entity = EntityId::new(entity.trim()).map_err(|e| err(e.to_string()))?;
            let prior: f64 = prior.trim().parse().map_err(|_| err(format!("bad prior {prior:?}")))?;
            gaz.insert(surface, entity, prior).map_err(|e| match e {
                Error::Gazetteer { reason, .. } => err(reason),
                other => other,
            })?;
        }
        Ok(gaz)
    }

    pub fn len(&self) -> usize {
        self.surfaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.surfaces.is_empty()
    }

    fn best(&self, key: &str) -> Option<&Candidate> {
        self.surfaces.get(key).and_then(|c| c.first())
    }
}

/// Word tokens as byte spans: maximal runs of alphanumeric characters.
fn tokens(text: &str) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in text.char_indices() {
        match (ch.is_alphanumeric(), start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push((s, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s, text.len()));
    }
    out
}

fn normalize_surface(surface: &str) -> String {
    let words: Vec<String> = tokens(surface).into_iter().map(|(s, e)| surface[s..e].to_lowercase()).collect();
    words.join(" ")
}

/// Greedy longest-match-first linking, left to right over the case-folded
/// token sequence. A surface whose best prior is below `min_prior` does not
/// match, and shorter surfaces at the same position are tried instead.
pub fn link_text(text: &str, gazetteer: &Gazetteer, min_prior: f64) -> Vec<Mention> {
    let spans = tokens(text);
    let folded: Vec<String> = spans.iter().map(|&(s, e)| text[s..e].to_lowercase()).collect();
    let mut mentions = Vec::new();
    let mut i = 0;
    while i < spans.len() {
        let longest = gazetteer.max_tokens.min(spans.len() - i);
        let hit = (1..=longest).rev().find_map(|len| {
            let key = folded[i..i + len].join(" ");
            gazetteer.best(&key).filter(|c| c.prior >= min_prior).map(|c| (len, c))
        });
        match hit {
            Some((len, cand)) => {
                let (start, end) = (spans[i].0, spans[i + len - 1].1);
                mentions.push(Mention {
                    start,
                    end,
                    surface: text[start..end].to_string(),
                    entity: cand.entity.clone(),
                    confidence: cand.prior,
                });
                i += len;
            }
            None => i += 1,
        }
    }
    mentions
}

pub fn to_entity_set<'a>(mentions: impl IntoIterator<Item = &'a Mention>) -> EntitySet {
    mentions.into_iter().map(|m| m.entity.clone()).collect()
}

/// Link every comment (including the root post) of every thread.
pub fn link_corpus(corpus: &Corpus, gazetteer: &Gazetteer, min_prior: f64) -> BTreeMap<String, EntitySet> {
    use rayon::prelude::*;
    corpus
        .threads()
        .par_iter()
        .flat_map_iter(|t| {
            t.comments().map(|c| (c.id.clone(), to_entity_set(&link_text(&c.text, gazetteer, min_prior)))).collect::<Vec<_>>()
        })
        .collect()
}

/// Entity sets keyed by comment id, as supplied by an external linker.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Annotations {
    pub sets: BTreeMap<String, EntitySet>,
    /// Comment ids that are not part of the reference corpus.
    pub unknown: BTreeSet<String>,
    /// Records dropped for being malformed.
    pub skipped: usize,
}

/// Read line-delimited `{"comment_id": ..., "entities": [...]}` records.
///
/// Repeated records for one comment are unioned. A record with any invalid
/// entity id is skipped. When `known` is given, ids outside it are kept but
/// listed in [`Annotations::unknown`].
pub fn load_prelinked<R: BufRead>(reader: R, known: Option<&BTreeSet<String>>) -> Result<Annotations> {
    let mut out = Annotations::default();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str::<Value>(&line).ok().and_then(|v| {
            let id = v.get("comment_id")?.as_str()?.to_string();
            let entities = v
                .get("entities")?
                .as_array()?
                .iter()
                .map(|e| e.as_str().and_then(|s| EntityId::new(s).ok()))
                .collect::<Option<EntitySet>>()?;
            Some((id, entities))
        });
        let Some((id, entities)) = record else {
            log::warn!("skipping malformed annotation on line {}", i + 1);
            out.skipped += 1;
            continue;
        };
        if known.is_some_and(|k| !k.contains(&id)) {
            out.unknown.insert(id.clone());
        }
        let merged = match out.sets.remove(&id) {
            Some(prev) => prev.union(&entities),
            None => entities,
        };
        out.sets.insert(id, merged);
    }
    Ok(out)
}

pub fn write_annotations<W: Write>(sets: &BTreeMap<String, EntitySet>, mut out: W) -> Result<()> {
    #[derive(Serialize)]
    struct Record<'a> {
        comment_id: &'a str,
        entities: &'a EntitySet,
    }
    for (id, entities) in sets {
        serde_json::to_writer(&mut out, &Record { comment_id: id, entities })?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
