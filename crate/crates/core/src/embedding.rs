use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use crate::entity::EntityId;
use crate::error::{Error, Result};

/// Entity vectors of one shared dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dimension: usize,
    vectors: BTreeMap<EntityId, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(dimension: usize) -> Result<EmbeddingTable> {
        if dimension == 0 {
            return Err(Error::Embedding { line: 0, reason: "dimension must be positive".into() });
        }
        Ok(EmbeddingTable { dimension, vectors: BTreeMap::new() })
    }

    pub fn insert(&mut self, entity: EntityId, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dimension {
            return Err(Error::Embedding {
                line: 0,
                reason: format!("{entity}: dimension {} != {}", vector.len(), self.dimension),
            });
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::Embedding { line: 0, reason: format!("{entity}: non-finite component") });
        }
        self.vectors.insert(entity, vector);
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn get(&self, entity: &str) -> Option<&[f64]> {
        self.vectors.get(entity).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        for (id, v) in &self.vectors {
            write!(out, "{id}")?;
            for x in v {
                write!(out, " {x}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Parse whitespace-delimited `entity_id v1 ... vd` lines.
///
/// Returns the table and the subset of `expected` that has no vector.
/// Mixed dimensions, unparsable or non-finite components and repeated ids are
/// hard errors.
pub fn load_embeddings<R: BufRead>(reader: R, expected: &BTreeSet<EntityId>) -> Result<(EmbeddingTable, BTreeSet<EntityId>)> {
    let mut table: Option<EmbeddingTable> = None;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let err = |reason: String| Error::Embedding { line: lineno, reason };
        let mut fields = line.split_whitespace();
        let Some(id) = fields.next() else { continue };
        let id = EntityId::new(id).map_err(|e| err(e.to_string()))?;
        let vector =
            fields.map(|f| f.parse::<f64>().map_err(|_| err(format!("bad component {f:?}")))).collect::<Result<Vec<f64>>>()?;
        if vector.is_empty() {
            return Err(err(format!("{id} has no components")));
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(err(format!("{id} has a non-finite component")));
        }
        let table = table.get_or_insert_with(|| EmbeddingTable { dimension: vector.len(), vectors: BTreeMap::new() });
        if vector.len() != table.dimension {
            return Err(err(format!("dimension {} differs from {}", vector.len(), table.dimension)));
        }
        if table.vectors.insert(id.clone(), vector).is_some() {
            return Err(err(format!("duplicate vector for {id}")));
        }
    }
    let table = table.ok_or_else(|| Error::Embedding { line: 0, reason: "no vectors".into() })?;
    let missing = expected.iter().filter(|e| !table.vectors.contains_key(*e)).cloned().collect();
    Ok((table, missing))
}
