use std::borrow::Borrow;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};

/// Canonical knowledge-base page identifier in underscored form, such as
/// `Donald_Trump`.
///
/// Must be non-empty and contain no whitespace. `|` is also rejected since it
/// separates members in serialized vertex ids (it is not a legal character in
/// Wikipedia titles either).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct EntityId(String);

impl EntityId {
    pub fn new(id: impl Into<String>) -> Result<EntityId> {
        let id = id.into();
        if id.is_empty() || id.chars().any(|c| c.is_whitespace() || c == '|') {
            return Err(Error::InvalidEntityId(id));
        }
        Ok(EntityId(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Borrow<str> for EntityId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl<'de> Deserialize<'de> for EntityId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        EntityId::new(s).map_err(serde::de::Error::custom)
    }
}

/// The deduplicated entities linked in one comment, kept sorted.
///
/// Ordering between sets is lexicographic over the sorted members.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct EntitySet(Vec<EntityId>);

impl EntitySet {
    pub fn new() -> EntitySet {
        EntitySet(Vec::new())
    }

    pub fn contains(&self, entity: &str) -> bool {
        self.0.binary_search_by(|e| e.as_str().cmp(entity)).is_ok()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, EntityId> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn intersects(&self, other: &EntitySet) -> bool {
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].cmp(&other.0[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return true,
            }
        }
        false
    }

    pub fn union(&self, other: &EntitySet) -> EntitySet {
        self.iter().chain(other.iter()).cloned().collect()
    }

    /// Members joined by `|`, the form used inside vertex ids.
    pub fn key(&self) -> String {
        let parts: Vec<&str> = self.0.iter().map(EntityId::as_str).collect();
        parts.join("|")
    }

    /// Parse the `|`-joined form produced by [`EntitySet::key`].
    pub fn from_key(key: &str) -> Result<EntitySet> {
        key.split('|').map(EntityId::new).collect()
    }
}

impl FromIterator<EntityId> for EntitySet {
    fn from_iter<I: IntoIterator<Item = EntityId>>(iter: I) -> Self {
        let mut v: Vec<EntityId> = iter.into_iter().collect();
        v.sort();
        v.dedup();
        EntitySet(v)
    }
}

impl<'a> IntoIterator for &'a EntitySet {
    type Item = &'a EntityId;
    type IntoIter = std::slice::Iter<'a, EntityId>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl fmt::Display for EntitySet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str(e.as_str())?;
        }
        f.write_str("}")
    }
}

impl<'de> Deserialize<'de> for EntitySet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let ids = Vec::<EntityId>::deserialize(d)?;
        Ok(ids.into_iter().collect())
    }
}

/// Build an entity set from string ids, panicking on invalid ids. Intended for
/// fixtures and tests.
#[macro_export]
macro_rules! entity_set {
    ($($e:expr),* $(,)?) => {
        [$($e),*]
            .into_iter()
            .map(|s: &str| $crate::EntityId::new(s).expect("valid entity id"))
            .collect::<$crate::EntitySet>()
    };
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entity_id_validation() {
        assert!(EntityId::new("Donald_Trump").is_ok());
        for bad in ["", "Donald Trump", "a\tb", "a|b"] {
            assert!(EntityId::new(bad).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn sets_are_sorted_and_deduplicated() {
        let s = entity_set!["Donald_Trump", "Donald_Trump", "China"];
        assert_eq!(s.key(), "China|Donald_Trump");
        assert_eq!(s.len(), 2);
        assert!(s.contains("China"));
        assert!(!s.contains("Chin"));
        assert_eq!(s, entity_set!["China", "Donald_Trump"]);
    }

    #[test]
    fn key_round_trip_and_ordering() {
        let s = entity_set!["B", "A", "C"];
        assert_eq!(EntitySet::from_key(&s.key()).unwrap(), s);
        assert!(entity_set!["A"] < entity_set!["A", "B"]);
        assert!(entity_set!["A", "Z"] < entity_set!["B"]);
    }

    #[test]
    fn intersection_test() {
        assert!(entity_set!["A", "C"].intersects(&entity_set!["B", "C"]));
        assert!(!entity_set!["A"].intersects(&entity_set!["B"]));
        assert!(!EntitySet::new().intersects(&entity_set!["A"]));
    }

    #[test]
    fn deserialize_normalizes() {
        let s: EntitySet = serde_json::from_str(r#"["B","A","B"]"#).unwrap();
        assert_eq!(s, entity_set!["A", "B"]);
        assert!(serde_json::from_str::<EntitySet>(r#"["has space"]"#).is_err());
    }
}
