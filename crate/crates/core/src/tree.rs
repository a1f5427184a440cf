use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::Thread;
use crate::entity::EntitySet;

/// Minimum node count for a conversation path to be kept.
pub const DEFAULT_MIN_PATH_LEN: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeNode {
    pub set: EntitySet,
    pub depth: usize,
    pub parent: Option<String>,
}

/// A comment thread with every comment replaced by its entity set.
///
/// Only comments with a non-empty set whose ancestors all have non-empty sets
/// are present: an empty set cuts off its whole branch.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EntityTree {
    root: Option<String>,
    nodes: BTreeMap<String, TreeNode>,
    children: BTreeMap<String, Vec<String>>,
}

impl EntityTree {
    pub fn root(&self) -> Option<&str> {
        self.root.as_deref()
    }

    pub fn node(&self, id: &str) -> Option<&TreeNode> {
        self.nodes.get(id)
    }

    pub fn nodes(&self) -> &BTreeMap<String, TreeNode> {
        &self.nodes
    }

    pub fn children_of(&self, id: &str) -> &[String] {
        self.children.get(id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Parent→child pairs, sorted.
    pub fn edges(&self) -> Vec<(&str, &str)> {
        self.children.iter().flat_map(|(p, kids)| kids.iter().map(move |k| (p.as_str(), k.as_str()))).collect()
    }
}

/// Root-to-leaf sequence of entity sets; step `i` sits at depth `i`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ConversationPath {
    pub steps: Vec<EntitySet>,
}

impl ConversationPath {
    pub fn new(steps: Vec<EntitySet>) -> ConversationPath {
        ConversationPath { steps }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// `(depth, from, to)` for every consecutive pair of steps.
    pub fn transitions(&self) -> impl Iterator<Item = (usize, &EntitySet, &EntitySet)> {
        self.steps.windows(2).enumerate().map(|(d, w)| (d, &w[0], &w[1]))
    }
}

/// Replace each comment of `thread` by its entity set. Comments missing from
/// `entity_sets` count as empty.
pub fn build_entity_tree(thread: &Thread, entity_sets: &BTreeMap<String, EntitySet>) -> EntityTree {
    let mut tree = EntityTree::default();
    let root = thread.root();
    let Some(root_set) = entity_sets.get(&root.id).filter(|s| !s.is_empty()) else {
        return tree;
    };
    tree.root = Some(root.id.clone());
    tree.nodes.insert(root.id.clone(), TreeNode { set: root_set.clone(), depth: 0, parent: None });
    let mut stack = vec![root.id.clone()];
    while let Some(id) = stack.pop() {
        let depth = tree.nodes[&id].depth;
        for kid in thread.children_of(&id) {
            let Some(set) = entity_sets.get(kid).filter(|s| !s.is_empty()) else {
                continue;
            };
            tree.nodes.insert(kid.clone(), TreeNode { set: set.clone(), depth: depth + 1, parent: Some(id.clone()) });
            tree.children.entry(id.clone()).or_default().push(kid.clone());
            stack.push(kid.clone());
        }
    }
    tree
}

/// One path per root-to-leaf route, in depth-first order over child ids.
/// Paths with fewer than `min_len` nodes are dropped.
pub fn extract_paths(tree: &EntityTree, min_len: usize) -> Vec<ConversationPath> {
    let mut paths = Vec::new();
    let Some(root) = tree.root.as_deref() else {
        return paths;
    };
    let mut prefix = Vec::new();
    walk(tree, root, &mut prefix, min_len, &mut paths);
    paths
}

fn walk(tree: &EntityTree, id: &str, prefix: &mut Vec<EntitySet>, min_len: usize, out: &mut Vec<ConversationPath>) {
    prefix.push(tree.nodes[id].set.clone());
    let kids = tree.children_of(id);
    if kids.is_empty() {
        if prefix.len() >= min_len {
            out.push(ConversationPath::new(prefix.clone()));
        }
    } else {
        for kid in kids {
            walk(tree, kid, prefix, min_len, out);
        }
    }
    prefix.pop();
}
