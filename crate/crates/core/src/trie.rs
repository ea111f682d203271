//! Downward-closed set trie.

use std::collections::BTreeMap;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
struct Node {
    children: BTreeMap<u64, Node>,
}

/// Stores a hereditary family as a trie over increasing element sequences.
/// Every inserted set is closed downward, so a sorted sequence is a member
/// exactly when its path exists.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SetTrie {
    root: Option<Node>,
    members: usize,
}

impl SetTrie {
    /// The empty family (not even `∅` is a member).
    pub fn new() -> Self {
        SetTrie::default()
    }

    pub fn is_empty(&self) -> bool {
        self.root.is_none()
    }

    /// Number of members, `∅` included.
    pub fn len(&self) -> usize {
        self.members
    }

    /// Inserts `set` and all of its subsets.
    pub fn insert_closed(&mut self, set: &[u64]) {
        let mut sorted = set.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if self.root.is_none() {
            self.root = Some(Node::default());
            self.members = 1;
        }
        let root = self.root.as_mut().expect("initialised");
        self.members += insert_subsets(root, &sorted);
    }

    pub fn contains(&self, set: &[u64]) -> bool {
        let Some(mut node) = self.root.as_ref() else {
            return false;
        };
        let mut sorted = set.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        for x in sorted {
            match node.children.get(&x) {
                Some(next) => node = next,
                None => return false,
            }
        }
        true
    }

    /// All members in lexicographic order of their sorted sequences.
    pub fn members(&self) -> Vec<Vec<u64>> {
        let mut out = Vec::new();
        if let Some(root) = &self.root {
            let mut path = Vec::new();
            collect(root, &mut path, &mut out);
        }
        out
    }

    /// Members that are not a proper subset of another member.
    pub fn maximal_members(&self) -> Vec<Vec<u64>> {
        let all = self.members();
        all.iter()
            .filter(|m| {
                !all.iter()
                    .any(|o| o.len() > m.len() && m.iter().all(|x| o.binary_search(x).is_ok()))
            })
            .cloned()
            .collect()
    }
}

/// Adds every nonempty subset of `rest` below `node` (paths are increasing
/// sequences); returns the number of new nodes.
fn insert_subsets(node: &mut Node, rest: &[u64]) -> usize {
    let mut added = 0;
    for (i, &x) in rest.iter().enumerate() {
        let child = node.children.entry(x).or_insert_with(|| {
            added += 1;
            Node::default()
        });
        added += insert_subsets(child, &rest[i + 1..]);
    }
    added
}

fn collect(node: &Node, path: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
    out.push(path.clone());
    for (&x, child) in &node.children {
        path.push(x);
        collect(child, path, out);
        path.pop();
    }
}
