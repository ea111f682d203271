//! The Schreier family, the dyadic tree and the family 𝒟 of finite sets of
//! cube elements whose divergence nodes form a Schreier set.
//!
//! Tree nodes are finite 0/1 words of length at most 62 and leaves are words
//! of a fixed width `1..=63`, both packed into a `u64` with the first bit most
//! significant. Nodes are numbered breadth first: the root is 1, `(0)` is 2,
//! `(1)` is 3, `(0,0)` is 4 and so on, i.e. `index = 2^len + value`.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub const MAX_WIDTH: u8 = 63;

/// `S = ∅` or `|S| ≤ min S`. Duplicates are ignored.
pub fn schreier_contains(set: &[u64]) -> bool {
    let distinct: BTreeSet<u64> = set.iter().copied().collect();
    match distinct.first() {
        None => true,
        Some(&min) => distinct.len() as u64 <= min,
    }
}

/// The last `⌈|H|/2⌉` elements of `H` in increasing order.
pub fn schreier_extract(h: &[u64]) -> Vec<u64> {
    let sorted: Vec<u64> = h.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let keep = sorted.len().div_ceil(2);
    sorted[sorted.len() - keep..].to_vec()
}

/// A largest Schreier subset of `H`: the best run `h_i, h_{i+1}, …` of
/// length `min(h_i, |{h ≥ h_i}|)`.
pub fn schreier_max_subset(h: &[u64]) -> Vec<u64> {
    let sorted: Vec<u64> = h.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let mut best = (0usize, 0usize);
    for (i, &x) in sorted.iter().enumerate() {
        let len = (sorted.len() - i).min(usize::try_from(x).unwrap_or(usize::MAX));
        if len > best.1 {
            best = (i, len);
        }
    }
    sorted[best.0..best.0 + best.1].to_vec()
}

/// A node of the dyadic tree.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct TreeNode {
    len: u8,
    bits: u64,
}

impl TreeNode {
    pub const ROOT: TreeNode = TreeNode { len: 0, bits: 0 };

    pub fn new(len: u8, bits: u64) -> Result<Self> {
        if len >= MAX_WIDTH {
            return Err(Error::InvalidArgument(format!(
                "tree node length {len} exceeds {}",
                MAX_WIDTH - 1
            )));
        }
        if len < 64 && bits >> len != 0 {
            return Err(Error::InvalidArgument(format!(
                "value {bits} does not fit in {len} bits"
            )));
        }
        Ok(TreeNode { len, bits })
    }

    /// Depth in the tree; the root has length 0.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_root(&self) -> bool {
        self.len == 0
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    /// 1-based bit `k`.
    pub fn bit(&self, k: usize) -> u8 {
        ((self.bits >> (self.len as usize - k)) & 1) as u8
    }

    pub fn child(&self, c: u8) -> TreeNode {
        TreeNode {
            len: self.len + 1,
            bits: (self.bits << 1) | u64::from(c & 1),
        }
    }

    /// Initial segment of length `n ≤ len`.
    pub fn prefix(&self, n: usize) -> TreeNode {
        TreeNode {
            len: n as u8,
            bits: self.bits >> (self.len as usize - n),
        }
    }

    /// `self ⪯ other` in the tree order.
    pub fn is_prefix_of(&self, other: &TreeNode) -> bool {
        self.len <= other.len && other.prefix(self.len()) == *self
    }

    /// Longest common prefix.
    pub fn meet(&self, other: &TreeNode) -> TreeNode {
        let n = self.len.min(other.len) as usize;
        let (a, b) = (self.prefix(n).bits, other.prefix(n).bits);
        let diff = a ^ b;
        let common = if diff == 0 {
            n
        } else {
            n - (64 - diff.leading_zeros() as usize)
        };
        self.prefix(common)
    }

    /// Breadth-first index, starting at 1 for the root.
    pub fn bfs_index(&self) -> u64 {
        (1u64 << self.len) + self.bits
    }

    pub fn from_bfs_index(index: u64) -> Result<Self> {
        if index == 0 {
            return Err(Error::InvalidArgument("tree indices start at 1".into()));
        }
        let len = 63 - index.leading_zeros() as u8;
        TreeNode::new(len, index - (1u64 << len))
    }
}

impl Ord for TreeNode {
    /// Breadth-first order.
    fn cmp(&self, other: &Self) -> Ordering {
        (self.len, self.bits).cmp(&(other.len, other.bits))
    }
}

impl PartialOrd for TreeNode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for TreeNode {
    /// Bit string; the root prints as `-`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.len == 0 {
            return f.write_str("-");
        }
        for k in 1..=self.len() {
            write!(f, "{}", self.bit(k))?;
        }
        Ok(())
    }
}

impl fmt::Debug for TreeNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TreeNode({self})")
    }
}

impl FromStr for TreeNode {
    type Err = Error;

    /// Bit string, with `-`, `root` or the empty string for the root.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s == "-" || s == "root" {
            return Ok(TreeNode::ROOT);
        }
        let (len, bits) = parse_bits(s)?;
        TreeNode::new(len, bits)
    }
}

/// A point of the truncated cube `{0,1}^L`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Leaf {
    width: u8,
    bits: u64,
}

impl Leaf {
    pub fn new(width: u8, bits: u64) -> Result<Self> {
        if width == 0 || width > MAX_WIDTH {
            return Err(Error::InvalidArgument(format!(
                "leaf width {width} outside 1..={MAX_WIDTH}"
            )));
        }
        if bits >> width != 0 {
            return Err(Error::InvalidArgument(format!(
                "value {bits} does not fit in {width} bits"
            )));
        }
        Ok(Leaf { width, bits })
    }

    pub fn width(&self) -> usize {
        self.width as usize
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    /// 1-based coordinate `k`.
    pub fn bit(&self, k: usize) -> u8 {
        ((self.bits >> (self.width as usize - k)) & 1) as u8
    }

    /// Initial segment of length `n ≤ width` as a tree node.
    pub fn prefix(&self, n: usize) -> TreeNode {
        TreeNode {
            len: n as u8,
            bits: self.bits >> (self.width as usize - n),
        }
    }

    /// `node` is an initial segment of this leaf.
    pub fn extends(&self, node: &TreeNode) -> bool {
        node.len() <= self.width() && self.prefix(node.len()) == *node
    }
}

impl fmt::Display for Leaf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for k in 1..=self.width() {
            write!(f, "{}", self.bit(k))?;
        }
        Ok(())
    }
}

impl fmt::Debug for Leaf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Leaf({self})")
    }
}

impl FromStr for Leaf {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (width, bits) = parse_bits(s.trim())?;
        Leaf::new(width, bits)
    }
}

impl Serialize for Leaf {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Leaf {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(deserializer)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

impl Serialize for TreeNode {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

fn parse_bits(s: &str) -> Result<(u8, u64)> {
    if s.len() > MAX_WIDTH as usize {
        return Err(Error::Parse(format!("bit string longer than {MAX_WIDTH}: {s:?}")));
    }
    let mut bits = 0u64;
    for c in s.chars() {
        bits = (bits << 1)
            | match c {
                '0' => 0,
                '1' => 1,
                _ => return Err(Error::Parse(format!("not a bit string: {s:?}"))),
            };
    }
    Ok((s.len() as u8, bits))
}

/// First disagreement `m` (1-based) of two distinct leaves and their common
/// prefix `v` of length `m − 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Divergence {
    pub m: usize,
    pub v: TreeNode,
}

pub fn divergence(x: &Leaf, y: &Leaf) -> Result<Divergence> {
    if x.width != y.width {
        return Err(Error::InvalidArgument(format!(
            "leaves of different widths: {x} and {y}"
        )));
    }
    let diff = x.bits ^ y.bits;
    if diff == 0 {
        return Err(Error::InvalidArgument(format!(
            "divergence of {x} with itself is undefined"
        )));
    }
    let highest = 63 - diff.leading_zeros() as usize;
    let m = x.width() - highest;
    Ok(Divergence { m, v: x.prefix(m - 1) })
}

fn sorted_distinct(leaves: &[Leaf]) -> Result<Vec<Leaf>> {
    let mut sorted = leaves.to_vec();
    sorted.sort();
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::InvalidArgument(format!("duplicate leaf {}", w[0])));
    }
    if let Some(first) = sorted.first() {
        if let Some(bad) = sorted.iter().find(|l| l.width != first.width) {
            return Err(Error::InvalidArgument(format!(
                "leaves of different widths: {first} and {bad}"
            )));
        }
    }
    Ok(sorted)
}

/// `v(D) = {v(x,y) : x ≠ y ∈ D}`. Computed from lexicographically adjacent
/// pairs: in a binary trie every branching node is the meet of exactly one
/// adjacent pair.
pub fn v_set(leaves: &[Leaf]) -> Result<BTreeSet<TreeNode>> {
    let sorted = sorted_distinct(leaves)?;
    sorted
        .windows(2)
        .map(|w| divergence(&w[0], &w[1]).map(|d| d.v))
        .collect()
}

/// Longest chain guaranteed by halving: `t = min C`, split `C ∖ {t}` by the
/// child of `t` it extends, descend into the larger part (`B_0` on ties).
/// The result has length at least `⌊log₂|C|⌋ + 1`.
pub fn chain_extract<'a>(c: impl IntoIterator<Item = &'a TreeNode>) -> Result<Vec<TreeNode>> {
    let mut preorder: Vec<TreeNode> = c.into_iter().copied().collect();
    if preorder.is_empty() {
        return Err(Error::InvalidArgument("chain extraction needs a nonempty set".into()));
    }
    sort_preorder(&mut preorder);
    preorder.dedup();
    // Every pairwise meet is the meet of some pair adjacent in preorder, and
    // that meet must be the deepest element of C on the path to both.
    let mut path = [TreeNode::ROOT; MAX_WIDTH as usize];
    let mut depth = 0;
    for w in preorder.windows(2) {
        path[depth] = w[0];
        depth += 1;
        while depth > 0 && !path[depth - 1].is_prefix_of(&w[1]) {
            depth -= 1;
        }
        let m = w[0].meet(&w[1]);
        if depth == 0 || path[depth - 1] != m {
            return Err(Error::InvalidArgument(format!(
                "set is not meet-closed: inf{{{}, {}}} = {m} is missing",
                w[0], w[1]
            )));
        }
    }
    Ok(halving_chain(&preorder))
}

/// [`chain_extract`] without the meet-closure check. `nodes` must be
/// nonempty and meet-closed.
pub fn chain_extract_unchecked(mut nodes: Vec<TreeNode>) -> Vec<TreeNode> {
    sort_preorder(&mut nodes);
    nodes.dedup();
    halving_chain(&nodes)
}

fn sort_preorder(nodes: &mut [TreeNode]) {
    nodes.sort_unstable_by_key(|n| (n.bits << (MAX_WIDTH as usize - 1 - n.len()), n.len));
}

/// In preorder a meet-closed set starts with its minimum and the elements
/// below either child of it form consecutive runs, so halving works on ranges.
fn halving_chain(preorder: &[TreeNode]) -> Vec<TreeNode> {
    let mut chain = Vec::with_capacity(preorder.len().min(MAX_WIDTH as usize));
    let mut rest = preorder;
    while let Some((&t, below)) = rest.split_first() {
        let zero = t.child(0);
        let (b0, b1) = below.split_at(below.partition_point(|s| zero.is_prefix_of(s)));
        chain.push(t);
        rest = if b0.len() >= b1.len() { b0 } else { b1 };
    }
    chain
}

/// Membership in 𝒟: `v(D)`, read through the breadth-first numbering, is a
/// Schreier set. Duplicate leaves are ignored.
pub fn dyadic_contains(d: &[Leaf]) -> bool {
    let distinct: BTreeSet<Leaf> = d.iter().copied().collect();
    let distinct: Vec<Leaf> = distinct.into_iter().collect();
    match v_set(&distinct) {
        Ok(v) => {
            let idx: Vec<u64> = v.iter().map(TreeNode::bfs_index).collect();
            schreier_contains(&idx)
        }
        Err(_) => false,
    }
}

/// `2(d − 1) > log₂(a − 1)`, i.e. `|D| > ½·log₂(|A|−1) + 1`, decided in
/// integers as `4^(d−1) > a − 1`.
pub fn extraction_bound_holds(d: usize, a: usize) -> bool {
    if a < 2 || d == 0 {
        return false;
    }
    let exp = 2 * (d - 1);
    exp >= 127 || (1u128 << exp) > (a - 1) as u128
}

/// Output of [`dyadic_extract`] with the intermediate objects of the
/// construction, kept for auditing.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DyadicExtraction {
    pub member: Vec<Leaf>,
    pub chain: Vec<TreeNode>,
    pub top: Vec<TreeNode>,
}

/// Finds `D ⊆ A` in 𝒟 with `|D| > ½·log₂(|A|−1) + 1`.
///
/// `U` is the halving chain of `v(A)`, `W` the upper half of `U` (a Schreier
/// set in breadth-first numbering). For `w_i ≺ w_{i+1}` in `W` with
/// `w_{i+1}` extending `w_i⌢c`, `a_i` is the least leaf of `A` extending
/// `w_i⌢(1−c)`; `a_m, a_{m+1}` are the least leaves extending `w_m⌢0` and
/// `w_m⌢1`. Then `v(D) = W`.
pub fn dyadic_extract(a: &[Leaf]) -> Result<DyadicExtraction> {
    let sorted = sorted_distinct(a)?;
    if sorted.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "extraction needs at least 2 distinct leaves, got {}",
            sorted.len()
        )));
    }
    let v = v_set(&sorted)?;
    let chain = chain_extract_unchecked(v.into_iter().collect());
    let keep = chain.len().div_ceil(2);
    let top = chain[chain.len() - keep..].to_vec();

    let least_extending = |node: TreeNode| -> Result<Leaf> {
        sorted
            .iter()
            .find(|l| l.extends(&node))
            .copied()
            .ok_or_else(|| Error::Invariant(format!("no leaf extends divergence node child {node}")))
    };
    let mut member = Vec::with_capacity(top.len() + 1);
    for pair in top.windows(2) {
        let (w, next) = (pair[0], pair[1]);
        let c = next.bit(w.len() + 1);
        member.push(least_extending(w.child(1 - c))?);
    }
    let last = *top.last().expect("chain is nonempty");
    member.push(least_extending(last.child(0))?);
    member.push(least_extending(last.child(1))?);
    member.sort();

    Ok(DyadicExtraction { member, chain, top })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leaf(s: &str) -> Leaf {
        s.parse().unwrap()
    }

    fn node(s: &str) -> TreeNode {
        s.parse().unwrap()
    }

    #[test]
    fn schreier_membership() {
        assert!(!schreier_contains(&[1, 2]));
        assert!(schreier_contains(&[2, 5]));
        assert!(schreier_contains(&[3, 4, 5]));
        assert!(schreier_contains(&[]));
        assert!(schreier_contains(&[1]));
        assert!(!schreier_contains(&[0]));
    }

    #[test]
    fn schreier_extraction() {
        assert_eq!(schreier_extract(&[1, 2, 3, 4]), vec![3, 4]);
        assert_eq!(schreier_extract(&[1, 2, 3]), vec![2, 3]);
        assert_eq!(schreier_extract(&[1]), vec![1]);
        assert_eq!(schreier_extract(&[]), Vec::<u64>::new());
        assert_eq!(schreier_extract(&[9, 1, 4]), vec![4, 9]);
    }

    #[test]
    fn schreier_max_subset_matches_enumeration() {
        for mask in 1u32..(1 << 10) {
            let h: Vec<u64> = (1..=10).filter(|i| mask >> (i - 1) & 1 == 1).collect();
            let mut best = 0;
            for sub in 0u32..(1 << h.len()) {
                let s: Vec<u64> = (0..h.len()).filter(|i| sub >> i & 1 == 1).map(|i| h[i]).collect();
                if schreier_contains(&s) {
                    best = best.max(s.len());
                }
            }
            let got = schreier_max_subset(&h);
            assert!(schreier_contains(&got));
            assert_eq!(got.len(), best, "{h:?}");
        }
    }

    #[test]
    fn bfs_numbering() {
        assert_eq!(TreeNode::ROOT.bfs_index(), 1);
        assert_eq!(node("0").bfs_index(), 2);
        assert_eq!(node("1").bfs_index(), 3);
        assert_eq!(node("00").bfs_index(), 4);
        assert_eq!(node("11").bfs_index(), 7);
        for i in 1..2000 {
            assert_eq!(TreeNode::from_bfs_index(i).unwrap().bfs_index(), i);
        }
    }

    #[test]
    fn tree_order_and_meet() {
        assert!(TreeNode::ROOT.is_prefix_of(&node("0110")));
        assert!(node("01").is_prefix_of(&node("0110")));
        assert!(!node("00").is_prefix_of(&node("0110")));
        assert_eq!(node("0110").meet(&node("0101")), node("01"));
        assert_eq!(node("0").meet(&node("1")), TreeNode::ROOT);
        assert_eq!(node("01").meet(&node("0110")), node("01"));
    }

    #[test]
    fn divergence_examples() {
        let d = divergence(&leaf("0110"), &leaf("0101")).unwrap();
        assert_eq!(d.m, 3);
        assert_eq!(d.v, node("01"));
        let d = divergence(&leaf("0000"), &leaf("1000")).unwrap();
        assert_eq!(d.m, 1);
        assert!(d.v.is_root());
        assert!(divergence(&leaf("0110"), &leaf("0110")).is_err());
        assert!(divergence(&leaf("011"), &leaf("0110")).is_err());
    }

    #[test]
    fn divergence_matches_prefix_scan() {
        let w = 9;
        for x in 0..(1u64 << w) {
            for y in [0u64, 1, 77, 255, 256, 511, x ^ 1, x ^ 16] {
                if x == y {
                    continue;
                }
                let (lx, ly) = (Leaf::new(w, x).unwrap(), Leaf::new(w, y).unwrap());
                let m = (1..=w as usize).find(|&k| lx.bit(k) != ly.bit(k)).unwrap();
                let d = divergence(&lx, &ly).unwrap();
                assert_eq!(d.m, m);
                assert_eq!(d.v, lx.prefix(m - 1));
                assert_eq!(d.v, lx.prefix(w as usize - 1).meet(&ly.prefix(w as usize - 1)));
            }
        }
    }

    #[test]
    fn v_set_examples() {
        assert!(v_set(&[leaf("0101")]).unwrap().is_empty());
        let v = v_set(&[leaf("0110"), leaf("0101")]).unwrap();
        assert_eq!(v.into_iter().collect::<Vec<_>>(), vec![node("01")]);
        assert!(v_set(&[leaf("01"), leaf("01")]).is_err());
        let v = v_set(&[leaf("000"), leaf("001"), leaf("100")]).unwrap();
        assert_eq!(v.into_iter().collect::<Vec<_>>(), vec![TreeNode::ROOT, node("00")]);
    }

    #[test]
    fn chain_examples() {
        let c: BTreeSet<TreeNode> = [TreeNode::ROOT].into();
        assert_eq!(chain_extract(&c).unwrap(), vec![TreeNode::ROOT]);
        let c: BTreeSet<TreeNode> = [TreeNode::ROOT, node("0"), node("1"), node("00")].into();
        assert_eq!(chain_extract(&c).unwrap(), vec![TreeNode::ROOT, node("0"), node("00")]);
        let bad: BTreeSet<TreeNode> = [node("00"), node("01")].into();
        let err = chain_extract(&bad).unwrap_err().to_string();
        assert!(err.contains("00") && err.contains("01"), "{err}");
        assert!(chain_extract(&BTreeSet::new()).is_err());
    }

    #[test]
    fn meet_closure_check_matches_all_pairs() {
        // every subset of the 15 nodes of depth <= 3
        let all: Vec<TreeNode> = (1..16).map(|i| TreeNode::from_bfs_index(i).unwrap()).collect();
        for mask in 1u32..1 << 15 {
            let c: BTreeSet<TreeNode> = (0..15).filter(|i| mask >> i & 1 == 1).map(|i| all[i]).collect();
            let closed = c.iter().all(|s| c.iter().all(|t| c.contains(&s.meet(t))));
            assert_eq!(chain_extract(&c).is_ok(), closed, "{c:?}");
        }
    }

    #[test]
    fn dyadic_membership() {
        assert!(dyadic_contains(&[]));
        assert!(dyadic_contains(&[leaf("0101")]));
        // v(D) = {root, (0,0)}: indices {1, 4}, min 1 < 2
        assert!(!dyadic_contains(&[leaf("000"), leaf("001"), leaf("100")]));
        // v(D) = {(0,0)}: index 4
        assert!(dyadic_contains(&[leaf("000"), leaf("001")]));
    }

    #[test]
    fn extraction_examples() {
        let a = [leaf("0110"), leaf("1011")];
        let out = dyadic_extract(&a).unwrap();
        assert_eq!(out.member, a.to_vec());

        let a = [leaf("000"), leaf("001"), leaf("100")];
        let out = dyadic_extract(&a).unwrap();
        assert_eq!(out.chain, vec![TreeNode::ROOT, node("00")]);
        assert_eq!(out.top, vec![node("00")]);
        assert_eq!(out.member, vec![leaf("000"), leaf("001")]);
        assert!(dyadic_contains(&out.member));
        assert!(extraction_bound_holds(out.member.len(), a.len()));

        assert!(dyadic_extract(&[leaf("01")]).is_err());
    }

    #[test]
    fn bound_arithmetic() {
        // |D| > ½log₂(|A|−1)+1
        for a in 2..300usize {
            for d in 1..12usize {
                let exact = (d as f64) > 0.5 * ((a - 1) as f64).log2() + 1.0;
                assert_eq!(extraction_bound_holds(d, a), exact, "d={d} a={a}");
            }
        }
    }
}
