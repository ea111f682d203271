//! Hereditary families of finite sets.
//!
//! Elements are `u64`. What an element means depends on the family: point
//! or label indices for explicit and partition families, naturals `≥ 1` for
//! the Schreier family, packed leaves for 𝒟. [`Family::Pullback`] moves a
//! rule family onto indices through a label table, which is how a Schreier
//! or 𝒟 family is placed on the points of a model.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::dyadic::{dyadic_contains, schreier_contains, schreier_max_subset, Leaf};
use crate::error::{Error, Result};
use crate::search::{max_member_weight, SearchLimits};
use crate::trie::SetTrie;

/// Anything that can answer membership for a sorted, duplicate-free set.
pub trait Membership: Sync {
    fn contains(&self, set: &[u64]) -> bool;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GroundKind {
    Indices,
    Naturals,
    Leaves(u8),
}

/// Classes of a partition-generated family `⋃_γ [C_γ]^{<ω}`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Classes {
    class_of: BTreeMap<u64, usize>,
    count: usize,
}

impl Classes {
    pub fn new(classes: &[Vec<u64>]) -> Result<Self> {
        let mut class_of = BTreeMap::new();
        for (i, class) in classes.iter().enumerate() {
            for &x in class {
                if let Some(prev) = class_of.insert(x, i) {
                    if prev != i {
                        return Err(Error::InvalidFamily(format!(
                            "element {x} lies in classes {prev} and {i}"
                        )));
                    }
                }
            }
        }
        Ok(Classes {
            class_of,
            count: classes.len(),
        })
    }

    pub fn class_of(&self, x: u64) -> Option<usize> {
        self.class_of.get(&x).copied()
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn classes(&self) -> Vec<Vec<u64>> {
        let mut out = vec![Vec::new(); self.count];
        for (&x, &c) in &self.class_of {
            out[c].push(x);
        }
        out
    }
}

pub type Predicate = Arc<dyn Fn(&[u64]) -> bool + Send + Sync>;

#[derive(Clone)]
pub enum Family {
    /// Downward closure of explicit generators.
    Explicit(SetTrie),
    /// Every finite set.
    All,
    /// Sets of at most the given size.
    Bounded(usize),
    /// `{S ⊆ ℕ : |S| ≤ min S}` on naturals `≥ 1`.
    Schreier,
    /// 𝒟 on leaves of the given width.
    DyadicD { width: u8 },
    /// Finite subsets of a single class.
    Partition(Classes),
    /// `{F : labels(F) ∈ inner}`, optionally requiring labels to be
    /// distinct on `F`. Elements are indices into `labels`.
    Pullback {
        inner: Arc<Family>,
        labels: Vec<u64>,
        injective: bool,
    },
    /// Caller-supplied predicate; heredity is the caller's contract.
    Custom(Predicate),
}

impl fmt::Debug for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Explicit(t) => write!(f, "Explicit({} members)", t.len()),
            Family::All => f.write_str("All"),
            Family::Bounded(k) => write!(f, "Bounded({k})"),
            Family::Schreier => f.write_str("Schreier"),
            Family::DyadicD { width } => write!(f, "DyadicD({width})"),
            Family::Partition(c) => write!(f, "Partition({} classes)", c.count()),
            Family::Pullback {
                inner,
                labels,
                injective,
            } => write!(f, "Pullback({inner:?}, {} labels, injective={injective})", labels.len()),
            Family::Custom(_) => f.write_str("Custom"),
        }
    }
}

fn normalized(set: &[u64]) -> std::borrow::Cow<'_, [u64]> {
    if set.windows(2).all(|w| w[0] < w[1]) {
        std::borrow::Cow::Borrowed(set)
    } else {
        let mut v = set.to_vec();
        v.sort_unstable();
        v.dedup();
        std::borrow::Cow::Owned(v)
    }
}

impl Family {
    /// Smallest hereditary family containing every generator. No generators
    /// gives the empty family; `[[]]` gives `{∅}`.
    pub fn explicit<I, S>(generators: I) -> Family
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u64]>,
    {
        let mut trie = SetTrie::new();
        for g in generators {
            trie.insert_closed(g.as_ref());
        }
        Family::Explicit(trie)
    }

    pub fn partition(classes: &[Vec<u64>]) -> Result<Family> {
        Ok(Family::Partition(Classes::new(classes)?))
    }

    pub fn pullback(inner: Family, labels: Vec<u64>, injective: bool) -> Family {
        Family::Pullback {
            inner: Arc::new(inner),
            labels,
            injective,
        }
    }

    pub fn custom(f: impl Fn(&[u64]) -> bool + Send + Sync + 'static) -> Family {
        Family::Custom(Arc::new(f))
    }

    pub fn ground(&self) -> GroundKind {
        match self {
            Family::Schreier => GroundKind::Naturals,
            Family::DyadicD { width } => GroundKind::Leaves(*width),
            _ => GroundKind::Indices,
        }
    }

    /// `false` only for the family with no members at all.
    pub fn is_nonempty(&self) -> bool {
        match self {
            Family::Explicit(t) => !t.is_empty(),
            _ => true,
        }
    }

    pub fn contains(&self, set: &[u64]) -> bool {
        let set = normalized(set);
        self.contains_sorted(&set)
    }

    fn contains_sorted(&self, set: &[u64]) -> bool {
        match self {
            Family::Explicit(t) => t.contains(set),
            Family::All => true,
            Family::Bounded(k) => set.len() <= *k,
            Family::Schreier => schreier_contains(set),
            Family::DyadicD { width } => {
                let leaves: Option<Vec<Leaf>> = set.iter().map(|&x| Leaf::new(*width, x).ok()).collect();
                leaves.is_some_and(|l| dyadic_contains(&l))
            }
            Family::Partition(c) => match set.first() {
                None => true,
                Some(&x) => match c.class_of(x) {
                    Some(k) => set.iter().all(|&y| c.class_of(y) == Some(k)),
                    None => false,
                },
            },
            Family::Pullback {
                inner,
                labels,
                injective,
            } => {
                let mut mapped = Vec::with_capacity(set.len());
                for &i in set {
                    match labels.get(i as usize) {
                        Some(&l) => mapped.push(l),
                        None => return false,
                    }
                }
                mapped.sort_unstable();
                let before = mapped.len();
                mapped.dedup();
                if *injective && mapped.len() != before {
                    return false;
                }
                inner.contains_sorted(&mapped)
            }
            Family::Custom(f) => f(set),
        }
    }

    /// Rejects elements outside the family's ground set.
    pub fn validate_elements(&self, set: &[u64]) -> Result<()> {
        match self {
            Family::Schreier => {
                if set.contains(&0) {
                    return Err(Error::InvalidArgument("Schreier elements are naturals >= 1".into()));
                }
            }
            Family::DyadicD { width } => {
                if let Some(x) = set.iter().find(|&&x| Leaf::new(*width, x).is_err()) {
                    return Err(Error::InvalidArgument(format!("{x} is not a leaf of width {width}")));
                }
            }
            Family::Pullback { labels, .. } => {
                if let Some(x) = set.iter().find(|&&x| x as usize >= labels.len()) {
                    return Err(Error::InvalidArgument(format!(
                        "index {x} outside the {} labels",
                        labels.len()
                    )));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// A member of largest cardinality inside `h`. Closed forms for the rule
    /// families, branch and bound otherwise.
    pub fn max_cardinality_member(&self, h: &[u64], limits: &SearchLimits) -> Result<Vec<u64>> {
        let h = normalized(h);
        if !self.is_nonempty() {
            return Err(Error::InvalidFamily("the empty family has no members".into()));
        }
        Ok(match self {
            Family::All => h.to_vec(),
            Family::Bounded(k) => h.iter().take(*k).copied().collect(),
            Family::Schreier => {
                let positive: Vec<u64> = h.iter().copied().filter(|&x| x > 0).collect();
                schreier_max_subset(&positive)
            }
            Family::Partition(c) => {
                let mut by_class: BTreeMap<usize, Vec<u64>> = BTreeMap::new();
                for &x in h.iter() {
                    if let Some(k) = c.class_of(x) {
                        by_class.entry(k).or_default().push(x);
                    }
                }
                by_class.into_values().rev().max_by_key(|v| v.len()).unwrap_or_default()
            }
            Family::Pullback {
                inner,
                labels,
                injective,
            } if matches!(**inner, Family::All)
                || (*injective && matches!(**inner, Family::Bounded(_) | Family::Schreier | Family::Partition(_))) =>
            {
                let mut rep: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
                for &i in h.iter() {
                    if let Some(&l) = labels.get(i as usize) {
                        rep.entry(l).or_default().push(i);
                    }
                }
                let distinct: Vec<u64> = rep.keys().copied().collect();
                let chosen = inner.max_cardinality_member(&distinct, limits)?;
                let mut out: Vec<u64> = chosen
                    .iter()
                    .flat_map(|l| {
                        let idx = &rep[l];
                        if *injective {
                            idx[..1].to_vec()
                        } else {
                            idx.clone()
                        }
                    })
                    .collect();
                out.sort_unstable();
                out
            }
            _ => {
                let sel = max_member_weight(self, &h, |_| crate::rational::Rational::one(), limits)?;
                sel.member
            }
        })
    }

    /// Every member contained in `h`, in depth-first order.
    pub fn members_within(&self, h: &[u64], cap: usize) -> Result<Vec<Vec<u64>>> {
        let h = normalized(h);
        let mut out = Vec::new();
        if !self.is_nonempty() {
            return Ok(out);
        }
        let mut current = Vec::new();
        self.collect_members(&h, 0, &mut current, &mut out, cap)?;
        Ok(out)
    }

    fn collect_members(
        &self,
        h: &[u64],
        from: usize,
        current: &mut Vec<u64>,
        out: &mut Vec<Vec<u64>>,
        cap: usize,
    ) -> Result<()> {
        if out.len() >= cap {
            return Err(Error::resource("family member enumeration", cap));
        }
        out.push(current.clone());
        for i in from..h.len() {
            current.push(h[i]);
            if self.contains_sorted(current) {
                self.collect_members(h, i + 1, current, out, cap)?;
            }
            current.pop();
        }
        Ok(())
    }

    /// `true` iff every subset of `a` is a member. Only `a` itself is tested
    /// for families whose heredity is guaranteed by construction.
    pub fn is_compact_counterexample(&self, a: &[u64]) -> Result<bool> {
        let a = normalized(a);
        match self {
            Family::Custom(_) => {
                if a.len() > 24 {
                    return Err(Error::resource("subset check on a custom family", 24));
                }
                Ok((0u32..(1 << a.len())).all(|mask| {
                    let sub: Vec<u64> = (0..a.len()).filter(|i| mask >> i & 1 == 1).map(|i| a[i]).collect();
                    self.contains_sorted(&sub)
                }))
            }
            _ => Ok(self.is_nonempty() && self.contains_sorted(&a)),
        }
    }
}

impl Membership for Family {
    fn contains(&self, set: &[u64]) -> bool {
        Family::contains(self, set)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn subsets(v: &[u64]) -> Vec<Vec<u64>> {
        (0u32..(1 << v.len()))
            .map(|m| (0..v.len()).filter(|i| m >> i & 1 == 1).map(|i| v[i]).collect())
            .collect()
    }

    #[test]
    fn explicit_conventions() {
        let none = Family::explicit(Vec::<Vec<u64>>::new());
        assert!(!none.contains(&[]));
        assert!(!none.is_nonempty());
        let empty_only = Family::explicit([Vec::<u64>::new()]);
        assert!(empty_only.contains(&[]));
        assert!(!empty_only.contains(&[1]));

        let pair = Family::explicit([[1u64, 2]]);
        for s in [vec![], vec![1], vec![2], vec![1, 2], vec![2, 1]] {
            assert!(pair.contains(&s));
        }
        assert!(!pair.contains(&[1, 3]));
    }

    #[test]
    fn explicit_contains_every_subset_of_generators() {
        let gens: Vec<Vec<u64>> = vec![vec![1, 2, 3, 4], vec![3, 5, 7], vec![8], vec![2, 9, 10, 11]];
        let fam = Family::explicit(&gens);
        for g in &gens {
            for s in subsets(g) {
                assert!(fam.contains(&s), "{s:?}");
            }
        }
        assert!(!fam.contains(&[1, 5]));
        assert!(!fam.contains(&[4, 8]));
    }

    #[test]
    fn partition_family() {
        let fam = Family::partition(&[vec![1, 2], vec![3]]).unwrap();
        assert!(fam.contains(&[]));
        assert!(fam.contains(&[1, 2]));
        assert!(!fam.contains(&[1, 3]));
        assert!(!fam.contains(&[4]));
        assert!(Family::partition(&[vec![1], vec![1, 2]]).is_err());
        let limits = SearchLimits::default();
        assert_eq!(fam.max_cardinality_member(&[1, 2, 3], &limits).unwrap(), vec![1, 2]);
    }

    #[test]
    fn compactness_witness_checks() {
        let s = Family::Schreier;
        assert!(s.is_compact_counterexample(&[]).unwrap());
        assert!(s.is_compact_counterexample(&[2, 3]).unwrap());
        assert!(!s.is_compact_counterexample(&[1, 2, 3]).unwrap());
        // a non-hereditary predicate is caught by the full subset check
        let odd = Family::custom(|f| f.len() != 1);
        assert!(!odd.is_compact_counterexample(&[1, 2]).unwrap());
    }

    #[test]
    fn pullback_requires_injectivity() {
        let fam = Family::pullback(Family::All, vec![5, 5, 6], true);
        assert!(fam.contains(&[0, 2]));
        assert!(!fam.contains(&[0, 1]));
        let loose = Family::pullback(Family::Bounded(1), vec![5, 5, 6], false);
        assert!(loose.contains(&[0, 1]));
        assert!(!loose.contains(&[0, 2]));
        let limits = SearchLimits::default();
        assert_eq!(loose.max_cardinality_member(&[0, 1, 2], &limits).unwrap(), vec![0, 1]);
        assert_eq!(fam.max_cardinality_member(&[0, 1, 2], &limits).unwrap(), vec![0, 2]);
        // the label with more preimages wins when repeats are allowed
        let heavy = Family::pullback(Family::Bounded(1), vec![5, 6, 6], false);
        assert_eq!(heavy.max_cardinality_member(&[0, 1, 2], &limits).unwrap(), vec![1, 2]);
    }

    #[test]
    fn ground_validation() {
        assert!(Family::Schreier.validate_elements(&[0, 1]).is_err());
        assert!(Family::DyadicD { width: 3 }.validate_elements(&[8]).is_err());
        assert!(Family::DyadicD { width: 3 }.validate_elements(&[7]).is_ok());
        assert_eq!(Family::DyadicD { width: 3 }.ground(), GroundKind::Leaves(3));
    }

    #[test]
    fn members_within_lists_the_closure() {
        let fam = Family::explicit([[1u64, 2], [2, 3]]);
        let m = fam.members_within(&[1, 2, 3], 100).unwrap();
        assert_eq!(m, vec![vec![], vec![1], vec![1, 2], vec![2], vec![2, 3], vec![3]]);
        assert!(Family::All.members_within(&[1, 2, 3, 4], 5).is_err());
    }
}
