//! Indexed partitions of a model's points and their enumeration by
//! restricted growth strings.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{GroundModel, MeasurableSet, PointId, PointSet};

/// Ordered parts `Ω_1, Ω_2, …` covering every point exactly once. Empty parts
/// are allowed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexedPartition {
    parts: Vec<PointSet>,
}

impl IndexedPartition {
    pub fn new(model: &GroundModel, parts: Vec<PointSet>) -> Result<Self> {
        let mut seen = vec![false; model.point_count()];
        for (i, part) in parts.iter().enumerate() {
            for p in part.iter() {
                match seen.get_mut(p) {
                    None => return Err(Error::UnknownPoint(format!("#{p}"))),
                    Some(s) if *s => {
                        return Err(Error::InvalidPartition(format!(
                            "point {} lies in two parts (second: {i})",
                            model.name(p)
                        )))
                    }
                    Some(s) => *s = true,
                }
            }
        }
        if let Some(p) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidPartition(format!(
                "point {} is in no part",
                model.name(p)
            )));
        }
        Ok(IndexedPartition { parts })
    }

    /// Parts from a restricted growth string (`rgs[p]` is the part of `p`).
    pub fn from_rgs(rgs: &[usize]) -> Self {
        let count = rgs.iter().map(|&k| k + 1).max().unwrap_or(0);
        let mut parts = vec![PointSet::new(); count];
        for (p, &k) in rgs.iter().enumerate() {
            parts[k].insert(p);
        }
        IndexedPartition { parts }
    }

    pub fn coarsest(model: &GroundModel) -> Self {
        IndexedPartition {
            parts: vec![model.all_points()],
        }
    }

    pub fn singletons(model: &GroundModel) -> Self {
        IndexedPartition {
            parts: (0..model.point_count()).map(|p| PointSet::from([p])).collect(),
        }
    }

    /// Groups points by their block.
    pub fn by_block(model: &GroundModel) -> Self {
        IndexedPartition {
            parts: model
                .blocks()
                .iter()
                .filter(|b| !b.points.is_empty())
                .map(|b| b.points.iter().copied().collect())
                .collect(),
        }
    }

    pub fn parts(&self) -> &[PointSet] {
        &self.parts
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn part_of(&self, p: PointId) -> Option<usize> {
        self.parts.iter().position(|part| part.contains(p))
    }

    /// Part index of every point.
    pub fn labels(&self, point_count: usize) -> Vec<usize> {
        let mut out = vec![usize::MAX; point_count];
        for (i, part) in self.parts.iter().enumerate() {
            for p in part.iter() {
                out[p] = i;
            }
        }
        out
    }

    pub fn hulls(&self, model: &GroundModel) -> Result<Vec<MeasurableSet>> {
        self.parts.iter().map(|p| model.hull(p)).collect()
    }
}

/// Bell number `B(n)`, saturating at `u128::MAX`.
pub fn bell(n: usize) -> u128 {
    let mut row = vec![1u128];
    for _ in 0..n {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(*row.last().expect("nonempty"));
        for x in &row {
            let prev = *next.last().expect("nonempty");
            next.push(prev.saturating_add(*x));
        }
        row = next;
    }
    row[0]
}

/// Every restricted growth string of length `n`, in lexicographic order.
pub fn restricted_growth_strings(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut rgs = vec![0usize; n];
    fn rec(i: usize, max: usize, rgs: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i == rgs.len() {
            out.push(rgs.clone());
            return;
        }
        for k in 0..=max + 1 {
            rgs[i] = k;
            rec(i + 1, max.max(k), rgs, out);
        }
    }
    if n == 0 {
        out.push(Vec::new());
    } else {
        rec(1, 0, &mut rgs, &mut out);
    }
    out
}

/// All partitions of the model's points, refusing more than `max_points`
/// points.
pub fn all_partitions(model: &GroundModel, max_points: usize) -> Result<Vec<IndexedPartition>> {
    let n = model.point_count();
    if n > max_points {
        return Err(Error::resource(
            format!("partition sweep over {n} points ({} partitions)", bell(n)),
            max_points,
        ));
    }
    Ok(restricted_growth_strings(n)
        .iter()
        .map(|r| IndexedPartition::from_rgs(r))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    #[test]
    fn bell_numbers() {
        let expected = [1u128, 1, 2, 5, 15, 52, 203, 877, 4140, 21147, 115975];
        for (n, &b) in expected.iter().enumerate() {
            assert_eq!(bell(n), b);
            assert_eq!(restricted_growth_strings(n).len() as u128, b);
        }
    }

    #[test]
    fn rgs_are_canonical_and_distinct() {
        let all = restricted_growth_strings(5);
        let mut seen = std::collections::BTreeSet::new();
        for r in &all {
            let mut max = 0;
            for (i, &k) in r.iter().enumerate() {
                assert!(i == 0 && k == 0 || k <= max + 1);
                max = max.max(k);
            }
            let mut parts: Vec<Vec<usize>> = IndexedPartition::from_rgs(r)
                .parts()
                .iter()
                .map(|p| p.to_vec())
                .collect();
            parts.sort();
            assert!(seen.insert(parts));
        }
    }

    #[test]
    fn validation() {
        let m = GroundModel::new(vec![(q(1, 2), vec!["a", "b"]), (q(1, 2), vec!["c"])]).unwrap();
        assert!(IndexedPartition::new(&m, vec![PointSet::from([0, 1]), PointSet::from([2])]).is_ok());
        assert!(IndexedPartition::new(&m, vec![PointSet::from([0, 1]), PointSet::new(), PointSet::from([2])]).is_ok());
        assert!(IndexedPartition::new(&m, vec![PointSet::from([0, 1])]).is_err());
        assert!(IndexedPartition::new(&m, vec![PointSet::from([0, 1]), PointSet::from([1, 2])]).is_err());
        assert!(IndexedPartition::new(&m, vec![PointSet::from([0, 1, 2, 7])]).is_err());
        assert_eq!(IndexedPartition::by_block(&m).len(), 2);
        assert_eq!(all_partitions(&m, 3).unwrap().len(), 5);
        assert!(all_partitions(&m, 2).is_err());
    }
}
