//! Greedy witness selection for families pulled back through a transversal
//! system: classes `Z_α` of full outer measure, a class family on the labels
//! `α`, and members on which the labelling is one-to-one.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::family::Family;
use crate::measure::{GroundModel, PointId, PointSet};
use crate::partition::IndexedPartition;
use crate::rational::Rational;
use crate::search::SearchLimits;

/// The labelling `φ` of points by class; classes are its fibres.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransversalSystem {
    labels: Vec<u64>,
}

impl TransversalSystem {
    pub fn new(model: &GroundModel, labels: Vec<u64>) -> Result<Self> {
        if labels.len() != model.point_count() {
            return Err(Error::InvalidArgument(format!(
                "{} labels for {} points",
                labels.len(),
                model.point_count()
            )));
        }
        Ok(TransversalSystem { labels })
    }

    pub fn label(&self, p: PointId) -> u64 {
        self.labels[p]
    }

    pub fn labels(&self) -> &[u64] {
        &self.labels
    }

    pub fn classes(&self) -> BTreeMap<u64, PointSet> {
        let mut out: BTreeMap<u64, PointSet> = BTreeMap::new();
        for (p, &l) in self.labels.iter().enumerate() {
            out.entry(l).or_default().insert(p);
        }
        out
    }

    /// Classes that miss some block of positive measure.
    pub fn thin_classes(&self, model: &GroundModel) -> Result<Vec<u64>> {
        let mut out = Vec::new();
        for (label, class) in self.classes() {
            if model.outer_measure(&class)? != Rational::one() {
                out.push(label);
            }
        }
        Ok(out)
    }

    /// The points' family `{F : φ one-to-one on F, φ(F) ∈ class_family}`.
    pub fn pullback(&self, class_family: Family) -> Family {
        Family::pullback(class_family, self.labels.clone(), true)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GreedyStep {
    pub class: u64,
    pub part: usize,
    pub point: PointId,
    /// `μ*(Z_α ∩ ⋃_{m ∈ N} Ω_m)` for the parts `N` still unused.
    pub fresh_mass: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GreedyReport {
    /// `k(α)` per class, counting parts from 1.
    pub k: BTreeMap<u64, usize>,
    pub n: usize,
    pub classes: Vec<u64>,
    pub steps: Vec<GreedyStep>,
    pub member: Vec<PointId>,
    pub value: Rational,
}

/// Picks `F` with `φ` one-to-one on `F`, `φ(F)` in `class_family`, and
/// `μ*(⋃{Ω_m : F ∩ Ω_m ≠ ∅}) > ε`.
///
/// `k(α)` is the least `k` with `μ*(Z_α ∩ (Ω_1 ∪ … ∪ Ω_k)) > ε`; among the
/// classes with `k(α) = n` a member `D` of size `n` is taken for the least
/// `n` allowing it, and its classes are served in increasing order, each
/// from the first part among `Ω_1, …, Ω_n` not used yet that the class meets.
pub fn greedy_select(
    model: &GroundModel,
    ts: &TransversalSystem,
    class_family: &Family,
    partition: &IndexedPartition,
    epsilon: &Rational,
    limits: &SearchLimits,
) -> Result<GreedyReport> {
    if !epsilon.is_positive() || *epsilon >= Rational::one() {
        return Err(Error::InvalidArgument(format!("epsilon {epsilon} outside (0, 1)")));
    }
    let partition = IndexedPartition::new(model, partition.parts().to_vec())?;
    let thin = ts.thin_classes(model)?;
    if !thin.is_empty() {
        return Err(Error::Precondition(format!(
            "classes {thin:?} do not have full outer measure"
        )));
    }
    let classes = ts.classes();
    let parts = partition.parts();

    let mut k = BTreeMap::new();
    for (&label, z) in &classes {
        let mut seen = PointSet::new();
        let mut found = None;
        for (m, part) in parts.iter().enumerate() {
            seen = seen.union(&z.intersection(part));
            if model.outer_measure(&seen)? > *epsilon {
                found = Some(m + 1);
                break;
            }
        }
        let km = found.ok_or_else(|| Error::Invariant(format!("class {label} never exceeds epsilon")))?;
        k.insert(label, km);
    }

    let mut by_k: BTreeMap<usize, Vec<u64>> = BTreeMap::new();
    for (&label, &km) in &k {
        by_k.entry(km).or_default().push(label);
    }
    let mut chosen = None;
    for (&n, p_n) in &by_k {
        if p_n.len() < n {
            continue;
        }
        let d = class_family.max_cardinality_member(p_n, limits)?;
        if d.len() >= n {
            chosen = Some((n, d[..n].to_vec()));
            break;
        }
    }
    let (n, d) = chosen.ok_or_else(|| {
        let sizes: Vec<(usize, usize)> = by_k.iter().map(|(n, p)| (*n, p.len())).collect();
        Error::Precondition(format!(
            "model too small: no n has a family member of size n among the classes with k = n \
             (k, |P_k|) = {sizes:?}"
        ))
    })?;
    if !class_family.contains(&d) {
        return Err(Error::Invariant("extracted class set is not a member".into()));
    }

    let mut used = vec![false; n];
    let mut steps = Vec::new();
    let mut hit = PointSet::new();
    let mut value = Rational::zero();
    for &alpha in &d {
        if !steps.is_empty() && value > *epsilon {
            break;
        }
        let z = &classes[&alpha];
        let fresh: PointSet = (0..n)
            .filter(|&m| !used[m])
            .flat_map(|m| z.intersection(&parts[m]).to_vec())
            .collect();
        let fresh_mass = model.outer_measure(&fresh)?;
        if !fresh_mass.is_positive() {
            return Err(Error::Invariant(format!(
                "class {alpha} has no mass left in the unused parts after {} steps",
                steps.len()
            )));
        }
        let m = (0..n)
            .find(|&m| !used[m] && !z.is_disjoint(&parts[m]))
            .expect("fresh mass is positive");
        let point = z.intersection(&parts[m]).iter().next().expect("nonempty");
        used[m] = true;
        hit = hit.union(&parts[m]);
        value = model.outer_measure(&hit)?;
        steps.push(GreedyStep {
            class: alpha,
            part: m,
            point,
            fresh_mass,
        });
    }
    if value <= *epsilon {
        return Err(Error::Invariant(format!(
            "selection stopped at {value} without exceeding {epsilon}"
        )));
    }
    let mut member: Vec<PointId> = steps.iter().map(|s| s.point).collect();
    member.sort_unstable();
    Ok(GreedyReport {
        k,
        n,
        classes: d,
        steps,
        member,
        value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mcfilling::mc_value;
    use crate::rational::q;

    #[test]
    fn single_class_coarsest() {
        let m = GroundModel::uniform(vec![vec!["a"], vec!["b"]]).unwrap();
        let ts = TransversalSystem::new(&m, vec![1, 1]).unwrap();
        let part = IndexedPartition::coarsest(&m);
        let r = greedy_select(&m, &ts, &Family::Schreier, &part, &q(1, 2), &SearchLimits::default()).unwrap();
        assert_eq!(r.member, vec![0]);
        assert_eq!(r.value, q(1, 1));
        assert_eq!(r.n, 1);
    }

    #[test]
    fn block_parts_with_three_transversals() {
        // 4 uniform blocks, classes 1..3 each with one point per block
        let names: Vec<Vec<String>> = (0..4).map(|b| (1..=3).map(|c| format!("z{c}b{b}")).collect()).collect();
        let m = GroundModel::uniform(names).unwrap();
        let labels: Vec<u64> = (0..12).map(|p| (p % 3) as u64 + 1).collect();
        let ts = TransversalSystem::new(&m, labels).unwrap();
        let part = IndexedPartition::by_block(&m);
        let fam = Family::All;
        let r = greedy_select(&m, &ts, &fam, &part, &q(1, 2), &SearchLimits::default()).unwrap();
        // every class has k = 3, so three classes each take one block
        assert_eq!(r.n, 3);
        assert_eq!(r.value, q(3, 4));
        let pulled = ts.pullback(fam);
        let ids: Vec<u64> = r.member.iter().map(|&p| p as u64).collect();
        assert!(pulled.contains(&ids));
        let best = mc_value(&m, &pulled, &part, &SearchLimits::default()).unwrap();
        assert!(best.value >= r.value);
    }

    #[test]
    fn two_transversals_are_too_few() {
        let names: Vec<Vec<String>> = (0..4).map(|b| vec![format!("x{b}"), format!("y{b}")]).collect();
        let m = GroundModel::uniform(names).unwrap();
        let ts = TransversalSystem::new(&m, vec![1, 2, 1, 2, 1, 2, 1, 2]).unwrap();
        let part = IndexedPartition::by_block(&m);
        let err = greedy_select(&m, &ts, &Family::All, &part, &q(1, 2), &SearchLimits::default()).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn thin_classes_are_rejected() {
        let m = GroundModel::uniform(vec![vec!["a", "b"], vec!["c"]]).unwrap();
        let ts = TransversalSystem::new(&m, vec![1, 2, 1]).unwrap();
        assert_eq!(ts.thin_classes(&m).unwrap(), vec![2]);
        let part = IndexedPartition::coarsest(&m);
        assert!(greedy_select(&m, &ts, &Family::All, &part, &q(1, 2), &SearchLimits::default()).is_err());
    }
}
