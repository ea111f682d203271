//! Selection through part signatures: classes grouped by the set of parts
//! they meet.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::{GroundModel, PointId, PointSet};
use crate::partition::IndexedPartition;
use crate::rational::Rational;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Signature {
    pub parts: Vec<usize>,
    pub classes: Vec<usize>,
    /// `μ*(⋃_{γ ∈ Γ_A} C_γ)`.
    pub mass: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GammaSelection {
    pub signatures: Vec<Signature>,
    /// The chosen signature `A` (also used as `B`).
    pub chosen: Vec<usize>,
    pub class: usize,
    pub member: Vec<PointId>,
    /// `μ*(⋃{Ω_m : F ∩ Ω_m ≠ ∅})`.
    pub value: Rational,
}

/// Groups the classes `C_γ` by `A = {m : C_γ ∩ Ω_m ≠ ∅}`, takes the `A` whose
/// classes have the largest outer measure (`> ε` is required; ties go to the
/// lexicographically least `A`), and returns `F ⊆ C_γ` for the first `γ` of
/// that group, with one point in each part of `A`.
pub fn gamma_select(
    model: &GroundModel,
    classes: &[PointSet],
    partition: &IndexedPartition,
    epsilon: &Rational,
) -> Result<GammaSelection> {
    let partition = IndexedPartition::new(model, partition.parts().to_vec())?;
    let mut owner = vec![None; model.point_count()];
    for (g, c) in classes.iter().enumerate() {
        model.check_points(c)?;
        for p in c.iter() {
            if let Some(h) = owner[p].replace(g) {
                return Err(Error::InvalidArgument(format!(
                    "point {} lies in classes {h} and {g}",
                    model.name(p)
                )));
            }
        }
    }
    let parts = partition.parts();
    let mut groups: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    for (g, c) in classes.iter().enumerate() {
        if c.is_empty() {
            continue;
        }
        let sig: Vec<usize> = (0..parts.len()).filter(|&m| !parts[m].is_disjoint(c)).collect();
        groups.entry(sig).or_default().push(g);
    }
    let mut signatures = Vec::with_capacity(groups.len());
    for (sig, gs) in groups {
        let union: PointSet = gs.iter().flat_map(|&g| classes[g].iter()).collect();
        signatures.push(Signature {
            parts: sig,
            classes: gs,
            mass: model.outer_measure(&union)?,
        });
    }
    let best = signatures
        .iter()
        .filter(|s| s.mass > *epsilon)
        .fold(None::<&Signature>, |acc, s| match acc {
            Some(a) if a.mass >= s.mass => Some(a),
            _ => Some(s),
        })
        .ok_or_else(|| {
            Error::Precondition(format!(
                "hypothesis fails: no signature class union has outer measure above {epsilon}"
            ))
        })?;
    let class = best.classes[0];
    let member: Vec<PointId> = best
        .parts
        .iter()
        .map(|&m| {
            classes[class]
                .intersection(&parts[m])
                .iter()
                .next()
                .expect("signature part")
        })
        .collect();
    let hit: PointSet = best.parts.iter().flat_map(|&m| parts[m].iter()).collect();
    let value = model.outer_measure(&hit)?;
    if value < best.mass {
        return Err(Error::Invariant(format!(
            "parts of the signature carry {value}, less than its classes {}",
            best.mass
        )));
    }
    let mut member = member;
    member.sort_unstable();
    Ok(GammaSelection {
        chosen: best.parts.clone(),
        class,
        member,
        value,
        signatures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::Family;
    use crate::mcfilling::mc_value;
    use crate::rational::q;
    use crate::search::SearchLimits;

    #[test]
    fn one_class_everywhere() {
        let m = GroundModel::uniform(vec![vec!["a", "x"], vec!["b"], vec!["c"]]).unwrap();
        let classes = vec![PointSet::from([0, 2, 3]), PointSet::from([1])];
        let part = IndexedPartition::by_block(&m);
        let s = gamma_select(&m, &classes, &part, &q(1, 2)).unwrap();
        assert_eq!(s.chosen, vec![0, 1, 2]);
        assert_eq!(s.class, 0);
        assert_eq!(s.member, vec![0, 2, 3]);
        assert_eq!(s.value, q(1, 1));
    }

    #[test]
    fn signatures_decide() {
        // class 0 meets parts {0,1}, class 1 meets {2}, class 2 meets {0}
        let m = GroundModel::new(vec![
            (q(1, 4), vec!["a", "d"]),
            (q(1, 4), vec!["b"]),
            (q(1, 2), vec!["c", "e"]),
        ])
        .unwrap();
        let part = IndexedPartition::new(
            &m,
            vec![PointSet::from([0, 1]), PointSet::from([2]), PointSet::from([3, 4])],
        )
        .unwrap();
        let classes = vec![PointSet::from([0, 2]), PointSet::from([3, 4]), PointSet::from([1])];
        let s = gamma_select(&m, &classes, &part, &q(1, 3)).unwrap();
        assert_eq!(s.signatures.len(), 3);
        // [0,1]: μ*({a,b}) = 1/2 ties with [2]: μ*({c,e}) = 1/2
        assert_eq!(s.chosen, vec![0, 1]);
        assert_eq!(s.member, vec![0, 2]);
        let fam = Family::partition(
            &classes
                .iter()
                .map(|c| c.iter().map(|p| p as u64).collect())
                .collect::<Vec<_>>(),
        )
        .unwrap();
        assert!(mc_value(&m, &fam, &part, &SearchLimits::default()).unwrap().value >= s.value);
        assert!(gamma_select(&m, &classes, &part, &q(1, 2)).is_err());
    }
}
