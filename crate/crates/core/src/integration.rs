//! Riemann sums of indicator-valued functions and the brute-force
//! MC-integrability decision on block models.
//!
//! An [`IndicatorFunctionModel`] lists, for each norming functional `λ`, the
//! set `C_λ` where `λ∘f = 1` (and `0` elsewhere). The norm of a Riemann sum
//! `Σ μ(E_i) f(t_i)` over disjoint `E_i` is then `max_λ μ(⋃{E_i : t_i ∈ C_λ})`.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::Family;
use crate::mcfilling::check_covers;
use crate::measure::{disjointify, GroundModel, MeasurableSet, PointId, PointSet};
use crate::partition::{all_partitions, IndexedPartition};
use crate::rational::Rational;
use crate::search::{max_member_weight, SearchLimits, WeightedSelection};
use crate::verdict::{Certificate, Verdict};

/// Pairwise disjoint measurable pieces, each with a tag point.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedFamily {
    pieces: Vec<(MeasurableSet, PointId)>,
}

impl TaggedFamily {
    pub fn new(model: &GroundModel, pieces: Vec<(MeasurableSet, PointId)>) -> Result<Self> {
        let mut seen = MeasurableSet::new();
        for (i, (e, t)) in pieces.iter().enumerate() {
            model.check_blocks(e)?;
            model.check_points(&PointSet::from([*t]))?;
            if !e.is_disjoint(&seen) {
                return Err(Error::InvalidArgument(format!("piece {i} overlaps an earlier piece")));
            }
            seen.extend(e.iter());
        }
        Ok(TaggedFamily { pieces })
    }

    pub fn empty() -> Self {
        TaggedFamily::default()
    }

    pub fn pieces(&self) -> &[(MeasurableSet, PointId)] {
        &self.pieces
    }

    pub fn union(&self) -> MeasurableSet {
        self.pieces.iter().flat_map(|(e, _)| e.iter()).collect()
    }

    /// `w(t) = Σ{μ(E_i) : t_i = t}`.
    pub fn tag_weights(&self, model: &GroundModel) -> Result<BTreeMap<PointId, Rational>> {
        let mut w: BTreeMap<PointId, Rational> = BTreeMap::new();
        for (e, t) in &self.pieces {
            *w.entry(*t).or_insert_with(Rational::zero) += model.measure(e)?;
        }
        Ok(w)
    }
}

/// The sets `C_λ`, keyed by functional name. Functionals are indexed in name
/// order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndicatorFunctionModel {
    pub functionals: BTreeMap<String, PointSet>,
}

impl IndicatorFunctionModel {
    pub fn new(model: &GroundModel, functionals: BTreeMap<String, PointSet>) -> Result<Self> {
        for s in functionals.values() {
            model.check_points(s)?;
        }
        Ok(IndicatorFunctionModel { functionals })
    }

    pub fn sets(&self) -> Vec<&PointSet> {
        self.functionals.values().collect()
    }

    pub fn name(&self, index: usize) -> Option<&str> {
        self.functionals.keys().nth(index).map(String::as_str)
    }

    /// `⋃_λ [C_λ]^{<ω}` as an explicit family on point ids.
    pub fn generated_family(&self) -> Family {
        let mut gens: Vec<Vec<u64>> = self
            .functionals
            .values()
            .map(|s| s.iter().map(|p| p as u64).collect())
            .collect();
        gens.push(Vec::new());
        Family::explicit(gens)
    }
}

/// `max_λ μ(⋃{E_i : t_i ∈ C_λ})`; the selection lists the tags counted by a
/// maximizing functional (the first in name order). No functionals give 0.
pub fn riemann_norm(
    model: &GroundModel,
    fm: &IndicatorFunctionModel,
    tagged: &TaggedFamily,
) -> Result<(WeightedSelection, Option<usize>)> {
    let mut best = WeightedSelection {
        value: Rational::zero(),
        member: Vec::new(),
    };
    let mut which = None;
    for (i, c) in fm.functionals.values().enumerate() {
        let mut union = MeasurableSet::new();
        let mut tags = Vec::new();
        for (e, t) in tagged.pieces() {
            if c.contains(*t) {
                union.extend(e.iter());
                tags.push(*t as u64);
            }
        }
        let v = model.measure(&union)?;
        if which.is_none() || v > best.value {
            tags.sort_unstable();
            tags.dedup();
            best = WeightedSelection { value: v, member: tags };
            which = Some(i);
        }
    }
    Ok((best, which))
}

/// The norm when the functionals are `δ_F` for the members `F` of a
/// hereditary family: a weighted member search with weights `w(t)`.
pub fn riemann_norm_family(
    model: &GroundModel,
    family: &Family,
    tagged: &TaggedFamily,
    limits: &SearchLimits,
) -> Result<WeightedSelection> {
    let w = tagged.tag_weights(model)?;
    let tags: Vec<u64> = w.keys().map(|&t| t as u64).collect();
    max_member_weight(family, &tags, |t| w[&(t as usize)].clone(), limits)
}

/// The functionals `δ_F`, one per member `F` of `family` inside the model's
/// points, named by their point names.
pub fn build_indicator_model(model: &GroundModel, family: &Family, cap: usize) -> Result<IndicatorFunctionModel> {
    let all: Vec<u64> = (0..model.point_count() as u64).collect();
    let mut functionals = BTreeMap::new();
    for f in family.members_within(&all, cap)? {
        let set: PointSet = f.iter().map(|&p| p as usize).collect();
        let name = format!("{{{}}}", model.names_of(&set).join(","));
        functionals.insert(name, set);
    }
    Ok(IndicatorFunctionModel { functionals })
}

/// `f(t) = e_γ` for `t ∈ C_γ`: one functional per class.
pub fn c0_model_from_partition(model: &GroundModel, classes: &[(String, PointSet)]) -> Result<IndicatorFunctionModel> {
    IndexedPartition::new(model, classes.iter().map(|(_, s)| s.clone()).collect())?;
    let mut functionals = BTreeMap::new();
    for (name, set) in classes {
        if functionals.insert(name.clone(), set.clone()).is_some() {
            return Err(Error::InvalidArgument(format!("duplicate class name {name:?}")));
        }
    }
    Ok(IndicatorFunctionModel { functionals })
}

/// Inverse of [`c0_model_from_partition`]; the sets must partition the points.
pub fn partition_from_c0_model(model: &GroundModel, fm: &IndicatorFunctionModel) -> Result<Vec<(String, PointSet)>> {
    IndexedPartition::new(model, fm.functionals.values().cloned().collect())?;
    Ok(fm.functionals.iter().map(|(n, s)| (n.clone(), s.clone())).collect())
}

#[derive(Clone, Debug)]
pub struct DecideOptions {
    pub max_points: usize,
    /// Run the tagged-family game even when some `C_λ` has positive outer
    /// measure. The equivalence with MC-filling does not need null sets.
    pub allow_nonnull: bool,
}

impl Default for DecideOptions {
    fn default() -> Self {
        DecideOptions {
            max_points: 10,
            allow_nonnull: false,
        }
    }
}

/// Best tagged family over the covers for one partition: for each functional
/// the parts meeting `C_λ` are disjointified first and tagged inside `C_λ`,
/// which collects `μ(⋃{A_m : Ω_m ∩ C_λ ≠ ∅})`. Every cover is used, so the
/// family is `0`-thick.
fn best_tagged(
    model: &GroundModel,
    fm: &IndicatorFunctionModel,
    partition: &IndexedPartition,
    covers: &[MeasurableSet],
) -> Result<(TaggedFamily, Option<usize>, Rational)> {
    let parts = partition.parts();
    let build = |c: Option<&PointSet>| -> Result<TaggedFamily> {
        let meets = |m: usize| c.is_some_and(|c| !parts[m].is_disjoint(c));
        let mut order: Vec<usize> = (0..parts.len()).filter(|&m| meets(m)).collect();
        order.extend((0..parts.len()).filter(|&m| !meets(m)));
        let ordered: Vec<MeasurableSet> = order.iter().map(|&m| covers[m].clone()).collect();
        let mut pieces = Vec::new();
        for (&m, e) in order.iter().zip(disjointify(&ordered)) {
            if e.is_empty() {
                continue;
            }
            let tag = c
                .and_then(|c| parts[m].intersection(c).iter().next())
                .or_else(|| parts[m].iter().next())
                .ok_or_else(|| Error::Invariant(format!("cover {m} of an empty part is not empty")))?;
            pieces.push((e, tag));
        }
        TaggedFamily::new(model, pieces)
    };
    let sets = fm.sets();
    if sets.is_empty() {
        return Ok((build(None)?, None, Rational::zero()));
    }
    let mut best: Option<(TaggedFamily, usize, Rational)> = None;
    for c in sets {
        let t = build(Some(c))?;
        let (norm, which) = riemann_norm(model, fm, &t)?;
        let which = which.expect("functionals exist");
        if best.as_ref().is_none_or(|(_, _, v)| norm.value > *v) {
            best = Some((t, which, norm.value));
        }
    }
    let (t, i, v) = best.expect("functionals exist");
    Ok((t, Some(i), v))
}

/// Decides, at `ε`, whether every partition with covers admits a tagged
/// family whose Riemann sum has norm `> ε`, i.e. whether the function fails
/// to be MC-integrable with integral 0 at tolerance `ε`. The verdict value is
/// the minimum over partitions of the best norm.
///
/// Covers are swept at the hulls (larger covers only raise norms), and only
/// families covering everything are searched (adding pieces never lowers a
/// norm), which removes the thickness parameter exactly.
pub fn decide_mc_integrability(
    model: &GroundModel,
    fm: &IndicatorFunctionModel,
    epsilon: &Rational,
    opts: &DecideOptions,
) -> Result<Verdict> {
    if !epsilon.is_positive() || *epsilon >= Rational::one() {
        return Err(Error::InvalidArgument(format!("epsilon {epsilon} outside (0, 1)")));
    }
    for (name, c) in &fm.functionals {
        model.check_points(c)?;
        if !opts.allow_nonnull && model.outer_measure(c)?.is_positive() {
            return Err(Error::Precondition(format!(
                "functional {name} is not null: outer measure {}",
                model.outer_measure(c)?
            )));
        }
    }
    if let Some(b) =
        (0..model.block_count()).find(|&b| model.block_measure(b).is_positive() && model.blocks()[b].points.is_empty())
    {
        return Err(Error::Precondition(format!(
            "block {b} has positive measure and no points, so no thick tagged family exists"
        )));
    }
    let partitions = all_partitions(model, opts.max_points)?;
    type Best = (TaggedFamily, Option<usize>, Rational, Vec<MeasurableSet>);
    let results: Vec<Result<Best>> = partitions
        .par_iter()
        .map(|p| {
            let hulls = p.hulls(model)?;
            let (t, i, v) = best_tagged(model, fm, p, &hulls)?;
            Ok((t, i, v, hulls))
        })
        .collect();
    let mut best: Option<(usize, Best)> = None;
    for (k, r) in results.into_iter().enumerate() {
        let r = r?;
        if best.as_ref().is_none_or(|(_, b)| r.2 < b.2) {
            best = Some((k, r));
        }
    }
    let (k, (tagged, functional, value, covers)) = best.expect("at least one partition");
    Ok(Verdict {
        holds: value > *epsilon,
        epsilon: epsilon.clone(),
        value: value.clone(),
        certificate: Certificate::Tagged {
            parts: partitions[k].parts().to_vec(),
            covers,
            pieces: tagged.pieces,
            functional,
            value,
        },
        swept: partitions.len(),
        caps: vec![("max-points".into(), opts.max_points)],
    })
}

/// Recomputes a tagged certificate: the tagged family must respect the
/// partition and covers and be `0`-thick, its norm must equal the claimed
/// value, and no tagged family may beat it (closed form per functional).
pub fn replay_tagged_certificate(
    model: &GroundModel,
    fm: &IndicatorFunctionModel,
    cert: &Certificate,
) -> Result<Rational> {
    let Certificate::Tagged {
        parts,
        covers,
        pieces,
        value,
        ..
    } = cert
    else {
        return Err(Error::InvalidArgument("not a tagged certificate".into()));
    };
    let partition = IndexedPartition::new(model, parts.clone())?;
    check_covers(model, &partition, covers)?;
    let tagged = TaggedFamily::new(model, pieces.clone())?;
    for (e, t) in tagged.pieces() {
        let m = partition.part_of(*t).expect("validated partition");
        if !e.is_subset(&covers[m]) {
            return Err(Error::Invariant(format!("a piece tagged {t} leaves cover {m}")));
        }
    }
    if !model.is_eta_thick(&[tagged.union()], &Rational::zero())? {
        return Err(Error::Invariant("the tagged family does not cover the model".into()));
    }
    let (norm, _) = riemann_norm(model, fm, &tagged)?;
    if norm.value != *value {
        return Err(Error::Invariant(format!(
            "tagged family has norm {}, certificate claims {value}",
            norm.value
        )));
    }
    let mut best = Rational::zero();
    for c in fm.sets() {
        let mut hit = MeasurableSet::new();
        for (part, cover) in partition.parts().iter().zip(covers) {
            if !part.is_disjoint(c) {
                hit.extend(cover.iter());
            }
        }
        best = best.max(model.measure(&hit)?);
    }
    if best != norm.value {
        return Err(Error::Invariant(format!(
            "a tagged family reaches {best} on the certificate partition, above the claimed {value}"
        )));
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mcfilling::{check_mc_filling, McOptions};
    use crate::rational::q;

    fn two() -> GroundModel {
        GroundModel::uniform(vec![vec!["a"], vec!["b"]]).unwrap()
    }

    fn halves() -> TaggedFamily {
        TaggedFamily::new(
            &two(),
            vec![(MeasurableSet::from([0]), 0), (MeasurableSet::from([1]), 1)],
        )
        .unwrap()
    }

    #[test]
    fn norm_examples() {
        let m = two();
        let fm = build_indicator_model(&m, &Family::explicit([[0u64, 1]]), 100).unwrap();
        assert_eq!(
            riemann_norm(&m, &fm, &TaggedFamily::empty()).unwrap().0.value,
            Rational::zero()
        );
        assert_eq!(riemann_norm(&m, &fm, &halves()).unwrap().0.value, q(1, 1));
        let limits = SearchLimits::default();
        assert_eq!(
            riemann_norm_family(&m, &Family::explicit([[0u64, 1]]), &halves(), &limits)
                .unwrap()
                .value,
            q(1, 1)
        );
        let single = build_indicator_model(&m, &Family::Bounded(1), 100).unwrap();
        assert_eq!(riemann_norm(&m, &single, &halves()).unwrap().0.value, q(1, 2));
        assert_eq!(
            riemann_norm_family(&m, &Family::Bounded(1), &halves(), &limits)
                .unwrap()
                .value,
            q(1, 2)
        );
    }

    #[test]
    fn tagged_validation() {
        let m = two();
        assert!(TaggedFamily::new(
            &m,
            vec![(MeasurableSet::from([0]), 0), (MeasurableSet::from([0, 1]), 1)]
        )
        .is_err());
        assert!(TaggedFamily::new(&m, vec![(MeasurableSet::from([5]), 0)]).is_err());
        assert!(TaggedFamily::new(&m, vec![(MeasurableSet::from([0]), 9)]).is_err());
    }

    #[test]
    fn indicator_models() {
        let m = two();
        let fm = build_indicator_model(&m, &Family::explicit([Vec::<u64>::new()]), 10).unwrap();
        assert!(fm.sets().iter().all(|s| s.is_empty()));
        let fm = build_indicator_model(&m, &Family::explicit([[0u64, 1]]), 10).unwrap();
        let names: Vec<&String> = fm.functionals.keys().collect();
        assert_eq!(names, ["{a,b}", "{a}", "{b}", "{}"]);

        let classes = vec![
            ("e0".to_string(), PointSet::from([0])),
            ("e1".to_string(), PointSet::from([1])),
        ];
        let c0 = c0_model_from_partition(&m, &classes).unwrap();
        assert_eq!(partition_from_c0_model(&m, &c0).unwrap(), classes);
        assert!(c0_model_from_partition(&m, &classes[..1]).is_err());
    }

    #[test]
    fn two_point_threshold() {
        // C = {a}: the tagged game has value 1/2, like the MC-filling check
        // of the family {∅, {a}}.
        let m = two();
        let fm = IndicatorFunctionModel::new(&m, BTreeMap::from([("a".to_string(), PointSet::from([0]))])).unwrap();
        assert!(decide_mc_integrability(&m, &fm, &q(1, 4), &DecideOptions::default()).is_err());
        let opts = DecideOptions {
            allow_nonnull: true,
            ..DecideOptions::default()
        };
        let v = decide_mc_integrability(&m, &fm, &q(1, 2), &opts).unwrap();
        assert!(!v.holds);
        assert_eq!(v.value, q(1, 2));
        assert_eq!(replay_tagged_certificate(&m, &fm, &v.certificate).unwrap(), q(1, 2));
        let mc = check_mc_filling(&m, &fm.generated_family(), &q(1, 2), &McOptions::default()).unwrap();
        assert_eq!(mc.value, v.value);
        assert!(decide_mc_integrability(&m, &fm, &q(1, 3), &opts).unwrap().holds);
    }

    #[test]
    fn null_functionals() {
        // zero-measure block holding the support of every functional
        let m = GroundModel::new(vec![(q(1, 1), vec!["a", "b"]), (q(0, 1), vec!["z"])]).unwrap();
        let empty = IndicatorFunctionModel::new(&m, BTreeMap::from([("0".to_string(), PointSet::new())])).unwrap();
        let v = decide_mc_integrability(&m, &empty, &q(1, 100), &DecideOptions::default()).unwrap();
        assert!(!v.holds);
        assert_eq!(v.value, Rational::zero());
        let z = IndicatorFunctionModel::new(&m, BTreeMap::from([("z".to_string(), PointSet::from([2]))])).unwrap();
        let v = decide_mc_integrability(&m, &z, &q(1, 2), &DecideOptions::default()).unwrap();
        // putting z in a part of its own leaves its functional nothing to see
        assert!(!v.holds);
        assert_eq!(v.value, Rational::zero());
        assert_eq!(
            replay_tagged_certificate(&m, &z, &v.certificate).unwrap(),
            Rational::zero()
        );
    }

    #[test]
    fn empty_positive_block_is_rejected() {
        let m = GroundModel::uniform(vec![vec!["a"], vec![]]).unwrap();
        let fm = IndicatorFunctionModel::default();
        assert!(matches!(
            decide_mc_integrability(&m, &fm, &q(1, 2), &DecideOptions::default()),
            Err(Error::Precondition(_))
        ));
    }
}
