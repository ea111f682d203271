//! From an ε-filling family on `A` to a member whose covered parts carry
//! measure `> ε(η − η₁)`, by equipartitioning the disjointified covers and
//! pooling one point of `A` per piece.

use num_traits::ToPrimitive;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::family::Family;
use crate::filling::{is_filling, FillingOptions};
use crate::mcfilling::check_covers;
use crate::measure::{disjointify, GroundModel, MeasurableSet, PointId, PointSet};
use crate::partition::IndexedPartition;
use crate::rational::Rational;
use crate::search::SearchLimits;

#[derive(Clone, Debug, Default)]
pub struct PipelineOptions {
    /// Verify ε-filling on `A` for subsets up to this size before running.
    pub verify_filling: Option<usize>,
    pub search: SearchLimits,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum FillingStatus {
    Assumed,
    Verified { max_h: usize, value: Rational },
}

/// One equipartition piece `E_i^m` (blocks of the refined model) and the
/// point `t_(m,i)` pooled for it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Piece {
    pub part: usize,
    pub index: usize,
    pub point: PointId,
    pub blocks: MeasurableSet,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PipelineReport {
    pub eta: Rational,
    pub eta1: Rational,
    pub eta2: Rational,
    pub eta3: Rational,
    pub m0: usize,
    pub q: usize,
    pub theta: Rational,
    /// `(m, μ(B_m), p_m)` for every `m` with `μ(B_m) > 0`.
    pub alphas: Vec<(usize, Rational, usize)>,
    pub disjoint_covers: Vec<MeasurableSet>,
    pub refined_block_count: usize,
    pub pool: Vec<PointId>,
    pub member: Vec<PointId>,
    /// Pieces whose point lies in the member; their union has measure `|F|θ`.
    pub member_pieces: Vec<Piece>,
    pub filling: FillingStatus,
    pub value: Rational,
    pub bound: Rational,
}

fn int(x: &num_bigint::BigInt, what: &str) -> Result<usize> {
    x.to_usize()
        .ok_or_else(|| Error::resource(format!("{what} = {x}"), usize::MAX))
}

/// Runs the construction for the partition `(Ω_m)` with covers `A_m` (hulls
/// when `covers` is `None`). Parts are numbered from 0 in the report.
#[allow(clippy::too_many_arguments)]
pub fn filling_to_mc_pipeline(
    model: &GroundModel,
    a: &PointSet,
    family: &Family,
    epsilon: &Rational,
    eta1: &Rational,
    partition: &IndexedPartition,
    covers: Option<&[MeasurableSet]>,
    opts: &PipelineOptions,
) -> Result<PipelineReport> {
    if !epsilon.is_positive() || *epsilon > Rational::one() {
        return Err(Error::InvalidArgument(format!("epsilon {epsilon} outside (0, 1]")));
    }
    model.check_points(a)?;
    let partition = IndexedPartition::new(model, partition.parts().to_vec())?;
    let covers = match covers {
        Some(c) => c.to_vec(),
        None => partition.hulls(model)?,
    };
    check_covers(model, &partition, &covers)?;
    let eta = model.outer_measure(a)?;
    if !eta1.is_positive() || *eta1 >= eta {
        return Err(Error::InvalidArgument(format!(
            "eta1 {eta1} must lie strictly between 0 and the outer measure {eta} of A"
        )));
    }

    let filling = match opts.verify_filling {
        None => FillingStatus::Assumed,
        Some(max_h) => {
            let ids: Vec<u64> = a.iter().map(|p| p as u64).collect();
            let v = is_filling(family, &ids, epsilon, &FillingOptions::new(max_h))?;
            if !v.holds {
                return Err(Error::Precondition(format!(
                    "the family is not {epsilon}-filling on A: {:?}",
                    v.certificate
                )));
            }
            FillingStatus::Verified { max_h, value: v.value }
        }
    };

    let eta2 = eta1.div_int(2);
    let mut captured = PointSet::new();
    let mut m0 = 0;
    for (m, part) in partition.parts().iter().enumerate() {
        captured = captured.union(&part.intersection(a));
        if &eta - &model.outer_measure(&captured)? < eta2 {
            m0 = m + 1;
            break;
        }
    }
    if m0 == 0 {
        return Err(Error::Invariant("the parts do not exhaust A".into()));
    }
    let eta3 = (eta1 - &eta2).div_int(2 * m0);

    let b = disjointify(&covers[..m0]);
    let mut positive = Vec::new();
    for (m, bm) in b.iter().enumerate() {
        let mu = model.measure(bm)?;
        if mu.is_positive() {
            positive.push((m, mu));
        }
    }
    let least = positive
        .iter()
        .map(|(_, mu)| mu.clone())
        .min()
        .ok_or_else(|| Error::Invariant("no disjointified cover has positive measure".into()))?;
    let bar = eta3.recip().max(least.recip());
    let q = int(&bar.floor(), "q")? + 1;
    let theta = Rational::new(1, q as i64);
    let mut alphas = Vec::with_capacity(positive.len());
    for (m, mu) in &positive {
        let p = int(&mu.mul_int(q).ceil(), "p_m")? - 1;
        let alpha = theta.mul_int(p);
        if p == 0 || alpha >= *mu || alpha <= mu - &eta3 {
            return Err(Error::Invariant(format!(
                "alpha_{m} = {alpha} misses ({}, {mu})",
                mu - &eta3
            )));
        }
        alphas.push((*m, mu.clone(), p));
    }

    // One unit dividing θ and every block of ⋃B, so that equipartition never
    // meets a straddling block.
    let union_b: MeasurableSet = b.iter().flat_map(|s| s.iter()).collect();
    let mut unit = theta.clone();
    for blk in union_b.iter() {
        let mu = model.block_measure(blk);
        if mu.is_positive() {
            unit = unit.gcd(mu);
        }
    }
    let refinement = model.refine_to_unit(&union_b, &unit)?;
    let fine = &refinement.model;

    let mut pool = Vec::new();
    let mut pieces = Vec::new();
    for (m, _, p) in &alphas {
        let slots = fine.equipartition(&refinement.lift(&b[*m]), &theta)?;
        let points: Vec<PointId> = partition.parts()[*m].intersection(a).iter().take(*p).collect();
        if points.len() < *p {
            return Err(Error::Precondition(format!(
                "A meets part {m} in {} points, the construction needs {p}",
                points.len()
            )));
        }
        for (i, (&t, blocks)) in points.iter().zip(slots).enumerate() {
            pool.push(t);
            pieces.push(Piece {
                part: *m,
                index: i,
                point: t,
                blocks,
            });
        }
    }

    let ids: Vec<u64> = pool.iter().map(|&p| p as u64).collect();
    let chosen = family.max_cardinality_member(&ids, &opts.search)?;
    if Rational::from_integer(chosen.len() as i64) < epsilon.mul_int(ids.len()) {
        return Err(Error::Precondition(format!(
            "filling extraction failed: largest member inside H = {pool:?} has {} elements",
            chosen.len()
        )));
    }
    let member: Vec<PointId> = chosen.iter().map(|&p| p as usize).collect();
    let member_set: PointSet = member.iter().copied().collect();

    let member_pieces: Vec<Piece> = pieces.into_iter().filter(|pc| member_set.contains(pc.point)).collect();
    let piece_union: MeasurableSet = member_pieces.iter().flat_map(|pc| pc.blocks.iter()).collect();
    let piece_mass = fine.measure(&piece_union)?;
    if piece_mass != theta.mul_int(member.len()) {
        return Err(Error::Invariant(format!(
            "member pieces carry {piece_mass}, expected {} pieces of {theta}",
            member.len()
        )));
    }

    let mut hit = MeasurableSet::new();
    for (part, cover) in partition.parts().iter().zip(&covers) {
        if !part.is_disjoint(&member_set) {
            hit.extend(cover.iter());
        }
    }
    if !piece_union.is_subset(&refinement.lift(&hit)) {
        return Err(Error::Invariant(
            "a member piece leaves the covers it was cut from".into(),
        ));
    }
    let value = model.measure(&hit)?;
    let bound = epsilon * &(&eta - eta1);
    if value <= bound {
        return Err(Error::Invariant(format!(
            "covered measure {value} does not exceed {bound}"
        )));
    }

    Ok(PipelineReport {
        eta,
        eta1: eta1.clone(),
        eta2,
        eta3,
        m0,
        q,
        theta,
        alphas,
        disjoint_covers: b,
        refined_block_count: fine.block_count(),
        pool,
        member,
        member_pieces,
        filling,
        value,
        bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mcfilling::mc_value;
    use crate::rational::q;

    /// `blocks` uniform blocks, each holding `per` points.
    fn grid(blocks: usize, per: usize) -> GroundModel {
        GroundModel::uniform(
            (0..blocks)
                .map(|b| (0..per).map(|i| format!("p{b}_{i}")).collect())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn all_subsets_give_nearly_full_measure() {
        let m = grid(3, 40);
        let a = m.all_points();
        let part = IndexedPartition::by_block(&m);
        let r = filling_to_mc_pipeline(
            &m,
            &a,
            &Family::All,
            &q(1, 1),
            &q(1, 10),
            &part,
            None,
            &PipelineOptions::default(),
        )
        .unwrap();
        assert_eq!(r.eta, q(1, 1));
        assert!(r.value > q(9, 10));
        assert_eq!(r.filling, FillingStatus::Assumed);
        assert!(
            mc_value(&m, &Family::All, &part, &SearchLimits::default())
                .unwrap()
                .value
                >= r.value
        );
    }

    #[test]
    fn coarsest_partition() {
        let m = grid(4, 12);
        let a = m.all_points();
        let part = IndexedPartition::coarsest(&m);
        let fam = Family::Bounded(1);
        let r = filling_to_mc_pipeline(
            &m,
            &a,
            &fam,
            &q(1, 48),
            &q(1, 2),
            &part,
            None,
            &PipelineOptions::default(),
        )
        .unwrap();
        assert_eq!(r.m0, 1);
        assert_eq!(r.value, q(1, 1));
        assert_eq!(r.member.len(), 1);
    }

    #[test]
    fn singletons_with_bounded_family() {
        // size ≤ 1 on 4·k points is 1/(4k)-filling; use k large enough for the pool
        let m = grid(4, 30);
        let a = m.all_points();
        let part = IndexedPartition::by_block(&m);
        let fam = Family::Bounded(30);
        let eps = q(1, 4);
        let opts = PipelineOptions {
            verify_filling: Some(2),
            ..PipelineOptions::default()
        };
        let r = filling_to_mc_pipeline(&m, &a, &fam, &eps, &q(1, 2), &part, None, &opts).unwrap();
        assert!(r.value > &eps * &(q(1, 1) - q(1, 2)));
        assert!(matches!(r.filling, FillingStatus::Verified { .. }));
        let replay = mc_value(&m, &fam, &part, &SearchLimits::default()).unwrap();
        assert!(replay.value >= r.value);
    }

    #[test]
    fn precondition_errors() {
        let m = grid(4, 2);
        let a = m.all_points();
        let part = IndexedPartition::by_block(&m);
        let err = filling_to_mc_pipeline(
            &m,
            &a,
            &Family::All,
            &q(1, 2),
            &q(1, 10),
            &part,
            None,
            &PipelineOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Precondition(_)), "{err}");
        assert!(filling_to_mc_pipeline(
            &m,
            &a,
            &Family::All,
            &q(1, 2),
            &q(1, 1),
            &part,
            None,
            &PipelineOptions::default()
        )
        .is_err());
        let opts = PipelineOptions {
            verify_filling: Some(3),
            ..PipelineOptions::default()
        };
        assert!(filling_to_mc_pipeline(&m, &a, &Family::Bounded(1), &q(1, 2), &q(1, 10), &part, None, &opts).is_err());
    }
}
