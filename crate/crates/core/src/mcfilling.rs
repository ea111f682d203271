//! MC-filling as an exact minimax: the adversary picks a partition (and
//! covers), the other player picks a member `F`; the payoff is the measure of
//! the covers of the parts `F` meets.

use fixedbitset::FixedBitSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::family::{Family, Membership};
use crate::measure::{GroundModel, MeasurableSet, PointSet, Units};
use crate::partition::{all_partitions, IndexedPartition};
use crate::rational::Rational;
use crate::search::{max_member_weight_capped, SearchLimits, WeightedSelection};
use crate::verdict::{Certificate, Verdict};

#[derive(Clone, Debug)]
pub struct McOptions {
    /// Largest point count for which all partitions are swept.
    pub max_points: usize,
    pub search: SearchLimits,
}

impl Default for McOptions {
    fn default() -> Self {
        McOptions {
            max_points: 10,
            search: SearchLimits::default(),
        }
    }
}

fn block_mask(model: &GroundModel, e: &MeasurableSet) -> FixedBitSet {
    let mut m = FixedBitSet::with_capacity(model.block_count());
    m.extend(e.iter());
    m
}

/// Members meeting each part at most once; enough for the maximum because the
/// payoff only depends on which parts are met.
struct OnePerPart<'a> {
    family: &'a Family,
    part_of: &'a [usize],
}

impl Membership for OnePerPart<'_> {
    fn contains(&self, set: &[u64]) -> bool {
        let mut parts: Vec<usize> = set.iter().map(|&p| self.part_of[p as usize]).collect();
        parts.sort_unstable();
        parts.windows(2).all(|w| w[0] != w[1]) && self.family.contains(set)
    }
}

/// Measures block masks during the part search: exact integers over a
/// common denominator when the model has one that fits, rationals otherwise.
trait Meter {
    type W: Clone + Ord;
    fn zero(&self) -> Self::W;
    fn measure<I: Iterator<Item = usize>>(&self, blocks: I) -> Self::W;
    fn rational(&self, w: &Self::W) -> Rational;
}

struct UnitMeter<'a>(&'a Units);

impl Meter for UnitMeter<'_> {
    type W = u64;
    fn zero(&self) -> u64 {
        0
    }
    fn measure<I: Iterator<Item = usize>>(&self, blocks: I) -> u64 {
        // the units of all blocks sum to `scale`, so this cannot overflow
        blocks.map(|b| self.0.per_block[b]).sum()
    }
    fn rational(&self, w: &u64) -> Rational {
        Rational::from_integer(*w as i64).div_int(self.0.scale as usize)
    }
}

struct RationalMeter<'a>(&'a GroundModel);

impl Meter for RationalMeter<'_> {
    type W = Rational;
    fn zero(&self) -> Rational {
        Rational::zero()
    }
    fn measure<I: Iterator<Item = usize>>(&self, blocks: I) -> Rational {
        blocks.map(|b| self.0.block_measure(b)).sum()
    }
    fn rational(&self, w: &Rational) -> Rational {
        w.clone()
    }
}

struct PartSearch<'a, M: Meter> {
    meter: M,
    family: &'a Family,
    parts: Vec<Vec<u64>>,
    masks: Vec<FixedBitSet>,
    reach: Vec<FixedBitSet>,
    target: M::W,
    limits: &'a SearchLimits,
    nodes: usize,
    best_value: M::W,
    best_member: Vec<u64>,
    current: Vec<u64>,
}

impl<M: Meter> PartSearch<'_, M> {
    /// Returns `true` once the best value reaches the measure of all covers.
    fn run(&mut self, i: usize, covered: &FixedBitSet, value: &M::W) -> Result<bool> {
        self.nodes += 1;
        if self.nodes > self.limits.max_nodes {
            return Err(Error::resource("part search nodes", self.limits.max_nodes));
        }
        if *value > self.best_value {
            self.best_value = value.clone();
            self.best_member.clone_from(&self.current);
            self.best_member.sort_unstable();
            if self.best_value == self.target {
                return Ok(true);
            }
        }
        if i == self.parts.len() {
            return Ok(false);
        }
        if self.meter.measure(covered.union(&self.reach[i])) <= self.best_value {
            return Ok(false);
        }
        if !self.masks[i].is_subset(covered) {
            let mut next = covered.clone();
            next.union_with(&self.masks[i]);
            let next_value = self.meter.measure(next.ones());
            for k in 0..self.parts[i].len() {
                self.current.push(self.parts[i][k]);
                if self.family.contains(&self.current) && self.run(i + 1, &next, &next_value)? {
                    return Ok(true);
                }
                self.current.pop();
            }
        }
        self.run(i + 1, covered, value)
    }
}

fn part_search<M: Meter>(
    meter: M,
    family: &Family,
    parts: Vec<Vec<u64>>,
    masks: Vec<FixedBitSet>,
    reach: Vec<FixedBitSet>,
    limits: &SearchLimits,
    blocks: usize,
) -> Result<WeightedSelection> {
    let mut search = PartSearch {
        target: meter.measure(reach[0].ones()),
        best_value: meter.zero(),
        meter,
        family,
        parts,
        masks,
        reach,
        limits,
        nodes: 0,
        best_member: Vec::new(),
        current: Vec::new(),
    };
    let empty = FixedBitSet::with_capacity(blocks);
    let zero = search.meter.zero();
    search.run(0, &empty, &zero)?;
    Ok(WeightedSelection {
        value: search.meter.rational(&search.best_value),
        member: search.best_member,
    })
}

pub(crate) fn check_covers(model: &GroundModel, partition: &IndexedPartition, covers: &[MeasurableSet]) -> Result<()> {
    if covers.len() != partition.len() {
        return Err(Error::InvalidArgument(format!(
            "{} covers for {} parts",
            covers.len(),
            partition.len()
        )));
    }
    for (i, (part, cover)) in partition.parts().iter().zip(covers).enumerate() {
        model.check_blocks(cover)?;
        if !model.hull(part)?.is_subset(cover) {
            return Err(Error::InvalidArgument(format!("cover {i} does not contain its part")));
        }
    }
    Ok(())
}

/// `max_F μ(⋃{A_m : F ∩ Ω_m ≠ ∅})` for arbitrary covers `A_m ⊇ Ω_m`, by a
/// part-by-part search that picks at most one point per part.
pub fn mc_value_with_covers(
    model: &GroundModel,
    family: &Family,
    partition: &IndexedPartition,
    covers: &[MeasurableSet],
    limits: &SearchLimits,
) -> Result<WeightedSelection> {
    check_covers(model, partition, covers)?;
    if !family.is_nonempty() {
        return Err(Error::InvalidFamily("the empty family has no members".into()));
    }
    let parts: Vec<Vec<u64>> = partition
        .parts()
        .iter()
        .map(|p| p.iter().map(|x| x as u64).collect())
        .collect();
    let masks: Vec<FixedBitSet> = covers.iter().map(|c| block_mask(model, c)).collect();
    let mut reach = vec![FixedBitSet::with_capacity(model.block_count()); masks.len() + 1];
    for i in (0..masks.len()).rev() {
        let mut r = reach[i + 1].clone();
        if !parts[i].is_empty() {
            r.union_with(&masks[i]);
        }
        reach[i] = r;
    }
    match model.units() {
        Some(units) => part_search(
            UnitMeter(units),
            family,
            parts,
            masks,
            reach,
            limits,
            model.block_count(),
        ),
        None => part_search(
            RationalMeter(model),
            family,
            parts,
            masks,
            reach,
            limits,
            model.block_count(),
        ),
    }
}

/// `max_{F ∈ 𝓕} μ*(⋃{Ω_m : F ∩ Ω_m ≠ ∅})`.
///
/// When the parts have pairwise disjoint hulls the payoff is additive, and
/// the problem is a weighted member search with weight `μ(hull(Ω_m))` on
/// every point of `Ω_m`. Otherwise the general part search runs on the hulls.
pub fn mc_value(
    model: &GroundModel,
    family: &Family,
    partition: &IndexedPartition,
    limits: &SearchLimits,
) -> Result<WeightedSelection> {
    let hulls = partition.hulls(model)?;
    let mut seen = MeasurableSet::new();
    let mut disjoint = true;
    for h in &hulls {
        disjoint &= h.is_disjoint(&seen);
        seen.extend(h.iter());
    }
    if !disjoint {
        return mc_value_with_covers(model, family, partition, &hulls, limits);
    }
    if !family.is_nonempty() {
        return Err(Error::InvalidFamily("the empty family has no members".into()));
    }
    let part_of = partition.labels(model.point_count());
    let weights: Vec<Rational> = hulls.iter().map(|h| model.measure(h)).collect::<Result<_>>()?;
    let pool: Vec<u64> = (0..model.point_count())
        .filter(|&p| weights[part_of[p]].is_positive())
        .map(|p| p as u64)
        .collect();
    let wrapped = OnePerPart {
        family,
        part_of: &part_of,
    };
    let pruned = SearchLimits {
        bound_pruning: true,
        ..limits.clone()
    };
    let ceiling = model.measure(&seen)?;
    max_member_weight_capped(
        &wrapped,
        &pool,
        |p| weights[part_of[p as usize]].clone(),
        Some(ceiling),
        &pruned,
    )
}

fn check_epsilon(epsilon: &Rational) -> Result<()> {
    if !epsilon.is_positive() || *epsilon >= Rational::one() {
        return Err(Error::InvalidArgument(format!("epsilon {epsilon} outside (0, 1)")));
    }
    Ok(())
}

fn sweep<F>(model: &GroundModel, epsilon: &Rational, opts: &McOptions, with_covers: bool, eval: F) -> Result<Verdict>
where
    F: Fn(&IndexedPartition, &[MeasurableSet]) -> Result<WeightedSelection> + Sync,
{
    check_epsilon(epsilon)?;
    let partitions = all_partitions(model, opts.max_points)?;
    let values: Vec<Result<(WeightedSelection, Vec<MeasurableSet>)>> = partitions
        .par_iter()
        .map(|p| {
            let hulls = p.hulls(model)?;
            Ok((eval(p, &hulls)?, hulls))
        })
        .collect();
    let mut best: Option<(usize, WeightedSelection, Vec<MeasurableSet>)> = None;
    for (i, r) in values.into_iter().enumerate() {
        let (sel, hulls) = r?;
        if best.as_ref().is_none_or(|(_, b, _)| sel.value < b.value) {
            best = Some((i, sel, hulls));
        }
    }
    let (index, sel, hulls) = best.expect("at least one partition");
    let member: PointSet = sel.member.iter().map(|&p| p as usize).collect();
    Ok(Verdict {
        holds: sel.value > *epsilon,
        epsilon: epsilon.clone(),
        value: sel.value.clone(),
        certificate: Certificate::Partition {
            parts: partitions[index].parts().to_vec(),
            covers: with_covers.then_some(hulls),
            member,
            value: sel.value,
        },
        swept: partitions.len(),
        caps: vec![("max-points".into(), opts.max_points)],
    })
}

/// Decides whether every partition of the points admits a member whose parts
/// have outer measure `> ε`. The verdict value is the minimax value, so the
/// family is MC-filling exactly for the `ε` below it.
pub fn check_mc_filling(model: &GroundModel, family: &Family, epsilon: &Rational, opts: &McOptions) -> Result<Verdict> {
    sweep(model, epsilon, opts, false, |p, _| {
        mc_value(model, family, p, &opts.search)
    })
}

/// The same decision when the adversary also picks covers `A_m ⊇ Ω_m`. Only
/// the hulls need sweeping: enlarging a cover never lowers the payoff.
pub fn check_mc_filling_covers(
    model: &GroundModel,
    family: &Family,
    epsilon: &Rational,
    opts: &McOptions,
) -> Result<Verdict> {
    sweep(model, epsilon, opts, true, |p, hulls| {
        mc_value_with_covers(model, family, p, hulls, &opts.search)
    })
}

#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct CoverAudit {
    pub trials: usize,
    pub seed: u64,
    pub hull_value: Rational,
    pub least_enlarged_value: Rational,
}

/// Enlarges the hull covers at random and checks that the payoff never drops
/// below its value at the hulls.
pub fn audit_cover_monotonicity(
    model: &GroundModel,
    family: &Family,
    partition: &IndexedPartition,
    trials: usize,
    seed: u64,
    limits: &SearchLimits,
) -> Result<CoverAudit> {
    let hulls = partition.hulls(model)?;
    let base = mc_value_with_covers(model, family, partition, &hulls, limits)?.value;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut least = None::<Rational>;
    for _ in 0..trials {
        let covers: Vec<MeasurableSet> = hulls
            .iter()
            .map(|h| {
                let mut c = h.clone();
                for b in 0..model.block_count() {
                    if rng.gen_bool(0.3) {
                        c.insert(b);
                    }
                }
                c
            })
            .collect();
        let v = mc_value_with_covers(model, family, partition, &covers, limits)?.value;
        if v < base {
            return Err(Error::Invariant(format!(
                "enlarged covers {covers:?} lower the payoff from {base} to {v}"
            )));
        }
        least = Some(least.map_or(v.clone(), |l| l.min(v)));
    }
    Ok(CoverAudit {
        trials,
        seed,
        least_enlarged_value: least.unwrap_or_else(|| base.clone()),
        hull_value: base,
    })
}

/// Recomputes a partition certificate: the member's payoff is evaluated
/// directly and must equal the claimed value, and no member may beat it.
pub fn replay_partition_certificate(
    model: &GroundModel,
    family: &Family,
    cert: &Certificate,
    limits: &SearchLimits,
) -> Result<Rational> {
    let Certificate::Partition {
        parts,
        covers,
        member,
        value,
    } = cert
    else {
        return Err(Error::InvalidArgument("not a partition certificate".into()));
    };
    let partition = IndexedPartition::new(model, parts.clone())?;
    let covers = match covers {
        Some(c) => c.clone(),
        None => partition.hulls(model)?,
    };
    check_covers(model, &partition, &covers)?;
    let ids: Vec<u64> = member.iter().map(|p| p as u64).collect();
    model.check_points(member)?;
    if !family.contains(&ids) {
        return Err(Error::Invariant("certificate member is not in the family".into()));
    }
    let mut hit = MeasurableSet::new();
    for (part, cover) in partition.parts().iter().zip(&covers) {
        if !part.is_disjoint(member) {
            hit.extend(cover.iter());
        }
    }
    let direct = model.measure(&hit)?;
    if direct != *value {
        return Err(Error::Invariant(format!(
            "certificate member reaches {direct}, certificate claims {value}"
        )));
    }
    let best = mc_value_with_covers(model, family, &partition, &covers, limits)?;
    if best.value != direct {
        return Err(Error::Invariant(format!(
            "member {:?} reaches {} on the certificate partition, above the claimed {value}",
            best.member, best.value
        )));
    }
    Ok(direct)
}
