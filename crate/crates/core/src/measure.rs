//! Finite block probability models.
//!
//! A [`GroundModel`] is a finite partition of the sample space into measured
//! blocks; the measurable sets are exactly the unions of blocks. Points live
//! inside blocks, so an arbitrary set of points is in general not measurable
//! and only has an outer measure: the total measure of the blocks it meets.
//! Blocks of measure zero and blocks without points are both allowed.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::Rational;

pub type PointId = usize;
pub type BlockId = usize;

/// An arbitrary (possibly non-measurable) set of points.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PointSet(BTreeSet<PointId>);

/// A union of blocks.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MeasurableSet(BTreeSet<BlockId>);

macro_rules! id_set {
    ($name:ident, $id:ty) => {
        impl $name {
            pub fn new() -> Self {
                Self(BTreeSet::new())
            }
            pub fn insert(&mut self, id: $id) -> bool {
                self.0.insert(id)
            }
            pub fn remove(&mut self, id: $id) -> bool {
                self.0.remove(&id)
            }
            pub fn contains(&self, id: $id) -> bool {
                self.0.contains(&id)
            }
            pub fn len(&self) -> usize {
                self.0.len()
            }
            pub fn is_empty(&self) -> bool {
                self.0.is_empty()
            }
            pub fn iter(&self) -> impl DoubleEndedIterator<Item = $id> + ExactSizeIterator + '_ {
                self.0.iter().copied()
            }
            pub fn union(&self, other: &Self) -> Self {
                Self(self.0.union(&other.0).copied().collect())
            }
            pub fn intersection(&self, other: &Self) -> Self {
                Self(self.0.intersection(&other.0).copied().collect())
            }
            pub fn difference(&self, other: &Self) -> Self {
                Self(self.0.difference(&other.0).copied().collect())
            }
            pub fn is_subset(&self, other: &Self) -> bool {
                self.0.is_subset(&other.0)
            }
            pub fn is_disjoint(&self, other: &Self) -> bool {
                self.0.is_disjoint(&other.0)
            }
            pub fn to_vec(&self) -> Vec<$id> {
                self.0.iter().copied().collect()
            }
        }

        impl FromIterator<$id> for $name {
            fn from_iter<I: IntoIterator<Item = $id>>(iter: I) -> Self {
                Self(iter.into_iter().collect())
            }
        }

        impl<const N: usize> From<[$id; N]> for $name {
            fn from(ids: [$id; N]) -> Self {
                ids.into_iter().collect()
            }
        }

        impl Extend<$id> for $name {
            fn extend<I: IntoIterator<Item = $id>>(&mut self, iter: I) {
                self.0.extend(iter)
            }
        }
    };
}

id_set!(PointSet, PointId);
id_set!(MeasurableSet, BlockId);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub measure: Rational,
    pub points: Vec<PointId>,
}

/// Finite block probability space. Immutable after construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroundModel {
    blocks: Vec<Block>,
    names: Vec<String>,
    block_of: Vec<BlockId>,
    index: HashMap<String, PointId>,
    /// Block measures as multiples of `1/scale`, when `scale` fits in a `u64`.
    units: Option<Units>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Units {
    pub scale: u64,
    pub per_block: Vec<u64>,
}

impl Units {
    fn of(blocks: &[Block]) -> Option<Units> {
        let mut scale = num_bigint::BigInt::from(1);
        for b in blocks {
            scale = num_integer::Integer::lcm(&scale, b.measure.denom());
        }
        let per_block = blocks
            .iter()
            .map(|b| num_traits::ToPrimitive::to_u64(&(b.measure.numer() * &scale / b.measure.denom())))
            .collect::<Option<Vec<u64>>>()?;
        Some(Units {
            scale: num_traits::ToPrimitive::to_u64(&scale)?,
            per_block,
        })
    }
}

impl GroundModel {
    /// Builds a model from `(measure, point names)` per block. Point ids are
    /// assigned in order of appearance.
    pub fn new<S: Into<String>>(blocks: Vec<(Rational, Vec<S>)>) -> Result<Self> {
        let mut names = Vec::new();
        let mut block_of = Vec::new();
        let mut index = HashMap::new();
        let mut out = Vec::with_capacity(blocks.len());
        let mut total = Rational::zero();
        for (b, (measure, pts)) in blocks.into_iter().enumerate() {
            if measure.is_negative() {
                return Err(Error::InvalidModel(format!("block {b} has negative measure {measure}")));
            }
            total += &measure;
            let mut ids = Vec::with_capacity(pts.len());
            for name in pts {
                let name = name.into();
                let id = names.len();
                if index.insert(name.clone(), id).is_some() {
                    return Err(Error::InvalidModel(format!("duplicate point id {name:?}")));
                }
                names.push(name);
                block_of.push(b);
                ids.push(id);
            }
            out.push(Block { measure, points: ids });
        }
        if total != Rational::one() {
            return Err(Error::InvalidModel(format!(
                "block measures sum to {total}, expected 1/1"
            )));
        }
        Ok(GroundModel {
            units: Units::of(&out),
            blocks: out,
            names,
            block_of,
            index,
        })
    }

    /// `n` blocks of measure `1/n`, block `i` holding the given points.
    pub fn uniform<S: Into<String>>(points_per_block: Vec<Vec<S>>) -> Result<Self> {
        let n = points_per_block.len() as i64;
        if n == 0 {
            return Err(Error::InvalidModel("a model needs at least one block".into()));
        }
        GroundModel::new(
            points_per_block
                .into_iter()
                .map(|pts| (Rational::new(1, n), pts))
                .collect(),
        )
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn point_count(&self) -> usize {
        self.names.len()
    }

    pub fn block_measure(&self, b: BlockId) -> &Rational {
        &self.blocks[b].measure
    }

    pub fn block_of(&self, p: PointId) -> BlockId {
        self.block_of[p]
    }

    pub fn name(&self, p: PointId) -> &str {
        &self.names[p]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn point_id(&self, name: &str) -> Result<PointId> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownPoint(name.to_string()))
    }

    pub fn point_set<S: AsRef<str>>(&self, names: &[S]) -> Result<PointSet> {
        names.iter().map(|n| self.point_id(n.as_ref())).collect()
    }

    pub fn names_of(&self, s: &PointSet) -> Vec<String> {
        s.iter().map(|p| self.names[p].clone()).collect()
    }

    pub fn all_points(&self) -> PointSet {
        (0..self.point_count()).collect()
    }

    pub fn all_blocks(&self) -> MeasurableSet {
        (0..self.block_count()).collect()
    }

    pub fn check_points(&self, s: &PointSet) -> Result<()> {
        match s.iter().find(|&p| p >= self.point_count()) {
            Some(p) => Err(Error::UnknownPoint(format!("#{p}"))),
            None => Ok(()),
        }
    }

    pub fn check_blocks(&self, e: &MeasurableSet) -> Result<()> {
        match e.iter().find(|&b| b >= self.block_count()) {
            Some(b) => Err(Error::UnknownBlock(b)),
            None => Ok(()),
        }
    }

    /// μ(E) for a union of blocks.
    pub fn measure(&self, e: &MeasurableSet) -> Result<Rational> {
        self.check_blocks(e)?;
        Ok(e.iter().map(|b| &self.blocks[b].measure).sum())
    }

    /// The blocks meeting `s`: the least measurable cover of `s`.
    pub fn hull(&self, s: &PointSet) -> Result<MeasurableSet> {
        self.check_points(s)?;
        Ok(s.iter().map(|p| self.block_of[p]).collect())
    }

    /// μ*(S) = μ(hull(S)).
    pub fn outer_measure(&self, s: &PointSet) -> Result<Rational> {
        let h = self.hull(s)?;
        self.measure(&h)
    }

    /// `true` iff μ(Ω ∖ ⋃E) ≤ η.
    pub fn is_eta_thick(&self, family: &[MeasurableSet], eta: &Rational) -> Result<bool> {
        if eta.is_negative() {
            return Err(Error::InvalidArgument(format!("negative eta {eta}")));
        }
        let mut covered = MeasurableSet::new();
        for e in family {
            self.check_blocks(e)?;
            covered.extend(e.iter());
        }
        let gap = Rational::one() - self.measure(&covered)?;
        Ok(&gap <= eta)
    }

    pub(crate) fn units(&self) -> Option<&Units> {
        self.units.as_ref()
    }

    /// Splits block `block` into `pieces` blocks of equal measure.
    /// `assignment[i]` names the piece receiving the `i`-th point of the block.
    /// The first piece keeps the block id, further pieces are appended at the
    /// end, so every other block id is unchanged.
    pub fn refine_block(&self, block: BlockId, pieces: usize, assignment: &[usize]) -> Result<Refinement> {
        let old = self.blocks.get(block).ok_or(Error::UnknownBlock(block))?;
        if pieces == 0 {
            return Err(Error::InvalidArgument("pieceCount must be at least 1".into()));
        }
        if assignment.len() != old.points.len() {
            return Err(Error::InvalidArgument(format!(
                "assignment covers {} points, block {block} holds {}",
                assignment.len(),
                old.points.len()
            )));
        }
        if let Some(&bad) = assignment.iter().find(|&&a| a >= pieces) {
            return Err(Error::InvalidArgument(format!(
                "piece index {bad} out of range for {pieces} pieces"
            )));
        }
        let piece_measure = old.measure.div_int(pieces);
        let mut layout: Vec<(Rational, Vec<PointId>)> = self
            .blocks
            .iter()
            .map(|b| (b.measure.clone(), b.points.clone()))
            .collect();
        let mut parent: Vec<BlockId> = (0..self.block_count()).collect();
        let mut piece_ids = vec![block];
        layout[block] = (piece_measure.clone(), Vec::new());
        for _ in 1..pieces {
            piece_ids.push(layout.len());
            layout.push((piece_measure.clone(), Vec::new()));
            parent.push(block);
        }
        for (&p, &a) in old.points.iter().zip(assignment) {
            layout[piece_ids[a]].1.push(p);
        }
        let model = self.rebuild(layout)?;
        Ok(Refinement { model, parent })
    }

    /// Refines every positive block of `b` into pieces of measure `unit`.
    /// Points go to the first piece. Each block measure in `b` must be a
    /// multiple of `unit`.
    pub fn refine_to_unit(&self, b: &MeasurableSet, unit: &Rational) -> Result<Refinement> {
        self.check_blocks(b)?;
        if !unit.is_positive() {
            return Err(Error::InvalidArgument(format!("unit {unit} must be positive")));
        }
        let mut current = Refinement::identity(self.clone());
        for block in b.iter() {
            let m = &self.blocks[block].measure;
            if m.is_zero() {
                continue;
            }
            let pieces = (m / unit)
                .to_usize()
                .ok_or_else(|| Error::Precondition(format!("block {block} measure {m} is not a multiple of {unit}")))?;
            if pieces == 1 {
                continue;
            }
            let npts = self.blocks[block].points.len();
            let step = current.model.refine_block(block, pieces, &vec![0; npts])?;
            current = current.then(step);
        }
        Ok(current)
    }

    /// Splits `b` into `⌊μ(b)/θ⌋` pairwise disjoint unions of blocks of
    /// measure exactly `θ`. Blocks are packed greedily in id order; a block
    /// straddling a piece boundary is a divisibility error, fixed by refining
    /// first (see [`GroundModel::refine_to_unit`]).
    pub fn equipartition(&self, b: &MeasurableSet, theta: &Rational) -> Result<Vec<MeasurableSet>> {
        if !theta.is_positive() {
            return Err(Error::InvalidArgument(format!("theta {theta} must be positive")));
        }
        let total = self.measure(b)?;
        let wanted = (&total / theta)
            .floor()
            .try_into()
            .map_err(|_| Error::resource("equipartition piece count", usize::MAX))?;
        let mut pieces = Vec::with_capacity(wanted);
        let mut current = MeasurableSet::new();
        let mut filled = Rational::zero();
        for block in b.iter() {
            if pieces.len() == wanted {
                break;
            }
            let m = &self.blocks[block].measure;
            let next = &filled + m;
            if next > *theta {
                return Err(Error::Precondition(format!(
                    "block {block} (measure {m}) straddles a piece of measure {theta}; \
                     refine the blocks of B to a common unit dividing {theta} first"
                )));
            }
            current.insert(block);
            filled = next;
            if filled == *theta {
                pieces.push(std::mem::take(&mut current));
                filled = Rational::zero();
            }
        }
        if pieces.len() != wanted {
            return Err(Error::Invariant(format!(
                "equipartition produced {} of {wanted} pieces",
                pieces.len()
            )));
        }
        Ok(pieces)
    }

    fn rebuild(&self, layout: Vec<(Rational, Vec<PointId>)>) -> Result<GroundModel> {
        let mut block_of = vec![0; self.names.len()];
        let mut blocks = Vec::with_capacity(layout.len());
        for (b, (measure, points)) in layout.into_iter().enumerate() {
            for &p in &points {
                block_of[p] = b;
            }
            blocks.push(Block { measure, points });
        }
        Ok(GroundModel {
            units: Units::of(&blocks),
            blocks,
            names: self.names.clone(),
            block_of,
            index: self.index.clone(),
        })
    }
}

/// A refined model together with the map from its blocks to the blocks of
/// the model it was refined from. Point ids are preserved.
#[derive(Clone, Debug)]
pub struct Refinement {
    pub model: GroundModel,
    pub parent: Vec<BlockId>,
}

impl Refinement {
    pub fn identity(model: GroundModel) -> Self {
        let parent = (0..model.block_count()).collect();
        Refinement { model, parent }
    }

    /// Preimage of a measurable set of the coarse model.
    pub fn lift(&self, e: &MeasurableSet) -> MeasurableSet {
        self.parent
            .iter()
            .enumerate()
            .filter(|(_, p)| e.contains(**p))
            .map(|(b, _)| b)
            .collect()
    }

    /// Image of a fine measurable set in the coarse model (blocks it touches).
    pub fn project(&self, e: &MeasurableSet) -> MeasurableSet {
        e.iter().map(|b| self.parent[b]).collect()
    }

    /// Composes with a refinement of `self.model`.
    pub fn then(self, next: Refinement) -> Refinement {
        let parent = next.parent.iter().map(|&b| self.parent[b]).collect();
        Refinement {
            model: next.model,
            parent,
        }
    }
}

/// `E_1 = A_1`, `E_i = A_i ∖ ⋃_{j<i} A_j`.
pub fn disjointify(sets: &[MeasurableSet]) -> Vec<MeasurableSet> {
    let mut seen = MeasurableSet::new();
    sets.iter()
        .map(|a| {
            let e = a.difference(&seen);
            seen.extend(a.iter());
            e
        })
        .collect()
}
