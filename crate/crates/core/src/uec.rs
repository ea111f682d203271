//! Partitions that make a one-to-one function into a (signed) orthonormal
//! system Riemann-small: points are grouped by the group `I_m` of their
//! vector, and each group is covered by small disjoint sets `A_{n,m}`.
//!
//! Norms are Euclidean. The report sweeps every tagged family respecting the
//! partition and checks `‖Σ μ(E_j) f(t_j)‖ ≤ 2ε` exactly, together with
//! `x*(Σ…) ≤ 2ε` and the group control `|{x ∈ I_m : |x*(x)| > ε}| ≤ m` for
//! every functional of a fixed grid.

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{GroundModel, MeasurableSet, PointId, PointSet, Refinement};
use crate::rational::Rational;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrthoSystem {
    pub dimension: usize,
    pub vectors: Vec<Vec<Rational>>,
    /// `groups[m-1]` lists the vector indices of `I_m`.
    pub groups: Vec<Vec<usize>>,
}

fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl OrthoSystem {
    /// Unit vectors, pairwise orthogonal or antipodal, and groups that
    /// partition them.
    pub fn new(dimension: usize, vectors: Vec<Vec<Rational>>, groups: Vec<Vec<usize>>) -> Result<Self> {
        for (i, v) in vectors.iter().enumerate() {
            if v.len() != dimension {
                return Err(Error::InvalidArgument(format!(
                    "vector {i} has {} coordinates",
                    v.len()
                )));
            }
            if dot(v, v) != Rational::one() {
                return Err(Error::InvalidArgument(format!("vector {i} is not a unit vector")));
            }
            for (j, w) in vectors.iter().enumerate().take(i) {
                let d = dot(v, w);
                if d == Rational::one() {
                    return Err(Error::InvalidArgument(format!("vectors {j} and {i} coincide")));
                }
                if !d.is_zero() && d != -Rational::one() {
                    return Err(Error::InvalidArgument(format!(
                        "vectors {j} and {i} are neither orthogonal nor antipodal"
                    )));
                }
            }
        }
        let mut seen = vec![false; vectors.len()];
        for g in &groups {
            for &i in g {
                match seen.get_mut(i) {
                    None => return Err(Error::InvalidArgument(format!("group names vector {i}"))),
                    Some(s) if *s => return Err(Error::InvalidArgument(format!("vector {i} is in two groups"))),
                    Some(s) => *s = true,
                }
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidArgument(format!("vector {i} is in no group")));
        }
        Ok(OrthoSystem {
            dimension,
            vectors,
            groups,
        })
    }

    /// Group index `m` (from 1) of every vector.
    fn group_of(&self) -> Vec<usize> {
        let mut out = vec![0; self.vectors.len()];
        for (g, members) in self.groups.iter().enumerate() {
            for &i in members {
                out[i] = g + 1;
            }
        }
        out
    }

    /// Lines spanned by the group's vectors with their multiplicities (1, or
    /// 2 for an antipodal pair).
    fn line_multiplicities(&self, group: &[usize]) -> Vec<usize> {
        let mut lines: Vec<(usize, usize)> = Vec::new();
        for &i in group {
            match lines
                .iter_mut()
                .find(|(j, _)| !dot(&self.vectors[i], &self.vectors[*j]).is_zero())
            {
                Some((_, n)) => *n += 1,
                None => lines.push((i, 1)),
            }
        }
        let mut m: Vec<usize> = lines.into_iter().map(|(_, n)| n).collect();
        m.sort_unstable_by(|a, b| b.cmp(a));
        m
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GroupCheck {
    pub m: usize,
    pub size: usize,
    /// `"size"` when `|I_m| ≤ m`, `"bessel"` when the count bound is used.
    pub rule: String,
    pub bound: usize,
}

/// A cell `Ω_{n,m} = Ω_m ∩ A_{n,m}` with its cover.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct UecCell {
    pub m: usize,
    pub n: usize,
    pub points: PointSet,
    pub cover: MeasurableSet,
    pub cover_measure: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct UecReport {
    pub epsilon: Rational,
    pub bound: Rational,
    pub groups: Vec<GroupCheck>,
    pub cells: Vec<UecCell>,
    pub functional_grid: String,
    pub functionals: usize,
    pub control_checks: usize,
    pub tagged_families: usize,
    pub max_norm_squared: Rational,
    pub max_functional_squared: Rational,
    pub holds: bool,
}

#[derive(Clone, Debug)]
pub struct UecOptions {
    pub max_tagged_families: usize,
}

impl Default for UecOptions {
    fn default() -> Self {
        UecOptions {
            max_tagged_families: 1 << 22,
        }
    }
}

fn cover_bound(epsilon: &Rational, m: usize) -> Rational {
    let pow = Rational::from(num_bigint::BigInt::from(1u8) << m);
    epsilon / &(pow * Rational::from_integer(m as i64))
}

/// Bessel: at most `⌈1/ε²⌉ − 1` lines can have `|x*(u)| > ε`.
fn line_budget(epsilon: &Rational) -> usize {
    let c = (epsilon * epsilon).recip().ceil();
    c.to_usize().unwrap_or(usize::MAX).saturating_sub(1)
}

fn check_injection(model: &GroundModel, ortho: &OrthoSystem, injection: &[usize]) -> Result<()> {
    if injection.len() != model.point_count() {
        return Err(Error::InvalidArgument(format!(
            "injection covers {} of {} points",
            injection.len(),
            model.point_count()
        )));
    }
    let mut used = vec![false; ortho.vectors.len()];
    for (p, &v) in injection.iter().enumerate() {
        match used.get_mut(v) {
            None => {
                return Err(Error::InvalidArgument(format!(
                    "point {} maps to unknown vector {v}",
                    model.name(p)
                )))
            }
            Some(u) if *u => return Err(Error::InvalidArgument(format!("vector {v} is hit twice"))),
            Some(u) => *u = true,
        }
    }
    Ok(())
}

/// Refines every block holding points so that the piece carrying its points
/// is no larger than `ε/(2^m m)` for each group `m` among them.
pub fn refine_for_uec(
    model: &GroundModel,
    ortho: &OrthoSystem,
    injection: &[usize],
    epsilon: &Rational,
) -> Result<Refinement> {
    check_injection(model, ortho, injection)?;
    let group_of = ortho.group_of();
    let mut current = Refinement::identity(model.clone());
    for b in 0..model.block_count() {
        let block = &model.blocks()[b];
        let Some(limit) = block
            .points
            .iter()
            .map(|&p| cover_bound(epsilon, group_of[injection[p]]))
            .min()
        else {
            continue;
        };
        let mu = &block.measure;
        if *mu <= limit {
            continue;
        }
        let pieces = (mu / &limit)
            .ceil()
            .to_usize()
            .ok_or_else(|| Error::resource("refinement pieces", usize::MAX))?;
        let step = current.model.refine_block(b, pieces, &vec![0; block.points.len()])?;
        current = current.then(step);
    }
    Ok(current)
}

/// Builds the cells and covers, then certifies the `2ε` bound over every
/// tagged family respecting them.
pub fn uec_partition(
    model: &GroundModel,
    ortho: &OrthoSystem,
    injection: &[usize],
    epsilon: &Rational,
    opts: &UecOptions,
) -> Result<UecReport> {
    if !epsilon.is_positive() {
        return Err(Error::InvalidArgument(format!("epsilon {epsilon} must be positive")));
    }
    check_injection(model, ortho, injection)?;
    let group_of = ortho.group_of();
    let budget = line_budget(epsilon);

    let mut groups = Vec::with_capacity(ortho.groups.len());
    for (g, members) in ortho.groups.iter().enumerate() {
        let m = g + 1;
        let check = if members.len() <= m {
            GroupCheck {
                m,
                size: members.len(),
                rule: "size".into(),
                bound: members.len(),
            }
        } else {
            let bound: usize = ortho.line_multiplicities(members).iter().take(budget).sum();
            if bound > m {
                return Err(Error::Precondition(format!(
                    "group I_{m} has {} vectors and up to {bound} of them can exceed epsilon under one functional",
                    members.len()
                )));
            }
            GroupCheck {
                m,
                size: members.len(),
                rule: "bessel".into(),
                bound,
            }
        };
        groups.push(check);
    }

    let mut cells = Vec::new();
    for m in 1..=ortho.groups.len() {
        let omega_m: PointSet = (0..model.point_count())
            .filter(|&p| group_of[injection[p]] == m)
            .collect();
        let limit = cover_bound(epsilon, m);
        let mut covers: Vec<(MeasurableSet, Rational)> = Vec::new();
        for b in model.hull(&omega_m)?.iter() {
            let mu = model.block_measure(b);
            if *mu > limit {
                return Err(Error::Precondition(format!(
                    "block {b} (measure {mu}) holds a point of group {m} but exceeds {limit}; \
                     split it with refine_block first"
                )));
            }
            match covers.last_mut() {
                Some((c, total)) if &*total + mu <= limit => {
                    c.insert(b);
                    *total += mu;
                }
                _ => covers.push((MeasurableSet::from([b]), mu.clone())),
            }
        }
        for (n, (cover, cover_measure)) in covers.into_iter().enumerate() {
            let points: PointSet = omega_m.iter().filter(|&p| cover.contains(model.block_of(p))).collect();
            cells.push(UecCell {
                m,
                n: n + 1,
                points,
                cover,
                cover_measure,
            });
        }
    }

    // Functionals Σ_{i∈S} s_i e_i / √|S|, kept as (signs, |S|).
    let d = ortho.dimension;
    let mut grid: Vec<(Vec<i64>, usize)> = Vec::new();
    let mut code = vec![0i64; d];
    loop {
        let k = code.iter().filter(|&&c| c != 0).count();
        if k > 0 {
            grid.push((code.clone(), k));
        }
        let mut i = 0;
        while i < d {
            code[i] = match code[i] {
                0 => 1,
                1 => -1,
                _ => 0,
            };
            if code[i] != 0 {
                break;
            }
            i += 1;
        }
        if i == d {
            break;
        }
    }
    let apply = |s: &[i64], v: &[Rational]| -> Rational {
        s.iter().zip(v).fold(Rational::zero(), |mut acc, (c, x)| {
            match c {
                1 => acc += x,
                -1 => acc -= x,
                _ => {}
            }
            acc
        })
    };
    let eps_sq = epsilon * epsilon;

    let mut control_checks = 0;
    for (s, k) in &grid {
        for (g, members) in ortho.groups.iter().enumerate() {
            let threshold = eps_sq.mul_int(*k);
            let big = members
                .iter()
                .filter(|&&i| {
                    let y = apply(s, &ortho.vectors[i]);
                    &y * &y > threshold
                })
                .count();
            if big > g + 1 {
                return Err(Error::Invariant(format!(
                    "functional {s:?}/sqrt({k}) exceeds epsilon on {big} vectors of I_{}",
                    g + 1
                )));
            }
            control_checks += 1;
        }
    }

    // Each block may feed one tag of a cell whose cover contains it.
    let mut options: Vec<(Rational, Vec<PointId>)> = Vec::new();
    for b in 0..model.block_count() {
        let tags: Vec<PointId> = cells
            .iter()
            .filter(|c| c.cover.contains(b))
            .flat_map(|c| c.points.iter())
            .collect();
        if !tags.is_empty() && model.block_measure(b).is_positive() {
            options.push((model.block_measure(b).clone(), tags));
        }
    }
    let total = options
        .iter()
        .try_fold(1usize, |acc, (_, t)| acc.checked_mul(t.len() + 1))
        .filter(|&t| t <= opts.max_tagged_families)
        .ok_or_else(|| Error::resource("tagged families in the sweep", opts.max_tagged_families))?;

    let vector_of = |t: PointId| &ortho.vectors[injection[t]];
    let mut max_norm = Rational::zero();
    let mut max_fun = Rational::zero();
    let mut sum = vec![Rational::zero(); d];
    let mut stack: Vec<usize> = vec![0; options.len()];
    // odometer over choices; 0 = block unused, j = tag j-1
    loop {
        let norm = dot(&sum, &sum);
        if norm > max_norm {
            max_norm = norm;
        }
        for (s, k) in &grid {
            let y = apply(s, &sum);
            if y.is_positive() {
                let sq = &(&y * &y) / &Rational::from_integer(*k as i64);
                if sq > max_fun {
                    max_fun = sq;
                }
            }
        }
        let mut i = 0;
        while i < options.len() {
            let (mu, tags) = &options[i];
            if stack[i] > 0 {
                let v = vector_of(tags[stack[i] - 1]);
                for (x, y) in sum.iter_mut().zip(v) {
                    *x -= &(mu * y);
                }
            }
            stack[i] = (stack[i] + 1) % (tags.len() + 1);
            if stack[i] > 0 {
                let v = vector_of(tags[stack[i] - 1]);
                for (x, y) in sum.iter_mut().zip(v) {
                    *x += &(mu * y);
                }
                break;
            }
            i += 1;
        }
        if i == options.len() {
            break;
        }
    }

    let limit = eps_sq.mul_int(4);
    Ok(UecReport {
        epsilon: epsilon.clone(),
        bound: epsilon.mul_int(2),
        groups,
        cells,
        functional_grid: format!("sum of s_i e_i / sqrt(|S|) over nonempty S of 1..={d} and signs s (3^{d} - 1)"),
        functionals: grid.len(),
        control_checks,
        tagged_families: total,
        holds: max_norm <= limit && max_fun <= limit,
        max_norm_squared: max_norm,
        max_functional_squared: max_fun,
    })
}
