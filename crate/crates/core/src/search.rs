//! Branch and bound over members of a hereditary family.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::family::Membership;
use crate::rational::Rational;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WeightedSelection {
    pub value: Rational,
    pub member: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchLimits {
    /// Search nodes visited before giving up with a resource error.
    pub max_nodes: usize,
    /// Also prune when the remaining weight cannot beat the incumbent.
    pub bound_pruning: bool,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits {
            max_nodes: 20_000_000,
            bound_pruning: false,
        }
    }
}

struct Dfs<'a, M: Membership + ?Sized> {
    family: &'a M,
    items: &'a [u64],
    weights: Vec<Rational>,
    suffix: Vec<Rational>,
    limits: &'a SearchLimits,
    nodes: usize,
    best: WeightedSelection,
    current: Vec<u64>,
    ceiling: Rational,
}

impl<M: Membership + ?Sized> Dfs<'_, M> {
    /// Returns `true` once the optimum is certain (every weight taken).
    fn run(&mut self, i: usize, value: &Rational) -> Result<bool> {
        self.nodes += 1;
        if self.nodes > self.limits.max_nodes {
            return Err(Error::resource("branch-and-bound nodes", self.limits.max_nodes));
        }
        if *value > self.best.value {
            self.best = WeightedSelection {
                value: value.clone(),
                member: self.current.clone(),
            };
            if self.best.value >= self.ceiling {
                return Ok(true);
            }
        }
        if i == self.items.len() {
            return Ok(false);
        }
        if self.limits.bound_pruning && value + &self.suffix[i] <= self.best.value {
            return Ok(false);
        }
        let x = self.items[i];
        self.current.push(x);
        if self.family.contains(&self.current) {
            let next = value + &self.weights[i];
            if self.run(i + 1, &next)? {
                return Ok(true);
            }
        }
        self.current.pop();
        self.run(i + 1, value)
    }
}

/// Maximizes `Σ_{t∈F} w(t)` over members `F ⊆ H`. A branch only grows `F`
/// while `F` stays a member, which reaches every member because the family
/// is hereditary. Ties keep the member found first (include-first order).
pub fn max_member_weight<M, W>(family: &M, h: &[u64], weight: W, limits: &SearchLimits) -> Result<WeightedSelection>
where
    M: Membership + ?Sized,
    W: Fn(u64) -> Rational,
{
    max_member_weight_capped(family, h, weight, None, limits)
}

/// [`max_member_weight`] with a known upper bound on the optimum; the search
/// stops as soon as a member reaches it.
pub fn max_member_weight_capped<M, W>(
    family: &M,
    h: &[u64],
    weight: W,
    ceiling: Option<Rational>,
    limits: &SearchLimits,
) -> Result<WeightedSelection>
where
    M: Membership + ?Sized,
    W: Fn(u64) -> Rational,
{
    let mut items = h.to_vec();
    items.sort_unstable();
    items.dedup();
    let weights: Vec<Rational> = items.iter().map(|&x| weight(x)).collect();
    if let Some((x, w)) = items.iter().zip(&weights).find(|(_, w)| w.is_negative()) {
        return Err(Error::InvalidArgument(format!("negative weight {w} on element {x}")));
    }
    let mut suffix = vec![Rational::zero(); items.len() + 1];
    for i in (0..items.len()).rev() {
        suffix[i] = &suffix[i + 1] + &weights[i];
    }
    if !family.contains(&[]) {
        return Err(Error::InvalidFamily("the empty family has no members".into()));
    }
    if suffix[0].is_zero() {
        return Ok(WeightedSelection {
            value: Rational::zero(),
            member: Vec::new(),
        });
    }
    let ceiling = ceiling.map_or_else(|| suffix[0].clone(), |c| c.min(suffix[0].clone()));
    let mut dfs = Dfs {
        ceiling,
        family,
        items: &items,
        weights,
        suffix,
        limits,
        nodes: 0,
        best: WeightedSelection {
            value: Rational::zero(),
            member: Vec::new(),
        },
        current: Vec::new(),
    };
    dfs.run(0, &Rational::zero())?;
    Ok(dfs.best)
}
