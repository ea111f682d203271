//! ε-filling sweeps: every `H ⊆ S` with `|H| ≤ maxH` must contain a member
//! of size at least `ε|H|`. Infinite ground sets are only ever checked up to
//! the sweep bound, which every verdict records.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::family::Family;
use crate::rational::Rational;
use crate::search::SearchLimits;
use crate::verdict::{Certificate, Verdict};

#[derive(Clone, Debug)]
pub struct FillingOptions {
    pub max_h: usize,
    pub max_subsets: usize,
    pub search: SearchLimits,
}

impl FillingOptions {
    pub fn new(max_h: usize) -> Self {
        FillingOptions {
            max_h,
            max_subsets: 1 << 22,
            search: SearchLimits::default(),
        }
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k.min(n));
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// All `k`-subsets of `items` in lexicographic order.
pub(crate) fn combinations(items: &[u64], k: usize) -> Vec<Vec<u64>> {
    let n = items.len();
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.iter().map(|&i| items[i]).collect());
        let mut i = k;
        while i > 0 && idx[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Decides ε-filling of `family` on `s`, restricted to `|H| ≤ max_h`.
///
/// The verdict value is the least ratio `max{|F| : F ∈ 𝓕, F ⊆ H} / |H|` over
/// the swept nonempty `H` (`1` when none is swept, `H = ∅` being vacuous);
/// the property holds iff that value is at least `ε`.
pub fn is_filling(family: &Family, s: &[u64], epsilon: &Rational, opts: &FillingOptions) -> Result<Verdict> {
    if !epsilon.is_positive() || *epsilon > Rational::one() {
        return Err(Error::InvalidArgument(format!("epsilon {epsilon} outside (0, 1]")));
    }
    let mut items = s.to_vec();
    items.sort_unstable();
    items.dedup();
    family.validate_elements(&items)?;
    let max_h = opts.max_h.min(items.len());
    let total: u128 = (1..=max_h).map(|k| binomial(items.len(), k)).sum();
    if total > opts.max_subsets as u128 {
        return Err(Error::resource(
            format!("{total} subsets of size <= {max_h}"),
            opts.max_subsets,
        ));
    }

    let mut best: Option<(Rational, Vec<u64>, Vec<u64>)> = None;
    for k in 1..=max_h {
        let layer = combinations(&items, k);
        let results: Vec<Result<(Rational, Vec<u64>)>> = layer
            .par_iter()
            .map(|h| {
                let m = family.max_cardinality_member(h, &opts.search)?;
                Ok((Rational::new(m.len() as i64, h.len() as i64), m))
            })
            .collect();
        for (h, r) in layer.into_iter().zip(results) {
            let (ratio, member) = r?;
            if best.as_ref().is_none_or(|(b, _, _)| ratio < *b) {
                best = Some((ratio, h, member));
            }
        }
    }
    let (value, set, member) = best.unwrap_or((Rational::one(), Vec::new(), Vec::new()));
    Ok(Verdict {
        holds: value >= *epsilon,
        epsilon: epsilon.clone(),
        value,
        certificate: Certificate::Subset { set, member },
        swept: total as usize,
        caps: vec![("max-h".into(), opts.max_h)],
    })
}

/// Recomputes the ratio claimed by a [`Certificate::Subset`].
pub fn replay_filling(family: &Family, cert: &Certificate, limits: &SearchLimits) -> Result<Rational> {
    let Certificate::Subset { set, member } = cert else {
        return Err(Error::InvalidArgument("not a subset certificate".into()));
    };
    if set.is_empty() {
        return Ok(Rational::one());
    }
    if !member.iter().all(|x| set.contains(x)) {
        return Err(Error::Invariant("certificate member is not inside its set".into()));
    }
    if !family.contains(member) {
        return Err(Error::Invariant("certificate member is not in the family".into()));
    }
    let best = family.max_cardinality_member(set, limits)?;
    if best.len() != member.len() {
        return Err(Error::Invariant(format!(
            "certificate claims a largest member of size {}, recomputed {}",
            member.len(),
            best.len()
        )));
    }
    Ok(Rational::new(member.len() as i64, set.len() as i64))
}
