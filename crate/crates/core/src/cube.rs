//! Witness points in the cube `2^κ` for a partition of the coordinates into
//! classes `A_1, …, A_K`, with `D_α = {x : x = 0 on A_α}` and
//! `E_α = D_α ∖ ⋃_{β<α} D_β`. Coordinates and classes are numbered from 1.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_KAPPA: usize = 64;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CubeModel {
    pub kappa: usize,
    pub classes: Vec<Vec<usize>>,
}

/// A point of `2^κ`; bit `γ − 1` is coordinate `γ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CubePoint(pub u64);

impl CubePoint {
    pub fn get(&self, gamma: usize) -> bool {
        self.0 >> (gamma - 1) & 1 == 1
    }

    pub fn to_bits(&self, kappa: usize) -> String {
        (1..=kappa).map(|g| if self.get(g) { '1' } else { '0' }).collect()
    }
}

impl CubeModel {
    pub fn new(kappa: usize, classes: Vec<Vec<usize>>) -> Result<Self> {
        if kappa == 0 || kappa > MAX_KAPPA {
            return Err(Error::InvalidArgument(format!("kappa {kappa} outside 1..={MAX_KAPPA}")));
        }
        let mut seen = vec![false; kappa + 1];
        for (i, class) in classes.iter().enumerate() {
            if class.is_empty() {
                return Err(Error::InvalidArgument(format!("class {} is empty", i + 1)));
            }
            for &g in class {
                if g == 0 || g > kappa {
                    return Err(Error::InvalidArgument(format!("coordinate {g} outside 1..={kappa}")));
                }
                if std::mem::replace(&mut seen[g], true) {
                    return Err(Error::InvalidArgument(format!("coordinate {g} is in two classes")));
                }
            }
        }
        if let Some(g) = (1..=kappa).find(|&g| !seen[g]) {
            return Err(Error::InvalidArgument(format!("coordinate {g} is in no class")));
        }
        Ok(CubeModel { kappa, classes })
    }

    fn mask(&self, alpha: usize) -> u64 {
        self.classes[alpha - 1].iter().fold(0, |m, &g| m | 1 << (g - 1))
    }

    pub fn in_d(&self, alpha: usize, x: CubePoint) -> bool {
        x.0 & self.mask(alpha) == 0
    }

    pub fn in_e(&self, alpha: usize, x: CubePoint) -> bool {
        self.in_d(alpha, x) && (1..alpha).all(|b| !self.in_d(b, x))
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CubeWitness {
    /// Classes met by the constrained coordinates.
    pub j: Vec<usize>,
    /// The compatible point `z` outside every `D_α`, `α ∈ J`.
    pub z: String,
    pub x: String,
}

/// Builds `x ∈ Z ∩ E_β` for the cylinder `Z` fixed by `fixed`: `x = z` on the
/// classes in `J`, `0` on `A_β` and `1` elsewhere. `z` is the least compatible
/// point (lexicographically, coordinate 1 first) avoiding `D_α` for `α ∈ J`.
pub fn cube_witness(cube: &CubeModel, fixed: &BTreeMap<usize, bool>, beta: usize) -> Result<(CubePoint, CubeWitness)> {
    let k = cube.class_count();
    if beta == 0 || beta > k {
        return Err(Error::InvalidArgument(format!("class {beta} outside 1..={k}")));
    }
    if let Some(&g) = fixed.keys().find(|&&g| g == 0 || g > cube.kappa) {
        return Err(Error::InvalidArgument(format!(
            "coordinate {g} outside 1..={}",
            cube.kappa
        )));
    }
    let j: Vec<usize> = (1..=k)
        .filter(|&a| cube.classes[a - 1].iter().any(|g| fixed.contains_key(g)))
        .collect();
    if j.contains(&beta) {
        return Err(Error::Precondition(format!(
            "class {beta} meets the constrained coordinates"
        )));
    }
    let mut z = fixed
        .iter()
        .filter(|(_, &v)| v)
        .fold(0u64, |m, (&g, _)| m | 1 << (g - 1));
    for &a in &j {
        let class = &cube.classes[a - 1];
        if class.iter().any(|g| fixed.get(g) == Some(&true)) {
            continue;
        }
        let free = class.iter().filter(|g| !fixed.contains_key(g)).max().ok_or_else(|| {
            Error::Precondition(format!(
                "every coordinate of class {a} is fixed to 0, so Z lies inside D_{a}"
            ))
        })?;
        z |= 1 << (free - 1);
    }
    let mut x = 0u64;
    for a in 1..=k {
        let mask = cube.mask(a);
        if j.contains(&a) {
            x |= z & mask;
        } else if a != beta {
            x |= mask;
        }
    }
    let (x, z) = (CubePoint(x), CubePoint(z));
    if fixed.iter().any(|(&g, &v)| x.get(g) != v) {
        return Err(Error::Invariant("witness leaves the cylinder".into()));
    }
    if let Some(a) = (1..=k).find(|&a| a != beta && cube.in_d(a, x)) {
        return Err(Error::Invariant(format!("witness lies in D_{a}")));
    }
    if !cube.in_e(beta, x) {
        return Err(Error::Invariant(format!("witness is not in E_{beta}")));
    }
    Ok((
        x,
        CubeWitness {
            j,
            z: z.to_bits(cube.kappa),
            x: x.to_bits(cube.kappa),
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn six() -> CubeModel {
        CubeModel::new(6, vec![vec![1, 2], vec![3, 4], vec![5, 6]]).unwrap()
    }

    #[test]
    fn examples() {
        let c = six();
        let (x, w) = cube_witness(&c, &BTreeMap::from([(1, true)]), 3).unwrap();
        assert_eq!(w.x, "101100");
        assert_eq!(w.j, vec![1]);
        assert!(c.in_e(3, x));
        let (x, w) = cube_witness(&c, &BTreeMap::new(), 1).unwrap();
        assert_eq!(w.x, "001111");
        assert!(c.in_e(1, x));
    }

    #[test]
    fn preconditions() {
        let c = six();
        assert!(cube_witness(&c, &BTreeMap::from([(5, true)]), 3).is_err());
        assert!(cube_witness(&c, &BTreeMap::from([(1, false), (2, false)]), 3).is_err());
        assert!(cube_witness(&c, &BTreeMap::new(), 4).is_err());
        let (_, w) = cube_witness(&c, &BTreeMap::from([(1, false)]), 2).unwrap();
        assert_eq!(w.z, "010000");
        assert!(CubeModel::new(4, vec![vec![1, 2], vec![2, 3, 4]]).is_err());
        assert!(CubeModel::new(4, vec![vec![1, 2], vec![3]]).is_err());
        assert!(CubeModel::new(3, vec![vec![1, 2], vec![], vec![3]]).is_err());
    }
}
