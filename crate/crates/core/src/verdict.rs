//! Checker results and the certificates they carry.

use serde::{Deserialize, Serialize};

use crate::measure::{MeasurableSet, PointId, PointSet};
use crate::rational::Rational;

/// Outcome of a checker. `value` is the exact quantity compared with
/// `epsilon`; the certificate lets the value be recomputed independently.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub holds: bool,
    pub epsilon: Rational,
    pub value: Rational,
    pub certificate: Certificate,
    /// Number of cases (subsets, partitions) swept.
    pub swept: usize,
    pub caps: Vec<(String, usize)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Certificate {
    /// ε-filling: the set `H` attaining the least ratio `|F|/|H|` and its
    /// largest member `F`.
    Subset { set: Vec<u64>, member: Vec<u64> },
    /// MC-filling: the partition attaining the minimax value, its covers when
    /// the adversary also chose covers, and a member attaining the maximum.
    Partition {
        parts: Vec<PointSet>,
        covers: Option<Vec<MeasurableSet>>,
        member: PointSet,
        value: Rational,
    },
    /// MC-integrability: the partition attaining the minimax value and an
    /// optimal tagged family for it.
    Tagged {
        parts: Vec<PointSet>,
        covers: Vec<MeasurableSet>,
        pieces: Vec<(MeasurableSet, PointId)>,
        functional: Option<usize>,
        value: Rational,
    },
}
