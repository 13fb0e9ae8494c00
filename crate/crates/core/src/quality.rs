//! The `(w; e)` quality poset of composite solutions.
//!
//! An [`EVector`] counts how many selected alternatives sit at each priority
//! level (level 1 first). Two e-vectors with the same total are compared by
//! cumulative dominance: `a` is at least as good as `b` when, for every
//! prefix of levels, `a` has at least as many elements as `b`. This is the
//! transitive closure of "move one element one level up".

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{MorphError, Result};

/// Per-level counts `(η₁, …, η_l)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EVector(Vec<u32>);

impl EVector {
    pub fn new(counts: Vec<u32>) -> Self {
        Self(counts)
    }

    pub fn zeros(levels: usize) -> Self {
        Self(vec![0; levels])
    }

    pub fn counts(&self) -> &[u32] {
        &self.0
    }

    pub fn levels(&self) -> usize {
        self.0.len()
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Counts one more element at `priority` (1-based).
    pub(crate) fn bump(&mut self, priority: u8) {
        self.0[usize::from(priority) - 1] += 1;
    }

    /// Prefix sums `c_k = Σ_{ι ≤ k} η_ι` for `k = 1..l`.
    pub fn cumulative(&self) -> Vec<u32> {
        cumulative(&self.0)
    }
}

impl From<Vec<u32>> for EVector {
    fn from(v: Vec<u32>) -> Self {
        Self(v)
    }
}

impl fmt::Display for EVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_counts(f, &self.0)
    }
}

pub(crate) fn write_counts(f: &mut fmt::Formatter<'_>, counts: &[u32]) -> fmt::Result {
    for (i, c) in counts.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{c}")?;
    }
    Ok(())
}

pub(crate) fn cumulative(counts: &[u32]) -> Vec<u32> {
    counts
        .iter()
        .scan(0u32, |acc, &c| {
            *acc += c;
            Some(*acc)
        })
        .collect()
}

/// Cumulative dominance on raw count slices. Returns `false` for vectors of
/// different length or total instead of failing.
pub(crate) fn dominates_raw(a: &[u32], b: &[u32]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let (mut ca, mut cb) = (0u32, 0u32);
    for (&x, &y) in a.iter().zip(b) {
        ca += x;
        cb += y;
        if ca < cb {
            return false;
        }
    }
    ca == cb
}

fn check_comparable(a: &[u32], b: &[u32]) -> Result<()> {
    if a.len() != b.len() {
        return Err(MorphError::InvalidComparison(format!(
            "vectors have {} and {} levels",
            a.len(),
            b.len()
        )));
    }
    let (ta, tb): (u32, u32) = (a.iter().sum(), b.iter().sum());
    if ta != tb {
        return Err(MorphError::InvalidComparison(format!(
            "vectors count {ta} and {tb} elements"
        )));
    }
    Ok(())
}

/// `true` iff `a` is at least as good as `b` in the e-poset.
pub fn e_dominates(a: &EVector, b: &EVector) -> Result<bool> {
    check_comparable(&a.0, &b.0)?;
    Ok(dominates_raw(&a.0, &b.0))
}

/// The two-part quality `N(S) = (w(S); e(S))`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QualityVector {
    pub w: u8,
    pub e: EVector,
}

impl QualityVector {
    pub fn new(w: u8, e: impl Into<EVector>) -> Self {
        Self { w, e: e.into() }
    }

    /// Strict dominance: at least as good and not equal.
    pub fn strictly_dominates(&self, other: &Self) -> bool {
        self != other && self.w >= other.w && dominates_raw(&self.e.0, &other.e.0)
    }
}

/// Total order used for reporting: `w` descending, then e lexicographically
/// descending. It is a linear extension of [`n_dominates`].
impl Ord for QualityVector {
    fn cmp(&self, other: &Self) -> Ordering {
        other.w.cmp(&self.w).then_with(|| other.e.cmp(&self.e))
    }
}

impl PartialOrd for QualityVector {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// `true` iff `a.w ≥ b.w` and `a.e` e-dominates `b.e`.
pub fn n_dominates(a: &QualityVector, b: &QualityVector) -> Result<bool> {
    check_comparable(&a.e.0, &b.e.0)?;
    Ok(a.w >= b.w && dominates_raw(&a.e.0, &b.e.0))
}

impl fmt::Display for QualityVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{};", self.w)?;
        write_counts(f, &self.e.0)
    }
}

impl FromStr for QualityVector {
    type Err = MorphError;

    /// Parses the `w;η₁,…,η_l` notation, e.g. `3;4,1,0`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || MorphError::OutOfRange(format!("malformed quality vector `{s}`"));
        let (w, e) = s.trim().split_once(';').ok_or_else(bad)?;
        let w = w.trim().parse::<u8>().map_err(|_| bad())?;
        let counts = e
            .split(',')
            .map(|c| c.trim().parse::<u32>().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(w, counts))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(v: &[u32]) -> EVector {
        EVector::new(v.to_vec())
    }

    #[test]
    fn e_poset_edges_and_incomparable_branches() {
        assert!(e_dominates(&e(&[3, 0, 0]), &e(&[2, 1, 0])).unwrap());
        assert!(!e_dominates(&e(&[2, 1, 0]), &e(&[3, 0, 0])).unwrap());
        assert!(!e_dominates(&e(&[2, 0, 1]), &e(&[1, 2, 0])).unwrap());
        assert!(!e_dominates(&e(&[1, 2, 0]), &e(&[2, 0, 1])).unwrap());
        assert!(e_dominates(&e(&[1, 1, 1]), &e(&[1, 1, 1])).unwrap());
    }

    #[test]
    fn mismatched_vectors_are_rejected() {
        assert!(e_dominates(&e(&[1, 1]), &e(&[1, 1, 0])).is_err());
        assert!(e_dominates(&e(&[2, 1, 0]), &e(&[1, 1, 0])).is_err());
    }

    #[test]
    fn n_dominance_examples() {
        let q = |s: &str| s.parse::<QualityVector>().unwrap();
        assert!(n_dominates(&q("3;1,1,1"), &q("2;1,1,1")).unwrap());
        assert!(!n_dominates(&q("3;1,1,1"), &q("1;3,0,0")).unwrap());
        assert!(!n_dominates(&q("1;3,0,0"), &q("3;1,1,1")).unwrap());
        assert!(n_dominates(&q("2;2,1,0"), &q("2;2,1,0")).unwrap());
        assert!(!q("2;2,1,0").strictly_dominates(&q("2;2,1,0")));
    }

    #[test]
    fn display_round_trips() {
        let q: QualityVector = "4;2,3,0".parse().unwrap();
        assert_eq!(q.w, 4);
        assert_eq!(q.e.counts(), &[2, 3, 0]);
        assert_eq!(q.to_string(), "4;2,3,0");
        assert!("4-2,3".parse::<QualityVector>().is_err());
    }
}
