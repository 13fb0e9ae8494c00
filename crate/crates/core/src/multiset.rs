//! Interval multiset estimates `P^{l,η}`.
//!
//! An estimate distributes `η` indistinguishable marks over `l` ordered
//! quality levels. This module enumerates the scale, aggregates estimates,
//! measures proximity in one-level moves and computes generalized medians.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{MorphError, Result};
use crate::quality::{cumulative, dominates_raw, write_counts};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultisetEstimate(Vec<u32>);

impl MultisetEstimate {
    pub fn new(counts: Vec<u32>) -> Self {
        Self(counts)
    }

    pub fn counts(&self) -> &[u32] {
        &self.0
    }

    pub fn levels(&self) -> usize {
        self.0.len()
    }

    pub fn eta(&self) -> u32 {
        self.0.iter().sum()
    }

    /// No empty level strictly between two occupied levels.
    pub fn satisfies_condition2(&self) -> bool {
        let first = self.0.iter().position(|&c| c > 0);
        let last = self.0.iter().rposition(|&c| c > 0);
        match (first, last) {
            (Some(a), Some(b)) => self.0[a..=b].iter().all(|&c| c > 0),
            _ => true,
        }
    }

    /// `true` iff `self` is at least as good as `other` (cumulative order).
    pub fn dominates(&self, other: &Self) -> bool {
        dominates_raw(&self.0, &other.0)
    }
}

impl From<Vec<u32>> for MultisetEstimate {
    fn from(v: Vec<u32>) -> Self {
        Self(v)
    }
}

impl fmt::Display for MultisetEstimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        write_counts(f, &self.0)?;
        f.write_str(")")
    }
}

/// `μ^{l,η} = l(l+1)…(l+η−1)/η! = C(l+η−1, η)`.
///
/// Panics if the result does not fit in a `u128`.
pub fn multiset_number(l: u32, eta: u32) -> u128 {
    assert!(l >= 1, "multiset number needs at least one level");
    let n = u128::from(l) + u128::from(eta) - 1;
    let k = u128::from(eta.min(l - 1));
    // C(n, k) with k chosen as the smaller side; every prefix product is integral
    (0..k).fold(1u128, |acc, i| {
        acc.checked_mul(n - i).expect("multiset number overflows u128") / (i + 1)
    })
}

/// All estimates of `P^{l,η}`, optionally restricted to Condition 2, in
/// lexicographically descending order (best first; a linear extension of
/// the quality order).
pub fn enumerate_estimates(l: usize, eta: u32, enforce_condition2: bool) -> Vec<MultisetEstimate> {
    fn rec(level: usize, l: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if level + 1 == l {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for c in (0..=left).rev() {
            cur.push(c);
            rec(level + 1, l, left - c, cur, out);
            cur.pop();
        }
    }
    if l == 0 {
        return Vec::new();
    }
    let mut raw = Vec::new();
    rec(0, l, eta, &mut Vec::with_capacity(l), &mut raw);
    raw.into_iter()
        .map(MultisetEstimate)
        .filter(|e| !enforce_condition2 || e.satisfies_condition2())
        .collect()
}

/// Elementwise sum `e¹ ⊎ … ⊎ eⁿ`; the empty sum is the zero estimate.
pub fn uplus(estimates: &[MultisetEstimate], levels: usize) -> Result<MultisetEstimate> {
    let mut acc = vec![0u32; levels];
    for e in estimates {
        if e.levels() != levels {
            return Err(MorphError::LengthMismatch {
                expected: levels,
                found: e.levels(),
            });
        }
        for (a, c) in acc.iter_mut().zip(&e.0) {
            *a += c;
        }
    }
    Ok(MultisetEstimate(acc))
}

/// Vector proximity `δ = (δ⁻, δ⁺)` for editing one estimate into another.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Proximity {
    /// One-level improvements (element moved from level ι+1 to ι).
    pub delta_minus: u32,
    /// One-level degradations (element moved from level ι to ι+1).
    pub delta_plus: u32,
}

impl Proximity {
    /// `|δ| = max(δ⁻, δ⁺)`.
    pub fn magnitude(&self) -> u32 {
        self.delta_minus.max(self.delta_plus)
    }

    /// Total number of one-level moves, `δ⁻ + δ⁺`.
    pub fn moves(&self) -> u32 {
        self.delta_minus + self.delta_plus
    }
}

/// Minimal decomposition of the edit `a → b` into improvements and
/// degradations, read off the cumulative sums of both estimates.
pub fn proximity(a: &MultisetEstimate, b: &MultisetEstimate) -> Result<Proximity> {
    if a.levels() != b.levels() {
        return Err(MorphError::LengthMismatch {
            expected: a.levels(),
            found: b.levels(),
        });
    }
    if a.eta() != b.eta() {
        return Err(MorphError::EtaMismatch {
            expected: a.eta(),
            found: b.eta(),
        });
    }
    let (ca, cb) = (cumulative(&a.0), cumulative(&b.0));
    let mut p = Proximity {
        delta_minus: 0,
        delta_plus: 0,
    };
    // the last prefix is η on both sides
    for (x, y) in ca.iter().zip(&cb).take(a.levels().saturating_sub(1)) {
        if y > x {
            p.delta_minus += y - x;
        } else {
            p.delta_plus += x - y;
        }
    }
    Ok(p)
}

/// How per-observation proximities are folded into one deviation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// `Σ_κ max(δ⁻_κ, δ⁺_κ)`.
    #[default]
    Max,
    /// `Σ_κ (δ⁻_κ + δ⁺_κ)`.
    Sum,
    /// `max(Σ_κ δ⁻_κ, Σ_κ δ⁺_κ)`.
    Componentwise,
}

impl std::str::FromStr for Metric {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "max" => Ok(Self::Max),
            "sum" => Ok(Self::Sum),
            "componentwise" => Ok(Self::Componentwise),
            _ => Err(format!("unknown metric `{s}` (max|sum|componentwise)")),
        }
    }
}

/// Total deviation of `candidate` from `observed` under `metric`.
pub fn deviation(candidate: &MultisetEstimate, observed: &[MultisetEstimate], metric: Metric) -> Result<u32> {
    let mut minus = 0;
    let mut plus = 0;
    let mut total = 0;
    for o in observed {
        let p = proximity(candidate, o)?;
        minus += p.delta_minus;
        plus += p.delta_plus;
        total += match metric {
            Metric::Max => p.magnitude(),
            Metric::Sum => p.moves(),
            Metric::Componentwise => 0,
        };
    }
    Ok(match metric {
        Metric::Componentwise => minus.max(plus),
        _ => total,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MedianResult {
    /// All co-minimal estimates, best first.
    pub medians: Vec<MultisetEstimate>,
    pub total: u32,
}

impl MedianResult {
    /// The representative median: the best co-minimal estimate (the
    /// lexicographically greatest, which is always maximal in the
    /// quality order).
    pub fn best(&self) -> &MultisetEstimate {
        &self.medians[0]
    }
}

/// Generalized median: the estimates of the domain minimizing the total
/// deviation from `observed`, found by exhaustive scan.
pub fn generalized_median(
    observed: &[MultisetEstimate],
    l: usize,
    eta: u32,
    enforce_condition2: bool,
    metric: Metric,
) -> Result<MedianResult> {
    if observed.is_empty() {
        return Err(MorphError::EmptyInput("generalized median of no observations".into()));
    }
    for o in observed {
        if o.levels() != l {
            return Err(MorphError::LengthMismatch { expected: l, found: o.levels() });
        }
        if o.eta() != eta {
            return Err(MorphError::EtaMismatch { expected: eta, found: o.eta() });
        }
    }
    let mut best: Option<MedianResult> = None;
    for cand in enumerate_estimates(l, eta, enforce_condition2) {
        let d = deviation(&cand, observed, metric)?;
        match &mut best {
            Some(b) if d > b.total => {}
            Some(b) if d == b.total => b.medians.push(cand),
            _ => {
                best = Some(MedianResult {
                    medians: vec![cand],
                    total: d,
                })
            }
        }
    }
    best.ok_or_else(|| MorphError::EmptyInput("median domain is empty".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(v: &[u32]) -> MultisetEstimate {
        MultisetEstimate::new(v.to_vec())
    }

    #[test]
    fn multiset_numbers() {
        assert_eq!(multiset_number(3, 4), 15);
        assert_eq!(multiset_number(5, 1), 5);
        assert_eq!(multiset_number(2, 3), 4);
        assert_eq!(multiset_number(1, 9), 1);
        assert_eq!(multiset_number(4, 0), 1);
    }

    #[test]
    fn enumerate_small_scales() {
        let two = enumerate_estimates(2, 3, false);
        assert_eq!(two, vec![m(&[3, 0]), m(&[2, 1]), m(&[1, 2]), m(&[0, 3])]);
        assert_eq!(enumerate_estimates(3, 4, false).len(), 15);
        let enforced = enumerate_estimates(3, 4, true);
        assert_eq!(enforced.len(), 12);
        for gap in [m(&[3, 0, 1]), m(&[2, 0, 2]), m(&[1, 0, 3])] {
            assert!(!enforced.contains(&gap));
        }
        assert_eq!(enumerate_estimates(1, 7, true), vec![m(&[7])]);
    }

    #[test]
    fn uplus_examples() {
        assert_eq!(uplus(&[m(&[3, 1, 0]), m(&[1, 3, 0])], 3).unwrap(), m(&[4, 4, 0]));
        let wm2 = [m(&[1, 3, 0]), m(&[3, 1, 0]), m(&[2, 2, 0]), m(&[3, 1, 0]), m(&[3, 1, 0])];
        assert_eq!(uplus(&wm2, 3).unwrap(), m(&[12, 8, 0]));
        assert_eq!(uplus(&[], 3).unwrap(), m(&[0, 0, 0]));
        assert!(uplus(&[m(&[1, 0])], 3).is_err());
    }

    #[test]
    fn proximity_examples() {
        let p = proximity(&m(&[3, 1, 0]), &m(&[1, 3, 0])).unwrap();
        assert_eq!((p.delta_minus, p.delta_plus, p.magnitude()), (0, 2, 2));
        let p = proximity(&m(&[1, 3, 0]), &m(&[1, 2, 1])).unwrap();
        assert_eq!((p.delta_minus, p.delta_plus, p.magnitude()), (0, 1, 1));
        let p = proximity(&m(&[2, 1, 1]), &m(&[2, 1, 1])).unwrap();
        assert_eq!((p.delta_minus, p.delta_plus), (0, 0));
        assert!(matches!(
            proximity(&m(&[1, 0, 0]), &m(&[2, 0, 0])),
            Err(MorphError::EtaMismatch { .. })
        ));
    }

    #[test]
    fn single_observation_is_its_own_median() {
        let r = generalized_median(&[m(&[1, 2, 1])], 3, 4, true, Metric::Max).unwrap();
        assert_eq!(r.total, 0);
        assert_eq!(r.medians, vec![m(&[1, 2, 1])]);
    }

    #[test]
    fn condition2_edge_cases() {
        assert!(m(&[0, 0, 4]).satisfies_condition2());
        assert!(m(&[0, 0, 0]).satisfies_condition2());
        assert!(!m(&[1, 0, 0, 1]).satisfies_condition2());
        assert!(m(&[0, 2, 2, 0]).satisfies_condition2());
    }
}
