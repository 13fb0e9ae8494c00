//! Kernel extension by multiple-choice knapsack: pick one item per choice
//! group under a budget, maximizing total profit.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, Sub};
use std::str::FromStr;

use num_rational::Ratio;
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{MorphError, Result};
use crate::model::canonical_id;

/// Exact non-negative quantity (cost, profit or budget). JSON numbers are
/// read through their shortest decimal form, so `0.1` is exactly `1/10`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Amount(Ratio<i64>);

impl Amount {
    pub const ZERO: Amount = Amount(Ratio::new_raw(0, 1));

    pub fn integer(v: i64) -> Self {
        Self(Ratio::from_integer(v))
    }

    pub fn ratio(&self) -> Ratio<i64> {
        self.0
    }

    pub fn is_negative(&self) -> bool {
        self.0 < Ratio::from_integer(0)
    }

    pub fn to_f64(&self) -> f64 {
        match terminating_decimal(self.0) {
            Some(s) => s.parse().unwrap_or(f64::NAN),
            None => *self.0.numer() as f64 / *self.0.denom() as f64,
        }
    }
}

impl From<i64> for Amount {
    fn from(v: i64) -> Self {
        Self::integer(v)
    }
}

impl Add for Amount {
    type Output = Amount;
    fn add(self, o: Amount) -> Amount {
        Amount(self.0 + o.0)
    }
}

impl Sub for Amount {
    type Output = Amount;
    fn sub(self, o: Amount) -> Amount {
        Amount(self.0 - o.0)
    }
}

impl Sum for Amount {
    fn sum<I: Iterator<Item = Amount>>(iter: I) -> Amount {
        iter.fold(Amount::ZERO, Add::add)
    }
}

/// Exact decimal expansion when the denominator has only factors 2 and 5.
fn terminating_decimal(r: Ratio<i64>) -> Option<String> {
    let (n, d) = (i128::from(*r.numer()), i128::from(*r.denom()));
    if d == 1 {
        return Some(n.to_string());
    }
    let (mut rest, mut twos, mut fives) = (d, 0u32, 0u32);
    while rest % 2 == 0 {
        rest /= 2;
        twos += 1;
    }
    while rest % 5 == 0 {
        rest /= 5;
        fives += 1;
    }
    if rest != 1 {
        return None;
    }
    let digits = twos.max(fives) as usize;
    let scaled = n * (10i128.pow(digits as u32) / d);
    let s = format!("{:0>width$}", scaled.abs(), width = digits + 1);
    let (int, frac) = s.split_at(s.len() - digits);
    Some(format!("{}{int}.{frac}", if n < 0 { "-" } else { "" }))
}

impl fmt::Display for Amount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match terminating_decimal(self.0) {
            Some(s) => f.write_str(&s),
            None => write!(f, "{}/{}", self.0.numer(), self.0.denom()),
        }
    }
}

impl FromStr for Amount {
    type Err = String;

    /// Accepts integers, decimals (`2.5`) and fractions (`5/2`).
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let bad = || format!("malformed amount `{s}`");
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            let n: i64 = n.trim().parse().map_err(|_| bad())?;
            let d: i64 = d.trim().parse().map_err(|_| bad())?;
            if d == 0 {
                return Err(bad());
            }
            return Ok(Self(Ratio::new(n, d)));
        }
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        if frac.len() > 18 || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let neg = int.starts_with('-');
        let whole: i64 = if int.is_empty() || int == "-" { 0 } else { int.parse().map_err(|_| bad())? };
        let den = 10i64.checked_pow(frac.len() as u32).ok_or_else(bad)?;
        let f: i64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
        let num = whole
            .checked_mul(den)
            .and_then(|w| if neg { w.checked_sub(f) } else { w.checked_add(f) })
            .ok_or_else(bad)?;
        Ok(Self(Ratio::new(num, den)))
    }
}

impl Serialize for Amount {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_integer() {
            s.serialize_i64(*self.0.numer())
        } else {
            s.serialize_f64(self.to_f64())
        }
    }
}

impl<'de> Deserialize<'de> for Amount {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Amount;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number or a decimal/fraction string")
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Amount, E> {
                Ok(Amount::integer(v))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Amount, E> {
                i64::try_from(v).map(Amount::integer).map_err(|_| E::custom("amount too large"))
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Amount, E> {
                if !v.is_finite() {
                    return Err(E::custom("amount must be finite"));
                }
                v.to_string().parse().map_err(E::custom)
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Amount, E> {
                v.parse().map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Item {
    pub id: String,
    pub cost: Amount,
    pub profit: Amount,
}

impl Item {
    pub fn new(id: impl Into<String>, cost: impl Into<Amount>, profit: impl Into<Amount>) -> Self {
        Self {
            id: id.into(),
            cost: cost.into(),
            profit: profit.into(),
        }
    }
}

/// The alternatives of one component; exactly one is chosen.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChoiceGroup {
    pub component: String,
    pub items: Vec<Item>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    pub feasible: bool,
    /// component → item id, in group order
    pub picks: Vec<(String, String)>,
    pub cost: Amount,
    pub profit: Amount,
}

impl Selection {
    fn infeasible() -> Self {
        Self {
            feasible: false,
            picks: Vec::new(),
            cost: Amount::ZERO,
            profit: Amount::ZERO,
        }
    }

    pub fn item_ids(&self) -> Vec<&str> {
        self.picks.iter().map(|(_, i)| i.as_str()).collect()
    }
}

fn check_groups(groups: &[ChoiceGroup], budget: Amount) -> Result<()> {
    if budget.is_negative() {
        return Err(MorphError::OutOfRange(format!("budget {budget} is negative")));
    }
    let mut ids = BTreeSet::new();
    let mut comps = BTreeSet::new();
    for g in groups {
        if g.items.is_empty() {
            return Err(MorphError::EmptyGroup(g.component.clone()));
        }
        if !comps.insert(g.component.as_str()) {
            return Err(MorphError::DuplicateItem(g.component.clone()));
        }
        for it in &g.items {
            if !ids.insert(it.id.as_str()) {
                return Err(MorphError::DuplicateItem(it.id.clone()));
            }
            if it.cost.is_negative() || it.profit.is_negative() {
                return Err(MorphError::OutOfRange(format!("item `{}` has a negative cost or profit", it.id)));
            }
        }
    }
    Ok(())
}

fn min_cost(g: &ChoiceGroup) -> Amount {
    g.items.iter().map(|i| i.cost).min().unwrap_or(Amount::ZERO)
}

/// Greedy by profit/cost ratio, highest first. Equal ratios are ordered by
/// profit (higher first), then cost (lower first), then item id. An item
/// is taken only if the budget left after it still covers the cheapest
/// item of every group not yet filled, so the result is always feasible
/// when any feasible selection exists.
pub fn solve_greedy(groups: &[ChoiceGroup], budget: Amount) -> Result<Selection> {
    check_groups(groups, budget)?;
    let mins: Vec<Amount> = groups.iter().map(min_cost).collect();
    if mins.iter().copied().sum::<Amount>() > budget {
        return Ok(Selection::infeasible());
    }
    let mut order: Vec<(usize, &Item)> = groups
        .iter()
        .enumerate()
        .flat_map(|(g, grp)| grp.items.iter().map(move |i| (g, i)))
        .collect();
    order.sort_by(|(_, a), (_, b)| {
        ratio_cmp(b, a)
            .then_with(|| b.profit.cmp(&a.profit))
            .then_with(|| a.cost.cmp(&b.cost))
            .then_with(|| a.id.cmp(&b.id))
    });

    let mut chosen: Vec<Option<&Item>> = vec![None; groups.len()];
    let mut remaining = budget;
    for (g, item) in order {
        if chosen[g].is_some() {
            continue;
        }
        let reserve: Amount = mins
            .iter()
            .enumerate()
            .filter(|&(h, _)| h != g && chosen[h].is_none())
            .map(|(_, &m)| m)
            .sum();
        if item.cost + reserve <= remaining {
            chosen[g] = Some(item);
            remaining = remaining - item.cost;
        }
    }
    let items: Vec<&Item> = chosen.into_iter().map(|c| c.expect("reserve guard fills every group")).collect();
    Ok(selection(groups, &items))
}

/// Compares `a.profit / a.cost` with `b.profit / b.cost`; zero cost with
/// positive profit ranks above every finite ratio.
fn ratio_cmp(a: &Item, b: &Item) -> Ordering {
    let zero = Amount::ZERO;
    match (a.cost == zero, b.cost == zero) {
        (true, true) => a.profit.cmp(&b.profit),
        (true, false) => {
            if a.profit > zero {
                Ordering::Greater
            } else {
                Ordering::Less
            }
        }
        (false, true) => ratio_cmp(b, a).reverse(),
        (false, false) => (a.profit.0 / a.cost.0).cmp(&(b.profit.0 / b.cost.0)),
    }
}

fn selection(groups: &[ChoiceGroup], items: &[&Item]) -> Selection {
    Selection {
        feasible: true,
        picks: groups
            .iter()
            .zip(items)
            .map(|(g, i)| (g.component.clone(), i.id.clone()))
            .collect(),
        cost: items.iter().map(|i| i.cost).sum(),
        profit: items.iter().map(|i| i.profit).sum(),
    }
}

/// Largest cost grid the exact solver accepts (`groups × budget cells`).
pub const GRID_CAP: u128 = 50_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactSolution {
    /// Lowest-cost optimum, ties broken by item ids.
    pub best: Selection,
    /// Every optimal selection, same order.
    pub optima: Vec<Selection>,
}

/// Exact optimum by dynamic programming over integer costs. Amounts are
/// scaled by the least common denominator of all costs and the budget.
/// Returns `InfeasibleBudget` if no selection fits.
pub fn solve_exact(groups: &[ChoiceGroup], budget: Amount) -> Result<ExactSolution> {
    check_groups(groups, budget)?;
    let scale = groups
        .iter()
        .flat_map(|g| g.items.iter().map(|i| *i.cost.0.denom()))
        .fold(*budget.0.denom(), num_lcm);
    let to_grid = |a: Amount| -> i128 { i128::from(*a.0.numer()) * i128::from(scale) / i128::from(*a.0.denom()) };
    let cap = to_grid(budget);
    let cells = (cap as u128 + 1) * (groups.len() as u128 + 1);
    if cells > GRID_CAP {
        return Err(MorphError::GridTooLarge(cells));
    }
    let cap = cap as usize;
    let costs: Vec<Vec<usize>> = groups
        .iter()
        .map(|g| g.items.iter().map(|i| to_grid(i.cost) as usize).collect())
        .collect();

    // best[g][c]: max profit over the first g groups at exact cost c
    let mut best: Vec<Vec<Option<Ratio<i64>>>> = vec![vec![None; cap + 1]; groups.len() + 1];
    best[0][0] = Some(Ratio::from_integer(0));
    for (g, grp) in groups.iter().enumerate() {
        for c in 0..=cap {
            let Some(p) = best[g][c] else { continue };
            for (k, item) in grp.items.iter().enumerate() {
                let nc = c + costs[g][k];
                if nc > cap {
                    continue;
                }
                let np = p + item.profit.0;
                let cell = &mut best[g + 1][nc];
                if cell.is_none_or(|old| np > old) {
                    *cell = Some(np);
                }
            }
        }
    }
    let opt = best[groups.len()]
        .iter()
        .flatten()
        .max()
        .copied()
        .ok_or_else(|| MorphError::InfeasibleBudget(budget.to_string()))?;

    let mut optima = Vec::new();
    let mut path = vec![0usize; groups.len()];
    for c in 0..=cap {
        if best[groups.len()][c] == Some(opt) {
            backtrack(groups, &costs, &best, groups.len(), c, opt, &mut path, &mut optima);
        }
    }
    optima.sort_by(|a: &Selection, b: &Selection| a.cost.cmp(&b.cost).then_with(|| a.item_ids().cmp(&b.item_ids())));
    optima.dedup();
    Ok(ExactSolution {
        best: optima[0].clone(),
        optima,
    })
}

#[allow(clippy::too_many_arguments)]
fn backtrack(
    groups: &[ChoiceGroup],
    costs: &[Vec<usize>],
    best: &[Vec<Option<Ratio<i64>>>],
    g: usize,
    c: usize,
    p: Ratio<i64>,
    path: &mut Vec<usize>,
    out: &mut Vec<Selection>,
) {
    if g == 0 {
        if c == 0 {
            let items: Vec<&Item> = path.iter().enumerate().map(|(h, &k)| &groups[h].items[k]).collect();
            out.push(selection(groups, &items));
        }
        return;
    }
    for (k, item) in groups[g - 1].items.iter().enumerate() {
        let ic = costs[g - 1][k];
        if ic > c {
            continue;
        }
        if best[g - 1][c - ic] == Some(p - item.profit.0) {
            path[g - 1] = k;
            backtrack(groups, costs, best, g - 1, c - ic, p - item.profit.0, path, out);
        }
    }
}

fn num_lcm(a: i64, b: i64) -> i64 {
    fn gcd(a: i64, b: i64) -> i64 {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    a / gcd(a, b) * b
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Greedy,
    Exact,
}

impl FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "greedy" => Ok(Self::Greedy),
            "exact" => Ok(Self::Exact),
            _ => Err(format!("unknown method `{s}` (greedy|exact)")),
        }
    }
}

/// A full system solution: the kernel picks plus one item per group.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggregatedSolution {
    pub id: String,
    /// component → pick, ordered by component id
    pub picks: BTreeMap<String, String>,
    pub cost: Amount,
    pub profit: Amount,
}

/// Merges the fixed kernel picks with a knapsack selection.
pub fn extend_kernel(kernel: &BTreeMap<String, String>, selection: &Selection) -> Result<AggregatedSolution> {
    if !selection.feasible {
        return Err(MorphError::InfeasibleBudget("selection is infeasible".into()));
    }
    let mut picks = kernel.clone();
    for (comp, item) in &selection.picks {
        if picks.insert(comp.clone(), item.clone()).is_some() {
            return Err(MorphError::ComponentOverlap(comp.clone()));
        }
    }
    let ids: Vec<&String> = picks.values().collect();
    Ok(AggregatedSolution {
        id: canonical_id(&ids),
        picks,
        cost: selection.cost,
        profit: selection.profit,
    })
}

/// Checks that no kernel component is also a choice group.
pub fn check_overlap(kernel: &BTreeMap<String, String>, groups: &[ChoiceGroup]) -> Result<()> {
    match groups.iter().find(|g| kernel.contains_key(&g.component)) {
        Some(g) => Err(MorphError::ComponentOverlap(g.component.clone())),
        None => Ok(()),
    }
}
