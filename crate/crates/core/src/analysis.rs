//! Bottleneck detection, model improvement actions, and the kernel and
//! superstructure of a solution set.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{MorphError, Result};
use crate::instance::{CompositeSolution, NodeInstance};
use crate::model::{CompatEntry, CompatibilityTable, MorphModel, RefResolution, QUALIFIER};
use crate::quality::QualityVector;

/// An alternative addressed through the child that offers it.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Slot {
    pub child: String,
    pub alternative: String,
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.alternative)
    }
}

/// A one-step upgrade of the model at a composite node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Action {
    /// Raise the priority of one alternative (`to` is the smaller number).
    Priority { slot: Slot, from: u8, to: u8 },
    /// Raise one pairwise compatibility.
    Compatibility { a: Slot, b: Slot, from: u8, to: u8 },
}

impl Action {
    pub fn target(&self) -> String {
        match self {
            Action::Priority { slot, .. } => slot.to_string(),
            Action::Compatibility { a, b, .. } => format!("({a},{b})"),
        }
    }

    pub fn from_to(&self) -> (u8, u8) {
        match *self {
            Action::Priority { from, to, .. } | Action::Compatibility { from, to, .. } => (from, to),
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (from, to) = self.from_to();
        match self {
            Action::Priority { .. } => write!(f, "priority {} {from}=>{to}", self.target()),
            Action::Compatibility { .. } => write!(f, "compat {} {from}=>{to}", self.target()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bottleneck {
    pub node: String,
    pub solution: String,
    pub action: Action,
    pub before: QualityVector,
    pub after: QualityVector,
    /// `after` strictly dominates `before`.
    pub improves: bool,
}

fn e_gain(before: &QualityVector, after: &QualityVector) -> i64 {
    let (a, b) = (after.e.cumulative(), before.e.cumulative());
    a.iter().zip(&b).map(|(&x, &y)| i64::from(x) - i64::from(y)).sum()
}

/// Candidate one-step upgrades for `solution` on `inst`, each scored by the
/// quality the solution would have afterwards.
///
/// Every pick with priority ≥ 2 yields a priority upgrade by one level; when
/// `w < ν`, every pair attaining `w` yields a compatibility upgrade by one
/// grade. Strict improvements come first, then larger gains in `w`, then in
/// the e-vector, then by target name.
pub fn bottlenecks(inst: &NodeInstance, solution: &CompositeSolution) -> Result<Vec<Bottleneck>> {
    let picks = inst.resolve_picks(&solution.picks)?;
    let before = inst.quality(&picks);
    let slot = |ci: usize, a: usize| Slot {
        child: inst.children()[ci].clone(),
        alternative: inst.options()[ci][a].id.clone(),
    };
    let mut out = Vec::new();
    let mut push = |action: Action, after: QualityVector| {
        out.push(Bottleneck {
            node: inst.node().to_string(),
            solution: solution.id.clone(),
            improves: after.strictly_dominates(&before),
            action,
            before: before.clone(),
            after,
        });
    };

    for (ci, &a) in picks.iter().enumerate() {
        let p = inst.options()[ci][a].priority;
        if p >= 2 {
            let mut alt = inst.clone();
            alt.set_priority(ci, a, p - 1);
            push(
                Action::Priority { slot: slot(ci, a), from: p, to: p - 1 },
                alt.quality(&picks),
            );
        }
    }
    if before.w < inst.scale().nu {
        for (ci, &a) in picks.iter().enumerate() {
            for (cj, &b) in picks.iter().enumerate().skip(ci + 1) {
                if inst.compat(ci, a, cj, b) != before.w {
                    continue;
                }
                let mut alt = inst.clone();
                alt.set_compat((ci, a), (cj, b), before.w + 1);
                push(
                    Action::Compatibility {
                        a: slot(ci, a),
                        b: slot(cj, b),
                        from: before.w,
                        to: before.w + 1,
                    },
                    alt.quality(&picks),
                );
            }
        }
    }

    out.sort_by(|x, y| {
        y.improves
            .cmp(&x.improves)
            .then_with(|| y.after.w.cmp(&x.after.w))
            .then_with(|| e_gain(&y.before, &y.after).cmp(&e_gain(&x.before, &x.after)))
            .then_with(|| x.action.target().cmp(&y.action.target()))
    });
    Ok(out)
}

/// Applies `action` at composite `node`, returning the modified model.
///
/// Priority upgrades rewrite the DA of a leaf child, or record a priority
/// override on a composite child. Compatibility upgrades rewrite the
/// matching table entries of `node`, adding a qualified entry when the pair
/// was covered by the default. The current value must equal `from`.
pub fn apply_improvement(model: &MorphModel, node: &str, action: &Action) -> Result<MorphModel> {
    let (from, to) = action.from_to();
    if from == to {
        return Err(MorphError::NoOpAction(from));
    }
    let mut out = model.clone();
    let scale = model.scale;
    match action {
        Action::Priority { slot, .. } => {
            if !(1..=scale.l).contains(&to) {
                return Err(MorphError::OutOfRange(format!("priority {to} out of [1,{}]", scale.l)));
            }
            let parent = model.require(node)?;
            if !parent.children.contains(&slot.child) {
                return Err(MorphError::UnknownReference {
                    reference: slot.child.clone(),
                    context: format!("children of `{node}`"),
                });
            }
            let child = out
                .component_mut(&slot.child)
                .ok_or_else(|| MorphError::UnknownReference {
                    reference: slot.child.clone(),
                    context: "model components".into(),
                })?;
            if child.is_leaf() {
                let da = child
                    .das
                    .iter_mut()
                    .find(|d| d.id == slot.alternative)
                    .ok_or_else(|| MorphError::UnknownReference {
                        reference: slot.alternative.clone(),
                        context: format!("alternatives of `{}`", slot.child),
                    })?;
                if da.priority != from {
                    return Err(MorphError::StaleAction { expected: from, found: da.priority });
                }
                da.priority = to;
            } else {
                if let Some(&cur) = child.priority_overrides.get(&slot.alternative) {
                    if cur != from {
                        return Err(MorphError::StaleAction { expected: from, found: cur });
                    }
                }
                child.priority_overrides.insert(slot.alternative.clone(), to);
            }
        }
        Action::Compatibility { a, b, .. } => {
            if to > scale.nu {
                return Err(MorphError::OutOfRange(format!("compatibility {to} out of [0,{}]", scale.nu)));
            }
            let comp = model.require(node)?;
            let ia = comp.children.iter().position(|c| *c == a.child);
            let ib = comp.children.iter().position(|c| *c == b.child);
            let (Some(ia), Some(ib)) = (ia, ib) else {
                return Err(MorphError::UnknownReference {
                    reference: format!("{}/{}", a.child, b.child),
                    context: format!("children of `{node}`"),
                });
            };
            let want = |r: &str, ci: usize, id: &str| {
                matches!(model.resolve_ref(comp, r), RefResolution::Found(i, ref d) if i == ci && d == id)
            };
            let hits: Vec<usize> = comp
                .compat
                .iter()
                .flat_map(|t| t.entries.iter().enumerate())
                .filter(|(_, CompatEntry(x, y, _))| {
                    (want(x, ia, &a.alternative) && want(y, ib, &b.alternative))
                        || (want(x, ib, &b.alternative) && want(y, ia, &a.alternative))
                })
                .map(|(k, _)| k)
                .collect();
            let default = comp.compat_default(&scale);
            let target = out.component_mut(node).expect("node exists");
            let table = target.compat.get_or_insert_with(CompatibilityTable::default);
            if hits.is_empty() {
                if default != from {
                    return Err(MorphError::StaleAction { expected: from, found: default });
                }
                table.entries.push(CompatEntry(
                    format!("{}{QUALIFIER}{}", a.child, a.alternative),
                    format!("{}{QUALIFIER}{}", b.child, b.alternative),
                    to,
                ));
            } else {
                for k in hits {
                    let cur = table.entries[k].2;
                    if cur != from {
                        return Err(MorphError::StaleAction { expected: from, found: cur });
                    }
                    table.entries[k].2 = to;
                }
            }
        }
    }
    Ok(out)
}

/// Per-component pick frequencies over a solution set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    /// component → pick shared by enough solutions
    pub picks: BTreeMap<String, String>,
    pub frequencies: BTreeMap<String, BTreeMap<String, usize>>,
    pub total: usize,
    pub threshold: f64,
}

fn frequencies(selections: &[&IndexMap<String, String>]) -> Result<BTreeMap<String, BTreeMap<String, usize>>> {
    let first = selections
        .first()
        .ok_or_else(|| MorphError::EmptyInput("kernel of an empty solution set".into()))?;
    let comps: BTreeSet<&String> = first.keys().collect();
    let mut freq: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    for s in selections {
        let here: BTreeSet<&String> = s.keys().collect();
        if here != comps {
            let missing = comps
                .symmetric_difference(&here)
                .next()
                .map(|c| c.to_string())
                .unwrap_or_default();
            return Err(MorphError::IncompleteSolution { node: "solution set".into(), child: missing });
        }
        for (c, p) in s.iter() {
            *freq.entry(c.clone()).or_default().entry(p.clone()).or_default() += 1;
        }
    }
    Ok(freq)
}

/// Components on which the most frequent pick appears in at least
/// `threshold` of the solutions (`1.0`: picks common to all).
/// Ties between equally frequent picks go to the smaller id.
pub fn kernel(selections: &[&IndexMap<String, String>], threshold: f64) -> Result<Kernel> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(MorphError::OutOfRange(format!("kernel threshold {threshold} outside (0,1]")));
    }
    let freq = frequencies(selections)?;
    let n = selections.len();
    let picks = freq
        .iter()
        .filter_map(|(c, f)| {
            let (pick, &count) = f.iter().max_by(|a, b| a.1.cmp(b.1).then_with(|| b.0.cmp(a.0)))?;
            (count as f64 >= threshold * n as f64).then(|| (c.clone(), pick.clone()))
        })
        .collect();
    Ok(Kernel {
        picks,
        frequencies: freq,
        total: n,
        threshold,
    })
}

/// Every pick used by some solution, per component.
pub fn superstructure(selections: &[&IndexMap<String, String>]) -> Result<BTreeMap<String, BTreeSet<String>>> {
    Ok(frequencies(selections)?
        .into_iter()
        .map(|(c, f)| (c, f.into_keys().collect()))
        .collect())
}

/// Convenience wrapper over [`kernel`] for composite solutions.
pub fn solution_kernel(solutions: &[CompositeSolution], threshold: f64) -> Result<Kernel> {
    let sel: Vec<&IndexMap<String, String>> = solutions.iter().map(|s| &s.picks).collect();
    kernel(&sel, threshold)
}
