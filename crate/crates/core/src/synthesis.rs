//! Morphological clique composition: admissible selections, Pareto layers and
//! bottom-up synthesis over the whole tree.

use std::collections::{BTreeMap, BTreeSet};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{MorphError, Result};
use crate::instance::{Candidate, CompositeSolution, NodeInstance};
use crate::model::MorphModel;
use crate::multiset::{generalized_median, Metric, MultisetEstimate};
use crate::quality::{dominates_raw, EVector, QualityVector};

/// Solutions of one node with their Pareto layer (1 = nondominated).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Frontier {
    pub node: String,
    pub solutions: Vec<CompositeSolution>,
    pub layers: Vec<usize>,
}

impl Frontier {
    pub fn len(&self) -> usize {
        self.solutions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.solutions.is_empty()
    }

    pub fn layer(&self, k: usize) -> impl Iterator<Item = &CompositeSolution> {
        self.solutions
            .iter()
            .zip(&self.layers)
            .filter(move |(_, &l)| l == k)
            .map(|(s, _)| s)
    }

    pub fn first_layer(&self) -> Vec<&CompositeSolution> {
        self.layer(1).collect()
    }

    pub fn depth(&self) -> usize {
        self.layers.iter().copied().max().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&CompositeSolution, usize)> {
        self.solutions.iter().zip(self.layers.iter().copied())
    }

    pub fn find(&self, id: &str) -> Option<(&CompositeSolution, usize)> {
        self.iter().find(|(s, _)| s.id == id)
    }
}

/// Iterative peeling over distinct keys: layer 1 holds the keys no other key
/// strictly dominates, layer 2 those of the remainder, and so on.
pub(crate) fn peel_layers<K: Ord + Clone>(keys: &BTreeSet<K>, strictly: impl Fn(&K, &K) -> bool) -> BTreeMap<K, usize> {
    let mut rest: Vec<K> = keys.iter().cloned().collect();
    let mut out = BTreeMap::new();
    let mut layer = 0;
    while !rest.is_empty() {
        layer += 1;
        let (top, below): (Vec<K>, Vec<K>) = rest
            .iter()
            .cloned()
            .partition(|k| !rest.iter().any(|o| strictly(o, k)));
        for k in top {
            out.insert(k, layer);
        }
        rest = below;
    }
    out
}

/// Calls `f` with every selection whose pairwise compatibilities are all ≥ 1.
pub(crate) fn for_each_admissible(inst: &NodeInstance, mut f: impl FnMut(&[usize])) -> Result<()> {
    let m = inst.children().len();
    if let Some(ci) = inst.options().iter().position(Vec::is_empty) {
        return Err(MorphError::InfeasibleNode(format!(
            "{} (child `{}` offers no alternatives)",
            inst.node(),
            inst.children()[ci]
        )));
    }
    let mut picks = Vec::with_capacity(m);
    fn rec(inst: &NodeInstance, picks: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        let ci = picks.len();
        if ci == inst.children().len() {
            f(picks);
            return;
        }
        for a in 0..inst.options()[ci].len() {
            let ok = picks
                .iter()
                .enumerate()
                .all(|(cj, &b)| inst.compat(cj, b, ci, a) >= 1);
            if ok {
                picks.push(a);
                rec(inst, picks, f);
                picks.pop();
            }
        }
    }
    rec(inst, &mut picks, &mut f);
    Ok(())
}

/// Stage 1: every selection with `w(S) ≥ 1`, scored.
pub fn enumerate_admissible(inst: &NodeInstance) -> Result<Vec<CompositeSolution>> {
    let mut out = Vec::new();
    for_each_admissible(inst, |p| out.push(inst.solution(p)))?;
    Ok(out)
}

/// Stage 2: Pareto layers by iterative peeling. Output is sorted by layer,
/// then `w` descending, e descending, pick ids.
pub fn pareto_filter(node: &str, solutions: Vec<CompositeSolution>) -> Frontier {
    let keys: BTreeSet<QualityVector> = solutions.iter().map(|s| s.quality.clone()).collect();
    let layer_of = peel_layers(&keys, |a, b| a.strictly_dominates(b));
    let mut ranked: Vec<(usize, CompositeSolution)> =
        solutions.into_iter().map(|s| (layer_of[&s.quality], s)).collect();
    ranked.sort_by(|(la, a), (lb, b)| {
        la.cmp(lb)
            .then_with(|| a.quality.cmp(&b.quality))
            .then_with(|| a.pick_ids().cmp(&b.pick_ids()))
    });
    let (layers, solutions) = ranked.into_iter().unzip();
    Frontier {
        node: node.to_string(),
        solutions,
        layers,
    }
}

/// Full enumeration followed by Pareto layering.
pub fn synthesize_brute(inst: &NodeInstance) -> Result<Frontier> {
    Ok(pareto_filter(inst.node(), enumerate_admissible(inst)?))
}

struct Partial {
    picks: Vec<usize>,
    w: u8,
    e: EVector,
    /// per global option index: min compatibility with the picks so far
    profile: Vec<u8>,
}

/// Series construction over the children, left to right.
///
/// After each child the partial selections are pruned: `B` is dropped when
/// some kept `A` has `w_A ≥ w_B`, a pointwise larger-or-equal compatibility
/// profile towards every remaining option, and an e-vector strictly better
/// than `B`'s. Every completion of `B` is then strictly dominated by the
/// same completion of `A`, so the nondominated layer is preserved exactly.
/// Returns layer 1 only.
pub fn synthesize_dp(inst: &NodeInstance) -> Result<Frontier> {
    let m = inst.children().len();
    if let Some(ci) = inst.options().iter().position(Vec::is_empty) {
        return Err(MorphError::InfeasibleNode(format!(
            "{} (child `{}` offers no alternatives)",
            inst.node(),
            inst.children()[ci]
        )));
    }
    let scale = inst.scale();
    let offsets = inst.offsets();
    let n = offsets[m];
    let mut states = vec![Partial {
        picks: Vec::new(),
        w: scale.nu,
        e: EVector::zeros(scale.levels()),
        profile: vec![scale.nu; n],
    }];

    for ci in 0..m {
        let mut next = Vec::new();
        for s in &states {
            for (a, cand) in inst.options()[ci].iter().enumerate() {
                let g = offsets[ci] + a;
                let w = s.w.min(s.profile[g]);
                if w == 0 {
                    continue;
                }
                let mut profile = s.profile.clone();
                for (x, p) in profile.iter_mut().enumerate().skip(offsets[ci + 1]) {
                    *p = (*p).min(inst.compat_global(g, x));
                }
                let mut e = s.e.clone();
                e.bump(cand.priority);
                let mut picks = s.picks.clone();
                picks.push(a);
                next.push(Partial { picks, w, e, profile });
            }
        }
        states = if ci + 1 < m {
            prune(next, offsets[ci + 1])
        } else {
            next
        };
    }

    let solutions = states.iter().map(|s| inst.solution(&s.picks)).collect();
    let mut frontier = pareto_filter(inst.node(), solutions);
    let keep = frontier.layers.iter().take_while(|&&l| l == 1).count();
    frontier.solutions.truncate(keep);
    frontier.layers.truncate(keep);
    Ok(frontier)
}

fn prune(mut states: Vec<Partial>, tail: usize) -> Vec<Partial> {
    // a strict e-dominator is lexicographically greater, so it comes first
    states.sort_by(|a, b| b.e.cmp(&a.e).then_with(|| b.w.cmp(&a.w)));
    let mut kept: Vec<Partial> = Vec::new();
    for s in states {
        let dominated = kept.iter().any(|k| {
            k.w >= s.w
                && k.e != s.e
                && dominates_raw(k.e.counts(), s.e.counts())
                && k.profile[tail..].iter().zip(&s.profile[tail..]).all(|(a, b)| a >= b)
        });
        if !dominated {
            kept.push(s);
        }
    }
    kept
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Brute,
    #[default]
    Dp,
}

impl std::str::FromStr for Algorithm {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "brute" => Ok(Self::Brute),
            "dp" => Ok(Self::Dp),
            _ => Err(format!("unknown algorithm `{s}` (brute|dp)")),
        }
    }
}

/// Which frontier solutions a composite node passes to its parent when it
/// declares no explicit `retain` list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Retention {
    /// Every admissible layer.
    #[default]
    All,
    /// Layers `1..=k`.
    Layers(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SynthesisOptions {
    pub algorithm: Algorithm,
    pub retention: Retention,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetainedSolution {
    pub solution: CompositeSolution,
    pub layer: usize,
    /// Priority the solution carries as an alternative of the parent.
    pub priority: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeSynthesis {
    pub frontier: Frontier,
    /// Labelled solutions declared on the component, evaluated directly.
    pub named: Vec<CompositeSolution>,
    pub retained: Vec<RetainedSolution>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Synthesis {
    /// Post-order (children first).
    pub order: Vec<String>,
    pub nodes: BTreeMap<String, NodeSynthesis>,
    /// Nodes without admissible solutions, and their ancestors.
    pub infeasible: Vec<String>,
    pub warnings: Vec<String>,
}

impl Synthesis {
    pub fn frontier(&self, node: &str) -> Option<&Frontier> {
        self.nodes.get(node).map(|n| &n.frontier)
    }

    pub fn is_feasible(&self) -> bool {
        self.infeasible.is_empty()
    }

    /// The instance a composite node was solved on, rebuilt from the
    /// children's retained solutions.
    pub fn instance(&self, model: &MorphModel, node: &str) -> Result<NodeInstance> {
        let comp = model.require(node)?;
        let options = comp
            .children
            .iter()
            .map(|c| {
                self.nodes
                    .get(c)
                    .map(candidates)
                    .ok_or_else(|| MorphError::InfeasibleNode(c.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        NodeInstance::new(model, node, options)
    }
}

fn candidates(ns: &NodeSynthesis) -> Vec<Candidate> {
    ns.retained
        .iter()
        .map(|r| Candidate {
            id: r.solution.id.clone(),
            priority: r.priority,
            estimate: None,
        })
        .collect()
}

/// Bottom-up synthesis over the tree.
///
/// Leaves pass their alternatives through unchanged. Each composite node is
/// composed from its children's retained solutions; a retained solution
/// enters the parent with priority equal to its Pareto layer (capped at `l`)
/// unless the component overrides it. With [`Algorithm::Dp`] only layer 1 is
/// computed, so [`Retention`] has no further effect.
pub fn hierarchical_synthesize(model: &MorphModel, options: SynthesisOptions) -> Result<Synthesis> {
    crate::model::validate_model(model).into_result()?;
    let mut out = Synthesis::default();
    for id in model.post_order() {
        out.order.push(id.to_string());
        let comp = model.require(id)?;
        if comp.is_leaf() {
            let inst_solutions: Vec<CompositeSolution> = comp
                .das
                .iter()
                .map(|d| {
                    let mut e = EVector::zeros(model.scale.levels());
                    e.bump(d.priority);
                    CompositeSolution {
                        node: id.to_string(),
                        id: d.id.clone(),
                        picks: [(id.to_string(), d.id.clone())].into_iter().collect(),
                        quality: QualityVector { w: model.scale.nu, e },
                    }
                })
                .collect();
            let frontier = pareto_filter(id, inst_solutions);
            let retained = frontier
                .iter()
                .map(|(s, layer)| RetainedSolution {
                    priority: comp.da(&s.id).map(|d| d.priority).unwrap_or(1),
                    solution: s.clone(),
                    layer,
                })
                .collect();
            out.nodes.insert(
                id.to_string(),
                NodeSynthesis {
                    frontier,
                    named: Vec::new(),
                    retained,
                },
            );
            continue;
        }

        if comp.children.iter().any(|c| out.infeasible.contains(c)) {
            out.infeasible.push(id.to_string());
            continue;
        }
        let inst = out.instance(model, id)?;
        let frontier = match options.algorithm {
            Algorithm::Brute => synthesize_brute(&inst),
            Algorithm::Dp => synthesize_dp(&inst),
        };
        let frontier = match frontier {
            Ok(f) if !f.is_empty() => f,
            Ok(_) | Err(MorphError::InfeasibleNode(_)) => {
                out.infeasible.push(id.to_string());
                continue;
            }
            Err(e) => return Err(e),
        };

        let named: Vec<CompositeSolution> = inst.named().iter().map(|(_, p)| inst.solution(p)).collect();
        for label in comp.named.keys() {
            if !inst.named().iter().any(|(l, _)| l == label) {
                out.warnings.push(format!(
                    "named solution {id}/{label} picks a solution its child did not retain; skipped"
                ));
            }
        }
        for s in &named {
            if s.quality.w == 0 {
                out.warnings.push(format!(
                    "named solution {}/{} is inadmissible (w = 0)",
                    id, s.id
                ));
            }
        }

        let pool = match &comp.retain {
            Some(list) => {
                let chosen: Vec<CompositeSolution> = list
                    .iter()
                    .filter_map(|label| named.iter().find(|s| &s.id == label))
                    .filter(|s| s.quality.w >= 1)
                    .cloned()
                    .collect();
                pareto_filter(id, chosen)
            }
            None => {
                let mut f = frontier.clone();
                if let Retention::Layers(k) = options.retention {
                    let keep = f.layers.iter().take_while(|&&l| l <= k).count();
                    f.solutions.truncate(keep);
                    f.layers.truncate(keep);
                }
                f
            }
        };
        if pool.is_empty() {
            out.infeasible.push(id.to_string());
            continue;
        }
        let retained = pool
            .iter()
            .map(|(s, layer)| RetainedSolution {
                priority: comp
                    .priority_overrides
                    .get(&s.id)
                    .copied()
                    .unwrap_or_else(|| layer.min(usize::from(model.scale.l)) as u8),
                solution: s.clone(),
                layer,
            })
            .collect();
        out.nodes.insert(
            id.to_string(),
            NodeSynthesis {
                frontier,
                named,
                retained,
            },
        );
    }
    Ok(out)
}

/// A selection scored with multiset estimates: `w` as usual and the
/// generalized median of the picked estimates in place of the e-vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultisetSolution {
    pub node: String,
    pub id: String,
    pub picks: IndexMap<String, String>,
    pub w: u8,
    pub median: MultisetEstimate,
    /// Total deviation of the median from the picked estimates.
    pub deviation: u32,
    /// Every co-minimal median, best first.
    pub co_minimal: Vec<MultisetEstimate>,
}

impl MultisetSolution {
    /// At least as good: `w` and median no worse; on equal `w` and median
    /// the smaller deviation wins.
    fn at_least(&self, other: &Self) -> bool {
        multiset_key_at_least(&self.key(), &other.key())
    }

    fn key(&self) -> (u8, MultisetEstimate, u32) {
        (self.w, self.median.clone(), self.deviation)
    }
}

fn multiset_key_at_least(a: &(u8, MultisetEstimate, u32), b: &(u8, MultisetEstimate, u32)) -> bool {
    if a.0 == b.0 && a.1 == b.1 {
        return a.2 <= b.2;
    }
    a.0 >= b.0 && a.1.dominates(&b.1)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultisetFrontier {
    pub node: String,
    pub solutions: Vec<MultisetSolution>,
    pub layers: Vec<usize>,
}

impl MultisetFrontier {
    pub fn find(&self, id: &str) -> Option<(&MultisetSolution, usize)> {
        self.solutions
            .iter()
            .zip(self.layers.iter().copied())
            .find(|(s, _)| s.id == id)
    }
}

/// Scores one selection with estimates.
pub fn multiset_solution(
    inst: &NodeInstance,
    picks: &[usize],
    enforce_condition2: bool,
    metric: Metric,
) -> Result<MultisetSolution> {
    let observed = picks
        .iter()
        .enumerate()
        .map(|(ci, &a)| {
            let c = &inst.options()[ci][a];
            c.estimate
                .clone()
                .ok_or_else(|| MorphError::MissingEstimate(format!("{}/{}", inst.children()[ci], c.id)))
        })
        .collect::<Result<Vec<_>>>()?;
    let eta = observed[0].eta();
    let med = generalized_median(&observed, inst.scale().levels(), eta, enforce_condition2, metric)?;
    let base = inst.solution(picks);
    Ok(MultisetSolution {
        node: base.node,
        id: base.id,
        picks: base.picks,
        w: base.quality.w,
        median: med.best().clone(),
        deviation: med.total,
        co_minimal: med.medians,
    })
}

/// Composition with multiset estimates: every admissible selection is
/// scored by `w` and the generalized median of its estimates, then layered
/// by the induced dominance.
pub fn synthesize_multiset(inst: &NodeInstance, enforce_condition2: bool, metric: Metric) -> Result<MultisetFrontier> {
    let mut picks_list = Vec::new();
    for_each_admissible(inst, |p| picks_list.push(p.to_vec()))?;
    let solutions = picks_list
        .iter()
        .map(|p| multiset_solution(inst, p, enforce_condition2, metric))
        .collect::<Result<Vec<_>>>()?;
    let n = solutions.len();
    let mut layers = vec![0usize; n];
    let mut rest: Vec<usize> = (0..n).collect();
    let mut layer = 0;
    while !rest.is_empty() {
        layer += 1;
        let (top, below): (Vec<usize>, Vec<usize>) = rest.iter().partition(|&&i| {
            !rest.iter().any(|&j| {
                solutions[j].key() != solutions[i].key()
                    && solutions[j].at_least(&solutions[i])
            })
        });
        for i in top {
            layers[i] = layer;
        }
        rest = below;
    }
    let mut ranked: Vec<(usize, MultisetSolution)> = layers.into_iter().zip(solutions).collect();
    ranked.sort_by(|(la, a), (lb, b)| {
        la.cmp(lb)
            .then_with(|| b.w.cmp(&a.w))
            .then_with(|| b.median.cmp(&a.median))
            .then_with(|| a.deviation.cmp(&b.deviation))
            .then_with(|| a.picks.values().cmp(b.picks.values()))
    });
    let (layers, solutions) = ranked.into_iter().unzip();
    Ok(MultisetFrontier {
        node: inst.node().to_string(),
        solutions,
        layers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::{CompatEntry, CompatibilityTable, Component, DesignAlternative, OrdinalScale};

    fn q(s: &str) -> QualityVector {
        s.parse().unwrap()
    }

    fn fake(node: &str, id: &str, quality: &str) -> CompositeSolution {
        CompositeSolution {
            node: node.into(),
            id: id.into(),
            picks: [(node.to_string(), id.to_string())].into_iter().collect(),
            quality: q(quality),
        }
    }

    #[test]
    fn pareto_keeps_incomparable_triple() {
        let f = pareto_filter(
            "S",
            vec![fake("S", "S1", "3;1,1,1"), fake("S", "S2", "2;2,1,0"), fake("S", "S3", "1;3,0,0")],
        );
        assert_eq!(f.layers, vec![1, 1, 1]);
    }

    #[test]
    fn pareto_second_layer() {
        let f = pareto_filter("S", vec![fake("S", "a", "3;1,1,0"), fake("S", "b", "3;2,0,0")]);
        assert_eq!(f.find("b").unwrap().1, 1);
        assert_eq!(f.find("a").unwrap().1, 2);
        let f = pareto_filter("D", vec![fake("D", "D1", "4;1,1,0"), fake("D", "D2", "3;2,0,0")]);
        assert_eq!(f.layers, vec![1, 1]);
    }

    #[test]
    fn part_d_has_four_admissible() {
        let m = fixtures::arkticheskoe().model();
        let inst = NodeInstance::from_leaves(&m, "D").unwrap();
        let all = enumerate_admissible(&inst).unwrap();
        assert_eq!(all.len(), 4);
        assert!(all.iter().all(|s| s.quality.w >= 2));
        let f = synthesize_dp(&inst).unwrap();
        let ids: BTreeSet<_> = f.solutions.iter().map(|s| s.id.as_str()).collect();
        assert_eq!(ids, BTreeSet::from(["D1", "D2"]));
    }

    #[test]
    fn all_zero_table_is_empty() {
        let m = MorphModel {
            scale: OrdinalScale::new(3, 4).unwrap(),
            root: "R".into(),
            components: vec![
                Component::leaf("A", vec![DesignAlternative::new("a1", 1)]),
                Component::leaf("B", vec![DesignAlternative::new("b1", 1), DesignAlternative::new("b2", 2)]),
                Component::composite("R", vec!["A".into(), "B".into()]).with_compat(CompatibilityTable {
                    default: Some(0),
                    entries: vec![CompatEntry("a1".into(), "b1".into(), 0)],
                }),
            ],
        };
        let inst = NodeInstance::from_leaves(&m, "R").unwrap();
        assert!(enumerate_admissible(&inst).unwrap().is_empty());
        assert!(synthesize_dp(&inst).unwrap().is_empty());
        let s = hierarchical_synthesize(&m, SynthesisOptions::default()).unwrap();
        assert_eq!(s.infeasible, vec!["R".to_string()]);
    }

    #[test]
    fn single_leaf_model_passes_through() {
        let m = MorphModel {
            scale: OrdinalScale::new(3, 4).unwrap(),
            root: "A".into(),
            components: vec![Component::leaf(
                "A",
                vec![DesignAlternative::new("a1", 2), DesignAlternative::new("a2", 1)],
            )],
        };
        let s = hierarchical_synthesize(&m, SynthesisOptions::default()).unwrap();
        let f = s.frontier("A").unwrap();
        assert_eq!(f.len(), 2);
        assert_eq!(f.solutions[0].id, "a2");
        assert_eq!(f.layers, vec![1, 2]);
    }

    #[test]
    fn retention_caps_layers_for_brute() {
        let m = fixtures::arkticheskoe().model();
        let mut m2 = m.clone();
        let w = m2.component_mut("W").unwrap();
        w.retain = None;
        w.priority_overrides.clear();
        let opts = SynthesisOptions {
            algorithm: Algorithm::Brute,
            retention: Retention::Layers(1),
        };
        let s = hierarchical_synthesize(&m2, opts).unwrap();
        let w = &s.nodes["W"];
        assert!(w.retained.iter().all(|r| r.layer == 1 && r.priority == 1));
        assert!(w.frontier.depth() > 1);
    }

    #[test]
    fn multiset_w_solutions() {
        let m = fixtures::arkticheskoe().model();
        let inst = NodeInstance::from_leaves(&m, "W").unwrap();
        let w3 = inst.resolve_picks(&m.component("W").unwrap().named_picks("W3")).unwrap();
        let s = multiset_solution(&inst, &w3, true, Metric::Max).unwrap();
        assert_eq!(s.median.to_string(), "(3,1,0)");
        assert_eq!(s.deviation, 3);
        assert_eq!(s.w, 3);
        let f = synthesize_multiset(&inst, true, Metric::Max).unwrap();
        assert!(f.find("W3").is_some());
    }
}
