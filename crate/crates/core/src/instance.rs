//! A composite node prepared for composition: the candidate alternatives of
//! every child and a dense compatibility matrix between them.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{MorphError, Result};
use crate::model::{canonical_id, CompatEntry, Component, MorphModel, OrdinalScale, QUALIFIER};
use crate::multiset::MultisetEstimate;
use crate::quality::{EVector, QualityVector};

/// An alternative offered by a child: a leaf DA or a retained composite
/// solution of a composite child.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub id: String,
    pub priority: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimate: Option<MultisetEstimate>,
}

/// One selection `S = S(1) ⋆ … ⋆ S(m)` at a node, with its quality.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompositeSolution {
    pub node: String,
    pub id: String,
    /// child id → picked alternative id, in child order
    pub picks: IndexMap<String, String>,
    pub quality: QualityVector,
}

impl CompositeSolution {
    pub fn pick_ids(&self) -> Vec<&str> {
        self.picks.values().map(String::as_str).collect()
    }
}

#[derive(Debug, Clone)]
pub struct NodeInstance {
    node: String,
    scale: OrdinalScale,
    children: Vec<String>,
    options: Vec<Vec<Candidate>>,
    offsets: Vec<usize>,
    /// `n × n` over global option indices; same-child cells are unused.
    compat: Vec<u8>,
    labels: Vec<(String, Vec<usize>)>,
}

impl NodeInstance {
    /// Builds the instance for a node whose children are all leaves.
    pub fn from_leaves(model: &MorphModel, node: &str) -> Result<Self> {
        let comp = model.require(node)?;
        let mut options = Vec::with_capacity(comp.children.len());
        for child in &comp.children {
            let c = model.require(child)?;
            if !c.is_leaf() {
                return Err(MorphError::NotComposable {
                    node: node.to_string(),
                    reason: format!("child `{child}` is composite; synthesize it first"),
                });
            }
            options.push(
                c.das
                    .iter()
                    .map(|d| Candidate {
                        id: d.id.clone(),
                        priority: d.priority,
                        estimate: d.estimate.clone(),
                    })
                    .collect(),
            );
        }
        Self::new(model, node, options)
    }

    /// Builds the instance from explicit per-child candidate lists.
    pub fn new(model: &MorphModel, node: &str, options: Vec<Vec<Candidate>>) -> Result<Self> {
        let comp = model.require(node)?;
        if comp.is_leaf() {
            return Err(MorphError::NotComposable {
                node: node.to_string(),
                reason: "leaf components have nothing to compose".into(),
            });
        }
        if options.len() != comp.children.len() {
            return Err(MorphError::NotComposable {
                node: node.to_string(),
                reason: format!("{} option lists for {} children", options.len(), comp.children.len()),
            });
        }
        let scale = model.scale;
        for (child, opts) in comp.children.iter().zip(&options) {
            for c in opts {
                if !(1..=scale.l).contains(&c.priority) {
                    return Err(MorphError::OutOfRange(format!(
                        "priority {} of `{child}/{}` outside [1,{}]",
                        c.priority, c.id, scale.l
                    )));
                }
            }
        }
        let mut offsets = Vec::with_capacity(options.len() + 1);
        let mut n = 0;
        for o in &options {
            offsets.push(n);
            n += o.len();
        }
        offsets.push(n);

        let default = comp.compat_default(&scale);
        let mut inst = Self {
            node: node.to_string(),
            scale,
            children: comp.children.clone(),
            options,
            offsets,
            compat: vec![default; n * n],
            labels: Vec::new(),
        };
        if let Some(table) = &comp.compat {
            for CompatEntry(a, b, v) in &table.entries {
                let (Some(x), Some(y)) = (inst.locate(model, comp, a)?, inst.locate(model, comp, b)?) else {
                    continue;
                };
                if x.0 == y.0 {
                    return Err(MorphError::OutOfRange(format!(
                        "compatibility ({a},{b}) pairs two alternatives of one child"
                    )));
                }
                if *v > scale.nu {
                    return Err(MorphError::OutOfRange(format!(
                        "compatibility ({a},{b}) = {v} exceeds nu={}",
                        scale.nu
                    )));
                }
                inst.set_compat(x, y, *v);
            }
        }
        // labels picking a solution a composite child did not retain are skipped
        'labels: for (label, picks) in &comp.named {
            if picks.len() != inst.children.len() {
                return Err(MorphError::IncompleteSolution {
                    node: node.to_string(),
                    child: inst.children[picks.len().min(inst.children.len() - 1)].clone(),
                });
            }
            let mut idx = Vec::with_capacity(picks.len());
            for (ci, (child, p)) in inst.children.iter().zip(picks).enumerate() {
                match inst.options[ci].iter().position(|c| &c.id == p) {
                    Some(a) => idx.push(a),
                    None if model.component(child).is_some_and(|c| !c.is_leaf()) => continue 'labels,
                    None => {
                        return Err(MorphError::UnknownReference {
                            reference: p.clone(),
                            context: format!("named solution `{label}` of `{node}` (child `{child}`)"),
                        })
                    }
                }
            }
            inst.labels.push((label.clone(), idx));
        }
        Ok(inst)
    }

    /// Finds `(child, option)` for a compatibility reference. Unknown ids on
    /// composite children resolve to `None` (the solution was not retained).
    fn locate(&self, model: &MorphModel, comp: &Component, r: &str) -> Result<Option<(usize, usize)>> {
        let unknown = || MorphError::UnknownReference {
            reference: r.to_string(),
            context: format!("compatibility table of `{}`", comp.id),
        };
        let (child_hint, id) = match r.split_once(QUALIFIER) {
            Some((c, d)) => (Some(c), d),
            None => (None, r),
        };
        let mut hits = Vec::new();
        for (ci, child) in self.children.iter().enumerate() {
            if child_hint.is_some_and(|h| h != child) {
                continue;
            }
            if let Some(ai) = self.options[ci].iter().position(|c| c.id == id) {
                hits.push((ci, ai));
            }
        }
        match hits.len() {
            1 => Ok(Some(hits[0])),
            0 => {
                let composite_child = self
                    .children
                    .iter()
                    .filter(|c| child_hint.is_none_or(|h| h == c.as_str()))
                    .any(|c| model.component(c).is_some_and(|c| !c.is_leaf()));
                if composite_child {
                    Ok(None)
                } else {
                    Err(unknown())
                }
            }
            _ => Err(MorphError::UnknownReference {
                reference: r.to_string(),
                context: format!("compatibility table of `{}` (ambiguous, qualify as child/id)", comp.id),
            }),
        }
    }

    fn global(&self, (ci, ai): (usize, usize)) -> usize {
        self.offsets[ci] + ai
    }

    pub(crate) fn set_compat(&mut self, x: (usize, usize), y: (usize, usize), v: u8) {
        let n = self.offsets[self.children.len()];
        let (gx, gy) = (self.global(x), self.global(y));
        self.compat[gx * n + gy] = v;
        self.compat[gy * n + gx] = v;
    }

    pub(crate) fn set_priority(&mut self, ci: usize, ai: usize, p: u8) {
        self.options[ci][ai].priority = p;
    }

    pub fn node(&self) -> &str {
        &self.node
    }

    pub fn scale(&self) -> OrdinalScale {
        self.scale
    }

    pub fn children(&self) -> &[String] {
        &self.children
    }

    pub fn options(&self) -> &[Vec<Candidate>] {
        &self.options
    }

    pub(crate) fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    /// Compatibility between option `a` of child `ci` and option `b` of child `cj`.
    pub fn compat(&self, ci: usize, a: usize, cj: usize, b: usize) -> u8 {
        let n = self.offsets[self.children.len()];
        self.compat[self.global((ci, a)) * n + self.global((cj, b))]
    }

    /// Compatibility by global option indices.
    pub(crate) fn compat_global(&self, x: usize, y: usize) -> u8 {
        self.compat[x * self.offsets[self.children.len()] + y]
    }

    /// Quality of a full selection given as one option index per child.
    /// A single pick has no pairs, so its `w` is `ν`.
    pub fn quality(&self, picks: &[usize]) -> QualityVector {
        debug_assert_eq!(picks.len(), self.children.len());
        let mut w = self.scale.nu;
        let mut e = EVector::zeros(self.scale.levels());
        for (ci, &a) in picks.iter().enumerate() {
            e.bump(self.options[ci][a].priority);
            for (cj, &b) in picks.iter().enumerate().skip(ci + 1) {
                w = w.min(self.compat(ci, a, cj, b));
            }
        }
        QualityVector { w, e }
    }

    /// Converts a `child → alternative` map into option indices.
    pub fn resolve_picks<'a, I>(&self, picks: I) -> Result<Vec<usize>>
    where
        I: IntoIterator<Item = (&'a String, &'a String)>,
    {
        let given: IndexMap<&String, &String> = picks.into_iter().collect();
        self.children
            .iter()
            .enumerate()
            .map(|(ci, child)| {
                let id = given.get(child).ok_or_else(|| MorphError::IncompleteSolution {
                    node: self.node.clone(),
                    child: child.clone(),
                })?;
                self.options[ci]
                    .iter()
                    .position(|c| &c.id == *id)
                    .ok_or_else(|| MorphError::UnknownReference {
                        reference: (*id).clone(),
                        context: format!("alternatives of `{child}`"),
                    })
            })
            .collect()
    }

    /// Label of the named solution with these picks, or the canonical id.
    pub fn solution_id(&self, picks: &[usize]) -> String {
        self.labels
            .iter()
            .find(|(_, p)| p.as_slice() == picks)
            .map(|(l, _)| l.clone())
            .unwrap_or_else(|| {
                let ids: Vec<&str> = picks
                    .iter()
                    .enumerate()
                    .map(|(ci, &a)| self.options[ci][a].id.as_str())
                    .collect();
                canonical_id(&ids)
            })
    }

    pub fn solution(&self, picks: &[usize]) -> CompositeSolution {
        CompositeSolution {
            node: self.node.clone(),
            id: self.solution_id(picks),
            picks: self
                .children
                .iter()
                .zip(picks)
                .enumerate()
                .map(|(ci, (child, &a))| (child.clone(), self.options[ci][a].id.clone()))
                .collect(),
            quality: self.quality(picks),
        }
    }

    /// Labelled solutions declared on the component, as option indices.
    pub fn named(&self) -> &[(String, Vec<usize>)] {
        &self.labels
    }
}

/// `N(S)` for `picks` at a node whose children are leaves.
pub fn system_quality<'a, I>(model: &MorphModel, node: &str, picks: I) -> Result<QualityVector>
where
    I: IntoIterator<Item = (&'a String, &'a String)>,
{
    let inst = NodeInstance::from_leaves(model, node)?;
    let idx = inst.resolve_picks(picks)?;
    Ok(inst.quality(&idx))
}
