//! Morphological tree: components, design alternatives, compatibility tables
//! and structural validation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{MorphError, Result};
use crate::multiset::MultisetEstimate;

/// Largest accepted number of priority levels or compatibility grades.
pub const SCALE_CAP: u8 = 16;

/// Separator used in qualified references (`child/da`).
pub const QUALIFIER: char = '/';

/// Ordinal scales: priorities `1..=l` (1 is best), compatibility `0..=ν`
/// (0 forbids co-selection).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrdinalScale {
    pub l: u8,
    pub nu: u8,
}

impl OrdinalScale {
    pub fn new(l: u8, nu: u8) -> Result<Self> {
        let scale = Self { l, nu };
        if !scale.is_valid() {
            return Err(MorphError::OutOfRange(format!(
                "scale l={l}, nu={nu} outside 1..={SCALE_CAP}"
            )));
        }
        Ok(scale)
    }

    fn is_valid(&self) -> bool {
        (1..=SCALE_CAP).contains(&self.l) && (1..=SCALE_CAP).contains(&self.nu)
    }

    pub fn levels(&self) -> usize {
        usize::from(self.l)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignAlternative {
    pub id: String,
    pub priority: u8,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub annotations: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimate: Option<MultisetEstimate>,
}

impl DesignAlternative {
    pub fn new(id: impl Into<String>, priority: u8) -> Self {
        Self {
            id: id.into(),
            priority,
            annotations: BTreeMap::new(),
            estimate: None,
        }
    }

    pub fn with_estimate(mut self, estimate: MultisetEstimate) -> Self {
        self.estimate = Some(estimate);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComponentKind {
    Leaf,
    Composite,
}

/// One `[a, b, value]` row of a compatibility table. References are either a
/// bare alternative id or `child/id`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompatEntry(pub String, pub String, pub u8);

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompatibilityTable {
    /// Value for pairs not listed; `ν` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default: Option<u8>,
    #[serde(default)]
    pub entries: Vec<CompatEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Component {
    pub id: String,
    pub kind: ComponentKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub das: Vec<DesignAlternative>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compat: Option<CompatibilityTable>,
    /// Labelled composite solutions: label → one pick per child, in child order.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub named: BTreeMap<String, Vec<String>>,
    /// When set, only these labelled solutions are passed to the parent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retain: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub priority_overrides: BTreeMap<String, u8>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub annotations: BTreeMap<String, String>,
}

impl Component {
    pub fn leaf(id: impl Into<String>, das: Vec<DesignAlternative>) -> Self {
        Self {
            id: id.into(),
            kind: ComponentKind::Leaf,
            das,
            children: Vec::new(),
            compat: None,
            named: BTreeMap::new(),
            retain: None,
            priority_overrides: BTreeMap::new(),
            annotations: BTreeMap::new(),
        }
    }

    pub fn composite(id: impl Into<String>, children: Vec<String>) -> Self {
        Self {
            kind: ComponentKind::Composite,
            das: Vec::new(),
            children,
            ..Self::leaf(id, Vec::new())
        }
    }

    pub fn with_compat(mut self, table: CompatibilityTable) -> Self {
        self.compat = Some(table);
        self
    }

    pub fn is_leaf(&self) -> bool {
        self.kind == ComponentKind::Leaf
    }

    pub fn da(&self, id: &str) -> Option<&DesignAlternative> {
        self.das.iter().find(|d| d.id == id)
    }

    /// The picks of a labelled solution keyed by child, or empty if unknown.
    pub fn named_picks(&self, label: &str) -> IndexMap<String, String> {
        self.named
            .get(label)
            .map(|p| self.children.iter().cloned().zip(p.iter().cloned()).collect())
            .unwrap_or_default()
    }

    pub fn compat_default(&self, scale: &OrdinalScale) -> u8 {
        self.compat
            .as_ref()
            .and_then(|t| t.default)
            .unwrap_or(scale.nu)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MorphModel {
    pub scale: OrdinalScale,
    pub root: String,
    pub components: Vec<Component>,
}

impl MorphModel {
    pub fn component(&self, id: &str) -> Option<&Component> {
        self.components.iter().find(|c| c.id == id)
    }

    pub fn component_mut(&mut self, id: &str) -> Option<&mut Component> {
        self.components.iter_mut().find(|c| c.id == id)
    }

    pub(crate) fn require(&self, id: &str) -> Result<&Component> {
        self.component(id).ok_or_else(|| MorphError::UnknownReference {
            reference: id.to_string(),
            context: "model components".to_string(),
        })
    }

    /// Components reachable from the root, children before parents.
    pub fn post_order(&self) -> Vec<&str> {
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        self.visit(&self.root, &mut seen, &mut out);
        out
    }

    fn visit<'a>(&'a self, id: &str, seen: &mut BTreeSet<&'a str>, out: &mut Vec<&'a str>) {
        let Some(c) = self.component(id) else { return };
        if !seen.insert(c.id.as_str()) {
            return;
        }
        for child in &c.children {
            self.visit(child, seen, out);
        }
        out.push(c.id.as_str());
    }

    /// Resolves `reference` against the children of `node`, returning the
    /// child index and the bare alternative id.
    pub(crate) fn resolve_ref(&self, node: &Component, reference: &str) -> RefResolution {
        if let Some((child, da)) = reference.split_once(QUALIFIER) {
            return match node.children.iter().position(|c| c == child) {
                Some(i) if self.child_offers(&node.children[i], da) => {
                    RefResolution::Found(i, da.to_string())
                }
                _ => RefResolution::Missing,
            };
        }
        let hits: Vec<usize> = node
            .children
            .iter()
            .enumerate()
            .filter(|(_, c)| self.child_offers(c, reference))
            .map(|(i, _)| i)
            .collect();
        match hits.as_slice() {
            [] => RefResolution::Missing,
            [i] => RefResolution::Found(*i, reference.to_string()),
            _ => RefResolution::Ambiguous,
        }
    }

    /// Whether `child` can supply an alternative called `id`: a leaf DA, a
    /// labelled solution, or a canonical `a*b*…` pick string.
    pub(crate) fn child_offers(&self, child: &str, id: &str) -> bool {
        let Some(c) = self.component(child) else {
            return false;
        };
        match c.kind {
            ComponentKind::Leaf => c.da(id).is_some(),
            ComponentKind::Composite => {
                if c.named.contains_key(id) {
                    return true;
                }
                let parts = split_canonical(id);
                parts.len() == c.children.len()
                    && parts
                        .iter()
                        .zip(&c.children)
                        .all(|(p, ch)| self.child_offers(ch, p))
            }
        }
    }
}

pub(crate) enum RefResolution {
    Found(usize, String),
    Missing,
    Ambiguous,
}

/// Canonical id of a composite solution: picks joined with `*`, nested
/// composite picks wrapped in parentheses.
pub fn canonical_id<S: AsRef<str>>(picks: &[S]) -> String {
    picks
        .iter()
        .map(|p| {
            let p = p.as_ref();
            if p.contains('*') {
                format!("({p})")
            } else {
                p.to_string()
            }
        })
        .collect::<Vec<_>>()
        .join("*")
}

/// Inverse of [`canonical_id`] at the top nesting level.
pub fn split_canonical(id: &str) -> Vec<String> {
    let mut parts = Vec::new();
    let mut depth = 0usize;
    let mut cur = String::new();
    for ch in id.chars() {
        match ch {
            '(' => {
                if depth > 0 {
                    cur.push(ch);
                }
                depth += 1;
            }
            ')' => {
                depth = depth.saturating_sub(1);
                if depth > 0 {
                    cur.push(ch);
                }
            }
            '*' if depth == 0 => parts.push(std::mem::take(&mut cur)),
            _ => cur.push(ch),
        }
    }
    parts.push(cur);
    parts
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub location: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, location: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation {
            location: location.into(),
            message: message.into(),
        });
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_empty() {
            Ok(())
        } else {
            Err(MorphError::Invalid(self))
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "  {}: {}", v.location, v.message)?;
        }
        Ok(())
    }
}

/// Collects every structural problem in `model`; an empty report means the
/// model is well formed.
pub fn validate_model(model: &MorphModel) -> ValidationReport {
    let mut report = ValidationReport::default();
    let scale = model.scale;
    if !scale.is_valid() {
        report.push(
            "scale",
            format!("l={} and nu={} must lie in 1..={SCALE_CAP}", scale.l, scale.nu),
        );
    }

    let mut ids = BTreeSet::new();
    for c in &model.components {
        if !ids.insert(c.id.as_str()) {
            report.push(format!("components[{}]", c.id), "duplicate component id");
        }
    }
    if model.component(&model.root).is_none() {
        report.push("root", format!("root `{}` is not a component", model.root));
    }

    check_tree(model, &mut report);
    for c in &model.components {
        match c.kind {
            ComponentKind::Leaf => check_leaf(c, &scale, &mut report),
            ComponentKind::Composite => check_composite(model, c, &scale, &mut report),
        }
    }
    report
}

fn check_tree(model: &MorphModel, report: &mut ValidationReport) {
    let mut parents: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for c in &model.components {
        let mut seen = BTreeSet::new();
        for child in &c.children {
            if !seen.insert(child.as_str()) {
                report.push(format!("components[{}].children", c.id), format!("child `{child}` listed twice"));
            }
            if model.component(child).is_none() {
                report.push(
                    format!("components[{}].children", c.id),
                    format!("unknown child `{child}`"),
                );
            }
            parents.entry(child.as_str()).or_default().push(c.id.as_str());
        }
    }
    for (child, ps) in &parents {
        if ps.len() > 1 {
            report.push(
                format!("components[{child}]"),
                format!("has {} parents ({}); the model must be a tree", ps.len(), ps.join(", ")),
            );
        }
        if *child == model.root {
            report.push("root", format!("root `{child}` appears as a child of `{}`", ps[0]));
        }
    }
    if has_cycle(model) {
        report.push("components", "children relation contains a cycle");
    }
    let reachable: BTreeSet<&str> = model.post_order().into_iter().collect();
    for c in &model.components {
        if !reachable.contains(c.id.as_str()) && model.component(&model.root).is_some() {
            report.push(format!("components[{}]", c.id), "not reachable from the root");
        }
    }
}

fn has_cycle(model: &MorphModel) -> bool {
    // 0 = unvisited, 1 = on stack, 2 = done
    fn dfs<'a>(m: &'a MorphModel, id: &'a str, state: &mut BTreeMap<&'a str, u8>) -> bool {
        match state.get(id) {
            Some(1) => return true,
            Some(2) => return false,
            _ => {}
        }
        state.insert(id, 1);
        if let Some(c) = m.component(id) {
            for ch in &c.children {
                if dfs(m, ch, state) {
                    return true;
                }
            }
        }
        state.insert(id, 2);
        false
    }
    let mut state = BTreeMap::new();
    model
        .components
        .iter()
        .any(|c| dfs(model, &c.id, &mut state))
}

fn check_leaf(c: &Component, scale: &OrdinalScale, report: &mut ValidationReport) {
    let at = |s: &str| format!("components[{}]{s}", c.id);
    if c.das.is_empty() {
        report.push(at(""), "leaf has no design alternatives");
    }
    if !c.children.is_empty() {
        report.push(at(".children"), "leaf must not have children");
    }
    if c.compat.is_some() || !c.named.is_empty() || c.retain.is_some() || !c.priority_overrides.is_empty() {
        report.push(at(""), "compat, named, retain and priority_overrides apply to composites only");
    }
    let mut seen = BTreeSet::new();
    for da in &c.das {
        let loc = at(&format!(".das[{}]", da.id));
        if !seen.insert(da.id.as_str()) {
            report.push(loc.clone(), "duplicate alternative id within component");
        }
        if da.id.is_empty() || da.id.contains(QUALIFIER) || da.id.contains('*') {
            report.push(loc.clone(), "alternative id must be non-empty without `/` or `*`");
        }
        if !(1..=scale.l).contains(&da.priority) {
            report.push(
                loc.clone(),
                format!("priority {} out of [1,{}]", da.priority, scale.l),
            );
        }
        if let Some(est) = &da.estimate {
            if est.levels() != scale.levels() {
                report.push(
                    loc,
                    format!("estimate has {} levels, scale has {}", est.levels(), scale.l),
                );
            }
        }
    }
}

fn check_composite(model: &MorphModel, c: &Component, scale: &OrdinalScale, report: &mut ValidationReport) {
    let at = |s: &str| format!("components[{}]{s}", c.id);
    if c.children.is_empty() {
        report.push(at(""), "composite has no children");
    }
    if !c.das.is_empty() {
        report.push(at(".das"), "composite must not list design alternatives");
    }

    if let Some(table) = &c.compat {
        if let Some(d) = table.default {
            if d > scale.nu {
                report.push(at(".compat.default"), format!("default {d} out of [0,{}]", scale.nu));
            }
        }
        let mut seen: BTreeMap<((usize, String), (usize, String)), u8> = BTreeMap::new();
        for (k, CompatEntry(a, b, v)) in table.entries.iter().enumerate() {
            let loc = at(&format!(".compat.entries[{k}]"));
            if *v > scale.nu {
                report.push(loc.clone(), format!("compatibility {v} out of [0,{}]", scale.nu));
            }
            let ra = resolve_for_report(model, c, a, &loc, report);
            let rb = resolve_for_report(model, c, b, &loc, report);
            if let (Some(ra), Some(rb)) = (ra, rb) {
                if ra.0 == rb.0 {
                    report.push(
                        loc,
                        format!("`{a}` and `{b}` belong to the same child `{}`", c.children[ra.0]),
                    );
                    continue;
                }
                let key = if ra < rb { (ra, rb) } else { (rb, ra) };
                if let Some(prev) = seen.insert(key, *v) {
                    if prev != *v {
                        report.push(
                            loc,
                            format!("pair ({a},{b}) listed with conflicting values {prev} and {v}"),
                        );
                    }
                }
            }
        }
    }

    for (label, picks) in &c.named {
        let loc = at(&format!(".named[{label}]"));
        if picks.len() != c.children.len() {
            report.push(
                loc,
                format!("{} picks for {} children", picks.len(), c.children.len()),
            );
            continue;
        }
        for (pick, child) in picks.iter().zip(&c.children) {
            if !model.child_offers(child, pick) {
                report.push(loc.clone(), format!("child `{child}` has no alternative `{pick}`"));
            }
        }
    }
    if let Some(retain) = &c.retain {
        if retain.is_empty() {
            report.push(at(".retain"), "retain list is empty");
        }
        for id in retain {
            if !c.named.contains_key(id) {
                report.push(at(".retain"), format!("`{id}` is not a named solution"));
            }
        }
    }
    for (id, p) in &c.priority_overrides {
        let loc = at(&format!(".priority_overrides[{id}]"));
        if !(1..=scale.l).contains(p) {
            report.push(loc.clone(), format!("priority {p} out of [1,{}]", scale.l));
        }
        if !model.child_offers_self(c, id) {
            report.push(loc, format!("`{id}` does not name a solution of this component"));
        }
    }
}

impl MorphModel {
    fn child_offers_self(&self, c: &Component, id: &str) -> bool {
        if c.named.contains_key(id) {
            return true;
        }
        let parts = split_canonical(id);
        parts.len() == c.children.len()
            && parts.iter().zip(&c.children).all(|(p, ch)| self.child_offers(ch, p))
    }
}

fn resolve_for_report(
    model: &MorphModel,
    node: &Component,
    reference: &str,
    loc: &str,
    report: &mut ValidationReport,
) -> Option<(usize, String)> {
    match model.resolve_ref(node, reference) {
        RefResolution::Found(i, id) => Some((i, id)),
        RefResolution::Missing => {
            report.push(loc, format!("`{reference}` is not an alternative of any child"));
            None
        }
        RefResolution::Ambiguous => {
            report.push(
                loc,
                format!("`{reference}` matches several children; qualify it as `child/{reference}`"),
            );
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> MorphModel {
        MorphModel {
            scale: OrdinalScale::new(3, 4).unwrap(),
            root: "D".into(),
            components: vec![
                Component::leaf("P", vec![DesignAlternative::new("P2", 2), DesignAlternative::new("P3", 1)]),
                Component::leaf("Q", vec![DesignAlternative::new("Q2", 1), DesignAlternative::new("Q5", 2)]),
                Component::composite("D", vec!["P".into(), "Q".into()]).with_compat(CompatibilityTable {
                    default: None,
                    entries: vec![
                        CompatEntry("P2".into(), "Q2".into(), 2),
                        CompatEntry("P2".into(), "Q5".into(), 3),
                        CompatEntry("P3".into(), "Q2".into(), 3),
                        CompatEntry("P3".into(), "Q5".into(), 4),
                    ],
                }),
            ],
        }
    }

    #[test]
    fn well_formed_model_has_empty_report() {
        assert!(validate_model(&small()).is_empty());
    }

    #[test]
    fn priority_zero_is_reported() {
        let mut m = small();
        m.component_mut("P").unwrap().das[0].priority = 0;
        let r = validate_model(&m);
        assert_eq!(r.violations.len(), 1);
        assert!(r.violations[0].message.contains("priority 0 out of [1,3]"));
    }

    #[test]
    fn intra_child_pair_is_reported() {
        let mut m = small();
        let t = m.component_mut("D").unwrap().compat.as_mut().unwrap();
        t.entries.push(CompatEntry("P2".into(), "P3".into(), 1));
        let r = validate_model(&m);
        assert!(r.violations.iter().any(|v| v.message.contains("same child")));
    }

    #[test]
    fn conflicting_duplicate_pair_is_reported() {
        let mut m = small();
        let t = m.component_mut("D").unwrap().compat.as_mut().unwrap();
        t.entries.push(CompatEntry("Q2".into(), "P2".into(), 4));
        let r = validate_model(&m);
        assert!(r.violations.iter().any(|v| v.message.contains("conflicting")));
    }

    #[test]
    fn compat_out_of_range_and_unknown_reference() {
        let mut m = small();
        let t = m.component_mut("D").unwrap().compat.as_mut().unwrap();
        t.entries.push(CompatEntry("P3".into(), "Q9".into(), 7));
        let r = validate_model(&m);
        assert!(r.violations.iter().any(|v| v.message.contains("out of [0,4]")));
        assert!(r.violations.iter().any(|v| v.message.contains("`Q9`")));
    }

    #[test]
    fn tree_shape_violations() {
        let mut m = small();
        m.components.push(Component::composite("X", vec!["P".into()]));
        let r = validate_model(&m);
        assert!(r.violations.iter().any(|v| v.message.contains("2 parents")));
        assert!(r.violations.iter().any(|v| v.message.contains("not reachable")));

        let mut m = small();
        m.component_mut("D").unwrap().children.push("D".into());
        let r = validate_model(&m);
        assert!(r.violations.iter().any(|v| v.message.contains("cycle")));
    }

    #[test]
    fn scale_cap() {
        assert!(OrdinalScale::new(0, 4).is_err());
        assert!(OrdinalScale::new(3, 17).is_err());
        assert!(OrdinalScale::new(16, 16).is_ok());
    }

    #[test]
    fn canonical_ids_nest() {
        let inner = canonical_id(&["E6", "F6"]);
        assert_eq!(inner, "E6*F6");
        let outer = canonical_id(&[inner.as_str(), "D1"]);
        assert_eq!(outer, "(E6*F6)*D1");
        assert_eq!(split_canonical(&outer), vec!["E6*F6".to_string(), "D1".to_string()]);
    }
}
