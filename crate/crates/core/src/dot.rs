//! Graphviz output for quality posets and estimate scales.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::multiset::{enumerate_estimates, MultisetEstimate};
use crate::synthesis::Frontier;

/// Cover relation of a strict order given as a predicate: `(i, j)` when `i`
/// is above `j` with nothing in between.
pub fn cover_edges<T>(items: &[T], strictly_above: impl Fn(&T, &T) -> bool) -> Vec<(usize, usize)> {
    let n = items.len();
    let above: Vec<Vec<bool>> = (0..n)
        .map(|i| (0..n).map(|j| i != j && strictly_above(&items[i], &items[j])).collect())
        .collect();
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if above[i][j] && !(0..n).any(|k| above[i][k] && above[k][j]) {
                out.push((i, j));
            }
        }
    }
    out
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\\\""))
}

/// Frontier solutions as a Hasse diagram of strict `(w; e)` dominance.
/// Solutions sharing a `w` are drawn on one rank.
pub fn frontier_dot(frontier: &Frontier) -> String {
    let sols = &frontier.solutions;
    let mut out = String::new();
    let _ = writeln!(out, "digraph {} {{", quote(&frontier.node));
    out.push_str("  rankdir=TB;\n  node [shape=box];\n");
    let mut by_w: BTreeMap<u8, Vec<usize>> = BTreeMap::new();
    for (i, s) in sols.iter().enumerate() {
        by_w.entry(s.quality.w).or_default().push(i);
        let _ = writeln!(
            out,
            "  n{i} [label={}];",
            quote(&format!("{}\\n({})", s.id, s.quality))
        );
    }
    for (w, ids) in by_w.iter().rev() {
        let names: Vec<String> = ids.iter().map(|i| format!("n{i}")).collect();
        let _ = writeln!(out, "  {{ rank=same; /* w={w} */ {}; }}", names.join("; "));
    }
    for (i, j) in cover_edges(sols, |a, b| a.quality.strictly_dominates(&b.quality)) {
        let _ = writeln!(out, "  n{i} -> n{j};");
    }
    out.push_str("}\n");
    out
}

/// The estimate scale `P^{l,η}` as a Hasse diagram, best estimate on top.
pub fn estimate_poset_dot(l: usize, eta: u32, enforce_condition2: bool) -> String {
    let items = enumerate_estimates(l, eta, enforce_condition2);
    estimates_dot(&format!("P_{l}_{eta}"), &items)
}

pub fn estimates_dot(name: &str, items: &[MultisetEstimate]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph {} {{", quote(name));
    out.push_str("  rankdir=TB;\n  node [shape=ellipse];\n");
    for (i, e) in items.iter().enumerate() {
        let _ = writeln!(out, "  n{i} [label={}];", quote(&e.to_string()));
    }
    for (i, j) in cover_edges(items, |a, b| a != b && a.dominates(b)) {
        let _ = writeln!(out, "  n{i} -> n{j};");
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_cover_is_adjacent_pairs() {
        let v = [3, 2, 1, 0];
        assert_eq!(cover_edges(&v, |a, b| a > b), vec![(0, 1), (1, 2), (2, 3)]);
    }

    #[test]
    fn enforced_p34_has_twelve_nodes_and_fourteen_edges() {
        let dot = estimate_poset_dot(3, 4, true);
        assert_eq!(dot.matches("label=").count(), 12);
        assert_eq!(dot.matches(" -> ").count(), 14);
    }
}
