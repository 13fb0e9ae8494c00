//! Seeded random instances for testing and benchmarking.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::aggregate::{ChoiceGroup, Item};
use crate::document::ModelDocument;
use crate::model::{CompatEntry, CompatibilityTable, Component, DesignAlternative, MorphModel, OrdinalScale};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub children: usize,
    /// Alternatives per leaf (the upper bound when `vary_das` is set).
    pub das: usize,
    pub vary_das: bool,
    pub l: u8,
    pub nu: u8,
    pub zero_probability: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            children: 4,
            das: 3,
            vary_das: false,
            l: 3,
            nu: 4,
            zero_probability: 0.1,
        }
    }
}

/// A two-level model: root `R` over leaves `C0..`, alternatives `Ci_j`,
/// every cross-pair compatibility listed explicitly.
pub fn generate_model(cfg: &GeneratorConfig) -> ModelDocument {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let scale = OrdinalScale::new(cfg.l, cfg.nu).expect("generator scale within caps");
    let mut components = Vec::with_capacity(cfg.children + 1);
    let mut ids: Vec<Vec<String>> = Vec::with_capacity(cfg.children);
    for c in 0..cfg.children {
        let n = if cfg.vary_das { rng.random_range(1..=cfg.das.max(1)) } else { cfg.das.max(1) };
        let das: Vec<DesignAlternative> = (0..n)
            .map(|j| DesignAlternative::new(format!("C{c}_{j}"), rng.random_range(1..=cfg.l)))
            .collect();
        ids.push(das.iter().map(|d| d.id.clone()).collect());
        components.push(Component::leaf(format!("C{c}"), das));
    }
    let mut entries = Vec::new();
    for a in 0..ids.len() {
        for b in a + 1..ids.len() {
            for x in &ids[a] {
                for y in &ids[b] {
                    let v = if rng.random_bool(cfg.zero_probability) {
                        0
                    } else {
                        rng.random_range(1..=cfg.nu)
                    };
                    entries.push(CompatEntry(x.clone(), y.clone(), v));
                }
            }
        }
    }
    let root = Component::composite("R", (0..cfg.children).map(|c| format!("C{c}")).collect()).with_compat(
        CompatibilityTable {
            default: None,
            entries,
        },
    );
    components.push(root);
    ModelDocument::from_model(MorphModel {
        scale,
        root: "R".into(),
        components,
    })
}

/// Random knapsack groups `G0..` with items `G{g}_{k}`; costs 0..=`max_cost`,
/// profits 0..=`max_profit`, between 1 and `items` items per group.
pub fn generate_knapsack(seed: u64, groups: usize, items: usize, max_cost: i64, max_profit: i64) -> Vec<ChoiceGroup> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..groups)
        .map(|g| {
            let n = rng.random_range(1..=items.max(1));
            ChoiceGroup {
                component: format!("G{g}"),
                items: (0..n)
                    .map(|k| {
                        Item::new(
                            format!("G{g}_{k}"),
                            rng.random_range(0..=max_cost),
                            rng.random_range(0..=max_profit),
                        )
                    })
                    .collect(),
            }
        })
        .collect()
}
