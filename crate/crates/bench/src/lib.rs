//! Inputs shared by the solver benchmarks.

use morph_core::aggregate::ChoiceGroup;
use morph_core::generate::{generate_knapsack, generate_model, GeneratorConfig};
use morph_core::{MorphModel, MultisetEstimate, NodeInstance};

/// Root instance of a generated two-level model.
pub fn root_instance(seed: u64, children: usize, das: usize) -> (MorphModel, NodeInstance) {
    let cfg = GeneratorConfig {
        seed,
        children,
        das,
        zero_probability: 0.05,
        ..Default::default()
    };
    let model = generate_model(&cfg).model();
    let inst = NodeInstance::from_leaves(&model, &model.root).expect("generated model composes");
    (model, inst)
}

pub fn knapsack(seed: u64, groups: usize, items: usize) -> Vec<ChoiceGroup> {
    generate_knapsack(seed, groups, items, 20, 20)
}

/// Every estimate of `P^{l,η}` used once as an observation.
pub fn observations(l: usize, eta: u32) -> Vec<MultisetEstimate> {
    morph_core::enumerate_estimates(l, eta, false)
}
