//! The `morph` command: argument parsing, command execution and report
//! rendering. [`run_command`] is the whole program minus process I/O.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use morph_core::aggregate::{check_overlap, ExactSolution};
use morph_core::analysis::solution_kernel;
use morph_core::document::{parse_document, validate_document, KnapsackSpec};
use morph_core::dot::{estimate_poset_dot, frontier_dot};
use morph_core::fixtures;
use morph_core::generate::{generate_model, GeneratorConfig};
use morph_core::model::Violation;
use morph_core::synthesis::{multiset_solution, NodeSynthesis};
use morph_core::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "morph", version, about = "Hierarchical morphological design solver")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and check a model document
    Validate(ModelArgs),
    /// Compose every node bottom-up and print the frontiers
    Synth(ModelArgs),
    /// One-step upgrades for first-layer and named solutions
    Bottlenecks(ModelArgs),
    /// Generalized medians of multiset estimates
    Median(ModelArgs),
    /// Extend the kernel by multiple-choice knapsack
    Aggregate(ModelArgs),
    /// Kernel and superstructure of the root solutions
    Kernel(ModelArgs),
    /// Generate a random two-level model
    Gen(GenArgs),
    /// Everything the model supports, in one report
    Report(ModelArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    #[default]
    Text,
    Json,
    Dot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgorithmArg {
    Brute,
    Dp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Greedy,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Max,
    Sum,
    Componentwise,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Model document (JSON), or `fixture:<name>` for a bundled one
    pub model: String,
    #[arg(long, value_enum)]
    pub algorithm: Option<AlgorithmArg>,
    /// Keep layers 1..=K at each composite node
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub budget: Option<String>,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    #[arg(long, action = clap::ArgAction::Set)]
    pub enforce_condition2: Option<bool>,
    #[arg(long, value_enum)]
    pub metric: Option<MetricArg>,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
    /// Accepted for symmetry with `gen`; model commands are deterministic
    #[arg(long)]
    pub seed: Option<u64>,
    /// Kernel frequency threshold in (0, 1]
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Restrict output to one node
    #[arg(long)]
    pub node: Option<String>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 4)]
    pub children: usize,
    #[arg(long, default_value_t = 3)]
    pub das: usize,
    #[arg(long, default_value_t = 3)]
    pub l: u8,
    #[arg(long, default_value_t = 4)]
    pub nu: u8,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrontierEntry {
    pub id: String,
    pub picks: BTreeMap<String, String>,
    pub quality: String,
    pub layer: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retained_priority: Option<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NamedEntry {
    pub id: String,
    pub quality: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeReport {
    pub node: String,
    pub frontier: Vec<FrontierEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub named: Vec<NamedEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MedianEntry {
    pub node: String,
    pub id: String,
    pub w: u8,
    pub median: String,
    pub deviation: u32,
    pub co_minimal: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layer: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelReport {
    pub node: String,
    pub solutions: usize,
    pub threshold: f64,
    pub kernel: BTreeMap<String, String>,
    pub superstructure: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggregationReport {
    pub budget: Amount,
    pub method: Method,
    pub selection: Selection,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub optima: Vec<Selection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solution: Option<AggregatedSolution>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunReport {
    pub command: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_digest: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub validation: Vec<Violation>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub frontiers: Vec<NodeReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bottlenecks: Vec<Bottleneck>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub medians: Vec<MedianEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub aggregations: Vec<AggregationReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated: Option<ModelDocument>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub infeasible: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: RunReport,
    pub rendered: String,
    pub exit_code: i32,
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_INFEASIBLE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

struct Failure(i32, String);

impl From<MorphError> for Failure {
    fn from(e: MorphError) -> Self {
        match e {
            MorphError::InfeasibleNode(_) | MorphError::InfeasibleBudget(_) => Failure(EXIT_INFEASIBLE, e.to_string()),
            _ => Failure(EXIT_USAGE, e.to_string()),
        }
    }
}

/// Runs one invocation. `argv[0]` is the program name.
pub fn run_command<I, S>(argv: I) -> Outcome
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    let mut report = RunReport {
        command: argv.iter().skip(1).cloned().collect(),
        ..Default::default()
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            if code != EXIT_OK {
                report.errors.push(e.kind().to_string());
            }
            return Outcome {
                report,
                rendered: e.render().to_string(),
                exit_code: code,
            };
        }
    };

    let (format, result) = match &cli.command {
        Command::Gen(g) => (g.format, run_gen(g, &mut report)),
        Command::Validate(a) => (a.format, with_model(a, &mut report, |_, _| Ok(EXIT_OK.into()))),
        Command::Synth(a) => (a.format, with_model(a, &mut report, run_synth)),
        Command::Bottlenecks(a) => (a.format, with_model(a, &mut report, run_bottlenecks)),
        Command::Median(a) => (a.format, with_model(a, &mut report, run_median)),
        Command::Aggregate(a) => (a.format, with_model(a, &mut report, run_aggregate)),
        Command::Kernel(a) => (a.format, with_model(a, &mut report, run_kernel)),
        Command::Report(a) => (a.format, with_model(a, &mut report, run_report)),
    };
    let (exit_code, dot) = match result {
        Ok(Rendered { code, dot }) => (code, dot),
        Err(Failure(code, msg)) => {
            report.errors.push(msg);
            (code, None)
        }
    };
    let rendered = match (&cli.command, &report.generated) {
        (Command::Gen(_), Some(doc)) if format != Format::Dot => doc.to_json() + "\n",
        _ => render(&report, &cli.command, format, exit_code, dot),
    };
    Outcome {
        report,
        rendered,
        exit_code,
    }
}

fn render(report: &RunReport, command: &Command, format: Format, exit_code: i32, dot: Option<String>) -> String {
    match format {
        Format::Json => serde_json::to_string_pretty(report).expect("reports serialize") + "\n",
        Format::Dot if exit_code != EXIT_USAGE => dot.unwrap_or_default(),
        _ => render_text(report, command),
    }
}

struct Rendered {
    code: i32,
    dot: Option<String>,
}

impl From<i32> for Rendered {
    fn from(code: i32) -> Self {
        Self { code, dot: None }
    }
}

struct Ctx<'a> {
    doc: &'a ModelDocument,
    model: MorphModel,
    args: &'a ModelArgs,
}

impl Ctx<'_> {
    fn synthesis_options(&self) -> SynthesisOptions {
        let algorithm = match self.args.algorithm {
            Some(AlgorithmArg::Brute) => Algorithm::Brute,
            Some(AlgorithmArg::Dp) => Algorithm::Dp,
            None => self.doc.options.algorithm.unwrap_or_default(),
        };
        let retention = match self.args.layers.or(self.doc.options.layers) {
            Some(k) => Retention::Layers(k),
            None => Retention::All,
        };
        SynthesisOptions { algorithm, retention }
    }

    fn enforce(&self) -> bool {
        self.args.enforce_condition2.or(self.doc.options.enforce_condition2).unwrap_or(true)
    }

    fn metric(&self) -> Metric {
        match self.args.metric {
            Some(MetricArg::Max) => Metric::Max,
            Some(MetricArg::Sum) => Metric::Sum,
            Some(MetricArg::Componentwise) => Metric::Componentwise,
            None => self.doc.options.metric.unwrap_or_default(),
        }
    }

    fn method(&self) -> Method {
        match self.args.method {
            Some(MethodArg::Greedy) => Method::Greedy,
            Some(MethodArg::Exact) => Method::Exact,
            None => self.doc.options.method.unwrap_or_default(),
        }
    }

    fn wants(&self, node: &str) -> bool {
        self.args.node.as_deref().is_none_or(|n| n == node)
    }
}

fn load(path: &str) -> Result<String, Failure> {
    if let Some(name) = path.strip_prefix("fixture:") {
        return fixtures::by_name(name)
            .map(str::to_string)
            .ok_or_else(|| Failure(EXIT_USAGE, format!("no bundled fixture `{name}`")));
    }
    std::fs::read_to_string(PathBuf::from(path)).map_err(|e| Failure(EXIT_USAGE, format!("cannot read {path}: {e}")))
}

type Runner = fn(&Ctx, &mut RunReport) -> Result<Rendered, Failure>;

fn with_model(args: &ModelArgs, report: &mut RunReport, run: Runner) -> Result<Rendered, Failure> {
    let text = load(&args.model)?;
    let doc = parse_document(&text).map_err(|e| Failure(EXIT_USAGE, e.to_string()))?;
    report.model_digest = Some(doc.digest());
    let validation = validate_document(&doc);
    if !validation.is_empty() {
        report.validation = validation.violations;
        return Err(Failure(EXIT_USAGE, "model failed validation".into()));
    }
    if let Some(t) = args.threshold {
        if !(t > 0.0 && t <= 1.0) {
            return Err(Failure(EXIT_USAGE, format!("--threshold {t} outside (0,1]")));
        }
    }
    if let Some(n) = &args.node {
        if doc.model().component(n).is_none() {
            return Err(Failure(EXIT_USAGE, format!("--node `{n}` is not a component")));
        }
    }
    let ctx = Ctx {
        model: doc.model(),
        doc: &doc,
        args,
    };
    run(&ctx, report)
}

fn run_gen(g: &GenArgs, report: &mut RunReport) -> Result<Rendered, Failure> {
    if g.children == 0 || g.das == 0 {
        return Err(Failure(EXIT_USAGE, "--children and --das must be at least 1".into()));
    }
    if OrdinalScale::new(g.l, g.nu).is_err() {
        return Err(Failure(EXIT_USAGE, format!("scale l={} nu={} out of range", g.l, g.nu)));
    }
    let doc = generate_model(&GeneratorConfig {
        seed: g.seed,
        children: g.children,
        das: g.das,
        l: g.l,
        nu: g.nu,
        ..Default::default()
    });
    report.model_digest = Some(doc.digest());
    report.generated = Some(doc);
    Ok(EXIT_OK.into())
}

fn synthesize(ctx: &Ctx, report: &mut RunReport) -> Result<Synthesis, Failure> {
    let s = hierarchical_synthesize(&ctx.model, ctx.synthesis_options())?;
    report.warnings.extend(s.warnings.iter().cloned());
    for n in &s.infeasible {
        if !report.infeasible.contains(n) {
            report.infeasible.push(n.clone());
        }
    }
    Ok(s)
}

fn picks_map(s: &CompositeSolution) -> BTreeMap<String, String> {
    s.picks.iter().map(|(a, b)| (a.clone(), b.clone())).collect()
}

fn node_report(node: &str, ns: &NodeSynthesis) -> NodeReport {
    NodeReport {
        node: node.to_string(),
        frontier: ns
            .frontier
            .iter()
            .map(|(s, layer)| FrontierEntry {
                id: s.id.clone(),
                picks: picks_map(s),
                quality: s.quality.to_string(),
                layer,
                retained_priority: ns.retained.iter().find(|r| r.solution.id == s.id).map(|r| r.priority),
            })
            .collect(),
        named: ns
            .named
            .iter()
            .map(|s| NamedEntry {
                id: s.id.clone(),
                quality: s.quality.to_string(),
            })
            .collect(),
    }
}

fn check_quality_references(ctx: &Ctx, s: &Synthesis, report: &mut RunReport) {
    for r in &ctx.doc.references {
        let Reference::Quality { node, solution, quality, note } = r else { continue };
        let Some(ns) = s.nodes.get(node) else { continue };
        let found = ns
            .named
            .iter()
            .find(|x| &x.id == solution)
            .or_else(|| ns.frontier.solutions.iter().find(|x| &x.id == solution));
        match found {
            None => report.warnings.push(format!("reference {node}/{solution} not found among computed solutions")),
            Some(x) if x.quality.to_string() != quality.replace(' ', "") => report.warnings.push(format!(
                "{node}/{solution}: computed {} differs from reference {quality}{}",
                x.quality,
                note.as_ref().map(|n| format!(" ({n})")).unwrap_or_default()
            )),
            Some(_) => {}
        }
    }
}

/// Synthesizes, records the composite frontiers and checks quality references.
fn synth_into(ctx: &Ctx, report: &mut RunReport) -> Result<Synthesis, Failure> {
    let s = synthesize(ctx, report)?;
    for id in &s.order {
        let comp = ctx.model.component(id).expect("synthesized nodes exist");
        if comp.is_leaf() || !ctx.wants(id) {
            continue;
        }
        if let Some(ns) = s.nodes.get(id) {
            report.frontiers.push(node_report(id, ns));
        }
    }
    check_quality_references(ctx, &s, report);
    Ok(s)
}

fn feasibility(s: &Synthesis) -> i32 {
    if s.is_feasible() {
        EXIT_OK
    } else {
        EXIT_INFEASIBLE
    }
}

fn run_synth(ctx: &Ctx, report: &mut RunReport) -> Result<Rendered, Failure> {
    let s = synth_into(ctx, report)?;
    let dot = report
        .frontiers
        .iter()
        .filter_map(|n| s.frontier(&n.node))
        .map(frontier_dot)
        .collect();
    Ok(Rendered {
        code: feasibility(&s),
        dot: Some(dot),
    })
}

fn run_bottlenecks(ctx: &Ctx, report: &mut RunReport) -> Result<Rendered, Failure> {
    let s = synthesize(ctx, report)?;
    bottlenecks_into(ctx, &s, report)?;
    Ok(feasibility(&s).into())
}

/// Upgrades for every admissible named solution and every first-layer
/// solution of each composite node.
fn bottlenecks_into(ctx: &Ctx, s: &Synthesis, report: &mut RunReport) -> Result<(), Failure> {
    for id in &s.order {
        let Some(ns) = s.nodes.get(id) else { continue };
        if ctx.model.component(id).is_some_and(|c| c.is_leaf()) || !ctx.wants(id) {
            continue;
        }
        let inst = s.instance(&ctx.model, id)?;
        let mut targets: Vec<&CompositeSolution> = ns.named.iter().filter(|x| x.quality.w >= 1).collect();
        for f in ns.frontier.layer(1) {
            if !targets.iter().any(|t| t.id == f.id) {
                targets.push(f);
            }
        }
        for t in targets {
            report.bottlenecks.extend(bottlenecks(&inst, t)?);
        }
    }
    Ok(())
}

fn has_estimates(model: &MorphModel, node: &Component) -> bool {
    !node.is_leaf()
        && node.children.iter().all(|c| {
            model
                .component(c)
                .is_some_and(|c| c.is_leaf() && c.das.iter().all(|d| d.estimate.is_some()))
        })
}

fn run_median(ctx: &Ctx, report: &mut RunReport) -> Result<Rendered, Failure> {
    let (enforce, metric) = (ctx.enforce(), ctx.metric());
    let mut dot = String::new();
    let mut any = false;
    for id in ctx.model.post_order() {
        let comp = ctx.model.component(id).expect("post order yields components");
        if !has_estimates(&ctx.model, comp) || !ctx.wants(id) {
            continue;
        }
        any = true;
        let inst = NodeInstance::from_leaves(&ctx.model, id)?;
        let eta = inst.options().iter().flatten().filter_map(|c| c.estimate.as_ref()).map(|e| e.eta()).next();
        if let Some(eta) = eta {
            dot.push_str(&estimate_poset_dot(ctx.model.scale.levels(), eta, enforce));
        }
        let entry = |s: &synthesis::MultisetSolution, layer| MedianEntry {
            node: id.to_string(),
            id: s.id.clone(),
            w: s.w,
            median: s.median.to_string(),
            deviation: s.deviation,
            co_minimal: s.co_minimal.iter().map(|m| m.to_string()).collect(),
            layer,
        };
        for (label, picks) in inst.named() {
            let s = multiset_solution(&inst, picks, enforce, metric)?;
            report.medians.push(entry(&s, None));
            check_median_reference(ctx, id, label, &s, report);
        }
        let f = synthesize_multiset(&inst, enforce, metric)?;
        for (s, layer) in f.solutions.iter().zip(&f.layers) {
            if *layer == 1 {
                report.medians.push(entry(s, Some(1)));
            }
        }
    }
    if !any {
        return Err(Failure(
            EXIT_USAGE,
            "no composite node has multiset estimates on every alternative of its children".into(),
        ));
    }
    Ok(Rendered {
        code: EXIT_OK,
        dot: Some(dot),
    })
}

fn check_median_reference(ctx: &Ctx, node: &str, label: &str, s: &synthesis::MultisetSolution, report: &mut RunReport) {
    for r in &ctx.doc.references {
        let Reference::Median { node: n, solution, median, deviation, note } = r else { continue };
        if n != node || solution != label {
            continue;
        }
        let dev_ok = deviation.is_none_or(|d| d == s.deviation);
        if &s.median != median || !dev_ok {
            report.warnings.push(format!(
                "{node}/{label}: computed median {} (deviation {}) differs from reference {median}{}{}",
                s.median,
                s.deviation,
                deviation.map(|d| format!(" (deviation {d})")).unwrap_or_default(),
                note.as_ref().map(|n| format!(" ({n})")).unwrap_or_default()
            ));
        }
    }
}

fn kernel_of(ctx: &Ctx, s: &Synthesis) -> Result<Option<KernelReport>, Failure> {
    let node = ctx.args.node.clone().unwrap_or_else(|| ctx.model.root.clone());
    let Some(ns) = s.nodes.get(&node) else { return Ok(None) };
    if ns.frontier.is_empty() {
        return Ok(None);
    }
    let threshold = ctx.args.threshold.unwrap_or(1.0);
    let k = solution_kernel(&ns.frontier.solutions, threshold)?;
    let sel: Vec<_> = ns.frontier.solutions.iter().map(|s| &s.picks).collect();
    let sup = superstructure(&sel)?;
    Ok(Some(KernelReport {
        node,
        solutions: k.total,
        threshold,
        kernel: k.picks,
        superstructure: sup.into_iter().map(|(c, v)| (c, v.into_iter().collect())).collect(),
    }))
}

fn run_kernel(ctx: &Ctx, report: &mut RunReport) -> Result<Rendered, Failure> {
    let s = synthesize(ctx, report)?;
    match kernel_of(ctx, &s)? {
        Some(k) => {
            report.kernel = Some(k);
            Ok(EXIT_OK.into())
        }
        None => Err(Failure(EXIT_INFEASIBLE, "no admissible solutions to take a kernel of".into())),
    }
}

fn knapsack_spec<'a>(ctx: &'a Ctx) -> Result<&'a KnapsackSpec, Failure> {
    ctx.doc
        .knapsack
        .as_ref()
        .ok_or_else(|| Failure(EXIT_USAGE, "model has no knapsack section".into()))
}

fn run_aggregate(ctx: &Ctx, report: &mut RunReport) -> Result<Rendered, Failure> {
    let knap = knapsack_spec(ctx)?;
    check_overlap(&knap.kernel, &knap.groups)?;
    let budgets: Vec<Amount> = match &ctx.args.budget {
        Some(b) => vec![b.parse().map_err(|e: String| Failure(EXIT_USAGE, e))?],
        None => knap.budgets.clone(),
    };
    if budgets.is_empty() {
        return Err(Failure(EXIT_USAGE, "no budget given and the model lists none".into()));
    }
    let method = ctx.method();
    let mut code = EXIT_OK;
    for &budget in &budgets {
        let exact = match solve_exact(&knap.groups, budget) {
            Ok(x) => Some(x),
            Err(MorphError::InfeasibleBudget(_)) => None,
            Err(e) => return Err(e.into()),
        };
        let (selection, optima) = match method {
            Method::Greedy => (solve_greedy(&knap.groups, budget)?, Vec::new()),
            Method::Exact => match &exact {
                Some(x) => (x.best.clone(), x.optima.clone()),
                None => (solve_greedy(&knap.groups, budget)?, Vec::new()),
            },
        };
        let solution = if selection.feasible {
            Some(extend_kernel(&knap.kernel, &selection)?)
        } else {
            code = EXIT_INFEASIBLE;
            report.infeasible.push(format!("budget {budget}"));
            None
        };
        check_knapsack_references(ctx, knap, budget, exact.as_ref(), report);
        report.aggregations.push(AggregationReport {
            budget,
            method,
            selection,
            optima,
            solution,
        });
    }
    compare_document_kernel(ctx, knap, report);
    Ok(code.into())
}

fn check_knapsack_references(
    ctx: &Ctx,
    knap: &KnapsackSpec,
    budget: Amount,
    exact: Option<&ExactSolution>,
    report: &mut RunReport,
) {
    for r in &ctx.doc.references {
        let Reference::Knapsack { budget: b, selection, profit, note } = r else { continue };
        if *b != budget {
            continue;
        }
        let items: Vec<&Item> = selection
            .iter()
            .filter_map(|id| knap.groups.iter().flat_map(|g| &g.items).find(|i| &i.id == id))
            .collect();
        let label = selection.join(",");
        let suffix = note.as_ref().map(|n| format!(" ({n})")).unwrap_or_default();
        if items.len() != selection.len() || items.len() != knap.groups.len() {
            report.warnings.push(format!(
                "reference selection {label} for budget {budget} does not pick one known item per group{suffix}"
            ));
            continue;
        }
        let cost: Amount = items.iter().map(|i| i.cost).sum();
        let actual: Amount = items.iter().map(|i| i.profit).sum();
        if cost > budget {
            report.warnings.push(format!(
                "reference selection {label}: selection cost {cost} exceeds budget {budget}; not used as ground truth{suffix}"
            ));
            continue;
        }
        if actual != *profit {
            report.warnings.push(format!(
                "reference selection {label}: item profits sum to {actual}, reference states {profit}{suffix}"
            ));
        }
        if let Some(x) = exact {
            if actual != x.best.profit {
                report.warnings.push(format!(
                    "reference selection {label} for budget {budget} has profit {actual}, optimum is {}{suffix}",
                    x.best.profit
                ));
            }
        }
    }
}

/// The kernel computed from the root's solutions, when the root composes
/// leaves directly, compared with the kernel the document fixes.
fn compare_document_kernel(ctx: &Ctx, knap: &KnapsackSpec, report: &mut RunReport) {
    let root = ctx.model.component(&ctx.model.root).expect("validated root");
    if knap.kernel.is_empty() || root.children.iter().any(|c| ctx.model.component(c).is_some_and(|c| !c.is_leaf())) {
        return;
    }
    let Ok(inst) = NodeInstance::from_leaves(&ctx.model, &root.id) else { return };
    let Ok(all) = enumerate_admissible(&inst) else { return };
    let Ok(k) = solution_kernel(&all, 1.0) else { return };
    if k.picks != knap.kernel {
        let show = |m: &BTreeMap<String, String>| m.values().cloned().collect::<Vec<_>>().join(",");
        report.warnings.push(format!(
            "document kernel {{{}}} differs from the kernel {{{}}} common to all {} root solutions",
            show(&knap.kernel),
            show(&k.picks),
            all.len()
        ));
    }
}

fn run_report(ctx: &Ctx, report: &mut RunReport) -> Result<Rendered, Failure> {
    let s = synth_into(ctx, report)?;
    let mut code = feasibility(&s);
    if s.is_feasible() {
        bottlenecks_into(ctx, &s, report)?;
        report.kernel = kernel_of(ctx, &s)?;
    }
    if ctx.model.components.iter().any(|c| has_estimates(&ctx.model, c)) {
        run_median(ctx, report)?;
    }
    if ctx.doc.knapsack.is_some() {
        code = code.max(run_aggregate(ctx, report)?.code);
    }
    Ok(code.into())
}

fn render_text(report: &RunReport, command: &Command) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    if let Some(d) = &report.model_digest {
        if !matches!(command, Command::Gen(_)) {
            let _ = writeln!(out, "model {}", &d[..16]);
        }
    }
    for v in &report.validation {
        let _ = writeln!(out, "invalid: {}: {}", v.location, v.message);
    }
    for n in &report.frontiers {
        let _ = writeln!(out, "node {}", n.node);
        for e in &n.frontier {
            let kept = e.retained_priority.map(|p| format!("  retained p={p}")).unwrap_or_default();
            let _ = writeln!(out, "  L{} {:<24} ({}){kept}", e.layer, e.id, e.quality);
        }
        for e in &n.named {
            let _ = writeln!(out, "  named {:<20} ({})", e.id, e.quality);
        }
    }
    for b in &report.bottlenecks {
        let mark = if b.improves { "+" } else { " " };
        let _ = writeln!(
            out,
            "{mark} {}/{}: {}  ({}) -> ({})",
            b.node, b.solution, b.action, b.before, b.after
        );
    }
    for m in &report.medians {
        let tag = if m.layer.is_some() { "frontier" } else { "named" };
        let _ = writeln!(
            out,
            "median {}/{} [{tag}] w={} {} deviation {} (co-minimal: {})",
            m.node,
            m.id,
            m.w,
            m.median,
            m.deviation,
            m.co_minimal.join(" ")
        );
    }
    if let Some(k) = &report.kernel {
        let _ = writeln!(out, "kernel of {} solutions at {} (threshold {}):", k.solutions, k.node, k.threshold);
        for (c, p) in &k.kernel {
            let _ = writeln!(out, "  {c} = {p}");
        }
        let _ = writeln!(out, "superstructure:");
        for (c, ps) in &k.superstructure {
            let _ = writeln!(out, "  {c} in {{{}}}", ps.join(", "));
        }
    }
    for a in &report.aggregations {
        let method = match a.method {
            Method::Greedy => "greedy",
            Method::Exact => "exact",
        };
        if a.selection.feasible {
            let _ = writeln!(
                out,
                "budget {} [{method}]: {} cost {} profit {}",
                a.budget,
                a.selection.item_ids().join(" "),
                a.selection.cost,
                a.selection.profit
            );
        } else {
            let _ = writeln!(out, "budget {} [{method}]: infeasible", a.budget);
        }
        if a.optima.len() > 1 {
            for o in &a.optima {
                let _ = writeln!(out, "  optimum {} cost {}", o.item_ids().join(" "), o.cost);
            }
        }
        if let Some(s) = &a.solution {
            let _ = writeln!(out, "  system {}", s.id);
        }
    }
    for n in &report.infeasible {
        let _ = writeln!(out, "infeasible: {n}");
    }
    for w in &report.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    for e in &report.errors {
        let _ = writeln!(out, "error: {e}");
    }
    out
}
