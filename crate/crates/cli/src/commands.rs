use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use prophet_dag::cover::{min_path_cover_seeded, width, PathCover};
use prophet_dag::graph::{validate_with_limits, Instance, InstanceGraph, Limits};
use prophet_dag::instances::{generate_paper_instance, generate_random_instance};
use prophet_dag::oracle::{
    conditional_choice_distribution, edge_probabilities, expected_opt, optimal_online_value,
    Estimate, Evaluation, OfflineSpec,
};
use prophet_dag::policies::FeasibilityMode;
use prophet_dag::schema::InstanceFile;
use prophet_dag::simulator::{competitive_report, PolicyKind, PolicyOptions, PreparedPolicy};
use prophet_dag::{Error, Metadata};

use crate::args::{Cli, Command, CoverArgs, EvalArgs, PolicyArgs, ENUM_CAP_ENV};
use crate::gen::Request;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] Error),
}

impl CliError {
    pub fn category(&self) -> &'static str {
        match self {
            CliError::Io { .. } => "io",
            CliError::Core(e) => e.category(),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

struct Ctx {
    json: bool,
    limits: Limits,
}

impl Ctx {
    /// Prints `value` as JSON, or `text` otherwise.
    fn emit(&self, value: Value, text: impl FnOnce() -> String) {
        if self.json {
            println!("{value}");
        } else {
            println!("{}", text());
        }
    }
}

fn limits(flag: Option<u128>) -> Result<Limits> {
    let cap = match flag {
        Some(c) => Some(c),
        None => match std::env::var(ENUM_CAP_ENV) {
            Ok(v) => Some(
                v.trim()
                    .parse()
                    .map_err(|_| Error::Params(format!("{ENUM_CAP_ENV}={v:?} is not a number")))?,
            ),
            Err(_) => None,
        },
    };
    Ok(match cap {
        Some(c) => Limits {
            enumeration_cap: c,
            state_cap: c,
        },
        None => Limits::default(),
    })
}

fn read_file(path: &Path) -> Result<InstanceFile> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Schema(format!("{}: {e}", path.display())).into())
}

/// Reads, resolves and validates an instance file.
fn load(path: &Path, limits: &Limits) -> Result<(Instance, InstanceFile)> {
    let file = read_file(path)?;
    let instance = file.to_instance()?;
    let report = validate_with_limits(&instance, limits);
    if !report.is_valid() {
        return Err(Error::Invalid(report).into());
    }
    Ok((instance, file))
}

fn fresh_seed() -> u64 {
    rand::random()
}

fn evaluation(eval: &EvalArgs) -> Evaluation {
    if eval.mc {
        Evaluation::MonteCarlo {
            trials: eval.trials,
            seed: eval.seed.unwrap_or_else(fresh_seed),
        }
    } else {
        Evaluation::Exact
    }
}

fn resolve_cover(g: &InstanceGraph, file: &InstanceFile, args: &CoverArgs) -> Result<PathCover> {
    match &args.name {
        Some(name) => {
            let paths = file
                .metadata
                .as_ref()
                .and_then(|m| m.covers.get(name))
                .ok_or_else(|| {
                    Error::Cover(format!("the instance file has no cover named {name:?}"))
                })?;
            Ok(PathCover::from_ids(g, paths)?)
        }
        None => Ok(min_path_cover_seeded(g, args.cover_seed)?),
    }
}

fn cover_json(g: &InstanceGraph, cover: &PathCover) -> Value {
    let paths: Vec<Value> = cover
        .paths
        .iter()
        .zip(&cover.node_orders)
        .map(|(edges, nodes)| {
            json!({
                "edges": edges,
                "nodes": nodes.iter().map(|u| g.node_name(*u)).collect::<Vec<_>>(),
            })
        })
        .collect();
    json!({ "k": cover.k(), "paths": paths })
}

fn cover_text(g: &InstanceGraph, cover: &PathCover) -> String {
    let mut out = format!("{} paths", cover.k());
    for (i, nodes) in cover.node_orders.iter().enumerate() {
        let names: Vec<&str> = nodes.iter().map(|u| g.node_name(*u)).collect();
        out.push_str(&format!("\n  P{}: {}", i + 1, names.join(" -> ")));
    }
    out
}

fn estimate_text(e: &Estimate) -> String {
    match (e.std_error, e.trials, e.seed) {
        (Some(se), Some(n), Some(seed)) => {
            format!("{:.6} ± {se:.6} ({n} trials, seed {seed})", e.mean)
        }
        _ => format!("{:.9}", e.mean),
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let ctx = Ctx {
        json: cli.json,
        limits: limits(cli.enum_cap)?,
    };
    match cli.command {
        Command::Validate { file } => validate(&ctx, &file),
        Command::Width { file } => {
            let (inst, _) = load(&file, &ctx.limits)?;
            let w = width(&inst.graph);
            ctx.emit(json!({ "width": w }), || w.to_string());
            Ok(())
        }
        Command::Cover { file, cover } => {
            let (inst, f) = load(&file, &ctx.limits)?;
            let c = resolve_cover(&inst.graph, &f, &cover)?;
            ctx.emit(cover_json(&inst.graph, &c), || cover_text(&inst.graph, &c));
            Ok(())
        }
        Command::Opt { file, eval } => {
            let (inst, _) = load(&file, &ctx.limits)?;
            let e = expected_opt(&inst, &OfflineSpec::Opt, evaluation(&eval), &ctx.limits)?;
            ctx.emit(json!({ "expected_opt": e }), || {
                format!("E(OPT) = {}", estimate_text(&e))
            });
            Ok(())
        }
        Command::Xprobs {
            file,
            node,
            outcome,
        } => xprobs(&ctx, &file, node, outcome),
        Command::OnlineOpt { file } => {
            let (inst, _) = load(&file, &ctx.limits)?;
            let v = optimal_online_value(&inst, &ctx.limits)?;
            ctx.emit(json!({ "online_opt": v }), || format!("{v:.9}"));
            Ok(())
        }
        Command::Simulate {
            file,
            policy,
            eval,
            online,
        } => simulate(&ctx, &file, &policy, &eval, online),
        Command::Gen(args) => generate(&ctx, &args),
        Command::Trace { file, policy, seed } => trace(&ctx, &file, &policy, seed),
    }
}

fn validate(ctx: &Ctx, path: &Path) -> Result<()> {
    let file = read_file(path)?;
    let inst = file.to_instance()?;
    let report = validate_with_limits(&inst, &ctx.limits);
    let g = &inst.graph;
    ctx.emit(
        json!({
            "valid": report.is_valid(),
            "nodes": g.node_count(),
            "edges": g.edge_count(),
            "labels": g.labels().len(),
            "d": g.max_labels(),
            "realizations": inst.realization_count().to_string(),
            "violations": report.violations,
        }),
        || {
            if report.is_valid() {
                format!(
                    "valid: {} nodes, {} edges, {} labels, d = {}, {} realizations",
                    g.node_count(),
                    g.edge_count(),
                    g.labels().len(),
                    g.max_labels(),
                    inst.realization_count()
                )
            } else {
                format!("invalid:\n{report}")
            }
        },
    );
    if report.is_valid() {
        Ok(())
    } else {
        Err(Error::Invalid(report).into())
    }
}

fn xprobs(ctx: &Ctx, path: &Path, node: Option<String>, outcome: Option<usize>) -> Result<()> {
    let (inst, _) = load(path, &ctx.limits)?;
    let g = &inst.graph;
    if let (Some(name), Some(o)) = (node, outcome) {
        let u = g
            .node_by_name(&name)
            .ok_or_else(|| Error::Params(format!("no node named {name:?}")))?;
        let law = conditional_choice_distribution(&inst, &OfflineSpec::Opt, u, o, &ctx.limits)?;
        ctx.emit(
            json!({ "node": name, "outcome": o, "edges": law.edges, "none": law.none }),
            || {
                let mut out = format!("{:<8} {:>12}", "edge", "probability");
                for (e, p) in &law.edges {
                    out.push_str(&format!("\n{:<8} {p:>12.9}", e.to_string()));
                }
                out.push_str(&format!("\n{:<8} {:>12.9}", "none", law.none));
                out
            },
        );
        return Ok(());
    }
    let x = edge_probabilities(&inst, &OfflineSpec::Opt, &ctx.limits)?;
    ctx.emit(json!({ "x": x.x }), || {
        let mut out = format!("{:<8} {:<20} {:>12}", "edge", "arc", "x");
        for e in g.edges() {
            let arc = format!("{} -> {}", g.node_name(e.src), g.node_name(e.dst));
            out.push_str(&format!(
                "\n{:<8} {arc:<20} {:>12.9}",
                e.id.to_string(),
                x.get(e.id)
            ));
        }
        out
    });
    Ok(())
}

fn feasibility(policy: &PolicyArgs) -> FeasibilityMode {
    match policy.feasibility_particles {
        Some(particles) => FeasibilityMode::MonteCarlo {
            particles,
            seed: policy.feasibility_seed.unwrap_or_else(fresh_seed),
        },
        None => FeasibilityMode::Exact,
    }
}

fn prepare(
    ctx: &Ctx,
    inst: &Instance,
    file: &InstanceFile,
    args: &PolicyArgs,
) -> Result<(PreparedPolicy, FeasibilityMode)> {
    let kind = PolicyKind::from(args.policy);
    let mode = feasibility(args);
    let options = PolicyOptions {
        cover: Some(resolve_cover(&inst.graph, file, &args.cover)?),
        feasibility: mode,
        limits: ctx.limits,
    };
    Ok((PreparedPolicy::prepare(inst, kind, &options)?, mode))
}

fn simulate(
    ctx: &Ctx,
    path: &Path,
    args: &PolicyArgs,
    eval: &EvalArgs,
    online: bool,
) -> Result<()> {
    let (inst, file) = load(path, &ctx.limits)?;
    let (policy, mode) = prepare(ctx, &inst, &file, args)?;
    let report = competitive_report(&inst, &policy, evaluation(eval), online, &ctx.limits)?;
    let mut value = serde_json::to_value(&report).map_err(|e| Error::Internal(e.to_string()))?;
    let labeled = matches!(
        report.policy,
        PolicyKind::Width1Labeled | PolicyKind::General
    );
    if labeled {
        value["feasibility"] =
            serde_json::to_value(mode).map_err(|e| Error::Internal(e.to_string()))?;
    }
    ctx.emit(value, || {
        let mut rows = vec![
            ("policy", report.policy.to_string()),
            ("cover size k", report.cover_size.to_string()),
            ("d", report.d.to_string()),
            ("E(ALG)", estimate_text(&report.alg)),
        ];
        if let Some(w) = report.alg_without_connectors {
            rows.push(("E(ALG) w/o connectors", format!("{w:.9}")));
        }
        rows.push(("E(OPT)", estimate_text(&report.opt)));
        if let Some(v) = report.online_opt {
            rows.push(("online optimum", format!("{v:.9}")));
        }
        rows.push(("ratio", format!("{:.6}", report.ratio)));
        rows.push((
            "bound",
            format!(
                "{} = {:.6}: {}",
                report.bound_name,
                report.bound,
                if report.bound_satisfied {
                    "pass"
                } else {
                    "FAIL"
                }
            ),
        ));
        if let (true, FeasibilityMode::MonteCarlo { particles, seed }) = (labeled, mode) {
            rows.push((
                "p(e)",
                format!("Monte Carlo, {particles} particles, seed {seed}"),
            ));
        }
        rows.push(("wall clock", format!("{:.3} s", report.wall_clock_seconds)));
        rows.iter()
            .map(|(k, v)| format!("{k:<22} {v}"))
            .collect::<Vec<_>>()
            .join("\n")
    });
    Ok(())
}

fn generate(ctx: &Ctx, args: &crate::gen::GenArgs) -> Result<()> {
    let (instance, metadata) = match args.request()? {
        Request::Family(params) => {
            let g = generate_paper_instance(&params)?;
            (g.instance, g.metadata)
        }
        Request::Random(params, seed) => {
            let inst = generate_random_instance(&params, seed)?;
            let metadata = Metadata {
                family: Some("random".into()),
                params: Some(json!({ "params": params, "seed": seed })),
                ..Metadata::default()
            };
            (inst, metadata)
        }
    };
    let file = InstanceFile::from_instance(&instance, Some(metadata));
    let text = serde_json::to_string_pretty(&file).map_err(|e| Error::Internal(e.to_string()))?;
    match &args.output {
        Some(path) => {
            fs::write(path, text + "\n").map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
            let g = &instance.graph;
            ctx.emit(
                json!({ "written": path, "nodes": g.node_count(), "edges": g.edge_count() }),
                || {
                    format!(
                        "wrote {} ({} nodes, {} edges)",
                        path.display(),
                        g.node_count(),
                        g.edge_count()
                    )
                },
            );
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn trace(ctx: &Ctx, path: &Path, args: &PolicyArgs, seed: Option<u64>) -> Result<()> {
    let (inst, file) = load(path, &ctx.limits)?;
    let (policy, _) = prepare(ctx, &inst, &file, args)?;
    let seed = seed.unwrap_or_else(fresh_seed);
    let t = policy.run(&inst, &mut prophet_dag::rng::seeded(seed))?;
    let g = &inst.graph;
    ctx.emit(json!({ "seed": seed, "trajectory": t }), || {
        let mut out = format!("seed {seed}");
        if let Some(i) = t.component {
            out.push_str(&format!(", cover path P{}", i + 1));
        }
        out.push_str(&format!(
            "\n{:<10} {:>7} {:<10} {:>8} {:<6} {:<10} {:>10}",
            "node", "outcome", "tentative", "accept", "coin", "action", "value"
        ));
        for d in &t.decisions {
            let opt = |x: Option<String>| x.unwrap_or_else(|| "-".into());
            out.push_str(&format!(
                "\n{:<10} {:>7} {:<10} {:>8} {:<6} {:<10} {:>10.4}",
                g.node_name(d.node),
                d.outcome,
                opt(d.tentative.map(|e| e.to_string())),
                opt(d.accept_probability.map(|p| format!("{p:.4}"))),
                opt(d.coin.map(|c| c.to_string())),
                d.action.to_string(),
                d.value
            ));
        }
        let edges: Vec<String> = t.edges.iter().map(|e| e.to_string()).collect();
        out.push_str(&format!("\npath {}\nvalue {:.6}", edges.join(" "), t.value));
        if t.connector_value > 0.0 {
            out.push_str(&format!(" (connectors {:.6})", t.connector_value));
        }
        out
    });
    Ok(())
}
