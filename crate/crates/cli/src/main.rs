//! Command-line interface: graph summaries, synthetic graph generation, the
//! three simulation studies, dependency diagnostics, normal-approximation
//! bound terms, and one-shot estimation from observed data.

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use netexp::dependency::{dependency_brute_force, dependency_from_decay_model, stein_bound_terms};
use netexp::design::{diff_in_means, Assignment};
use netexp::graph::{gen_random_graph, graph_summary, largest_connected_component, load_edge_list,
    GraphKind, GraphSummary};
use netexp::harness::{
    coverage_csv, normality_csv, run_sim_coverage, run_sim_normality, run_sim_variance,
    variance_csv, write_text, ConfigOverlay,
};
use netexp::outcome::{sample_direct_effects, DecayModel};
use netexp::variance::{confidence_interval, neyman_sutva_variance, vtau_plugin};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "netexp", version, about = "Randomized experiments on networks: estimators, variance decomposition, and interference diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Summarize a graph (nodes, edges, degrees, distances) as a CSV row.
    Summary(SummaryArgs),
    /// Generate a synthetic graph and write it as an edge list.
    GenGraph(GenGraphArgs),
    /// Shapiro-Wilk normality study of the difference-in-means estimator.
    SimNormality(SimArgs),
    /// Variance decomposition study (SUTVA vs interference components).
    SimVariance(SimArgs),
    /// Confidence-interval coverage study.
    SimCoverage(SimArgs),
    /// Build the dependency graph induced by a decay model radius.
    DiagnoseDependency(DiagnoseArgs),
    /// Evaluate the dependency-graph normal-approximation bound terms.
    SteinBound(SteinArgs),
    /// Estimate the treatment effect from observed assignments and outcomes.
    Estimate(EstimateArgs),
}

#[derive(Args)]
struct SummaryArgs {
    /// Edge-list file (two integer tokens per line, `#` comments).
    #[arg(long)]
    graph: PathBuf,
    /// Compute distance statistics exactly (all-sources BFS).
    #[arg(long)]
    exact: bool,
    /// BFS sources for sampled distance statistics.
    #[arg(long, default_value_t = 64)]
    sample_size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Label for the first CSV column (defaults to the file stem).
    #[arg(long)]
    label: Option<String>,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenGraphArgs {
    /// erdos_renyi | watts_strogatz | barabasi_albert
    #[arg(long)]
    generator: String,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    seed: u64,
    /// Edge probability (erdos_renyi).
    #[arg(long)]
    p: Option<f64>,
    /// Ring-lattice degree, even (watts_strogatz).
    #[arg(long)]
    k: Option<usize>,
    /// Rewiring probability (watts_strogatz).
    #[arg(long)]
    beta: Option<f64>,
    /// Edges per new node (barabasi_albert).
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

/// Simulation flags; every flag overrides the corresponding config-file key.
#[derive(Args)]
struct SimArgs {
    /// Flat key = value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run seed (required; overrides the config file).
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long)]
    generator: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    label: Option<String>,
    #[arg(long)]
    pi: Option<f64>,
    /// Comma-separated, e.g. `0.5,0.9,0.99`.
    #[arg(long)]
    gamma_list: Option<String>,
    /// Comma-separated, e.g. `2,6`.
    #[arg(long)]
    rho_max_list: Option<String>,
    #[arg(long)]
    instances: Option<usize>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    alpha_mean_treated: Option<f64>,
    #[arg(long)]
    alpha_mean_control: Option<f64>,
    #[arg(long)]
    level: Option<f64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Write the CSV here (overrides out_dir-based naming).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    rho_max: usize,
    /// Write the dependency edge list here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Cross-check against the exhaustive probe (small graphs only).
    #[arg(long)]
    check_brute_force: bool,
    /// Decay rate for the brute-force cross-check model.
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
    /// Seed for the cross-check model's direct effects.
    #[arg(long, default_value_t = 0)]
    alpha_seed: u64,
}

#[derive(Args)]
struct SteinArgs {
    /// CSV of per-unit moments: `E[X^4],E[|X|^3]` per line.
    #[arg(long)]
    moments: PathBuf,
    /// Maximal dependency degree.
    #[arg(long)]
    d: usize,
    #[arg(long)]
    sigma_sq: f64,
    #[arg(long, default_value_t = 1.0)]
    c1: f64,
    #[arg(long, default_value_t = 1.0)]
    c2: f64,
}

#[derive(Args)]
struct EstimateArgs {
    /// 0/1 assignment column.
    #[arg(long)]
    treatments: PathBuf,
    /// Outcome column (one float per line).
    #[arg(long)]
    outcomes: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    pi: f64,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Summary(args) => summary(args),
        Command::GenGraph(args) => gen_graph(args),
        Command::SimNormality(args) => simulate(args, Sim::Normality),
        Command::SimVariance(args) => simulate(args, Sim::Variance),
        Command::SimCoverage(args) => simulate(args, Sim::Coverage),
        Command::DiagnoseDependency(args) => diagnose(args),
        Command::SteinBound(args) => stein(args),
        Command::Estimate(args) => estimate(args),
    }
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => {
            write_text(path, text)?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn summary(args: SummaryArgs) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(&args.graph)
        .with_context(|| format!("reading {}", args.graph.display()))?;
    let load = load_edge_list(&text)?;
    if load.duplicate_edges_dropped > 0 || load.self_loops_dropped > 0 {
        eprintln!(
            "dropped {} duplicate edges and {} self-loops",
            load.duplicate_edges_dropped, load.self_loops_dropped
        );
    }
    let s = graph_summary(&load.graph, args.exact, args.sample_size, args.seed)?;
    if s.lcc_only {
        eprintln!("graph is disconnected; distance statistics refer to the largest connected component");
    }
    if !s.distances_exact {
        eprintln!("distance statistics sampled from {} sources; diameter is a lower bound", args.sample_size);
    }
    let label = args.label.clone().unwrap_or_else(|| {
        args.graph.file_stem().map(|v| v.to_string_lossy().into_owned()).unwrap_or_else(|| "graph".into())
    });
    let text = format!("{}\n{}\n", GraphSummary::CSV_HEADER, s.csv_row(&label));
    emit(args.out.as_deref(), &text)
}

fn gen_graph(args: GenGraphArgs) -> anyhow::Result<()> {
    let kind = match args.generator.as_str() {
        "erdos_renyi" => GraphKind::ErdosRenyi {
            p: args.p.context("erdos_renyi requires --p")?,
        },
        "watts_strogatz" => GraphKind::WattsStrogatz {
            k: args.k.context("watts_strogatz requires --k")?,
            beta: args.beta.context("watts_strogatz requires --beta")?,
        },
        "barabasi_albert" => GraphKind::BarabasiAlbert {
            m: args.m.context("barabasi_albert requires --m")?,
        },
        other => bail!("unknown generator `{other}`"),
    };
    let graph = gen_random_graph(&kind, args.n, args.seed)?;
    write_text(&args.out, &graph.to_edge_list_text())?;
    eprintln!(
        "wrote {} ({} nodes, {} edges)",
        args.out.display(),
        graph.node_count(),
        graph.edge_count()
    );
    Ok(())
}

enum Sim {
    Normality,
    Variance,
    Coverage,
}

fn simulate(args: SimArgs, which: Sim) -> anyhow::Result<()> {
    let base = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            ConfigOverlay::parse(&text)?
        }
        None => ConfigOverlay::default(),
    };
    let flags = ConfigOverlay {
        graph: args.graph.clone(),
        generator: args.generator.clone(),
        n: args.n,
        p: args.p,
        k: args.k,
        beta: args.beta,
        m: args.m,
        label: args.label.clone(),
        pi: args.pi,
        gamma_list: args
            .gamma_list
            .as_deref()
            .map(parse_f64_list)
            .transpose()?,
        rho_max_list: args
            .rho_max_list
            .as_deref()
            .map(parse_usize_list)
            .transpose()?,
        instances: args.instances,
        replicates: args.replicates,
        alpha_mean_treated: args.alpha_mean_treated,
        alpha_mean_control: args.alpha_mean_control,
        level: args.level,
        seed: Some(args.seed),
        out_dir: args.out_dir.clone(),
    };
    let cfg = base.overridden_by(&flags).build()?;

    let (name, csv) = match which {
        Sim::Normality => ("sim_normality.csv", normality_csv(&run_sim_normality(&cfg)?)),
        Sim::Variance => ("sim_variance.csv", variance_csv(&run_sim_variance(&cfg)?)),
        Sim::Coverage => ("sim_coverage.csv", coverage_csv(&run_sim_coverage(&cfg)?)),
    };
    let out = args.out.clone().or_else(|| cfg.out_dir.as_ref().map(|d| d.join(name)));
    emit(out.as_deref(), &csv)
}

fn parse_f64_list(s: &str) -> anyhow::Result<Vec<f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().with_context(|| format!("invalid number `{t}`")))
        .collect()
}

fn parse_usize_list(s: &str) -> anyhow::Result<Vec<usize>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<usize>().with_context(|| format!("invalid integer `{t}`")))
        .collect()
}

fn diagnose(args: DiagnoseArgs) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(&args.graph)
        .with_context(|| format!("reading {}", args.graph.display()))?;
    let load = load_edge_list(&text)?;
    let (graph, _) = largest_connected_component(&load.graph);
    let dep = dependency_from_decay_model(&graph, args.rho_max);
    let n = dep.n() as f64;
    let d = dep.max_degree() as f64;
    println!("n,edges,max_degree,ratio_n_quarter,ratio_n_third");
    println!(
        "{},{},{},{:.6},{:.6}",
        dep.n(),
        dep.edge_count(),
        dep.max_degree(),
        d / n.powf(0.25),
        d / n.powf(1.0 / 3.0)
    );
    if args.check_brute_force {
        let shells = std::sync::Arc::new(netexp::graph::distance_shells(&graph, args.rho_max)?);
        let alpha = sample_direct_effects(graph.node_count(), 1.0 / 0.3, 2.0, args.alpha_seed)?;
        let model = DecayModel::new(shells, args.rho_max, args.gamma, alpha)?;
        let probe = dependency_brute_force(&model)?;
        let agrees = probe.adjacency() == dep.adjacency();
        println!("brute_force_agrees,{agrees}");
        if !agrees {
            bail!("brute-force probe disagrees with the analytic dependency graph");
        }
    }
    if let Some(out) = &args.out {
        write_text(out, &dep.to_edge_list_text())?;
        eprintln!("wrote {}", out.display());
    }
    Ok(())
}

fn stein(args: SteinArgs) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(&args.moments)
        .with_context(|| format!("reading {}", args.moments.display()))?;
    let mut moments = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').map(str::trim).collect();
        if parts.len() != 2 {
            bail!("line {}: expected `E[X^4],E[|X|^3]`", idx + 1);
        }
        let x4: f64 = parts[0].parse().with_context(|| format!("line {}", idx + 1))?;
        let x3: f64 = parts[1].parse().with_context(|| format!("line {}", idx + 1))?;
        moments.push((x4, x3));
    }
    let report = stein_bound_terms(&moments, args.d, args.sigma_sq, args.c1, args.c2)?;
    let json = serde_json::json!({
        "d": report.d,
        "sigma_sq": report.sigma_sq,
        "term1": report.term1,
        "term2": report.term2,
        "c1": report.c1,
        "c2": report.c2,
        "bound": report.bound,
        "note": report.note,
    });
    println!("{}", serde_json::to_string_pretty(&json)?);
    Ok(())
}

fn read_outcomes(path: &Path) -> anyhow::Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let v: f64 = line
            .parse()
            .with_context(|| format!("line {}: invalid outcome `{line}`", idx + 1))?;
        out.push(v);
    }
    if out.is_empty() {
        bail!("outcome file {} is empty", path.display());
    }
    Ok(out)
}

fn estimate(args: EstimateArgs) -> anyhow::Result<()> {
    let w_text = std::fs::read_to_string(&args.treatments)
        .with_context(|| format!("reading {}", args.treatments.display()))?;
    let assignment = Assignment::from_csv(&w_text)?;
    let y = read_outcomes(&args.outcomes)?;
    if y.len() != assignment.n() {
        bail!(
            "treatments ({}) and outcomes ({}) have different lengths",
            assignment.n(),
            y.len()
        );
    }
    let tau_hat = diff_in_means(&assignment, &y)?;
    let v_sutva = neyman_sutva_variance(&assignment, &y)?;
    let v_tau = vtau_plugin(&assignment, &y)?;
    let v_combined = v_sutva + v_tau;
    let ci = confidence_interval(tau_hat, v_combined, args.level)?;
    let json = serde_json::json!({
        "n": assignment.n(),
        "n1": assignment.n1(),
        "n0": assignment.n0(),
        "pi": args.pi,
        "tau_hat": tau_hat,
        "v_sutva": v_sutva,
        "v_tau": v_tau,
        "v_combined": v_combined,
        "ci": {
            "level": ci.level,
            "center": ci.center,
            "half_width": ci.half_width,
            "lower": ci.lower(),
            "upper": ci.upper(),
        },
    });
    println!("{}", serde_json::to_string_pretty(&json)?);
    Ok(())
}
