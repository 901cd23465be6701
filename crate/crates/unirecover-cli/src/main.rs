//! Benchmark and certification CLI: exactness certificates, discretization
//! reports, universal recovery runs and the reproducible experiment drivers.
//!
//! `UNIRECOVER_THREADS` caps the worker-thread count of every parallel stage.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use unirecover::bench::{
    self, certified_budget, parse_lattice_spec, DiscretizationConfig, ExperimentConfig,
};
use unirecover::classes::{parse_function_spec, read_samples_file, FunctionSpec};
use unirecover::cubature;
use unirecover::eval::EvalGrid;
use unirecover::lattices::{hammersley_net, write_point_file};
use unirecover::recovery::{
    chebyshev_fit, universal_cheb_recover_sampled, universal_vp_recover_sampled, vs_apply,
    RecoveryResult,
};
use unirecover::torus::enumerate_shapes;

#[derive(Parser)]
#[command(name = "unirecover", version, about = "Universal sampling recovery toolbox")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Lattice cubature certification
    Cubature {
        #[command(subcommand)]
        cmd: CubatureCmd,
    },
    /// Discretization-constant estimation
    Discretize {
        #[command(subcommand)]
        cmd: DiscretizeCmd,
    },
    /// Universal sampling recovery from lattice samples
    Recover(RecoverArgs),
    /// Experiment drivers (config in, CSV/JSON out; exit 1 on failed bounds)
    Bench(BenchArgs),
    /// Point-set utilities
    Lattice {
        #[command(subcommand)]
        cmd: LatticeCmd,
    },
}

#[derive(Subcommand)]
enum CubatureCmd {
    /// Certify the largest cross on which the cubature is exact
    Exactness {
        /// Node count of the rank-1 lattice
        #[arg(long)]
        m: u64,
        /// Generator components, comma separated (reduced modulo m)
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        h: Vec<i64>,
        #[arg(long)]
        d: usize,
        /// Search cap for the cross parameter
        #[arg(long, default_value_t = u64::MAX)]
        nmax: u64,
        /// Output path for the JSON certificate (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum DiscretizeCmd {
    /// Estimate the uniform-norm discretization constant for a collection
    Certify {
        /// Point set: `fib:<n>` or a point-set file path
        #[arg(long)]
        points: String,
        /// Shape-collection budget `n` (all shapes with weight n)
        #[arg(long)]
        n: u32,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 200)]
        probes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 8)]
        oversample: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RecoverArgs {
    /// `fib:<n>` or `korobov:<m>,<h_1>,…,<h_d>`
    #[arg(long)]
    lattice: String,
    /// Function spec (`bernoulli:…`, `trig:<file>`, `trigrand:…`)
    #[arg(long, conflicts_with = "samples")]
    function: Option<String>,
    /// Node samples file (one value per line, node order); the error
    /// surrogate is then evaluated on the nodes themselves
    #[arg(long)]
    samples: Option<PathBuf>,
    /// Selector: `vp` (kernel convolution) or `cheb` (minimax fit)
    #[arg(long)]
    mode: Mode,
    /// Shape budget override (derived from the exactness certificate when omitted)
    #[arg(long)]
    budget: Option<u32>,
    #[arg(long, default_value_t = 8)]
    oversample: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Mode {
    Vp,
    Cheb,
}

#[derive(Args)]
struct BenchArgs {
    /// Experiment kind; must match the config's `kind`
    kind: String,
    /// JSON configuration file
    #[arg(long)]
    config: PathBuf,
    /// Override the config's output path
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum LatticeCmd {
    /// Export a point set (`fib:<n>`, `korobov:…`, `hammersley:<r>` scaled to the torus)
    Export {
        #[arg(long)]
        lattice: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    if let Ok(t) = std::env::var("UNIRECOVER_THREADS") {
        if let Ok(n) = t.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
        }
    }
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.cmd {
        Cmd::Cubature { cmd: CubatureCmd::Exactness { m, h, d, nmax, out } } => {
            if h.len() != d {
                bail!("generator has {} components, expected d = {d}", h.len());
            }
            let hr: Vec<u64> = h.iter().map(|&v| v.rem_euclid(m as i64) as u64).collect();
            let cert = cubature::certify(m, &hr, d, nmax)?;
            emit_json(&serde_json::to_value(&cert)?, out.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Discretize {
            cmd: DiscretizeCmd::Certify { points, n, d, probes, seed, oversample, out },
        } => {
            let cfg = ExperimentConfig::Discretization(DiscretizationConfig {
                points,
                n,
                d,
                probes: Some(probes),
                seed: Some(seed),
                oversample: Some(oversample),
                out: out.as_ref().map(|p| p.display().to_string()),
            });
            let outcome = bench::run(&cfg)?;
            emit_json(&outcome.json, out.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Recover(args) => recover(args),
        Cmd::Bench(args) => run_bench(args),
        Cmd::Lattice { cmd: LatticeCmd::Export { lattice, out } } => {
            let points = if let Some(rest) = lattice.strip_prefix("hammersley:") {
                let r: u32 = rest.parse().context("hammersley resolution")?;
                let net = hammersley_net(r)?;
                net.scale_to_torus().iter().map(|p| p.to_radians()).collect()
            } else {
                parse_lattice_spec(&lattice)?.nodes.points()
            };
            write_point_file(&out, &points)?;
            println!("wrote {} points to {}", points.len(), out.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn recover(args: RecoverArgs) -> anyhow::Result<ExitCode> {
    let lat = parse_lattice_spec(&args.lattice)?;
    let budget = match args.budget {
        Some(b) => b,
        None => {
            let (radius, budget) = certified_budget(&lat)?;
            budget.with_context(|| {
                format!("exactness radius {radius} certifies no shape budget; pass --budget")
            })?
        }
    };
    let shapes = enumerate_shapes(budget, lat.d);
    let node_points = lat.nodes.points();

    let result_json = if let Some(spec_str) = &args.function {
        let spec = parse_function_spec(spec_str)?;
        if matches!(spec, FunctionSpec::Samples(_)) {
            bail!("use --samples for sample files");
        }
        let f = spec.build()?;
        let grid = EvalGrid::for_shapes(lat.d, args.oversample, &shapes)
            .with_extra_points(&node_points);
        let samples = f.eval_points(&node_points);
        let target = f.eval_grid(&grid);
        let res = match args.mode {
            Mode::Vp => {
                universal_vp_recover_sampled(&lat.nodes, &samples, &target, budget, &grid)?
            }
            Mode::Cheb => {
                universal_cheb_recover_sampled(&node_points, &samples, &target, &shapes, &grid)?
            }
        };
        recovery_json(&lat.label, mode_name(args.mode), budget, &res, json!(res.grid))
    } else {
        let samples_path =
            args.samples.as_ref().context("need either --function or --samples")?;
        let samples = read_samples_file(samples_path)?;
        if samples.len() != lat.nodes.len() {
            bail!("{} samples for {} nodes", samples.len(), lat.nodes.len());
        }
        // off-node values are unknown: the sup-norm surrogate runs on the nodes
        let mut per_shape = Vec::new();
        let mut best: Option<(usize, f64)> = None;
        for (i, s) in shapes.iter().enumerate() {
            let error = match args.mode {
                Mode::Vp => {
                    let approx = vs_apply(&lat.nodes, &samples, s, Some(budget))?;
                    node_points
                        .iter()
                        .zip(&samples)
                        .map(|(p, &v)| (approx.eval(p) - v).abs())
                        .fold(0.0f64, f64::max)
                }
                Mode::Cheb => chebyshev_fit(&node_points, &samples, s)?.residual,
            };
            if best.map_or(true, |(_, e)| error < e) {
                best = Some((i, error));
            }
            per_shape.push(json!({ "shape": s.entries(), "error": error }));
        }
        let (bi, berr) = best.expect("nonempty shape collection");
        json!({
            "lattice": lat.label,
            "mode": mode_name(args.mode),
            "budget": budget,
            "chosen_shape": shapes[bi].entries(),
            "winner_error": berr,
            "per_shape_errors": per_shape,
            "grid": "nodes",
        })
    };
    emit_json(&result_json, args.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn mode_name(m: Mode) -> &'static str {
    match m {
        Mode::Vp => "vp",
        Mode::Cheb => "cheb",
    }
}

fn recovery_json(
    lattice: &str,
    mode: &str,
    budget: u32,
    res: &RecoveryResult,
    grid: serde_json::Value,
) -> serde_json::Value {
    json!({
        "lattice": lattice,
        "mode": mode,
        "budget": budget,
        "chosen_shape": res.chosen_shape.entries(),
        "winner_error": res.winner_error,
        "per_shape_errors": res.per_shape_errors.iter().map(|e| {
            json!({ "shape": e.shape.entries(), "error": e.error })
        }).collect::<Vec<_>>(),
        "grid": grid,
    })
}

fn run_bench(args: BenchArgs) -> anyhow::Result<ExitCode> {
    let text = std::fs::read_to_string(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    let cfg: ExperimentConfig = serde_json::from_str(&text).context("parsing config")?;
    let kind = match &cfg {
        ExperimentConfig::Rates(_) => "rates",
        ExperimentConfig::Lebesgue(_) => "lebesgue",
        ExperimentConfig::Universality(_) => "universality",
        ExperimentConfig::Exactness(_) => "exactness",
        ExperimentConfig::Discretization(_) => "discretization",
    };
    if kind != args.kind {
        bail!("config kind '{kind}' does not match subcommand '{}'", args.kind);
    }
    let outcome = bench::run(&cfg)?;
    let out_path = args.out.clone().or_else(|| outcome.out.as_ref().map(PathBuf::from));
    match &out_path {
        Some(path) => {
            std::fs::write(path, &outcome.csv)
                .with_context(|| format!("writing {}", path.display()))?;
            let json_path = path.with_extension("json");
            std::fs::write(&json_path, serde_json::to_string_pretty(&outcome.json)?)?;
            println!("wrote {} and {}", path.display(), json_path.display());
        }
        None => print!("{}", outcome.csv),
    }
    match outcome.all_pass {
        Some(false) => {
            eprintln!("{kind}: some bounded rows FAILED");
            Ok(ExitCode::FAILURE)
        }
        Some(true) => {
            println!("{kind}: all bounded rows pass");
            Ok(ExitCode::SUCCESS)
        }
        None => {
            println!("{kind}: no bounded rows");
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn emit_json(value: &serde_json::Value, out: Option<&Path>) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
            println!("wrote {}", path.display());
        }
        None => println!("{text}"),
    }
    Ok(())
}
