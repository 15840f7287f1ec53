//! `lbmoments` command-line front end.
//!
//! Exit codes: 0 pass, 1 verification/comparison failure, 2 usage or
//! configuration error.

mod export;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use lbmoments::config::SimulationConfig;
use lbmoments::moment_conditions::generate_conditions;
use lbmoments::shock_tube::ShockTube;
use lbmoments::snapshot::{to_csv, REFERENCE_HEADER, SNAPSHOT_HEADER};
use lbmoments::stencil::{parse_directions, solve_model, verify_model, SolveOptions, VelocityModel, PUBLISHED_TOLERANCE};
use lbmoments::Execution;

#[derive(Parser, Debug)]
#[command(name = "lbmoments", version, about = "Moment-matching lattice Boltzmann models and shock-tube runs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Writes the even-moment isotropy conditions for a dimension and order.
    Equations {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        order: u32,
        /// Output file; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Checks a velocity model against the moment conditions.
    Verify {
        /// Built-in name (D2Q33, D3Q95, D2Q33-table, D3Q95-table) or a model file.
        #[arg(long)]
        model: String,
        #[arg(long, default_value_t = 4)]
        order: u32,
        #[arg(long, default_value_t = PUBLISHED_TOLERANCE)]
        tolerance: f64,
    },
    /// Solves for the lattice scale and weights of a direction set.
    #[command(name = "solve-model", alias = "solve")]
    SolveModel(SolveArgs),
    /// Runs a shock tube and compares it with the exact Riemann solution.
    ShockTube(ShockTubeArgs),
    /// Converts a snapshot CSV into two-column plot data.
    Export {
        #[arg(long)]
        snapshot: PathBuf,
        /// Exact-solution CSV to join against the snapshot.
        #[arg(long)]
        oracle: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Debug)]
struct SolveArgs {
    /// One representative per line, or a model file whose groups are reused.
    #[arg(long)]
    directions: PathBuf,
    #[arg(long, default_value_t = 4)]
    order: u32,
    #[arg(long)]
    c_min: f64,
    #[arg(long)]
    c_max: f64,
    #[arg(long, default_value_t = 2000)]
    grid: usize,
    #[arg(long, default_value_t = 1e-10)]
    tolerance: f64,
    #[arg(long)]
    name: Option<String>,
    /// Output model file; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ShockTubeArgs {
    /// TOML config; built-in defaults if omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    omega: Option<f64>,
    /// Output directory (overrides output.dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Plateau tolerance (overrides output.tolerance).
    #[arg(long)]
    tolerance: Option<f64>,
    /// Snapshot interval in steps (overrides output.every).
    #[arg(long)]
    every: Option<usize>,
    /// Use the 11×11 cross-section instead of the reduced 2×2 one.
    #[arg(long)]
    full_cross_section: bool,
    #[arg(long)]
    sequential: bool,
}

#[derive(Serialize)]
struct RunManifest<C: Serialize> {
    command: String,
    version: String,
    config: C,
    outputs: Vec<String>,
    pass: bool,
}

const MANIFEST: &str = "manifest.json";

fn write_manifest<C: Serialize>(dir: &Path, command: &str, config: C, mut outputs: Vec<String>, pass: bool) -> Result<()> {
    outputs.push(MANIFEST.into());
    let manifest = RunManifest {
        command: command.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config,
        outputs,
        pass,
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(dir.join(MANIFEST), text).with_context(|| format!("writing {}", dir.join(MANIFEST).display()))
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_model(spec: &str) -> Result<VelocityModel> {
    if let Some(m) = VelocityModel::builtin(spec) {
        return Ok(m);
    }
    let text = fs::read_to_string(spec).with_context(|| {
        format!("`{spec}` is neither a built-in model ({}) nor a readable file", VelocityModel::BUILTIN_NAMES.join(", "))
    })?;
    Ok(text.parse::<VelocityModel>().with_context(|| format!("parsing model file {spec}"))?)
}

fn cmd_equations(dim: usize, order: u32, out: Option<&Path>) -> Result<bool> {
    let set = generate_conditions(dim, order)?;
    write_or_print(out, &set.to_text())?;
    Ok(true)
}

fn cmd_verify(model: &str, order: u32, tolerance: f64) -> Result<bool> {
    let model = load_model(model)?;
    let report = verify_model(&model, order, tolerance)?;
    print!("{report}");
    Ok(report.pass())
}

fn cmd_solve(args: &SolveArgs) -> Result<bool> {
    let text = fs::read_to_string(&args.directions).with_context(|| format!("reading {}", args.directions.display()))?;
    let directions = match text.parse::<VelocityModel>() {
        Ok(m) => m.directions(),
        Err(_) => parse_directions(&text)?,
    };
    let dim = directions.first().map(Vec::len).unwrap_or(0);
    let conditions = generate_conditions(dim, args.order)?;
    let opts = SolveOptions {
        grid_points: args.grid,
        residual_tolerance: args.tolerance,
        ..SolveOptions::default()
    };
    let sol = match solve_model(&directions, &conditions, (args.c_min, args.c_max), &opts) {
        Ok(s) => s,
        Err(e @ lbmoments::Error::NoSolution { .. }) => {
            eprintln!("{e}");
            return Ok(false);
        }
        Err(e) => return Err(e.into()),
    };
    let model = match &args.name {
        Some(n) => sol.model.with_name(n.clone()),
        None => sol.model,
    };
    eprintln!(
        "{}: c = {} residual {:e}{}",
        model.name,
        model.c,
        sol.residual_norm,
        if sol.negative_weights.is_empty() {
            String::new()
        } else {
            format!(", negative weights in groups {:?}", sol.negative_weights)
        }
    );
    write_or_print(args.out.as_deref(), &model.to_text())?;
    Ok(true)
}

fn shock_tube_config(args: &ShockTubeArgs) -> Result<SimulationConfig> {
    let mut cfg = match &args.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            SimulationConfig::from_toml_str(&text)?
        }
        None if args.full_cross_section => SimulationConfig::full_cross_section(),
        None => SimulationConfig::default(),
    };
    if args.full_cross_section && args.config.is_some() {
        bail!("--full-cross-section only applies without --config");
    }
    if let Some(s) = args.steps {
        cfg.steps = Some(s);
    }
    if let Some(w) = args.omega {
        cfg.omega = w;
    }
    if let Some(d) = &args.out {
        cfg.output.dir = d.to_string_lossy().into_owned();
    }
    if let Some(t) = args.tolerance {
        cfg.output.tolerance = t;
    }
    if let Some(e) = args.every {
        cfg.output.every = e;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_shock_tube(args: &ShockTubeArgs) -> Result<bool> {
    let cfg = shock_tube_config(args)?;
    let execution = if args.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    let dir = PathBuf::from(&cfg.output.dir);
    let mut tube = ShockTube::new(cfg, execution)?;
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;

    let resolved = tube.resolved_config();
    let mut outputs = vec!["config.toml".to_string()];
    fs::write(dir.join("config.toml"), resolved.to_toml_string()?)?;

    let mut io_error = None;
    tube.run(|rows| {
        let name = format!("snapshot_{:06}.csv", rows.first().map(|r| r.step).unwrap_or(0));
        if let Err(e) = fs::write(dir.join(&name), to_csv(SNAPSHOT_HEADER, rows)) {
            io_error.get_or_insert(e);
        }
        outputs.push(name);
        Ok(())
    })?;
    if let Some(e) = io_error {
        return Err(e).context("writing snapshot");
    }

    fs::write(dir.join("reference.csv"), to_csv(REFERENCE_HEADER, &tube.reference_rows()?))?;
    outputs.push("reference.csv".into());

    let report = tube.compare(resolved.output.tolerance)?;
    let text = format!("{} {} steps\n{report}", tube.model().name, tube.steps());
    fs::write(dir.join("report.txt"), &text)?;
    outputs.push("report.txt".into());
    print!("{text}");

    write_manifest(&dir, "shock-tube", &resolved, outputs, report.pass())?;
    Ok(report.pass())
}

fn cmd_export(snapshot: &Path, oracle: Option<&Path>, out: &Path) -> Result<bool> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let outputs = export::export(snapshot, oracle, out)?;
    #[derive(Serialize)]
    struct ExportConfig {
        snapshot: String,
        oracle: Option<String>,
    }
    let config = ExportConfig {
        snapshot: snapshot.display().to_string(),
        oracle: oracle.map(|p| p.display().to_string()),
    };
    write_manifest(out, "export", config, outputs, true)?;
    Ok(true)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Equations { dim, order, out } => cmd_equations(dim, order, out.as_deref()),
        Command::Verify { model, order, tolerance } => cmd_verify(&model, order, tolerance),
        Command::SolveModel(args) => cmd_solve(&args),
        Command::ShockTube(args) => cmd_shock_tube(&args),
        Command::Export { snapshot, oracle, out } => cmd_export(&snapshot, oracle.as_deref(), &out),
    }
}

/// Numerical breakdowns count as failures; anything else is a usage or
/// configuration problem.
fn exit_code_for(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<lbmoments::Error>() {
        Some(lbmoments::Error::Diverged { .. } | lbmoments::Error::Vacuum(_) | lbmoments::Error::NoSolution { .. }) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
