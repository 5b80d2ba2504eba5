use clap::{Args, Parser, Subcommand};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use swipt_cli::config::{read_config, CliError, ExperimentConfig, ExperimentSection, Result, SweepKind, DESK_GRID_POINTS};
use swipt_cli::{run, thread_cap, EXIT_ALL_INFEASIBLE};
use swipt_core::{build_p4, design, generate_channels_indexed, verify_robust_design, BetaGrid, DesignOutcome, DesignSettings, SystemParams};

#[derive(Parser)]
#[command(name = "swipt", version, about = "Robust AN-aided beamforming and power splitting for cognitive SWIPT networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Debug)]
struct Common {
    /// JSON config with unit-suffixed system keys and an optional "experiment" object
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    realizations: Option<usize>,
    /// Spacing of the beta grid; the default is 50 evenly spaced points
    #[arg(long)]
    grid_step: Option<f64>,
    /// Full simulation scale (1000 realizations, Nt in {10, 15, 20}); slow
    #[arg(long)]
    paper_preset: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Designs one channel realization and prints the outcome as JSON
    Design {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        realization: u64,
        /// Golden-section polish of beta around the best grid point
        #[arg(long)]
        refine: bool,
        /// Writes the conic program at the chosen beta in sparse text form
        #[arg(long)]
        dump_problem: Option<PathBuf>,
    },
    /// Evaluates a saved design against the worst-case channel errors
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        realization: u64,
        /// DesignOutcome JSON written by `design`
        #[arg(long)]
        design: PathBuf,
    },
    /// Robust versus perfect-CSI objective distribution
    Cdf(Common),
    /// Objective versus the secrecy-rate target
    RminSweep(Common),
    /// Objective and feasibility versus the number of EHRs
    KSweep(Common),
    /// Runs the built-in conic solver regression suite
    SolverSelftest {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(io_err(p)),
        None => match writeln!(std::io::stdout().lock(), "{text}") {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::Io { path: PathBuf::from("<stdout>"), source: e }),
            _ => Ok(()),
        },
    }
}

fn warn_full_scale(common: &Common) {
    if common.paper_preset {
        eprintln!("warning: --paper-preset runs the full-scale protocol and can take many hours");
    }
}

/// Parameters and experiment section from `--config`, or the simulation preset.
fn base(common: &Common) -> Result<(SystemParams, ExperimentSection)> {
    match &common.config {
        Some(path) => {
            let c = read_config(path)?;
            Ok((c.params, c.experiment))
        }
        None => {
            let nt = if common.paper_preset { swipt_cli::config::FULL_NT[0] } else { 6 };
            Ok((SystemParams::simulation_preset(nt, 1.5), ExperimentSection::default()))
        }
    }
}

fn grid(common: &Common, section: &ExperimentSection) -> Result<BetaGrid> {
    let g = match (common.grid_step, section.grid_step, section.grid_points) {
        (Some(s), _, _) | (None, Some(s), _) => BetaGrid::Step(s),
        (None, None, Some(n)) => BetaGrid::Points(n),
        (None, None, None) => BetaGrid::Points(DESK_GRID_POINTS),
    };
    match g {
        BetaGrid::Step(s) if !(s.is_finite() && s > 0.0) => Err(CliError::Config("grid step must be positive".into())),
        BetaGrid::Points(0) => Err(CliError::Config("grid_points must be at least 1".into())),
        g => Ok(g),
    }
}

fn cmd_design(common: &Common, realization: u64, refine: bool, dump: Option<&Path>) -> Result<i32> {
    warn_full_scale(common);
    let (params, section) = base(common)?;
    let seed = common.seed.or(section.seed).unwrap_or(1);
    let settings = DesignSettings { grid: grid(common, &section)?, refine, ..DesignSettings::default() };
    let channels = generate_channels_indexed(&params, seed, realization);
    let outcome = design(&params, &channels, &settings)?;
    emit(&serde_json::to_string_pretty(&outcome)?, common.out.as_deref())?;
    if let (Some(path), Some(beta)) = (dump, outcome.beta_opt) {
        let p4 = build_p4(&params, &channels, beta, settings.eps_t)?;
        std::fs::write(path, p4.problem.to_sparse_text()).map_err(io_err(path))?;
    }
    Ok(if outcome.feasible { 0 } else { EXIT_ALL_INFEASIBLE })
}

fn cmd_verify(common: &Common, realization: u64, design_path: &Path) -> Result<i32> {
    let (params, section) = base(common)?;
    let seed = common.seed.or(section.seed).unwrap_or(1);
    let text = std::fs::read_to_string(design_path).map_err(io_err(design_path))?;
    let outcome: DesignOutcome = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", design_path.display())))?;
    let (Some(d), Some(beta)) = (outcome.design, outcome.beta_opt) else {
        eprintln!("design file holds no feasible design");
        return Ok(EXIT_ALL_INFEASIBLE);
    };
    let channels = generate_channels_indexed(&params, seed, realization);
    let report = verify_robust_design(&d, &channels, &params, beta)?;
    emit(&serde_json::to_string_pretty(&report)?, common.out.as_deref())?;
    Ok(0)
}

fn cmd_experiment(common: &Common, kind: SweepKind) -> Result<i32> {
    warn_full_scale(common);
    let (params, section) = base(common)?;
    let mut config = ExperimentConfig::new(kind, params, common.paper_preset);
    config.apply(&section)?;
    if let Some(s) = common.seed {
        config.seed = s;
    }
    if let Some(n) = common.realizations {
        config.num_realizations = n;
    }
    if common.grid_step.is_some() {
        config.grid = grid(common, &section)?;
    }
    if let Some(p) = &common.out {
        config.output_path = p.clone();
    }
    config.validate()?;
    let out = run(&config)?;
    for path in out.write(&config.output_path)? {
        eprintln!("wrote {}", path.display());
    }
    for s in &out.summary {
        let mean = s.mean_tau_opt_w.map_or("-".to_string(), |m| format!("{m:.6}"));
        eprintln!(
            "nt={} k={} r_min={} {:?}: feasible {}/{} mean tau_opt {} W",
            s.nt, s.k, s.r_min, s.xi_profile, s.feasible, s.realizations, mean
        );
    }
    Ok(if out.all_infeasible() { EXIT_ALL_INFEASIBLE } else { 0 })
}

fn cmd_selftest(out: Option<&Path>) -> Result<i32> {
    let report = swipt_conic::self_test();
    emit(&serde_json::to_string_pretty(&report)?, out)?;
    Ok(if report.passed { 0 } else { 1 })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = thread_cap().and_then(|cap| {
        if let Some(n) = cap {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| CliError::Config(e.to_string()))?;
        }
        match &cli.command {
            Command::Design { common, realization, refine, dump_problem } => {
                cmd_design(common, *realization, *refine, dump_problem.as_deref())
            }
            Command::Verify { common, realization, design } => cmd_verify(common, *realization, design),
            Command::Cdf(c) => cmd_experiment(c, SweepKind::Cdf),
            Command::RminSweep(c) => cmd_experiment(c, SweepKind::RminSweep),
            Command::KSweep(c) => cmd_experiment(c, SweepKind::KSweep),
            Command::SolverSelftest { out } => cmd_selftest(out.as_deref()),
        }
    });
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
