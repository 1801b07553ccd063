//! `mpg` — exact policy-optimization runs and equilibrium diagnostics for
//! tabular Markov potential games.

mod output;
mod sweep;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use mpg_core::diagnostics::{brute_force_pure_ne, validate_potential_property};
use mpg_core::dynamics::{
    run_trajectory, theory_stepsizes, Algorithm, EtaSpec, RunConfig, RunConfigFile, RunOutcome,
};
use mpg_core::game::{builtin_game, load_game, validate_game, GameSpec};
use mpg_core::InitSpec;

#[derive(Parser)]
#[command(
    name = "mpg",
    about = "Gradient play and natural gradient play on tabular Markov potential games, with exact equilibrium diagnostics",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a game file and, when a potential is present, its potential
    /// property.
    Validate {
        /// Game file path or built-in id (figure1, example3, example8).
        game: String,
    },
    /// Run one configured trajectory; writes a CSV and the final policy.
    Run {
        /// Run-config JSON file.
        config: PathBuf,
        /// Output directory for the CSV and policy files.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Run all four schemes on the built-in matrix game (eta=5,
    /// lambda=0.003, uniform init) and emit one CSV per algorithm.
    Figure1 {
        #[arg(long, default_value = "figure1_out")]
        out: PathBuf,
    },
    /// Enumerate all pure Nash equilibria of a game by brute force.
    #[command(name = "brute-ne")]
    BruteNe {
        /// Game file path or built-in id.
        game: String,
    },
    /// Execute a suite of runs concurrently and write a summary.
    Sweep {
        /// Suite JSON file.
        suite: PathBuf,
        /// Maximum concurrent runs.
        #[arg(long, default_value_t = 1)]
        parallel: usize,
    },
    /// Print the theory-prescribed stepsizes for a game.
    Stepsizes {
        /// Game file path or built-in id.
        game: String,
        #[arg(long, default_value_t = 0.0)]
        lambda: f64,
    },
}

/// Built-in id or file path.
pub fn resolve_game(reference: &str, base: Option<&Path>) -> Result<GameSpec<f64>> {
    if let Some(game) = builtin_game::<f64>(reference) {
        return Ok(game);
    }
    let path = match base {
        Some(base) if !Path::new(reference).is_absolute() => base.join(reference),
        _ => PathBuf::from(reference),
    };
    let text = std::fs::read_to_string(&path)
        .with_context(|| format!("reading game file {}", path.display()))?;
    load_game(&text).with_context(|| format!("loading {}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode> {
    match command {
        Command::Validate { game } => cmd_validate(&game),
        Command::Run { config, out } => cmd_run(&config, &out),
        Command::Figure1 { out } => cmd_figure1(&out),
        Command::BruteNe { game } => cmd_brute_ne(&game),
        Command::Sweep { suite, parallel } => cmd_sweep(&suite, parallel),
        Command::Stepsizes { game, lambda } => cmd_stepsizes(&game, lambda),
    }
}

fn cmd_validate(game_ref: &str) -> Result<ExitCode> {
    let game = resolve_game(game_ref, None)?;
    let report = validate_game(&game);
    println!(
        "game: {} agents, {} states, {} joint actions, gamma = {}",
        game.n_agents,
        game.n_states(),
        game.n_joint_actions(),
        game.gamma
    );
    println!("identical_interest: {}", game.identical_interest);
    for check in &report.checks {
        let mark = if check.passed { "ok " } else { "FAIL" };
        println!("[{mark}] {}: {}", check.name, check.detail);
    }
    match report.m_bound {
        Some(m) => println!("M_bound = {m}"),
        None => println!("M_bound = unbounded (rho not fully supported)"),
    }
    if let Some(dmin) = report.uniform_visitation_min {
        println!("min visitation at the uniform policy = {dmin:.6e}");
    }
    for advice in &report.advice {
        println!("note: {advice}");
    }

    let mut ok = report.all_passed();
    if ok && game.potential.is_some() {
        let pp = validate_potential_property(&game, 50, 0)?;
        let mark = if pp.passed { "ok " } else { "FAIL" };
        println!(
            "[{mark}] potential_property: {} checks, max violation {:.3e}",
            pp.checks_run, pp.max_violation
        );
        ok &= pp.passed;
    }
    Ok(if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn cmd_run(config_path: &Path, out: &Path) -> Result<ExitCode> {
    let text = std::fs::read_to_string(config_path)
        .with_context(|| format!("reading config {}", config_path.display()))?;
    let file = RunConfigFile::parse(&text)?;
    let base = config_path.parent().unwrap_or(Path::new("."));
    let game_ref = file
        .game
        .clone()
        .ok_or_else(|| anyhow::anyhow!("run config must name a game"))?;
    let game = resolve_game(&game_ref, Some(base))?;
    let init = match file.init_path() {
        None => InitSpec::Uniform,
        Some(path) => {
            let text = std::fs::read_to_string(base.join(path))
                .with_context(|| format!("reading initial policy {path}"))?;
            InitSpec::Theta(mpg_core::policy::load_policy::<f64>(&text)?.theta)
        }
    };
    let config = file.build(init)?;

    let stem = config_path
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "run".into());
    let csv_path = out.join(format!("{stem}.csv"));
    let policy_path = out.join(format!("{stem}_policy.json"));

    let record = run_trajectory(&game, &config)?;
    output::write_outputs(&game, &record, &csv_path, &policy_path)?;
    print_run_tail(&record);
    println!("trajectory: {}", csv_path.display());
    println!("final policy: {}", policy_path.display());
    match &record.outcome {
        RunOutcome::Completed => Ok(ExitCode::SUCCESS),
        RunOutcome::BlowUp { iteration, detail } => {
            eprintln!("run aborted at iteration {iteration}: {detail} (partial trajectory kept)");
            Ok(ExitCode::FAILURE)
        }
    }
}

fn print_run_tail(record: &mpg_core::TrajectoryRecord64) {
    if let Some(last) = record.rows.last() {
        println!(
            "iterations recorded: {} (eta = {}); final: phi = {:.6}, ne_gap = {:.6e}, c = {:.6}, grad = {:.3e}",
            record.rows.len(),
            record.eta_used,
            last.diag.phi,
            last.diag.ne_gap_max,
            last.diag.c_theta,
            last.diag.grad_norm
        );
    }
}

fn cmd_figure1(out: &Path) -> Result<ExitCode> {
    let game = mpg_core::game::figure1_game::<f64>();
    let runs: [(&str, Algorithm, usize); 4] = [
        ("gp", Algorithm::Gp, 20_000),
        ("npg", Algorithm::Npg, 2_000),
        ("gp_logbar", Algorithm::GpLogBarrier, 2_000),
        ("npg_logbar", Algorithm::NpgLogBarrier, 2_000),
    ];
    let mut failed = false;
    for (name, algorithm, iterations) in runs {
        let mut config = RunConfig::new(algorithm, EtaSpec::Value(5.0), iterations);
        if matches!(
            algorithm,
            Algorithm::GpLogBarrier | Algorithm::NpgLogBarrier
        ) {
            config.lambda = 0.003;
        }
        let record = run_trajectory(&game, &config)?;
        let csv_path = out.join(format!("{name}.csv"));
        let policy_path = out.join(format!("{name}_policy.json"));
        output::write_outputs(&game, &record, &csv_path, &policy_path)?;
        let last = record.rows.last().expect("at least the initial row");
        println!(
            "{name}: T={iterations}, final ne_gap = {:.6e}, c = {:.6}, phi = {:.6} -> {}",
            last.diag.ne_gap_max,
            last.diag.c_theta,
            last.diag.phi,
            csv_path.display()
        );
        if let RunOutcome::BlowUp { iteration, detail } = &record.outcome {
            eprintln!("{name}: aborted at iteration {iteration}: {detail}");
            failed = true;
        }
    }
    Ok(if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    })
}

fn cmd_brute_ne(game_ref: &str) -> Result<ExitCode> {
    let game = resolve_game(game_ref, None)?;
    let nes = brute_force_pure_ne(&game)?;
    if nes.is_empty() {
        println!("no pure Nash equilibrium");
    }
    for (k, ne) in nes.iter().enumerate() {
        println!("pure NE {}:", k + 1);
        for (i, per_state) in ne.actions.iter().enumerate() {
            let actions: Vec<&str> = per_state
                .iter()
                .enumerate()
                .map(|(s, &a)| {
                    let _ = s;
                    game.actions[i][a].as_str()
                })
                .collect();
            println!("  agent {} -> {}", i + 1, actions.join(", "));
        }
        let values: Vec<String> = ne.values.iter().map(|v| format!("{v:.6}")).collect();
        println!("  values: [{}]", values.join(", "));
    }
    println!("{}", serde_json::to_string_pretty(&nes)?);
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(suite_path: &Path, parallel: usize) -> Result<ExitCode> {
    let text = std::fs::read_to_string(suite_path)
        .with_context(|| format!("reading suite {}", suite_path.display()))?;
    let suite: sweep::SuiteFile = serde_json::from_str(&text)?;
    if suite.experiments.is_empty() {
        let base = suite_path.parent().unwrap_or(Path::new("."));
        let (summary, _) = sweep::run_sweep(&suite, base, parallel)?;
        println!("{}", serde_json::to_string_pretty(&summary)?);
        return Ok(ExitCode::SUCCESS);
    }
    let base = suite_path.parent().unwrap_or(Path::new("."));
    let (summary, all_ok) = sweep::run_sweep(&suite, base, parallel)?;
    for run in &summary.runs {
        let status = if run.ok { "ok" } else { "FAILED" };
        println!(
            "{}: {status}, rows = {}, final gap = {:?}, min c = {:?}",
            run.name, run.rows, run.final_ne_gap, run.min_c_theta
        );
        if let Some(err) = &run.error {
            eprintln!("  {err}");
        }
    }
    Ok(if all_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn cmd_stepsizes(game_ref: &str, lambda: f64) -> Result<ExitCode> {
    let game = resolve_game(game_ref, None)?;
    if game.potential.is_none() {
        bail!("stepsizes need a potential; the game has none");
    }
    let report = theory_stepsizes(&game, lambda, None)?;
    println!("phi range: [{}, {}]", report.phi_min, report.phi_max);
    println!(
        "smoothness beta = {}, regularized beta = {}",
        report.beta, report.beta_reg
    );
    match report.m_used {
        Some(m) => println!("exploration bound M = {m}"),
        None => println!("exploration bound M: unavailable (rho not fully supported)"),
    }
    println!("eta gp         = {}", report.eta_gp);
    match report.eta_npg {
        Some(eta) => println!("eta npg        = {eta}"),
        None => println!("eta npg        = unconstrained (constant potential)"),
    }
    println!("eta gp-logbar  = {}", report.eta_gp_logbar);
    match report.eta_npg_logbar {
        Some(eta) => println!("eta npg-logbar = {eta}"),
        None => println!("eta npg-logbar = unavailable (no exploration bound)"),
    }
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(ExitCode::SUCCESS)
}
