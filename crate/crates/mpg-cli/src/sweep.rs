//! Experiment suites: a named list of (game, run configs) pairs executed
//! concurrently, with per-run CSVs and a JSON summary. Output content is
//! deterministic regardless of the scheduling order.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use mpg_core::dynamics::{run_trajectory, RunConfigFile, RunOutcome};

use crate::output::write_outputs;
use crate::resolve_game;

fn default_threshold() -> f64 {
    0.01
}

fn default_record_every() -> usize {
    10
}

/// On-disk suite schema.
#[derive(Debug, Deserialize)]
pub struct SuiteFile {
    pub out_dir: String,
    /// NE-gap level used for the iterations-to-threshold summary column.
    #[serde(default = "default_threshold")]
    pub gap_threshold: f64,
    /// Recording cadence applied to configs that do not set their own.
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    #[serde(default)]
    pub experiments: Vec<SuiteEntry>,
}

#[derive(Debug, Deserialize)]
pub struct SuiteEntry {
    pub name: String,
    /// Game path or built-in id.
    pub game: String,
    pub configs: Vec<RunConfigFile>,
}

#[derive(Debug, Serialize)]
pub struct RunSummary {
    pub name: String,
    pub csv: String,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_ne_gap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations_to_threshold: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_c_theta: Option<f64>,
    pub rows: usize,
}

#[derive(Debug, Serialize)]
pub struct SweepSummary {
    pub gap_threshold: f64,
    pub runs: Vec<RunSummary>,
}

/// Executes every config of every experiment, up to `parallelism` at a time.
/// Returns the summary and whether all runs completed.
pub fn run_sweep(
    suite: &SuiteFile,
    base: &Path,
    parallelism: usize,
) -> Result<(SweepSummary, bool)> {
    let out_dir = base.join(&suite.out_dir);
    std::fs::create_dir_all(&out_dir)?;

    struct Job {
        name: String,
        game_ref: String,
        config: mpg_core::RunConfig,
        csv: PathBuf,
        policy: PathBuf,
    }

    let mut jobs = Vec::new();
    let mut names = std::collections::HashSet::new();
    for entry in &suite.experiments {
        if !names.insert(entry.name.clone()) {
            bail!("duplicate experiment name: {}", entry.name);
        }
        for (k, file) in entry.configs.iter().enumerate() {
            let init = match file.init_path() {
                None => mpg_core::InitSpec::Uniform,
                Some(path) => {
                    let text = std::fs::read_to_string(base.join(path))
                        .with_context(|| format!("reading initial policy {path}"))?;
                    let params = mpg_core::policy::load_policy::<f64>(&text)?;
                    mpg_core::InitSpec::Theta(params.theta)
                }
            };
            let mut config = file.build(init)?;
            if file.record_every_unset() {
                config.record_every = suite.record_every;
            }
            let name = format!("{}-{k}", entry.name);
            jobs.push(Job {
                csv: out_dir.join(format!("{name}.csv")),
                policy: out_dir.join(format!("{name}_policy.json")),
                name,
                game_ref: file.game.clone().unwrap_or_else(|| entry.game.clone()),
                config,
            });
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .context("building the worker pool")?;
    let results: Vec<RunSummary> = pool.install(|| {
        jobs.par_iter()
            .map(|job| {
                let summary = execute(
                    job.name.clone(),
                    &job.game_ref,
                    &job.config,
                    base,
                    &job.csv,
                    &job.policy,
                    suite.gap_threshold,
                );
                summary.unwrap_or_else(|e| RunSummary {
                    name: job.name.clone(),
                    csv: job.csv.display().to_string(),
                    ok: false,
                    error: Some(format!("{e:#}")),
                    final_ne_gap: None,
                    iterations_to_threshold: None,
                    min_c_theta: None,
                    rows: 0,
                })
            })
            .collect()
    });

    let all_ok = results.iter().all(|r| r.ok);
    let summary = SweepSummary {
        gap_threshold: suite.gap_threshold,
        runs: results,
    };
    std::fs::write(
        out_dir.join("summary.json"),
        serde_json::to_string_pretty(&summary)?,
    )?;
    Ok((summary, all_ok))
}

#[allow(clippy::too_many_arguments)]
fn execute(
    name: String,
    game_ref: &str,
    config: &mpg_core::RunConfig,
    base: &Path,
    csv: &Path,
    policy: &Path,
    threshold: f64,
) -> Result<RunSummary> {
    let game = resolve_game(game_ref, Some(base))?;
    let record = run_trajectory(&game, config)?;
    write_outputs(&game, &record, csv, policy)?;

    let error = match &record.outcome {
        RunOutcome::Completed => None,
        RunOutcome::BlowUp { iteration, detail } => {
            Some(format!("blow-up at iteration {iteration}: {detail}"))
        }
    };
    let final_ne_gap = record.rows.last().map(|r| r.diag.ne_gap_max);
    let iterations_to_threshold = record
        .rows
        .iter()
        .find(|r| r.diag.ne_gap_max <= threshold)
        .map(|r| r.iter);
    let min_c_theta = record
        .rows
        .iter()
        .map(|r| r.diag.c_theta)
        .fold(None, |acc: Option<f64>, c| {
            Some(acc.map_or(c, |m| m.min(c)))
        });
    Ok(RunSummary {
        name,
        csv: csv.display().to_string(),
        ok: error.is_none(),
        error,
        final_ne_gap,
        iterations_to_threshold,
        min_c_theta,
        rows: record.rows.len(),
    })
}
