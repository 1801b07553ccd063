//! Trajectory CSV and policy-file emission.
//!
//! CSV schema (stable): `iter,phi,phi_reg,grad_norm,ne_gap_max,
//! ne_gap_1..n,c_theta,m_theta,min_pi`, one row per recorded iteration.
//! Identical runs produce byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use mpg_core::game::GameSpec;
use mpg_core::TrajectoryRecord64;

pub fn csv_header(n_agents: usize) -> String {
    let mut header = String::from("iter,phi,phi_reg,grad_norm,ne_gap_max");
    for i in 1..=n_agents {
        write!(header, ",ne_gap_{i}").unwrap();
    }
    header.push_str(",c_theta,m_theta,min_pi");
    header
}

pub fn trajectory_csv(record: &TrajectoryRecord64, n_agents: usize) -> String {
    // scientific notation round-trips f64 exactly and keeps denormal-range
    // values (long-run gradient norms, policy minima) readable
    let mut out = csv_header(n_agents);
    out.push('\n');
    for row in &record.rows {
        let d = &row.diag;
        write!(
            out,
            "{},{:e},{:e},{:e},{:e}",
            row.iter, d.phi, d.phi_reg, d.grad_norm, d.ne_gap_max
        )
        .unwrap();
        for gap in &d.ne_gap_per_agent {
            write!(out, ",{gap:e}").unwrap();
        }
        write!(
            out,
            ",{:e},{:e},{:e}",
            d.c_theta, d.m_theta, d.min_policy_entry
        )
        .unwrap();
        out.push('\n');
    }
    out
}

pub fn write_outputs(
    game: &GameSpec<f64>,
    record: &TrajectoryRecord64,
    csv_path: &Path,
    policy_path: &Path,
) -> Result<()> {
    if let Some(dir) = csv_path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(csv_path, trajectory_csv(record, game.n_agents))
        .with_context(|| format!("writing {}", csv_path.display()))?;
    std::fs::write(
        policy_path,
        mpg_core::policy::save_policy(game, &record.final_params),
    )
    .with_context(|| format!("writing {}", policy_path.display()))?;
    Ok(())
}
