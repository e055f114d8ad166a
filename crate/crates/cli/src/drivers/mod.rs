//! Task drivers: each turns a resolved config into output rows plus a
//! success flag (`false` exits 1: a check failed or no bound was
//! established).

mod mctail;
mod rate;
mod spin;
mod suite;
mod theorem;

use anyhow::{bail, Result};
use mfld_core::meanfield::MFConfig;

use crate::config::Config;
use crate::report::Row;

/// Expands the sweep (if any) and runs the task once per effective config,
/// concatenating rows in sweep order.
pub fn dispatch(task: &str, cfg: &Config) -> Result<(Vec<Row>, bool)> {
    let sweep = match (cfg.get_str("sweep.param"), cfg.str_list("sweep.values")) {
        (None, None) => None,
        (Some(param), Some(values)) => {
            if values.is_empty() || values.iter().any(|v| v.is_empty()) {
                bail!("sweep.values must be a non-empty comma-separated list");
            }
            Some((param, values))
        }
        (Some(_), None) => bail!("sweep.param requires sweep.values"),
        (None, Some(_)) => bail!("sweep.values requires sweep.param"),
    };
    let mut rows = Vec::new();
    let mut ok = true;
    match sweep {
        None => run_one(task, cfg, &mut rows, &mut ok)?,
        Some((param, values)) => {
            if crate::config::MANIFEST_EXCLUDED.contains(&param.as_str())
                || param == "task"
                || param.starts_with("sweep.")
            {
                bail!("config key `{param}` cannot be swept");
            }
            for value in values {
                let mut sub = cfg.clone();
                sub.set(&param, value);
                run_one(task, &sub, &mut rows, &mut ok)?;
            }
        }
    }
    Ok((rows, ok))
}

fn run_one(task: &str, cfg: &Config, rows: &mut Vec<Row>, ok: &mut bool) -> Result<()> {
    let (mut new_rows, this_ok) = match task {
        "rate-triangle" => rate::run_triangle(cfg)?,
        "rate-simplex" => rate::run_simplex(cfg)?,
        "spin-mf" => spin::run(cfg)?,
        "theorem1" => theorem::run(cfg)?,
        "mc-tail" => mctail::run(cfg)?,
        "validate-suite" => suite::run(cfg)?,
        other => bail!("unknown task `{other}`"),
    };
    cfg.check_unknown()?;
    rows.append(&mut new_rows);
    *ok &= this_ok;
    Ok(())
}

/// Solver settings from the `solver.*` keys, seeded by the resolved master
/// seed.
pub fn mf_config(cfg: &Config) -> Result<MFConfig> {
    let d = MFConfig::default();
    Ok(MFConfig {
        damping: cfg.f64_or("solver.damping", d.damping)?,
        tol: cfg.f64_or("solver.tol", d.tol)?,
        max_iter: cfg.usize_or("solver.max_iter", d.max_iter)?,
        restarts: cfg.usize_or("solver.restarts", d.restarts)?,
        step: cfg.f64_or("solver.step", d.step)?,
        inner_iters: cfg.usize_or("solver.inner_iters", d.inner_iters)?,
        penalty_initial: cfg.f64_or("solver.penalty_initial", d.penalty_initial)?,
        penalty_growth: cfg.f64_or("solver.penalty_growth", d.penalty_growth)?,
        penalty_rounds: cfg.usize_or("solver.penalty_rounds", d.penalty_rounds)?,
        seed: cfg.u64_or("seed", 1)?,
    })
}
