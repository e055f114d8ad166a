//! Rate-function drivers: triangle counts over continuous edge weights and
//! colored homomorphism counts over edge color distributions.

use anyhow::{anyhow, bail, Context, Result};
use mfld_core::functionals::PatternGraph;
use mfld_core::meanfield::{rate_function_simplex, rate_function_triangle};

use super::mf_config;
use crate::config::Config;
use crate::report::Row;

pub fn run_triangle(cfg: &Config) -> Result<(Vec<Row>, bool)> {
    let n = cfg.require_usize("n")?;
    let u = cfg.require_f64("u")?;
    let mf = mf_config(cfg)?;
    let res = rate_function_triangle(n, u, &mf).map_err(|e| anyhow!("{e}"))?;
    let row = Row::new()
        .s("task", "rate-triangle")
        .u("n", n as u64)
        .f("u", u)
        .u("seed", mf.seed)
        .f("value", res.value)
        .f("ansatz_value", res.ansatz_value)
        .b("feasible", res.feasible)
        .f("attained", res.attained)
        .f("target", res.constraint_target)
        .f("violation", res.constraint_violation)
        .u("iterations", res.iterations as u64)
        .u("restarts", res.restarts_used as u64)
        .f("boundary_distance", res.boundary_distance);
    Ok((vec![row], res.feasible))
}

fn pattern_from(cfg: &Config) -> Result<(PatternGraph, String)> {
    if let Some(path) = cfg.get_str("pattern.file") {
        let text = std::fs::read_to_string(&path)
            .with_context(|| format!("reading pattern file {path}"))?;
        let h = PatternGraph::from_text(&text).map_err(|e| anyhow!("{path}: {e}"))?;
        return Ok((h, format!("file:{path}")));
    }
    let name = cfg.str_or("pattern", "triangle");
    let h = match name.as_str() {
        "triangle" => PatternGraph::triangle(),
        "edge" => PatternGraph::single_edge(),
        s if s.starts_with("path") => {
            let k: usize = s[4..]
                .parse()
                .map_err(|_| anyhow!("config key `pattern`: expected path<k>, got `{s}`"))?;
            PatternGraph::path(k).map_err(|e| anyhow!("{e}"))?
        }
        s if s.starts_with("cycle") => {
            let k: usize = s[5..]
                .parse()
                .map_err(|_| anyhow!("config key `pattern`: expected cycle<k>, got `{s}`"))?;
            PatternGraph::cycle(k).map_err(|e| anyhow!("{e}"))?
        }
        other => bail!(
            "config key `pattern`: expected triangle/edge/path<k>/cycle<k> \
             (or set pattern.file), got `{other}`"
        ),
    };
    Ok((h, name))
}

pub fn run_simplex(cfg: &Config) -> Result<(Vec<Row>, bool)> {
    let n = cfg.require_usize("n")?;
    let l = cfg.require_usize("l")?;
    let u = cfg.require_f64("u")?;
    let (h, pattern_name) = pattern_from(cfg)?;
    let mf = mf_config(cfg)?;
    let res = rate_function_simplex(&h, n, l, u, &mf).map_err(|e| anyhow!("{e}"))?;
    let row = Row::new()
        .s("task", "rate-simplex")
        .s("pattern", pattern_name)
        .u("n", n as u64)
        .u("l", l as u64)
        .f("u", u)
        .u("seed", mf.seed)
        .f("value", res.value)
        .f("ansatz_value", res.ansatz_value)
        .b("feasible", res.feasible)
        .f("attained", res.attained)
        .f("target", res.constraint_target)
        .f("violation", res.constraint_violation)
        .u("iterations", res.iterations as u64)
        .u("restarts", res.restarts_used as u64)
        .f("boundary_distance", res.boundary_distance);
    Ok((vec![row], res.feasible))
}
