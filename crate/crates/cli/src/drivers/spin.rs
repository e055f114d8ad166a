//! Spin-system mean-field driver: built-in Curie-Weiss models or matrices
//! loaded from CSV, with an optional exact `log Z` comparison by
//! enumeration.

use anyhow::{anyhow, bail, Context, Result};
use mfld_core::functionals::{spin_condition_check, spin_matrix_from_csv, SpinSystem};
use mfld_core::meanfield::spin_mf_value;
use mfld_core::measures::SiteMeasure;
use mfld_core::validate::exact_log_partition;
use mfld_core::{Functional, ProductMeasure, Real};

use super::mf_config;
use crate::config::Config;
use crate::report::Row;

fn load_matrix(cfg: &Config, key: &str) -> Result<(usize, Vec<Real>)> {
    let path = cfg
        .get_str(key)
        .ok_or_else(|| anyhow!("config key `{key}` is required for model = files"))?;
    let text =
        std::fs::read_to_string(&path).with_context(|| format!("reading matrix file {path}"))?;
    spin_matrix_from_csv(&text).map_err(|e| anyhow!("{path}: {e}"))
}

pub fn run(cfg: &Config) -> Result<(Vec<Row>, bool)> {
    let model = cfg.str_or("model", "curie-weiss");
    let (sys, beta) = match model.as_str() {
        "curie-weiss" => {
            let n = cfg.require_usize("n")?;
            let beta = cfg.require_f64("beta")?;
            (SpinSystem::curie_weiss(n, beta), beta)
        }
        "files" => {
            let (n, a) = load_matrix(cfg, "a.file")?;
            let (d, j) = load_matrix(cfg, "j.file")?;
            let h = cfg.f64_list("h")?.unwrap_or_else(|| vec![0.0; d]);
            let sys = SpinSystem::new(n, d, a, j, h).map_err(|e| anyhow!("{e}"))?;
            (sys, Real::NAN)
        }
        other => bail!("config key `model`: expected curie-weiss or files, got `{other}`"),
    };
    let n = sys.n();
    let d = sys.spin_dim();
    let measure_name = cfg.str_or("measure", "sign");
    let site = match measure_name.as_str() {
        "sign" | "bit" if d != 1 => {
            bail!("measure = {measure_name} needs spin dimension 1, got {d}")
        }
        "sign" => SiteMeasure::uniform_sign(),
        "bit" => SiteMeasure::uniform_bit(),
        "colors" => SiteMeasure::uniform_colors(d).map_err(|e| anyhow!("{e}"))?,
        other => bail!("config key `measure`: expected sign/bit/colors, got `{other}`"),
    };
    let mu = ProductMeasure::iid(site, n).map_err(|e| anyhow!("{e}"))?;
    let mf = mf_config(cfg)?;
    let report = spin_mf_value(&sys, &mu, &mf).map_err(|e| anyhow!("{e}"))?;
    let cond = spin_condition_check(&sys);

    let exact = cfg.bool_or("exact", false)?;
    let (log_z, gap) = if exact {
        let f = Functional::Spin(sys.clone());
        let z = exact_log_partition(&f, &mu).map_err(|e| anyhow!("{e}"))?;
        (z, z - report.best.value)
    } else {
        (Real::NAN, Real::NAN)
    };
    // The mean-field value is a rigorous lower bound on log Z, so a negative
    // gap beyond rounding means something is broken.
    let ok = !exact || gap >= -1e-9 * (1.0 + log_z.abs());

    let mean_moment = (0..n)
        .map(|i| {
            report.best.means.site(i).iter().map(|x| x * x).sum::<Real>().sqrt()
        })
        .sum::<Real>()
        / n as Real;

    let row = Row::new()
        .s("task", "spin-mf")
        .s("model", model)
        .u("n", n as u64)
        .u("spin_dim", d as u64)
        .f("beta", beta)
        .s("measure", measure_name)
        .u("seed", mf.seed)
        .f("value", report.best.value)
        .u("best_restart", report.best_restart as u64)
        .b("converged", report.best.converged)
        .u("iterations", report.best.iterations as u64)
        .f("residual", report.best.residual)
        .f("mean_moment", mean_moment)
        .f("tr_a2_over_n", cond.tr_a2_over_n)
        .f("row_l1_sup_over_n", cond.row_l1_sup_over_n)
        .b("sup_exact", cond.sup_is_exact)
        .b("exact", exact)
        .f("log_z", log_z)
        .f("gap", gap)
        .f("gap_per_site", gap / n as Real);
    Ok((vec![row], ok))
}
