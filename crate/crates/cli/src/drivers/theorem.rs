//! Two-sided error-budget driver: build a small model, run the full
//! experiment pipeline (derivative bounds, cover size, mean field, exact
//! log Z), and report whether the sandwich holds.

use anyhow::{anyhow, bail, Result};
use mfld_core::functionals::SpinSystem;
use mfld_core::measures::SiteMeasure;
use mfld_core::util::{stream_id, StreamPurpose};
use mfld_core::validate::{theorem1_experiment, TheoremConfig};
use mfld_core::{Functional, ProductMeasure, Real, SiteVec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::mf_config;
use crate::config::Config;
use crate::report::Row;

/// Draw a symmetric zero-diagonal coefficient matrix and a linear term with
/// entries uniform in `[-scale, scale]`.
pub(super) fn random_quadratic(n: usize, scale: Real, seed: u64) -> (Vec<Real>, Vec<Real>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(StreamPurpose::Fixture, 0));
    let mut q = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = scale * (2.0 * rng.random::<Real>() - 1.0);
            q[i * n + j] = v;
            q[j * n + i] = v;
        }
    }
    let theta: Vec<Real> = (0..n)
        .map(|_| scale * (2.0 * rng.random::<Real>() - 1.0))
        .collect();
    (q, theta)
}

pub fn run(cfg: &Config) -> Result<(Vec<Row>, bool)> {
    let model = cfg.str_or("model", "quadratic");
    let n = cfg.require_usize("n")?;
    let seed = cfg.u64_or("seed", 1)?;
    let (f, mu, beta) = match model.as_str() {
        "quadratic" => {
            let scale = cfg.f64_or("scale", 0.2)?;
            let (q, theta) = random_quadratic(n, scale, seed);
            let f = Functional::quadratic(q, theta).map_err(|e| anyhow!("{e}"))?;
            let mu = ProductMeasure::iid(SiteMeasure::uniform_bit(), n)
                .map_err(|e| anyhow!("{e}"))?;
            (f, mu, Real::NAN)
        }
        "curie-weiss" => {
            let beta = cfg.require_f64("beta")?;
            let f = Functional::Spin(SpinSystem::curie_weiss(n, beta));
            let mu = ProductMeasure::iid(SiteMeasure::uniform_sign(), n)
                .map_err(|e| anyhow!("{e}"))?;
            (f, mu, beta)
        }
        "linear" => {
            let scale = cfg.f64_or("scale", 0.2)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream_id(StreamPurpose::Fixture, 0));
            let coeffs: Vec<Real> = (0..n)
                .map(|_| scale * (2.0 * rng.random::<Real>() - 1.0))
                .collect();
            let f = Functional::Linear {
                coeffs: SiteVec::from_scalars(&coeffs),
            };
            let mu = ProductMeasure::iid(SiteMeasure::uniform_bit(), n)
                .map_err(|e| anyhow!("{e}"))?;
            (f, mu, Real::NAN)
        }
        other => bail!("config key `model`: expected quadratic/curie-weiss/linear, got `{other}`"),
    };

    let tcfg = TheoremConfig {
        epsilon: cfg.f64_or("epsilon", 0.05)?,
        empirical_samples: cfg.usize_or("empirical_samples", 0)?,
        mf: mf_config(cfg)?,
    };
    if !(tcfg.epsilon > 0.0) {
        bail!("config key `epsilon` must be positive, got {}", tcfg.epsilon);
    }
    let exp = theorem1_experiment(&f, &mu, &tcfg).map_err(|e| anyhow!("{e}"))?;
    let s = &exp.sandwich;
    let ok = s.holds();

    let row = Row::new()
        .s("task", "theorem1")
        .s("model", model)
        .u("n", n as u64)
        .f("beta", beta)
        .u("seed", seed)
        .f("epsilon", exp.epsilon)
        .f("a", exp.bounds.a)
        .f("b1", exp.budget.b1)
        .f("b2", exp.budget.b2)
        .f("log_cover", exp.budget.log_cover_size)
        .f("lower_slack", exp.budget.lower_slack)
        .f("upper_total", exp.budget.upper_total())
        .f("mf_value", s.mf_value)
        .f("log_z", s.log_z)
        .f("lower_bound", s.lower_bound)
        .f("upper_bound", s.upper_bound)
        .f("lower_margin", s.lower_margin)
        .f("upper_margin", s.upper_margin)
        .b("holds", ok);
    Ok((vec![row], ok))
}
