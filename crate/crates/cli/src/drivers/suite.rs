//! Deterministic cross-check suite: small fixed instances where every
//! quantity has an independent closed form or enumeration oracle.  Each
//! check prints one PASS/FAIL line and contributes one output row.

use anyhow::{anyhow, Result};
use mfld_core::bounds::error_budget;
use mfld_core::functionals::{spin_condition_check, FunctionalBounds, PatternGraph, SpinSystem};
use mfld_core::meanfield::{rate_function_simplex, rate_function_triangle, MFConfig};
use mfld_core::measures::{
    kl_truncexp, lambda_for_mean, mean_from_lambda, SiteMeasure,
};
use mfld_core::validate::{
    exact_log_partition, gibbs_identity_check, quadrature_kl_truncexp,
    quadrature_mean_truncexp, theorem1_experiment, TheoremConfig,
};
use mfld_core::{Functional, LinearTilt, ProductMeasure, Real, SiteVec};

use super::{mf_config, theorem::random_quadratic};
use crate::config::Config;
use crate::report::Row;

type Check = (&'static str, fn(&MFConfig) -> Result<(bool, String)>);

fn bits(n: usize) -> Result<ProductMeasure> {
    ProductMeasure::iid(SiteMeasure::uniform_bit(), n).map_err(|e| anyhow!("{e}"))
}

/// Variational identity at the Gibbs measure itself: the gap must vanish to
/// rounding on several random quadratics.
fn check_gibbs(_mf: &MFConfig) -> Result<(bool, String)> {
    let n = 6;
    let mu = bits(n)?;
    let mut worst: Real = 0.0;
    for k in 0..5 {
        let (q, theta) = random_quadratic(n, 0.4, 100 + k);
        let f = Functional::quadratic(q, theta).map_err(|e| anyhow!("{e}"))?;
        let g = gibbs_identity_check(&f, &mu).map_err(|e| anyhow!("{e}"))?;
        let rel = g.gap.abs() / (1.0 + g.log_z.abs());
        worst = worst.max(rel);
    }
    Ok((worst <= 1e-12, format!("worst relative gap {worst:.3e}")))
}

/// Linear functionals on uniform bits factorize:
/// `log Z = sum_i log((1 + e^{c_i}) / 2)`.
fn check_linear(_mf: &MFConfig) -> Result<(bool, String)> {
    let n = 8;
    let coeffs: Vec<Real> = (0..n).map(|i| 0.3 * (i as Real) - 1.1).collect();
    let expect: Real = coeffs
        .iter()
        .map(|c| ((1.0 + c.exp()) / 2.0).ln())
        .sum();
    let f = Functional::Linear {
        coeffs: SiteVec::from_scalars(&coeffs),
    };
    let z = exact_log_partition(&f, &bits(n)?).map_err(|e| anyhow!("{e}"))?;
    let err = (z - expect).abs();
    Ok((err <= 1e-12, format!("|enumerated - closed form| = {err:.3e}")))
}

/// `lambda_for_mean` inverts `mean_from_lambda` across the unit interval,
/// and the symmetric point is exact.
fn check_truncexp_inverse(_mf: &MFConfig) -> Result<(bool, String)> {
    let mut worst: Real = 0.0;
    for k in 1..=19 {
        let a = 0.05 * k as Real;
        let lam = lambda_for_mean(a).map_err(|e| anyhow!("{e}"))?;
        worst = worst.max((mean_from_lambda(lam) - a).abs());
    }
    let lam_half = lambda_for_mean(0.5).map_err(|e| anyhow!("{e}"))?;
    let kl_half = kl_truncexp(0.5).map_err(|e| anyhow!("{e}"))?;
    let exact_half = lam_half == 0.0 && kl_half == 0.0;
    Ok((
        worst <= 1e-10 && exact_half,
        format!("worst roundtrip error {worst:.3e}, midpoint exact: {exact_half}"),
    ))
}

/// Closed-form truncated-exponential integrals against Gauss-Legendre
/// quadrature of the defining integrands.
fn check_truncexp_quadrature(_mf: &MFConfig) -> Result<(bool, String)> {
    let mut worst_kl: Real = 0.0;
    let mut worst_mean: Real = 0.0;
    for k in 1..=19 {
        let a = 0.05 * k as Real;
        let lam = lambda_for_mean(a).map_err(|e| anyhow!("{e}"))?;
        let kl_q = quadrature_kl_truncexp(lam, 40).map_err(|e| anyhow!("{e}"))?;
        let mean_q = quadrature_mean_truncexp(lam, 40).map_err(|e| anyhow!("{e}"))?;
        let kl_c = kl_truncexp(a).map_err(|e| anyhow!("{e}"))?;
        worst_kl = worst_kl.max((kl_q - kl_c).abs());
        worst_mean = worst_mean.max((mean_q - a).abs());
    }
    Ok((
        worst_kl <= 1e-8 && worst_mean <= 1e-10,
        format!("worst KL error {worst_kl:.3e}, worst mean error {worst_mean:.3e}"),
    ))
}

/// With no quadratic part the budget collapses to a closed form in
/// `(M, n, eps)` alone.
fn check_budget_zero_interaction(_mf: &MFConfig) -> Result<(bool, String)> {
    let n = 7;
    let m = 1.8;
    let eps = 0.03;
    let fb = FunctionalBounds::new(3.0, vec![0.0; n], vec![0.0; n * n], m)
        .map_err(|e| anyhow!("{e}"))?;
    let budget = error_budget(&fb, eps, 0.0).map_err(|e| anyhow!("{e}"))?;
    let nf = n as Real;
    let expect_b2 = 4.0 * m * m * nf * eps * eps + m * nf * eps;
    let err = (budget.b2 - expect_b2).abs().max(budget.b1.abs());
    let slack_ok = budget.lower_slack == 0.0;
    Ok((
        err <= 1e-12 && slack_ok,
        format!("closed-form deviation {err:.3e}"),
    ))
}

/// Full sandwich on random quadratics over bits.
fn check_sandwich_quadratic(mf: &MFConfig) -> Result<(bool, String)> {
    let n = 8;
    let mu = bits(n)?;
    let tcfg = TheoremConfig {
        epsilon: 0.05,
        empirical_samples: 0,
        mf: mf.clone(),
    };
    let mut margins: Vec<Real> = Vec::new();
    for k in 0..3 {
        let (q, theta) = random_quadratic(n, 0.2, 200 + k);
        let f = Functional::quadratic(q, theta).map_err(|e| anyhow!("{e}"))?;
        let exp = theorem1_experiment(&f, &mu, &tcfg).map_err(|e| anyhow!("{e}"))?;
        if !exp.sandwich.holds() {
            return Ok((false, format!("instance {k} violated the sandwich")));
        }
        margins.push(exp.sandwich.lower_margin.min(exp.sandwich.upper_margin));
    }
    let min_margin = margins.iter().cloned().fold(Real::INFINITY, Real::min);
    Ok((true, format!("3 instances hold, min margin {min_margin:.3e}")))
}

/// Full sandwich on a ferromagnetic Curie-Weiss model over signs.
fn check_sandwich_cw(mf: &MFConfig) -> Result<(bool, String)> {
    let n = 10;
    let f = Functional::Spin(SpinSystem::curie_weiss(n, 1.2));
    let mu = ProductMeasure::iid(SiteMeasure::uniform_sign(), n)
        .map_err(|e| anyhow!("{e}"))?;
    let tcfg = TheoremConfig {
        epsilon: 0.05,
        empirical_samples: 0,
        mf: mf.clone(),
    };
    let exp = theorem1_experiment(&f, &mu, &tcfg).map_err(|e| anyhow!("{e}"))?;
    let s = exp.sandwich;
    Ok((
        s.holds(),
        format!(
            "log Z {:.6} in [{:.6}, {:.6}]",
            s.log_z, s.lower_bound, s.upper_bound
        ),
    ))
}

/// Importance sampling with all-zero tilts must reproduce direct Monte
/// Carlo bit for bit (same streams, same draws).
fn check_mc_bitwise(_mf: &MFConfig) -> Result<(bool, String)> {
    use mfld_core::validate::{mc_tail_probability, tilted_importance_estimate};
    let n = 10;
    let mu = bits(n)?;
    let f = Functional::Linear {
        coeffs: SiteVec::from_scalars(&vec![1.0; n]),
    };
    let direct =
        mc_tail_probability(&f, &mu, 6.5, 8, 512, 7).map_err(|e| anyhow!("{e}"))?;
    let tilts = vec![LinearTilt::zero(1); n];
    let is = tilted_importance_estimate(&f, &mu, &tilts, 6.5, 8, 512, 7)
        .map_err(|e| anyhow!("{e}"))?;
    let same = direct.p_hat.to_bits() == is.p_hat.to_bits()
        && direct.std_error.to_bits() == is.std_error.to_bits()
        && direct.hits == is.hits;
    Ok((same, format!("p_hat {} vs {}", direct.p_hat, is.p_hat)))
}

/// Tilted importance sampling stays within a few standard errors of an
/// exactly known binomial tail.
fn check_is_unbiased(_mf: &MFConfig) -> Result<(bool, String)> {
    use mfld_core::measures::tilt_for_mean_1d;
    use mfld_core::validate::tilted_importance_estimate;
    let n = 4;
    let mu = bits(n)?;
    let f = Functional::Linear {
        coeffs: SiteVec::from_scalars(&vec![1.0; n]),
    };
    let truth = 5.0 / 16.0; // P(at least 3 of 4 fair bits)
    let theta = tilt_for_mean_1d(&SiteMeasure::uniform_bit(), 0.7, 1e-12)
        .map_err(|e| anyhow!("{e}"))?;
    let tilts = vec![LinearTilt::new(vec![theta]); n];
    let est = tilted_importance_estimate(&f, &mu, &tilts, 2.5, 32, 2048, 11)
        .map_err(|e| anyhow!("{e}"))?;
    let dev = (est.p_hat - truth).abs();
    Ok((
        dev <= 4.0 * est.std_error && !est.degenerate,
        format!("|p_hat - 5/16| = {dev:.3e} vs SE {:.3e}", est.std_error),
    ))
}

/// Triangle rate solver must be feasible and no worse than the constant
/// ansatz it is seeded with.
fn check_rate_triangle(mf: &MFConfig) -> Result<(bool, String)> {
    let res = rate_function_triangle(8, 1.5, mf).map_err(|e| anyhow!("{e}"))?;
    let ok = res.feasible && res.value <= res.ansatz_value * (1.0 + 1e-9) + 1e-12;
    Ok((
        ok,
        format!("value {:.6} vs ansatz {:.6}", res.value, res.ansatz_value),
    ))
}

/// Simplex rate solver: no worse than the clique ansatz, and exactly zero
/// at ratio one.
fn check_rate_simplex(mf: &MFConfig) -> Result<(bool, String)> {
    let pattern = PatternGraph::triangle();
    let res = rate_function_simplex(&pattern, 6, 2, 1.5, mf).map_err(|e| anyhow!("{e}"))?;
    if !(res.feasible && res.value <= res.ansatz_value * (1.0 + 1e-9) + 1e-12) {
        return Ok((
            false,
            format!("value {:.6} vs ansatz {:.6}", res.value, res.ansatz_value),
        ));
    }
    let at_one = rate_function_simplex(&pattern, 6, 2, 1.0, mf).map_err(|e| anyhow!("{e}"))?;
    let ok = at_one.feasible && at_one.value == 0.0;
    Ok((
        ok,
        format!(
            "value {:.6} vs ansatz {:.6}; rate at ratio 1 = {}",
            res.value, res.ansatz_value, at_one.value
        ),
    ))
}

/// Curie-Weiss coupling statistics have closed forms: `tr(A^2)/n` equals
/// `(n-1)/n^2` (bitwise when `1/n` is a binary fraction) and the sup-norm
/// row sum is `(n-1)/n`.
fn check_spin_condition(_mf: &MFConfig) -> Result<(bool, String)> {
    let mut worst_tr: Real = 0.0;
    let mut worst_row: Real = 0.0;
    for n in [12usize, 16] {
        let sys = SpinSystem::curie_weiss(n, 2.0);
        let cond = spin_condition_check(&sys);
        if !cond.sup_is_exact {
            return Ok((false, format!("n = {n}: sup reported as inexact")));
        }
        let nf = n as Real;
        worst_tr = worst_tr.max((cond.tr_a2_over_n - (nf - 1.0) / (nf * nf)).abs());
        worst_row = worst_row.max((cond.row_l1_sup_over_n - (nf - 1.0) / nf).abs());
    }
    let cond16 = spin_condition_check(&SpinSystem::curie_weiss(16, 2.0));
    let bitwise16 = cond16.tr_a2_over_n == 15.0 / 256.0;
    let ok = worst_tr <= 1e-15 && worst_row <= 1e-15 && bitwise16;
    Ok((
        ok,
        format!(
            "tr error {worst_tr:.3e}, row-sum error {worst_row:.3e}, n=16 bitwise: {bitwise16}"
        ),
    ))
}

pub fn run(cfg: &Config) -> Result<(Vec<Row>, bool)> {
    let mf = mf_config(cfg)?;
    let checks: Vec<Check> = vec![
        ("gibbs-identity", check_gibbs),
        ("linear-closed-form", check_linear),
        ("truncexp-inverse", check_truncexp_inverse),
        ("truncexp-quadrature", check_truncexp_quadrature),
        ("budget-zero-interaction", check_budget_zero_interaction),
        ("sandwich-quadratic", check_sandwich_quadratic),
        ("sandwich-curie-weiss", check_sandwich_cw),
        ("mc-bitwise", check_mc_bitwise),
        ("is-unbiased", check_is_unbiased),
        ("rate-triangle-ansatz", check_rate_triangle),
        ("rate-simplex-ansatz", check_rate_simplex),
        ("spin-condition", check_spin_condition),
    ];
    let mut rows = Vec::with_capacity(checks.len());
    let mut all_ok = true;
    for (name, check) in checks {
        let (pass, detail) = check(&mf)?;
        println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        all_ok &= pass;
        rows.push(
            Row::new()
                .s("task", "validate-suite")
                .s("check", name)
                .b("pass", pass)
                .s("detail", detail),
        );
    }
    Ok((rows, all_ok))
}
