//! Desk-scale verification: exact enumeration, quadrature cross-checks, and
//! the end-to-end two-sided bound experiment.
//!
//! Everything here trades scale for certainty. [`exact_log_partition`]
//! enumerates every configuration of a finite-support product measure (a
//! resource guard caps the count), [`gibbs_identity_check`] confirms the
//! variational identity `log Z = E_g[f] - KL(g || mu)` at the exact Gibbs
//! measure, Gauss-Legendre quadrature re-derives the truncated-exponential
//! closed forms from integrals, and [`theorem1_experiment`] runs the whole
//! pipeline — derivative bounds, covering count, mean-field value, exact
//! `log Z`, error budget — and checks that the sandwich holds.

mod montecarlo;

pub use montecarlo::{
    mc_tail_probability, replay_lower_bound, tilted_importance_estimate, IsEstimate, McEstimate,
    ReplayBound,
};

use crate::bounds::{
    empirical_cover, error_budget, grid_cover_log_size, sandwich, CoverReport, ErrorBudget,
    SandwichReport,
};
use crate::error::{Error, Result};
use crate::functionals::{derivative_bounds, gradient_ranges, DomainParams, FunctionalBounds};
use crate::meanfield::{spin_mf_value_of, MFConfig, SpinMFReport};
use crate::measures::{log_norm_const, SiteMeasure};
use crate::util::{KahanSum, LogSumExp};
use crate::{Functional, ProductMeasure, Real, SiteVec};

/// Hard cap on the number of configurations [`ProductEnumerator`] will
/// visit.
pub const ENUM_GUARD: f64 = 2e7;

/// Rejects functional/measure pairs that disagree on site count or on any
/// site's ambient dimension.
pub(crate) fn check_shapes(f: &Functional, mu: &ProductMeasure) -> Result<()> {
    let dims = f.site_dims();
    if mu.len() != dims.len() || mu.sites().iter().zip(&dims).any(|(s, &d)| s.dim() != d) {
        return Err(Error::DimensionMismatch(
            "functional and measure disagree on site shapes".into(),
        ));
    }
    Ok(())
}

/// Mixed-radix odometer over every configuration of a finite-support
/// product measure. Site 0 advances fastest.
///
/// ```text
/// let mut en = ProductEnumerator::new(&mu)?;
/// while en.advance() {
///     en.write_current(&mut x);
///     let lw = en.log_weight();
///     ...
/// }
/// ```
pub struct ProductEnumerator<'a> {
    sites: &'a [SiteMeasure<Real>],
    radices: Vec<usize>,
    idx: Vec<usize>,
    started: bool,
}

impl<'a> ProductEnumerator<'a> {
    /// Builds the enumerator, rejecting continuous sites and supports whose
    /// product exceeds [`ENUM_GUARD`].
    pub fn new(mu: &'a ProductMeasure) -> Result<Self> {
        let mut radices = Vec::with_capacity(mu.len());
        let mut total = 1.0f64;
        for (i, site) in mu.sites().iter().enumerate() {
            match site {
                SiteMeasure::FiniteSupport { atoms, .. } => {
                    radices.push(atoms.len());
                    total *= atoms.len() as f64;
                }
                SiteMeasure::TruncatedExponential { .. } => {
                    return Err(Error::Domain(format!(
                        "site {i} has continuous support; discretize it (see \
                         discretize_product) before enumerating"
                    )));
                }
            }
        }
        if total > ENUM_GUARD {
            return Err(Error::ResourceGuard(format!(
                "{total:.3e} configurations exceed the enumeration guard {ENUM_GUARD:.1e}"
            )));
        }
        let idx = vec![0; radices.len()];
        Ok(ProductEnumerator {
            sites: mu.sites(),
            radices,
            idx,
            started: false,
        })
    }

    /// Total number of configurations.
    pub fn total(&self) -> usize {
        self.radices.iter().product()
    }

    /// Steps to the next configuration (the first call lands on the all-zero
    /// index); `false` once every configuration has been visited.
    pub fn advance(&mut self) -> bool {
        if !self.started {
            self.started = true;
            return true;
        }
        for i in 0..self.idx.len() {
            self.idx[i] += 1;
            if self.idx[i] < self.radices[i] {
                return true;
            }
            self.idx[i] = 0;
        }
        false
    }

    /// Copies the current configuration's atoms into `x` (shaped like the
    /// measure's site dimensions).
    pub fn write_current(&self, x: &mut SiteVec) {
        for (i, site) in self.sites.iter().enumerate() {
            let atoms = site.atoms().expect("enumerator holds finite sites only");
            x.site_mut(i).copy_from_slice(&atoms[self.idx[i]]);
        }
    }

    /// Log-weight of the current configuration under the product measure
    /// (`-inf` where an atom carries zero weight).
    pub fn log_weight(&self) -> Real {
        let mut total = 0.0;
        for (i, site) in self.sites.iter().enumerate() {
            let w = site.weights().expect("enumerator holds finite sites only")[self.idx[i]];
            if w <= 0.0 {
                return Real::NEG_INFINITY;
            }
            total += w.ln();
        }
        total
    }
}

/// Exact `log Z = log sum_x e^{f(x)} mu(x)` by full enumeration with a
/// streaming log-sum-exp.
pub fn exact_log_partition(f: &Functional, mu: &ProductMeasure) -> Result<Real> {
    check_shapes(f, mu)?;
    let mut en = ProductEnumerator::new(mu)?;
    let mut x = SiteVec::zeros(&f.site_dims());
    let mut lse = LogSumExp::new();
    while en.advance() {
        let lw = en.log_weight();
        if lw == Real::NEG_INFINITY {
            continue;
        }
        en.write_current(&mut x);
        lse.add(f.value(&x)? + lw);
    }
    let z = lse.value();
    if !z.is_finite() {
        return Err(Error::NonFinite("log partition from enumeration".into()));
    }
    Ok(z)
}

/// Both sides of the variational identity at the exact Gibbs measure.
#[derive(Debug, Clone)]
pub struct GibbsCheck {
    pub log_z: Real,
    /// `E_g[f] - KL(g || mu)`, accumulated from the normalized Gibbs
    /// probabilities rather than algebraically reduced.
    pub variational_value: Real,
    /// `log_z - variational_value`.
    pub gap: Real,
    pub energy_term: Real,
    pub kl_term: Real,
}

/// Evaluates `log Z` by enumeration, then re-evaluates the Gibbs measure's
/// energy and KL terms from its normalized probabilities and reports the
/// identity gap. The two sides follow different floating-point paths, so a
/// small but nonzero gap is the expected signature of a correct
/// implementation.
pub fn gibbs_identity_check(f: &Functional, mu: &ProductMeasure) -> Result<GibbsCheck> {
    let log_z = exact_log_partition(f, mu)?;
    let mut en = ProductEnumerator::new(mu)?;
    let mut x = SiteVec::zeros(&f.site_dims());
    let mut energy = KahanSum::default();
    let mut kl = KahanSum::default();
    while en.advance() {
        let lw = en.log_weight();
        if lw == Real::NEG_INFINITY {
            continue;
        }
        en.write_current(&mut x);
        let fx = f.value(&x)?;
        let p = (fx + lw - log_z).exp();
        if p == 0.0 {
            continue;
        }
        energy.add(p * fx);
        kl.add(p * (p.ln() - lw));
    }
    let variational_value = energy.value() - kl.value();
    Ok(GibbsCheck {
        log_z,
        variational_value,
        gap: log_z - variational_value,
        energy_term: energy.value(),
        kl_term: kl.value(),
    })
}

/// Gauss-Legendre nodes and weights on `(0, 1)`, ascending. Nodes come from
/// Newton's method on the Legendre recurrence; `k` up to 512.
pub fn gauss_legendre_unit(k: usize) -> Result<(Vec<Real>, Vec<Real>)> {
    if k == 0 || k > 512 {
        return Err(Error::Domain(format!(
            "quadrature order must lie in 1..=512, got {k}"
        )));
    }
    let kf = k as Real;
    let mut nodes = vec![0.0; k];
    let mut weights = vec![0.0; k];
    // Symmetric rule: compute the upper half on (-1, 1) and mirror.
    for i in 0..k.div_ceil(2) {
        let mut x: Real = (std::f64::consts::PI * (i as Real + 0.75) / (kf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre value p1 and derivative via the three-term recurrence.
            let mut p1: Real = 1.0;
            let mut p2: Real = 0.0;
            for j in 0..k {
                let p3 = p2;
                p2 = p1;
                let jf = j as Real;
                p1 = ((2.0 * jf + 1.0) * x * p2 - jf * p3) / (jf + 1.0);
            }
            dp = kf * (x * p1 - p2) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // x is the i-th root from the top; map (-1,1) -> (0,1) ascending.
        nodes[k - 1 - i] = 0.5 * (x + 1.0);
        nodes[i] = 0.5 * (1.0 - x);
        weights[k - 1 - i] = 0.5 * w;
        weights[i] = 0.5 * w;
    }
    Ok((nodes, weights))
}

/// Replaces a continuous site by its Gauss-Legendre discretization (finite
/// sites pass through unchanged): atoms at the nodes, weights proportional
/// to `rule weight x density`, renormalized.
pub fn discretize_site(site: &SiteMeasure<Real>, order: usize) -> Result<SiteMeasure<Real>> {
    match site {
        SiteMeasure::FiniteSupport { .. } => Ok(site.clone()),
        SiteMeasure::TruncatedExponential { lambda } => {
            let (nodes, weights) = gauss_legendre_unit(order)?;
            let lc = log_norm_const(*lambda);
            let atoms = nodes.iter().map(|&z| vec![z]).collect();
            let w = nodes
                .iter()
                .zip(&weights)
                .map(|(&z, &wq)| wq * (lc - lambda * z).exp())
                .collect();
            SiteMeasure::finite_renormalized(atoms, w)
        }
    }
}

/// Discretizes every continuous site of a product measure at the given
/// quadrature order.
pub fn discretize_product(mu: &ProductMeasure, order: usize) -> Result<ProductMeasure> {
    let sites = mu
        .sites()
        .iter()
        .map(|s| discretize_site(s, order))
        .collect::<Result<Vec<_>>>()?;
    ProductMeasure::new(sites)
}

/// `KL(TE(lambda) || uniform)` as the quadrature integral of `p log p` over
/// `(0, 1)` — an integral-side cross-check of the closed form.
pub fn quadrature_kl_truncexp(lambda: Real, order: usize) -> Result<Real> {
    let (nodes, weights) = gauss_legendre_unit(order)?;
    let lc = log_norm_const(lambda);
    let mut acc = KahanSum::default();
    for (&z, &w) in nodes.iter().zip(&weights) {
        let lp = lc - lambda * z;
        acc.add(w * lp.exp() * lp);
    }
    Ok(acc.value())
}

/// Mean of `TE(lambda)` as the quadrature integral of `z p(z)`.
pub fn quadrature_mean_truncexp(lambda: Real, order: usize) -> Result<Real> {
    let (nodes, weights) = gauss_legendre_unit(order)?;
    let lc = log_norm_const(lambda);
    let mut acc = KahanSum::default();
    for (&z, &w) in nodes.iter().zip(&weights) {
        acc.add(w * z * (lc - lambda * z).exp());
    }
    Ok(acc.value())
}

/// Inputs of [`theorem1_experiment`] beyond the functional and measure.
#[derive(Debug, Clone)]
pub struct TheoremConfig {
    /// Gradient accuracy of the cover; also enters the budget directly.
    pub epsilon: Real,
    /// Sample count for the diagnostic empirical cover (`0` skips it).
    pub empirical_samples: usize,
    /// Mean-field solver settings (including the master seed).
    pub mf: MFConfig,
}

impl Default for TheoremConfig {
    fn default() -> Self {
        TheoremConfig {
            epsilon: 0.1,
            empirical_samples: 0,
            mf: MFConfig::default(),
        }
    }
}

/// Everything the end-to-end experiment produced, stage by stage.
#[derive(Debug, Clone)]
pub struct TheoremExperiment {
    pub n_sites: usize,
    pub epsilon: Real,
    pub bounds: FunctionalBounds<Real>,
    /// Certified analytic grid cover (this one enters the budget).
    pub cover: CoverReport,
    /// Optional sampled net — a diagnostic lower bound on the covering
    /// count, never used in the budget.
    pub empirical: Option<CoverReport>,
    pub budget: ErrorBudget<Real>,
    pub mf: SpinMFReport,
    pub log_z: Real,
    pub sandwich: SandwichReport,
}

/// Runs the full two-sided bound pipeline on a finite-support instance:
/// derivative bounds, analytic cover, restarted mean-field value, exact
/// `log Z` by enumeration, error budget, sandwich. Errors carry the stage
/// they occurred in. The upper side starts from the certified supremum
/// bound `a`; the lower side subtracts the curvature slack from the
/// attained mean-field value.
pub fn theorem1_experiment(
    f: &Functional,
    mu: &ProductMeasure,
    cfg: &TheoremConfig,
) -> Result<TheoremExperiment> {
    let dom = DomainParams::from_product(mu);
    let fb = derivative_bounds(f, &dom).map_err(|e| e.in_stage("bounds"))?;
    let ranges = gradient_ranges(f, &dom).map_err(|e| e.in_stage("cover"))?;
    let log_cover =
        grid_cover_log_size(&ranges, cfg.epsilon).map_err(|e| e.in_stage("cover"))?;
    let cover = CoverReport::analytic(log_cover, cfg.epsilon);
    let empirical = if cfg.empirical_samples > 0 {
        let (report, _) = empirical_cover(f, mu, cfg.epsilon, cfg.empirical_samples, cfg.mf.seed)
            .map_err(|e| e.in_stage("cover"))?;
        Some(report)
    } else {
        None
    };
    let mf = spin_mf_value_of(f, mu, &cfg.mf).map_err(|e| e.in_stage("meanfield"))?;
    let log_z = exact_log_partition(f, mu).map_err(|e| e.in_stage("logz"))?;
    let budget =
        error_budget(&fb, cfg.epsilon, cover.log_size).map_err(|e| e.in_stage("budget"))?;
    let sandwich = sandwich(log_z, mf.best.value, fb.a, &budget);
    Ok(TheoremExperiment {
        n_sites: mu.len(),
        epsilon: cfg.epsilon,
        bounds: fb,
        cover,
        empirical,
        budget,
        mf,
        log_z,
        sandwich,
    })
}
