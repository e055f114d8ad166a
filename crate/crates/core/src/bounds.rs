//! Two-sided error budget for the mean-field approximation, gradient covers,
//! and the sandwich check.
//!
//! For a functional with derivative bounds `(a, b, c, M)` over `n` sites
//! (see [`crate::functionals::FunctionalBounds`]) the log-partition function
//! is sandwiched between the mean-field value minus a curvature slack and a
//! mean-field upper value plus two explicit terms and a covering count:
//!
//! ```text
//! mf - (M^2/2) sum_i c_ii  <=  log Z  <=  mf_upper + B1 + B2 + log 2 + log |D(eps)|
//! ```
//!
//! `B1` collects the interaction strength, `B2` the discretization cost of
//! approximating gradients to accuracy `eps` per site, and `|D(eps)|` counts
//! the dual vectors needed to cover every gradient image. Two cover modes
//! exist and are never conflated:
//!
//! * [`grid_cover_log_size`] — an analytic cell count over the gradient
//!   coordinate ranges. Valid for every point of the domain; this is the
//!   mode certified budgets use.
//! * [`empirical_cover`] — a greedy first-come net over sampled gradient
//!   images. It covers only what sampling saw, making it a lower bound on
//!   the size a true cover needs and a diagnostic for how conservative the
//!   grid count is.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::functionals::{Functional, FunctionalBounds, SiteVec};
use crate::measures::{sample_product_into, ProductMeasure};
use crate::scalar::{real, real_of, Scalar};
use crate::util::{stream_id, StreamPurpose};
use crate::Real;

/// The two explicit error terms plus the covering contribution, with the
/// inputs echoed for reporting.
#[derive(Debug, Clone)]
pub struct ErrorBudget<F> {
    pub b1: F,
    pub b2: F,
    pub epsilon: F,
    /// `log |D(eps)|` handed in by the caller (grid or empirical).
    pub log_cover_size: F,
    /// Lower-side slack `(M^2/2) sum_i c_ii`.
    pub lower_slack: F,
    pub n_sites: usize,
}

impl<F: Scalar> ErrorBudget<F> {
    /// Total additive error on the upper side:
    /// `B1 + B2 + log 2 + log |D(eps)|`.
    pub fn upper_total(&self) -> F {
        self.b1 + self.b2 + real::<F>(std::f64::consts::LN_2) + self.log_cover_size
    }
}

impl<F: Scalar> std::fmt::Display for ErrorBudget<F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "b1={} b2={} epsilon={} log_cover={} upper_total={} lower_slack={} n={}",
            self.b1,
            self.b2,
            self.epsilon,
            self.log_cover_size,
            self.upper_total(),
            self.lower_slack,
            self.n_sites
        )
    }
}

/// Evaluates the budget for derivative bounds `fb` at gradient accuracy
/// `epsilon` and the given covering count.
///
/// ```text
/// B1 = 4 sqrt( M^2 (a C + B) + M^3 S1 + M^4 (a Q + S2) )
///      with C = sum c_ii, B = sum b_i^2, S1 = sum b_i c_ij,
///           Q = sum c_ij^2, S2 = sum b_i b_j c_ij
/// B2 = 4 sqrt(B + eps^2 n) (M^3 sqrt(sum c_ii^2) + M^2 sqrt(n) eps)
///      + M^2 C + M n eps
/// ```
///
/// All double sums run over the full `n x n` grid, diagonal included. With
/// `b = c = 0` this collapses to `B1 = 0`, `B2 = 4 M^2 n eps^2 + M n eps`.
pub fn error_budget<F: Scalar>(
    fb: &FunctionalBounds<F>,
    epsilon: F,
    log_cover_size: F,
) -> Result<ErrorBudget<F>> {
    if !(epsilon >= F::zero()) {
        return Err(Error::Domain("epsilon must be nonnegative".into()));
    }
    if !(log_cover_size >= F::zero()) {
        return Err(Error::Domain(
            "log cover size must be nonnegative (a cover has at least one element)".into(),
        ));
    }
    let n = fb.n_sites();
    let nf = real_of::<F>(n);
    let m = fb.m;
    let m2 = m * m;
    let m3 = m2 * m;
    let m4 = m2 * m2;
    let c_diag = fb.sum_c_diag();
    let b_sq = fb.sum_b_sq();
    let bc = fb.sum_b_c();
    let c_sq = fb.sum_c_sq();
    let bbc = fb.sum_bb_c();
    let c_diag_sq = fb.sum_c_diag_sq();

    let inner1 = m2 * (fb.a * c_diag + b_sq) + m3 * bc + m4 * (fb.a * c_sq + bbc);
    let b1 = real::<F>(4.0) * inner1.sqrt();

    let disc = (b_sq + epsilon * epsilon * nf).sqrt();
    let b2 = real::<F>(4.0) * disc * (m3 * c_diag_sq.sqrt() + m2 * nf.sqrt() * epsilon)
        + m2 * c_diag
        + m * nf * epsilon;

    let lower_slack = m2 / real(2.0) * c_diag;

    if !b1.is_finite() || !b2.is_finite() {
        return Err(Error::NonFinite("error budget terms".into()));
    }
    Ok(ErrorBudget {
        b1,
        b2,
        epsilon,
        log_cover_size,
        lower_slack,
        n_sites: n,
    })
}

/// How a covering count was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoverMode {
    /// Greedy net over sampled gradients — a lower bound, diagnostic only.
    Empirical,
    /// Analytic cell count over gradient coordinate ranges — valid for the
    /// whole domain.
    AnalyticGrid,
}

impl std::fmt::Display for CoverMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CoverMode::Empirical => write!(f, "empirical"),
            CoverMode::AnalyticGrid => write!(f, "analytic_grid"),
        }
    }
}

/// Result of a covering computation.
#[derive(Debug, Clone)]
pub struct CoverReport {
    pub mode: CoverMode,
    /// `log` of the covering count.
    pub log_size: Real,
    pub n_centers: usize,
    pub epsilon: Real,
    /// Samples examined (zero for the analytic grid).
    pub n_samples: usize,
    /// Largest squared dual distance from a covered sample to its nearest
    /// center; at most `epsilon^2 n` by construction. Zero for the grid.
    pub residual_max: Real,
}

impl CoverReport {
    /// Report for an analytic grid cover. Only the log count is meaningful
    /// there — the centers are never materialized, so `n_centers` stays zero.
    pub fn analytic(log_size: Real, epsilon: Real) -> Self {
        CoverReport {
            mode: CoverMode::AnalyticGrid,
            log_size,
            n_centers: 0,
            epsilon,
            n_samples: 0,
            residual_max: 0.0,
        }
    }
}

/// Analytic covering count: each gradient coordinate range is cut into cells
/// of width `2 eps`, so any gradient image sits within `eps` of a cell
/// center in every coordinate, hence within `eps^2 n` in summed squared dual
/// distance. Returns `log` of the product of cell counts.
pub fn grid_cover_log_size<F: Scalar>(ranges: &[Vec<(F, F)>], epsilon: F) -> Result<F> {
    if !(epsilon > F::zero()) {
        return Err(Error::Domain("epsilon must be positive".into()));
    }
    let mut log_size = F::zero();
    for site in ranges {
        for &(lo, hi) in site {
            if hi < lo {
                return Err(Error::Domain("empty gradient range".into()));
            }
            let cells = ((hi - lo) / (epsilon * real(2.0))).ceil().max(F::one());
            log_size += cells.ln();
        }
    }
    Ok(log_size)
}

/// Squared dual distance `sum_i max_c |g_i,c - d_i,c|^2` between two
/// same-shaped block vectors.
pub fn dual_sq_distance(g: &SiteVec<Real>, d: &SiteVec<Real>) -> Real {
    debug_assert!(g.same_shape(d));
    let mut total = 0.0;
    for i in 0..g.n_sites() {
        let mut linf: Real = 0.0;
        for (a, b) in g.site(i).iter().zip(d.site(i)) {
            linf = linf.max((a - b).abs());
        }
        total += linf * linf;
    }
    total
}

/// Greedy first-come net over sampled gradient images: a sample whose
/// gradient sits farther than `eps^2 n` (squared dual distance) from every
/// existing center becomes a center itself. Returns the report and the
/// centers. Deterministic for a fixed seed; the stream layout keeps it
/// independent of other consumers of the same master seed.
pub fn empirical_cover(
    f: &Functional<Real>,
    mu: &ProductMeasure<Real>,
    epsilon: Real,
    n_samples: usize,
    seed: u64,
) -> Result<(CoverReport, Vec<SiteVec<Real>>)> {
    if !(epsilon > 0.0) {
        return Err(Error::Domain("epsilon must be positive".into()));
    }
    if n_samples == 0 {
        return Err(Error::Domain("need at least one sample".into()));
    }
    let n = f.site_count();
    if mu.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "measure has {} sites, functional has {n}",
            mu.len()
        )));
    }
    let threshold = epsilon * epsilon * n as Real;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(StreamPurpose::Cover, 0));
    let dims = f.site_dims();
    let mut x = SiteVec::zeros(&dims);
    let mut centers: Vec<SiteVec<Real>> = Vec::new();
    let mut residual_max: Real = 0.0;
    for _ in 0..n_samples {
        sample_product_into(mu, &mut rng, x.data_mut());
        let g = f.site_gradients(&x)?;
        let best = centers
            .iter()
            .map(|c| dual_sq_distance(&g, c))
            .fold(Real::INFINITY, Real::min);
        if best > threshold {
            centers.push(g);
        } else {
            residual_max = residual_max.max(best);
        }
    }
    let report = CoverReport {
        mode: CoverMode::Empirical,
        log_size: (centers.len() as Real).ln(),
        n_centers: centers.len(),
        epsilon,
        n_samples,
        residual_max,
    };
    Ok((report, centers))
}

/// Checks that a point set is covered by `centers` at accuracy `eps^2 n`:
/// returns the largest minimal squared dual distance over the points.
pub fn cover_residual(centers: &[SiteVec<Real>], points: &[SiteVec<Real>]) -> Real {
    let mut worst: Real = 0.0;
    for p in points {
        let best = centers
            .iter()
            .map(|c| dual_sq_distance(p, c))
            .fold(Real::INFINITY, Real::min);
        worst = worst.max(best);
    }
    worst
}

/// Outcome of sandwiching an exactly computed `log Z` between the budgeted
/// bounds.
#[derive(Debug, Clone)]
pub struct SandwichReport {
    pub log_z: Real,
    pub mf_value: Real,
    pub mf_upper: Real,
    pub lower_bound: Real,
    pub upper_bound: Real,
    /// Slack of each side (nonnegative when the side holds).
    pub lower_margin: Real,
    pub upper_margin: Real,
    pub lower_ok: bool,
    pub upper_ok: bool,
    pub tol: Real,
}

impl SandwichReport {
    pub fn holds(&self) -> bool {
        self.lower_ok && self.upper_ok
    }
}

/// Builds the sandwich `mf_value - slack <= log Z <= mf_upper + total` from
/// a budget. `mf_value` is the attained mean-field objective (the lower
/// side); `mf_upper` is the quantity the upper side starts from — a bound on
/// the supremum of the structured objective, `a` itself in certified runs.
/// The comparison tolerance is `1e-9 (1 + |log Z|)`.
pub fn sandwich(
    log_z: Real,
    mf_value: Real,
    mf_upper: Real,
    budget: &ErrorBudget<Real>,
) -> SandwichReport {
    let lower_bound = mf_value - budget.lower_slack;
    let upper_bound = mf_upper + budget.upper_total();
    let tol = 1e-9 * (1.0 + log_z.abs());
    SandwichReport {
        log_z,
        mf_value,
        mf_upper,
        lower_bound,
        upper_bound,
        lower_margin: log_z - lower_bound,
        upper_margin: upper_bound - log_z,
        lower_ok: log_z >= lower_bound - tol,
        upper_ok: log_z <= upper_bound + tol,
        tol,
    }
}
