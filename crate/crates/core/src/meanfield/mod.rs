//! Naive mean-field fixed points and the variational rate solvers.
//!
//! The mean-field approximation restricts the Gibbs variational principle to
//! product measures: maximize `f(mean(nu)) - sum_i KL(nu_i || mu_i)` over
//! per-site tilts. [`naive_mf_fixed_point`] runs the damped self-consistency
//! iteration `p <- tilt_mean(mu, f_i(p))`; [`spin_mf_value`] wraps it in
//! parallel random restarts and keeps the best objective.
//!
//! The rate solvers ([`rate_function_simplex`], [`rate_function_triangle`])
//! minimize total KL cost subject to a lower bound on a polynomial count,
//! via penalized first-order descent with restarts, followed by an exact
//! feasibility projection toward a feasible anchor. Each reports the
//! benchmark ansatz value it must beat alongside the point it found.
//!
//! Everything here runs at [`Real`] precision and is deterministic for a
//! fixed seed, including across thread counts: restart `r` draws from the
//! dedicated stream `stream_id(Restart, r)` of the master seed, and ties
//! between equal restart values resolve to the lowest restart index.

mod simplex;
mod triangle;

pub use simplex::{clique_ansatz_bound, rate_function_simplex, CliqueAnsatz};
pub use triangle::{constant_ansatz_value, rate_function_triangle};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::functionals::{ColorArray, SpinSystem, WeightArray};
use crate::measures::{exponential_tilt, mean, sample_product_into};
use crate::util::{l1_dist, stream_id, StreamPurpose};
use crate::{Functional, LinearTilt, ProductMeasure, Real, SiteVec};

/// Knobs shared by the iterative solvers. `Default` gives the settings the
/// validation suite runs with.
#[derive(Debug, Clone)]
pub struct MFConfig {
    /// Damping of the fixed-point update (`1` = undamped).
    pub damping: Real,
    /// Fixed-point residual target (sup over sites of L1 change).
    pub tol: Real,
    /// Iteration cap for the fixed-point loop.
    pub max_iter: usize,
    /// Number of restarts (first restart is the deterministic anchor).
    pub restarts: usize,
    /// Initial step size for the descent solvers.
    pub step: Real,
    /// Descent steps per penalty round.
    pub inner_iters: usize,
    /// Initial constraint penalty weight.
    pub penalty_initial: Real,
    /// Multiplicative penalty escalation per round.
    pub penalty_growth: Real,
    /// Number of penalty rounds.
    pub penalty_rounds: usize,
    /// Master seed; all randomness derives from it through purpose streams.
    pub seed: u64,
}

impl Default for MFConfig {
    fn default() -> Self {
        MFConfig {
            damping: 0.5,
            tol: 1e-12,
            max_iter: 20_000,
            restarts: 8,
            step: 0.25,
            inner_iters: 300,
            penalty_initial: 10.0,
            penalty_growth: 10.0,
            penalty_rounds: 5,
            seed: 1,
        }
    }
}

/// A converged (or capped) naive mean-field point.
#[derive(Debug, Clone)]
pub struct MFPoint {
    /// Per-site means of the tilted product measure.
    pub means: SiteVec,
    /// The tilt coefficients `f_i(p)` defining the product measure.
    pub tilts: Vec<LinearTilt>,
    /// Mean-field objective `f(p) - sum_i KL`.
    pub value: Real,
    pub iterations: usize,
    /// Final fixed-point residual (sup over sites of L1 change per sweep).
    pub residual: Real,
    pub converged: bool,
}

/// Mean-field objective `f(p(d)) - sum_i KL(nu_i(d) || mu_i)` for explicit
/// tilt coefficient vectors `d`, using the exact per-site KL identity
/// `KL = lambda(p) + <d, p>`.
pub fn mf_objective(
    f: &Functional,
    mu: &ProductMeasure,
    tilts: &[LinearTilt],
) -> Result<Real> {
    if tilts.len() != mu.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} tilts for {} sites",
            tilts.len(),
            mu.len()
        )));
    }
    let dims = f.site_dims();
    let mut p = SiteVec::zeros(&dims);
    let mut kl_total = 0.0;
    for (i, site) in mu.sites().iter().enumerate() {
        let t = exponential_tilt(site, &tilts[i])?;
        let pi = mean(&t.measure);
        let kl = t.log_normalizer + crate::util::dot(&tilts[i].coeffs, &pi);
        p.site_mut(i).copy_from_slice(&pi);
        kl_total += kl;
    }
    Ok(f.value(&p)? - kl_total)
}

/// Damped self-consistency iteration from the starting means `start`:
/// `p <- (1 - damping) p + damping * tilt_mean(mu, f(p))`, stopping when the
/// undamped residual drops below `cfg.tol` or the iteration cap hits. The
/// returned objective is evaluated at the final tilts.
pub fn naive_mf_fixed_point(
    f: &Functional,
    mu: &ProductMeasure,
    start: &SiteVec,
    cfg: &MFConfig,
) -> Result<MFPoint> {
    let n = mu.len();
    if f.site_count() != n {
        return Err(Error::DimensionMismatch(format!(
            "functional has {} sites, measure has {n}",
            f.site_count()
        )));
    }
    if !(cfg.damping > 0.0 && cfg.damping <= 1.0) {
        return Err(Error::Domain("damping must lie in (0, 1]".into()));
    }
    let mut p = start.clone();
    let mut residual = Real::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iter {
        let g = f.site_gradients(&p)?;
        let mut sweep_residual: Real = 0.0;
        let mut next = p.clone();
        for i in 0..n {
            let tilt = LinearTilt::new(g.site(i).to_vec());
            let t = exponential_tilt(&mu.sites()[i], &tilt)?;
            let q = mean(&t.measure);
            sweep_residual = sweep_residual.max(l1_dist(&q, p.site(i)));
            for (dst, (old, new)) in next
                .site_mut(i)
                .iter_mut()
                .zip(p.site(i).iter().zip(q.iter()))
            {
                *dst = (1.0 - cfg.damping) * *old + cfg.damping * *new;
            }
        }
        p = next;
        residual = sweep_residual;
        iterations += 1;
        if residual <= cfg.tol {
            converged = true;
            break;
        }
    }
    let g = f.site_gradients(&p)?;
    let tilts: Vec<LinearTilt> = (0..n)
        .map(|i| LinearTilt::new(g.site(i).to_vec()))
        .collect();
    // Evaluate at the self-consistent means of the final tilts rather than
    // the damped iterate, so the reported value is an honest objective of an
    // actual product measure.
    let value = mf_objective(f, mu, &tilts)?;
    let mut means = SiteVec::zeros(&f.site_dims());
    for (i, site) in mu.sites().iter().enumerate() {
        let t = exponential_tilt(site, &tilts[i])?;
        means.site_mut(i).copy_from_slice(&mean(&t.measure));
    }
    Ok(MFPoint {
        means,
        tilts,
        value,
        iterations,
        residual,
        converged,
    })
}

/// Best naive mean-field point over parallel restarts.
#[derive(Debug, Clone)]
pub struct SpinMFReport {
    pub best: MFPoint,
    /// Index of the restart that produced `best` (ties go to the lowest).
    pub best_restart: usize,
    /// Objective of every restart, in restart order.
    pub per_restart: Vec<Real>,
}

/// Runs [`naive_mf_fixed_point`] from `cfg.restarts` starting points in
/// parallel and keeps the best objective. Restart 0 starts from the base
/// means of `mu`; restart `r > 0` blends those means toward a random sample
/// drawn on stream `stream_id(Restart, r)`. The result is independent of
/// thread count.
pub fn spin_mf_value(
    sys: &SpinSystem<Real>,
    mu: &ProductMeasure,
    cfg: &MFConfig,
) -> Result<SpinMFReport> {
    let f = Functional::Spin(sys.clone());
    spin_mf_value_of(&f, mu, cfg)
}

/// Restarted mean-field maximization for any functional (spin systems are
/// the primary consumer; quadratics use it in the validation suite).
pub fn spin_mf_value_of(
    f: &Functional,
    mu: &ProductMeasure,
    cfg: &MFConfig,
) -> Result<SpinMFReport> {
    if cfg.restarts == 0 {
        return Err(Error::Domain("need at least one restart".into()));
    }
    let base = mu.means();
    let dims = f.site_dims();
    let results: Vec<(usize, Result<MFPoint>)> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let start = if r == 0 {
                SiteVec::from_rows(&base)
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(stream_id(StreamPurpose::Restart, r as u64));
                let mut z = SiteVec::zeros(&dims);
                sample_product_into(mu, &mut rng, z.data_mut());
                let tau: Real = rng.random::<f64>();
                let mut s = SiteVec::zeros(&dims);
                for i in 0..mu.len() {
                    for (dst, (b, zi)) in s
                        .site_mut(i)
                        .iter_mut()
                        .zip(base[i].iter().zip(z.site(i)))
                    {
                        *dst = (1.0 - tau) * *b + tau * *zi;
                    }
                }
                s
            };
            (r, naive_mf_fixed_point(f, mu, &start, cfg))
        })
        .collect();
    let mut per_restart = vec![Real::NAN; cfg.restarts];
    let mut best: Option<(usize, MFPoint)> = None;
    for (r, res) in results {
        let point = res?;
        per_restart[r] = point.value;
        let replace = match &best {
            None => true,
            Some((br, bp)) => point.value > bp.value || (point.value == bp.value && r < *br),
        };
        if replace {
            best = Some((r, point));
        }
    }
    let (best_restart, best) = best.expect("at least one restart");
    Ok(SpinMFReport {
        best,
        best_restart,
        per_restart,
    })
}

/// Where a rate solver's reported point lives.
#[derive(Debug, Clone)]
pub enum RatePoint {
    /// Per-edge color distributions.
    Colors(ColorArray<Real>),
    /// Per-edge means in `(0, 1)`.
    EdgeWeights(WeightArray<Real>),
}

/// Outcome of a constrained rate minimization.
#[derive(Debug, Clone)]
pub struct RateResult {
    /// Total KL cost at the reported point (an upper bound on the rate
    /// function whenever `feasible` holds).
    pub value: Real,
    pub point: RatePoint,
    /// Whether the count constraint holds at the point (relative slack
    /// `1e-9`).
    pub feasible: bool,
    /// Relative constraint violation `max(0, (target - attained)/target)`.
    pub constraint_violation: Real,
    /// The constraint threshold `u * E[T]`.
    pub constraint_target: Real,
    /// The count attained at the point.
    pub attained: Real,
    /// Value of the closed-form ansatz the solver must not exceed.
    pub ansatz_value: Real,
    /// Descent iterations spent in the winning restart.
    pub iterations: usize,
    pub restarts_used: usize,
    /// Final (projected, feasible) value of each restart; `NaN` where a
    /// restart failed to reach feasibility.
    pub per_restart: Vec<Real>,
    /// Smallest distance of any coordinate of the point to its box edge.
    pub boundary_distance: Real,
}

/// Relative feasibility slack shared by the rate solvers.
pub(crate) const FEASIBILITY_REL_TOL: Real = 1e-9;

/// Moves a descent iterate the least distance toward a feasible anchor that
/// restores the count constraint: scans `t` on a coarse grid over the
/// segment `y + t (anchor - y)`, then bisects down to the smallest feasible
/// blend. Both solvers' iterates live in convex coordinate sets, so the
/// segment stays inside the domain. Returns the blended point and its count,
/// or `None` when even the anchor end fails (numerically infeasible anchor).
///
/// The bisection target is relaxed by one part in `1e12` so an anchor that
/// meets the constraint with equality (the constant ansatz) still qualifies
/// despite last-ulp noise in the count.
pub(crate) fn project_to_feasible(
    count_of: &dyn Fn(&[Real]) -> Real,
    y: &[Real],
    anchor: &[Real],
    target: Real,
) -> Option<(Vec<Real>, Real)> {
    let relaxed = target - target.abs() * 1e-12;
    let blend = |t: Real| -> Vec<Real> {
        y.iter()
            .zip(anchor)
            .map(|(a, b)| a + t * (b - a))
            .collect()
    };
    let t0 = count_of(y);
    if t0 >= relaxed {
        return Some((y.to_vec(), t0));
    }
    const GRID: usize = 64;
    let mut lo = 0.0;
    let mut hi = None;
    for k in 1..=GRID {
        let t = k as Real / GRID as Real;
        if count_of(&blend(t)) >= relaxed {
            hi = Some(t);
            break;
        }
        lo = t;
    }
    let mut hi = hi?;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if count_of(&blend(mid)) >= relaxed {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let point = blend(hi);
    let attained = count_of(&point);
    Some((point, attained))
}

/// KL divergence of a finite color distribution against the uniform one.
pub(crate) fn kl_vs_uniform_colors(p: &[Real]) -> Real {
    let l = p.len() as Real;
    let mut s = 0.0;
    for &x in p {
        if x > 0.0 {
            s += x * (l * x).ln();
        }
    }
    s
}
