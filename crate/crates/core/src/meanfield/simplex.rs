//! Rate function for edge-colored homomorphism counts: minimize the total
//! KL cost of per-edge color distributions subject to the count reaching
//! `u` times its uniform expectation.
//!
//! The solver runs penalized entropic mirror descent from several starting
//! points, projects each result back to exact feasibility along the segment
//! toward a feasible clique anchor, and reports the cheapest feasible point
//! it saw — never worse than the closed-form clique ansatz or the best point
//! of the one-parameter symmetric family, both of which participate as
//! candidates (and as descent seeds; the pure centroid is a color-symmetric
//! stationary point the descent cannot leave on its own).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::functionals::{
    edge_count, expected_mono_hom, mono_hom_count_flat, mono_hom_gradient_flat, ColorArray,
    PatternGraph,
};
use crate::util::{stream_id, StreamPurpose};
use crate::Real;

use super::{
    kl_vs_uniform_colors, project_to_feasible, MFConfig, RatePoint, RateResult,
    FEASIBILITY_REL_TOL,
};

/// Weight floor keeping logarithms finite during mirror descent.
const WEIGHT_FLOOR: Real = 1e-18;
/// Clamp on mirror-step exponents.
const EXP_CLAMP: Real = 50.0;

/// The clique ansatz: color every edge inside an `r`-clique deterministically
/// with the first color, leave the rest uniform, and take the smallest `r`
/// whose exact count reaches the target.
#[derive(Debug, Clone)]
pub struct CliqueAnsatz {
    /// Smallest sufficient clique size.
    pub r: usize,
    /// KL cost `C(r,2) log l`.
    pub value: Real,
    /// The ansatz point itself.
    pub point: ColorArray<Real>,
    /// Exact count at the point.
    pub attained: Real,
}

/// Scans clique sizes for the cheapest deterministic-clique point meeting
/// `T >= u E[T]`, evaluating the count exactly at every candidate.
pub fn clique_ansatz_bound(
    h: &PatternGraph,
    n: usize,
    l: usize,
    u: Real,
) -> Result<CliqueAnsatz> {
    if n < 2 {
        return Err(Error::Domain(format!("need at least 2 vertices, got {n}")));
    }
    if l < 1 {
        return Err(Error::Domain("need at least one color".into()));
    }
    let e_total: Real = expected_mono_hom(h, n, l)?;
    let target = u * e_total;
    let relaxed = target - target.abs() * FEASIBILITY_REL_TOL;
    for r in 2..=n {
        let mut point = ColorArray::centroid(n, l)?;
        let mut mono = vec![0.0; l];
        mono[0] = 1.0;
        for i in 0..r {
            for j in (i + 1)..r {
                point.set(i, j, &mono);
            }
        }
        let attained = mono_hom_count_flat(h, n, l, point.data())?;
        if attained >= relaxed {
            let pairs = (r * (r - 1) / 2) as Real;
            return Ok(CliqueAnsatz {
                r,
                value: pairs * (l as Real).ln(),
                point,
                attained,
            });
        }
    }
    Err(Error::Domain(format!(
        "count target {target:.6e} unreachable even with the full graph monochromatic"
    )))
}

/// Total KL cost of a flat color layout against per-edge uniform colors.
fn cost_flat(l: usize, data: &[Real]) -> Real {
    data.chunks(l).map(kl_vs_uniform_colors).sum()
}

/// Cheapest feasible point of the one-parameter symmetric family: every edge
/// gives weight `p` to the first color and splits the remainder evenly. The
/// KL cost is increasing in `p` above the centroid, so the smallest feasible
/// `p` is the family's optimum; it is located by a grid pass and sharpened by
/// bisection. `None` when even the monochromatic endpoint misses the target.
fn symmetric_family_candidate(
    h: &PatternGraph,
    n: usize,
    l: usize,
    target: Real,
) -> Option<Vec<Real>> {
    debug_assert!(l >= 2);
    let n_edges = edge_count(n);
    let fill = |p: Real| -> Vec<Real> {
        let rest = (1.0 - p) / (l as Real - 1.0);
        let mut y = vec![rest; n_edges * l];
        for e in 0..n_edges {
            y[e * l] = p;
        }
        y
    };
    let feasible = |p: Real| -> bool {
        mono_hom_count_flat(h, n, l, &fill(p))
            .map(|c| c >= target)
            .unwrap_or(false)
    };
    const GRID: usize = 512;
    let base = 1.0 / l as Real;
    let at = |k: usize| base + (1.0 - base) * k as Real / GRID as Real;
    let mut lo = base;
    let mut hi = None;
    for k in 1..=GRID {
        let p = at(k);
        if feasible(p) {
            hi = Some(p);
            break;
        }
        lo = p;
    }
    let mut hi = hi?;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(fill(hi))
}

/// One restart of penalized mirror descent. Returns the final iterate and
/// the number of descent steps taken.
fn mirror_descent_restart(
    h: &PatternGraph,
    n: usize,
    l: usize,
    target: Real,
    start: Vec<Real>,
    cfg: &MFConfig,
) -> Result<(Vec<Real>, usize)> {
    let violation = |count: Real| -> Real {
        if target <= 0.0 {
            0.0
        } else {
            ((target - count) / target).max(0.0)
        }
    };
    let merit = |y: &[Real], w: Real| -> Result<Real> {
        let count = mono_hom_count_flat(h, n, l, y)?;
        let v = violation(count);
        Ok(cost_flat(l, y) + w * v * v)
    };
    let mut y = start;
    let mut steps = 0;
    let mut w = cfg.penalty_initial;
    for _round in 0..cfg.penalty_rounds {
        let mut eta = cfg.step;
        let mut current = merit(&y, w)?;
        for _ in 0..cfg.inner_iters {
            let count = mono_hom_count_flat(h, n, l, &y)?;
            let v = violation(count);
            let count_grad = if v > 0.0 {
                Some(mono_hom_gradient_flat(h, n, l, &y)?)
            } else {
                None
            };
            let lf = l as Real;
            let grad: Vec<Real> = y
                .iter()
                .enumerate()
                .map(|(idx, &yi)| {
                    let mut g = (lf * yi.max(WEIGHT_FLOOR)).ln() + 1.0;
                    if let Some(cg) = &count_grad {
                        g += 2.0 * w * v * (-cg[idx] / target);
                    }
                    g
                })
                .collect();
            // mirror step with per-edge renormalization, backtracking on the
            // merit value
            let mut improved = false;
            for _try in 0..40 {
                let mut cand = vec![0.0; y.len()];
                for e in 0..edge_count(n) {
                    let mut sum = 0.0;
                    for s in 0..l {
                        let idx = e * l + s;
                        let exp = (-eta * grad[idx]).clamp(-EXP_CLAMP, EXP_CLAMP);
                        let val = (y[idx].max(WEIGHT_FLOOR)) * exp.exp();
                        cand[idx] = val;
                        sum += val;
                    }
                    for s in 0..l {
                        cand[e * l + s] = (cand[e * l + s] / sum).max(WEIGHT_FLOOR);
                    }
                }
                let m = merit(&cand, w)?;
                if m < current {
                    y = cand;
                    current = m;
                    improved = true;
                    eta = (eta * 1.3).min(cfg.step * 10.0);
                    break;
                }
                eta *= 0.5;
                if eta < 1e-14 {
                    break;
                }
            }
            steps += 1;
            if !improved {
                break; // stationary for this penalty weight
            }
        }
        w *= cfg.penalty_growth;
    }
    Ok((y, steps))
}

/// Minimizes `sum_e KL(y_e || uniform)` over per-edge color distributions
/// subject to the homomorphism count of `h` reaching `u` times its uniform
/// expectation. Requires `u >= 1` (upper-tail regime).
pub fn rate_function_simplex(
    h: &PatternGraph,
    n: usize,
    l: usize,
    u: Real,
    cfg: &MFConfig,
) -> Result<RateResult> {
    if u < 1.0 {
        return Err(Error::Domain(format!(
            "rate solver covers the upper tail only (u >= 1), got u = {u}"
        )));
    }
    if n < 2 {
        return Err(Error::Domain(format!("need at least 2 vertices, got {n}")));
    }
    if l < 1 {
        return Err(Error::Domain("need at least one color".into()));
    }
    let n_edges = edge_count(n);
    let e_total: Real = expected_mono_hom(h, n, l)?;
    let target = u * e_total;

    // At ratio one the uniform coloring's expected count is exactly the
    // baseline, so the rate is zero at zero KL; returning early keeps the
    // value free of the rounding noise a solver pass would introduce. The
    // attained figure is that expectation — for patterns where a vertex map
    // can reuse a host edge, the count polynomial evaluated at the centroid
    // sits strictly below it, but the centroid *measure* still meets the
    // constraint.
    if u <= 1.0 && e_total > 0.0 {
        let point = ColorArray::centroid(n, l)?;
        return Ok(RateResult {
            value: 0.0,
            point: RatePoint::Colors(point),
            feasible: true,
            constraint_violation: 0.0,
            constraint_target: target,
            attained: e_total,
            ansatz_value: 0.0,
            iterations: 0,
            restarts_used: 0,
            per_restart: vec![],
            boundary_distance: 1.0 / l as Real,
        });
    }

    // Degenerate cases first: an identically-zero count (the pattern does
    // not embed) makes every point feasible at zero cost, and a single color
    // pins the point entirely.
    if e_total <= 0.0 {
        let point = ColorArray::centroid(n, l)?;
        return Ok(RateResult {
            value: 0.0,
            point: RatePoint::Colors(point),
            feasible: true,
            constraint_violation: 0.0,
            constraint_target: target,
            attained: 0.0,
            ansatz_value: 0.0,
            iterations: 0,
            restarts_used: 0,
            per_restart: vec![],
            boundary_distance: 0.0,
        });
    }
    if l == 1 {
        let point = ColorArray::centroid(n, 1)?;
        let attained = mono_hom_count_flat(h, n, 1, point.data())?;
        let feasible = attained >= target - target.abs() * FEASIBILITY_REL_TOL;
        return Ok(RateResult {
            value: if feasible { 0.0 } else { Real::INFINITY },
            point: RatePoint::Colors(point),
            feasible,
            constraint_violation: ((target - attained) / target).max(0.0),
            constraint_target: target,
            attained,
            ansatz_value: if feasible { 0.0 } else { Real::INFINITY },
            iterations: 0,
            restarts_used: 0,
            per_restart: vec![],
            boundary_distance: 0.0,
        });
    }

    let ansatz = clique_ansatz_bound(h, n, l, u)?;
    let anchor = ansatz.point.data().to_vec();
    let centroid = ColorArray::centroid(n, l)?.data().to_vec();
    let symmetric = symmetric_family_candidate(h, n, l, target);
    let count_of = |y: &[Real]| mono_hom_count_flat(h, n, l, y).unwrap_or(Real::NEG_INFINITY);

    let mut seeds: Vec<Vec<Real>> = vec![centroid.clone()];
    if let Some(sym) = &symmetric {
        seeds.push(sym.clone());
    }
    seeds.push(
        centroid
            .iter()
            .zip(&anchor)
            .map(|(c, a)| 0.5 * c + 0.5 * a)
            .collect(),
    );

    let restarts = cfg.restarts.max(1);
    let outcomes: Vec<(usize, Result<(Vec<Real>, usize)>)> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let start = match seeds.get(r) {
                Some(seed) => seed.clone(),
                None => {
                    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                    rng.set_stream(stream_id(StreamPurpose::Restart, r as u64));
                    let mut y = vec![0.0; n_edges * l];
                    for e in 0..n_edges {
                        let mut sum = 0.0;
                        for s in 0..l {
                            let v = 0.02 + 0.98 * rng.random::<f64>();
                            y[e * l + s] = v;
                            sum += v;
                        }
                        for s in 0..l {
                            y[e * l + s] /= sum;
                        }
                    }
                    y
                }
            };
            (r, mirror_descent_restart(h, n, l, target, start, cfg))
        })
        .collect();

    // Project every restart to feasibility and collect candidate points.
    let mut per_restart = vec![Real::NAN; restarts];
    let mut candidates: Vec<(Real, Vec<Real>, usize)> = Vec::new();
    for (r, out) in outcomes {
        let (y, steps) = out?;
        if let Some((proj, _)) = project_to_feasible(&count_of, &y, &anchor, target) {
            let value = cost_flat(l, &proj);
            per_restart[r] = value;
            candidates.push((value, proj, steps));
        }
    }
    if let Some(sym) = symmetric {
        candidates.push((cost_flat(l, &sym), sym, 0));
    }
    candidates.push((ansatz.value, anchor.clone(), 0));

    let (value, point_data, iterations) = candidates
        .into_iter()
        .min_by(|a, b| a.0.partial_cmp(&b.0).expect("finite costs"))
        .expect("the ansatz always provides a candidate");

    let attained = mono_hom_count_flat(h, n, l, &point_data)?;
    let feasible = attained >= target - target.abs() * FEASIBILITY_REL_TOL;
    let boundary_distance = point_data
        .iter()
        .map(|&x| x.min(1.0 - x))
        .fold(Real::INFINITY, Real::min);
    Ok(RateResult {
        value,
        point: RatePoint::Colors(ColorArray::new(n, l, point_data)?),
        feasible,
        constraint_violation: ((target - attained) / target).max(0.0),
        constraint_target: target,
        attained,
        ansatz_value: ansatz.value,
        iterations,
        restarts_used: restarts,
        per_restart,
        boundary_distance,
    })
}
