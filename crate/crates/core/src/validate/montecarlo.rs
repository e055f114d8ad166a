//! Monte Carlo estimation of tail probabilities `mu(f >= t)`: direct
//! sampling, exponentially tilted importance sampling, and the replayed
//! sample-path lower bound.
//!
//! Sampling is batched and deterministic: batch `b` draws from the dedicated
//! stream `stream_id(MonteCarlo, b)` of the master seed, so results are
//! independent of thread count, and an importance run with all-zero tilts
//! reproduces the direct run bit for bit (same streams, same draw sequence,
//! unit weights).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measures::{exponential_tilt, kl_divergence, sample_product_into};
use crate::util::{stream_id, KahanSum, StreamPurpose};
use crate::{Functional, LinearTilt, ProductMeasure, Real, SiteVec};

/// Effective sample sizes below this flag the importance run as degenerate.
const ESS_FLOOR: Real = 10.0;

/// Direct Monte Carlo estimate of a tail probability.
#[derive(Debug, Clone)]
pub struct McEstimate {
    pub p_hat: Real,
    /// Standard error from the spread of per-batch means.
    pub std_error: Real,
    pub hits: u64,
    pub n_samples: usize,
    pub n_batches: usize,
    pub batch_means: Vec<Real>,
}

/// Importance-sampling estimate of the same tail probability.
#[derive(Debug, Clone)]
pub struct IsEstimate {
    pub p_hat: Real,
    pub std_error: Real,
    /// Effective sample size `(sum w)^2 / sum w^2` of the event-restricted
    /// weights — the draws that actually enter the estimator.  Off-event
    /// draws are excluded: under a strong tilt they carry enormous
    /// `d mu / d nu` yet never touch the tail estimate.
    pub ess: Real,
    /// Raw (unweighted) event count under the proposal.
    pub hits: u64,
    pub n_samples: usize,
    pub n_batches: usize,
    /// Total KL divergence of the proposal from the base measure.
    pub kl_sum: Real,
    /// Set when `ess` fell below the degeneracy floor; the estimate and its
    /// standard error are then untrustworthy.
    pub degenerate: bool,
    pub batch_means: Vec<Real>,
    /// Largest log importance weight among event draws (`-inf` if none hit).
    pub max_log_weight: Real,
}

/// Replayed lower bound on `log mu(f >= t)` from a tilted sample.
#[derive(Debug, Clone)]
pub struct ReplayBound {
    /// Total KL divergence of the proposal from the base measure.
    pub kl_sum: Real,
    /// Quantile of the centered log-likelihood ratio used as slack.
    pub eps0n: Real,
    /// Proposal probability of the event intersected with the good-weight
    /// set; the bound needs at least one half here.
    pub gamma_prime_prob: Real,
    /// `-kl_sum - eps0n - log 2`, a lower bound on the log tail probability
    /// whenever `valid`.
    pub lower_bound: Real,
    pub valid: bool,
    pub quantile: Real,
    pub n_samples: usize,
}

fn check_batching(n_batches: usize, batch_size: usize) -> Result<()> {
    if n_batches < 2 {
        return Err(Error::Domain(format!(
            "need at least 2 batches for a standard error, got {n_batches}"
        )));
    }
    if batch_size == 0 {
        return Err(Error::Domain("batch size must be positive".into()));
    }
    Ok(())
}

/// Standard error of the grand mean from per-batch means.
fn batch_std_error(batch_means: &[Real], grand: Real) -> Real {
    let b = batch_means.len() as Real;
    let var: Real = batch_means.iter().map(|m| (m - grand) * (m - grand)).sum();
    (var / (b - 1.0) / b).sqrt()
}

/// Estimates `mu(f >= threshold)` by direct sampling: `n_batches` batches of
/// `batch_size` draws, integer hit counts per batch.
pub fn mc_tail_probability(
    f: &Functional,
    mu: &ProductMeasure,
    threshold: Real,
    n_batches: usize,
    batch_size: usize,
    seed: u64,
) -> Result<McEstimate> {
    super::check_shapes(f, mu)?;
    check_batching(n_batches, batch_size)?;
    let dims = f.site_dims();
    let outcomes: Vec<(usize, Result<u64>)> = (0..n_batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream_id(StreamPurpose::MonteCarlo, b as u64));
            let mut x = SiteVec::zeros(&dims);
            let mut hits = 0u64;
            for _ in 0..batch_size {
                sample_product_into(mu, &mut rng, x.data_mut());
                match f.value(&x) {
                    Ok(v) => {
                        if v >= threshold {
                            hits += 1;
                        }
                    }
                    Err(e) => return (b, Err(e)),
                }
            }
            (b, Ok(hits))
        })
        .collect();
    let mut batch_means = vec![0.0; n_batches];
    let mut hits = 0u64;
    for (b, out) in outcomes {
        let h = out?;
        hits += h;
        batch_means[b] = h as Real / batch_size as Real;
    }
    let n_samples = n_batches * batch_size;
    let p_hat = hits as Real / n_samples as Real;
    Ok(McEstimate {
        p_hat,
        std_error: batch_std_error(&batch_means, p_hat),
        hits,
        n_samples,
        n_batches,
        batch_means,
    })
}

/// The tilted proposal, its per-site log-normalizers, and its total KL from
/// the base measure. All-zero tilts short-circuit to the base measure itself
/// so the draw stream matches direct sampling exactly.
fn build_proposal(
    mu: &ProductMeasure,
    tilts: &[LinearTilt],
) -> Result<(ProductMeasure, Vec<Real>, Real, bool)> {
    if tilts.len() != mu.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} tilts for {} sites",
            tilts.len(),
            mu.len()
        )));
    }
    let untilted = tilts.iter().all(|t| t.coeffs.iter().all(|&c| c == 0.0));
    if untilted {
        return Ok((mu.clone(), vec![0.0; mu.len()], 0.0, true));
    }
    let mut sites = Vec::with_capacity(mu.len());
    let mut log_normalizers = Vec::with_capacity(mu.len());
    let mut kl_sum = 0.0;
    for (site, tilt) in mu.sites().iter().zip(tilts) {
        let t = exponential_tilt(site, tilt)?;
        kl_sum += kl_divergence(&t.measure, site)?;
        log_normalizers.push(t.log_normalizer);
        sites.push(t.measure);
    }
    Ok((ProductMeasure::new(sites)?, log_normalizers, kl_sum, false))
}

/// Log-likelihood ratio `log(d nu / d mu)(x) = sum_i (d_i(x_i) + lambda_i)`
/// of the tilted proposal at a sampled configuration.
fn log_ratio(tilts: &[LinearTilt], log_normalizers: &[Real], x: &SiteVec) -> Real {
    let mut total = 0.0;
    for i in 0..log_normalizers.len() {
        total += tilts[i].apply(x.site(i)) + log_normalizers[i];
    }
    total
}

/// Estimates `mu(f >= threshold)` by importance sampling from the
/// exponentially tilted proposal `d nu_i / d mu_i ∝ e^{<d_i, x_i>}`; each
/// draw is reweighted by `d mu / d nu`. With all-zero tilts this reproduces
/// [`mc_tail_probability`] bit for bit.
pub fn tilted_importance_estimate(
    f: &Functional,
    mu: &ProductMeasure,
    tilts: &[LinearTilt],
    threshold: Real,
    n_batches: usize,
    batch_size: usize,
    seed: u64,
) -> Result<IsEstimate> {
    super::check_shapes(f, mu)?;
    check_batching(n_batches, batch_size)?;
    let (nu, log_normalizers, kl_sum, untilted) = build_proposal(mu, tilts)?;
    let dims = f.site_dims();
    struct Batch {
        sum_we: Real,
        sum_w: Real,
        sum_w2: Real,
        hits: u64,
        max_log_w: Real,
    }
    let outcomes: Vec<(usize, Result<Batch>)> = (0..n_batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream_id(StreamPurpose::MonteCarlo, b as u64));
            let mut x = SiteVec::zeros(&dims);
            let mut sum_we = KahanSum::default();
            let mut sum_w = KahanSum::default();
            let mut sum_w2 = KahanSum::default();
            let mut hits = 0u64;
            let mut max_log_w = Real::NEG_INFINITY;
            for _ in 0..batch_size {
                sample_product_into(&nu, &mut rng, x.data_mut());
                let log_w = if untilted {
                    0.0
                } else {
                    -log_ratio(tilts, &log_normalizers, &x)
                };
                let w = log_w.exp();
                match f.value(&x) {
                    Ok(v) => {
                        if v >= threshold {
                            hits += 1;
                            sum_we.add(w);
                            sum_w.add(w);
                            sum_w2.add(w * w);
                            max_log_w = max_log_w.max(log_w);
                        }
                    }
                    Err(e) => return (b, Err(e)),
                }
            }
            (
                b,
                Ok(Batch {
                    sum_we: sum_we.value(),
                    sum_w: sum_w.value(),
                    sum_w2: sum_w2.value(),
                    hits,
                    max_log_w,
                }),
            )
        })
        .collect();
    let mut batch_means = vec![0.0; n_batches];
    let mut hits = 0u64;
    let mut total_we = 0.0;
    let mut total_w = 0.0;
    let mut total_w2 = 0.0;
    let mut max_log_weight = Real::NEG_INFINITY;
    for (b, out) in outcomes {
        let batch = out?;
        batch_means[b] = batch.sum_we / batch_size as Real;
        hits += batch.hits;
        total_we += batch.sum_we;
        total_w += batch.sum_w;
        total_w2 += batch.sum_w2;
        max_log_weight = max_log_weight.max(batch.max_log_w);
    }
    let n_samples = n_batches * batch_size;
    let p_hat = total_we / n_samples as Real;
    let ess = if total_w2 > 0.0 {
        total_w * total_w / total_w2
    } else {
        0.0
    };
    Ok(IsEstimate {
        p_hat,
        std_error: batch_std_error(&batch_means, p_hat),
        ess,
        hits,
        n_samples,
        n_batches,
        kl_sum,
        degenerate: ess < ESS_FLOOR,
        batch_means,
        max_log_weight,
    })
}

/// Replays a tilted sample into a lower bound on `log mu(f >= threshold)`:
///
/// ```text
/// mu(f >= t)  >=  nu(Gamma') e^{-KL - eps0n}  >=  (1/2) e^{-KL - eps0n}
/// Gamma' = {f >= t} ∩ {log(d nu/d mu) <= KL + eps0n}
/// ```
///
/// with `eps0n` the requested quantile of the centered log-likelihood ratio
/// under the proposal. The reported bound is valid only when the estimated
/// `nu(Gamma')` reaches one half (`valid`); with an over-tilted proposal
/// concentrating well past the threshold this is easy to arrange.
pub fn replay_lower_bound(
    f: &Functional,
    mu: &ProductMeasure,
    tilts: &[LinearTilt],
    threshold: Real,
    quantile: Real,
    n_batches: usize,
    batch_size: usize,
    seed: u64,
) -> Result<ReplayBound> {
    super::check_shapes(f, mu)?;
    check_batching(n_batches, batch_size)?;
    if !(quantile > 0.0 && quantile < 1.0) {
        return Err(Error::Domain(format!(
            "quantile must lie in (0,1), got {quantile}"
        )));
    }
    let (nu, log_normalizers, kl_sum, untilted) = build_proposal(mu, tilts)?;
    let dims = f.site_dims();
    let outcomes: Vec<(usize, Result<Vec<(Real, bool)>>)> = (0..n_batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream_id(StreamPurpose::MonteCarlo, b as u64));
            let mut x = SiteVec::zeros(&dims);
            let mut rows = Vec::with_capacity(batch_size);
            for _ in 0..batch_size {
                sample_product_into(&nu, &mut rng, x.data_mut());
                let delta = if untilted {
                    0.0
                } else {
                    log_ratio(tilts, &log_normalizers, &x) - kl_sum
                };
                match f.value(&x) {
                    Ok(v) => rows.push((delta, v >= threshold)),
                    Err(e) => return (b, Err(e)),
                }
            }
            (b, Ok(rows))
        })
        .collect();
    let mut rows = Vec::with_capacity(n_batches * batch_size);
    for (_b, out) in outcomes {
        rows.extend(out?);
    }
    let n = rows.len();
    let mut deltas: Vec<Real> = rows.iter().map(|&(d, _)| d).collect();
    deltas.sort_by(|a, b| a.partial_cmp(b).expect("finite log ratios"));
    let idx = ((quantile * n as Real).ceil() as usize).clamp(1, n) - 1;
    let eps0n = deltas[idx].max(0.0);
    let good = rows.iter().filter(|&&(d, e)| e && d <= eps0n).count();
    let gamma_prime_prob = good as Real / n as Real;
    let valid = gamma_prime_prob >= 0.5;
    Ok(ReplayBound {
        kl_sum,
        eps0n,
        gamma_prime_prob,
        lower_bound: -kl_sum - eps0n - std::f64::consts::LN_2,
        valid,
        quantile,
        n_samples: n,
    })
}
