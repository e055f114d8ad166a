//! Site measures, exponential tilting, and KL divergence.
//!
//! A *site measure* is a probability measure on a compact subset of `R^d`:
//! either finitely supported (explicit atoms and weights) or the truncated
//! exponential family on `(0,1)` with density
//!
//! ```text
//!     p_lambda(z) = lambda e^{-lambda z} / (1 - e^{-lambda}),   z in (0,1),
//! ```
//!
//! which degenerates to the uniform density at `lambda = 0`. The closed forms
//! for its mean and its KL divergence against the uniform measure are
//!
//! ```text
//!     mean(lambda) = 1/lambda - 1/(e^lambda - 1)
//!     kl(lambda)   = -1 + lambda e^-lambda/(1-e^-lambda) + log(lambda/(1-e^-lambda))
//! ```
//!
//! both evaluated by series below `|lambda| < 1e-4` to dodge the cancellation
//! in the direct expressions.
//!
//! Exponential tilting by a linear statistic `d(z) = <d, z>` maps a measure
//! `mu` to `d nu / d mu = e^{d(z)} / integral e^d dmu`, reported together with
//! the log-normalizer `lambda(p) = -log integral e^d dmu` so that the identity
//! `KL(nu || mu) = lambda(p) + d(p)` (with `p = mean(nu)`) is available to
//! callers and tests. Among all measures with a given mean, the linear tilt
//! achieving that mean minimizes KL against `mu`; the optimizers in
//! [`crate::meanfield`] lean on exactly that fact.

use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::{real, Scalar};
use crate::util::{dot, structural_tol, LogSumExp};

/// Threshold below which the truncated-exponential closed forms switch to
/// their series expansions.
const SERIES_CUTOFF: f64 = 1e-4;

/// Residual tolerance for [`lambda_for_mean`] at `f64`.
const LAMBDA_TOL: f64 = 1e-12;

/// Iteration cap for [`lambda_for_mean`] (bracket growth plus bisection).
const LAMBDA_MAX_ITER: usize = 200;

/// A probability measure on a compact subset of `R^d` attached to one site.
#[derive(Debug, Clone, PartialEq)]
pub enum SiteMeasure<F> {
    /// Finitely supported measure: `atoms[i]` is a point in `R^d` carrying
    /// `weights[i]`. Weights are nonnegative and sum to one within the
    /// structural tolerance.
    FiniteSupport {
        atoms: Vec<Vec<F>>,
        weights: Vec<F>,
    },
    /// Truncated exponential on `(0,1)` with rate `lambda` (`0` = uniform).
    TruncatedExponential { lambda: F },
}

/// Linear statistic `d(z) = <coeffs, z>` used as a tilt exponent.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearTilt<F> {
    pub coeffs: Vec<F>,
}

impl<F: Scalar> LinearTilt<F> {
    pub fn new(coeffs: Vec<F>) -> Self {
        LinearTilt { coeffs }
    }

    /// The zero tilt in `R^dim` (tilting by it is the identity).
    pub fn zero(dim: usize) -> Self {
        LinearTilt {
            coeffs: vec![F::zero(); dim],
        }
    }

    /// Evaluates `d(z)`.
    pub fn apply(&self, z: &[F]) -> F {
        dot(&self.coeffs, z)
    }
}

/// Product of independent site measures.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductMeasure<F> {
    sites: Vec<SiteMeasure<F>>,
}

/// Result of an exponential tilt: the tilted measure and the log-normalizer
/// `lambda(p) = -log integral e^d dmu`.
#[derive(Debug, Clone)]
pub struct Tilted<F> {
    pub measure: SiteMeasure<F>,
    pub log_normalizer: F,
}

impl<F: Scalar> SiteMeasure<F> {
    /// Builds a finitely supported measure, validating dimensions, weight
    /// positivity, and normalization (`|sum - 1| <= 1e-12` at `f64`).
    pub fn finite(atoms: Vec<Vec<F>>, weights: Vec<F>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidMeasure("empty support".into()));
        }
        if atoms.len() != weights.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} atoms but {} weights",
                atoms.len(),
                weights.len()
            )));
        }
        let d = atoms[0].len();
        if d == 0 {
            return Err(Error::InvalidMeasure("zero-dimensional atoms".into()));
        }
        for (i, a) in atoms.iter().enumerate() {
            if a.len() != d {
                return Err(Error::InvalidMeasure(format!(
                    "atom {i} has dimension {} != {d}",
                    a.len()
                )));
            }
            if a.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidMeasure(format!("atom {i} is not finite")));
            }
        }
        let mut sum = F::zero();
        for (i, w) in weights.iter().enumerate() {
            if !w.is_finite() || *w < F::zero() {
                return Err(Error::InvalidMeasure(format!(
                    "weight {i} = {w} is negative or not finite"
                )));
            }
            sum += *w;
        }
        if (sum - F::one()).abs() > structural_tol::<F>() {
            return Err(Error::InvalidMeasure(format!(
                "weights sum to {sum}, not 1"
            )));
        }
        Ok(SiteMeasure::FiniteSupport { atoms, weights })
    }

    /// Builds a finitely supported measure from nonnegative raw weights,
    /// dividing by their sum. Used where weights come from quadrature rules
    /// and are only normalized up to the rule's own accuracy.
    pub fn finite_renormalized(atoms: Vec<Vec<F>>, weights: Vec<F>) -> Result<Self> {
        let mut sum = F::zero();
        for w in &weights {
            if !w.is_finite() || *w < F::zero() {
                return Err(Error::InvalidMeasure(
                    "renormalization requires finite nonnegative weights".into(),
                ));
            }
            sum += *w;
        }
        if sum <= F::zero() {
            return Err(Error::InvalidMeasure("total weight is zero".into()));
        }
        let weights = weights.into_iter().map(|w| w / sum).collect();
        SiteMeasure::finite(atoms, weights)
    }

    /// Truncated exponential on `(0,1)` with the given rate.
    pub fn truncated_exponential(lambda: F) -> Result<Self> {
        if !lambda.is_finite() {
            return Err(Error::InvalidMeasure(format!(
                "lambda = {lambda} is not finite"
            )));
        }
        Ok(SiteMeasure::TruncatedExponential { lambda })
    }

    /// Uniform measure on the given atoms.
    pub fn uniform_atoms(atoms: Vec<Vec<F>>) -> Result<Self> {
        let k = atoms.len();
        if k == 0 {
            return Err(Error::InvalidMeasure("empty support".into()));
        }
        let w = F::one() / real_usize::<F>(k);
        SiteMeasure::finite(atoms, vec![w; k])
    }

    /// Uniform measure on `{0, 1}` in `R^1`.
    pub fn uniform_bit() -> Self {
        SiteMeasure::uniform_atoms(vec![vec![F::zero()], vec![F::one()]])
            .expect("static support is valid")
    }

    /// Uniform measure on `{-1, +1}` in `R^1`.
    pub fn uniform_sign() -> Self {
        SiteMeasure::uniform_atoms(vec![vec![-F::one()], vec![F::one()]])
            .expect("static support is valid")
    }

    /// Uniform measure on the `l` vertices of the color simplex in `R^l`.
    pub fn uniform_colors(l: usize) -> Result<Self> {
        if l == 0 {
            return Err(Error::InvalidMeasure("zero colors".into()));
        }
        let atoms = (0..l)
            .map(|s| {
                let mut e = vec![F::zero(); l];
                e[s] = F::one();
                e
            })
            .collect();
        SiteMeasure::uniform_atoms(atoms)
    }

    /// Uniform measure on `(0,1)` (truncated exponential at rate zero).
    pub fn unit_uniform() -> Self {
        SiteMeasure::TruncatedExponential { lambda: F::zero() }
    }

    /// Ambient dimension of the support.
    pub fn dim(&self) -> usize {
        match self {
            SiteMeasure::FiniteSupport { atoms, .. } => atoms[0].len(),
            SiteMeasure::TruncatedExponential { .. } => 1,
        }
    }

    /// Atom list, if finitely supported.
    pub fn atoms(&self) -> Option<&[Vec<F>]> {
        match self {
            SiteMeasure::FiniteSupport { atoms, .. } => Some(atoms),
            SiteMeasure::TruncatedExponential { .. } => None,
        }
    }

    /// Weight list, if finitely supported.
    pub fn weights(&self) -> Option<&[F]> {
        match self {
            SiteMeasure::FiniteSupport { weights, .. } => Some(weights),
            SiteMeasure::TruncatedExponential { .. } => None,
        }
    }

    /// Rate parameter, if truncated exponential.
    pub fn lambda(&self) -> Option<F> {
        match self {
            SiteMeasure::FiniteSupport { .. } => None,
            SiteMeasure::TruncatedExponential { lambda } => Some(*lambda),
        }
    }

    /// Whether two measures share the same structural support: identical atom
    /// lists (exact equality, including order) for finite support, or both
    /// truncated exponential. Tilting never changes the atom list, so this is
    /// the absolute-continuity precondition used by [`kl_divergence`].
    pub fn same_support(&self, other: &Self) -> bool {
        match (self, other) {
            (
                SiteMeasure::FiniteSupport { atoms: a, .. },
                SiteMeasure::FiniteSupport { atoms: b, .. },
            ) => a == b,
            (
                SiteMeasure::TruncatedExponential { .. },
                SiteMeasure::TruncatedExponential { .. },
            ) => true,
            _ => false,
        }
    }
}

#[inline]
fn real_usize<F: Scalar>(n: usize) -> F {
    real(n as f64)
}

impl<F: Scalar> ProductMeasure<F> {
    pub fn new(sites: Vec<SiteMeasure<F>>) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::InvalidMeasure("product of zero sites".into()));
        }
        Ok(ProductMeasure { sites })
    }

    /// `n` iid copies of one site measure.
    pub fn iid(site: SiteMeasure<F>, n: usize) -> Result<Self> {
        ProductMeasure::new(vec![site; n])
    }

    pub fn sites(&self) -> &[SiteMeasure<F>] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// Per-site means.
    pub fn means(&self) -> Vec<Vec<F>> {
        self.sites.iter().map(mean).collect()
    }

    /// Sum of per-site KL divergences against another product measure with
    /// the same site structure.
    pub fn kl_sum(&self, base: &ProductMeasure<F>) -> Result<F> {
        if self.len() != base.len() {
            return Err(Error::DimensionMismatch(format!(
                "product measures have {} vs {} sites",
                self.len(),
                base.len()
            )));
        }
        let mut total = F::zero();
        for (nu, mu) in self.sites.iter().zip(base.sites.iter()) {
            total += kl_divergence(nu, mu)?;
        }
        Ok(total)
    }
}

/// Mean vector of a site measure.
pub fn mean<F: Scalar>(m: &SiteMeasure<F>) -> Vec<F> {
    match m {
        SiteMeasure::FiniteSupport { atoms, weights } => {
            let d = atoms[0].len();
            let mut out = vec![F::zero(); d];
            for (a, w) in atoms.iter().zip(weights) {
                for (o, x) in out.iter_mut().zip(a) {
                    *o += *w * *x;
                }
            }
            out
        }
        SiteMeasure::TruncatedExponential { lambda } => vec![mean_from_lambda(*lambda)],
    }
}

/// KL divergence `D(nu || mu)` between two site measures on the same support.
///
/// Returns `Ok(+inf)` when `nu` places mass where `mu` has none (the
/// absolute-continuity barrier), and `Err(NonFinite)` only on genuine numeric
/// breakdown, so the two conditions stay distinguishable. `0 log 0 = 0`.
pub fn kl_divergence<F: Scalar>(nu: &SiteMeasure<F>, mu: &SiteMeasure<F>) -> Result<F> {
    if !nu.same_support(mu) {
        return Err(Error::IncompatibleMeasures(
            "KL requires identical atom lists or matching continuous families".into(),
        ));
    }
    match (nu, mu) {
        (
            SiteMeasure::FiniteSupport { weights: p, .. },
            SiteMeasure::FiniteSupport { weights: q, .. },
        ) => {
            let mut sum = F::zero();
            for (pi, qi) in p.iter().zip(q) {
                if *pi == F::zero() {
                    continue;
                }
                if *qi == F::zero() {
                    return Ok(F::infinity());
                }
                sum += *pi * (*pi / *qi).ln();
            }
            if sum.is_finite() {
                Ok(sum)
            } else {
                Err(Error::NonFinite("finite-support KL sum".into()))
            }
        }
        (
            SiteMeasure::TruncatedExponential { lambda: l1 },
            SiteMeasure::TruncatedExponential { lambda: l2 },
        ) => {
            // E_nu[log p_{l1}(Z) - log p_{l2}(Z)] with log p_l(z) = log c(l) - l z.
            let v = log_norm_const(*l1) - log_norm_const(*l2)
                + (*l2 - *l1) * mean_from_lambda(*l1);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::NonFinite("truncated-exponential KL".into()))
            }
        }
        _ => unreachable!("same_support rules out mixed kinds"),
    }
}

/// Exponential tilt `d nu / d mu = e^{<d,z>} / integral e^{<d,.>} dmu`.
///
/// For finite support the new weights are computed in log space with max
/// subtraction, so coefficient magnitudes up to the `exp` overflow threshold
/// are safe. Tilting a truncated exponential by a scalar coefficient `t`
/// re-parameterizes the rate: `lambda -> lambda - t`.
pub fn exponential_tilt<F: Scalar>(mu: &SiteMeasure<F>, d: &LinearTilt<F>) -> Result<Tilted<F>> {
    if d.coeffs.len() != mu.dim() {
        return Err(Error::DimensionMismatch(format!(
            "tilt has dimension {}, measure has {}",
            d.coeffs.len(),
            mu.dim()
        )));
    }
    match mu {
        SiteMeasure::FiniteSupport { atoms, weights } => {
            let scores: Vec<F> = atoms
                .iter()
                .zip(weights)
                .map(|(a, w)| {
                    if *w == F::zero() {
                        F::neg_infinity()
                    } else {
                        w.ln() + d.apply(a)
                    }
                })
                .collect();
            let mut lse = LogSumExp::new();
            for &s in &scores {
                lse.add(s);
            }
            let log_integral = lse.value();
            if !log_integral.is_finite() {
                return Err(Error::NonFinite("tilt normalizer".into()));
            }
            let new_weights: Vec<F> = scores.iter().map(|s| (*s - log_integral).exp()).collect();
            Ok(Tilted {
                measure: SiteMeasure::FiniteSupport {
                    atoms: atoms.clone(),
                    weights: new_weights,
                },
                log_normalizer: -log_integral,
            })
        }
        SiteMeasure::TruncatedExponential { lambda } => {
            let theta = d.coeffs[0];
            let new_lambda = *lambda - theta;
            // integral e^{theta z} p_lambda dz = c(lambda) / c(lambda - theta).
            let log_normalizer = log_norm_const(new_lambda) - log_norm_const(*lambda);
            if !log_normalizer.is_finite() {
                return Err(Error::NonFinite("tilt normalizer".into()));
            }
            Ok(Tilted {
                measure: SiteMeasure::TruncatedExponential { lambda: new_lambda },
                log_normalizer,
            })
        }
    }
}

/// Mean of the tilted measure — same code path as
/// `mean(exponential_tilt(mu, d))`, so the two agree exactly.
pub fn tilt_mean<F: Scalar>(mu: &SiteMeasure<F>, d: &LinearTilt<F>) -> Result<Vec<F>> {
    Ok(mean(&exponential_tilt(mu, d)?.measure))
}

/// Mean of the truncated exponential at rate `lambda`:
/// `1/lambda - 1/(e^lambda - 1)`, extended continuously by `1/2` at zero.
/// Strictly decreasing, with range `(0,1)`.
pub fn mean_from_lambda<F: Scalar>(lambda: F) -> F {
    if lambda.abs() < real(SERIES_CUTOFF) {
        // 1/2 - lambda/12 + lambda^3/720 + O(lambda^5)
        let l2 = lambda * lambda;
        real::<F>(0.5) - lambda / real(12.0) + lambda * l2 / real(720.0)
    } else {
        lambda.recip() - lambda.exp_m1().recip()
    }
}

/// Log normalization constant `log c(lambda)` of the truncated exponential
/// density `p_lambda(z) = c(lambda) e^{-lambda z}`, with `c(0) = 1`.
pub fn log_norm_const<F: Scalar>(lambda: F) -> F {
    if lambda.abs() < real(SERIES_CUTOFF) {
        // lambda/2 - lambda^2/24 + lambda^4/2880 + O(lambda^6)
        let l2 = lambda * lambda;
        lambda / real(2.0) - l2 / real(24.0) + l2 * l2 / real(2880.0)
    } else if lambda > F::zero() {
        // c = lambda / (1 - e^-lambda)
        lambda.ln() - (-(-lambda).exp()).ln_1p()
    } else {
        // |1 - e^-lambda| = e^-lambda (1 - e^lambda) for lambda < 0
        (-lambda).ln() - (-lambda + (-lambda.exp()).ln_1p())
    }
}

/// KL divergence of the truncated exponential at rate `lambda` against the
/// uniform measure on `(0,1)`. Exactly zero at `lambda = 0`; series-evaluated
/// below the cutoff.
pub fn kl_from_lambda<F: Scalar>(lambda: F) -> F {
    if lambda.abs() < real(SERIES_CUTOFF) {
        // lambda^2/24 - lambda^4/960 + O(lambda^6)
        let l2 = lambda * lambda;
        l2 / real(24.0) - l2 * l2 / real(960.0)
    } else {
        // Exact identity: kl = log c(lambda) - lambda * mean(lambda).
        log_norm_const(lambda) - lambda * mean_from_lambda(lambda)
    }
}

/// Inverts [`mean_from_lambda`]: the rate whose truncated exponential has
/// mean `a` on `(0,1)`. `a = 1/2` maps to exactly zero; by the symmetry
/// `Z_lambda ~ 1 - Z_{-lambda}`, `lambda(1-a) = -lambda(a)`.
///
/// Safeguarded bisection: initial bracket `[-60, 60]`, grown geometrically
/// until it straddles the target, then bisected until the mean residual drops
/// below `1e-12` (at `f64`). The combined iteration cap is 200; exceeding it
/// is a convergence failure.
pub fn lambda_for_mean<F: Scalar>(a: F) -> Result<F> {
    if !(a > F::zero() && a < F::one()) {
        return Err(Error::Domain(format!("mean {a} outside (0,1)")));
    }
    let half = real::<F>(0.5);
    if a == half {
        return Ok(F::zero());
    }
    let tol = real::<F>(LAMBDA_TOL).max(F::epsilon() * real(4.0));
    let mut iter = 0usize;
    // mean_from_lambda is strictly decreasing: the root is right of points
    // with mean above `a` and left of points with mean below it.
    let mut lo = real::<F>(-60.0);
    let mut hi = real::<F>(60.0);
    while mean_from_lambda(hi) > a {
        lo = hi;
        hi = hi * real(2.0);
        iter += 1;
        if iter >= LAMBDA_MAX_ITER {
            return Err(Error::Convergence(format!(
                "bracket growth exhausted at mean {a}"
            )));
        }
    }
    while mean_from_lambda(lo) < a {
        hi = lo;
        lo = lo * real(2.0);
        iter += 1;
        if iter >= LAMBDA_MAX_ITER {
            return Err(Error::Convergence(format!(
                "bracket growth exhausted at mean {a}"
            )));
        }
    }
    loop {
        let mid = (lo + hi) / real(2.0);
        let fm = mean_from_lambda(mid);
        if (fm - a).abs() <= tol {
            return Ok(mid);
        }
        if fm > a {
            lo = mid;
        } else {
            hi = mid;
        }
        iter += 1;
        if iter >= LAMBDA_MAX_ITER {
            return Err(Error::Convergence(format!(
                "bisection cap reached at mean {a}, residual {}",
                (fm - a).abs()
            )));
        }
    }
}

/// KL divergence against the uniform measure of the unique truncated
/// exponential with mean `a`: `kl_from_lambda(lambda_for_mean(a))`.
/// Exactly zero at `a = 1/2`.
pub fn kl_truncexp<F: Scalar>(a: F) -> Result<F> {
    Ok(kl_from_lambda(lambda_for_mean(a)?))
}

/// Scalar tilt coefficient that moves a one-dimensional finite-support
/// measure to the given mean. The mean of the tilt is strictly increasing in
/// the coefficient, so a bracketed bisection applies; the target must lie in
/// the open interior of the support's convex hull.
pub fn tilt_for_mean_1d<F: Scalar>(mu: &SiteMeasure<F>, target: F, tol: F) -> Result<F> {
    if mu.dim() != 1 {
        return Err(Error::Domain(
            "tilt_for_mean_1d requires one-dimensional sites".into(),
        ));
    }
    let atoms = mu
        .atoms()
        .ok_or_else(|| Error::Domain("tilt_for_mean_1d requires finite support".into()))?;
    let lo_atom = atoms
        .iter()
        .map(|a| a[0])
        .fold(F::infinity(), |m, x| m.min(x));
    let hi_atom = atoms
        .iter()
        .map(|a| a[0])
        .fold(F::neg_infinity(), |m, x| m.max(x));
    if !(target > lo_atom && target < hi_atom) {
        return Err(Error::Domain(format!(
            "target mean {target} outside open hull ({lo_atom}, {hi_atom})"
        )));
    }
    let mean_at = |theta: F| -> Result<F> {
        Ok(tilt_mean(mu, &LinearTilt::new(vec![theta]))?[0])
    };
    let mut lo = -F::one();
    let mut hi = F::one();
    let mut grow = 0usize;
    while mean_at(hi)? < target {
        hi = hi * real(2.0);
        grow += 1;
        if grow > 80 {
            return Err(Error::Convergence("tilt bracket growth exhausted".into()));
        }
    }
    while mean_at(lo)? > target {
        lo = lo * real(2.0);
        grow += 1;
        if grow > 160 {
            return Err(Error::Convergence("tilt bracket growth exhausted".into()));
        }
    }
    for _ in 0..300 {
        let mid = (lo + hi) / real(2.0);
        let m = mean_at(mid)?;
        if (m - target).abs() <= tol {
            return Ok(mid);
        }
        if m < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Convergence("tilt bisection cap reached".into()))
}

/// Draws one point from the measure into `out` (length `dim`), consuming
/// exactly one uniform variate. Finite support uses a cumulative-weight scan;
/// the truncated exponential uses its inverse CDF,
/// `z = -log1p(u (e^{-lambda} - 1)) / lambda`, reduced to positive rates via
/// the symmetry `Z_lambda ~ 1 - Z_{-lambda}` so no branch can overflow.
pub fn sample_into<F: Scalar, R: Rng + ?Sized>(m: &SiteMeasure<F>, rng: &mut R, out: &mut [F]) {
    debug_assert_eq!(out.len(), m.dim());
    let u: f64 = rng.random();
    match m {
        SiteMeasure::FiniteSupport { atoms, weights } => {
            let u = real::<F>(u);
            let mut cum = F::zero();
            let mut chosen = None;
            for (a, w) in atoms.iter().zip(weights) {
                if *w == F::zero() {
                    continue;
                }
                cum += *w;
                if u < cum {
                    chosen = Some(a);
                    break;
                }
            }
            let atom = chosen.unwrap_or_else(|| {
                // Rounding pushed the cumulative total a hair below u: take the
                // last atom with positive weight.
                atoms
                    .iter()
                    .zip(weights)
                    .filter(|(_, w)| **w > F::zero())
                    .map(|(a, _)| a)
                    .next_back()
                    .expect("validated measure has positive total weight")
            });
            out.copy_from_slice(atom);
        }
        SiteMeasure::TruncatedExponential { lambda } => {
            out[0] = trunc_exp_inv_cdf(*lambda, real(u));
        }
    }
}

/// Inverse CDF of the truncated exponential; total over all finite rates.
pub fn trunc_exp_inv_cdf<F: Scalar>(lambda: F, u: F) -> F {
    if lambda.abs() < real(1e-12) {
        return u;
    }
    if lambda > F::zero() {
        trunc_exp_inv_cdf_pos(lambda, u)
    } else {
        F::one() - trunc_exp_inv_cdf_pos(-lambda, F::one() - u)
    }
}

#[inline]
fn trunc_exp_inv_cdf_pos<F: Scalar>(lambda: F, u: F) -> F {
    // F(z) = (1 - e^{-lambda z}) / (1 - e^{-lambda}); e^{-lambda} - 1 is in
    // (-1, 0] for positive rates, so log1p never sees an argument <= -1
    // except at u = 1 exactly, which maps to z = 1.
    -(u * (-lambda).exp_m1()).ln_1p() / lambda
}

/// One full product draw, flattened site by site into `out`.
pub fn sample_product_into<F: Scalar, R: Rng + ?Sized>(
    mu: &ProductMeasure<F>,
    rng: &mut R,
    out: &mut [F],
) {
    let mut offset = 0;
    for site in mu.sites() {
        let d = site.dim();
        sample_into(site, rng, &mut out[offset..offset + d]);
        offset += d;
    }
    debug_assert_eq!(offset, out.len());
}

// ---------------------------------------------------------------------------
// Serialization: one JSON record per measure, floats at 17 significant digits
// so the decimal text reproduces the exact f64 bit pattern on read-back.
// ---------------------------------------------------------------------------

/// Serializes a site measure to a single-line JSON record.
pub fn serialize_site<F: Scalar>(m: &SiteMeasure<F>) -> String {
    let g17 = |x: &F| crate::util::fmt_g17(x.to_f64().expect("scalar converts to f64"));
    match m {
        SiteMeasure::FiniteSupport { atoms, weights } => {
            let atoms_s: Vec<String> = atoms
                .iter()
                .map(|a| format!("[{}]", a.iter().map(g17).collect::<Vec<_>>().join(",")))
                .collect();
            let weights_s: Vec<String> = weights.iter().map(g17).collect();
            format!(
                "{{\"kind\":\"finite_support\",\"atoms\":[{}],\"weights\":[{}]}}",
                atoms_s.join(","),
                weights_s.join(",")
            )
        }
        SiteMeasure::TruncatedExponential { lambda } => {
            format!(
                "{{\"kind\":\"truncated_exponential\",\"lambda\":{}}}",
                g17(lambda)
            )
        }
    }
}

/// Parses a site measure record produced by [`serialize_site`].
pub fn parse_site(text: &str) -> Result<SiteMeasure<f64>> {
    let v: serde_json::Value = serde_json::from_str(text.trim())
        .map_err(|e| Error::Parse(format!("measure record: {e}")))?;
    let kind = v
        .get("kind")
        .and_then(|k| k.as_str())
        .ok_or_else(|| Error::Parse("measure record lacks string field 'kind'".into()))?;
    match kind {
        "finite_support" => {
            let atoms = v
                .get("atoms")
                .and_then(|a| a.as_array())
                .ok_or_else(|| Error::Parse("finite_support record lacks 'atoms'".into()))?
                .iter()
                .map(|row| {
                    row.as_array()
                        .ok_or_else(|| Error::Parse("atom is not an array".into()))?
                        .iter()
                        .map(|x| {
                            x.as_f64()
                                .ok_or_else(|| Error::Parse("atom entry is not a number".into()))
                        })
                        .collect::<Result<Vec<f64>>>()
                })
                .collect::<Result<Vec<Vec<f64>>>>()?;
            let weights = v
                .get("weights")
                .and_then(|w| w.as_array())
                .ok_or_else(|| Error::Parse("finite_support record lacks 'weights'".into()))?
                .iter()
                .map(|x| {
                    x.as_f64()
                        .ok_or_else(|| Error::Parse("weight is not a number".into()))
                })
                .collect::<Result<Vec<f64>>>()?;
            SiteMeasure::finite(atoms, weights)
        }
        "truncated_exponential" => {
            let lambda = v
                .get("lambda")
                .and_then(|l| l.as_f64())
                .ok_or_else(|| Error::Parse("truncated_exponential record lacks 'lambda'".into()))?;
            SiteMeasure::truncated_exponential(lambda)
        }
        other => Err(Error::Parse(format!("unknown measure kind '{other}'"))),
    }
}

/// Serializes a product measure as one site record per line.
pub fn serialize_product<F: Scalar>(mu: &ProductMeasure<F>) -> String {
    let mut out = String::new();
    for site in mu.sites() {
        out.push_str(&serialize_site(site));
        out.push('\n');
    }
    out
}

/// Parses a product measure written by [`serialize_product`].
pub fn parse_product(text: &str) -> Result<ProductMeasure<f64>> {
    let sites = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(parse_site)
        .collect::<Result<Vec<_>>>()?;
    ProductMeasure::new(sites)
}
