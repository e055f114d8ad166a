//! The functionals under study, with analytic gradients and derivative
//! bounds.
//!
//! A functional acts on a block vector `x = (x_1, ..., x_n)` of per-site
//! points, each `x_i` in `R^{d_i}`. Simplex- and spin-valued sites carry the
//! L1 norm, so gradients live in the dual space and are measured in the max
//! norm; scalar sites make the two coincide. Every built-in exposes:
//!
//! * `value(x)` — the functional itself,
//! * `site_gradients(x)` — the per-site gradients `f_i(x)` as coefficient
//!   vectors,
//! * derivative bounds `(a, b, c, M)` through [`derivative_bounds`]: `a`
//!   bounds `sup |f|`, `b_i` bounds `sup ||f_i||` (dual norm), `c_ij` bounds
//!   the mixed second derivative in operator norm, and `M` is the largest
//!   site-domain diameter. These aggregate into the two-sided error budget in
//!   [`crate::bounds`].
//!
//! The submodules hold the graph/array plumbing and the individual
//! functionals; this root defines the shared containers, the smoothed step
//! used by tail cutoffs, and the dispatch enum.

mod arrays;
mod homcount;
mod pattern;
mod spin;
mod triangle;

pub use arrays::{
    color_array_from_csv, color_array_to_csv, edge_count, edge_index, edge_pair,
    weight_array_from_csv, weight_array_to_csv, ColorArray, WeightArray,
};
pub use homcount::{
    expected_mono_hom, mono_hom_count, mono_hom_count_flat, mono_hom_gradient,
    mono_hom_gradient_flat,
};
pub use pattern::PatternGraph;
pub use spin::{
    spin_condition_check, spin_gradient, spin_hamiltonian, spin_matrix_from_csv,
    spin_matrix_to_csv, SpinConditionReport, SpinSystem,
};
pub use triangle::{
    expected_triangle, triangle_count, triangle_count_flat, triangle_gradient,
    triangle_gradient_flat,
};

use crate::error::{Error, Result};
use crate::measures::SiteMeasure;
use crate::scalar::{real, real_of, Scalar};
use crate::util::l1_dist;

/// Block vector: `n` sites, site `i` occupying `d_i` consecutive scalars.
/// Color and weight arrays flatten into this layout (edge-rank order), so the
/// optimizers, enumerators, and functionals all share one representation.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteVec<F> {
    offsets: Vec<usize>,
    data: Vec<F>,
}

impl<F: Scalar> SiteVec<F> {
    /// Builds from per-site dimensions, zero-filled.
    pub fn zeros(dims: &[usize]) -> Self {
        let mut offsets = Vec::with_capacity(dims.len() + 1);
        let mut total = 0;
        offsets.push(0);
        for &d in dims {
            total += d;
            offsets.push(total);
        }
        SiteVec {
            offsets,
            data: vec![F::zero(); total],
        }
    }

    /// Builds from explicit per-site rows.
    pub fn from_rows(rows: &[Vec<F>]) -> Self {
        let dims: Vec<usize> = rows.iter().map(|r| r.len()).collect();
        let mut v = SiteVec::zeros(&dims);
        for (i, r) in rows.iter().enumerate() {
            v.site_mut(i).copy_from_slice(r);
        }
        v
    }

    /// Builds `n` scalar sites from a flat slice.
    pub fn from_scalars(values: &[F]) -> Self {
        let dims = vec![1usize; values.len()];
        let mut v = SiteVec::zeros(&dims);
        v.data.copy_from_slice(values);
        v
    }

    /// Builds `n` sites of equal dimension `d` from a flat slice of length `n*d`.
    pub fn from_flat(n: usize, d: usize, values: &[F]) -> Self {
        assert_eq!(values.len(), n * d);
        let dims = vec![d; n];
        let mut v = SiteVec::zeros(&dims);
        v.data.copy_from_slice(values);
        v
    }

    pub fn n_sites(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn dim(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn site(&self, i: usize) -> &[F] {
        &self.data[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn site_mut(&mut self, i: usize) -> &mut [F] {
        &mut self.data[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn data(&self) -> &[F] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [F] {
        &mut self.data
    }

    pub fn iter_sites(&self) -> impl Iterator<Item = &[F]> {
        (0..self.n_sites()).map(move |i| self.site(i))
    }

    /// True when both vectors share the same site layout.
    pub fn same_shape(&self, other: &Self) -> bool {
        self.offsets == other.offsets
    }
}

// ---------------------------------------------------------------------------
// Smoothed step
// ---------------------------------------------------------------------------

/// Supremum of the smoothed step's derivative, attained at `x = -1/2`.
pub const SMOOTHSTEP_DERIV_SUP: f64 = 1.875; // 15/8

/// Supremum of the absolute second derivative of the smoothed step,
/// `10/sqrt(3)`, attained at `x = -1/2 ± 1/(2 sqrt 3)`.
pub const SMOOTHSTEP_SECOND_SUP: f64 = 5.773502691896257;

/// Quintic smoothed step: `-1` on `(-inf, -1]`, `0` on `[0, inf)`, and
/// `10u^3 - 15u^4 + 6u^5 - 1` with `u = x + 1` in between. Twice continuously
/// differentiable everywhere, nondecreasing.
pub fn smoothstep<F: Scalar>(x: F) -> F {
    if x <= -F::one() {
        -F::one()
    } else if x >= F::zero() {
        F::zero()
    } else {
        let u = x + F::one();
        let u3 = u * u * u;
        u3 * (real::<F>(10.0) + u * (real::<F>(-15.0) + u * real::<F>(6.0))) - F::one()
    }
}

/// Derivative of [`smoothstep`]: `30 u^2 (1-u)^2` on the ramp, zero outside.
pub fn smoothstep_deriv<F: Scalar>(x: F) -> F {
    if x <= -F::one() || x >= F::zero() {
        F::zero()
    } else {
        let u = x + F::one();
        let w = u * (F::one() - u);
        real::<F>(30.0) * w * w
    }
}

/// Smoothed tail cutoff `g = n K smoothstep((v/n - t) / delta)` where `v` is
/// the normalized count handed in by the caller. Zero once `v/n >= t`, equal
/// to `-nK` once `v/n <= t - delta`.
pub fn cutoff_value<F: Scalar>(v: F, n: usize, k_scale: F, t: F, delta: F) -> F {
    let nf = real_of::<F>(n);
    nf * k_scale * smoothstep((v / nf - t) / delta)
}

/// Derivative of [`cutoff_value`] with respect to `v`:
/// `(K/delta) smoothstep'((v/n - t)/delta)`.
pub fn cutoff_deriv<F: Scalar>(v: F, n: usize, k_scale: F, t: F, delta: F) -> F {
    let nf = real_of::<F>(n);
    k_scale / delta * smoothstep_deriv((v / nf - t) / delta)
}

// ---------------------------------------------------------------------------
// Derivative bounds and site domains
// ---------------------------------------------------------------------------

/// Uniform derivative bounds for a functional over a product domain.
///
/// `a >= sup |f|`; `b[i] >= sup ||f_i(x)||` in the dual (max) norm;
/// `c[i*n+j] >= sup ||f_ij(x)||` in operator norm, symmetric with the full
/// `n x n` grid participating in the budget sums (diagonal included);
/// `m` is the largest site-domain diameter in the site (L1) norm.
#[derive(Debug, Clone)]
pub struct FunctionalBounds<F> {
    pub a: F,
    pub b: Vec<F>,
    pub c: Vec<F>,
    pub m: F,
}

impl<F: Scalar> FunctionalBounds<F> {
    pub fn new(a: F, b: Vec<F>, c: Vec<F>, m: F) -> Result<Self> {
        let n = b.len();
        if c.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "c has {} entries for {n} sites",
                c.len()
            )));
        }
        if !(a >= F::zero()) || !(m >= F::zero()) {
            return Err(Error::Domain("bounds a and m must be nonnegative".into()));
        }
        if b.iter().any(|x| !(*x >= F::zero())) || c.iter().any(|x| !(*x >= F::zero())) {
            return Err(Error::Domain("bound entries must be nonnegative".into()));
        }
        let tol = crate::util::structural_tol::<F>();
        for i in 0..n {
            for j in (i + 1)..n {
                if (c[i * n + j] - c[j * n + i]).abs() > tol {
                    return Err(Error::Domain(format!("c is not symmetric at ({i},{j})")));
                }
            }
        }
        Ok(FunctionalBounds { a, b, c, m })
    }

    pub fn n_sites(&self) -> usize {
        self.b.len()
    }

    #[inline]
    pub fn c_at(&self, i: usize, j: usize) -> F {
        self.c[i * self.n_sites() + j]
    }

    /// `sum_i c_ii`.
    pub fn sum_c_diag(&self) -> F {
        let n = self.n_sites();
        (0..n).map(|i| self.c[i * n + i]).sum()
    }

    /// `sum_i c_ii^2`.
    pub fn sum_c_diag_sq(&self) -> F {
        let n = self.n_sites();
        (0..n).map(|i| self.c[i * n + i] * self.c[i * n + i]).sum()
    }

    /// `sum_i b_i^2`.
    pub fn sum_b_sq(&self) -> F {
        self.b.iter().map(|x| *x * *x).sum()
    }

    /// `sum_{i,j} b_i c_ij` over the full grid.
    pub fn sum_b_c(&self) -> F {
        let n = self.n_sites();
        let mut s = F::zero();
        for i in 0..n {
            for j in 0..n {
                s += self.b[i] * self.c[i * n + j];
            }
        }
        s
    }

    /// `sum_{i,j} c_ij^2` over the full grid.
    pub fn sum_c_sq(&self) -> F {
        self.c.iter().map(|x| *x * *x).sum()
    }

    /// `sum_{i,j} b_i b_j c_ij` over the full grid.
    pub fn sum_bb_c(&self) -> F {
        let n = self.n_sites();
        let mut s = F::zero();
        for i in 0..n {
            for j in 0..n {
                s += self.b[i] * self.b[j] * self.c[i * n + j];
            }
        }
        s
    }
}

/// Coordinate box and norm data for one site's domain.
#[derive(Debug, Clone)]
pub struct SiteDomain<F> {
    /// Coordinatewise lower corner.
    pub lo: Vec<F>,
    /// Coordinatewise upper corner.
    pub hi: Vec<F>,
    /// `sup ||z||_1` over the support.
    pub sup_l1: F,
    /// L1 diameter of the support.
    pub diam_l1: F,
}

/// Per-site domain description used by [`derivative_bounds`] and the analytic
/// gradient-range cover.
#[derive(Debug, Clone)]
pub struct DomainParams<F> {
    pub sites: Vec<SiteDomain<F>>,
}

impl<F: Scalar> DomainParams<F> {
    /// Reads boxes and norm data off a product measure's supports. Truncated
    /// exponential sites occupy `(0,1)`.
    pub fn from_product(mu: &crate::measures::ProductMeasure<F>) -> Self {
        let sites = mu
            .sites()
            .iter()
            .map(|s| match s {
                SiteMeasure::FiniteSupport { atoms, .. } => {
                    let d = atoms[0].len();
                    let mut lo = vec![F::infinity(); d];
                    let mut hi = vec![F::neg_infinity(); d];
                    let mut sup_l1 = F::zero();
                    for a in atoms {
                        for c in 0..d {
                            lo[c] = lo[c].min(a[c]);
                            hi[c] = hi[c].max(a[c]);
                        }
                        sup_l1 = sup_l1.max(crate::util::l1_norm(a));
                    }
                    let mut diam = F::zero();
                    for x in atoms {
                        for y in atoms {
                            diam = diam.max(l1_dist(x, y));
                        }
                    }
                    SiteDomain {
                        lo,
                        hi,
                        sup_l1,
                        diam_l1: diam,
                    }
                }
                SiteMeasure::TruncatedExponential { .. } => SiteDomain {
                    lo: vec![F::zero()],
                    hi: vec![F::one()],
                    sup_l1: F::one(),
                    diam_l1: F::one(),
                },
            })
            .collect();
        DomainParams { sites }
    }

    /// `n` scalar sites on `[0,1]`.
    pub fn unit_interval(n: usize) -> Self {
        DomainParams {
            sites: (0..n)
                .map(|_| SiteDomain {
                    lo: vec![F::zero()],
                    hi: vec![F::one()],
                    sup_l1: F::one(),
                    diam_l1: F::one(),
                })
                .collect(),
        }
    }

    /// `n` sites on the `l`-color probability simplex.
    pub fn simplex(n: usize, l: usize) -> Self {
        let diam = if l >= 2 { real(2.0) } else { F::zero() };
        DomainParams {
            sites: (0..n)
                .map(|_| SiteDomain {
                    lo: vec![F::zero(); l],
                    hi: vec![F::one(); l],
                    sup_l1: F::one(),
                    diam_l1: diam,
                })
                .collect(),
        }
    }

    /// Largest site diameter; the `M` of the budget.
    pub fn m_diameter(&self) -> F {
        self.sites
            .iter()
            .map(|s| s.diam_l1)
            .fold(F::zero(), |m, d| m.max(d))
    }

    /// Largest coordinatewise upper bound in absolute value across sites.
    fn sup_abs_coord(&self) -> F {
        self.sites
            .iter()
            .flat_map(|s| s.lo.iter().chain(s.hi.iter()))
            .fold(F::zero(), |m, x| m.max(x.abs()))
    }
}

/// Range of `sum_c theta_c z_c` over the box `[lo, hi]`.
pub(crate) fn interval_dot<F: Scalar>(theta: &[F], lo: &[F], hi: &[F]) -> (F, F) {
    let mut a = F::zero();
    let mut b = F::zero();
    for ((t, l), h) in theta.iter().zip(lo).zip(hi) {
        let (x, y) = (*t * *l, *t * *h);
        a += x.min(y);
        b += x.max(y);
    }
    (a, b)
}

// ---------------------------------------------------------------------------
// The dispatch enum
// ---------------------------------------------------------------------------

/// A built-in functional on a product of sites.
#[derive(Debug, Clone)]
pub enum Functional<F: Scalar> {
    /// Constant `value` on a product with the given site dimensions.
    Constant { dims: Vec<usize>, value: F },
    /// `sum_i <coeffs_i, x_i>`.
    Linear { coeffs: SiteVec<F> },
    /// `1/2 x^T Q x + <theta, x>` on `n` scalar sites; `Q` symmetric
    /// (row-major `n x n`), diagonal allowed.
    Quadratic { n: usize, q: Vec<F>, theta: Vec<F> },
    /// Weighted triangle count over the edges of the complete graph on
    /// `vertices` vertices; sites are scalar edge weights in edge-rank order.
    Triangle { vertices: usize },
    /// Smoothed tail cutoff of the normalized triangle count:
    /// `n K smoothstep((T/(N n) - level)/width)` with `n = C(N,2)` edge sites.
    TriangleCutoff {
        vertices: usize,
        k_scale: F,
        level: F,
        width: F,
    },
    /// Edge-colored homomorphism count of `pattern` into the complete graph
    /// on `vertices` vertices with `colors` colors; sites are per-edge color
    /// distributions.
    MonoHom {
        pattern: PatternGraph,
        vertices: usize,
        colors: usize,
    },
    /// Vector spin Hamiltonian.
    Spin(SpinSystem<F>),
}

impl<F: Scalar> Functional<F> {
    /// Constructs a quadratic functional, validating symmetry of `Q`.
    pub fn quadratic(q: Vec<F>, theta: Vec<F>) -> Result<Self> {
        let n = theta.len();
        if q.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "Q has {} entries for {n} sites",
                q.len()
            )));
        }
        let tol = crate::util::structural_tol::<F>();
        for i in 0..n {
            for j in (i + 1)..n {
                if (q[i * n + j] - q[j * n + i]).abs() > tol {
                    return Err(Error::Domain(format!("Q is not symmetric at ({i},{j})")));
                }
            }
        }
        Ok(Functional::Quadratic { n, q, theta })
    }

    /// Number of sites.
    pub fn site_count(&self) -> usize {
        match self {
            Functional::Constant { dims, .. } => dims.len(),
            Functional::Linear { coeffs } => coeffs.n_sites(),
            Functional::Quadratic { n, .. } => *n,
            Functional::Triangle { vertices } | Functional::TriangleCutoff { vertices, .. } => {
                edge_count(*vertices)
            }
            Functional::MonoHom { vertices, .. } => edge_count(*vertices),
            Functional::Spin(sys) => sys.n(),
        }
    }

    /// Per-site dimensions.
    pub fn site_dims(&self) -> Vec<usize> {
        match self {
            Functional::Constant { dims, .. } => dims.clone(),
            Functional::Linear { coeffs } => (0..coeffs.n_sites()).map(|i| coeffs.dim(i)).collect(),
            Functional::Quadratic { n, .. } => vec![1; *n],
            Functional::Triangle { vertices } | Functional::TriangleCutoff { vertices, .. } => {
                vec![1; edge_count(*vertices)]
            }
            Functional::MonoHom {
                vertices, colors, ..
            } => vec![*colors; edge_count(*vertices)],
            Functional::Spin(sys) => vec![sys.spin_dim(); sys.n()],
        }
    }

    fn check_shape(&self, x: &SiteVec<F>) -> Result<()> {
        let dims = self.site_dims();
        if x.n_sites() != dims.len() {
            return Err(Error::DimensionMismatch(format!(
                "argument has {} sites, functional has {}",
                x.n_sites(),
                dims.len()
            )));
        }
        for (i, d) in dims.iter().enumerate() {
            if x.dim(i) != *d {
                return Err(Error::DimensionMismatch(format!(
                    "site {i} has dimension {}, functional expects {d}",
                    x.dim(i)
                )));
            }
        }
        Ok(())
    }

    /// Evaluates the functional.
    pub fn value(&self, x: &SiteVec<F>) -> Result<F> {
        self.check_shape(x)?;
        Ok(match self {
            Functional::Constant { value, .. } => *value,
            Functional::Linear { coeffs } => crate::util::dot(coeffs.data(), x.data()),
            Functional::Quadratic { n, q, theta } => {
                let xs = x.data();
                let mut quad = F::zero();
                for i in 0..*n {
                    for j in 0..*n {
                        quad += xs[i] * q[i * n + j] * xs[j];
                    }
                }
                quad / real(2.0) + crate::util::dot(theta, xs)
            }
            Functional::Triangle { vertices } => triangle::triangle_count_flat(*vertices, x.data()),
            Functional::TriangleCutoff {
                vertices,
                k_scale,
                level,
                width,
            } => {
                let t = triangle::triangle_count_flat(*vertices, x.data());
                let n = edge_count(*vertices);
                cutoff_value(t / real_of(*vertices), n, *k_scale, *level, *width)
            }
            Functional::MonoHom {
                pattern,
                vertices,
                colors,
            } => homcount::mono_hom_count_flat(pattern, *vertices, *colors, x.data())?,
            Functional::Spin(sys) => sys.hamiltonian_sitevec(x)?,
        })
    }

    /// Per-site gradients `f_i(x)` as coefficient vectors.
    pub fn site_gradients(&self, x: &SiteVec<F>) -> Result<SiteVec<F>> {
        self.check_shape(x)?;
        Ok(match self {
            Functional::Constant { dims, .. } => SiteVec::zeros(dims),
            Functional::Linear { coeffs } => coeffs.clone(),
            Functional::Quadratic { n, q, theta } => {
                let xs = x.data();
                let mut g = vec![F::zero(); *n];
                for i in 0..*n {
                    let mut s = theta[i];
                    for j in 0..*n {
                        s += q[i * n + j] * xs[j];
                    }
                    g[i] = s;
                }
                SiteVec::from_scalars(&g)
            }
            Functional::Triangle { vertices } => {
                SiteVec::from_scalars(&triangle::triangle_gradient_flat(*vertices, x.data()))
            }
            Functional::TriangleCutoff {
                vertices,
                k_scale,
                level,
                width,
            } => {
                let nv = *vertices;
                let n = edge_count(nv);
                let t = triangle::triangle_count_flat(nv, x.data());
                let scale =
                    cutoff_deriv(t / real_of(nv), n, *k_scale, *level, *width) / real_of(nv);
                let mut g = triangle::triangle_gradient_flat(nv, x.data());
                for v in &mut g {
                    *v *= scale;
                }
                SiteVec::from_scalars(&g)
            }
            Functional::MonoHom {
                pattern,
                vertices,
                colors,
            } => {
                let g = homcount::mono_hom_gradient_flat(pattern, *vertices, *colors, x.data())?;
                SiteVec::from_flat(edge_count(*vertices), *colors, &g)
            }
            Functional::Spin(sys) => sys.gradient_sitevec(x)?,
        })
    }
}

/// Uniform derivative bounds `(a, b, c, M)` for a built-in functional over
/// the given product domain. The constants are safe upper bounds; for the
/// polynomial counts they are attained or near-attained at extreme corners,
/// and a sampling test keeps them honest.
pub fn derivative_bounds<F: Scalar>(
    f: &Functional<F>,
    dom: &DomainParams<F>,
) -> Result<FunctionalBounds<F>> {
    let n = f.site_count();
    if dom.sites.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "domain has {} sites, functional has {n}",
            dom.sites.len()
        )));
    }
    let m = dom.m_diameter();
    match f {
        Functional::Constant { value, .. } => {
            FunctionalBounds::new(value.abs(), vec![F::zero(); n], vec![F::zero(); n * n], m)
        }
        Functional::Linear { coeffs } => {
            let mut a = F::zero();
            let mut b = Vec::with_capacity(n);
            for i in 0..n {
                let (lo, hi) = interval_dot(coeffs.site(i), &dom.sites[i].lo, &dom.sites[i].hi);
                a += lo.abs().max(hi.abs());
                b.push(
                    coeffs.site(i).iter().fold(F::zero(), |m, x| m.max(x.abs())),
                );
            }
            FunctionalBounds::new(a, b, vec![F::zero(); n * n], m)
        }
        Functional::Quadratic { n, q, theta } => {
            let nn = *n;
            let s: Vec<F> = dom
                .sites
                .iter()
                .map(|d| d.lo[0].abs().max(d.hi[0].abs()))
                .collect();
            let mut b = Vec::with_capacity(nn);
            for i in 0..nn {
                let mut lo_i = theta[i];
                let mut hi_i = theta[i];
                for j in 0..nn {
                    let (lo, hi) = interval_dot(
                        &[q[i * nn + j]],
                        &[dom.sites[j].lo[0]],
                        &[dom.sites[j].hi[0]],
                    );
                    lo_i += lo;
                    hi_i += hi;
                }
                b.push(lo_i.abs().max(hi_i.abs()));
            }
            let c: Vec<F> = q.iter().map(|x| x.abs()).collect();
            let mut a = F::zero();
            for i in 0..nn {
                for j in 0..nn {
                    a += q[i * nn + j].abs() * s[i] * s[j];
                }
            }
            a = a / real(2.0);
            for i in 0..nn {
                a += theta[i].abs() * s[i];
            }
            FunctionalBounds::new(a, b, c, m)
        }
        Functional::Triangle { vertices } => {
            let nv = *vertices;
            let h = dom.sup_abs_coord();
            let nc3 = real::<F>((nv * nv.saturating_sub(1) * nv.saturating_sub(2)) as f64 / 6.0);
            let a = nc3 * h * h * h;
            let bval = real_of::<F>(nv.saturating_sub(2)) * h * h;
            let b = vec![bval; n];
            let mut c = vec![F::zero(); n * n];
            for e1 in 0..n {
                let (i1, j1) = edge_pair(nv, e1);
                for e2 in 0..n {
                    if e1 == e2 {
                        continue;
                    }
                    let (i2, j2) = edge_pair(nv, e2);
                    let shared = [i1 == i2, i1 == j2, j1 == i2, j1 == j2]
                        .iter()
                        .filter(|&&x| x)
                        .count();
                    if shared == 1 {
                        c[e1 * n + e2] = h;
                    }
                }
            }
            FunctionalBounds::new(a, b, c, m)
        }
        Functional::TriangleCutoff {
            vertices,
            k_scale,
            level: _,
            width,
        } => {
            let nv = *vertices;
            let h = dom.sup_abs_coord();
            let h1 = real::<F>(SMOOTHSTEP_DERIV_SUP);
            let h2 = real::<F>(SMOOTHSTEP_SECOND_SUP);
            let nf = real_of::<F>(n);
            // Bounds for the normalized count T/N per edge site.
            let bt = real_of::<F>(nv.saturating_sub(2)) * h * h / real_of(nv);
            let ct_shared = h / real_of::<F>(nv);
            let a = nf * k_scale.abs();
            let b = vec![*k_scale / *width * h1 * bt; n];
            let mut c = vec![F::zero(); n * n];
            let hess_scale = *k_scale / *width * h1;
            let outer_scale = *k_scale / (nf * *width * *width) * h2;
            for e1 in 0..n {
                let (i1, j1) = edge_pair(nv, e1);
                for e2 in 0..n {
                    let mut v = outer_scale * bt * bt;
                    if e1 != e2 {
                        let (i2, j2) = edge_pair(nv, e2);
                        let shared = [i1 == i2, i1 == j2, j1 == i2, j1 == j2]
                            .iter()
                            .filter(|&&x| x)
                            .count();
                        if shared == 1 {
                            v += hess_scale * ct_shared;
                        }
                    }
                    c[e1 * n + e2] = v;
                }
            }
            FunctionalBounds::new(a, b, c, m)
        }
        Functional::MonoHom {
            pattern,
            vertices,
            colors: _,
        } => {
            let nv = *vertices;
            let k = pattern.k();
            let mp = pattern.m();
            let nvf = real_of::<F>(nv);
            let pow = |e: i64| -> F {
                if e <= 0 {
                    F::one()
                } else {
                    nvf.powi(e as i32)
                }
            };
            // sup T <= N^k: for each map the color sum is at most one.
            let a = pow(k as i64);
            let bval = real::<F>(2.0 * mp as f64) * pow(k as i64 - 2);
            let b = vec![bval; n];
            let pair_factor = real::<F>((4 * mp * mp.saturating_sub(1)) as f64);
            let c_near = pair_factor * pow(k as i64 - 3);
            let c_far = pair_factor * pow(k as i64 - 4);
            let mut c = vec![F::zero(); n * n];
            for e1 in 0..n {
                let (i1, j1) = edge_pair(nv, e1);
                for e2 in 0..n {
                    if e1 == e2 {
                        c[e1 * n + e2] = c_near;
                        continue;
                    }
                    let (i2, j2) = edge_pair(nv, e2);
                    let shared = [i1 == i2, i1 == j2, j1 == i2, j1 == j2]
                        .iter()
                        .filter(|&&x| x)
                        .count();
                    c[e1 * n + e2] = if shared >= 1 { c_near } else { c_far };
                }
            }
            FunctionalBounds::new(a, b, c, m)
        }
        Functional::Spin(sys) => {
            let nn = sys.n();
            let nd = sys.spin_dim();
            let jmax = sys.j_max_abs();
            let hinf = sys
                .field()
                .iter()
                .fold(F::zero(), |m, x| m.max(x.abs()));
            let mut b = Vec::with_capacity(nn);
            for i in 0..nn {
                let ranges = sys.gradient_coord_ranges(i, dom);
                let mut sup = F::zero();
                for (lo, hi) in ranges {
                    sup = sup.max(lo.abs().max(hi.abs()));
                }
                b.push(sup);
            }
            let mut c = vec![F::zero(); nn * nn];
            for i in 0..nn {
                for j in 0..nn {
                    if i != j {
                        c[i * nn + j] = sys.a_at(i, j).abs() * jmax;
                    }
                }
            }
            let mut a = F::zero();
            for i in 0..nn {
                for j in 0..nn {
                    if i != j {
                        a += sys.a_at(i, j).abs() * jmax * dom.sites[i].sup_l1
                            * dom.sites[j].sup_l1;
                    }
                }
            }
            a = a / real(2.0);
            for i in 0..nn {
                a += hinf * dom.sites[i].sup_l1;
            }
            let _ = nd;
            FunctionalBounds::new(a, b, c, m)
        }
    }
}

/// Coordinatewise ranges of the site gradients over the domain box, used by
/// the analytic grid cover. Entry `[i][c]` is the `(lo, hi)` range of
/// coordinate `c` of `f_i(x)`.
pub fn gradient_ranges<F: Scalar>(
    f: &Functional<F>,
    dom: &DomainParams<F>,
) -> Result<Vec<Vec<(F, F)>>> {
    let n = f.site_count();
    if dom.sites.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "domain has {} sites, functional has {n}",
            dom.sites.len()
        )));
    }
    Ok(match f {
        Functional::Constant { dims, .. } => dims
            .iter()
            .map(|d| vec![(F::zero(), F::zero()); *d])
            .collect(),
        Functional::Linear { coeffs } => (0..n)
            .map(|i| coeffs.site(i).iter().map(|t| (*t, *t)).collect())
            .collect(),
        Functional::Quadratic { n, q, theta } => {
            let nn = *n;
            (0..nn)
                .map(|i| {
                    let mut lo = theta[i];
                    let mut hi = theta[i];
                    for j in 0..nn {
                        let (l, h) = interval_dot(
                            &[q[i * nn + j]],
                            &[dom.sites[j].lo[0]],
                            &[dom.sites[j].hi[0]],
                        );
                        lo += l;
                        hi += h;
                    }
                    vec![(lo, hi)]
                })
                .collect()
        }
        Functional::Triangle { vertices } => {
            let h = dom.sup_abs_coord();
            let top = real_of::<F>(vertices.saturating_sub(2)) * h * h;
            vec![vec![(F::zero(), top)]; n]
        }
        Functional::TriangleCutoff {
            vertices,
            k_scale,
            level: _,
            width,
        } => {
            let h = dom.sup_abs_coord();
            let top = *k_scale / (*width * real_of::<F>(*vertices))
                * real::<F>(SMOOTHSTEP_DERIV_SUP)
                * real_of::<F>(vertices.saturating_sub(2))
                * h
                * h;
            vec![vec![(F::zero(), top)]; n]
        }
        Functional::MonoHom {
            pattern,
            vertices,
            colors,
        } => {
            let top = real::<F>(2.0 * pattern.m() as f64)
                * real_of::<F>(*vertices).powi((pattern.k() as i32 - 2).max(0));
            vec![vec![(F::zero(), top); *colors]; n]
        }
        Functional::Spin(sys) => (0..n).map(|i| sys.gradient_coord_ranges(i, dom)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smoothstep_anchors() {
        assert_eq!(smoothstep(-2.0f64), -1.0);
        assert_eq!(smoothstep(-1.0f64), -1.0);
        assert_eq!(smoothstep(0.0f64), 0.0);
        assert_eq!(smoothstep(3.0f64), 0.0);
        assert!((smoothstep(-0.5f64) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn smoothstep_is_nondecreasing_and_c1() {
        let mut prev = -1.0f64;
        for i in 0..=2000 {
            let x = -1.5 + 2.0 * (i as f64) / 2000.0;
            let v = smoothstep(x);
            assert!(v >= prev - 1e-15);
            prev = v;
            // central difference matches the analytic derivative
            let fd = (smoothstep(x + 1e-6) - smoothstep(x - 1e-6)) / 2e-6;
            assert!((fd - smoothstep_deriv(x)).abs() < 1e-8, "x={x}");
        }
    }

    #[test]
    fn smoothstep_deriv_sup_at_midpoint() {
        assert!((smoothstep_deriv(-0.5f64) - SMOOTHSTEP_DERIV_SUP).abs() < 1e-15);
        for i in 0..=1000 {
            let x = -1.0 + (i as f64) / 1000.0;
            assert!(smoothstep_deriv(x) <= SMOOTHSTEP_DERIV_SUP + 1e-12);
        }
    }

    #[test]
    fn smoothstep_second_deriv_sup_constant() {
        // max |h''| over the ramp, h'' = 60u - 180u^2 + 120u^3 with u = x+1.
        let mut sup: f64 = 0.0;
        for i in 0..=100000 {
            let u = i as f64 / 100000.0;
            let h2 = 60.0 * u - 180.0 * u * u + 120.0 * u * u * u;
            sup = sup.max(h2.abs());
        }
        assert!((sup - SMOOTHSTEP_SECOND_SUP).abs() < 1e-7);
    }

    #[test]
    fn cutoff_regions() {
        let n = 45;
        let (k, t, d) = (0.7f64, 0.2, 0.05);
        let nf = n as f64;
        // value handed in is already T/N; v/n >= t means no penalty
        assert_eq!(cutoff_value(nf * t, n, k, t, d), 0.0);
        assert_eq!(cutoff_value(nf * (t + 1.0), n, k, t, d), 0.0);
        assert_eq!(cutoff_value(nf * (t - d), n, k, t, d), -nf * k);
        let mid = cutoff_value(nf * (t - d / 2.0), n, k, t, d);
        assert!((mid + nf * k / 2.0).abs() < 1e-12);
    }

    #[test]
    fn bounds_reject_asymmetric_c() {
        let c = vec![0.0, 1.0, 2.0, 0.0];
        assert!(FunctionalBounds::new(1.0f64, vec![1.0, 1.0], c, 1.0).is_err());
    }

    #[test]
    fn quadratic_value_and_gradient_agree_with_hand_expansion() {
        // f(x) = 1/2 (2 x0 x1) + x0 - x1 on {0,1}^2 with Q = [[0,1],[1,0]]
        let f = Functional::<f64>::quadratic(vec![0.0, 1.0, 1.0, 0.0], vec![1.0, -1.0]).unwrap();
        let x = SiteVec::from_scalars(&[1.0, 1.0]);
        assert!((f.value(&x).unwrap() - (1.0 + 1.0 - 1.0)).abs() < 1e-15);
        let g = f.site_gradients(&x).unwrap();
        assert!((g.site(0)[0] - 2.0).abs() < 1e-15); // theta_0 + x1
        assert!((g.site(1)[0] - 0.0).abs() < 1e-15); // theta_1 + x0
    }

    #[test]
    fn linear_bounds_over_sign_domain() {
        let f = Functional::Linear {
            coeffs: SiteVec::from_scalars(&[1.5, -2.0]),
        };
        let mu = crate::measures::ProductMeasure::iid(
            crate::measures::SiteMeasure::<f64>::uniform_sign(),
            2,
        )
        .unwrap();
        let dom = DomainParams::from_product(&mu);
        let fb = derivative_bounds(&f, &dom).unwrap();
        assert!((fb.a - 3.5).abs() < 1e-14);
        assert_eq!(fb.b, vec![1.5, 2.0]);
        assert!(fb.c.iter().all(|&x| x == 0.0));
        assert!((fb.m - 2.0).abs() < 1e-14);
    }
}
