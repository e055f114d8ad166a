//! Vector spin Hamiltonians on a weighted interaction graph.
//!
//! Sites carry spins `x_i` in a compact subset of `R^d`; the energy is
//!
//! ```text
//! f(x) = 1/2 sum_{i != j} A(i,j) x_i^T J x_j + sum_i x_i^T h
//! ```
//!
//! with `A` a symmetric interaction matrix (diagonal discarded at
//! construction — self-interaction shifts the budget, not the physics, and
//! the shift is reported), `J` a symmetric coupling on spin space, and `h`
//! an external field.

use crate::error::{Error, Result};
use crate::scalar::{real, real_of, Scalar};
use crate::util::{fmt_g17, structural_tol};

use super::{interval_dot, DomainParams, SiteVec};

#[derive(Debug, Clone)]
pub struct SpinSystem<F> {
    n: usize,
    spin_dim: usize,
    a: Vec<F>,
    j: Vec<F>,
    h: Vec<F>,
    discarded_diagonal: Vec<F>,
}

impl<F: Scalar> SpinSystem<F> {
    /// Builds a system from row-major `A` (`n x n`), `J` (`d x d`), and `h`
    /// (`d`). Both matrices must be symmetric; any nonzero diagonal of `A`
    /// is zeroed and kept for inspection via [`Self::discarded_diagonal`].
    pub fn new(n: usize, spin_dim: usize, mut a: Vec<F>, j: Vec<F>, h: Vec<F>) -> Result<Self> {
        if a.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "A has {} entries for {n} sites",
                a.len()
            )));
        }
        if j.len() != spin_dim * spin_dim {
            return Err(Error::DimensionMismatch(format!(
                "J has {} entries for spin dimension {spin_dim}",
                j.len()
            )));
        }
        if h.len() != spin_dim {
            return Err(Error::DimensionMismatch(format!(
                "h has {} entries for spin dimension {spin_dim}",
                h.len()
            )));
        }
        if a.iter().chain(&j).chain(&h).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("spin system parameters".into()));
        }
        let tol = structural_tol::<F>();
        for i in 0..n {
            for jj in (i + 1)..n {
                if (a[i * n + jj] - a[jj * n + i]).abs() > tol {
                    return Err(Error::Domain(format!("A is not symmetric at ({i},{jj})")));
                }
            }
        }
        for r in 0..spin_dim {
            for c in (r + 1)..spin_dim {
                if (j[r * spin_dim + c] - j[c * spin_dim + r]).abs() > tol {
                    return Err(Error::Domain(format!("J is not symmetric at ({r},{c})")));
                }
            }
        }
        let mut discarded = Vec::with_capacity(n);
        for i in 0..n {
            discarded.push(a[i * n + i]);
            a[i * n + i] = F::zero();
        }
        Ok(SpinSystem {
            n,
            spin_dim,
            a,
            j,
            h,
            discarded_diagonal: discarded,
        })
    }

    /// Mean-field ferromagnet: `A(i,j) = 1/n` off the diagonal, scalar
    /// coupling `J = [beta]`, zero field.
    pub fn curie_weiss(n: usize, beta: F) -> Self {
        let inv = F::one() / real_of::<F>(n);
        let mut a = vec![inv; n * n];
        for i in 0..n {
            a[i * n + i] = F::zero();
        }
        SpinSystem::new(n, 1, a, vec![beta], vec![F::zero()]).unwrap()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spin_dim(&self) -> usize {
        self.spin_dim
    }

    #[inline]
    pub fn a_at(&self, i: usize, j: usize) -> F {
        self.a[i * self.n + j]
    }

    pub fn coupling(&self) -> &[F] {
        &self.j
    }

    pub fn field(&self) -> &[F] {
        &self.h
    }

    /// The `A` diagonal removed at construction.
    pub fn discarded_diagonal(&self) -> &[F] {
        &self.discarded_diagonal
    }

    /// Largest absolute coupling entry; the `L1 -> max` operator norm of `J`.
    pub fn j_max_abs(&self) -> F {
        self.j.iter().fold(F::zero(), |m, x| m.max(x.abs()))
    }

    fn check_shape(&self, x: &SiteVec<F>) -> Result<()> {
        if x.n_sites() != self.n || (0..self.n).any(|i| x.dim(i) != self.spin_dim) {
            return Err(Error::DimensionMismatch(format!(
                "spin argument does not match {} sites of dimension {}",
                self.n, self.spin_dim
            )));
        }
        Ok(())
    }

    /// Local fields `g_i = sum_j A(i,j) J x_j`, flat `n x d`.
    fn local_fields(&self, x: &SiteVec<F>) -> Vec<F> {
        let (n, d) = (self.n, self.spin_dim);
        let mut s = vec![F::zero(); n * d];
        for i in 0..n {
            for j in 0..n {
                let aij = self.a[i * n + j];
                if aij == F::zero() {
                    continue;
                }
                let xj = x.site(j);
                for c in 0..d {
                    s[i * d + c] += aij * xj[c];
                }
            }
        }
        let mut g = vec![F::zero(); n * d];
        for i in 0..n {
            for r in 0..d {
                let mut acc = F::zero();
                for c in 0..d {
                    acc += self.j[r * d + c] * s[i * d + c];
                }
                g[i * d + r] = acc;
            }
        }
        g
    }

    /// Energy of a configuration.
    pub fn hamiltonian_sitevec(&self, x: &SiteVec<F>) -> Result<F> {
        self.check_shape(x)?;
        let d = self.spin_dim;
        let g = self.local_fields(x);
        let mut v = F::zero();
        for i in 0..self.n {
            let xi = x.site(i);
            for c in 0..d {
                v += xi[c] * (g[i * d + c] / real(2.0) + self.h[c]);
            }
        }
        Ok(v)
    }

    /// Per-site gradients `f_i = g_i + h`.
    pub fn gradient_sitevec(&self, x: &SiteVec<F>) -> Result<SiteVec<F>> {
        self.check_shape(x)?;
        let d = self.spin_dim;
        let mut g = self.local_fields(x);
        for i in 0..self.n {
            for c in 0..d {
                g[i * d + c] += self.h[c];
            }
        }
        Ok(SiteVec::from_flat(self.n, d, &g))
    }

    /// Coordinatewise interval of `f_i(x)` over the domain boxes.
    pub(crate) fn gradient_coord_ranges(&self, i: usize, dom: &DomainParams<F>) -> Vec<(F, F)> {
        let d = self.spin_dim;
        let mut out = Vec::with_capacity(d);
        for r in 0..d {
            let mut lo = self.h[r];
            let mut hi = self.h[r];
            for j in 0..self.n {
                let aij = self.a[i * self.n + j];
                if aij == F::zero() {
                    continue;
                }
                let w: Vec<F> = (0..d).map(|c| aij * self.j[r * d + c]).collect();
                let (l, h) = interval_dot(&w, &dom.sites[j].lo, &dom.sites[j].hi);
                lo += l;
                hi += h;
            }
            out.push((lo, hi));
        }
        out
    }
}

/// Energy of a configuration under the system.
pub fn spin_hamiltonian<F: Scalar>(sys: &SpinSystem<F>, x: &SiteVec<F>) -> Result<F> {
    sys.hamiltonian_sitevec(x)
}

/// Per-site gradients of the energy.
pub fn spin_gradient<F: Scalar>(sys: &SpinSystem<F>, x: &SiteVec<F>) -> Result<SiteVec<F>> {
    sys.gradient_sitevec(x)
}

/// Diagnostics for the interaction matrix governing when the naive
/// mean-field value is close: small `tr(A^2)/n` and a small normalized row
/// sup drive the error terms.
#[derive(Debug, Clone)]
pub struct SpinConditionReport<F> {
    /// `tr(A^2) / n = sum_{i,j} A(i,j)^2 / n` (diagonal already zero).
    pub tr_a2_over_n: F,
    /// `sup over v in {0,1}^n of sum_i |(Av)_i| / n`; exact by vertex
    /// enumeration for `n <= 20`, otherwise the safe bound
    /// `sum_{i,j} |A(i,j)| / n`.
    pub row_l1_sup_over_n: F,
    /// Whether the sup above is exact rather than the fallback bound.
    pub sup_is_exact: bool,
}

/// Computes [`SpinConditionReport`] for a system's interaction matrix.
pub fn spin_condition_check<F: Scalar>(sys: &SpinSystem<F>) -> SpinConditionReport<F> {
    let n = sys.n();
    let nf = real_of::<F>(n);
    let mut tr = F::zero();
    for i in 0..n {
        for j in 0..n {
            let a = sys.a_at(i, j);
            tr += a * a;
        }
    }
    let tr_a2_over_n = tr / nf;
    if n <= 20 && n > 0 {
        // Gray-code walk over the vertices of [0,1]^n, updating y = A v by
        // one column per step.
        let mut y = vec![F::zero(); n];
        let mut sum_abs = F::zero();
        let mut best = F::zero(); // v = 0 gives 0
        let mut v: u64 = 0;
        let steps: u64 = 1 << n;
        for t in 1..steps {
            let b = t.trailing_zeros() as usize;
            v ^= 1 << b;
            let add = (v >> b) & 1 == 1;
            for i in 0..n {
                let col = sys.a_at(i, b);
                let old = y[i];
                y[i] = if add { old + col } else { old - col };
                sum_abs += y[i].abs() - old.abs();
            }
            best = best.max(sum_abs);
        }
        // Guard against drift in the running |.| sum on long walks.
        SpinConditionReport {
            tr_a2_over_n,
            row_l1_sup_over_n: best / nf,
            sup_is_exact: true,
        }
    } else {
        let mut l1 = F::zero();
        for i in 0..n {
            for j in 0..n {
                l1 += sys.a_at(i, j).abs();
            }
        }
        SpinConditionReport {
            tr_a2_over_n,
            row_l1_sup_over_n: l1 / nf,
            sup_is_exact: false,
        }
    }
}

/// Renders a square matrix as CSV rows.
pub fn spin_matrix_to_csv<F: Scalar>(n: usize, data: &[F]) -> String {
    debug_assert_eq!(data.len(), n * n);
    let mut out = String::new();
    for i in 0..n {
        let row: Vec<String> = (0..n).map(|j| fmt_g17(data[i * n + j])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Parses a square CSV matrix; returns `(n, row-major data)`.
pub fn spin_matrix_from_csv<F: Scalar>(text: &str) -> Result<(usize, Vec<F>)> {
    let rows: Vec<&str> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect();
    let n = rows.len();
    if n == 0 {
        return Err(Error::Parse("empty matrix".into()));
    }
    let mut data = Vec::with_capacity(n * n);
    for (i, row) in rows.iter().enumerate() {
        let vals: Vec<&str> = row.split(',').map(str::trim).collect();
        if vals.len() != n {
            return Err(Error::Parse(format!(
                "matrix row {i} has {} entries, expected {n}",
                vals.len()
            )));
        }
        for v in vals {
            let x: f64 = v
                .parse()
                .map_err(|e| Error::Parse(format!("bad matrix entry {v:?}: {e}")))?;
            data.push(real(x));
        }
    }
    Ok((n, data))
}
