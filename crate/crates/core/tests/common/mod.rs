//! Shared oracles for the integration tests: numerical routines written
//! independently of the library code they check, so agreement is evidence
//! rather than tautology.
#![allow(dead_code)]

use mfld_core::Real;

/// Adaptive Simpson integration of `f` over `[a, b]`.  `tol` is treated
/// relative to the local panel magnitude (floored at one), so integrands
/// spanning many orders of magnitude still terminate.
pub fn simpson<F: Fn(Real) -> Real + Copy>(f: F, a: Real, b: Real, tol: Real) -> Real {
    fn rule<F: Fn(Real) -> Real>(f: &F, a: Real, b: Real) -> Real {
        let m = 0.5 * (a + b);
        (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b))
    }
    fn recurse<F: Fn(Real) -> Real>(
        f: &F,
        a: Real,
        b: Real,
        whole: Real,
        tol: Real,
        depth: u32,
    ) -> Real {
        let m = 0.5 * (a + b);
        let left = rule(f, a, m);
        let right = rule(f, m, b);
        let scale = whole.abs().max(1.0);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol * scale {
            left + right + (left + right - whole) / 15.0
        } else {
            recurse(f, a, m, left, 0.5 * tol, depth - 1)
                + recurse(f, m, b, right, 0.5 * tol, depth - 1)
        }
    }
    let whole = rule(&f, a, b);
    recurse(&f, a, b, whole, tol, 24)
}

/// Unnormalized truncated-exponential density `e^{-lambda x}` on `(0,1)`;
/// its normalizer is computed by the caller via `simpson`, keeping this
/// oracle free of the library's closed forms.
pub fn trunc_exp_unnorm(lambda: Real, x: Real) -> Real {
    (-lambda * x).exp()
}

/// Independent transcription of the two-sided budget formulas, in plain
/// loops over the full coefficient grid.
pub struct BudgetRef {
    pub b1: Real,
    pub b2: Real,
    pub lower_slack: Real,
    pub upper_total: Real,
}

pub fn budget_reference(
    a: Real,
    b: &[Real],
    c: &[Real],
    m: Real,
    eps: Real,
    log_cover: Real,
) -> BudgetRef {
    let n = b.len();
    assert_eq!(c.len(), n * n);
    let nf = n as Real;
    let mut c_diag = 0.0;
    let mut c_diag_sq = 0.0;
    for i in 0..n {
        c_diag += c[i * n + i];
        c_diag_sq += c[i * n + i] * c[i * n + i];
    }
    let b_sq: Real = b.iter().map(|x| x * x).sum();
    let mut bc = 0.0;
    let mut c_sq = 0.0;
    let mut bbc = 0.0;
    for i in 0..n {
        for j in 0..n {
            let cij = c[i * n + j];
            bc += b[i] * cij;
            c_sq += cij * cij;
            bbc += b[i] * b[j] * cij;
        }
    }
    let inner = m.powi(2) * (a * c_diag + b_sq)
        + m.powi(3) * bc
        + m.powi(4) * (a * c_sq + bbc);
    let b1 = 4.0 * inner.sqrt();
    let b2 = 4.0
        * (b_sq + eps * eps * nf).sqrt()
        * (m.powi(3) * c_diag_sq.sqrt() + m.powi(2) * nf.sqrt() * eps)
        + m.powi(2) * c_diag
        + m * nf * eps;
    let lower_slack = 0.5 * m * m * c_diag;
    BudgetRef {
        b1,
        b2,
        lower_slack,
        upper_total: b1 + b2 + (2.0 as Real).ln() + log_cover,
    }
}

/// Central-difference gradient of a scalar function of a flat vector.
pub fn fd_gradient<F: Fn(&[Real]) -> Real>(f: F, x: &[Real], h: Real) -> Vec<Real> {
    let mut g = vec![0.0; x.len()];
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        let saved = xp[i];
        xp[i] = saved + h;
        let up = f(&xp);
        xp[i] = saved - h;
        let dn = f(&xp);
        xp[i] = saved;
        g[i] = (up - dn) / (2.0 * h);
    }
    g
}

/// Deterministic splitmix64 stream for oracle-side randomness, independent
/// of the library's generator choices.
pub struct SplitMix(pub u64);

impl SplitMix {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform draw in `[0, 1)`.
    pub fn next_f64(&mut self) -> Real {
        (self.next_u64() >> 11) as Real / (1u64 << 53) as Real
    }
}
