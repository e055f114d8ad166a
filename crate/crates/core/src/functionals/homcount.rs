//! Edge-colored homomorphism counts of a small pattern into the complete
//! graph.
//!
//! A point assigns each edge of the complete graph on `N` vertices a color
//! distribution `x_e` over `l` colors. For a pattern `H` with vertices
//! `0..k` and edge slots `e_1..e_m`, the count is
//!
//! ```text
//! T(x) = sum over maps q in [N]^k  sum over colors s  prod over slots  x_{q(u) q(v), s}
//! ```
//!
//! with diagonal pairs contributing zero (maps collapsing an edge die). The
//! enumeration is exact; a resource guard rejects instances whose work
//! `N^k * m * l` exceeds `1e9` elementary products.

use crate::error::{Error, Result};
use crate::scalar::{real_of, Scalar};
use crate::util::KahanSum;

use super::arrays::{edge_index, ColorArray};
use super::pattern::PatternGraph;

const WORK_GUARD: f64 = 1e9;

fn check_guard(h: &PatternGraph, n: usize, l: usize) -> Result<()> {
    let work = (n as f64).powi(h.k() as i32) * h.m() as f64 * l.max(1) as f64;
    if work > WORK_GUARD {
        return Err(Error::ResourceGuard(format!(
            "homomorphism enumeration needs about {work:.3e} products (limit {WORK_GUARD:.0e})"
        )));
    }
    Ok(())
}

/// Advances the odometer `q` over `[n]^k` (slot 0 fastest). Returns false
/// when the enumeration wrapped around.
#[inline]
fn advance(q: &mut [usize], n: usize) -> bool {
    for slot in q.iter_mut() {
        *slot += 1;
        if *slot < n {
            return true;
        }
        *slot = 0;
    }
    false
}

/// Resolves the edge ranks of a map; `None` when some slot collapses.
#[inline]
fn resolve_ranks(h: &PatternGraph, n: usize, q: &[usize], ranks: &mut [usize]) -> bool {
    for (r, &(u, v)) in ranks.iter_mut().zip(h.edges()) {
        let (a, b) = (q[u], q[v]);
        if a == b {
            return false;
        }
        *r = edge_index(n, a, b);
    }
    true
}

/// Exact homomorphism count on the flat edge-distribution layout (rank-major
/// times `l` colors), shared with [`super::Functional::MonoHom`].
pub fn mono_hom_count_flat<F: Scalar>(
    h: &PatternGraph,
    n: usize,
    l: usize,
    data: &[F],
) -> Result<F> {
    check_guard(h, n, l)?;
    if n < 2 {
        return Ok(F::zero());
    }
    let m = h.m();
    let mut q = vec![0usize; h.k()];
    let mut ranks = vec![0usize; m];
    let mut total = KahanSum::<F>::default();
    loop {
        if resolve_ranks(h, n, &q, &mut ranks) {
            for s in 0..l {
                let mut prod = F::one();
                for &r in &ranks {
                    prod *= data[r * l + s];
                    if prod == F::zero() {
                        break;
                    }
                }
                total.add(prod);
            }
        }
        if !advance(&mut q, n) {
            break;
        }
    }
    Ok(total.value())
}

/// Exact homomorphism count of `h` under the edge coloring `x`.
pub fn mono_hom_count<F: Scalar>(x: &ColorArray<F>, h: &PatternGraph) -> Result<F> {
    mono_hom_count_flat(h, x.vertices(), x.colors(), x.data())
}

/// Gradient of the count in the flat layout. A pattern edge mapped onto the
/// same complete-graph edge as another slot contributes through both slots,
/// which the slot-wise accumulation handles without special casing.
pub fn mono_hom_gradient_flat<F: Scalar>(
    h: &PatternGraph,
    n: usize,
    l: usize,
    data: &[F],
) -> Result<Vec<F>> {
    check_guard(h, n, l)?;
    let m = h.m();
    let mut grad = vec![F::zero(); data.len()];
    if n < 2 {
        return Ok(grad);
    }
    let mut q = vec![0usize; h.k()];
    let mut ranks = vec![0usize; m];
    loop {
        if resolve_ranks(h, n, &q, &mut ranks) {
            for s in 0..l {
                for (e, &re) in ranks.iter().enumerate() {
                    let mut prod = F::one();
                    for (e2, &r2) in ranks.iter().enumerate() {
                        if e2 != e {
                            prod *= data[r2 * l + s];
                        }
                    }
                    grad[re * l + s] += prod;
                }
            }
        }
        if !advance(&mut q, n) {
            break;
        }
    }
    Ok(grad)
}

/// Gradient of the count with respect to each edge's color weights, shaped
/// like the input array.
pub fn mono_hom_gradient<F: Scalar>(x: &ColorArray<F>, h: &PatternGraph) -> Result<ColorArray<F>> {
    let g = mono_hom_gradient_flat(h, x.vertices(), x.colors(), x.data())?;
    Ok(ColorArray::raw(x.vertices(), x.colors(), g))
}

/// Expectation of the count when every edge draws its color uniformly and
/// independently: each map without collapsed slots contributes
/// `l^(1 - P(q))` where `P(q)` is the number of distinct complete-graph
/// edges it uses. Exact enumeration under the same resource guard.
pub fn expected_mono_hom<F: Scalar>(h: &PatternGraph, n: usize, l: usize) -> Result<F> {
    check_guard(h, n, l)?;
    if n < 2 {
        return Ok(F::zero());
    }
    if l == 0 {
        return Err(Error::Domain("need at least one color".into()));
    }
    let m = h.m();
    let inv_l = F::one() / real_of::<F>(l);
    // l^(1-P) for P = 1..=m, precomputed.
    let weights: Vec<F> = (1..=m)
        .map(|p| {
            let mut w = F::one();
            for _ in 1..p {
                w *= inv_l;
            }
            w
        })
        .collect();
    let mut q = vec![0usize; h.k()];
    let mut ranks = vec![0usize; m];
    let mut distinct = Vec::with_capacity(m);
    let mut total = KahanSum::<F>::default();
    loop {
        if resolve_ranks(h, n, &q, &mut ranks) {
            distinct.clear();
            for &r in &ranks {
                if !distinct.contains(&r) {
                    distinct.push(r);
                }
            }
            total.add(weights[distinct.len() - 1]);
        }
        if !advance(&mut q, n) {
            break;
        }
    }
    Ok(total.value())
}
