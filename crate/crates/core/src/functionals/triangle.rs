//! Weighted triangle counts on the complete graph.

use crate::scalar::{real, Scalar};
use crate::util::KahanSum;

use super::arrays::{edge_count, edge_index, WeightArray};

/// `T(x) = sum over i<j<k of x_ij x_jk x_ik` on the flat edge layout.
pub fn triangle_count_flat<F: Scalar>(n: usize, data: &[F]) -> F {
    debug_assert_eq!(data.len(), edge_count(n));
    let mut total = KahanSum::<F>::default();
    for i in 0..n {
        for j in (i + 1)..n {
            let xij = data[edge_index(n, i, j)];
            if xij == F::zero() {
                continue;
            }
            for k in (j + 1)..n {
                total.add(xij * data[edge_index(n, j, k)] * data[edge_index(n, i, k)]);
            }
        }
    }
    total.value()
}

/// Weighted triangle count of a symmetric edge-weight array.
pub fn triangle_count<F: Scalar>(x: &WeightArray<F>) -> F {
    triangle_count_flat(x.vertices(), x.data())
}

/// Gradient on the flat layout: `dT/dx_ij = sum over k != i,j of x_ik x_jk`.
pub fn triangle_gradient_flat<F: Scalar>(n: usize, data: &[F]) -> Vec<F> {
    debug_assert_eq!(data.len(), edge_count(n));
    let mut grad = vec![F::zero(); data.len()];
    for i in 0..n {
        for j in (i + 1)..n {
            let eij = edge_index(n, i, j);
            for k in (j + 1)..n {
                let ejk = edge_index(n, j, k);
                let eik = edge_index(n, i, k);
                let (a, b, c) = (data[eij], data[ejk], data[eik]);
                grad[eij] += b * c;
                grad[ejk] += a * c;
                grad[eik] += a * b;
            }
        }
    }
    grad
}

/// Gradient of the triangle count with respect to each edge weight.
pub fn triangle_gradient<F: Scalar>(x: &WeightArray<F>) -> Vec<F> {
    triangle_gradient_flat(x.vertices(), x.data())
}

/// Expectation of the triangle count when every edge weight is uniform on
/// `(0, 1)`: `C(n, 3) / 8 = n(n-1)(n-2)/48`.
pub fn expected_triangle<F: Scalar>(n: usize) -> F {
    real::<F>((n * n.saturating_sub(1) * n.saturating_sub(2)) as f64 / 48.0)
}
