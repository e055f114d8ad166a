//! Edge-indexed arrays over the complete graph, and their CSV forms.
//!
//! Edges of the complete graph on `n` vertices are ranked in row-major
//! upper-triangle order: `(0,1), (0,2), ..., (0,n-1), (1,2), ...`. A
//! [`WeightArray`] holds one scalar per edge, a [`ColorArray`] one
//! distribution over `l` colors per edge. Both flatten — in rank order —
//! into the [`super::SiteVec`] layout the optimizers use, so conversions are
//! plain copies.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::util::{fmt_g17, structural_tol};

use super::SiteVec;

/// Number of edges of the complete graph on `n` vertices.
pub fn edge_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Rank of edge `{i, j}`, `i != j`, in upper-triangle row-major order.
#[inline]
pub fn edge_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = (i.min(j), i.max(j));
    debug_assert!(j < n && i != j);
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

/// Inverse of [`edge_index`]: the `(i, j)` pair (with `i < j`) at `rank`.
pub fn edge_pair(n: usize, rank: usize) -> (usize, usize) {
    debug_assert!(rank < edge_count(n));
    let mut i = 0;
    let mut base = 0;
    loop {
        let row = n - i - 1;
        if rank < base + row {
            return (i, i + 1 + rank - base);
        }
        base += row;
        i += 1;
    }
}

/// Symmetric scalar edge weights on the complete graph, zero diagonal
/// implicit. Entries are expected in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightArray<F> {
    n: usize,
    data: Vec<F>,
}

impl<F: Scalar> WeightArray<F> {
    pub fn new(n: usize, data: Vec<F>) -> Result<Self> {
        if data.len() != edge_count(n) {
            return Err(Error::DimensionMismatch(format!(
                "{} weights for {n} vertices (need {})",
                data.len(),
                edge_count(n)
            )));
        }
        let tol = structural_tol::<F>();
        for (r, w) in data.iter().enumerate() {
            if !w.is_finite() || *w < -tol || *w > F::one() + tol {
                let (i, j) = edge_pair(n, r);
                return Err(Error::Domain(format!(
                    "weight at edge ({i},{j}) outside [0,1]"
                )));
            }
        }
        Ok(WeightArray { n, data })
    }

    /// All edges set to `v`.
    pub fn constant(n: usize, v: F) -> Result<Self> {
        WeightArray::new(n, vec![v; edge_count(n)])
    }

    pub fn vertices(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> F {
        self.data[edge_index(self.n, i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: F) {
        let idx = edge_index(self.n, i, j);
        self.data[idx] = v;
    }

    pub fn data(&self) -> &[F] {
        &self.data
    }

    /// Scalar edge sites in rank order.
    pub fn to_sitevec(&self) -> SiteVec<F> {
        SiteVec::from_scalars(&self.data)
    }

    pub fn from_sitevec(n: usize, x: &SiteVec<F>) -> Result<Self> {
        if x.n_sites() != edge_count(n) || (0..x.n_sites()).any(|i| x.dim(i) != 1) {
            return Err(Error::DimensionMismatch(format!(
                "site vector does not match {n}-vertex edge layout"
            )));
        }
        WeightArray::new(n, x.data().to_vec())
    }
}

/// Per-edge color distributions on the complete graph: `l` nonnegative
/// entries per edge summing to at most one is *not* enforced here — entries
/// are validated to lie in `[0, 1]` with the per-edge sum within tolerance of
/// at most one, matching the relaxed simplex the optimizers move in.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorArray<F> {
    n: usize,
    l: usize,
    data: Vec<F>,
}

impl<F: Scalar> ColorArray<F> {
    pub fn new(n: usize, l: usize, data: Vec<F>) -> Result<Self> {
        if l == 0 {
            return Err(Error::Domain("need at least one color".into()));
        }
        if data.len() != edge_count(n) * l {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for {n} vertices and {l} colors (need {})",
                data.len(),
                edge_count(n) * l
            )));
        }
        let tol = crate::scalar::real::<F>(1e-9);
        for (r, chunk) in data.chunks(l).enumerate() {
            let mut sum = F::zero();
            for v in chunk {
                if !v.is_finite() || *v < -tol || *v > F::one() + tol {
                    let (i, j) = edge_pair(n, r);
                    return Err(Error::Domain(format!(
                        "color weight at edge ({i},{j}) outside [0,1]"
                    )));
                }
                sum += *v;
            }
            if sum > F::one() + tol {
                let (i, j) = edge_pair(n, r);
                return Err(Error::Domain(format!(
                    "color weights at edge ({i},{j}) sum above one"
                )));
            }
        }
        Ok(ColorArray { n, l, data })
    }

    /// Every edge at the simplex centroid `(1/l, ..., 1/l)`.
    pub fn centroid(n: usize, l: usize) -> Result<Self> {
        let v = F::one() / crate::scalar::real_of::<F>(l);
        ColorArray::new(n, l, vec![v; edge_count(n) * l])
    }

    /// Constructor without the distribution checks, for values that live in
    /// the dual space (gradients are counts, not color distributions).
    pub(crate) fn raw(n: usize, l: usize, data: Vec<F>) -> Self {
        debug_assert_eq!(data.len(), edge_count(n) * l);
        ColorArray { n, l, data }
    }

    pub fn vertices(&self) -> usize {
        self.n
    }

    pub fn colors(&self) -> usize {
        self.l
    }

    pub fn edges(&self) -> usize {
        edge_count(self.n)
    }

    /// The color distribution at edge `{i, j}`.
    pub fn get(&self, i: usize, j: usize) -> &[F] {
        let r = edge_index(self.n, i, j);
        &self.data[r * self.l..(r + 1) * self.l]
    }

    pub fn set(&mut self, i: usize, j: usize, dist: &[F]) {
        let r = edge_index(self.n, i, j);
        self.data[r * self.l..(r + 1) * self.l].copy_from_slice(dist);
    }

    pub fn data(&self) -> &[F] {
        &self.data
    }

    /// Edge sites of dimension `l` in rank order.
    pub fn to_sitevec(&self) -> SiteVec<F> {
        SiteVec::from_flat(edge_count(self.n), self.l, &self.data)
    }

    pub fn from_sitevec(n: usize, l: usize, x: &SiteVec<F>) -> Result<Self> {
        if x.n_sites() != edge_count(n) || (0..x.n_sites()).any(|i| x.dim(i) != l) {
            return Err(Error::DimensionMismatch(format!(
                "site vector does not match {n}-vertex {l}-color edge layout"
            )));
        }
        ColorArray::new(n, l, x.data().to_vec())
    }
}

/// Renders a weight array as CSV: header line `n`, then row `i` holding
/// `x_{i,i+1}, ..., x_{i,n-1}`.
pub fn weight_array_to_csv<F: Scalar>(w: &WeightArray<F>) -> String {
    let n = w.vertices();
    let mut out = format!("{n}\n");
    for i in 0..n.saturating_sub(1) {
        let row: Vec<String> = ((i + 1)..n).map(|j| fmt_g17(w.get(i, j))).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Parses the CSV form written by [`weight_array_to_csv`].
pub fn weight_array_from_csv<F: Scalar>(text: &str) -> Result<WeightArray<F>> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let n: usize = lines
        .next()
        .ok_or_else(|| Error::Parse("empty weight file".into()))?
        .parse()
        .map_err(|e| Error::Parse(format!("bad vertex count: {e}")))?;
    let mut data = vec![F::zero(); edge_count(n)];
    for i in 0..n.saturating_sub(1) {
        let line = lines
            .next()
            .ok_or_else(|| Error::Parse(format!("missing weight row {i}")))?;
        let vals: Vec<&str> = line.split(',').map(str::trim).collect();
        if vals.len() != n - i - 1 {
            return Err(Error::Parse(format!(
                "weight row {i} has {} entries, expected {}",
                vals.len(),
                n - i - 1
            )));
        }
        for (k, v) in vals.iter().enumerate() {
            let x: f64 = v
                .parse()
                .map_err(|e| Error::Parse(format!("bad weight {v:?}: {e}")))?;
            data[edge_index(n, i, i + 1 + k)] = crate::scalar::real(x);
        }
    }
    if lines.next().is_some() {
        return Err(Error::Parse("trailing rows in weight file".into()));
    }
    WeightArray::new(n, data)
}

/// Renders a color array as CSV: header line `n,l`, then one row per edge in
/// rank order with `l` entries.
pub fn color_array_to_csv<F: Scalar>(c: &ColorArray<F>) -> String {
    let mut out = format!("{},{}\n", c.vertices(), c.colors());
    for chunk in c.data().chunks(c.colors()) {
        let row: Vec<String> = chunk.iter().map(|v| fmt_g17(*v)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Parses the CSV form written by [`color_array_to_csv`].
pub fn color_array_from_csv<F: Scalar>(text: &str) -> Result<ColorArray<F>> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty color file".into()))?;
    let mut it = header.split(',').map(str::trim);
    let n: usize = it
        .next()
        .ok_or_else(|| Error::Parse("missing vertex count".into()))?
        .parse()
        .map_err(|e| Error::Parse(format!("bad vertex count: {e}")))?;
    let l: usize = it
        .next()
        .ok_or_else(|| Error::Parse("missing color count".into()))?
        .parse()
        .map_err(|e| Error::Parse(format!("bad color count: {e}")))?;
    if it.next().is_some() {
        return Err(Error::Parse("trailing tokens in color header".into()));
    }
    let mut data = Vec::with_capacity(edge_count(n) * l);
    for r in 0..edge_count(n) {
        let line = lines
            .next()
            .ok_or_else(|| Error::Parse(format!("missing color row for edge rank {r}")))?;
        let vals: Vec<&str> = line.split(',').map(str::trim).collect();
        if vals.len() != l {
            return Err(Error::Parse(format!(
                "color row {r} has {} entries, expected {l}",
                vals.len()
            )));
        }
        for v in vals {
            let x: f64 = v
                .parse()
                .map_err(|e| Error::Parse(format!("bad color weight {v:?}: {e}")))?;
            data.push(crate::scalar::real(x));
        }
    }
    if lines.next().is_some() {
        return Err(Error::Parse("trailing rows in color file".into()));
    }
    ColorArray::new(n, l, data)
}
