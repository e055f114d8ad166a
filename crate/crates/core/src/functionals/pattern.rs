//! Small simple graphs used as homomorphism patterns.

use crate::error::{Error, Result};

/// A simple undirected graph on vertices `0..k` with every vertex covered by
/// at least one edge. Edges are stored normalized (`u < v`) in insertion
/// order; the edge *slots* of the homomorphism count follow that order.
///
/// The text format is one header line `k m` followed by `m` lines `u v` with
/// 1-based vertex labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternGraph {
    k: usize,
    edges: Vec<(usize, usize)>,
}

impl PatternGraph {
    /// Builds from 0-based endpoint pairs.
    pub fn new(k: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if k < 2 {
            return Err(Error::Domain(format!(
                "pattern needs at least 2 vertices, got {k}"
            )));
        }
        if edges.is_empty() {
            return Err(Error::Domain("pattern has no edges".into()));
        }
        let mut norm = Vec::with_capacity(edges.len());
        let mut covered = vec![false; k];
        for &(u, v) in edges {
            if u >= k || v >= k {
                return Err(Error::Domain(format!(
                    "edge ({u},{v}) out of range for {k} vertices"
                )));
            }
            if u == v {
                return Err(Error::Domain(format!("loop at vertex {u}")));
            }
            let e = (u.min(v), u.max(v));
            if norm.contains(&e) {
                return Err(Error::Domain(format!("duplicate edge ({},{})", e.0, e.1)));
            }
            covered[u] = true;
            covered[v] = true;
            norm.push(e);
        }
        if let Some(i) = covered.iter().position(|c| !c) {
            return Err(Error::Domain(format!("vertex {i} touches no edge")));
        }
        Ok(PatternGraph { k, edges: norm })
    }

    /// The triangle.
    pub fn triangle() -> Self {
        PatternGraph::new(3, &[(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    /// Path on `k` vertices (`k - 1` edges).
    pub fn path(k: usize) -> Result<Self> {
        let edges: Vec<_> = (0..k.saturating_sub(1)).map(|i| (i, i + 1)).collect();
        PatternGraph::new(k, &edges)
    }

    /// Cycle on `k >= 3` vertices.
    pub fn cycle(k: usize) -> Result<Self> {
        if k < 3 {
            return Err(Error::Domain(format!("cycle needs k >= 3, got {k}")));
        }
        let edges: Vec<_> = (0..k).map(|i| (i, (i + 1) % k)).collect();
        PatternGraph::new(k, &edges)
    }

    /// Single edge on two vertices.
    pub fn single_edge() -> Self {
        PatternGraph::new(2, &[(0, 1)]).unwrap()
    }

    /// Number of vertices.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of edges.
    pub fn m(&self) -> usize {
        self.edges.len()
    }

    /// Normalized 0-based edges in slot order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Parses the `k m` / `u v` text format (1-based labels).
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty pattern file".into()))?;
        let mut it = header.split_whitespace();
        let k: usize = it
            .next()
            .ok_or_else(|| Error::Parse("missing vertex count".into()))?
            .parse()
            .map_err(|e| Error::Parse(format!("bad vertex count: {e}")))?;
        let m: usize = it
            .next()
            .ok_or_else(|| Error::Parse("missing edge count".into()))?
            .parse()
            .map_err(|e| Error::Parse(format!("bad edge count: {e}")))?;
        if it.next().is_some() {
            return Err(Error::Parse("trailing tokens in pattern header".into()));
        }
        let mut edges = Vec::with_capacity(m);
        for line in lines {
            let mut it = line.split_whitespace();
            let u: usize = it
                .next()
                .ok_or_else(|| Error::Parse(format!("bad edge line {line:?}")))?
                .parse()
                .map_err(|e| Error::Parse(format!("bad endpoint in {line:?}: {e}")))?;
            let v: usize = it
                .next()
                .ok_or_else(|| Error::Parse(format!("bad edge line {line:?}")))?
                .parse()
                .map_err(|e| Error::Parse(format!("bad endpoint in {line:?}: {e}")))?;
            if it.next().is_some() {
                return Err(Error::Parse(format!("trailing tokens in edge {line:?}")));
            }
            if u == 0 || v == 0 {
                return Err(Error::Parse(format!(
                    "vertex labels are 1-based, got edge {line:?}"
                )));
            }
            edges.push((u - 1, v - 1));
        }
        if edges.len() != m {
            return Err(Error::Parse(format!(
                "header promised {m} edges, found {}",
                edges.len()
            )));
        }
        PatternGraph::new(k, &edges)
    }

    /// Renders the `k m` / `u v` text format (1-based labels).
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.k, self.edges.len());
        for &(u, v) in &self.edges {
            out.push_str(&format!("{} {}\n", u + 1, v + 1));
        }
        out
    }
}
