//! Minimum spanning tree and diameter over the complete distance graph of a
//! dataset.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linear_scan::Dataset;

/// Undirected weighted edge with `i < j`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
}

impl Edge {
    fn new(a: usize, b: usize, weight: f64) -> Self {
        Edge {
            i: a.min(b),
            j: a.max(b),
            weight,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct EdgeList(pub Vec<Edge>);

impl EdgeList {
    /// Sum of edge weights taken in ascending weight order.
    ///
    /// Every MST of a graph has the same sorted weight sequence, so this sum
    /// is bit-identical across tie-equivalent trees and input permutations.
    pub fn total_weight(&self) -> f64 {
        let mut w: Vec<f64> = self.0.iter().map(|e| e.weight).collect();
        w.sort_by(f64::total_cmp);
        w.into_iter().sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Writes `i,j,weight` rows with a header.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let wrap = |e: csv::Error| Error::param(format!("csv write failed: {e}"));
        w.write_record(["i", "j", "weight"]).map_err(wrap)?;
        for e in &self.0 {
            w.write_record([e.i.to_string(), e.j.to_string(), e.weight.to_string()])
                .map_err(wrap)?;
        }
        w.flush().map_err(|e| Error::param(format!("csv write failed: {e}")))
    }
}

/// Dense Prim's algorithm on the implicit complete graph, O(n²) time and O(n)
/// memory. Edges are listed in the order they join the tree. When several
/// outside vertices are equally close, the lowest index joins first.
pub fn mst(ds: &Dataset) -> EdgeList {
    let n = ds.len();
    if n <= 1 {
        return EdgeList::default();
    }
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut link = vec![0usize; n];
    let mut edges = Vec::with_capacity(n - 1);

    in_tree[0] = true;
    let mut last = 0;
    for _ in 1..n {
        let mut next = usize::MAX;
        for v in 0..n {
            if in_tree[v] {
                continue;
            }
            let d = ds.metric().dist(ds.point(last), ds.point(v));
            if d < best[v] {
                best[v] = d;
                link[v] = last;
            }
            if next == usize::MAX || best[v] < best[next] {
                next = v;
            }
        }
        in_tree[next] = true;
        edges.push(Edge::new(link[next], next, best[next]));
        last = next;
    }
    EdgeList(edges)
}

/// The two points farthest apart, by exhaustive pair scan. Ties keep the
/// lexicographically smallest `(i, j)`.
pub fn diameter(ds: &Dataset) -> Result<Edge> {
    let n = ds.len();
    if n < 2 {
        return Err(Error::param("diameter needs at least two points"));
    }
    let mut best = Edge::new(0, 1, ds.metric().dist(ds.point(0), ds.point(1)));
    for i in 0..n {
        for j in i + 1..n {
            let d = ds.metric().dist(ds.point(i), ds.point(j));
            if d > best.weight {
                best = Edge::new(i, j, d);
            }
        }
    }
    Ok(best)
}
