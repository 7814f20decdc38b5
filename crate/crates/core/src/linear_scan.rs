//! Datasets, neighbor lists and the brute-force search used as the
//! reference for every indexed query.
//!
//! Nothing here is accelerated: each query computes all `n` distances. Ties on
//! distance are broken by ascending dataset index.

use std::cmp::Ordering;
use std::ops::Deref;

use serde::Serialize;

use crate::classifier::Label;
use crate::error::{Error, Result};
use crate::metrics::{MetricKind, Point};

/// A non-empty set of equal-dimension points, stored row-major, with optional
/// per-point labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    coords: Vec<f64>,
    dim: usize,
    labels: Option<Vec<Label>>,
    metric: MetricKind,
}

impl Dataset {
    pub fn new(points: Vec<Point>, metric: MetricKind) -> Result<Self> {
        let dim = points.first().ok_or(Error::EmptyDataset)?.dim();
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in &points {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.dim(),
                });
            }
            coords.extend_from_slice(p);
        }
        Ok(Dataset {
            coords,
            dim,
            labels: None,
            metric,
        })
    }

    pub fn with_labels(points: Vec<Point>, labels: Vec<Label>, metric: MetricKind) -> Result<Self> {
        Dataset::new(points, metric)?.set_labels(labels)
    }

    /// Builds a dataset from row-major coordinates.
    pub fn from_flat(coords: Vec<f64>, dim: usize, metric: MetricKind) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidPoint("dimension must be at least 1".into()));
        }
        if coords.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::param(format!(
                "{} coordinates do not divide into rows of dimension {dim}",
                coords.len()
            )));
        }
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidPoint(format!(
                "row {} coordinate {} is not finite",
                i / dim,
                i % dim
            )));
        }
        Ok(Dataset {
            coords,
            dim,
            labels: None,
            metric,
        })
    }

    /// Attaches a label per point.
    pub fn set_labels(mut self, labels: Vec<Label>) -> Result<Self> {
        if labels.len() != self.len() {
            return Err(Error::param(format!(
                "{} labels for {} points",
                labels.len(),
                self.len()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn with_metric(mut self, metric: MetricKind) -> Self {
        self.metric = metric;
        self
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    /// Always false; datasets hold at least one point.
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn metric(&self) -> MetricKind {
        self.metric
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    /// Owned copy of point `i`.
    pub fn point_owned(&self, i: usize) -> Point {
        Point::new(self.point(i).to_vec()).expect("dataset coordinates are validated")
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn flat(&self) -> &[f64] {
        &self.coords
    }

    pub fn labels(&self) -> Option<&[Label]> {
        self.labels.as_deref()
    }

    pub(crate) fn check_query(&self, q: &[f64]) -> Result<()> {
        if q.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: q.len(),
            });
        }
        Ok(())
    }

    /// Distance from `q` to point `i` under the dataset metric.
    #[inline]
    pub fn dist_to(&self, q: &[f64], i: usize) -> f64 {
        self.metric.dist(q, self.point(i))
    }
}

/// One search result: a dataset index and its distance to the query.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

impl Neighbor {
    /// Total order used for every result list: distance, then index.
    #[inline]
    pub fn cmp_rank(&self, other: &Self) -> Ordering {
        self.distance
            .total_cmp(&other.distance)
            .then(self.index.cmp(&other.index))
    }
}

/// Search results ordered by non-decreasing distance, ties by index.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct NeighborList(Vec<Neighbor>);

impl NeighborList {
    /// Sorts `entries` into canonical rank order.
    pub fn from_unsorted(mut entries: Vec<Neighbor>) -> Self {
        entries.sort_by(Neighbor::cmp_rank);
        NeighborList(entries)
    }

    pub fn indices(&self) -> Vec<usize> {
        self.0.iter().map(|n| n.index).collect()
    }

    pub fn distances(&self) -> Vec<f64> {
        self.0.iter().map(|n| n.distance).collect()
    }

    pub fn into_vec(self) -> Vec<Neighbor> {
        self.0
    }
}

impl Deref for NeighborList {
    type Target = [Neighbor];

    fn deref(&self) -> &[Neighbor] {
        &self.0
    }
}

impl IntoIterator for NeighborList {
    type Item = Neighbor;
    type IntoIter = std::vec::IntoIter<Neighbor>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.into_iter()
    }
}

/// Common query surface of the brute-force scan and the K-d tree.
pub trait NeighborSearch {
    fn dataset(&self) -> &Dataset;
    fn nn(&self, q: &[f64]) -> Result<NeighborList>;
    fn knn(&self, q: &[f64], k: usize) -> Result<NeighborList>;
    fn radius(&self, q: &[f64], rho: f64) -> Result<NeighborList>;
}

pub(crate) fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::param("k must be at least 1"));
    }
    Ok(())
}

pub(crate) fn check_rho(rho: f64) -> Result<()> {
    if !(rho >= 0.0) {
        return Err(Error::param(format!("radius must be non-negative, got {rho}")));
    }
    Ok(())
}

/// Exact nearest neighbor by full scan.
pub fn scan_nn(ds: &Dataset, q: &[f64]) -> Result<NeighborList> {
    ds.check_query(q)?;
    let mut best = Neighbor {
        index: 0,
        distance: ds.dist_to(q, 0),
    };
    for i in 1..ds.len() {
        let d = ds.dist_to(q, i);
        if d < best.distance {
            best = Neighbor { index: i, distance: d };
        }
    }
    Ok(NeighborList(vec![best]))
}

/// The `min(k, n)` nearest points by full sort.
pub fn scan_knn(ds: &Dataset, q: &[f64], k: usize) -> Result<NeighborList> {
    ds.check_query(q)?;
    check_k(k)?;
    let all = (0..ds.len())
        .map(|i| Neighbor {
            index: i,
            distance: ds.dist_to(q, i),
        })
        .collect();
    let mut list = NeighborList::from_unsorted(all);
    list.0.truncate(k);
    Ok(list)
}

/// Every point within the closed ball of radius `rho`, sorted by distance.
pub fn scan_radius(ds: &Dataset, q: &[f64], rho: f64) -> Result<NeighborList> {
    ds.check_query(q)?;
    check_rho(rho)?;
    let hits = (0..ds.len())
        .filter_map(|i| {
            let d = ds.dist_to(q, i);
            (d <= rho).then_some(Neighbor { index: i, distance: d })
        })
        .collect();
    Ok(NeighborList::from_unsorted(hits))
}

impl NeighborSearch for Dataset {
    fn dataset(&self) -> &Dataset {
        self
    }

    fn nn(&self, q: &[f64]) -> Result<NeighborList> {
        scan_nn(self, q)
    }

    fn knn(&self, q: &[f64], k: usize) -> Result<NeighborList> {
        scan_knn(self, q, k)
    }

    fn radius(&self, q: &[f64], rho: f64) -> Result<NeighborList> {
        scan_radius(self, q, rho)
    }
}
