//! Points and distance functions over real vector spaces.
//!
//! Every search structure in the crate is parameterised by a [`MetricKind`].
//! All supported metrics are members of the Minkowski family, which lets the
//! K-d tree compute exact lower bounds on region distances with the same
//! arithmetic used for point distances.

use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used by the axiom checks for symmetry and the triangle
/// inequality.
pub const AXIOM_RELATIVE_TOLERANCE: f64 = 1e-9;

/// A finite, non-empty real vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Point(Vec<f64>);

impl Point {
    /// Builds a point, rejecting empty vectors and non-finite coordinates.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidPoint("point has no coordinates".into()));
        }
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidPoint(format!(
                "coordinate {i} is not finite ({})",
                coords[i]
            )));
        }
        Ok(Point(coords))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Point {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for Point {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Point::new(v)
    }
}

impl<const N: usize> TryFrom<[f64; N]> for Point {
    type Error = Error;

    fn try_from(v: [f64; N]) -> Result<Self> {
        Point::new(v.to_vec())
    }
}

impl From<Point> for Vec<f64> {
    fn from(p: Point) -> Self {
        p.0
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl FromStr for Point {
    type Err = Error;

    /// Parses comma-separated coordinates, e.g. `9,2`.
    fn from_str(s: &str) -> Result<Self> {
        let coords = s
            .trim()
            .trim_start_matches('(')
            .trim_end_matches(')')
            .split(',')
            .map(|c| {
                c.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidPoint(format!("cannot parse coordinate {c:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Point::new(coords)
    }
}

/// Exponent of a Minkowski metric; always `>= 1`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct MinkowskiExponent(f64);

impl MinkowskiExponent {
    pub fn new(p: f64) -> Result<Self> {
        if !(p.is_finite() && p >= 1.0) {
            return Err(Error::InvalidMetric(format!(
                "Minkowski exponent must be a finite value >= 1, got {p}"
            )));
        }
        Ok(MinkowskiExponent(p))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// Distance function on points.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum MetricKind {
    #[default]
    Euclidean,
    Manhattan,
    Chebyshev,
    Minkowski(MinkowskiExponent),
}

impl MetricKind {
    pub fn minkowski(p: f64) -> Result<Self> {
        MinkowskiExponent::new(p).map(MetricKind::Minkowski)
    }

    /// Norm of a vector of non-negative per-axis gaps.
    ///
    /// Point distances and region lower bounds both go through this function,
    /// so a gap vector that is componentwise smaller never yields a larger
    /// result.
    #[inline]
    pub fn norm_of_gaps<I>(self, gaps: I) -> f64
    where
        I: IntoIterator<Item = f64>,
    {
        match self {
            MetricKind::Euclidean => gaps.into_iter().map(|g| g * g).sum::<f64>().sqrt(),
            MetricKind::Manhattan => gaps.into_iter().sum(),
            MetricKind::Chebyshev => gaps.into_iter().fold(0.0, f64::max),
            MetricKind::Minkowski(p) => {
                let p = p.get();
                gaps.into_iter().map(|g| g.powf(p)).sum::<f64>().powf(p.recip())
            }
        }
    }

    /// Distance between two coordinate slices of equal length.
    ///
    /// Bit-identical under argument swap: each gap is `|a_i - b_i|`, which is
    /// exact under negation.
    #[inline]
    pub fn dist(self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        self.norm_of_gaps(a.iter().zip(b).map(|(x, y)| (x - y).abs()))
    }

    /// Checked distance between two points.
    pub fn distance(self, a: &Point, b: &Point) -> Result<f64> {
        if a.dim() != b.dim() {
            return Err(Error::DimensionMismatch {
                expected: a.dim(),
                found: b.dim(),
            });
        }
        Ok(self.dist(a, b))
    }
}

/// Checked distance, free-function form.
pub fn distance(metric: MetricKind, a: &Point, b: &Point) -> Result<f64> {
    metric.distance(a, b)
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricKind::Euclidean => write!(f, "euclidean"),
            MetricKind::Manhattan => write!(f, "manhattan"),
            MetricKind::Chebyshev => write!(f, "chebyshev"),
            MetricKind::Minkowski(p) => write!(f, "minkowski:{}", p.get()),
        }
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    /// Accepts `euclidean`, `manhattan`, `chebyshev` and `minkowski:<p>`.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "euclidean" | "l2" => Ok(MetricKind::Euclidean),
            "manhattan" | "l1" => Ok(MetricKind::Manhattan),
            "chebyshev" | "linf" => Ok(MetricKind::Chebyshev),
            other => {
                let p = other
                    .strip_prefix("minkowski:")
                    .or_else(|| other.strip_prefix("minkowski="))
                    .ok_or_else(|| Error::InvalidMetric(format!("unknown metric {s:?}")))?;
                let p: f64 = p
                    .parse()
                    .map_err(|_| Error::InvalidMetric(format!("bad Minkowski exponent {p:?}")))?;
                MetricKind::minkowski(p)
            }
        }
    }
}

/// Which metric axiom a counterexample violates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axiom {
    Positivity,
    Symmetry,
    Triangle,
}

/// A violating tuple of sample indices. `k` is only set for triangle violations.
#[derive(Clone, Debug, PartialEq)]
pub struct Counterexample {
    pub axiom: Axiom,
    pub i: usize,
    pub j: usize,
    pub k: Option<usize>,
    /// Left and right side of the violated relation.
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AxiomReport {
    pub positivity: bool,
    pub symmetry: bool,
    pub triangle: bool,
    /// First violation found, in (positivity, symmetry, triangle) scan order.
    pub counterexample: Option<Counterexample>,
}

impl AxiomReport {
    pub fn all_hold(&self) -> bool {
        self.positivity && self.symmetry && self.triangle
    }
}

/// Checks positivity, symmetry and the triangle inequality of `metric` over
/// every pair and triple drawn from `sample`.
pub fn check_metric_axioms(metric: MetricKind, sample: &[Point]) -> Result<AxiomReport> {
    check_axioms_with(sample, |a, b| metric.dist(a, b))
}

/// Same as [`check_metric_axioms`] for an arbitrary distance-like function.
///
/// Points with equal coordinates are treated as the same object, so
/// positivity is only required between coordinate-distinct points.
pub fn check_axioms_with<F>(sample: &[Point], dist: F) -> Result<AxiomReport>
where
    F: Fn(&[f64], &[f64]) -> f64,
{
    let first = sample.first().ok_or(Error::EmptyDataset)?;
    if let Some(p) = sample.iter().find(|p| p.dim() != first.dim()) {
        return Err(Error::DimensionMismatch {
            expected: first.dim(),
            found: p.dim(),
        });
    }

    let n = sample.len();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            d[i * n + j] = dist(&sample[i], &sample[j]);
        }
    }

    let mut report = AxiomReport {
        positivity: true,
        symmetry: true,
        triangle: true,
        counterexample: None,
    };
    let record = |report: &mut AxiomReport, c: Counterexample| {
        match c.axiom {
            Axiom::Positivity => report.positivity = false,
            Axiom::Symmetry => report.symmetry = false,
            Axiom::Triangle => report.triangle = false,
        }
        if report.counterexample.is_none() {
            report.counterexample = Some(c);
        }
    };

    for i in 0..n {
        for j in 0..n {
            let dij = d[i * n + j];
            if i != j && sample[i] != sample[j] && dij.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
                record(
                    &mut report,
                    Counterexample { axiom: Axiom::Positivity, i, j, k: None, lhs: dij, rhs: 0.0 },
                );
            }
            let dji = d[j * n + i];
            if i < j && !within_relative(dij, dji) {
                record(
                    &mut report,
                    Counterexample { axiom: Axiom::Symmetry, i, j, k: None, lhs: dij, rhs: dji },
                );
            }
        }
    }

    for i in 0..n {
        for j in 0..n {
            let dij = d[i * n + j];
            for k in 0..n {
                let via = d[i * n + k] + d[j * n + k];
                if !leq_relative(dij, via) {
                    record(
                        &mut report,
                        Counterexample { axiom: Axiom::Triangle, i, j, k: Some(k), lhs: dij, rhs: via },
                    );
                }
            }
        }
    }
    Ok(report)
}

fn within_relative(a: f64, b: f64) -> bool {
    (a - b).abs() <= AXIOM_RELATIVE_TOLERANCE * a.abs().max(b.abs())
}

fn leq_relative(a: f64, b: f64) -> bool {
    a <= b || a - b <= AXIOM_RELATIVE_TOLERANCE * a.abs().max(b.abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c: &[f64]) -> Point {
        Point::new(c.to_vec()).unwrap()
    }

    fn six_points() -> Vec<Point> {
        [[7., 2.], [5., 4.], [9., 6.], [2., 3.], [4., 7.], [8., 1.]]
            .iter()
            .map(|c| p(c))
            .collect()
    }

    #[test]
    fn distance_examples() {
        let e = MetricKind::Euclidean;
        assert_eq!(e.distance(&p(&[0., 0.]), &p(&[0., 0.])).unwrap(), 0.0);
        let d = e.distance(&p(&[7., 2.]), &p(&[8., 1.])).unwrap();
        assert_eq!(d, 2f64.sqrt());
        assert_eq!(MetricKind::Manhattan.distance(&p(&[2., 3.]), &p(&[9., 6.])).unwrap(), 10.0);
        assert_eq!(MetricKind::Chebyshev.distance(&p(&[2., 3.]), &p(&[9., 6.])).unwrap(), 7.0);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let err = MetricKind::Euclidean.distance(&p(&[1.]), &p(&[1., 2.]));
        assert!(matches!(err, Err(Error::DimensionMismatch { expected: 1, found: 2 })));
    }

    #[test]
    fn minkowski_below_one_rejected() {
        assert!(MetricKind::minkowski(0.5).is_err());
        assert!(MetricKind::minkowski(f64::NAN).is_err());
        assert!(MetricKind::minkowski(1.0).is_ok());
        assert!("minkowski:0.9".parse::<MetricKind>().is_err());
        assert_eq!("minkowski:3".parse::<MetricKind>().unwrap(), MetricKind::minkowski(3.0).unwrap());
    }

    #[test]
    fn non_finite_points_rejected() {
        assert!(Point::new(vec![f64::NAN]).is_err());
        assert!(Point::new(vec![1.0, f64::INFINITY]).is_err());
        assert!(Point::new(vec![]).is_err());
        assert!("1,x".parse::<Point>().is_err());
        assert_eq!("9,2".parse::<Point>().unwrap(), p(&[9., 2.]));
    }

    #[test]
    fn minkowski_matches_named_metrics() {
        let a = p(&[0.3, -1.2, 4.0]);
        let b = p(&[2.5, 0.7, -1.0]);
        let m1 = MetricKind::minkowski(1.0).unwrap().dist(&a, &b);
        let m2 = MetricKind::minkowski(2.0).unwrap().dist(&a, &b);
        assert!((m1 - MetricKind::Manhattan.dist(&a, &b)).abs() < 1e-12);
        assert!((m2 - MetricKind::Euclidean.dist(&a, &b)).abs() < 1e-12);
    }

    #[test]
    fn axioms_hold_on_six_points() {
        for m in [MetricKind::Euclidean, MetricKind::Manhattan, MetricKind::Chebyshev] {
            let r = check_metric_axioms(m, &six_points()).unwrap();
            assert!(r.all_hold(), "{m}: {r:?}");
            assert!(r.counterexample.is_none());
        }
    }

    #[test]
    fn single_point_sample_passes() {
        let r = check_metric_axioms(MetricKind::Euclidean, &[p(&[3., 3.])]).unwrap();
        assert!(r.all_hold());
    }

    #[test]
    fn squared_euclidean_breaks_triangle() {
        let pts = vec![p(&[0., 0.]), p(&[1., 0.]), p(&[2., 0.])];
        let sq = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
        let r = check_axioms_with(&pts, sq).unwrap();
        assert!(r.positivity && r.symmetry);
        assert!(!r.triangle);
        let c = r.counterexample.unwrap();
        assert_eq!(c.axiom, Axiom::Triangle);
        assert_eq!((c.i, c.j, c.k), (0, 2, Some(1)));
        assert_eq!((c.lhs, c.rhs), (4.0, 2.0));
    }

    #[test]
    fn empty_sample_rejected() {
        assert!(check_metric_axioms(MetricKind::Euclidean, &[]).is_err());
    }

    #[test]
    fn metric_display_round_trips() {
        for m in [
            MetricKind::Euclidean,
            MetricKind::Manhattan,
            MetricKind::Chebyshev,
            MetricKind::minkowski(3.5).unwrap(),
        ] {
            assert_eq!(m.to_string().parse::<MetricKind>().unwrap(), m);
        }
    }
}
