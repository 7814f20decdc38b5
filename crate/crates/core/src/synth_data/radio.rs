//! RSS fingerprint maps and fingerprint localization.

use std::io::{Read, Write};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

use super::seeded_rng;
use crate::error::{Error, Result};
use crate::kdtree::KdTree;
use crate::linear_scan::Dataset;
use crate::metrics::{MetricKind, Point};

/// Log-distance path-loss model with Gaussian shadowing:
/// `RSS(d) = p0 - 10 n log10(max(d, d0) / d0) + N(0, sigma²)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PathLossParams {
    /// Received power at the reference distance, dBm.
    pub p0: f64,
    /// Path-loss exponent, `>= 1`.
    pub n_exp: f64,
    /// Shadowing standard deviation, dB.
    pub sigma: f64,
    /// Reference distance, m.
    pub d0: f64,
}

impl Default for PathLossParams {
    fn default() -> Self {
        PathLossParams {
            p0: -40.0,
            n_exp: 2.5,
            sigma: 2.0,
            d0: 1.0,
        }
    }
}

impl PathLossParams {
    pub fn validate(&self) -> Result<()> {
        if !self.p0.is_finite() {
            return Err(Error::param("p0 must be finite"));
        }
        if !(self.n_exp >= 1.0 && self.n_exp.is_finite()) {
            return Err(Error::param(format!("path-loss exponent must be >= 1, got {}", self.n_exp)));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::param(format!("sigma must be >= 0, got {}", self.sigma)));
        }
        if !(self.d0 > 0.0 && self.d0.is_finite()) {
            return Err(Error::param(format!("reference distance must be > 0, got {}", self.d0)));
        }
        Ok(())
    }

    /// Noise-free RSS at distance `d`.
    pub fn mean_rss(&self, d: f64) -> f64 {
        self.p0 - 10.0 * self.n_exp * (d.max(self.d0) / self.d0).log10()
    }

    /// One RSS reading per access point at `loc`.
    fn reading<R: Rng>(&self, loc: [f64; 2], aps: &[[f64; 2]], noise: Option<&Normal<f64>>, rng: &mut R) -> Vec<f64> {
        aps.iter()
            .map(|ap| {
                let d = ((loc[0] - ap[0]).powi(2) + (loc[1] - ap[1]).powi(2)).sqrt();
                let mean = self.mean_rss(d);
                match noise {
                    Some(n) => mean + n.sample(rng),
                    None => mean,
                }
            })
            .collect()
    }

    fn noise(&self) -> Option<Normal<f64>> {
        (self.sigma > 0.0).then(|| Normal::new(0.0, self.sigma).expect("sigma validated"))
    }
}

/// Rectangular survey grid anchored at the origin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Grid {
    pub width: f64,
    pub height: f64,
    pub spacing: f64,
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            width: 20.0,
            height: 20.0,
            spacing: 1.0,
        }
    }
}

impl Grid {
    pub fn validate(&self) -> Result<()> {
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return Err(Error::param(format!("grid spacing must be > 0, got {}", self.spacing)));
        }
        if !(self.width >= 0.0 && self.height >= 0.0 && self.width.is_finite() && self.height.is_finite()) {
            return Err(Error::param("grid extent must be finite and non-negative"));
        }
        Ok(())
    }

    /// Grid locations, row by row (y outer, x inner).
    pub fn locations(&self) -> Vec<[f64; 2]> {
        let steps = |extent: f64| (extent / self.spacing + 1e-9).floor() as usize + 1;
        let (nx, ny) = (steps(self.width), steps(self.height));
        (0..ny)
            .flat_map(|j| (0..nx).map(move |i| [i as f64 * self.spacing, j as f64 * self.spacing]))
            .collect()
    }
}

/// Complete localization scenario: propagation, access points and survey grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Scenario {
    pub params: PathLossParams,
    pub aps: Vec<[f64; 2]>,
    pub grid: Grid,
}

impl Default for Scenario {
    /// 20 x 20 m area, 1 m grid, four access points at the corners.
    fn default() -> Self {
        let grid = Grid::default();
        Scenario {
            params: PathLossParams::default(),
            aps: vec![
                [0.0, 0.0],
                [grid.width, 0.0],
                [0.0, grid.height],
                [grid.width, grid.height],
            ],
            grid,
        }
    }
}

impl Scenario {
    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.params.sigma = sigma;
        self
    }
}

/// Location-tagged RSS vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct FingerprintMap {
    locations: Vec<[f64; 2]>,
    rss: Dataset,
}

impl FingerprintMap {
    pub fn new(locations: Vec<[f64; 2]>, rss: Dataset) -> Result<Self> {
        if locations.len() != rss.len() {
            return Err(Error::param("one location per RSS vector required"));
        }
        let mut sorted = locations.clone();
        sorted.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::param("fingerprint locations must be distinct"));
        }
        Ok(FingerprintMap { locations, rss })
    }

    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }

    pub fn access_points(&self) -> usize {
        self.rss.dim()
    }

    pub fn locations(&self) -> &[[f64; 2]] {
        &self.locations
    }

    pub fn rss(&self) -> &Dataset {
        &self.rss
    }

    pub fn localizer(&self) -> Result<Localizer> {
        Ok(Localizer {
            locations: self.locations.clone(),
            tree: KdTree::build(self.rss.clone())?,
        })
    }

    /// Writes `x,y,rss_1..rss_N` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let wrap = |e: csv::Error| Error::param(format!("csv write failed: {e}"));
        let mut header = vec!["x".to_string(), "y".to_string()];
        header.extend((1..=self.access_points()).map(|i| format!("rss_{i}")));
        w.write_record(&header).map_err(wrap)?;
        for (loc, rss) in self.locations.iter().zip(self.rss.rows()) {
            let rec: Vec<String> = loc.iter().chain(rss).map(|v| v.to_string()).collect();
            w.write_record(&rec).map_err(wrap)?;
        }
        w.flush().map_err(|e| Error::io("<fingerprint map>", e))
    }

    /// Reads the format produced by [`FingerprintMap::write_csv`].
    pub fn read_csv<R: Read>(input: R, source: &str) -> Result<Self> {
        let schema = super::CsvSchema::default();
        let loaded = super::read_csv(input, source, &schema)?;
        let names = &loaded.feature_names;
        if names.len() < 3 || names[0] != "x" || names[1] != "y" {
            return Err(Error::Parse {
                path: source.into(),
                line: 1,
                message: "expected header x,y,rss_1..rss_N".into(),
            });
        }
        let ds = &loaded.dataset;
        let n_ap = ds.dim() - 2;
        let locations = ds.rows().map(|r| [r[0], r[1]]).collect();
        let flat = ds.rows().flat_map(|r| r[2..].iter().copied()).collect();
        FingerprintMap::new(locations, Dataset::from_flat(flat, n_ap, MetricKind::Euclidean)?)
    }
}

/// Generates one fingerprint per grid location.
pub fn gen_fingerprints(params: &PathLossParams, aps: &[Point], grid: &Grid, seed: u64) -> Result<FingerprintMap> {
    params.validate()?;
    grid.validate()?;
    if aps.is_empty() {
        return Err(Error::param("at least one access point required"));
    }
    let aps = aps
        .iter()
        .map(|p| match p.coords() {
            [x, y] => Ok([*x, *y]),
            _ => Err(Error::DimensionMismatch { expected: 2, found: p.dim() }),
        })
        .collect::<Result<Vec<_>>>()?;
    gen_map(params, &aps, grid, seed)
}

fn gen_map(params: &PathLossParams, aps: &[[f64; 2]], grid: &Grid, seed: u64) -> Result<FingerprintMap> {
    let mut rng = seeded_rng(seed, 0);
    let noise = params.noise();
    let locations = grid.locations();
    let flat = locations
        .iter()
        .flat_map(|&loc| params.reading(loc, aps, noise.as_ref(), &mut rng))
        .collect();
    FingerprintMap::new(locations, Dataset::from_flat(flat, aps.len(), MetricKind::Euclidean)?)
}

/// Fingerprint map indexed for repeated localization.
#[derive(Clone, Debug)]
pub struct Localizer {
    locations: Vec<[f64; 2]>,
    tree: KdTree,
}

impl Localizer {
    /// Position estimate for an RSS vector: the location of the nearest
    /// fingerprint for `k = 1`, otherwise the centroid of the `k` nearest.
    pub fn locate(&self, rss: &[f64], k: usize) -> Result<[f64; 2]> {
        let nbrs = self.tree.query_knn(rss, k)?;
        let mut c = [0.0; 2];
        for n in nbrs.iter() {
            c[0] += self.locations[n.index][0];
            c[1] += self.locations[n.index][1];
        }
        let m = nbrs.len() as f64;
        Ok([c[0] / m, c[1] / m])
    }
}

/// One-shot localization; builds the index on every call.
pub fn localize(map: &FingerprintMap, rss: &[f64], k: usize) -> Result<[f64; 2]> {
    map.localizer()?.locate(rss, k)
}

/// Error statistics of a Monte-Carlo localization run for one `k`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalizationRun {
    pub k: usize,
    pub queries: usize,
    pub median: f64,
    pub p90: f64,
    pub mean: f64,
    pub max: f64,
    /// Per-query errors in query order, meters.
    #[serde(skip)]
    pub errors: Vec<f64>,
}

impl LocalizationRun {
    pub fn from_errors(k: usize, errors: Vec<f64>) -> Self {
        let mut sorted = errors.clone();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let median = if n == 0 {
            f64::NAN
        } else if n % 2 == 1 {
            sorted[n / 2]
        } else {
            (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
        };
        // nearest-rank percentile
        let p90 = if n == 0 { f64::NAN } else { sorted[((0.9 * n as f64).ceil() as usize).max(1) - 1] };
        LocalizationRun {
            k,
            queries: n,
            median,
            p90,
            mean: errors.iter().sum::<f64>() / n as f64,
            max: sorted.last().copied().unwrap_or(f64::NAN),
            errors,
        }
    }
}

impl Scenario {
    /// Survey map of this scenario (stream 0 of `seed`).
    pub fn fingerprint_map(&self, seed: u64) -> Result<FingerprintMap> {
        self.params.validate()?;
        self.grid.validate()?;
        if self.aps.is_empty() {
            return Err(Error::param("at least one access point required"));
        }
        gen_map(&self.params, &self.aps, &self.grid, seed)
    }

    /// Monte-Carlo localization: each query picks a uniformly random grid
    /// location and draws a fresh noisy RSS reading there (stream `i + 1` of
    /// `seed` for query `i`), then is located with every `k` in `ks`.
    ///
    /// Queries run on the current rayon pool; results are collected in query
    /// order, so output does not depend on the number of workers.
    pub fn localization_trial(&self, ks: &[usize], queries: usize, seed: u64) -> Result<Vec<LocalizationRun>> {
        let map = self.fingerprint_map(seed)?;
        let loc = map.localizer()?;
        let noise = self.params.noise();
        let per_query: Vec<Vec<f64>> = (0..queries)
            .into_par_iter()
            .map(|i| {
                let mut rng = seeded_rng(seed, i as u64 + 1);
                let truth = map.locations()[rng.random_range(0..map.len())];
                let rss = self.params.reading(truth, &self.aps, noise.as_ref(), &mut rng);
                ks.iter()
                    .map(|&k| {
                        let est = loc.locate(&rss, k)?;
                        Ok(((est[0] - truth[0]).powi(2) + (est[1] - truth[1]).powi(2)).sqrt())
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<_>>()?;
        Ok(ks
            .iter()
            .enumerate()
            .map(|(j, &k)| LocalizationRun::from_errors(k, per_query.iter().map(|e| e[j]).collect()))
            .collect())
    }
}
