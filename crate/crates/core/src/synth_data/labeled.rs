//! Labeled two-class and mixture generators.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;
use statrs::function::erf::erfc;

use super::seeded_rng;
use crate::classifier::{Label, TrainingSet};
use crate::error::{Error, Result};
use crate::linear_scan::Dataset;
use crate::metrics::MetricKind;

/// Upper tail of the standard normal, `Q(x) = P(Z > x)`.
pub fn gaussian_q(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Independent Gaussian per feature.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassModel {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl ClassModel {
    fn validate(&self) -> Result<()> {
        if self.mean.is_empty() || self.mean.len() != self.std.len() {
            return Err(Error::param("class model needs one std per mean"));
        }
        if self.std.iter().any(|s| !(*s >= 0.0 && s.is_finite())) || self.mean.iter().any(|m| !m.is_finite()) {
            return Err(Error::param("class model parameters must be finite, std >= 0"));
        }
        Ok(())
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        self.mean
            .iter()
            .zip(&self.std)
            .map(|(&m, &s)| if s > 0.0 { m + s * rng.sample::<f64, _>(rand_distr::StandardNormal) } else { m })
            .collect()
    }
}

fn two_class(first: &ClassModel, second: &ClassModel, counts: (usize, usize), seed: u64) -> Result<TrainingSet> {
    first.validate()?;
    second.validate()?;
    if first.mean.len() != second.mean.len() {
        return Err(Error::param("both classes need the same features"));
    }
    if counts.0 == 0 || counts.1 == 0 {
        return Err(Error::param("each class needs at least one sample"));
    }
    let mut rng = seeded_rng(seed, 0);
    let mut flat = Vec::with_capacity((counts.0 + counts.1) * first.mean.len());
    let mut labels = Vec::with_capacity(counts.0 + counts.1);
    for (model, n, label) in [(first, counts.0, 1), (second, counts.1, 2)] {
        for _ in 0..n {
            flat.extend(model.sample(&mut rng));
            labels.push(Label::new(label)?);
        }
    }
    let ds = Dataset::from_flat(flat, first.mean.len(), MetricKind::Euclidean)?.set_labels(labels)?;
    TrainingSet::with_classes(ds, 2)
}

/// LoS/NLoS features: `(rss_dbm, range_residual_m)`. Line-of-sight links have
/// higher mean RSS, smaller range bias and lower spread than obstructed ones.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LosNlosParams {
    pub los: ClassModel,
    pub nlos: ClassModel,
}

impl Default for LosNlosParams {
    fn default() -> Self {
        LosNlosParams {
            los: ClassModel { mean: vec![-60.0, 0.2], std: vec![3.0, 0.3] },
            nlos: ClassModel { mean: vec![-75.0, 1.5], std: vec![6.0, 1.0] },
        }
    }
}

impl LosNlosParams {
    /// Zero-variance classes; trivially separable.
    pub fn separated() -> Self {
        let mut p = Self::default();
        p.los.std = vec![0.0; 2];
        p.nlos.std = vec![0.0; 2];
        p
    }

    /// Label 1 is LoS, label 2 is NLoS.
    pub fn generate(&self, seed: u64, n_los: usize, n_nlos: usize) -> Result<TrainingSet> {
        two_class(&self.los, &self.nlos, (n_los, n_nlos), seed)
    }
}

/// LoS/NLoS set with default parameters.
pub fn gen_los_nlos(seed: u64, n_los: usize, n_nlos: usize) -> Result<TrainingSet> {
    LosNlosParams::default().generate(seed, n_los, n_nlos)
}

/// One cell KPI report: RSRP (dBm), RSRQ (dB), SINR (dB) and RACH success
/// ratio.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KpiRecord {
    pub rsrp: f64,
    pub rsrq: f64,
    pub sinr: f64,
    pub rach_success: f64,
    pub anomalous: bool,
}

impl KpiRecord {
    pub const FEATURES: [&'static str; 4] = ["rsrp", "rsrq", "sinr", "rach_success"];

    pub fn features(&self) -> [f64; 4] {
        [self.rsrp, self.rsrq, self.sinr, self.rach_success]
    }

    pub fn label(&self) -> Label {
        Label::new(if self.anomalous { 2 } else { 1 }).expect("non-zero")
    }
}

/// Sleeping-cell KPI distributions. Anomalous reports come from a cell whose
/// random-access channel fails: signal quality and RACH success drop while
/// overlapping the healthy distribution.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SleepingCellParams {
    pub normal: ClassModel,
    pub anomalous: ClassModel,
}

impl Default for SleepingCellParams {
    fn default() -> Self {
        SleepingCellParams {
            normal: ClassModel {
                mean: vec![-85.0, -10.0, 12.0, 0.95],
                std: vec![6.0, 2.0, 4.0, 0.03],
            },
            anomalous: ClassModel {
                mean: vec![-95.0, -13.0, 5.0, 0.75],
                std: vec![7.0, 2.5, 5.0, 0.12],
            },
        }
    }
}

impl SleepingCellParams {
    pub fn separated() -> Self {
        let mut p = Self::default();
        p.normal.std = vec![0.0; 4];
        p.anomalous.std = vec![0.0; 4];
        p
    }

    /// Label 1 is normal, label 2 is anomalous.
    pub fn generate(&self, seed: u64, n_normal: usize, n_anomalous: usize) -> Result<TrainingSet> {
        if self.normal.mean.len() != 4 {
            return Err(Error::param("sleeping-cell records have four KPIs"));
        }
        two_class(&self.normal, &self.anomalous, (n_normal, n_anomalous), seed)
    }

    pub fn records(&self, seed: u64, n_normal: usize, n_anomalous: usize) -> Result<Vec<KpiRecord>> {
        let t = self.generate(seed, n_normal, n_anomalous)?;
        Ok(t.data()
            .rows()
            .zip(t.labels())
            .map(|(r, l)| KpiRecord {
                rsrp: r[0],
                rsrq: r[1],
                sinr: r[2],
                rach_success: r[3],
                anomalous: l.get() == 2,
            })
            .collect())
    }
}

/// Sleeping-cell set with default parameters.
pub fn gen_sleeping_cell(seed: u64, n_normal: usize, n_anomalous: usize) -> Result<TrainingSet> {
    SleepingCellParams::default().generate(seed, n_normal, n_anomalous)
}

/// Equal-prior, unit-variance isotropic Gaussian classes whose means sit
/// `separation` apart along the first axis: class `c` (label `c + 1`) has
/// mean `c * separation`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GaussianMixture {
    pub separation: f64,
    pub classes: usize,
    pub dim: usize,
}

impl GaussianMixture {
    pub fn new(separation: f64, classes: usize, dim: usize) -> Result<Self> {
        if classes < 2 {
            return Err(Error::param("mixture needs at least two classes"));
        }
        if dim == 0 {
            return Err(Error::param("mixture dimension must be at least 1"));
        }
        if !(separation >= 0.0 && separation.is_finite()) {
            return Err(Error::param("separation must be finite and >= 0"));
        }
        Ok(GaussianMixture { separation, classes, dim })
    }

    /// Closed-form Bayes risk. The optimal rule thresholds the first
    /// coordinate at the midpoints between neighboring means; each of the two
    /// outer classes errs with probability `Q(s/2)` and each inner class with
    /// `2 Q(s/2)`, giving `2 (M - 1) / M * Q(s/2)`.
    pub fn bayes_risk(&self) -> f64 {
        let m = self.classes as f64;
        2.0 * (m - 1.0) / m * gaussian_q(self.separation / 2.0)
    }

    /// Bayes-optimal decision: nearest class mean on the first axis, lowest
    /// label on exact ties.
    pub fn bayes_predict(&self, x: &[f64]) -> Label {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for c in 0..self.classes {
            let d = (x[0] - c as f64 * self.separation).abs();
            if d < best_d {
                best = c;
                best_d = d;
            }
        }
        Label::new(best as u32 + 1).expect("non-zero")
    }

    /// `n` samples; each sample's class is drawn uniformly.
    pub fn sample(&self, n: usize, seed: u64) -> Result<TrainingSet> {
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        let mut rng = seeded_rng(seed, 0);
        let unit = Normal::new(0.0, 1.0).expect("valid");
        let mut flat = Vec::with_capacity(n * self.dim);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let c = rng.random_range(0..self.classes);
            flat.push(c as f64 * self.separation + unit.sample(&mut rng));
            for _ in 1..self.dim {
                flat.push(unit.sample(&mut rng));
            }
            labels.push(Label::new(c as u32 + 1)?);
        }
        let ds = Dataset::from_flat(flat, self.dim, MetricKind::Euclidean)?.set_labels(labels)?;
        TrainingSet::with_classes(ds, self.classes)
    }
}

/// One-dimensional mixture sample together with its Bayes risk.
pub fn gen_gaussian_mixture(mu_sep: f64, classes: usize, n: usize, seed: u64) -> Result<(TrainingSet, f64)> {
    let g = GaussianMixture::new(mu_sep, classes, 1)?;
    Ok((g.sample(n, seed)?, g.bayes_risk()))
}
