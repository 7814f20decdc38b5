//! k-NN classification: min-max normalization, seeded train/test split,
//! majority vote over the k nearest training points, and error-rate
//! evaluation with the classical nearest-neighbor risk bounds
//! `R* <= R <= R*(2 - M R* / (M - 1))`.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kdtree::KdTree;
use crate::linear_scan::{Dataset, NeighborList, NeighborSearch};
use crate::metrics::MetricKind;

/// Class label, numbered from 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Label(u32);

impl Label {
    pub fn new(value: u32) -> Result<Self> {
        if value == 0 {
            return Err(Error::param("labels are numbered from 1"));
        }
        Ok(Label(value))
    }

    pub fn get(self) -> u32 {
        self.0
    }

    fn slot(self) -> usize {
        self.0 as usize - 1
    }
}

impl TryFrom<u32> for Label {
    type Error = Error;

    fn try_from(v: u32) -> Result<Self> {
        Label::new(v)
    }
}

impl From<Label> for u32 {
    fn from(l: Label) -> u32 {
        l.0
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Per-feature `(min, max)` captured from training data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub ranges: Vec<(f64, f64)>,
}

impl Normalization {
    pub fn fit(ds: &Dataset) -> Self {
        let mut ranges = vec![(f64::INFINITY, f64::NEG_INFINITY); ds.dim()];
        for row in ds.rows() {
            for (r, &x) in ranges.iter_mut().zip(row) {
                r.0 = r.0.min(x);
                r.1 = r.1.max(x);
            }
        }
        Normalization { ranges }
    }

    /// Maps each feature through `(x - min) / (max - min)`; constant features
    /// map to 0.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.ranges)
            .map(|(&v, &(lo, hi))| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 })
            .collect()
    }

    pub fn apply_dataset(&self, ds: &Dataset) -> Result<Dataset> {
        let flat = ds.rows().flat_map(|r| self.apply(r)).collect();
        let out = Dataset::from_flat(flat, ds.dim(), ds.metric())?;
        match ds.labels() {
            Some(l) => out.set_labels(l.to_vec()),
            None => Ok(out),
        }
    }
}

/// Labeled samples with a known class count `M`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingSet {
    data: Dataset,
    classes: usize,
    normalization: Option<Normalization>,
}

impl TrainingSet {
    /// Wraps a labeled dataset, inferring `M` as the largest label.
    pub fn new(data: Dataset) -> Result<Self> {
        let labels = data
            .labels()
            .ok_or_else(|| Error::param("training set needs labels"))?;
        let classes = labels.iter().map(|l| l.get()).max().unwrap_or(0) as usize;
        if classes < 2 {
            return Err(Error::param("training set needs at least two classes"));
        }
        Ok(TrainingSet {
            data,
            classes,
            normalization: None,
        })
    }

    /// Wraps a labeled dataset with an explicit class count, which may exceed
    /// the labels actually present (e.g. a small test split).
    pub fn with_classes(data: Dataset, classes: usize) -> Result<Self> {
        let labels = data
            .labels()
            .ok_or_else(|| Error::param("training set needs labels"))?;
        if classes < 2 {
            return Err(Error::param("class count must be at least 2"));
        }
        if let Some(l) = labels.iter().find(|l| l.get() as usize > classes) {
            return Err(Error::param(format!("label {l} exceeds class count {classes}")));
        }
        Ok(TrainingSet {
            data,
            classes,
            normalization: None,
        })
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn labels(&self) -> &[Label] {
        self.data.labels().expect("training sets are labeled")
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn normalization(&self) -> Option<&Normalization> {
        self.normalization.as_ref()
    }

    /// Subset by index, keeping class count and normalization.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let flat = indices
            .iter()
            .flat_map(|&i| self.data.point(i).iter().copied())
            .collect();
        let labels = indices.iter().map(|&i| self.labels()[i]).collect();
        let data = Dataset::from_flat(flat, self.data.dim(), self.data.metric())?.set_labels(labels)?;
        Ok(TrainingSet {
            data,
            classes: self.classes,
            normalization: self.normalization.clone(),
        })
    }

    /// Applies a label bijection; `map[old - 1]` is the new label.
    pub fn relabel(&self, map: &[Label]) -> Result<Self> {
        if map.len() != self.classes {
            return Err(Error::param("relabel map must cover every class"));
        }
        let labels = self.labels().iter().map(|l| map[l.slot()]).collect();
        Ok(TrainingSet {
            data: self.data.clone().set_labels(labels)?,
            classes: self.classes,
            normalization: self.normalization.clone(),
        })
    }
}

/// Min-max normalizes every feature and records the ranges.
pub fn normalize_fit(t: &TrainingSet) -> Result<TrainingSet> {
    let norm = Normalization::fit(&t.data);
    Ok(TrainingSet {
        data: norm.apply_dataset(&t.data)?,
        classes: t.classes,
        normalization: Some(norm),
    })
}

/// Seeded shuffle, then the first `floor(alpha * n)` samples train and the
/// rest test.
pub fn split(t: &TrainingSet, alpha: f64, seed: u64) -> Result<(TrainingSet, TrainingSet)> {
    let n = t.len();
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::param(format!("split fraction must lie in (0, 1), got {alpha}")));
    }
    let n_train = (alpha * n as f64).floor() as usize;
    if n_train < 1 || n_train >= n {
        return Err(Error::param(format!(
            "split fraction {alpha} on {n} samples leaves an empty side"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok((t.select(&order[..n_train])?, t.select(&order[n_train..])?))
}

/// Search structure backing a fitted model.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Backend {
    #[default]
    KdTree,
    LinearScan,
}

#[derive(Clone, Debug)]
enum Index {
    Tree(KdTree),
    Scan(Dataset),
}

impl Index {
    fn search(&self) -> &dyn NeighborSearch {
        match self {
            Index::Tree(t) => t,
            Index::Scan(d) => d,
        }
    }
}

/// A fitted, immutable k-NN classifier.
#[derive(Clone, Debug)]
pub struct KnnModel {
    index: Index,
    labels: Vec<Label>,
    classes: usize,
    k: usize,
    normalization: Normalization,
}

/// Fits a model on `train` with a K-d tree index.
pub fn fit(train: &TrainingSet, k: usize, metric: MetricKind) -> Result<KnnModel> {
    fit_with_backend(train, k, metric, Backend::KdTree)
}

/// Fits a model. If `train` has not been normalized yet its min-max ranges
/// are computed here; otherwise the stored ranges are reused.
pub fn fit_with_backend(
    train: &TrainingSet,
    k: usize,
    metric: MetricKind,
    backend: Backend,
) -> Result<KnnModel> {
    if k == 0 || k > train.len() {
        return Err(Error::param(format!(
            "k must lie in 1..={} for this training set, got {k}",
            train.len()
        )));
    }
    let normalized = match train.normalization {
        Some(_) => train.clone(),
        None => normalize_fit(train)?,
    };
    let normalization = normalized.normalization.clone().expect("normalized above");
    let labels = normalized.labels().to_vec();
    let data = normalized.data.with_metric(metric);
    let index = match backend {
        Backend::KdTree => Index::Tree(KdTree::build(data)?),
        Backend::LinearScan => Index::Scan(data),
    };
    Ok(KnnModel {
        index,
        labels,
        classes: normalized.classes,
        k,
        normalization,
    })
}

impl KnnModel {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn dim(&self) -> usize {
        self.index.search().dataset().dim()
    }

    pub fn metric(&self) -> MetricKind {
        self.index.search().dataset().metric()
    }

    pub fn normalization(&self) -> &Normalization {
        &self.normalization
    }

    /// The `k` nearest training samples to a raw (unnormalized) query.
    pub fn neighbors(&self, q: &[f64]) -> Result<NeighborList> {
        let ds = self.index.search().dataset();
        if q.len() != ds.dim() {
            return Err(Error::DimensionMismatch {
                expected: ds.dim(),
                found: q.len(),
            });
        }
        if let Some(i) = q.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidPoint(format!("query coordinate {i} is not finite")));
        }
        self.index.search().knn(&self.normalization.apply(q), self.k)
    }

    /// Majority label among the k nearest training samples.
    ///
    /// Ties between labels with the top count go to the label whose nearest
    /// representative is closest to the query, then to the smallest label.
    pub fn predict(&self, q: &[f64]) -> Result<Label> {
        let nbrs = self.neighbors(q)?;
        // label -> (votes, distance of nearest representative)
        let mut tally: BTreeMap<Label, (usize, f64)> = BTreeMap::new();
        for n in nbrs.iter() {
            let e = tally.entry(self.labels[n.index]).or_insert((0, n.distance));
            e.0 += 1;
        }
        let top = tally.values().map(|v| v.0).max().unwrap_or(0);
        tally
            .into_iter()
            .filter(|(_, (votes, _))| *votes == top)
            .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1).then(a.0.cmp(&b.0)))
            .map(|(label, _)| label)
            .ok_or_else(|| Error::param("no neighbors found"))
    }

    /// Error rate and confusion counts on a labeled test set (raw features).
    pub fn evaluate(&self, test: &TrainingSet) -> Result<EvalReport> {
        let m = self.classes.max(test.classes);
        let mut confusion = vec![vec![0u64; m]; m];
        for (row, truth) in test.data.rows().zip(test.labels()) {
            let pred = self.predict(row)?;
            confusion[truth.slot()][pred.slot()] += 1;
        }
        Ok(EvalReport::from_confusion(confusion))
    }

    /// Writes the model as CSV with `#` metadata lines: k, metric, class
    /// count and normalization ranges, then the normalized training points
    /// with their labels.
    pub fn export_csv<W: Write>(&self, out: W) -> Result<()> {
        let ds = self.index.search().dataset();
        let mut out = out;
        let io = |e: std::io::Error| Error::io("<model export>", e);
        let join = |f: fn(&(f64, f64)) -> f64| {
            self.normalization
                .ranges
                .iter()
                .map(|r| f(r).to_string())
                .collect::<Vec<_>>()
                .join(";")
        };
        writeln!(out, "{MODEL_HEADER}").map_err(io)?;
        writeln!(out, "# k={}", self.k).map_err(io)?;
        writeln!(out, "# metric={}", ds.metric()).map_err(io)?;
        writeln!(out, "# classes={}", self.classes).map_err(io)?;
        writeln!(out, "# min={}", join(|r| r.0)).map_err(io)?;
        writeln!(out, "# max={}", join(|r| r.1)).map_err(io)?;
        let mut w = csv::Writer::from_writer(out);
        let wrap = |e: csv::Error| Error::param(format!("csv write failed: {e}"));
        let mut header: Vec<String> = (1..=ds.dim()).map(|i| format!("f{i}")).collect();
        header.push("label".into());
        w.write_record(&header).map_err(wrap)?;
        for (row, label) in ds.rows().zip(&self.labels) {
            let mut rec: Vec<String> = row.iter().map(|c| c.to_string()).collect();
            rec.push(label.to_string());
            w.write_record(&rec).map_err(wrap)?;
        }
        w.flush().map_err(io)
    }

    /// Rebuilds a model from [`KnnModel::export_csv`] output.
    pub fn import_csv<R: Read>(input: R) -> Result<Self> {
        let mut text = String::new();
        let mut input = input;
        input
            .read_to_string(&mut text)
            .map_err(|e| Error::io("<model import>", e))?;
        let bad = |msg: String| Error::Parse {
            path: "<model import>".into(),
            line: 0,
            message: msg,
        };
        if text.lines().next() != Some(MODEL_HEADER) {
            return Err(bad("missing model header".into()));
        }
        let mut meta: BTreeMap<&str, &str> = BTreeMap::new();
        for line in text.lines().filter_map(|l| l.strip_prefix("# ")) {
            if let Some((k, v)) = line.split_once('=') {
                meta.insert(k, v);
            }
        }
        let get = |key: &str| meta.get(key).copied().ok_or_else(|| bad(format!("missing {key}")));
        let k: usize = get("k")?.parse().map_err(|_| bad("bad k".into()))?;
        let metric: MetricKind = get("metric")?.parse()?;
        let classes: usize = get("classes")?.parse().map_err(|_| bad("bad classes".into()))?;
        let floats = |s: &str| {
            s.split(';')
                .map(|v| v.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| bad("bad normalization range".into()))
        };
        let (lo, hi) = (floats(get("min")?)?, floats(get("max")?)?);
        if lo.len() != hi.len() {
            return Err(bad("min/max length mismatch".into()));
        }
        let normalization = Normalization {
            ranges: lo.into_iter().zip(hi).collect(),
        };
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let mut flat = Vec::new();
        let mut labels = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| bad(format!("row {}: {e}", i + 1)))?;
            let n = rec.len();
            if n != normalization.ranges.len() + 1 {
                return Err(bad(format!("row {} has {n} fields", i + 1)));
            }
            for f in rec.iter().take(n - 1) {
                flat.push(f.parse::<f64>().map_err(|_| bad(format!("row {}: bad feature", i + 1)))?);
            }
            let l: u32 = rec[n - 1].parse().map_err(|_| bad(format!("row {}: bad label", i + 1)))?;
            labels.push(Label::new(l)?);
        }
        let data = Dataset::from_flat(flat, normalization.ranges.len(), metric)?.set_labels(labels)?;
        let mut train = TrainingSet::with_classes(data, classes)?;
        train.normalization = Some(normalization);
        fit(&train, k, metric)
    }
}

const MODEL_HEADER: &str = "# nnkit knn-model v1";

/// Classifier performance on a test set.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    pub error_rate: f64,
    /// `confusion[truth - 1][predicted - 1]`.
    pub confusion: Vec<Vec<u64>>,
    pub n_test: u64,
    pub bayes_risk: Option<f64>,
    pub bound_low: Option<f64>,
    pub bound_high: Option<f64>,
}

impl EvalReport {
    pub fn from_confusion(confusion: Vec<Vec<u64>>) -> Self {
        let n_test: u64 = confusion.iter().flatten().sum();
        let correct: u64 = (0..confusion.len()).map(|i| confusion[i][i]).sum();
        let error_rate = if n_test == 0 {
            0.0
        } else {
            (n_test - correct) as f64 / n_test as f64
        };
        EvalReport {
            error_rate,
            confusion,
            n_test,
            bayes_risk: None,
            bound_low: None,
            bound_high: None,
        }
    }

    pub fn accuracy(&self) -> f64 {
        1.0 - self.error_rate
    }

    pub fn errors(&self) -> u64 {
        self.n_test - (0..self.confusion.len()).map(|i| self.confusion[i][i]).sum::<u64>()
    }

    /// Attaches a known Bayes risk and the bounds it implies for this class
    /// count.
    pub fn with_bayes_risk(mut self, r_star: f64) -> Result<Self> {
        let (lo, hi) = bayes_bounds(r_star, self.confusion.len())?;
        self.bayes_risk = Some(r_star);
        self.bound_low = Some(lo);
        self.bound_high = Some(hi);
        Ok(self)
    }

    /// Whether the error rate falls inside the attached bounds.
    pub fn within_bounds(&self) -> Option<bool> {
        Some(self.bound_low? <= self.error_rate && self.error_rate <= self.bound_high?)
    }
}

/// Asymptotic nearest-neighbor risk bounds `(R*, R*(2 - M R*/(M - 1)))`.
///
/// `R*` must lie in `[0, (M-1)/M]`, the range a Bayes risk can take with `M`
/// classes; above it the upper expression drops below `R*`.
pub fn bayes_bounds(r_star: f64, classes: usize) -> Result<(f64, f64)> {
    if classes < 2 {
        return Err(Error::param("bounds need at least two classes"));
    }
    let m = classes as f64;
    if !(0.0..1.0).contains(&r_star) {
        return Err(Error::param(format!("Bayes risk must lie in [0, 1), got {r_star}")));
    }
    if r_star > (m - 1.0) / m {
        return Err(Error::param(format!(
            "Bayes risk {r_star} exceeds the maximum {} for {classes} classes",
            (m - 1.0) / m
        )));
    }
    Ok((r_star, r_star * (2.0 - m * r_star / (m - 1.0))))
}
