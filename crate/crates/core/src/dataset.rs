//! Phase records: persistence, scaling, augmentation, balancing and splitting.
//!
//! CSV layout, UTF-8 with LF line endings:
//!
//! ```text
//! id,label,breaths,p000,p001,...,p511
//! s0007,normal,6.4000000000000004e0,1.2345678901234567e-1,...
//! ```
//!
//! `label` is one of `normal`, `abnormal`, `unlabeled`; `breaths` is empty
//! when the ground truth is unknown. Reals are written with 17 significant
//! digits so a save/load round trip is exact.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::io::{fmt_real, write_atomic};
use crate::{Error, Label, Result};

/// Default SMOTE neighbourhood size.
pub const DEFAULT_SMOTE_K: usize = 5;

/// Default share of records assigned to training.
pub const DEFAULT_TRAIN_FRACTION: f64 = 0.75;

/// One subject's phase signal with its label.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseRecord {
    pub id: String,
    pub label: Label,
    /// Ground-truth breaths per window, when known.
    pub breaths_true: Option<f64>,
    pub features: Vec<f64>,
}

impl PhaseRecord {
    pub fn new(id: impl Into<String>, label: Label, features: Vec<f64>) -> Self {
        Self {
            id: id.into(),
            label,
            breaths_true: None,
            features,
        }
    }

    pub fn with_breaths(mut self, breaths: f64) -> Self {
        self.breaths_true = Some(breaths);
        self
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Population standard deviation.
fn std_dev(values: &[f64]) -> f64 {
    let m = mean(values);
    (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / values.len() as f64).sqrt()
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn feature_dim(records: &[PhaseRecord]) -> Result<usize> {
    let dim = records.first().map_or(0, |r| r.features.len());
    for r in records {
        if r.features.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: r.features.len(),
            });
        }
    }
    Ok(dim)
}

// ---------------------------------------------------------------- CSV

fn phase_column(i: usize) -> String {
    format!("p{i:03}")
}

fn csv_writer(buf: &mut Vec<u8>) -> csv::Writer<&mut Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(buf)
}

/// Renders records in the dataset CSV format.
///
/// All records must share one feature length; an empty list produces a
/// header with no phase columns.
pub fn to_csv_string(records: &[PhaseRecord]) -> Result<String> {
    let dim = feature_dim(records)?;
    let mut buf = Vec::new();
    {
        let mut w = csv_writer(&mut buf);
        let mut header = vec!["id".to_string(), "label".into(), "breaths".into()];
        header.extend((0..dim).map(phase_column));
        w.write_record(&header).map_err(csv_error)?;
        for r in records {
            let mut row = Vec::with_capacity(dim + 3);
            row.push(r.id.clone());
            row.push(r.label.as_str().to_string());
            row.push(r.breaths_true.map(fmt_real).unwrap_or_default());
            row.extend(r.features.iter().map(|&v| fmt_real(v)));
            w.write_record(&row).map_err(csv_error)?;
        }
        w.flush().map_err(|e| Error::Dataset(e.to_string()))?;
    }
    String::from_utf8(buf).map_err(|e| Error::Dataset(e.to_string()))
}

fn csv_error(e: csv::Error) -> Error {
    Error::Dataset(e.to_string())
}

fn parse_real(field: &str, row: u64, column: &str) -> Result<f64> {
    let v: f64 = field
        .parse()
        .map_err(|_| Error::Parse(format!("row {row}: non-numeric value {field:?} in column {column}")))?;
    if !v.is_finite() {
        return Err(Error::Parse(format!("row {row}: non-finite value in column {column}")));
    }
    Ok(v)
}

/// Parses the dataset CSV format.
pub fn from_csv_str(text: &str) -> Result<Vec<PhaseRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut rows = reader.records();

    let header = match rows.next() {
        Some(h) => h.map_err(|e| Error::Parse(format!("row 1: {e}")))?,
        None => return Err(Error::Parse("missing header".into())),
    };
    let names: Vec<&str> = header.iter().collect();
    if names.len() < 3 || names[..3] != ["id", "label", "breaths"] {
        return Err(Error::Parse(
            "missing header: expected id,label,breaths,p000,...".into(),
        ));
    }
    for (i, name) in names[3..].iter().enumerate() {
        if *name != phase_column(i) {
            return Err(Error::Parse(format!(
                "row 1: expected column {} but found {name:?}",
                phase_column(i)
            )));
        }
    }
    let columns = names.len();

    let mut records = Vec::new();
    for (idx, row) in rows.enumerate() {
        let line = idx as u64 + 2;
        let row = row.map_err(|e| Error::Parse(format!("row {line}: {e}")))?;
        if row.len() != columns {
            return Err(Error::Parse(format!("row {line}: expected {columns} columns")));
        }
        let label: Label = row[1]
            .parse()
            .map_err(|e: Error| Error::Parse(format!("row {line}: {e}")))?;
        let breaths_true = match &row[2] {
            "" => None,
            s => Some(parse_real(s, line, "breaths")?),
        };
        let features = row
            .iter()
            .skip(3)
            .zip(&names[3..])
            .map(|(field, col)| parse_real(field, line, col))
            .collect::<Result<Vec<_>>>()?;
        records.push(PhaseRecord {
            id: row[0].to_string(),
            label,
            breaths_true,
            features,
        });
    }
    Ok(records)
}

pub fn save_csv(records: &[PhaseRecord], path: &Path) -> Result<()> {
    write_atomic(path, to_csv_string(records)?.as_bytes())
}

pub fn load_csv(path: &Path) -> Result<Vec<PhaseRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_csv_str(&text)
}

// ---------------------------------------------------------------- scaling

/// Removes the record's own mean from its features.
pub fn preprocess(record: &PhaseRecord) -> PhaseRecord {
    let mut out = record.clone();
    if !out.features.is_empty() {
        let m = mean(&out.features);
        out.features.iter_mut().for_each(|v| *v -= m);
    }
    out
}

/// Divides the features by their root-mean-square. All-zero records are
/// returned unchanged.
pub fn scale_to_unit_rms(record: &PhaseRecord) -> PhaseRecord {
    let mut out = record.clone();
    let n = out.features.len();
    if n == 0 {
        return out;
    }
    let rms = (out.features.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
    if rms > 0.0 {
        out.features.iter_mut().for_each(|v| *v /= rms);
    }
    out
}

/// Per-feature affine scaling fitted on a training set.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    /// Strictly positive; zero-variance features get 1.
    pub scale: Vec<f64>,
}

impl Standardizer {
    /// The identity map on `dim` features.
    pub fn identity(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            scale: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn fit(records: &[PhaseRecord]) -> Result<Self> {
        if records.len() < 2 {
            return Err(Error::Dataset(
                "standardization needs at least 2 training records".into(),
            ));
        }
        let dim = feature_dim(records)?;
        let n = records.len() as f64;
        let mut mean = vec![0.0; dim];
        for r in records {
            for (m, v) in mean.iter_mut().zip(&r.features) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for r in records {
            for ((acc, v), m) in var.iter_mut().zip(&r.features).zip(&mean) {
                *acc += (v - m).powi(2);
            }
        }
        let scale = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { mean, scale })
    }

    pub fn transform(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        Ok(x.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect())
    }

    pub fn apply(&self, records: &[PhaseRecord]) -> Result<Vec<PhaseRecord>> {
        records
            .iter()
            .map(|r| {
                Ok(PhaseRecord {
                    features: self.transform(&r.features)?,
                    ..r.clone()
                })
            })
            .collect()
    }
}

pub fn standardize_fit(train: &[PhaseRecord]) -> Result<Standardizer> {
    Standardizer::fit(train)
}

pub fn standardize_apply(standardizer: &Standardizer, records: &[PhaseRecord]) -> Result<Vec<PhaseRecord>> {
    standardizer.apply(records)
}

// ---------------------------------------------------------------- augmentation

/// One noisy copy per record: `x + factor · σ_x · ε`, with `σ_x` the record's
/// own feature standard deviation and `ε` standard normal.
///
/// Returns only the new records; ids get the suffix `-aug<factor>`.
pub fn augment_noise(records: &[PhaseRecord], factor: f64, seed: u64) -> Result<Vec<PhaseRecord>> {
    if !(factor >= 0.0 && factor.is_finite()) {
        return Err(Error::InvalidParameter(format!("noise factor {factor} must be >= 0")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(records
        .iter()
        .map(|r| {
            let sigma = if r.features.is_empty() {
                0.0
            } else {
                std_dev(&r.features)
            };
            let features = r
                .features
                .iter()
                .map(|&v| {
                    let eps: f64 = rng.sample(StandardNormal);
                    v + factor * sigma * eps
                })
                .collect();
            PhaseRecord {
                id: format!("{}-aug{factor}", r.id),
                label: r.label,
                breaths_true: r.breaths_true,
                features,
            }
        })
        .collect())
}

/// Balances the two classes by SMOTE interpolation.
///
/// Returns the input records followed by synthetic minority records
/// `x_i + u·(x_nn − x_i)`, where `x_nn` is one of the `k` nearest minority
/// neighbours of `x_i` (k capped at minority size − 1) and `u ∈ [0, 1)`.
pub fn smote(records: &[PhaseRecord], k: usize, seed: u64) -> Result<Vec<PhaseRecord>> {
    if k == 0 {
        return Err(Error::InvalidParameter("SMOTE k must be at least 1".into()));
    }
    if records.iter().any(|r| r.label == Label::Unlabeled) {
        return Err(Error::Dataset("SMOTE requires labeled records".into()));
    }
    feature_dim(records)?;
    let normal: Vec<&PhaseRecord> = records.iter().filter(|r| r.label == Label::Normal).collect();
    let abnormal: Vec<&PhaseRecord> = records.iter().filter(|r| r.label == Label::Abnormal).collect();
    if normal.is_empty() || abnormal.is_empty() {
        return Err(Error::SingleClass);
    }
    let (minority, majority_count) = if normal.len() < abnormal.len() {
        (normal, abnormal.len())
    } else {
        (abnormal, normal.len())
    };
    let mut out = records.to_vec();
    let needed = majority_count - minority.len();
    if needed == 0 {
        return Ok(out);
    }
    if minority.len() < 2 {
        return Err(Error::Dataset("SMOTE needs at least 2 minority records".into()));
    }

    let k = k.min(minority.len() - 1);
    let neighbours: Vec<Vec<usize>> = (0..minority.len())
        .map(|i| {
            let mut by_dist: Vec<(f64, usize)> = (0..minority.len())
                .filter(|&j| j != i)
                .map(|j| (euclidean(&minority[i].features, &minority[j].features), j))
                .collect();
            by_dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            by_dist.into_iter().take(k).map(|(_, j)| j).collect()
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let label = minority[0].label;
    for s in 0..needed {
        let i = rng.random_range(0..minority.len());
        let nn = neighbours[i][rng.random_range(0..k)];
        let u: f64 = rng.random();
        let features = minority[i]
            .features
            .iter()
            .zip(&minority[nn].features)
            .map(|(a, b)| a + u * (b - a))
            .collect();
        out.push(PhaseRecord {
            id: format!("smote-{s}"),
            label,
            breaths_true: None,
            features,
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------- splitting

/// Train/validation partition of a record list.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit {
    pub train: Vec<PhaseRecord>,
    pub validation: Vec<PhaseRecord>,
    pub seed: u64,
}

/// Seeded stratified split. Each class contributes
/// `round(train_fraction · n_class)` records to training, clamped so both
/// sides keep at least one; records keep their input order within each side.
pub fn split(records: &[PhaseRecord], train_fraction: f64, seed: u64) -> Result<DatasetSplit> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "train fraction {train_fraction} must lie in (0, 1)"
        )));
    }
    if records.len() < 2 {
        return Err(Error::Dataset("split needs at least 2 records".into()));
    }
    let mut ids = HashSet::new();
    if let Some(dup) = records.iter().find(|r| !ids.insert(r.id.as_str())) {
        return Err(Error::Dataset(format!("duplicate record id {:?}", dup.id)));
    }

    let mut by_label: BTreeMap<Label, Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        by_label.entry(r.label).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_train = vec![false; records.len()];
    for (label, mut idx) in by_label {
        if idx.len() < 2 {
            return Err(Error::Dataset(format!(
                "class {label} has {} record(s); stratified split needs at least 2",
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        let take = ((train_fraction * idx.len() as f64).round() as usize).clamp(1, idx.len() - 1);
        for &i in &idx[..take] {
            in_train[i] = true;
        }
    }
    let (train, validation): (Vec<_>, Vec<_>) = records.iter().zip(&in_train).partition(|(_, &t)| t);
    Ok(DatasetSplit {
        train: train.into_iter().map(|(r, _)| r.clone()).collect(),
        validation: validation.into_iter().map(|(r, _)| r.clone()).collect(),
        seed,
    })
}
