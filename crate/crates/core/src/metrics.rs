//! Binary confusion matrix and the scores derived from it.
//!
//! `Abnormal` is the positive class. Every score is a ratio of integer
//! counts evaluated with a single correctly-rounded division, and scores
//! with a zero denominator are reported as errors rather than as 0.

use crate::{Error, Label, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, tn: u64, fp: u64, fn_: u64) -> Self {
        Self { tp, tn, fp, fn_ }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    /// The same outcomes counted with `Normal` as the positive class.
    pub fn swapped(&self) -> Self {
        Self {
            tp: self.tn,
            tn: self.tp,
            fp: self.fn_,
            fn_: self.fp,
        }
    }

    pub fn accuracy(&self) -> Result<f64> {
        ratio(self.tp + self.tn, self.total(), "accuracy", "empty confusion matrix")
    }

    pub fn precision(&self) -> Result<f64> {
        ratio(self.tp, self.tp + self.fp, "precision", "no positive predictions")
    }

    pub fn recall(&self) -> Result<f64> {
        ratio(self.tp, self.tp + self.fn_, "recall", "no positive instances")
    }

    /// Harmonic mean of precision and recall, evaluated as
    /// `2·tp / (2·tp + fp + fn)`, which is the same quantity in closed form.
    pub fn f1(&self) -> Result<f64> {
        self.precision()?;
        self.recall()?;
        // Both defined, so P + R = 0 exactly when tp = 0.
        let den = if self.tp == 0 {
            0
        } else {
            2 * self.tp + self.fp + self.fn_
        };
        ratio(2 * self.tp, den, "f1", "precision and recall are both zero")
    }
}

fn ratio(num: u64, den: u64, metric: &'static str, reason: &'static str) -> Result<f64> {
    if den == 0 {
        Err(Error::UndefinedMetric { metric, reason })
    } else {
        Ok(num as f64 / den as f64)
    }
}

/// Counts prediction/actual pairs. Both slices must be non-empty, of equal
/// length, and contain only `Normal` / `Abnormal`.
pub fn confusion(predictions: &[Label], actuals: &[Label]) -> Result<ConfusionMatrix> {
    if predictions.len() != actuals.len() {
        return Err(Error::DimensionMismatch {
            expected: actuals.len(),
            actual: predictions.len(),
        });
    }
    if predictions.is_empty() {
        return Err(Error::InvalidParameter("confusion matrix of no predictions".into()));
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &a) in predictions.iter().zip(actuals) {
        match (p, a) {
            (Label::Abnormal, Label::Abnormal) => cm.tp += 1,
            (Label::Normal, Label::Normal) => cm.tn += 1,
            (Label::Abnormal, Label::Normal) => cm.fp += 1,
            (Label::Normal, Label::Abnormal) => cm.fn_ += 1,
            _ => {
                return Err(Error::InvalidParameter(
                    "confusion matrix needs labeled predictions and actuals".into(),
                ))
            }
        }
    }
    Ok(cm)
}

/// One row of the kernel comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub kernel: String,
    pub confusion: ConfusionMatrix,
    pub support_vectors: usize,
}

pub const METRICS_HEADER: &str = "kernel,accuracy,precision,recall,f1,support_vectors";

fn cell(v: Result<f64>) -> String {
    // Undefined scores are left blank.
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

impl ScoreRow {
    pub fn to_csv_line(&self) -> String {
        let cm = &self.confusion;
        format!(
            "{},{},{},{},{},{}",
            self.kernel,
            cell(cm.accuracy()),
            cell(cm.precision()),
            cell(cm.recall()),
            cell(cm.f1()),
            self.support_vectors
        )
    }
}

/// Metrics table sorted by kernel name.
pub fn metrics_csv(rows: &[ScoreRow]) -> String {
    let mut rows: Vec<&ScoreRow> = rows.iter().collect();
    rows.sort_by(|a, b| a.kernel.cmp(&b.kernel));
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.to_csv_line());
        out.push('\n');
    }
    out
}

pub fn confusion_csv(cm: &ConfusionMatrix) -> String {
    format!("tp,tn,fp,fn\n{},{},{},{}\n", cm.tp, cm.tn, cm.fp, cm.fn_)
}
