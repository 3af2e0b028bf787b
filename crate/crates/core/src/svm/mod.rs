//! Binary kernel SVM trained in the dual.
//!
//! Labels map to targets `Abnormal → +1`, `Normal → −1`. A trained
//! [`SvmModel`] keeps only the support vectors (α > 0) with their signed
//! coefficients `α_i·y_i`, so the decision function is
//! `f(x) = Σ coef_i·K(sv_i, x) + b` and the class is `Abnormal` iff `f(x) > 0`.

mod kernel;
mod persist;
mod smo;

pub use kernel::{gram_matrix, kernel_eval, GramMatrix, KernelSpec, KERNEL_NAMES};
pub use persist::{load_model, model_from_str, model_to_string, save_model};

use crate::dataset::{PhaseRecord, Standardizer};
use crate::{Error, Label, Result};

/// Coefficients smaller than this are treated as exactly zero.
pub const COEF_SNAP: f64 = 1e-12;

/// Solver settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    /// Box constraint `C` on every α.
    pub c_penalty: f64,
    /// KKT tolerance on the functional margin.
    pub tol: f64,
    /// Consecutive update-free passes required to stop.
    pub max_passes: usize,
    /// Hard cap on the total number of passes.
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            c_penalty: 1.0,
            tol: 1e-3,
            max_passes: 50,
            max_iter: 20_000,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c_penalty > 0.0 && self.c_penalty.is_finite()) {
            return Err(Error::InvalidParameter("C must be positive".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter("tolerance must be positive".into()));
        }
        if self.max_passes == 0 || self.max_iter == 0 {
            return Err(Error::InvalidParameter("pass limits must be at least 1".into()));
        }
        Ok(())
    }
}

/// Trained classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub support_vectors: Vec<Vec<f64>>,
    /// `α_i · y_i` for each support vector.
    pub coefficients: Vec<f64>,
    pub bias: f64,
    pub kernel: KernelSpec,
    /// Feature scaling applied to raw inputs before the kernel.
    pub standardizer: Standardizer,
}

impl SvmModel {
    pub fn dim(&self) -> usize {
        self.standardizer.dim()
    }

    /// Decision value for a vector already in model space (standardised).
    pub fn decision_value(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        Ok(self
            .support_vectors
            .iter()
            .zip(&self.coefficients)
            .map(|(sv, c)| c * self.kernel.eval_unchecked(sv, x))
            .sum::<f64>()
            + self.bias)
    }

    pub fn predict(&self, x: &[f64]) -> Result<Label> {
        self.decision_value(x).map(label_of)
    }

    /// Decision value for raw features: applies the stored standardizer first.
    pub fn decision_value_raw(&self, raw: &[f64]) -> Result<f64> {
        self.decision_value(&self.standardizer.transform(raw)?)
    }

    pub fn num_support_vectors(&self) -> usize {
        self.coefficients.iter().filter(|c| **c != 0.0).count()
    }

    /// Primal weights `w = Σ α_i y_i x_i`; only meaningful for the linear kernel.
    pub fn linear_weights(&self) -> Option<Vec<f64>> {
        if self.kernel != KernelSpec::Linear {
            return None;
        }
        let mut w = vec![0.0; self.dim()];
        for (sv, c) in self.support_vectors.iter().zip(&self.coefficients) {
            for (wk, xk) in w.iter_mut().zip(sv) {
                *wk += c * xk;
            }
        }
        Some(w)
    }

    /// Dual variable of each record, found by matching records to stored
    /// support vectors with identical features and the same label sign.
    /// Records without a match get α = 0.
    pub fn alphas_for(&self, records: &[PhaseRecord]) -> Vec<f64> {
        let mut used = vec![false; self.support_vectors.len()];
        records
            .iter()
            .map(|r| {
                let Some(y) = r.label.sign() else { return 0.0 };
                let hit = self
                    .support_vectors
                    .iter()
                    .enumerate()
                    .position(|(k, sv)| !used[k] && self.coefficients[k] * y > 0.0 && *sv == r.features);
                match hit {
                    Some(k) => {
                        used[k] = true;
                        self.coefficients[k].abs()
                    }
                    None => 0.0,
                }
            })
            .collect()
    }
}

/// Zero and negative decision values are `Normal`.
pub fn label_of(decision: f64) -> Label {
    if decision > 0.0 {
        Label::Abnormal
    } else {
        Label::Normal
    }
}

pub fn decision_value(model: &SvmModel, x: &[f64]) -> Result<f64> {
    model.decision_value(x)
}

pub fn predict(model: &SvmModel, x: &[f64]) -> Result<Label> {
    model.predict(x)
}

pub fn num_support_vectors(model: &SvmModel) -> usize {
    model.num_support_vectors()
}

/// `γ = 1 / (d · v̄)` with `v̄` the mean per-feature variance of `records`.
pub fn default_gamma(records: &[PhaseRecord]) -> f64 {
    let Some(first) = records.first() else { return 1.0 };
    let d = first.features.len().max(1);
    let n = records.len() as f64;
    let mut total_var = 0.0;
    for k in 0..first.features.len() {
        let mean = records.iter().map(|r| r.features[k]).sum::<f64>() / n;
        total_var += records.iter().map(|r| (r.features[k] - mean).powi(2)).sum::<f64>() / n;
    }
    let v = total_var / d as f64;
    if v > 0.0 && v.is_finite() {
        1.0 / (d as f64 * v)
    } else {
        1.0 / d as f64
    }
}

/// Trains on `records`, whose features must already be in model space.
/// The returned model carries an identity standardizer; see
/// [`SvmModel::standardizer`] to attach the one used upstream.
pub fn train(records: &[PhaseRecord], kernel: KernelSpec, config: &TrainConfig) -> Result<SvmModel> {
    kernel.validate()?;
    config.validate()?;
    if records.is_empty() {
        return Err(Error::Dataset("no training records".into()));
    }
    let dim = records[0].features.len();
    let mut y = Vec::with_capacity(records.len());
    for r in records {
        if r.features.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: r.features.len(),
            });
        }
        if r.features.iter().any(|v| !v.is_finite()) {
            return Err(Error::Dataset(format!("record {} has non-finite features", r.id)));
        }
        y.push(
            r.label
                .sign()
                .ok_or_else(|| Error::Dataset(format!("record {} is unlabeled", r.id)))?,
        );
    }
    if !(y.iter().any(|&v| v > 0.0) && y.iter().any(|&v| v < 0.0)) {
        return Err(Error::Dataset("training needs both classes".into()));
    }

    let vectors: Vec<Vec<f64>> = records.iter().map(|r| r.features.clone()).collect();
    let gram = gram_matrix(&kernel, &vectors)?;
    let solution = smo::solve(&gram, &y, config)?;

    let mut support_vectors = Vec::new();
    let mut coefficients = Vec::new();
    for ((x, a), yi) in vectors.into_iter().zip(&solution.alphas).zip(&y) {
        let coef = a * yi;
        if coef.abs() >= COEF_SNAP {
            support_vectors.push(x);
            coefficients.push(coef);
        }
    }
    Ok(SvmModel {
        support_vectors,
        coefficients,
        bias: solution.bias,
        kernel,
        standardizer: Standardizer::identity(dim),
    })
}

/// Which KKT condition a point breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KktCondition {
    /// α = 0 but `y·f(x) < 1 − tol`.
    InsideMargin,
    /// 0 < α < C but `|y·f(x) − 1| > tol`.
    OffMargin,
    /// α = C but `y·f(x) > 1 + tol`.
    OutsideMargin,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KktViolation {
    pub index: usize,
    pub alpha: f64,
    /// Functional margin `y·f(x)`.
    pub margin: f64,
    pub condition: KktCondition,
}

/// Checks the KKT conditions of `model` on its training records.
pub fn kkt_report(model: &SvmModel, records: &[PhaseRecord], config: &TrainConfig) -> Result<Vec<KktViolation>> {
    let alphas = model.alphas_for(records);
    let (c, tol) = (config.c_penalty, config.tol);
    let mut out = Vec::new();
    for (index, (r, &alpha)) in records.iter().zip(&alphas).enumerate() {
        let Some(y) = r.label.sign() else { continue };
        let margin = y * model.decision_value(&r.features)?;
        let condition = if alpha == 0.0 {
            (margin < 1.0 - tol).then_some(KktCondition::InsideMargin)
        } else if alpha >= c {
            (margin > 1.0 + tol).then_some(KktCondition::OutsideMargin)
        } else {
            ((margin - 1.0).abs() > tol).then_some(KktCondition::OffMargin)
        };
        if let Some(condition) = condition {
            out.push(KktViolation {
                index,
                alpha,
                margin,
                condition,
            });
        }
    }
    Ok(out)
}
