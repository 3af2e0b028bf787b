//! Non-contact breath-rate classification from simulated FMCW radar returns.
//!
//! The crate is organised as a chain of stages, each usable on its own:
//!
//! - [`radar_sim`]: complex-baseband IF frames for a breathing point target.
//! - [`phase_pipeline`]: range FFT, bin selection, phase extraction,
//!   unwrapping, band-pass filtering and breath-count estimation.
//! - [`dataset`]: phase records, CSV persistence, standardisation,
//!   noise augmentation, SMOTE and stratified splitting.
//! - [`svm`]: kernels and a pairwise dual solver for soft-margin SVMs.
//! - [`metrics`]: confusion matrix and accuracy / precision / recall / F1.
//! - [`pipeline`]: end-to-end experiment orchestration used by the CLI.

pub mod dataset;
pub mod error;
pub mod io;
pub mod metrics;
pub mod phase_pipeline;
pub mod pipeline;
pub mod radar_sim;
pub mod svm;

pub use error::{Error, Result};

/// Binary breath-rate class. `Abnormal` is the positive class throughout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Normal,
    Abnormal,
    Unlabeled,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Normal => "normal",
            Label::Abnormal => "abnormal",
            Label::Unlabeled => "unlabeled",
        }
    }

    /// SVM target: Abnormal → +1, Normal → −1.
    pub fn sign(self) -> Option<f64> {
        match self {
            Label::Abnormal => Some(1.0),
            Label::Normal => Some(-1.0),
            Label::Unlabeled => None,
        }
    }

    /// The other class; `Unlabeled` maps to itself.
    pub fn flipped(self) -> Label {
        match self {
            Label::Normal => Label::Abnormal,
            Label::Abnormal => Label::Normal,
            Label::Unlabeled => Label::Unlabeled,
        }
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normal" => Ok(Label::Normal),
            "abnormal" => Ok(Label::Abnormal),
            "unlabeled" => Ok(Label::Unlabeled),
            other => Err(Error::Parse(format!("unknown label {other:?}"))),
        }
    }
}
