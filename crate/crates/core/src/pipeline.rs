//! End-to-end experiment stages: simulate → augment → split/train → evaluate.

use rayon::prelude::*;

use crate::dataset::{self, PhaseRecord, Standardizer};
use crate::metrics::{confusion, ConfusionMatrix, ScoreRow};
use crate::phase_pipeline::{classify_by_threshold, process_frame, DEFAULT_BAND};
use crate::radar_sim::{simulate_frame, ChirpParams, CohortSpec};
use crate::svm::{self, KernelSpec, SvmModel, TrainConfig, KERNEL_NAMES};
use crate::{Error, Label, Result};

/// Cohort description in breaths per observation window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationConfig {
    pub count: usize,
    pub breaths_min: f64,
    pub breaths_max: f64,
    /// Chest displacement amplitude bounds (m).
    pub amplitude_min: f64,
    pub amplitude_max: f64,
    pub snr_db: f64,
    /// Subject distance (m).
    pub base_range: f64,
    pub band: (f64, f64),
    pub seed: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            count: 200,
            breaths_min: 2.0,
            breaths_max: 12.0,
            amplitude_min: 0.5e-3,
            amplitude_max: 5e-3,
            snr_db: 15.0,
            base_range: 1.0,
            band: DEFAULT_BAND,
            seed: 42,
        }
    }
}

/// Ground truth of one simulated subject.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRow {
    pub id: String,
    pub breath_freq_hz: f64,
    pub amplitude_m: f64,
    pub snr_db: f64,
    pub seed: u64,
}

pub const MANIFEST_HEADER: &str = "id,breath_freq_hz,amplitude_m,snr_db,seed";

pub fn manifest_csv(rows: &[ManifestRow]) -> String {
    use crate::io::fmt_real;
    let mut out = format!("{MANIFEST_HEADER}\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.id,
            fmt_real(r.breath_freq_hz),
            fmt_real(r.amplitude_m),
            r.snr_db,
            r.seed
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedCohort {
    pub records: Vec<PhaseRecord>,
    pub manifest: Vec<ManifestRow>,
}

/// Simulates every subject, runs the phase chain and labels each record from
/// its ground-truth breath count. Features are the band-passed phase.
pub fn simulate_records(params: &ChirpParams, config: &SimulationConfig) -> Result<SimulatedCohort> {
    if config.count < 2 {
        return Err(Error::InvalidParameter("count must be ≥ 2".into()));
    }
    if !(config.breaths_min >= 0.0 && config.breaths_min <= config.breaths_max) {
        return Err(Error::InvalidParameter(format!(
            "invalid breath range [{}, {}]",
            config.breaths_min, config.breaths_max
        )));
    }
    if !(config.amplitude_min >= 0.0 && config.amplitude_min <= config.amplitude_max) {
        return Err(Error::InvalidParameter(format!(
            "invalid amplitude range [{}, {}]",
            config.amplitude_min, config.amplitude_max
        )));
    }
    params.validate()?;
    let window = params.window_duration();
    let cohort = CohortSpec {
        count: config.count,
        breath_range: (config.breaths_min / window, config.breaths_max / window),
        amplitude_range: (config.amplitude_min, config.amplitude_max),
        snr_db: config.snr_db,
        base_range: config.base_range,
        seed: config.seed,
    };
    let subjects: Vec<(PhaseRecord, ManifestRow)> = (0..config.count)
        .into_par_iter()
        .map(|i| {
            let scenario = cohort.scenario(i);
            let frame = simulate_frame(params, &scenario)?;
            let processed = process_frame(&frame, config.band)?;
            let id = format!("s{i:04}");
            let breaths = scenario.breaths_per_window(params);
            let record = PhaseRecord {
                id: id.clone(),
                label: classify_by_threshold(breaths),
                breaths_true: Some(breaths),
                features: processed.filtered.values,
            };
            let row = ManifestRow {
                id,
                breath_freq_hz: scenario.breath_freq,
                amplitude_m: scenario.breath_amplitude,
                snr_db: scenario.snr_db,
                seed: scenario.seed,
            };
            Ok((record, row))
        })
        .collect::<Result<_>>()?;
    let (records, manifest) = subjects.into_iter().unzip();
    Ok(SimulatedCohort { records, manifest })
}

/// Noise augmentation and class balancing applied to a record list.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentOptions {
    pub noise_factors: Vec<f64>,
    pub smote: bool,
    pub smote_k: usize,
    pub seed: u64,
}

impl Default for AugmentOptions {
    fn default() -> Self {
        Self {
            noise_factors: Vec::new(),
            smote: false,
            smote_k: dataset::DEFAULT_SMOTE_K,
            seed: 42,
        }
    }
}

impl AugmentOptions {
    pub fn is_noop(&self) -> bool {
        self.noise_factors.is_empty() && !self.smote
    }
}

/// Originals, then one noisy copy of every original per factor, then SMOTE.
///
/// Factor `i` draws its noise from `seed + i`; SMOTE uses `seed`.
pub fn augment(records: &[PhaseRecord], options: &AugmentOptions) -> Result<Vec<PhaseRecord>> {
    let mut out = records.to_vec();
    for (i, &factor) in options.noise_factors.iter().enumerate() {
        out.extend(dataset::augment_noise(
            records,
            factor,
            options.seed.wrapping_add(i as u64),
        )?);
    }
    if options.smote {
        out = dataset::smote(&out, options.smote_k, options.seed)?;
    }
    Ok(out)
}

/// Hyperparameters of one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub train_fraction: f64,
    pub augment: AugmentOptions,
    pub solver: TrainConfig,
    /// RBF width; `None` selects `1 / (d · mean variance)` of the training set.
    pub gamma: Option<f64>,
    pub coef0: f64,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            train_fraction: dataset::DEFAULT_TRAIN_FRACTION,
            augment: AugmentOptions::default(),
            solver: TrainConfig::default(),
            gamma: None,
            coef0: 1.0,
            seed: 42,
        }
    }
}

/// A split with its training side ready for the solver.
#[derive(Debug, Clone)]
pub struct PreparedSplit {
    pub train: Vec<PhaseRecord>,
    pub validation: Vec<PhaseRecord>,
    pub standardizer: Standardizer,
    /// Preprocessed, standardised and augmented training records.
    pub train_ready: Vec<PhaseRecord>,
}

/// Per-record conditioning applied before the standardizer, in training and
/// in scoring: mean removal, then scaling to unit RMS so that breathing depth
/// does not enter the decision.
pub fn condition(record: &PhaseRecord) -> PhaseRecord {
    dataset::scale_to_unit_rms(&dataset::preprocess(record))
}

/// split → [`condition`] → standardise (fit on train) → augment train.
pub fn prepare(records: &[PhaseRecord], config: &ExperimentConfig) -> Result<PreparedSplit> {
    let split = dataset::split(records, config.train_fraction, config.seed)?;
    let centred: Vec<PhaseRecord> = split.train.iter().map(condition).collect();
    let standardizer = Standardizer::fit(&centred)?;
    let scaled = standardizer.apply(&centred)?;
    let train_ready = augment(&scaled, &config.augment)?;
    Ok(PreparedSplit {
        train: split.train,
        validation: split.validation,
        standardizer,
        train_ready,
    })
}

/// Resolves a kernel name against the configured hyperparameters.
pub fn kernel_from_name(name: &str, config: &ExperimentConfig, train_ready: &[PhaseRecord]) -> Result<KernelSpec> {
    let spec = match name {
        "linear" => KernelSpec::Linear,
        "rbf" => KernelSpec::Rbf {
            gamma: config.gamma.unwrap_or_else(|| svm::default_gamma(train_ready)),
        },
        "quadratic" => KernelSpec::Quadratic { coef0: config.coef0 },
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown kernel {other:?}; expected one of {}",
                KERNEL_NAMES.join(", ")
            )))
        }
    };
    spec.validate()?;
    Ok(spec)
}

/// Trains on the prepared split and attaches its standardizer.
pub fn train_prepared(prepared: &PreparedSplit, kernel: KernelSpec, config: &ExperimentConfig) -> Result<SvmModel> {
    let solver = TrainConfig {
        seed: config.seed,
        ..config.solver
    };
    let mut model = svm::train(&prepared.train_ready, kernel, &solver)?;
    model.standardizer = prepared.standardizer.clone();
    Ok(model)
}

/// Per-record scoring output.
#[derive(Debug, Clone, PartialEq)]
pub struct Scored {
    pub id: String,
    pub breaths_true: Option<f64>,
    pub actual: Label,
    pub decision_value: f64,
    pub predicted: Label,
}

/// Scores raw (unstandardised) records.
pub fn score(model: &SvmModel, records: &[PhaseRecord]) -> Result<Vec<Scored>> {
    records
        .iter()
        .map(|r| {
            let centred = condition(r);
            let decision_value = model.decision_value_raw(&centred.features)?;
            Ok(Scored {
                id: r.id.clone(),
                breaths_true: r.breaths_true,
                actual: r.label,
                decision_value,
                predicted: svm::label_of(decision_value),
            })
        })
        .collect()
}

pub fn confusion_of(scored: &[Scored]) -> Result<ConfusionMatrix> {
    let predicted: Vec<Label> = scored.iter().map(|s| s.predicted).collect();
    let actual: Vec<Label> = scored.iter().map(|s| s.actual).collect();
    confusion(&predicted, &actual)
}

pub const SCORES_HEADER: &str = "id,breaths,label,decision_value,predicted";

/// Plot-ready decision values against ground-truth breath counts.
pub fn scores_csv(scored: &[Scored]) -> String {
    use crate::io::fmt_real;
    let mut out = format!("{SCORES_HEADER}\n");
    for s in scored {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            s.id,
            s.breaths_true.map(fmt_real).unwrap_or_default(),
            s.actual,
            fmt_real(s.decision_value),
            s.predicted
        ));
    }
    out
}

/// Result of training and validating one kernel.
#[derive(Debug, Clone)]
pub struct KernelRun {
    pub model: SvmModel,
    pub scores: Vec<Scored>,
    pub row: ScoreRow,
}

/// Trains every named kernel on the same prepared split and scores the
/// validation side. Output is sorted by kernel name.
pub fn compare(prepared: &PreparedSplit, kernels: &[&str], config: &ExperimentConfig) -> Result<Vec<KernelRun>> {
    let mut names: Vec<&str> = kernels.to_vec();
    names.sort_unstable();
    names.dedup();
    names
        .into_iter()
        .map(|name| {
            let kernel = kernel_from_name(name, config, &prepared.train_ready)?;
            let model = train_prepared(prepared, kernel, config)?;
            let scores = score(&model, &prepared.validation)?;
            let row = ScoreRow {
                kernel: name.to_string(),
                confusion: confusion_of(&scores)?,
                support_vectors: model.num_support_vectors(),
            };
            Ok(KernelRun { model, scores, row })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radar_sim::default_paper_params;

    fn small_params() -> ChirpParams {
        ChirpParams {
            adc_samples: 64,
            ..default_paper_params()
        }
    }

    #[test]
    fn simulate_labels_from_ground_truth() {
        let config = SimulationConfig {
            count: 12,
            ..Default::default()
        };
        let cohort = simulate_records(&small_params(), &config).unwrap();
        assert_eq!(cohort.records.len(), 12);
        for (r, m) in cohort.records.iter().zip(&cohort.manifest) {
            assert_eq!(r.id, m.id);
            assert_eq!(r.features.len(), 512);
            let b = r.breaths_true.unwrap();
            assert!((b - m.breath_freq_hz * 25.6).abs() < 1e-9);
            assert_eq!(r.label, classify_by_threshold(b));
        }
        assert_eq!(cohort, simulate_records(&small_params(), &config).unwrap());
        let bad = SimulationConfig { count: 1, ..config };
        assert_eq!(
            simulate_records(&small_params(), &bad).unwrap_err().to_string(),
            "invalid parameter: count must be ≥ 2"
        );
    }

    #[test]
    fn augmentation_counts() {
        let records: Vec<PhaseRecord> = (0..8)
            .map(|i| {
                let label = if i < 6 { Label::Abnormal } else { Label::Normal };
                PhaseRecord::new(format!("r{i}"), label, vec![i as f64, (i * i) as f64, 1.0])
            })
            .collect();
        let opts = AugmentOptions {
            noise_factors: vec![0.1, 0.2],
            ..Default::default()
        };
        assert_eq!(augment(&records, &opts).unwrap().len(), 24);
        let with_smote = AugmentOptions { smote: true, ..opts };
        let out = augment(&records, &with_smote).unwrap();
        let normals = out.iter().filter(|r| r.label == Label::Normal).count();
        assert_eq!(normals * 2, out.len());
        assert_eq!(augment(&records, &AugmentOptions::default()).unwrap(), records);
    }

    #[test]
    fn unknown_kernel_lists_choices() {
        let err = kernel_from_name("sigmoid", &ExperimentConfig::default(), &[]).unwrap_err();
        assert!(err.to_string().contains("linear, rbf, quadratic"));
    }
}
