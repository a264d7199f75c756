//! The experiment engine: scenario-based data splitting, two-stage nested
//! cross-validation with grid search, and accuracy/confusion reporting.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

mod experiment;
mod folds;
mod report;
mod search;

pub use experiment::{run_experiment, PipelineSpec};
pub use folds::{split_folds, Fold, SampleKey};
pub use report::{
    confusion_matrix, render_summary_table, ClassifierReport, ConfusionMatrix, ExperimentReport,
    FoldOutcome, FoldRecord,
};
pub use search::{fit_classifier, grid_search, predict_one};

/// How the data is labelled and split for one experiment.
///
/// - `A`: one specific gesture; folds stratified by performer.
/// - `B`: all gestures; folds stratified by (performer, gesture).
/// - `C`: training and testing use disjoint gesture sets; the test set is
///   fixed while the training side is split into repeated holdouts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioSpec {
    A { gesture_id: u32 },
    B,
    C {
        train_gestures: BTreeSet<u32>,
        test_gestures: BTreeSet<u32>,
    },
}

impl ScenarioSpec {
    /// The default gesture partition for scenario C: odd ids train, even test.
    pub fn c_default() -> Self {
        ScenarioSpec::C {
            train_gestures: (1..=crate::dataset::MAX_GESTURE_ID).step_by(2).collect(),
            test_gestures: (2..=crate::dataset::MAX_GESTURE_ID).step_by(2).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ScenarioSpec::A { gesture_id } => {
                if *gesture_id == 0 || *gesture_id > crate::dataset::MAX_GESTURE_ID {
                    return Err(Error::invalid(format!(
                        "scenario A gesture id must be in 1..={}, got {gesture_id}",
                        crate::dataset::MAX_GESTURE_ID
                    )));
                }
            }
            ScenarioSpec::B => {}
            ScenarioSpec::C {
                train_gestures,
                test_gestures,
            } => {
                if train_gestures.is_empty() || test_gestures.is_empty() {
                    return Err(Error::invalid(
                        "scenario C needs non-empty train and test gesture sets".to_string(),
                    ));
                }
                if train_gestures.intersection(test_gestures).next().is_some() {
                    return Err(Error::invalid(
                        "scenario C train and test gesture sets must be disjoint".to_string(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Short code used in file names and summary rows: `a5`, `b`, `c`.
    pub fn code(&self) -> String {
        match self {
            ScenarioSpec::A { gesture_id } => format!("a{gesture_id}"),
            ScenarioSpec::B => "b".to_string(),
            ScenarioSpec::C { .. } => "c".to_string(),
        }
    }
}

/// Which classifier a grid belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Lda,
    Knn,
    Svm,
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClassifierKind::Lda => "lda",
            ClassifierKind::Knn => "knn",
            ClassifierKind::Svm => "svm",
        })
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lda" => Ok(ClassifierKind::Lda),
            "knn" => Ok(ClassifierKind::Knn),
            "svm" => Ok(ClassifierKind::Svm),
            other => Err(Error::invalid(format!(
                "unknown classifier {other:?} (expected lda, knn or svm)"
            ))),
        }
    }
}

/// Hyperparameter grid for one classifier, enumerated in declared order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridSpec {
    Lda { dims: Vec<usize> },
    Knn { neighbours: Vec<usize> },
    Svm { costs: Vec<f64>, gammas: Vec<f64> },
}

impl GridSpec {
    pub fn default_lda() -> Self {
        GridSpec::Lda {
            dims: vec![3, 5, 10, 15, 20, 25, 30, 35],
        }
    }

    pub fn default_knn() -> Self {
        GridSpec::Knn {
            neighbours: vec![1, 2, 3, 4, 5, 7, 10, 20, 30, 40, 50],
        }
    }

    /// Logarithmic 5x5 grid over [0.001, 1.0] for both C and gamma.
    pub fn default_svm() -> Self {
        let points: Vec<f64> = (0..5).map(|i| 10f64.powf(-3.0 + 0.75 * i as f64)).collect();
        GridSpec::Svm {
            costs: points.clone(),
            gammas: points,
        }
    }

    pub fn default_for(kind: ClassifierKind) -> Self {
        match kind {
            ClassifierKind::Lda => Self::default_lda(),
            ClassifierKind::Knn => Self::default_knn(),
            ClassifierKind::Svm => Self::default_svm(),
        }
    }

    pub fn kind(&self) -> ClassifierKind {
        match self {
            GridSpec::Lda { .. } => ClassifierKind::Lda,
            GridSpec::Knn { .. } => ClassifierKind::Knn,
            GridSpec::Svm { .. } => ClassifierKind::Svm,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            GridSpec::Lda { dims } => !dims.is_empty() && dims.iter().all(|&d| d >= 1),
            GridSpec::Knn { neighbours } => {
                !neighbours.is_empty() && neighbours.iter().all(|&k| k >= 1)
            }
            GridSpec::Svm { costs, gammas } => {
                !costs.is_empty()
                    && !gammas.is_empty()
                    && costs.iter().chain(gammas).all(|&v| v > 0.0 && v.is_finite())
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid {} grid: {self:?}", self.kind())))
        }
    }

    /// Grid points in declared order (for SVM: costs outer, gammas inner).
    pub fn points(&self) -> Vec<ChosenParams> {
        match self {
            GridSpec::Lda { dims } => dims.iter().map(|&d| ChosenParams::Lda { dim: d }).collect(),
            GridSpec::Knn { neighbours } => neighbours
                .iter()
                .map(|&k| ChosenParams::Knn { neighbours: k })
                .collect(),
            GridSpec::Svm { costs, gammas } => {
                let mut out = Vec::with_capacity(costs.len() * gammas.len());
                for &cost in costs {
                    for &gamma in gammas {
                        out.push(ChosenParams::Svm { cost, gamma });
                    }
                }
                out
            }
        }
    }
}

/// One point of a hyperparameter grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChosenParams {
    Lda { dim: usize },
    Knn { neighbours: usize },
    Svm { cost: f64, gamma: f64 },
}

impl fmt::Display for ChosenParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChosenParams::Lda { dim } => write!(f, "d={dim}"),
            ChosenParams::Knn { neighbours } => write!(f, "k={neighbours}"),
            ChosenParams::Svm { cost, gamma } => write!(f, "C={cost:.4}, gamma={gamma:.4}"),
        }
    }
}

/// Whether corpus-level statistics (normalization, PCA) may see test data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LeakageMode {
    /// Normalization and PCA are fitted on the whole data set before
    /// splitting, reproducing the original study's protocol.
    PaperFaithful,
    /// Normalization and PCA are fitted on each outer-training fold only.
    FoldSafe,
}

impl fmt::Display for LeakageMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LeakageMode::PaperFaithful => "paper-faithful",
            LeakageMode::FoldSafe => "fold-safe",
        })
    }
}

impl FromStr for LeakageMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper-faithful" => Ok(LeakageMode::PaperFaithful),
            "fold-safe" => Ok(LeakageMode::FoldSafe),
            other => Err(Error::invalid(format!(
                "unknown mode {other:?} (expected paper-faithful or fold-safe)"
            ))),
        }
    }
}

/// Cross-validation layout: outer folds estimate accuracy, inner folds pick
/// hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvSpec {
    pub outer_folds: usize,
    pub inner_folds: usize,
    pub seed: u64,
    pub leakage_mode: LeakageMode,
}

impl Default for CvSpec {
    fn default() -> Self {
        CvSpec {
            outer_folds: 4,
            inner_folds: 4,
            seed: 0,
            leakage_mode: LeakageMode::PaperFaithful,
        }
    }
}

impl CvSpec {
    pub fn validate(&self) -> Result<()> {
        if self.outer_folds < 2 || self.inner_folds < 2 {
            return Err(Error::invalid(format!(
                "fold counts must be at least 2, got outer={} inner={}",
                self.outer_folds, self.inner_folds
            )));
        }
        Ok(())
    }
}
