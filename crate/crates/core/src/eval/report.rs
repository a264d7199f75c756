//! Confusion matrices and the per-experiment report.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

use super::{ChosenParams, ClassifierKind, Fold, LeakageMode, ScenarioSpec};

/// Counts of (true class, predicted class) pairs; rows are true classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    /// Class labels indexing both rows and columns, ascending.
    pub labels: Vec<u32>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(labels: Vec<u32>) -> Self {
        let n = labels.len();
        ConfusionMatrix {
            labels,
            counts: vec![vec![0; n]; n],
        }
    }

    fn index_of(&self, label: u32) -> Result<usize> {
        self.labels
            .binary_search(&label)
            .map_err(|_| Error::invalid(format!("label {label} is not in the confusion matrix")))
    }

    pub fn add(&mut self, truth: u32, predicted: u32) -> Result<()> {
        let t = self.index_of(truth)?;
        let p = self.index_of(predicted)?;
        self.counts[t][p] += 1;
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.labels.len()).map(|i| self.counts[i][i]).sum()
    }

    /// Fraction of correct predictions: trace over total.
    pub fn accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            0.0
        } else {
            self.trace() as f64 / total as f64
        }
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.iter().map(|row| row.iter().sum()).collect()
    }

    /// Adds another matrix's counts into this one; every label of `other`
    /// must exist here.
    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<()> {
        for (ti, &t) in other.labels.iter().enumerate() {
            for (pi, &p) in other.labels.iter().enumerate() {
                if other.counts[ti][pi] > 0 {
                    let t_idx = self.index_of(t)?;
                    let p_idx = self.index_of(p)?;
                    self.counts[t_idx][p_idx] += other.counts[ti][pi];
                }
            }
        }
        Ok(())
    }

    /// CSV rendering with a header of predicted labels.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("true\\predicted");
        for label in &self.labels {
            out.push_str(&format!(",{label}"));
        }
        out.push('\n');
        for (label, row) in self.labels.iter().zip(&self.counts) {
            out.push_str(&label.to_string());
            for count in row {
                out.push_str(&format!(",{count}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Builds a confusion matrix from parallel label sequences; the label set is
/// the sorted union of both.
pub fn confusion_matrix(truth: &[u32], predicted: &[u32]) -> Result<ConfusionMatrix> {
    if truth.len() != predicted.len() {
        return Err(Error::invalid(format!(
            "{} true labels but {} predictions",
            truth.len(),
            predicted.len()
        )));
    }
    let labels: BTreeSet<u32> = truth.iter().chain(predicted).copied().collect();
    let mut matrix = ConfusionMatrix::new(labels.into_iter().collect());
    for (&t, &p) in truth.iter().zip(predicted) {
        matrix.add(t, p)?;
    }
    Ok(matrix)
}

/// Outer-fold assignment plus the PCA dimension that fold saw.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldRecord {
    pub fold: Fold,
    pub pca_dim: usize,
}

/// What one classifier did on one outer fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldOutcome {
    pub chosen: ChosenParams,
    pub accuracy: f64,
    pub test_count: usize,
}

/// Results of one classifier across all outer folds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierReport {
    pub classifier: ClassifierKind,
    /// Pooled accuracy: trace over total of the aggregated confusion matrix.
    pub accuracy: f64,
    pub fold_outcomes: Vec<FoldOutcome>,
    pub confusion: ConfusionMatrix,
}

/// Everything one `run_experiment` call produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub scenario: ScenarioSpec,
    pub mode: LeakageMode,
    pub seed: u64,
    /// Performer ids, ascending; the confusion matrices use this label set.
    pub performers: Vec<u32>,
    pub target_len: usize,
    pub requested_pca_dim: usize,
    /// Positions of the eligible recordings in the corpus.
    pub eligible: Vec<usize>,
    /// Outer folds (indices into `eligible`).
    pub folds: Vec<FoldRecord>,
    pub classifiers: Vec<ClassifierReport>,
}

impl ExperimentReport {
    pub fn classifier(&self, kind: ClassifierKind) -> Option<&ClassifierReport> {
        self.classifiers.iter().find(|c| c.classifier == kind)
    }
}

/// Renders an accuracy table in percent, one row per report, one column per
/// classifier.
pub fn render_summary_table(reports: &[ExperimentReport]) -> String {
    let mut kinds: Vec<ClassifierKind> = Vec::new();
    for report in reports {
        for c in &report.classifiers {
            if !kinds.contains(&c.classifier) {
                kinds.push(c.classifier);
            }
        }
    }
    let mut out = String::from("scenario");
    for kind in &kinds {
        out.push_str(&format!("\t{kind}"));
    }
    out.push('\n');
    for report in reports {
        out.push_str(&report.scenario.code());
        for kind in &kinds {
            match report.classifier(*kind) {
                Some(c) => out.push_str(&format!("\t{:.1}", c.accuracy * 100.0)),
                None => out.push_str("\t-"),
            }
        }
        out.push('\n');
    }
    out
}
