//! The nested cross-validation experiment: preprocessing (in either leakage
//! mode), PCA, outer folds, inner grid search, final per-fold fits and the
//! aggregated report.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::dataset::Corpus;
use crate::preprocess::{
    fit_normalization, normalize_and_vectorize, resample, NormalizationState, SampleMeta,
    VectorLayout,
};
use crate::{Error, Result};

use super::report::{ClassifierReport, ConfusionMatrix, ExperimentReport, FoldOutcome, FoldRecord};
use super::search::{fit_classifier, grid_search, predict_one, rows};
use super::{split_folds, ClassifierKind, CvSpec, GridSpec, LeakageMode, SampleKey, ScenarioSpec};

/// Feature-pipeline settings: resample length and PCA width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineSpec {
    pub target_len: usize,
    pub pca_components: usize,
}

impl Default for PipelineSpec {
    fn default() -> Self {
        PipelineSpec {
            target_len: 100,
            pca_components: 100,
        }
    }
}

/// The reduced train/test views of one outer fold.
struct FoldDataset {
    train_x: Array2<f64>,
    train_y: Vec<u32>,
    train_keys: Vec<SampleKey>,
    test_x: Array2<f64>,
    test_y: Vec<u32>,
    pca_dim: usize,
}

/// Runs the full experiment for one scenario over the given classifier grids.
///
/// Identical inputs produce a bit-identical report.
pub fn run_experiment(
    corpus: &Corpus,
    scenario: &ScenarioSpec,
    grids: &[GridSpec],
    cv: &CvSpec,
    pipeline: &PipelineSpec,
) -> Result<ExperimentReport> {
    corpus.validate_nonempty()?;
    scenario.validate()?;
    cv.validate()?;
    for grid in grids {
        grid.validate()?;
    }
    if grids.is_empty() {
        return Err(Error::invalid("run_experiment needs at least one classifier grid".to_string()));
    }

    // Restrict to the scenario's eligible recordings.
    let eligible: Vec<usize> = match scenario {
        ScenarioSpec::A { gesture_id } => (0..corpus.recordings.len())
            .filter(|&i| corpus.recordings[i].gesture_id == *gesture_id)
            .collect(),
        ScenarioSpec::B => (0..corpus.recordings.len()).collect(),
        ScenarioSpec::C {
            train_gestures,
            test_gestures,
        } => (0..corpus.recordings.len())
            .filter(|&i| {
                let g = corpus.recordings[i].gesture_id;
                train_gestures.contains(&g) || test_gestures.contains(&g)
            })
            .collect(),
    };
    if eligible.is_empty() {
        return Err(Error::invalid(format!(
            "no recordings are eligible for scenario {}",
            scenario.code()
        )));
    }

    let metas: Vec<SampleMeta> = eligible
        .iter()
        .map(|&i| SampleMeta::from(&corpus.recordings[i]))
        .collect();
    let keys: Vec<SampleKey> = metas
        .iter()
        .map(|m| SampleKey {
            performer: m.performer_id,
            gesture: m.gesture_id,
        })
        .collect();
    let labels: Vec<u32> = metas.iter().map(|m| m.performer_id).collect();
    let mut performers = labels.clone();
    performers.sort_unstable();
    performers.dedup();

    let resampled: Vec<Array2<f64>> = eligible
        .iter()
        .map(|&i| resample(&corpus.recordings[i], pipeline.target_len))
        .collect::<Result<_>>()?;

    let folds = split_folds(&keys, cv, scenario)?;
    let datasets = match cv.leakage_mode {
        LeakageMode::PaperFaithful => {
            pooled_fold_datasets(&resampled, &metas, &labels, &keys, &folds, pipeline)?
        }
        LeakageMode::FoldSafe => {
            fold_safe_datasets(&resampled, &metas, &labels, &keys, &folds, pipeline)?
        }
    };

    let mut classifier_reports = Vec::with_capacity(grids.len());
    for grid in grids {
        let kind = grid.kind();
        let mut confusion = ConfusionMatrix::new(performers.clone());
        let mut fold_outcomes = Vec::with_capacity(datasets.len());
        for (fi, ds) in datasets.iter().enumerate() {
            let context = |e: Error| with_context(e, scenario, kind, fi);
            let inner_cv = CvSpec {
                outer_folds: cv.inner_folds,
                inner_folds: cv.inner_folds,
                seed: derive_inner_seed(cv.seed, fi),
                leakage_mode: cv.leakage_mode,
            };
            let (chosen, _inner_score) = grid_search(
                ds.train_x.view(),
                &ds.train_y,
                &ds.train_keys,
                grid,
                &inner_cv,
                scenario,
            )
            .map_err(context)?;
            let model =
                fit_classifier(ds.train_x.view(), &ds.train_y, &chosen).map_err(context)?;
            let mut correct = 0usize;
            for (row, &truth) in ds.test_x.rows().into_iter().zip(&ds.test_y) {
                let predicted = predict_one(&model, row).map_err(context)?;
                confusion.add(truth, predicted).map_err(context)?;
                if predicted == truth {
                    correct += 1;
                }
            }
            fold_outcomes.push(FoldOutcome {
                chosen,
                accuracy: correct as f64 / ds.test_y.len().max(1) as f64,
                test_count: ds.test_y.len(),
            });
        }
        classifier_reports.push(ClassifierReport {
            classifier: kind,
            accuracy: confusion.accuracy(),
            fold_outcomes,
            confusion,
        });
    }

    Ok(ExperimentReport {
        scenario: scenario.clone(),
        mode: cv.leakage_mode,
        seed: cv.seed,
        performers,
        target_len: pipeline.target_len,
        requested_pca_dim: pipeline.pca_components,
        eligible,
        folds: folds
            .into_iter()
            .zip(&datasets)
            .map(|(fold, ds)| FoldRecord {
                fold,
                pca_dim: ds.pca_dim,
            })
            .collect(),
        classifiers: classifier_reports,
    })
}

/// Normalization and PCA fitted once on all eligible data (the original
/// study's protocol), then sliced per fold.
fn pooled_fold_datasets(
    resampled: &[Array2<f64>],
    metas: &[SampleMeta],
    labels: &[u32],
    keys: &[SampleKey],
    folds: &[super::Fold],
    pipeline: &PipelineSpec,
) -> Result<Vec<FoldDataset>> {
    let state = fit_normalization(resampled)?;
    let matrix = vector_matrix(resampled, metas, &state)?;
    let pca_dim = effective_pca_dim(pipeline.pca_components, matrix.nrows(), matrix.ncols())?;
    let model = crate::classifiers::pca_fit(matrix.view(), pca_dim)?;
    let reduced = crate::classifiers::pca_transform_batch(&model, matrix.view())?;

    Ok(folds
        .iter()
        .map(|fold| FoldDataset {
            train_x: rows(reduced.view(), &fold.train),
            train_y: fold.train.iter().map(|&i| labels[i]).collect(),
            train_keys: fold.train.iter().map(|&i| keys[i]).collect(),
            test_x: rows(reduced.view(), &fold.test),
            test_y: fold.test.iter().map(|&i| labels[i]).collect(),
            pca_dim,
        })
        .collect())
}

/// Normalization and PCA fitted on each outer-training fold only; the test
/// fold is transformed with the training fold's statistics.
fn fold_safe_datasets(
    resampled: &[Array2<f64>],
    metas: &[SampleMeta],
    labels: &[u32],
    keys: &[SampleKey],
    folds: &[super::Fold],
    pipeline: &PipelineSpec,
) -> Result<Vec<FoldDataset>> {
    let mut out = Vec::with_capacity(folds.len());
    for fold in folds {
        let train_mats: Vec<Array2<f64>> =
            fold.train.iter().map(|&i| resampled[i].clone()).collect();
        let state = fit_normalization(&train_mats)?;

        let train_metas: Vec<SampleMeta> = fold.train.iter().map(|&i| metas[i]).collect();
        let train_matrix = vector_matrix(&train_mats, &train_metas, &state)?;

        let test_mats: Vec<Array2<f64>> = fold.test.iter().map(|&i| resampled[i].clone()).collect();
        let test_metas: Vec<SampleMeta> = fold.test.iter().map(|&i| metas[i]).collect();
        let test_matrix = vector_matrix(&test_mats, &test_metas, &state)?;

        let pca_dim =
            effective_pca_dim(pipeline.pca_components, train_matrix.nrows(), train_matrix.ncols())?;
        let model = crate::classifiers::pca_fit(train_matrix.view(), pca_dim)?;
        out.push(FoldDataset {
            train_x: crate::classifiers::pca_transform_batch(&model, train_matrix.view())?,
            train_y: fold.train.iter().map(|&i| labels[i]).collect(),
            train_keys: fold.train.iter().map(|&i| keys[i]).collect(),
            test_x: crate::classifiers::pca_transform_batch(&model, test_matrix.view())?,
            test_y: fold.test.iter().map(|&i| labels[i]).collect(),
            pca_dim,
        });
    }
    Ok(out)
}

fn vector_matrix(
    resampled: &[Array2<f64>],
    metas: &[SampleMeta],
    state: &NormalizationState,
) -> Result<Array2<f64>> {
    let p = state.mean.len() * state.target_len;
    let mut matrix = Array2::<f64>::zeros((resampled.len(), p));
    for (r, (mat, meta)) in resampled.iter().zip(metas).enumerate() {
        let fv = normalize_and_vectorize(mat, state, VectorLayout::TimeMajor, *meta)?;
        matrix
            .row_mut(r)
            .assign(&ndarray::ArrayView1::from(fv.values.as_slice()));
    }
    Ok(matrix)
}

/// Caps the requested PCA width at what the training data can support:
/// centering removes one degree of freedom, the input dimension the rest.
fn effective_pca_dim(requested: usize, samples: usize, dim: usize) -> Result<usize> {
    if samples < 2 {
        return Err(Error::invalid(format!(
            "need at least 2 samples for PCA, got {samples}"
        )));
    }
    let cap = (samples - 1).min(dim);
    let effective = requested.min(cap);
    if effective == 0 {
        return Err(Error::invalid("PCA width came out as 0".to_string()));
    }
    Ok(effective)
}

fn derive_inner_seed(seed: u64, fold_index: usize) -> u64 {
    seed ^ (fold_index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn with_context(e: Error, scenario: &ScenarioSpec, classifier: ClassifierKind, fold: usize) -> Error {
    let prefix = format!("scenario {}, classifier {classifier}, fold {fold}", scenario.code());
    match e {
        Error::InvalidInput(m) => Error::InvalidInput(format!("{prefix}: {m}")),
        Error::Numerical(m) => Error::Numerical(format!("{prefix}: {m}")),
        other => other,
    }
}
