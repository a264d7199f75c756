//! Inner-loop grid search and the fit/predict dispatch shared with the
//! experiment engine.

use ndarray::{ArrayView1, ArrayView2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::classifiers::{
    knn_fit, knn_predict, lda_fit, lda_predict, svm_fit, svm_predict, Kernel, TrainedModel,
};
use crate::{Error, Result};

use super::{split_folds, ChosenParams, CvSpec, Fold, GridSpec, SampleKey, ScenarioSpec};

/// Trains one classifier at a fixed grid point.
pub fn fit_classifier(
    data: ArrayView2<'_, f64>,
    labels: &[u32],
    params: &ChosenParams,
) -> Result<TrainedModel> {
    match *params {
        ChosenParams::Lda { dim } => Ok(TrainedModel::Lda(lda_fit(data, labels, dim)?)),
        ChosenParams::Knn { neighbours } => Ok(TrainedModel::Knn(knn_fit(data, labels, neighbours)?)),
        ChosenParams::Svm { cost, gamma } => Ok(TrainedModel::Svm(svm_fit(
            data,
            labels,
            Kernel::Rbf { gamma },
            cost,
        )?)),
    }
}

/// Predicts one sample with whichever classifier was trained.
pub fn predict_one(model: &TrainedModel, x: ArrayView1<'_, f64>) -> Result<u32> {
    match model {
        TrainedModel::Lda(m) => lda_predict(m, x),
        TrainedModel::Knn(m) => knn_predict(m, x),
        TrainedModel::Svm(m) => svm_predict(m, x),
    }
}

/// Picks the grid point with the best mean inner-fold accuracy.
///
/// Inner folds mirror the scenario: A and B reuse the stratified splitter on
/// the training data; C re-partitions the training gestures into disjoint
/// fit/validation gesture groups per fold, so hyperparameters are chosen for
/// generalization to unseen gestures. A grid point whose fit fails on a fold
/// scores 0 there (with a warning); ties go to the earlier grid point.
pub fn grid_search(
    data: ArrayView2<'_, f64>,
    labels: &[u32],
    keys: &[SampleKey],
    grid: &GridSpec,
    inner: &CvSpec,
    scenario: &ScenarioSpec,
) -> Result<(ChosenParams, f64)> {
    grid.validate()?;
    if data.nrows() == 0 {
        return Err(Error::invalid("grid search over an empty training set".to_string()));
    }
    if labels.len() != data.nrows() || keys.len() != data.nrows() {
        return Err(Error::invalid(format!(
            "inconsistent grid-search inputs: {} rows, {} labels, {} keys",
            data.nrows(),
            labels.len(),
            keys.len()
        )));
    }

    let folds = inner_folds(keys, inner, scenario)?;
    let points = grid.points();
    let mut best: Option<(ChosenParams, f64)> = None;
    for point in points {
        let mut fold_scores = Vec::with_capacity(folds.len());
        for fold in &folds {
            fold_scores.push(score_fold(data, labels, fold, &point));
        }
        let mean = fold_scores.iter().sum::<f64>() / fold_scores.len() as f64;
        if best.as_ref().map_or(true, |&(_, b)| mean > b) {
            best = Some((point, mean));
        }
    }
    Ok(best.expect("grid validated non-empty"))
}

fn score_fold(
    data: ArrayView2<'_, f64>,
    labels: &[u32],
    fold: &Fold,
    point: &ChosenParams,
) -> f64 {
    let train_data = rows(data, &fold.train);
    let train_labels: Vec<u32> = fold.train.iter().map(|&i| labels[i]).collect();
    let model = match fit_classifier(train_data.view(), &train_labels, point) {
        Ok(model) => model,
        Err(e) => {
            log::warn!("grid point {point} failed to fit: {e}; scoring 0");
            return 0.0;
        }
    };
    let mut correct = 0usize;
    for &i in &fold.test {
        match predict_one(&model, data.row(i)) {
            Ok(label) if label == labels[i] => correct += 1,
            Ok(_) => {}
            Err(e) => {
                log::warn!("grid point {point} failed to predict: {e}; scoring 0");
                return 0.0;
            }
        }
    }
    correct as f64 / fold.test.len().max(1) as f64
}

pub(super) fn rows(data: ArrayView2<'_, f64>, indices: &[usize]) -> ndarray::Array2<f64> {
    let mut out = ndarray::Array2::<f64>::zeros((indices.len(), data.ncols()));
    for (r, &i) in indices.iter().enumerate() {
        out.row_mut(r).assign(&data.row(i));
    }
    out
}

/// Scenario-aware inner folds over the training samples only.
fn inner_folds(keys: &[SampleKey], inner: &CvSpec, scenario: &ScenarioSpec) -> Result<Vec<Fold>> {
    let split_spec = CvSpec {
        outer_folds: inner.inner_folds,
        ..*inner
    };
    match scenario {
        ScenarioSpec::A { .. } | ScenarioSpec::B => split_folds(keys, &split_spec, scenario),
        ScenarioSpec::C { .. } => {
            let folds = inner.inner_folds;
            let mut gestures: Vec<u32> = keys.iter().map(|k| k.gesture).collect();
            gestures.sort_unstable();
            gestures.dedup();
            if gestures.len() < folds {
                return Err(Error::invalid(format!(
                    "scenario C inner validation needs at least {folds} distinct training \
                     gestures, got {}",
                    gestures.len()
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(inner.seed);
            gestures.shuffle(&mut rng);
            let mut out = Vec::with_capacity(folds);
            for f in 0..folds {
                let held_out: Vec<u32> = gestures
                    .iter()
                    .enumerate()
                    .filter(|(pos, _)| pos % folds == f)
                    .map(|(_, &g)| g)
                    .collect();
                let mut train = Vec::new();
                let mut test = Vec::new();
                for (i, key) in keys.iter().enumerate() {
                    if held_out.contains(&key.gesture) {
                        test.push(i);
                    } else {
                        train.push(i);
                    }
                }
                out.push(Fold { train, test });
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::LeakageMode;
    use ndarray::Array2;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn inner_cv(folds: usize, seed: u64) -> CvSpec {
        CvSpec {
            outer_folds: folds,
            inner_folds: folds,
            seed,
            leakage_mode: LeakageMode::PaperFaithful,
        }
    }

    /// Two performers' blobs with unit noise; `flip` labels are noise points
    /// that sit on the wrong side, so k=1 memorizes them while larger k
    /// recovers the majority structure.
    fn noisy_two_class(
        rng: &mut ChaCha8Rng,
        n_per: usize,
        flipped: usize,
    ) -> (Array2<f64>, Vec<u32>, Vec<SampleKey>) {
        let n = 2 * n_per;
        let mut data = Array2::<f64>::zeros((n, 2));
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let class = if i < n_per { 1u32 } else { 2 };
            let sign = if class == 1 { -1.0 } else { 1.0 };
            data[(i, 0)] = sign * 2.5 + 0.5 * rng.sample::<f64, _>(StandardNormal);
            data[(i, 1)] = 0.5 * rng.sample::<f64, _>(StandardNormal);
            labels.push(class);
        }
        // Flip a few labels to plant pure label noise.
        for f in 0..flipped {
            let idx = f * (n / flipped.max(1)) % n;
            labels[idx] = 3 - labels[idx];
        }
        let keys: Vec<SampleKey> = labels
            .iter()
            .enumerate()
            .map(|(i, &performer)| SampleKey {
                performer,
                gesture: (i % 4) as u32 + 1,
            })
            .collect();
        (data, labels, keys)
    }

    #[test]
    fn single_point_grid_is_returned_directly() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (data, labels, keys) = noisy_two_class(&mut rng, 24, 0);
        let grid = GridSpec::Knn {
            neighbours: vec![3],
        };
        let (best, _) = grid_search(
            data.view(),
            &labels,
            &keys,
            &grid,
            &inner_cv(4, 0),
            &ScenarioSpec::B,
        )
        .unwrap();
        assert_eq!(best, ChosenParams::Knn { neighbours: 3 });
    }

    #[test]
    fn label_noise_steers_selection_away_from_k_one() {
        // With planted label noise, k=1 memorizes the flipped points and
        // loses validation accuracy; a larger k must win. Verified against
        // exhaustive evaluation of the same folds.
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (data, labels, keys) = noisy_two_class(&mut rng, 60, 14);
        let grid = GridSpec::Knn {
            neighbours: vec![1, 5],
        };
        let inner = inner_cv(4, 9);
        let (best, best_score) =
            grid_search(data.view(), &labels, &keys, &grid, &inner, &ScenarioSpec::B).unwrap();

        // Exhaustive re-evaluation.
        let folds = split_folds(
            &keys,
            &CvSpec {
                outer_folds: 4,
                ..inner
            },
            &ScenarioSpec::B,
        )
        .unwrap();
        let mut means = Vec::new();
        for k in [1usize, 5] {
            let mut scores = Vec::new();
            for fold in &folds {
                let train = rows(data.view(), &fold.train);
                let train_labels: Vec<u32> = fold.train.iter().map(|&i| labels[i]).collect();
                let model = knn_fit(train.view(), &train_labels, k).unwrap();
                let correct = fold
                    .test
                    .iter()
                    .filter(|&&i| knn_predict(&model, data.row(i)).unwrap() == labels[i])
                    .count();
                scores.push(correct as f64 / fold.test.len() as f64);
            }
            means.push(scores.iter().sum::<f64>() / scores.len() as f64);
        }
        assert!(means[1] > means[0], "expected k=5 to beat k=1: {means:?}");
        assert_eq!(best, ChosenParams::Knn { neighbours: 5 });
        assert!((best_score - means[1]).abs() <= 1e-12);
    }

    #[test]
    fn infeasible_lda_dims_score_zero_and_lose() {
        // 4 classes: canonical dimensions above 3 cannot be fit and must
        // never be selected.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n_per = 16;
        let mut data = Array2::<f64>::zeros((4 * n_per, 5));
        let mut labels = Vec::new();
        for c in 0..4u32 {
            for i in 0..n_per {
                let row = (c as usize) * n_per + i;
                for j in 0..5 {
                    let center = if j == c as usize { 4.0 } else { 0.0 };
                    data[(row, j)] = center + rng.sample::<f64, _>(StandardNormal);
                }
            }
            labels.extend(std::iter::repeat(c + 1).take(n_per));
        }
        let keys: Vec<SampleKey> = labels
            .iter()
            .map(|&performer| SampleKey {
                performer,
                gesture: 1,
            })
            .collect();
        let grid = GridSpec::Lda {
            dims: vec![3, 5, 10],
        };
        let (best, score) = grid_search(
            data.view(),
            &labels,
            &keys,
            &grid,
            &inner_cv(4, 1),
            &ScenarioSpec::A { gesture_id: 1 },
        )
        .unwrap();
        assert_eq!(best, ChosenParams::Lda { dim: 3 });
        assert!(score > 0.5);
    }

    #[test]
    fn scenario_c_inner_folds_are_gesture_disjoint() {
        let keys: Vec<SampleKey> = (0..40)
            .map(|i| SampleKey {
                performer: (i % 2) as u32 + 1,
                gesture: (i % 8) as u32 + 1,
            })
            .collect();
        let folds = inner_folds(
            &keys,
            &inner_cv(4, 5),
            &ScenarioSpec::C {
                train_gestures: (1..=8).collect(),
                test_gestures: [9].into(),
            },
        )
        .unwrap();
        assert_eq!(folds.len(), 4);
        let mut tested_gestures: Vec<u32> = Vec::new();
        for fold in &folds {
            let train_gestures: std::collections::BTreeSet<u32> =
                fold.train.iter().map(|&i| keys[i].gesture).collect();
            let test_gestures: std::collections::BTreeSet<u32> =
                fold.test.iter().map(|&i| keys[i].gesture).collect();
            assert!(train_gestures.is_disjoint(&test_gestures));
            tested_gestures.extend(test_gestures);
        }
        tested_gestures.sort_unstable();
        assert_eq!(tested_gestures, (1..=8).collect::<Vec<u32>>());
    }

    #[test]
    fn scenario_c_needs_enough_training_gestures() {
        let keys: Vec<SampleKey> = (0..12)
            .map(|i| SampleKey {
                performer: (i % 2) as u32 + 1,
                gesture: (i % 2) as u32 + 1,
            })
            .collect();
        let err = inner_folds(
            &keys,
            &inner_cv(4, 0),
            &ScenarioSpec::C {
                train_gestures: [1, 2].into(),
                test_gestures: [3].into(),
            },
        )
        .unwrap_err();
        assert!(err.to_string().contains("distinct training gestures"), "{err}");
    }
}
