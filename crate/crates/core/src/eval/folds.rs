//! Deterministic scenario-aware fold construction.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use serde::{Deserialize, Serialize};

use crate::preprocess::FeatureVector;
use crate::{Error, Result};

use super::{CvSpec, ScenarioSpec};

/// The labels fold construction needs from each sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleKey {
    pub performer: u32,
    pub gesture: u32,
}

impl From<&FeatureVector> for SampleKey {
    fn from(v: &FeatureVector) -> Self {
        SampleKey {
            performer: v.performer_id,
            gesture: v.gesture_id,
        }
    }
}

impl From<&crate::dataset::Recording> for SampleKey {
    fn from(r: &crate::dataset::Recording) -> Self {
        SampleKey {
            performer: r.performer_id,
            gesture: r.gesture_id,
        }
    }
}

/// Train/test index sets of one fold, both referring to the input slice.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Builds `cv.outer_folds` folds over the samples.
///
/// - Scenario A: stratified by performer (the data is expected to hold one
///   gesture already).
/// - Scenario B: stratified jointly by (performer, gesture), so each fold
///   holds a proportional share of every cell.
/// - Scenario C: the test side is always every sample of a test gesture;
///   the train-gesture samples are stratified into `outer_folds` parts and
///   each fold trains on all but one part. Samples of gestures in neither
///   set are left out entirely.
///
/// Folds are a pure function of the inputs; the seed drives the in-cell
/// shuffles.
pub fn split_folds(
    samples: &[SampleKey],
    cv: &CvSpec,
    scenario: &ScenarioSpec,
) -> Result<Vec<Fold>> {
    cv.validate()?;
    scenario.validate()?;
    if samples.is_empty() {
        return Err(Error::invalid("cannot split an empty sample set".to_string()));
    }
    let folds = cv.outer_folds;
    let mut rng = ChaCha8Rng::seed_from_u64(cv.seed);

    match scenario {
        ScenarioSpec::A { .. } | ScenarioSpec::B => {
            let by_gesture = matches!(scenario, ScenarioSpec::B);
            let eligible: Vec<usize> = (0..samples.len()).collect();
            let assignment = stratified_assignment(samples, &eligible, by_gesture, folds, &mut rng)?;
            let mut out = Vec::with_capacity(folds);
            for f in 0..folds {
                let mut train = Vec::new();
                let mut test = Vec::new();
                for &idx in &eligible {
                    if assignment[&idx] == f {
                        test.push(idx);
                    } else {
                        train.push(idx);
                    }
                }
                out.push(Fold { train, test });
            }
            Ok(out)
        }
        ScenarioSpec::C {
            train_gestures,
            test_gestures,
        } => {
            let pool: Vec<usize> = (0..samples.len())
                .filter(|&i| train_gestures.contains(&samples[i].gesture))
                .collect();
            let test: Vec<usize> = (0..samples.len())
                .filter(|&i| test_gestures.contains(&samples[i].gesture))
                .collect();
            if pool.is_empty() {
                return Err(Error::invalid(
                    "scenario C: no samples carry a training gesture".to_string(),
                ));
            }
            if test.is_empty() {
                return Err(Error::invalid(
                    "scenario C: no samples carry a testing gesture".to_string(),
                ));
            }
            let assignment = stratified_assignment(samples, &pool, true, folds, &mut rng)?;
            let mut out = Vec::with_capacity(folds);
            for f in 0..folds {
                let train: Vec<usize> = pool
                    .iter()
                    .copied()
                    .filter(|idx| assignment[idx] != f)
                    .collect();
                out.push(Fold {
                    train,
                    test: test.clone(),
                });
            }
            Ok(out)
        }
    }
}

/// Assigns each eligible sample a fold id, shuffling within each
/// stratification cell and dealing round-robin.
fn stratified_assignment(
    samples: &[SampleKey],
    eligible: &[usize],
    by_gesture: bool,
    folds: usize,
    rng: &mut ChaCha8Rng,
) -> Result<BTreeMap<usize, usize>> {
    let mut cells: BTreeMap<(u32, Option<u32>), Vec<usize>> = BTreeMap::new();
    for &idx in eligible {
        let key = (
            samples[idx].performer,
            by_gesture.then_some(samples[idx].gesture),
        );
        cells.entry(key).or_default().push(idx);
    }
    let mut assignment = BTreeMap::new();
    for ((performer, gesture), mut indices) in cells {
        if indices.len() < folds {
            let cell = match gesture {
                Some(g) => format!("performer {performer}, gesture {g}"),
                None => format!("performer {performer}"),
            };
            return Err(Error::invalid(format!(
                "cell ({cell}) has {} samples, fewer than the {folds} folds",
                indices.len()
            )));
        }
        indices.shuffle(rng);
        for (pos, idx) in indices.into_iter().enumerate() {
            assignment.insert(idx, pos % folds);
        }
    }
    Ok(assignment)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::LeakageMode;

    fn keys(spec: &[(u32, u32, usize)]) -> Vec<SampleKey> {
        let mut out = Vec::new();
        for &(performer, gesture, count) in spec {
            for _ in 0..count {
                out.push(SampleKey { performer, gesture });
            }
        }
        out
    }

    fn cv(folds: usize, seed: u64) -> CvSpec {
        CvSpec {
            outer_folds: folds,
            inner_folds: folds,
            seed,
            leakage_mode: LeakageMode::PaperFaithful,
        }
    }

    #[test]
    fn scenario_a_stratifies_by_performer() {
        let samples = keys(&[(1, 5, 4), (2, 5, 4)]);
        let folds = split_folds(&samples, &cv(4, 1), &ScenarioSpec::A { gesture_id: 5 }).unwrap();
        assert_eq!(folds.len(), 4);
        for fold in &folds {
            assert_eq!(fold.test.len(), 2);
            let performers: Vec<u32> = fold.test.iter().map(|&i| samples[i].performer).collect();
            assert!(performers.contains(&1) && performers.contains(&2));
            assert_eq!(fold.train.len(), 6);
        }
        // Every sample appears in exactly one test fold.
        let mut seen = vec![0usize; samples.len()];
        for fold in &folds {
            for &i in &fold.test {
                seen[i] += 1;
            }
        }
        assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn scenario_b_gives_each_fold_a_share_of_every_cell() {
        let samples = keys(&[(1, 1, 8), (1, 2, 8), (2, 1, 8), (2, 2, 8)]);
        let folds = split_folds(&samples, &cv(4, 7), &ScenarioSpec::B).unwrap();
        for fold in &folds {
            for performer in [1u32, 2] {
                for gesture in [1u32, 2] {
                    let count = fold
                        .test
                        .iter()
                        .filter(|&&i| {
                            samples[i].performer == performer && samples[i].gesture == gesture
                        })
                        .count();
                    assert_eq!(count, 2);
                }
            }
        }
    }

    #[test]
    fn scenario_c_never_tests_on_training_gestures() {
        let samples = keys(&[(1, 1, 8), (1, 2, 8), (2, 1, 8), (2, 2, 8)]);
        let scenario = ScenarioSpec::C {
            train_gestures: [1].into(),
            test_gestures: [2].into(),
        };
        let folds = split_folds(&samples, &cv(4, 3), &scenario).unwrap();
        for fold in &folds {
            assert!(fold.train.iter().all(|&i| samples[i].gesture == 1));
            assert!(fold.test.iter().all(|&i| samples[i].gesture == 2));
            assert_eq!(fold.test.len(), 16);
            assert_eq!(fold.train.len(), 12);
        }
    }

    #[test]
    fn same_seed_same_folds_different_seed_different_folds() {
        let samples = keys(&[(1, 1, 12), (2, 1, 12), (3, 1, 12)]);
        let scenario = ScenarioSpec::B;
        let a = split_folds(&samples, &cv(4, 5), &scenario).unwrap();
        let b = split_folds(&samples, &cv(4, 5), &scenario).unwrap();
        assert_eq!(a, b);
        let c = split_folds(&samples, &cv(4, 6), &scenario).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn small_cell_is_reported_by_name() {
        let samples = keys(&[(1, 1, 8), (2, 1, 3)]);
        let err = split_folds(&samples, &cv(4, 0), &ScenarioSpec::B).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("performer 2, gesture 1"), "{msg}");
        assert!(msg.contains("3 samples"), "{msg}");
    }

    #[test]
    fn train_and_test_are_disjoint_everywhere() {
        let samples = keys(&[(1, 1, 6), (1, 2, 6), (2, 1, 6), (2, 2, 6)]);
        for scenario in [
            ScenarioSpec::B,
            ScenarioSpec::C {
                train_gestures: [1].into(),
                test_gestures: [2].into(),
            },
        ] {
            for fold in split_folds(&samples, &cv(3, 11), &scenario).unwrap() {
                for idx in &fold.train {
                    assert!(!fold.test.contains(idx));
                }
            }
        }
    }
}
