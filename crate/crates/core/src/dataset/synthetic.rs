//! Deterministic synthetic corpora for desk-scale testing.
//!
//! Each recording is a latent per-gesture template (a smooth sum of
//! sinusoids per channel) plus a per-performer style offset, a small
//! per-(performer, gesture) interaction term and i.i.d. noise. Style and
//! interaction both scale with `style_separation`, so zero separation makes
//! performers indistinguishable. Durations vary pseudo-randomly and scale
//! with pace; resampling therefore always has real work to do.

use std::collections::BTreeMap;

use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::{Error, Result};

use super::{Corpus, DeviceProfile, Pace, Recording, MAX_GESTURE_ID};

/// Gesture names carried as catalog metadata by generated corpora.
pub const GESTURE_NAMES: [&str; 22] = [
    "a-ok",
    "walking",
    "cutting",
    "shove away",
    "point at self",
    "thumbs up",
    "crazy",
    "knocking",
    "cutthroat",
    "money",
    "thumbs down",
    "doubting",
    "continue",
    "speaking",
    "hello",
    "grasping",
    "scaling",
    "rotating",
    "come here",
    "telephone",
    "go away",
    "relocate",
];

/// Sampling rate stamped on generated corpora.
const SYNTHETIC_RATE_HZ: f64 = 30.0;

/// Parameters of the synthetic corpus generator. The same spec always
/// produces a bit-identical corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub performer_count: usize,
    pub gesture_count: usize,
    /// Repetitions per pace; the default mirrors the capture protocol of the
    /// real database (6 natural, 2 rapid, 2 slow).
    pub repetitions_per_pace: BTreeMap<Pace, usize>,
    pub sensor_count: usize,
    /// Root-mean-square distance between per-performer style offsets.
    pub style_separation: f64,
    /// Standard deviation of the additive sample noise.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            performer_count: 4,
            gesture_count: 22,
            repetitions_per_pace: default_repetitions(),
            sensor_count: 10,
            style_separation: 2.0,
            noise_sigma: 0.5,
            seed: 0,
        }
    }
}

pub fn default_repetitions() -> BTreeMap<Pace, usize> {
    [(Pace::Natural, 6), (Pace::Rapid, 2), (Pace::Slow, 2)]
        .into_iter()
        .collect()
}

impl SyntheticSpec {
    fn validate(&self) -> Result<()> {
        if self.performer_count == 0 {
            return Err(Error::invalid("performer_count must be at least 1".to_string()));
        }
        if self.gesture_count == 0 || self.gesture_count as u32 > MAX_GESTURE_ID {
            return Err(Error::invalid(format!(
                "gesture_count must be in 1..={MAX_GESTURE_ID}, got {}",
                self.gesture_count
            )));
        }
        if self.sensor_count == 0 {
            return Err(Error::invalid("sensor_count must be at least 1".to_string()));
        }
        if !self.style_separation.is_finite() || self.style_separation < 0.0 {
            return Err(Error::invalid(format!(
                "style_separation must be non-negative, got {}",
                self.style_separation
            )));
        }
        if !self.noise_sigma.is_finite() || self.noise_sigma < 0.0 {
            return Err(Error::invalid(format!(
                "noise_sigma must be non-negative, got {}",
                self.noise_sigma
            )));
        }
        let total: usize = self.repetitions_per_pace.values().sum();
        if total == 0 {
            return Err(Error::invalid("repetitions_per_pace must sum to at least 1".to_string()));
        }
        Ok(())
    }

    /// Recordings the generated corpus will contain.
    pub fn recording_count(&self) -> usize {
        let reps: usize = self.repetitions_per_pace.values().sum();
        self.performer_count * self.gesture_count * reps
    }
}

/// One sinusoidal component of a latent signal.
#[derive(Clone, Copy)]
struct Sinusoid {
    amplitude: f64,
    periods: f64,
    phase: f64,
}

impl Sinusoid {
    fn eval(&self, u: f64) -> f64 {
        self.amplitude * (std::f64::consts::TAU * self.periods * u + self.phase).sin()
    }
}

/// Duration range in samples for each pace; all within [50, 200].
fn duration_range(pace: Pace) -> std::ops::RangeInclusive<usize> {
    match pace {
        Pace::Rapid => 50..=84,
        Pace::Natural => 85..=135,
        Pace::Slow => 136..=200,
    }
}

/// Generates a corpus from the spec; a pure function of its argument.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Corpus> {
    spec.validate()?;
    let m = spec.sensor_count;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    // Per-gesture smooth templates: 2..=4 sinusoids per channel.
    let mut templates: Vec<Vec<Vec<Sinusoid>>> = Vec::with_capacity(spec.gesture_count);
    for _ in 0..spec.gesture_count {
        let mut per_channel = Vec::with_capacity(m);
        for _ in 0..m {
            let count = rng.random_range(2..=4usize);
            let mut comps = Vec::with_capacity(count);
            for _ in 0..count {
                comps.push(Sinusoid {
                    amplitude: rng.random_range(0.5..1.5),
                    periods: rng.random_range(0.5..3.0),
                    phase: rng.random_range(0.0..std::f64::consts::TAU),
                });
            }
            per_channel.push(comps);
        }
        templates.push(per_channel);
    }

    // Per-performer style offsets: gesture-independent, so they survive into
    // scenarios that test on unseen gestures.
    let style_sigma = spec.style_separation / (2.0 * m as f64).sqrt();
    let mut styles: Vec<Vec<f64>> = Vec::with_capacity(spec.performer_count);
    for _ in 0..spec.performer_count {
        let offsets = (0..m)
            .map(|_| style_sigma * rng.sample::<f64, _>(StandardNormal))
            .collect();
        styles.push(offsets);
    }

    // Per-(performer, gesture) interaction: how this performer bends this
    // particular gesture. Useful for recognition within known gestures only.
    let mut interactions: Vec<Vec<Vec<Sinusoid>>> = Vec::with_capacity(spec.performer_count);
    for _ in 0..spec.performer_count {
        let mut per_gesture = Vec::with_capacity(spec.gesture_count);
        for _ in 0..spec.gesture_count {
            let comps: Vec<Sinusoid> = (0..m)
                .map(|_| Sinusoid {
                    amplitude: style_sigma * rng.random_range(0.5..1.0),
                    periods: rng.random_range(1.0..3.0),
                    phase: rng.random_range(0.0..std::f64::consts::TAU),
                })
                .collect();
            per_gesture.push(comps);
        }
        interactions.push(per_gesture);
    }

    let mut recordings = Vec::with_capacity(spec.recording_count());
    for perf in 0..spec.performer_count {
        for gesture in 0..spec.gesture_count {
            for pace in Pace::ALL {
                let reps = spec.repetitions_per_pace.get(&pace).copied().unwrap_or(0);
                for _ in 0..reps {
                    let len = rng.random_range(duration_range(pace));
                    let mut samples = Array2::<f64>::zeros((m, len));
                    for j in 0..len {
                        let u = j as f64 / (len - 1) as f64;
                        for ch in 0..m {
                            let template: f64 =
                                templates[gesture][ch].iter().map(|s| s.eval(u)).sum();
                            let interaction = interactions[perf][gesture][ch].eval(u);
                            let noise: f64 = if spec.noise_sigma > 0.0 {
                                spec.noise_sigma * rng.sample::<f64, _>(StandardNormal)
                            } else {
                                0.0
                            };
                            samples[(ch, j)] = template + styles[perf][ch] + interaction + noise;
                        }
                    }
                    let timestamps = (0..len).map(|j| j as f64 / SYNTHETIC_RATE_HZ).collect();
                    recordings.push(Recording::new(
                        samples,
                        timestamps,
                        perf as u32 + 1,
                        gesture as u32 + 1,
                        pace,
                    )?);
                }
            }
        }
    }

    let catalog: BTreeMap<u32, String> = (1..=spec.gesture_count as u32)
        .map(|id| (id, GESTURE_NAMES[(id - 1) as usize].to_string()))
        .collect();
    let device = DeviceProfile::new("synthetic", m, SYNTHETIC_RATE_HZ)?;
    Corpus::new(device, recordings, catalog)
}
