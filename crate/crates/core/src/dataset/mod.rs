//! Recording/corpus data model, the on-disk corpus format, and a synthetic
//! corpus generator that mirrors the structure of the real glove database.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

mod format;
mod synthetic;

pub use format::{load_corpus, read_recording_csv, save_corpus};
pub use synthetic::{generate_synthetic, SyntheticSpec, GESTURE_NAMES};

/// Largest gesture id carried by the database (and thus by synthetic corpora).
pub const MAX_GESTURE_ID: u32 = 22;

/// Execution speed of one gesture performance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pace {
    Natural,
    Rapid,
    Slow,
}

impl Pace {
    pub const ALL: [Pace; 3] = [Pace::Natural, Pace::Rapid, Pace::Slow];

    pub fn as_str(self) -> &'static str {
        match self {
            Pace::Natural => "natural",
            Pace::Rapid => "rapid",
            Pace::Slow => "slow",
        }
    }
}

impl fmt::Display for Pace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Pace {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "natural" => Ok(Pace::Natural),
            "rapid" => Ok(Pace::Rapid),
            "slow" => Ok(Pace::Slow),
            other => Err(Error::invalid(format!(
                "unknown pace {other:?} (expected natural, rapid or slow)"
            ))),
        }
    }
}

/// Capture hardware description: how many sensor channels a recording has
/// and the nominal sampling rate used when a file carries no timestamps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceProfile {
    pub name: String,
    pub sensor_count: usize,
    pub nominal_rate_hz: f64,
}

impl DeviceProfile {
    pub fn new(name: impl Into<String>, sensor_count: usize, nominal_rate_hz: f64) -> Result<Self> {
        let name = name.into();
        if name.is_empty() || name.contains(',') || name.contains('\n') {
            return Err(Error::invalid(format!(
                "device name {name:?} must be non-empty and free of commas/newlines"
            )));
        }
        if sensor_count == 0 {
            return Err(Error::invalid("device sensor count must be at least 1".to_string()));
        }
        if !nominal_rate_hz.is_finite() || nominal_rate_hz <= 0.0 {
            return Err(Error::invalid(format!(
                "device nominal rate must be positive, got {nominal_rate_hz}"
            )));
        }
        Ok(DeviceProfile {
            name,
            sensor_count,
            nominal_rate_hz,
        })
    }

    /// Data glove with 5 finger-bend sensors plus 3 acceleration and
    /// 2 orientation channels, sampled at roughly 33 Hz.
    pub fn dg5vhand() -> Self {
        DeviceProfile {
            name: "dg5vhand".to_string(),
            sensor_count: 10,
            nominal_rate_hz: 33.0,
        }
    }

    /// Glove/rig combination with 15 finger-bend, 3 position and
    /// 4 orientation channels, sampled at roughly 90 Hz.
    pub fn cyberglove() -> Self {
        DeviceProfile {
            name: "cyberglove".to_string(),
            sensor_count: 22,
            nominal_rate_hz: 90.0,
        }
    }
}

/// One gesture performance: a sensors-by-time sample matrix plus metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    /// Raw device units, shape `sensor_count x len`.
    pub samples: Array2<f64>,
    /// Seconds, strictly increasing, one per column of `samples`.
    pub timestamps: Vec<f64>,
    pub performer_id: u32,
    pub gesture_id: u32,
    pub pace: Pace,
}

impl Recording {
    pub fn new(
        samples: Array2<f64>,
        timestamps: Vec<f64>,
        performer_id: u32,
        gesture_id: u32,
        pace: Pace,
    ) -> Result<Self> {
        if samples.ncols() < 2 {
            return Err(Error::invalid(format!(
                "a recording needs at least 2 samples, got {}",
                samples.ncols()
            )));
        }
        if timestamps.len() != samples.ncols() {
            return Err(Error::invalid(format!(
                "{} timestamps for {} sample columns",
                timestamps.len(),
                samples.ncols()
            )));
        }
        if timestamps.windows(2).any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater)) {
            return Err(Error::invalid("timestamps must be strictly increasing".to_string()));
        }
        if gesture_id == 0 || gesture_id > MAX_GESTURE_ID {
            return Err(Error::invalid(format!(
                "gesture id must be in 1..={MAX_GESTURE_ID}, got {gesture_id}"
            )));
        }
        Ok(Recording {
            samples,
            timestamps,
            performer_id,
            gesture_id,
            pace,
        })
    }

    pub fn sensor_count(&self) -> usize {
        self.samples.nrows()
    }

    /// Number of time steps.
    pub fn len(&self) -> usize {
        self.samples.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.ncols() == 0
    }
}

/// A set of recordings sharing one device profile.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub device: DeviceProfile,
    pub recordings: Vec<Recording>,
    /// Gesture id to human-readable name; carried as metadata only.
    pub gesture_catalog: BTreeMap<u32, String>,
}

impl Corpus {
    /// Builds a corpus, checking every recording against the device profile.
    /// Empty corpora are representable so that the on-disk format round-trips;
    /// pipeline entry points reject them via [`Corpus::validate_nonempty`].
    pub fn new(
        device: DeviceProfile,
        recordings: Vec<Recording>,
        gesture_catalog: BTreeMap<u32, String>,
    ) -> Result<Self> {
        for (i, rec) in recordings.iter().enumerate() {
            if rec.sensor_count() != device.sensor_count {
                return Err(Error::invalid(format!(
                    "recording {i}: sensor count mismatch: {} rows under profile {:?} (m={})",
                    rec.sensor_count(),
                    device.name,
                    device.sensor_count
                )));
            }
        }
        Ok(Corpus {
            device,
            recordings,
            gesture_catalog,
        })
    }

    /// Distinct performer ids, ascending.
    pub fn performers(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self.recordings.iter().map(|r| r.performer_id).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Distinct gesture ids, ascending.
    pub fn gestures(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self.recordings.iter().map(|r| r.gesture_id).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    pub fn validate_nonempty(&self) -> Result<()> {
        if self.recordings.is_empty() {
            return Err(Error::invalid("corpus has no recordings".to_string()));
        }
        Ok(())
    }
}
