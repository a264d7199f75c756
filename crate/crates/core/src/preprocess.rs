//! Turns raw recordings into fixed-length, corpus-normalized feature vectors:
//! linear resampling to a common length, per-sensor t-statistic normalization
//! over the whole corpus, and row-into-vector flattening.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::dataset::{Corpus, Pace, Recording};
use crate::{Error, Result};

/// Per-sensor normalization statistics fitted over a set of resampled
/// recordings, plus the common resampled length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationState {
    /// Per-sensor mean over all recordings and time steps.
    pub mean: Vec<f64>,
    /// Per-sensor population standard deviation; constant sensors get 1.0.
    pub std: Vec<f64>,
    /// Number of time steps every recording was resampled to.
    pub target_len: usize,
    /// Sensors whose pooled variance was exactly zero.
    pub constant_sensors: Vec<usize>,
}

/// Order in which the normalized matrix is flattened into a vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VectorLayout {
    /// All sensors at time 1, then all sensors at time 2, ... Entry `(i, j)`
    /// lands at position `j*m + i`. This is the default layout.
    TimeMajor,
    /// Whole time series of sensor 1, then sensor 2, ... Entry `(i, j)`
    /// lands at position `i*t + j`.
    SensorMajor,
}

/// Labels carried along with a feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub performer_id: u32,
    pub gesture_id: u32,
    pub pace: Pace,
}

impl From<&Recording> for SampleMeta {
    fn from(rec: &Recording) -> Self {
        SampleMeta {
            performer_id: rec.performer_id,
            gesture_id: rec.gesture_id,
            pace: rec.pace,
        }
    }
}

/// A flattened, normalized (and later optionally PCA-reduced) representation
/// of one recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub performer_id: u32,
    pub gesture_id: u32,
    pub pace: Pace,
}

/// Resamples a recording to `target_len` columns with piecewise-linear
/// interpolation on a uniform grid from the first to the last timestamp
/// inclusive. The first and last columns are copied exactly.
pub fn resample(recording: &Recording, target_len: usize) -> Result<Array2<f64>> {
    if target_len < 2 {
        return Err(Error::invalid(format!(
            "resample target length must be at least 2, got {target_len}"
        )));
    }
    let m = recording.sensor_count();
    let source_len = recording.len();
    let times = &recording.timestamps;
    let t0 = times[0];
    let t1 = times[source_len - 1];
    let step = (t1 - t0) / (target_len - 1) as f64;

    let mut out = Array2::<f64>::zeros((m, target_len));
    out.column_mut(0).assign(&recording.samples.column(0));
    out.column_mut(target_len - 1)
        .assign(&recording.samples.column(source_len - 1));

    let mut segment = 0usize;
    for j in 1..target_len - 1 {
        let u = t0 + step * j as f64;
        while segment + 2 < source_len && times[segment + 1] < u {
            segment += 1;
        }
        let span = times[segment + 1] - times[segment];
        let w = (u - times[segment]) / span;
        for i in 0..m {
            let a = recording.samples[(i, segment)];
            let b = recording.samples[(i, segment + 1)];
            out[(i, j)] = a + (b - a) * w;
        }
    }
    Ok(out)
}

/// Pools every entry of sensor row `i` across all matrices and time steps and
/// records the mean and population standard deviation. A sensor with zero
/// variance gets a standard deviation of 1.0 (its normalized values become
/// all zeros) and is reported in `constant_sensors`.
pub fn fit_normalization(resampled: &[Array2<f64>]) -> Result<NormalizationState> {
    let first = resampled
        .first()
        .ok_or_else(|| Error::invalid("fit_normalization needs at least one matrix".to_string()))?;
    let m = first.nrows();
    let target_len = first.ncols();
    for (idx, mat) in resampled.iter().enumerate() {
        if mat.nrows() != m || mat.ncols() != target_len {
            return Err(Error::invalid(format!(
                "matrix {idx} has shape {}x{}, expected {m}x{target_len}",
                mat.nrows(),
                mat.ncols()
            )));
        }
    }

    let count = (resampled.len() * target_len) as f64;
    let mut mean = vec![0.0f64; m];
    for mat in resampled {
        for i in 0..m {
            for j in 0..target_len {
                mean[i] += mat[(i, j)];
            }
        }
    }
    for v in mean.iter_mut() {
        *v /= count;
    }

    let mut variance = vec![0.0f64; m];
    for mat in resampled {
        for i in 0..m {
            for j in 0..target_len {
                let d = mat[(i, j)] - mean[i];
                variance[i] += d * d;
            }
        }
    }

    let mut std = Vec::with_capacity(m);
    let mut constant_sensors = Vec::new();
    for (i, v) in variance.iter().enumerate() {
        let sigma = (v / count).sqrt();
        if sigma == 0.0 {
            log::warn!("sensor {i} is constant across the corpus; substituting sigma = 1");
            constant_sensors.push(i);
            std.push(1.0);
        } else {
            std.push(sigma);
        }
    }

    Ok(NormalizationState {
        mean,
        std,
        target_len,
        constant_sensors,
    })
}

/// Standardizes each entry with the fitted per-sensor statistics and flattens
/// the matrix into a vector in the requested layout.
pub fn normalize_and_vectorize(
    resampled: &Array2<f64>,
    state: &NormalizationState,
    layout: VectorLayout,
    meta: SampleMeta,
) -> Result<FeatureVector> {
    let m = state.mean.len();
    let t = state.target_len;
    if resampled.nrows() != m || resampled.ncols() != t {
        return Err(Error::invalid(format!(
            "matrix shape {}x{} does not match normalization state {m}x{t}",
            resampled.nrows(),
            resampled.ncols()
        )));
    }
    let mut values = vec![0.0f64; m * t];
    for i in 0..m {
        for j in 0..t {
            let z = (resampled[(i, j)] - state.mean[i]) / state.std[i];
            let pos = match layout {
                VectorLayout::TimeMajor => j * m + i,
                VectorLayout::SensorMajor => i * t + j,
            };
            values[pos] = z;
        }
    }
    Ok(FeatureVector {
        values,
        performer_id: meta.performer_id,
        gesture_id: meta.gesture_id,
        pace: meta.pace,
    })
}

/// Resamples every recording, fits normalization over all of them and emits
/// one feature vector per recording in corpus order (time-major layout).
pub fn preprocess_corpus(
    corpus: &Corpus,
    target_len: usize,
) -> Result<(Vec<FeatureVector>, NormalizationState)> {
    preprocess_corpus_with(corpus, target_len, VectorLayout::TimeMajor)
}

/// Stacks feature vectors into a row-major matrix for the classifiers.
pub fn feature_matrix(vectors: &[FeatureVector]) -> Result<Array2<f64>> {
    let first = vectors
        .first()
        .ok_or_else(|| Error::invalid("feature_matrix needs at least one vector".to_string()))?;
    let p = first.values.len();
    let mut matrix = Array2::<f64>::zeros((vectors.len(), p));
    for (r, v) in vectors.iter().enumerate() {
        if v.values.len() != p {
            return Err(Error::invalid(format!(
                "vector {r} has length {}, expected {p}",
                v.values.len()
            )));
        }
        matrix
            .row_mut(r)
            .assign(&ndarray::ArrayView1::from(v.values.as_slice()));
    }
    Ok(matrix)
}

/// [`preprocess_corpus`] with an explicit vectorization layout.
pub fn preprocess_corpus_with(
    corpus: &Corpus,
    target_len: usize,
    layout: VectorLayout,
) -> Result<(Vec<FeatureVector>, NormalizationState)> {
    corpus.validate_nonempty()?;
    let resampled: Vec<Array2<f64>> = corpus
        .recordings
        .iter()
        .map(|rec| resample(rec, target_len))
        .collect::<Result<_>>()?;
    let state = fit_normalization(&resampled)?;
    let vectors = corpus
        .recordings
        .iter()
        .zip(&resampled)
        .map(|(rec, mat)| normalize_and_vectorize(mat, &state, layout, SampleMeta::from(rec)))
        .collect::<Result<_>>()?;
    Ok((vectors, state))
}
