//! Flat key-value run configuration: `key = value` lines, `#` comments.
//! The manifest written by `run` uses the same format, so a manifest can be
//! passed back through `--config` to reproduce a run.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use handid::eval::{CvSpec, LeakageMode};

use crate::CliError;

pub const KNOWN_KEYS: [&str; 15] = [
    "version",
    "corpus",
    "scenario",
    "classifiers",
    "mode",
    "seed",
    "outer_folds",
    "inner_folds",
    "pca",
    "resample",
    "lda_dims",
    "knn_k",
    "svm_c",
    "svm_gamma",
    "out",
];

/// The effective settings of one `run` invocation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub corpus: PathBuf,
    pub scenario: String,
    pub classifiers: String,
    pub mode: LeakageMode,
    pub seed: u64,
    pub outer_folds: usize,
    pub inner_folds: usize,
    pub pca: usize,
    pub resample: usize,
    pub lda_dims: Vec<usize>,
    pub knn_k: Vec<usize>,
    pub svm_c: Vec<f64>,
    pub svm_gamma: Vec<f64>,
    pub out: PathBuf,
}

impl RunConfig {
    pub fn cv(&self) -> CvSpec {
        CvSpec {
            outer_folds: self.outer_folds,
            inner_folds: self.inner_folds,
            seed: self.seed,
            leakage_mode: self.mode,
        }
    }

    /// Renders the manifest; parseable by [`parse_config_text`].
    pub fn to_manifest(&self) -> String {
        format!(
            "# run manifest; pass back via --config to reproduce this run\n\
             version = {}\n\
             corpus = {}\n\
             scenario = {}\n\
             classifiers = {}\n\
             mode = {}\n\
             seed = {}\n\
             outer_folds = {}\n\
             inner_folds = {}\n\
             pca = {}\n\
             resample = {}\n\
             lda_dims = {}\n\
             knn_k = {}\n\
             svm_c = {}\n\
             svm_gamma = {}\n\
             out = {}\n",
            env!("CARGO_PKG_VERSION"),
            self.corpus.display(),
            self.scenario,
            self.classifiers,
            self.mode,
            self.seed,
            self.outer_folds,
            self.inner_folds,
            self.pca,
            self.resample,
            join(&self.lda_dims),
            join(&self.knn_k),
            join(&self.svm_c),
            join(&self.svm_gamma),
            self.out.display(),
        )
    }
}

fn join<T: std::fmt::Display>(values: &[T]) -> String {
    values
        .iter()
        .map(T::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

/// Parses `key = value` lines; rejects unknown keys and malformed lines.
pub fn parse_config_text(text: &str, path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Usage(format!(
                "{}:{}: expected \"key = value\", got {raw:?}",
                path.display(),
                i + 1
            )));
        };
        let key = key.trim();
        let value = value.trim();
        if !KNOWN_KEYS.contains(&key) {
            return Err(CliError::Usage(format!(
                "{}:{}: unknown config key {key:?}",
                path.display(),
                i + 1
            )));
        }
        map.insert(key.to_string(), value.to_string());
    }
    Ok(map)
}
