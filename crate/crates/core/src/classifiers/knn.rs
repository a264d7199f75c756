//! k-nearest-neighbour classification by exhaustive scan with majority vote.

use std::collections::BTreeMap;

use ndarray::{Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// The stored reference set plus the neighbour count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    /// Reference vectors, one per row.
    pub references: Array2<f64>,
    pub labels: Vec<u32>,
    pub k: usize,
}

impl KnnModel {
    pub fn input_dim(&self) -> usize {
        self.references.ncols()
    }
}

/// Stores the reference set verbatim.
pub fn knn_fit(data: ArrayView2<'_, f64>, labels: &[u32], k: usize) -> Result<KnnModel> {
    if labels.len() != data.nrows() {
        return Err(Error::invalid(format!(
            "{} samples but {} labels",
            data.nrows(),
            labels.len()
        )));
    }
    if k == 0 || k > data.nrows() {
        return Err(Error::invalid(format!(
            "neighbour count {k} outside 1..={}",
            data.nrows()
        )));
    }
    Ok(KnnModel {
        references: data.to_owned(),
        labels: labels.to_vec(),
        k,
    })
}

/// Majority vote among the k nearest references under Euclidean distance.
/// Equal distances are broken by reference index order; vote ties go to the
/// smallest class label.
pub fn knn_predict(model: &KnnModel, x: ArrayView1<'_, f64>) -> Result<u32> {
    if x.len() != model.input_dim() {
        return Err(Error::invalid(format!(
            "vector has dimension {}, model expects {}",
            x.len(),
            model.input_dim()
        )));
    }
    let mut order: Vec<(f64, usize)> = model
        .references
        .rows()
        .into_iter()
        .enumerate()
        .map(|(i, row)| {
            let dist: f64 = row.iter().zip(x.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
            (dist, i)
        })
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut votes: BTreeMap<u32, usize> = BTreeMap::new();
    for &(_, idx) in order.iter().take(model.k) {
        *votes.entry(model.labels[idx]).or_insert(0) += 1;
    }
    let mut winner = (0usize, 0u32);
    for (&label, &count) in &votes {
        if count > winner.0 {
            winner = (count, label);
        }
    }
    Ok(winner.1)
}
