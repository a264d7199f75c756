//! Principal component analysis on top of the symmetric eigensolver.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::decomp::eig_symmetric;
use crate::{Error, Result};

/// Eigenvalues this far below the largest one count as numerically zero.
const RANK_EPS: f64 = 1e-12;

/// Fitted PCA reduction: empirical mean, component rows, and the matching
/// covariance eigenvalues in descending order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Array1<f64>,
    /// Shape `n_components x p`; rows are pairwise orthonormal.
    pub components: Array2<f64>,
    pub eigenvalues: Vec<f64>,
}

impl PcaModel {
    pub fn input_dim(&self) -> usize {
        self.components.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.components.nrows()
    }
}

/// Fits a PCA model on row-major data (`n x p`, one sample per row).
///
/// The empirical mean is subtracted internally. When there are fewer samples
/// than dimensions, the decomposition runs on the samples-by-samples Gram
/// matrix and maps eigenvectors back, which is algebraically identical to
/// the direct covariance route.
pub fn pca_fit(data: ArrayView2<'_, f64>, n_components: usize) -> Result<PcaModel> {
    let n = data.nrows();
    let p = data.ncols();
    if n < 2 {
        return Err(Error::invalid(format!("pca_fit needs at least 2 samples, got {n}")));
    }
    if n_components == 0 || n_components > p.min(n) {
        return Err(Error::invalid(format!(
            "requested {n_components} components outside 1..={} (min of dim {p} and count {n})",
            p.min(n)
        )));
    }

    let mean = data.mean_axis(Axis(0)).expect("n >= 2");
    let centered = &data - &mean.view().insert_axis(Axis(0));

    let (eigenvalues, components) = if p <= n {
        let cov = centered.t().dot(&centered);
        let eig = eig_symmetric(&cov)?;
        let mut comps = Array2::<f64>::zeros((n_components, p));
        for r in 0..n_components {
            comps.row_mut(r).assign(&eig.vectors.column(r));
        }
        (eig.eigenvalues[..n_components].to_vec(), comps)
    } else {
        let gram = centered.dot(&centered.t());
        let eig = eig_symmetric(&gram)?;
        let lambda_max = eig.eigenvalues.first().copied().unwrap_or(0.0).max(0.0);
        let cutoff = lambda_max * RANK_EPS;
        let mut comps = Array2::<f64>::zeros((n_components, p));
        for r in 0..n_components {
            let lambda = eig.eigenvalues[r];
            if lambda.partial_cmp(&cutoff) != Some(std::cmp::Ordering::Greater) || lambda <= 0.0 {
                return Err(Error::invalid(format!(
                    "requested {n_components} components but the data has effective rank {r}"
                )));
            }
            let v = centered.t().dot(&eig.vectors.column(r)) / lambda.sqrt();
            comps.row_mut(r).assign(&v);
        }
        (eig.eigenvalues[..n_components].to_vec(), comps)
    };

    let mut model = PcaModel {
        mean,
        components,
        eigenvalues: eigenvalues.into_iter().map(|l| l.max(0.0)).collect(),
    };
    fix_component_signs(&mut model.components);
    Ok(model)
}

/// Makes the largest-magnitude entry of each component row positive so both
/// fitting routes produce identical models.
fn fix_component_signs(components: &mut Array2<f64>) {
    for mut row in components.rows_mut() {
        let mut best = 0usize;
        for (i, x) in row.iter().enumerate() {
            if x.abs() > row[best].abs() {
                best = i;
            }
        }
        if row[best] < 0.0 {
            row.mapv_inplace(|x| -x);
        }
    }
}

/// Projects one vector: `y_i = o_i . (x - mean)`.
pub fn pca_transform(model: &PcaModel, x: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
    if x.len() != model.input_dim() {
        return Err(Error::invalid(format!(
            "vector has dimension {}, model expects {}",
            x.len(),
            model.input_dim()
        )));
    }
    let centered = &x - &model.mean;
    Ok(model.components.dot(&centered))
}

/// Projects every row of `data`.
pub fn pca_transform_batch(model: &PcaModel, data: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    if data.ncols() != model.input_dim() {
        return Err(Error::invalid(format!(
            "data has dimension {}, model expects {}",
            data.ncols(),
            model.input_dim()
        )));
    }
    let centered = &data - &model.mean.view().insert_axis(Axis(0));
    Ok(centered.dot(&model.components.t()))
}
