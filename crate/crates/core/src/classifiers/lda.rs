//! Linear discriminant analysis with a nearest-class-mean decision rule.
//!
//! Canonical vectors are the eigenvectors of `W^-1 B` (or `W† B` when the
//! within-class scatter is singular), computed through the symmetric
//! reformulation: with `W = U S U'`, eigendecompose
//! `S^-1/2 U' B U S^-1/2` and map the eigenvectors back through
//! `U S^-1/2`. Singular directions of `W` are dropped, which is exactly the
//! pseudoinverse fallback.

use std::collections::BTreeMap;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::decomp::eig_symmetric;
use crate::{Error, Result};

/// Relative cutoff deciding which scatter eigenvalues count as zero.
const RANK_EPS: f64 = 1e-9;

/// Fitted LDA state: the projection onto canonical vectors plus per-class
/// means kept in the input space and projected on demand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaModel {
    /// Canonical vectors as rows, shape `d x p`, by descending eigenvalue.
    pub projection: Array2<f64>,
    /// Class means in the input space.
    pub class_means: BTreeMap<u32, Vec<f64>>,
    /// Projection dimension `d`.
    pub dim: usize,
    /// All canonical eigenvalues (before truncation to `d`), descending.
    pub eigenvalues: Vec<f64>,
}

impl LdaModel {
    pub fn input_dim(&self) -> usize {
        self.projection.ncols()
    }
}

/// Default projection dimension for a `k`-class problem.
pub fn default_dim(class_count: usize) -> usize {
    class_count.saturating_sub(1).clamp(1, 5)
}

/// Fits the projection and class means from labeled row-major data.
pub fn lda_fit(data: ArrayView2<'_, f64>, labels: &[u32], d: usize) -> Result<LdaModel> {
    let n = data.nrows();
    let p = data.ncols();
    if labels.len() != n {
        return Err(Error::invalid(format!("{n} samples but {} labels", labels.len())));
    }

    let mut class_counts: BTreeMap<u32, usize> = BTreeMap::new();
    for &y in labels {
        *class_counts.entry(y).or_insert(0) += 1;
    }
    let k = class_counts.len();
    if k < 2 {
        return Err(Error::invalid(format!("lda_fit needs at least 2 classes, got {k}")));
    }
    if let Some((&label, &count)) = class_counts.iter().find(|(_, &c)| c < 2) {
        return Err(Error::invalid(format!(
            "class {label} has {count} sample(s); every class needs at least 2"
        )));
    }
    if d == 0 || d > k - 1 {
        return Err(Error::invalid(format!(
            "projection dimension {d} outside 1..={} for {k} classes",
            k - 1
        )));
    }
    if d > p {
        return Err(Error::invalid(format!(
            "projection dimension {d} exceeds the input dimension {p}"
        )));
    }

    // Class means and the mean of class means.
    let mut class_means: BTreeMap<u32, Array1<f64>> = BTreeMap::new();
    for (&label, &count) in &class_counts {
        let mut mean = Array1::<f64>::zeros(p);
        for (row, &y) in data.rows().into_iter().zip(labels) {
            if y == label {
                mean += &row;
            }
        }
        mean /= count as f64;
        class_means.insert(label, mean);
    }
    let mut grand_mean = Array1::<f64>::zeros(p);
    for mean in class_means.values() {
        grand_mean += mean;
    }
    grand_mean /= k as f64;

    // Between-class scatter with the 1/(k-1) prefactor.
    let mut between = Array2::<f64>::zeros((p, p));
    for (&label, mean) in &class_means {
        let count = class_counts[&label] as f64;
        let delta = mean - &grand_mean;
        rank_one_update(&mut between, &delta, count);
    }
    between /= (k - 1) as f64;

    // Within-class scatter with the 1/(n-k) prefactor.
    let mut within = Array2::<f64>::zeros((p, p));
    for (row, &y) in data.rows().into_iter().zip(labels) {
        let delta = &row - &class_means[&y];
        rank_one_update(&mut within, &delta, 1.0);
    }
    within /= (n - k) as f64;

    // Symmetric reformulation around the eigenbasis of W.
    let w_eig = eig_symmetric(&within)?;
    let w_max = w_eig.eigenvalues.first().copied().unwrap_or(0.0).max(0.0);
    let w_cutoff = w_max * RANK_EPS;
    let inv_sqrt: Vec<f64> = w_eig
        .eigenvalues
        .iter()
        .map(|&s| if s > w_cutoff && s > 0.0 { 1.0 / s.sqrt() } else { 0.0 })
        .collect();

    let b_in_w_basis = w_eig.vectors.t().dot(&between).dot(&w_eig.vectors);
    let mut reduced = b_in_w_basis;
    for i in 0..p {
        for j in 0..p {
            reduced[(i, j)] *= inv_sqrt[i] * inv_sqrt[j];
        }
    }
    let m_eig = eig_symmetric(&reduced)?;

    let lambda_max = m_eig.eigenvalues.first().copied().unwrap_or(0.0).max(0.0);
    let cutoff = lambda_max * RANK_EPS;
    let rank = m_eig
        .eigenvalues
        .iter()
        .take(k - 1)
        .filter(|&&l| l > cutoff && l > 0.0)
        .count();
    if d > rank {
        return Err(Error::invalid(format!(
            "projection dimension {d} exceeds the achievable maximum {rank} \
             (rank of the between-class scatter in the span of the within-class scatter)"
        )));
    }

    let mut projection = Array2::<f64>::zeros((d, p));
    for r in 0..d {
        let mut back = Array1::<f64>::zeros(p);
        for (col, &f) in inv_sqrt.iter().enumerate() {
            if f != 0.0 {
                let weight = f * m_eig.vectors[(col, r)];
                back.scaled_add(weight, &w_eig.vectors.column(col));
            }
        }
        projection.row_mut(r).assign(&back);
    }

    Ok(LdaModel {
        projection,
        class_means: class_means
            .into_iter()
            .map(|(label, mean)| (label, mean.to_vec()))
            .collect(),
        dim: d,
        eigenvalues: m_eig.eigenvalues[..k - 1].to_vec(),
    })
}

/// `target += weight * delta * delta'`, upper triangle mirrored.
fn rank_one_update(target: &mut Array2<f64>, delta: &Array1<f64>, weight: f64) {
    let p = delta.len();
    for i in 0..p {
        let di = weight * delta[i];
        for j in i..p {
            let v = di * delta[j];
            target[(i, j)] += v;
            if i != j {
                target[(j, i)] += v;
            }
        }
    }
}

/// Nearest class mean in the projected space; distance ties go to the
/// smallest class label.
pub fn lda_predict(model: &LdaModel, x: ArrayView1<'_, f64>) -> Result<u32> {
    if x.len() != model.input_dim() {
        return Err(Error::invalid(format!(
            "vector has dimension {}, model expects {}",
            x.len(),
            model.input_dim()
        )));
    }
    let projected = model.projection.dot(&x);
    let mut best: Option<(f64, u32)> = None;
    for (&label, mean) in &model.class_means {
        let mean_view = ArrayView1::from(mean.as_slice());
        let projected_mean = model.projection.dot(&mean_view);
        let dist: f64 = projected
            .iter()
            .zip(projected_mean.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        if best.map_or(true, |(d, _)| dist < d) {
            best = Some((dist, label));
        }
    }
    Ok(best.expect("at least two classes").1)
}

/// Applies the canonical projection to every row.
pub fn lda_project(model: &LdaModel, data: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    if data.ncols() != model.input_dim() {
        return Err(Error::invalid(format!(
            "data has dimension {}, model expects {}",
            data.ncols(),
            model.input_dim()
        )));
    }
    Ok(data.dot(&model.projection.t()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    /// Gaussian elimination with partial pivoting; the independent route for
    /// the closed-form two-class direction `W^-1 (mean_1 - mean_2)`.
    fn solve_linear(a: &Array2<f64>, b: &Array1<f64>) -> Array1<f64> {
        let n = b.len();
        let mut m = a.clone();
        let mut rhs = b.clone();
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| m[(i, col)].abs().total_cmp(&m[(j, col)].abs()))
                .unwrap();
            if pivot != col {
                for j in 0..n {
                    let tmp = m[(col, j)];
                    m[(col, j)] = m[(pivot, j)];
                    m[(pivot, j)] = tmp;
                }
                rhs.swap(col, pivot);
            }
            let diag = m[(col, col)];
            for row in col + 1..n {
                let factor = m[(row, col)] / diag;
                for j in col..n {
                    m[(row, j)] -= factor * m[(col, j)];
                }
                rhs[row] -= factor * rhs[col];
            }
        }
        let mut x = Array1::<f64>::zeros(n);
        for row in (0..n).rev() {
            let mut acc = rhs[row];
            for j in row + 1..n {
                acc -= m[(row, j)] * x[j];
            }
            x[row] = acc / m[(row, row)];
        }
        x
    }

    fn two_blobs(
        rng: &mut ChaCha8Rng,
        dim: usize,
        n_per_class: usize,
        axis: usize,
        separation: f64,
    ) -> (Array2<f64>, Vec<u32>) {
        let n = 2 * n_per_class;
        let mut data = Array2::<f64>::zeros((n, dim));
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let class = if i < n_per_class { 0u32 } else { 1 };
            for j in 0..dim {
                let center = if j == axis {
                    (class as f64 * 2.0 - 1.0) * separation / 2.0
                } else {
                    0.0
                };
                data[(i, j)] = center + rng.sample::<f64, _>(StandardNormal);
            }
            labels.push(class + 1);
        }
        (data, labels)
    }

    #[test]
    fn axis_aligned_blobs_give_axis_aligned_canonical_vector() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (data, labels) = two_blobs(&mut rng, 2, 200, 0, 8.0);
        let model = lda_fit(data.view(), &labels, 1).unwrap();
        let v = model.projection.row(0);
        let norm = (v[0] * v[0] + v[1] * v[1]).sqrt();
        let cos = v[0].abs() / norm;
        // Within 5 degrees of the separating axis.
        assert!(cos >= (5.0f64).to_radians().cos(), "cos {cos}");
    }

    #[test]
    fn two_class_direction_matches_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..5 {
            let dim = 6;
            let (data, labels) = two_blobs(&mut rng, dim, 60, 1, 4.0);
            let model = lda_fit(data.view(), &labels, 1).unwrap();

            // Oracle: recompute W and the class-mean difference naively.
            let n = data.nrows();
            let mean_of = |class: u32| {
                let rows: Vec<usize> = labels
                    .iter()
                    .enumerate()
                    .filter(|(_, &y)| y == class)
                    .map(|(i, _)| i)
                    .collect();
                let mut mean = Array1::<f64>::zeros(dim);
                for &i in &rows {
                    mean += &data.row(i);
                }
                mean / rows.len() as f64
            };
            let m1 = mean_of(1);
            let m2 = mean_of(2);
            let mut w = Array2::<f64>::zeros((dim, dim));
            for (row, &y) in data.rows().into_iter().zip(&labels) {
                let delta = &row - if y == 1 { &m1 } else { &m2 };
                for i in 0..dim {
                    for j in 0..dim {
                        w[(i, j)] += delta[i] * delta[j];
                    }
                }
            }
            w /= (n - 2) as f64;
            let direction = solve_linear(&w, &(&m1 - &m2));

            let fitted = model.projection.row(0);
            let dot: f64 = fitted.iter().zip(direction.iter()).map(|(a, b)| a * b).sum();
            let nf: f64 = fitted.iter().map(|v| v * v).sum::<f64>().sqrt();
            let nd: f64 = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
            let cos = (dot / (nf * nd)).abs();
            assert!(1.0 - cos <= 1e-6, "cosine deviation {}", 1.0 - cos);
        }
    }

    #[test]
    fn identical_class_means_cannot_be_fit() {
        // Classes 1 and 2 both have mean (0, 0) exactly: B = 0.
        let data = array![[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]];
        let labels = vec![1, 1, 2, 2];
        let err = lda_fit(data.view(), &labels, 1).unwrap_err();
        assert!(err.to_string().contains("achievable maximum 0"), "{err}");
    }

    #[test]
    fn singular_within_scatter_takes_pseudoinverse_path() {
        // Fewer samples (8) than dimensions (20) forces singular W.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let dim = 20;
        let mut data = Array2::<f64>::zeros((8, dim));
        let mut labels = Vec::new();
        for i in 0..8 {
            let class = (i / 4) as u32 + 1;
            for j in 0..dim {
                let center = if j == 0 { class as f64 * 6.0 } else { 0.0 };
                data[(i, j)] = center + rng.sample::<f64, _>(StandardNormal);
            }
            labels.push(class);
        }
        let model = lda_fit(data.view(), &labels, 1).unwrap();
        let correct = data
            .rows()
            .into_iter()
            .zip(&labels)
            .filter(|(row, &y)| lda_predict(&model, *row).unwrap() == y)
            .count();
        // Training accuracy at least chance.
        assert!(correct * 2 >= labels.len());
    }

    #[test]
    fn predict_returns_exact_class_for_class_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (data, labels) = two_blobs(&mut rng, 3, 50, 0, 6.0);
        let model = lda_fit(data.view(), &labels, 1).unwrap();
        for (&label, mean) in &model.class_means {
            let x = Array1::from_vec(mean.clone());
            assert_eq!(lda_predict(&model, x.view()).unwrap(), label);
        }
    }

    #[test]
    fn midpoint_tie_breaks_to_lower_label() {
        // Exactly symmetric classes around the origin.
        let data = array![
            [-2.0, 0.0],
            [-1.0, 1.0],
            [-1.0, -1.0],
            [2.0, 0.0],
            [1.0, 1.0],
            [1.0, -1.0]
        ];
        let labels = vec![4, 4, 4, 9, 9, 9];
        let model = lda_fit(data.view(), &labels, 1).unwrap();
        let midpoint = array![0.0, 0.0];
        assert_eq!(lda_predict(&model, midpoint.view()).unwrap(), 4);
    }

    #[test]
    fn predict_agrees_with_brute_force_distance_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let dim = 5;
        let classes = 4u32;
        let n_per = 40;
        let mut data = Array2::<f64>::zeros(((classes as usize) * n_per, dim));
        let mut labels = Vec::new();
        for c in 0..classes {
            for i in 0..n_per {
                let row = c as usize * n_per + i;
                for j in 0..dim {
                    let center = if j == c as usize { 5.0 } else { 0.0 };
                    data[(row, j)] = center + rng.sample::<f64, _>(StandardNormal);
                }
            }
            labels.extend(std::iter::repeat(c + 1).take(n_per));
        }
        let model = lda_fit(data.view(), &labels, 3).unwrap();

        for _ in 0..100 {
            let x = Array1::from_shape_fn(dim, |_| rng.random_range(-6.0..6.0));
            // Oracle: project everything, compare all distances.
            let px = model.projection.dot(&x);
            let mut best = (f64::INFINITY, 0u32);
            for (&label, mean) in &model.class_means {
                let pm = model.projection.dot(&ArrayView1::from(mean.as_slice()));
                let dist: f64 = px.iter().zip(pm.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
                if dist < best.0 {
                    best = (dist, label);
                }
            }
            assert_eq!(lda_predict(&model, x.view()).unwrap(), best.1);
        }
    }

    #[test]
    fn projection_separates_classes_with_fisher_ratio_above_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let (data, labels) = two_blobs(&mut rng, 4, 80, 2, 6.0);
        let model = lda_fit(data.view(), &labels, 1).unwrap();
        let projected = lda_project(&model, data.view()).unwrap();

        let scores: Vec<f64> = projected.column(0).to_vec();
        let mean_of = |class: u32| {
            let vals: Vec<f64> = scores
                .iter()
                .zip(&labels)
                .filter(|(_, &y)| y == class)
                .map(|(&s, _)| s)
                .collect();
            (vals.iter().sum::<f64>() / vals.len() as f64, vals)
        };
        let (m1, v1) = mean_of(1);
        let (m2, v2) = mean_of(2);
        let within: f64 = v1.iter().map(|s| (s - m1).powi(2)).sum::<f64>()
            + v2.iter().map(|s| (s - m2).powi(2)).sum::<f64>();
        let within = within / (scores.len() - 2) as f64;
        let between = (m1 - m2) * (m1 - m2) / 2.0;
        assert!(between / within > 1.0, "fisher ratio {}", between / within);

        // Projected class means stay pairwise distinct.
        let means: Vec<Array1<f64>> = model
            .class_means
            .values()
            .map(|m| model.projection.dot(&ArrayView1::from(m.as_slice())))
            .collect();
        assert!((means[0][0] - means[1][0]).abs() > 1e-6);
    }

    #[test]
    fn generalized_eigenrelation_holds_for_nonsingular_within() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let dim = 4;
        let n_per = 50;
        let mut data = Array2::<f64>::zeros((3 * n_per, dim));
        let mut labels = Vec::new();
        for c in 0..3u32 {
            for i in 0..n_per {
                let row = c as usize * n_per + i;
                for j in 0..dim {
                    let center = if j == c as usize { 4.0 } else { 0.0 };
                    data[(row, j)] = center + rng.sample::<f64, _>(StandardNormal);
                }
            }
            labels.extend(std::iter::repeat(c + 1).take(n_per));
        }
        let d = 2;
        let model = lda_fit(data.view(), &labels, d).unwrap();

        // Rebuild the scatter matrices directly.
        let k = 3;
        let n = data.nrows();
        let mut means = Vec::new();
        for c in 1..=3u32 {
            let rows: Vec<usize> = labels
                .iter()
                .enumerate()
                .filter(|(_, &y)| y == c)
                .map(|(i, _)| i)
                .collect();
            let mut mean = Array1::<f64>::zeros(dim);
            for &i in &rows {
                mean += &data.row(i);
            }
            means.push(mean / rows.len() as f64);
        }
        let grand = means.iter().fold(Array1::<f64>::zeros(dim), |acc, m| acc + m) / k as f64;
        let mut between = Array2::<f64>::zeros((dim, dim));
        for m in &means {
            let delta = m - &grand;
            for i in 0..dim {
                for j in 0..dim {
                    between[(i, j)] += n_per as f64 * delta[i] * delta[j];
                }
            }
        }
        between /= (k - 1) as f64;
        let mut within = Array2::<f64>::zeros((dim, dim));
        for (row, &y) in data.rows().into_iter().zip(&labels) {
            let delta = &row - &means[(y - 1) as usize];
            for i in 0..dim {
                for j in 0..dim {
                    within[(i, j)] += delta[i] * delta[j];
                }
            }
        }
        within /= (n - k) as f64;

        let norm_b = between.iter().map(|x| x * x).sum::<f64>().sqrt();
        let norm_w = within.iter().map(|x| x * x).sum::<f64>().sqrt();
        for r in 0..d {
            let v = model.projection.row(r).to_owned();
            let lambda = model.eigenvalues[r];
            let residual = &between.dot(&v) - &(within.dot(&v) * lambda);
            let res_norm = residual.iter().map(|x| x * x).sum::<f64>().sqrt();
            let v_norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!(
                res_norm <= 1e-6 * (norm_b + norm_w) * v_norm,
                "row {r}: residual {res_norm}"
            );
        }
    }

    #[test]
    fn relabeling_permutes_predictions() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (data, labels) = two_blobs(&mut rng, 3, 60, 0, 6.0);
        let swapped: Vec<u32> = labels.iter().map(|&y| if y == 1 { 2 } else { 1 }).collect();
        let model_a = lda_fit(data.view(), &labels, 1).unwrap();
        let model_b = lda_fit(data.view(), &swapped, 1).unwrap();
        for _ in 0..50 {
            let x = Array1::from_shape_fn(3, |_| rng.random_range(-5.0..5.0));
            let a = lda_predict(&model_a, x.view()).unwrap();
            let b = lda_predict(&model_b, x.view()).unwrap();
            assert_eq!(a, if b == 1 { 2 } else { 1 });
        }
    }

    #[test]
    fn collinear_class_means_leave_trailing_eigenvalues_near_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        // Three classes with means exactly at -5, 0, +5 along axis 0, so
        // rank(B) = 1. Sample noise comes in cancelling +/- pairs to keep the
        // class means exact.
        let dim = 4;
        let n_per = 30;
        let mut data = Array2::<f64>::zeros((3 * 2 * n_per, dim));
        let mut labels = Vec::new();
        for c in 0..3u32 {
            for i in 0..n_per {
                let row = (c as usize * n_per + i) * 2;
                for j in 0..dim {
                    let center = if j == 0 { (c as f64 - 1.0) * 5.0 } else { 0.0 };
                    let wiggle = 0.1 * rng.sample::<f64, _>(StandardNormal);
                    data[(row, j)] = center + wiggle;
                    data[(row + 1, j)] = center - wiggle;
                }
            }
            labels.extend(std::iter::repeat(c + 1).take(2 * n_per));
        }
        let model = lda_fit(data.view(), &labels, 1).unwrap();
        assert_eq!(model.eigenvalues.len(), 2);
        assert!(model.eigenvalues[1] <= 1e-8 * model.eigenvalues[0].max(1.0));
        // And requesting both dimensions errors out with the achievable max.
        let err = lda_fit(data.view(), &labels, 2).unwrap_err();
        assert!(err.to_string().contains("achievable maximum 1"), "{err}");
    }

    #[test]
    fn scalar_projection_for_d_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let (data, labels) = two_blobs(&mut rng, 2, 30, 0, 4.0);
        let model = lda_fit(data.view(), &labels, 1).unwrap();
        let projected = lda_project(&model, data.view()).unwrap();
        assert_eq!(projected.ncols(), 1);
    }

    #[test]
    fn bad_inputs_are_rejected() {
        let data = Array2::<f64>::zeros((4, 2));
        assert!(lda_fit(data.view(), &[1, 1, 1, 1], 1).is_err());
        assert!(lda_fit(data.view(), &[1, 1, 1, 2], 1).is_err()); // class 2 has 1 sample
        assert!(lda_fit(data.view(), &[1, 1, 2, 2], 0).is_err());
        assert!(lda_fit(data.view(), &[1, 1, 2, 2], 2).is_err()); // d > k-1
        assert!(lda_fit(data.view(), &[1, 1], 1).is_err()); // label length
    }
}
