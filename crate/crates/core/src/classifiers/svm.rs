//! Soft-margin SVM: one binary machine per unordered class pair, each trained
//! by the boxed QP solver, combined by majority voting.

use ndarray::{Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::decomp::solve_box_qp;
use crate::{Error, Result};

/// KKT tolerance used when training the per-pair machines.
pub const QP_TOLERANCE: f64 = 1e-3;
/// Multipliers at or below this threshold are dropped from the model.
const SUPPORT_EPS: f64 = 1e-12;

/// Kernel function of the decision machines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    Linear,
    Rbf { gamma: f64 },
}

impl Kernel {
    pub fn eval(&self, a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
        match *self {
            Kernel::Linear => a.dot(&b),
            Kernel::Rbf { gamma } => {
                let dist: f64 = a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * dist).exp()
            }
        }
    }
}

/// One trained binary machine for an unordered class pair. The smaller class
/// label always maps to -1, the larger to +1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryMachine {
    pub negative_class: u32,
    pub positive_class: u32,
    /// Support vectors, one per row.
    pub support_vectors: Array2<f64>,
    /// `alpha_i * y_i` for each support vector.
    pub coefficients: Vec<f64>,
    pub bias: f64,
    pub converged: bool,
}

impl BinaryMachine {
    /// Kernelized decision value; positive favours `positive_class`.
    pub fn decision(&self, kernel: &Kernel, x: ArrayView1<'_, f64>) -> f64 {
        self.support_vectors
            .rows()
            .into_iter()
            .zip(&self.coefficients)
            .map(|(sv, &c)| c * kernel.eval(sv, x))
            .sum::<f64>()
            + self.bias
    }
}

/// One-vs-one multi-class SVM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub machines: Vec<BinaryMachine>,
    pub kernel: Kernel,
    pub c: f64,
}

impl SvmModel {
    pub fn input_dim(&self) -> usize {
        self.machines
            .first()
            .map(|m| m.support_vectors.ncols())
            .unwrap_or(0)
    }

    /// Class pairs whose QP hit the iteration cap.
    pub fn unconverged_pairs(&self) -> Vec<(u32, u32)> {
        self.machines
            .iter()
            .filter(|m| !m.converged)
            .map(|m| (m.negative_class, m.positive_class))
            .collect()
    }
}

/// Trains one machine per unordered class pair. A machine that fails to
/// converge is kept (with its best iterate) and reported through
/// [`SvmModel::unconverged_pairs`] and a warning.
pub fn svm_fit(
    data: ArrayView2<'_, f64>,
    labels: &[u32],
    kernel: Kernel,
    c: f64,
) -> Result<SvmModel> {
    if labels.len() != data.nrows() {
        return Err(Error::invalid(format!(
            "{} samples but {} labels",
            data.nrows(),
            labels.len()
        )));
    }
    if !c.is_finite() || c <= 0.0 {
        return Err(Error::invalid(format!("penalty C must be positive, got {c}")));
    }
    if let Kernel::Rbf { gamma } = kernel {
        if !gamma.is_finite() || gamma <= 0.0 {
            return Err(Error::invalid(format!("rbf gamma must be positive, got {gamma}")));
        }
    }
    let mut classes: Vec<u32> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::invalid(format!(
            "svm_fit needs at least 2 classes, got {}",
            classes.len()
        )));
    }

    let mut machines = Vec::with_capacity(classes.len() * (classes.len() - 1) / 2);
    for (a_idx, &neg) in classes.iter().enumerate() {
        for &pos in &classes[a_idx + 1..] {
            let rows: Vec<usize> = labels
                .iter()
                .enumerate()
                .filter(|(_, &y)| y == neg || y == pos)
                .map(|(i, _)| i)
                .collect();
            let n = rows.len();
            let mut pair_labels = Vec::with_capacity(n);
            let mut pair_data = Array2::<f64>::zeros((n, data.ncols()));
            for (r, &i) in rows.iter().enumerate() {
                pair_data.row_mut(r).assign(&data.row(i));
                pair_labels.push(if labels[i] == neg { -1.0 } else { 1.0 });
            }

            let mut kernel_matrix = Array2::<f64>::zeros((n, n));
            for i in 0..n {
                for j in i..n {
                    let v = kernel.eval(pair_data.row(i), pair_data.row(j));
                    kernel_matrix[(i, j)] = v;
                    kernel_matrix[(j, i)] = v;
                }
            }

            let solution = solve_box_qp(&kernel_matrix, &pair_labels, c, QP_TOLERANCE)?;
            if !solution.converged {
                log::warn!(
                    "svm machine ({neg}, {pos}) did not converge after {} iterations",
                    solution.iterations
                );
            }

            let support: Vec<usize> = (0..n).filter(|&i| solution.alpha[i] > SUPPORT_EPS).collect();
            let mut support_vectors = Array2::<f64>::zeros((support.len(), data.ncols()));
            let mut coefficients = Vec::with_capacity(support.len());
            for (r, &i) in support.iter().enumerate() {
                support_vectors.row_mut(r).assign(&pair_data.row(i));
                coefficients.push(solution.alpha[i] * pair_labels[i]);
            }
            machines.push(BinaryMachine {
                negative_class: neg,
                positive_class: pos,
                support_vectors,
                coefficients,
                bias: solution.bias,
                converged: solution.converged,
            });
        }
    }
    Ok(SvmModel {
        machines,
        kernel,
        c,
    })
}

/// Majority vote over all binary machines. A tie in votes is broken by the
/// largest total absolute decision value collected by a tied class, then by
/// the smallest label.
pub fn svm_predict(model: &SvmModel, x: ArrayView1<'_, f64>) -> Result<u32> {
    if model.machines.is_empty() {
        return Err(Error::invalid("svm model has no machines".to_string()));
    }
    if x.len() != model.input_dim() {
        return Err(Error::invalid(format!(
            "vector has dimension {}, model expects {}",
            x.len(),
            model.input_dim()
        )));
    }
    let mut tally: std::collections::BTreeMap<u32, (usize, f64)> = std::collections::BTreeMap::new();
    for machine in &model.machines {
        tally.entry(machine.negative_class).or_insert((0, 0.0));
        tally.entry(machine.positive_class).or_insert((0, 0.0));
        let value = machine.decision(&model.kernel, x);
        let winner = if value > 0.0 {
            machine.positive_class
        } else {
            machine.negative_class
        };
        let entry = tally.get_mut(&winner).expect("inserted above");
        entry.0 += 1;
        entry.1 += value.abs();
    }
    let mut best: Option<(usize, f64, u32)> = None;
    for (&label, &(votes, confidence)) in &tally {
        let better = match best {
            None => true,
            Some((bv, bc, _)) => votes > bv || (votes == bv && confidence > bc),
        };
        if better {
            best = Some((votes, confidence, label));
        }
    }
    Ok(best.expect("non-empty tally").2)
}
