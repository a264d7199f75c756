//! Box-constrained quadratic-program solver for soft-margin SVM training.
//!
//! Solves the dual problem
//!
//! ```text
//! max  sum(alpha) - 1/2 * alpha' Q alpha      Q_ij = y_i y_j K_ij
//! s.t. 0 <= alpha_i <= C,   sum(alpha_i y_i) = 0
//! ```
//!
//! with two-variable SMO updates. The working pair is always the maximal
//! KKT violator, which makes the iteration deterministic.

use ndarray::Array2;

use crate::{Error, Result};

/// Floor on the curvature of a working pair, guarding division.
const CURVATURE_FLOOR: f64 = 1e-12;

/// Solution of the boxed dual problem.
#[derive(Debug, Clone)]
pub struct QpSolution {
    /// Lagrange multipliers, one per sample, each in `[0, C]`.
    pub alpha: Vec<f64>,
    /// Bias of the decision function, averaged over free support vectors.
    pub bias: f64,
    /// Number of pair updates performed.
    pub iterations: usize,
    /// False when the iteration cap was hit; `alpha` then holds the best iterate.
    pub converged: bool,
    /// Dual objective after each update; non-decreasing for a correct run.
    pub objective_trace: Vec<f64>,
}

/// Solves the dual with a default iteration cap proportional to problem size.
pub fn solve_box_qp(kernel: &Array2<f64>, labels: &[f64], c: f64, tol: f64) -> Result<QpSolution> {
    let cap = 10_000.max(200 * labels.len());
    solve_box_qp_capped(kernel, labels, c, tol, cap)
}

/// Same as [`solve_box_qp`] with an explicit iteration cap.
pub fn solve_box_qp_capped(
    kernel: &Array2<f64>,
    labels: &[f64],
    c: f64,
    tol: f64,
    max_iter: usize,
) -> Result<QpSolution> {
    let n = labels.len();
    if kernel.nrows() != n || kernel.ncols() != n {
        return Err(Error::invalid(format!(
            "kernel matrix is {}x{} but there are {n} labels",
            kernel.nrows(),
            kernel.ncols()
        )));
    }
    if n < 2 {
        return Err(Error::invalid("need at least two samples".to_string()));
    }
    if labels.iter().any(|&y| y != 1.0 && y != -1.0) {
        return Err(Error::invalid("labels must be exactly +1 or -1".to_string()));
    }
    if !labels.contains(&1.0) || !labels.contains(&-1.0) {
        return Err(Error::invalid("both classes must be present".to_string()));
    }
    if !c.is_finite() || c <= 0.0 {
        return Err(Error::invalid(format!("penalty C must be positive, got {c}")));
    }
    if !tol.is_finite() || tol <= 0.0 {
        return Err(Error::invalid(format!("tolerance must be positive, got {tol}")));
    }

    let mut alpha = vec![0.0f64; n];
    // Gradient of 1/2 a'Qa - e'a; starts at -1 everywhere since alpha = 0.
    let mut grad = vec![-1.0f64; n];
    let mut trace = Vec::with_capacity(64);
    trace.push(0.0);

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        let Some((i, j, gap)) = select_violating_pair(&alpha, &grad, labels, c) else {
            converged = true;
            break;
        };
        if gap <= tol {
            converged = true;
            break;
        }

        let yi = labels[i];
        let yj = labels[j];
        let eta = (kernel[(i, i)] + kernel[(j, j)] - 2.0 * kernel[(i, j)]).max(CURVATURE_FLOOR);
        let old_i = alpha[i];
        let old_j = alpha[j];

        if yi != yj {
            let delta = (-grad[i] - grad[j]) / eta;
            let diff = old_i - old_j;
            let mut ai = old_i + delta;
            let mut aj = old_j + delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > 0.0 {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
            alpha[i] = ai;
            alpha[j] = aj;
        } else {
            let delta = (grad[i] - grad[j]) / eta;
            let sum = old_i + old_j;
            let mut ai = old_i - delta;
            let mut aj = old_j + delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
            alpha[i] = ai;
            alpha[j] = aj;
        }

        let delta_i = alpha[i] - old_i;
        let delta_j = alpha[j] - old_j;
        if delta_i == 0.0 && delta_j == 0.0 {
            // The maximal violator could not move; further pairs would repeat.
            break;
        }
        for t in 0..n {
            grad[t] += labels[t] * (yi * kernel[(t, i)] * delta_i + yj * kernel[(t, j)] * delta_j);
        }
        iterations += 1;
        trace.push(dual_objective(&alpha, &grad));
    }

    let bias = compute_bias(&alpha, &grad, labels, c);
    Ok(QpSolution {
        alpha,
        bias,
        iterations,
        converged,
        objective_trace: trace,
    })
}

/// Picks `argmax_{I_up} -y g` and `argmin_{I_low} -y g`; their gap is the
/// largest KKT violation. Returns `None` when a set is empty.
fn select_violating_pair(
    alpha: &[f64],
    grad: &[f64],
    labels: &[f64],
    c: f64,
) -> Option<(usize, usize, f64)> {
    let mut up_val = f64::NEG_INFINITY;
    let mut up_idx = None;
    let mut low_val = f64::INFINITY;
    let mut low_idx = None;
    for t in 0..alpha.len() {
        let score = -labels[t] * grad[t];
        let in_up = (labels[t] > 0.0 && alpha[t] < c) || (labels[t] < 0.0 && alpha[t] > 0.0);
        let in_low = (labels[t] < 0.0 && alpha[t] < c) || (labels[t] > 0.0 && alpha[t] > 0.0);
        if in_up && score > up_val {
            up_val = score;
            up_idx = Some(t);
        }
        if in_low && score < low_val {
            low_val = score;
            low_idx = Some(t);
        }
    }
    match (up_idx, low_idx) {
        (Some(i), Some(j)) => Some((i, j, up_val - low_val)),
        _ => None,
    }
}

/// Dual objective from the maintained gradient:
/// `sum(a) - 1/2 a'Qa = 1/2 sum(a_t (1 - g_t))`.
fn dual_objective(alpha: &[f64], grad: &[f64]) -> f64 {
    0.5 * alpha
        .iter()
        .zip(grad)
        .map(|(&a, &g)| a * (1.0 - g))
        .sum::<f64>()
}

fn compute_bias(alpha: &[f64], grad: &[f64], labels: &[f64], c: f64) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for t in 0..alpha.len() {
        if alpha[t] > 0.0 && alpha[t] < c {
            sum += -labels[t] * grad[t];
            count += 1;
        }
    }
    if count > 0 {
        return sum / count as f64;
    }
    // No free support vectors: bound the bias between the two violation edges.
    let mut up_val = f64::NEG_INFINITY;
    let mut low_val = f64::INFINITY;
    for t in 0..alpha.len() {
        let score = -labels[t] * grad[t];
        let in_up = (labels[t] > 0.0 && alpha[t] < c) || (labels[t] < 0.0 && alpha[t] > 0.0);
        let in_low = (labels[t] < 0.0 && alpha[t] < c) || (labels[t] > 0.0 && alpha[t] > 0.0);
        if in_up && score > up_val {
            up_val = score;
        }
        if in_low && score < low_val {
            low_val = score;
        }
    }
    if up_val.is_finite() && low_val.is_finite() {
        0.5 * (up_val + low_val)
    } else {
        0.0
    }
}
