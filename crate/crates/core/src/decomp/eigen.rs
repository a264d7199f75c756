//! Symmetric eigendecomposition via cyclic Jacobi rotations, plus the
//! Moore-Penrose pseudoinverse built on top of it.

use ndarray::Array2;

use crate::{Error, Result};

/// Hard cap on Jacobi sweeps; reaching it is reported as non-convergence.
const MAX_SWEEPS: usize = 100;
/// Converged when the off-diagonal Frobenius norm drops below this fraction
/// of the input Frobenius norm.
const OFF_DIAGONAL_TOL: f64 = 1e-12;
/// Largest relative asymmetry accepted before the input is rejected.
const SYMMETRY_TOL: f64 = 1e-9;

/// Default relative eigenvalue cutoff for [`pinv`].
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Eigendecomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct EigenResult {
    /// Eigenvalues in descending order.
    pub eigenvalues: Vec<f64>,
    /// Matching eigenvectors as columns, pairwise orthonormal. The sign of
    /// each column is fixed so its largest-magnitude entry is positive.
    pub vectors: Array2<f64>,
}

/// Diagonalizes a symmetric matrix with cyclic Jacobi rotations.
///
/// The input must be symmetric up to a small relative tolerance; it is
/// symmetrized internally before iterating. Results are deterministic,
/// including eigenvector signs.
pub fn eig_symmetric(a: &Array2<f64>) -> Result<EigenResult> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n {
        return Err(Error::invalid(format!(
            "eig_symmetric needs a non-empty square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }

    let scale = a.iter().fold(0.0f64, |acc, &x| acc.max(x.abs()));
    if !scale.is_finite() {
        return Err(Error::invalid("eig_symmetric: matrix has non-finite entries".to_string()));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (a[(i, j)] - a[(j, i)]).abs() > SYMMETRY_TOL * scale {
                return Err(Error::invalid(format!(
                    "matrix is not symmetric at ({i},{j}): {} vs {}",
                    a[(i, j)],
                    a[(j, i)]
                )));
            }
        }
    }

    // Work on the symmetrized copy so tiny asymmetries cannot bias rotations.
    let mut m = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = 0.5 * (a[(i, j)] + a[(j, i)]);
        }
    }
    let mut v = Array2::<f64>::eye(n);

    let frob = m.iter().map(|x| x * x).sum::<f64>().sqrt();
    let threshold = OFF_DIAGONAL_TOL * frob;

    let mut converged = frob == 0.0;
    if !converged {
        for _sweep in 0..=MAX_SWEEPS {
            if off_diagonal_norm(&m) <= threshold {
                converged = true;
                break;
            }
            if _sweep == MAX_SWEEPS {
                break;
            }
            for p in 0..n - 1 {
                for q in (p + 1)..n {
                    rotate(&mut m, &mut v, p, q);
                }
            }
        }
    }
    if !converged {
        return Err(Error::numerical(format!(
            "jacobi eigensolver did not converge within {MAX_SWEEPS} sweeps \
             (off-diagonal norm {:.3e}, target {:.3e})",
            off_diagonal_norm(&m),
            threshold
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].total_cmp(&m[(i, i)]));

    let mut eigenvalues = Vec::with_capacity(n);
    let mut vectors = Array2::<f64>::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        eigenvalues.push(m[(src, src)]);
        let mut col = v.column(src).to_owned();
        fix_sign(col.as_slice_mut().expect("contiguous column"));
        vectors.column_mut(dst).assign(&col);
    }

    Ok(EigenResult {
        eigenvalues,
        vectors,
    })
}

/// One Jacobi rotation annihilating the (p, q) entry.
fn rotate(m: &mut Array2<f64>, v: &mut Array2<f64>, p: usize, q: usize) {
    let apq = m[(p, q)];
    if apq == 0.0 {
        return;
    }
    let app = m[(p, p)];
    let aqq = m[(q, q)];
    let theta = (aqq - app) / (2.0 * apq);
    // For huge theta the sqrt would overflow; fall back to the first-order tangent.
    let t = if theta.abs() > 1e153 {
        0.5 / theta
    } else {
        let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
        sign / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let tau = s / (1.0 + c);

    m[(p, p)] = app - t * apq;
    m[(q, q)] = aqq + t * apq;
    m[(p, q)] = 0.0;
    m[(q, p)] = 0.0;

    let n = m.nrows();
    for r in 0..n {
        if r == p || r == q {
            continue;
        }
        let arp = m[(r, p)];
        let arq = m[(r, q)];
        let new_rp = arp - s * (arq + tau * arp);
        let new_rq = arq + s * (arp - tau * arq);
        m[(r, p)] = new_rp;
        m[(p, r)] = new_rp;
        m[(r, q)] = new_rq;
        m[(q, r)] = new_rq;
    }
    for r in 0..n {
        let vrp = v[(r, p)];
        let vrq = v[(r, q)];
        v[(r, p)] = vrp - s * (vrq + tau * vrp);
        v[(r, q)] = vrq + s * (vrp - tau * vrq);
    }
}

fn off_diagonal_norm(m: &Array2<f64>) -> f64 {
    let n = m.nrows();
    let mut sum = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            sum += 2.0 * m[(i, j)] * m[(i, j)];
        }
    }
    sum.sqrt()
}

/// Makes the largest-magnitude entry positive; the first such entry wins ties.
fn fix_sign(v: &mut [f64]) {
    let mut best = 0usize;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

/// Moore-Penrose pseudoinverse of a symmetric positive semidefinite matrix.
///
/// Eigenvalues above `rank_tol` times the largest eigenvalue are inverted;
/// the rest are treated as zero.
pub fn pinv(a: &Array2<f64>, rank_tol: f64) -> Result<Array2<f64>> {
    let eig = eig_symmetric(a)?;
    let lambda_max = eig.eigenvalues.first().copied().unwrap_or(0.0).max(0.0);
    let cutoff = rank_tol * lambda_max;

    let mut scaled = eig.vectors.clone();
    for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
        let factor = if lambda > cutoff && lambda > 0.0 {
            1.0 / lambda
        } else {
            0.0
        };
        scaled.column_mut(j).mapv_inplace(|x| x * factor);
    }
    Ok(scaled.dot(&eig.vectors.t()))
}
