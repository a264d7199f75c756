//! Numerical kernels shared by the classifiers: symmetric eigendecomposition,
//! Moore-Penrose pseudoinverse and the boxed QP solver behind SVM training.

mod eigen;
mod qp;

pub use eigen::{eig_symmetric, pinv, EigenResult, DEFAULT_RANK_TOL};
pub use qp::{solve_box_qp, solve_box_qp_capped, QpSolution};
