//! PCA reduction and the three classifiers (LDA, k-NN, SVM) behind a uniform
//! fit/predict contract. All models are immutable after fitting; predictions
//! are pure functions and deterministic, including every tie rule.

mod knn;
mod lda;
mod pca;
mod serialize;
mod svm;

pub use knn::{knn_fit, knn_predict, KnnModel};
pub use lda::{default_dim as lda_default_dim, lda_fit, lda_predict, lda_project, LdaModel};
pub use pca::{pca_fit, pca_transform, pca_transform_batch, PcaModel};
pub use serialize::{from_document, to_document, TrainedModel};
pub use svm::{svm_fit, svm_predict, BinaryMachine, Kernel, SvmModel, QP_TOLERANCE};
