//! Structured-text (JSON) model documents.
//!
//! Floats are written with 17 significant digits, so a loaded model
//! reproduces the predictions of the saved one exactly.

use std::io::{self, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

use super::{KnnModel, LdaModel, SvmModel};

/// The fitted state of one classifier. Serialized with external tagging
/// (`{"lda": {...}}`), which keeps integer-keyed maps working.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrainedModel {
    Lda(LdaModel),
    Knn(KnnModel),
    Svm(SvmModel),
}

impl TrainedModel {
    pub fn kind_name(&self) -> &'static str {
        match self {
            TrainedModel::Lda(_) => "lda",
            TrainedModel::Knn(_) => "knn",
            TrainedModel::Svm(_) => "svm",
        }
    }
}

/// Serializes any model component as a JSON document with 17-significant-digit
/// floats.
pub fn to_document<T: Serialize>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut serializer =
        serde_json::Serializer::with_formatter(&mut out, SigDigitsFormatter::default());
    value
        .serialize(&mut serializer)
        .map_err(|e| Error::invalid(format!("model serialization failed: {e}")))?;
    out.push(b'\n');
    String::from_utf8(out).map_err(|e| Error::invalid(format!("model document is not UTF-8: {e}")))
}

/// Parses a document produced by [`to_document`].
pub fn from_document<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::invalid(format!("malformed model document: {e}")))
}

/// JSON formatter printing every float with 17 significant digits.
#[derive(Default)]
struct SigDigitsFormatter;

impl serde_json::ser::Formatter for SigDigitsFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + Write,
    {
        // 1 digit before the point and 16 after: 17 significant digits.
        write!(writer, "{value:.16e}")
    }
}
