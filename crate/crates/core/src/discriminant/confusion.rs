use serde::{Deserialize, Serialize};

use crate::discriminant::lda::LdaModel;
use crate::error::{Error, Result};
use crate::ingest::EmbeddingMatrix;
use crate::stats::scores::csv_field;

/// Counts with rows = true class, columns = predicted class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub class_names: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn from_indices(class_names: Vec<String>, truth: &[usize], predicted: &[usize]) -> Self {
        let c = class_names.len();
        let mut counts = vec![vec![0u64; c]; c];
        for (&t, &p) in truth.iter().zip(predicted) {
            counts[t][p] += 1;
        }
        ConfusionMatrix {
            class_names,
            counts,
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.counts.len()).map(|k| self.counts[k][k]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            t => self.trace() as f64 / t as f64,
        }
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    /// `true\predicted,<classes...>` header, one row per true class.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("true\\predicted");
        for c in &self.class_names {
            out.push(',');
            out.push_str(&csv_field(c));
        }
        out.push('\n');
        for (name, row) in self.class_names.iter().zip(&self.counts) {
            out.push_str(&csv_field(name));
            for v in row {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Accuracy and confusion matrix of `model` on a labelled test set.
pub fn evaluate(model: &LdaModel, test: &EmbeddingMatrix, labels: &[String]) -> Result<(f64, ConfusionMatrix)> {
    if test.n_rows() == 0 {
        return Err(Error::invalid("test set is empty"));
    }
    if labels.len() != test.n_rows() {
        return Err(Error::RowCountMismatch {
            expected: test.n_rows(),
            found: labels.len(),
        });
    }
    let truth = model.encode_labels(labels)?;
    let pred = model.predict_indices(test)?;
    let cm = ConfusionMatrix::from_indices(model.class_names.clone(), &truth, &pred);
    Ok((cm.accuracy(), cm))
}
