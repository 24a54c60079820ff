//! Binary classifiers behind a small pluggable interface, with a
//! gradient-boosted tree implementation.

pub mod ensemble;
pub mod loss;
pub mod tree;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::features::{FeatureMatrix, Label, LabelVector};
use crate::ingest::StudentId;

pub use ensemble::{train, train_with_history, BoostedEnsemble, BoostingConfig};
pub use loss::{logistic_loss_and_gradient, sigmoid, LossTerms};
pub use tree::TreeNode;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub student_id: StudentId,
    pub p_success: f64,
    pub predicted_class: Label,
    /// `max(p_success, 1 - p_success)`, always in [0.5, 1].
    pub confidence: f64,
}

impl Prediction {
    /// Ties at 0.5 predict success.
    pub fn from_probability(student_id: StudentId, p_success: f64) -> Self {
        let predicted_class = if p_success >= 0.5 {
            Label::Success
        } else {
            Label::Failure
        };
        Prediction {
            student_id,
            p_success,
            predicted_class,
            confidence: p_success.max(1.0 - p_success),
        }
    }
}

/// A trained model producing one prediction per feature row.
pub trait Classifier: Send + Sync {
    fn predict(&self, features: &FeatureMatrix) -> Result<Vec<Prediction>>;
}

/// Something that can be fitted to labelled features.
pub trait Learner: Send + Sync {
    type Model: Classifier;

    fn fit(&self, features: &FeatureMatrix, labels: &LabelVector) -> Result<Self::Model>;
}
