//! Gradient boosting with logistic loss and second-order leaf weights.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, Label, LabelVector};
use crate::learner::loss::{logistic_loss_and_gradient, sigmoid};
use crate::learner::tree::{grow_tree, SortedColumns, TreeNode, TreeParams};
use crate::learner::{Classifier, Learner, Prediction};

/// Prior log-odds used when the training labels contain a single class.
pub const DEGENERATE_PRIOR_LOG_ODDS: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoostingConfig {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_child_weight: f64,
    /// L2 penalty on leaf weights.
    pub lambda: f64,
    pub min_split_gain: f64,
    /// Fraction of rows drawn per round; 1.0 disables sampling.
    pub subsample: f64,
    pub seed: u64,
    /// Search features in parallel within a level. Results are identical
    /// either way.
    pub parallel_splits: bool,
}

impl Default for BoostingConfig {
    fn default() -> Self {
        BoostingConfig {
            n_rounds: 100,
            learning_rate: 0.1,
            max_depth: 4,
            min_child_weight: 1.0,
            lambda: 1.0,
            min_split_gain: 0.0,
            subsample: 1.0,
            seed: 0,
            parallel_splits: false,
        }
    }
}

impl BoostingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::Config(format!(
                "learning_rate must lie in (0, 1], got {}",
                self.learning_rate
            )));
        }
        if self.max_depth == 0 {
            return Err(Error::Config("max_depth must be at least 1".into()));
        }
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return Err(Error::Config(format!(
                "subsample must lie in (0, 1], got {}",
                self.subsample
            )));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config("lambda must be finite and >= 0".into()));
        }
        if !(self.min_child_weight >= 0.0 && self.min_child_weight.is_finite()) {
            return Err(Error::Config(
                "min_child_weight must be finite and >= 0".into(),
            ));
        }
        if !(self.min_split_gain >= 0.0 && self.min_split_gain.is_finite()) {
            return Err(Error::Config(
                "min_split_gain must be finite and >= 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedEnsemble {
    pub trees: Vec<TreeNode>,
    pub learning_rate: f64,
    pub base_score: f64,
    pub feature_names: Vec<String>,
    pub training_config: BoostingConfig,
}

/// SplitMix64 finalizer; a stateless hash so that row sampling does not
/// depend on evaluation order.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn sample_unit(seed: u64, round: usize, row: usize) -> f64 {
    let h = mix(mix(mix(seed) ^ round as u64) ^ row as u64);
    (h >> 11) as f64 / (1u64 << 53) as f64
}

fn mean_loss(raw: &[f64], y: &[f64]) -> f64 {
    let total: f64 = raw
        .iter()
        .zip(y)
        .map(|(&f, &t)| logistic_loss_and_gradient(sigmoid(f), t).loss)
        .sum();
    total / raw.len() as f64
}

/// Train an ensemble. Returns the model and the mean training loss before
/// the first round followed by the loss after each round.
pub fn train_with_history(
    features: &FeatureMatrix,
    labels: &LabelVector,
    config: &BoostingConfig,
) -> Result<(BoostedEnsemble, Vec<f64>)> {
    config.validate()?;
    let n = features.n_rows();
    if n != labels.labels.len() {
        return Err(Error::Data(format!(
            "{} feature rows but {} labels",
            n,
            labels.labels.len()
        )));
    }
    if n == 0 {
        return Err(Error::Data("cannot train on zero rows".into()));
    }
    if features.student_ids != labels.student_ids {
        return Err(Error::Data(
            "feature rows and labels list different students".into(),
        ));
    }
    let y: Vec<f64> = labels.labels.iter().map(|l| l.as_target()).collect();
    let positives = labels
        .labels
        .iter()
        .filter(|&&l| l == Label::Success)
        .count();

    let mut model = BoostedEnsemble {
        trees: Vec::new(),
        learning_rate: config.learning_rate,
        base_score: 0.0,
        feature_names: features.feature_names.clone(),
        training_config: config.clone(),
    };
    if positives == 0 || positives == n {
        model.base_score = if positives == n {
            DEGENERATE_PRIOR_LOG_ODDS
        } else {
            -DEGENERATE_PRIOR_LOG_ODDS
        };
        let raw = vec![model.base_score; n];
        return Ok((model, vec![mean_loss(&raw, &y)]));
    }
    let rate = positives as f64 / n as f64;
    model.base_score = (rate / (1.0 - rate)).ln();

    let n_cols = features.n_cols();
    let cols = SortedColumns::new(&features.values, n, n_cols);
    let params = TreeParams {
        max_depth: config.max_depth,
        min_child_weight: config.min_child_weight,
        lambda: config.lambda,
        min_split_gain: config.min_split_gain,
    };
    let mut raw = vec![model.base_score; n];
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let mut active = vec![true; n];
    let mut history = Vec::with_capacity(config.n_rounds + 1);
    history.push(mean_loss(&raw, &y));
    for round in 0..config.n_rounds {
        for i in 0..n {
            let t = logistic_loss_and_gradient(sigmoid(raw[i]), y[i]);
            grad[i] = t.gradient;
            hess[i] = t.hessian;
        }
        if config.subsample < 1.0 {
            for (i, a) in active.iter_mut().enumerate() {
                *a = sample_unit(config.seed, round, i) < config.subsample;
            }
        }
        let tree = grow_tree(
            &features.values,
            n,
            n_cols,
            &cols,
            &grad,
            &hess,
            &active,
            &params,
            config.parallel_splits,
        );
        for (i, f) in raw.iter_mut().enumerate() {
            *f += config.learning_rate * tree.predict(features.row(i));
        }
        model.trees.push(tree);
        history.push(mean_loss(&raw, &y));
    }
    Ok((model, history))
}

pub fn train(
    features: &FeatureMatrix,
    labels: &LabelVector,
    config: &BoostingConfig,
) -> Result<BoostedEnsemble> {
    train_with_history(features, labels, config).map(|(m, _)| m)
}

const MODEL_FORMAT: &str = "fep-model";
const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    model: BoostedEnsemble,
}

impl BoostedEnsemble {
    /// Log-odds for one row laid out in the model's feature order.
    pub fn raw_score(&self, row: &[f64]) -> f64 {
        self.base_score
            + self.learning_rate * self.trees.iter().map(|t| t.predict(row)).sum::<f64>()
    }

    pub fn check_vocabulary(&self, features: &FeatureMatrix) -> Result<()> {
        if self.feature_names == features.feature_names {
            return Ok(());
        }
        let model: BTreeSet<&String> = self.feature_names.iter().collect();
        let input: BTreeSet<&String> = features.feature_names.iter().collect();
        let join = |s: Vec<&&String>| s.iter().map(|x| x.as_str()).collect::<Vec<_>>().join(", ");
        let only_model = join(model.difference(&input).collect());
        let only_input = join(input.difference(&model).collect());
        Err(Error::VocabularyMismatch {
            only_model: if only_model.is_empty() && only_input.is_empty() {
                "(same names, different order)".into()
            } else {
                only_model
            },
            only_input,
        })
    }

    pub fn predict(&self, features: &FeatureMatrix) -> Result<Vec<Prediction>> {
        self.check_vocabulary(features)?;
        Ok((0..features.n_rows())
            .map(|i| {
                Prediction::from_probability(
                    features.student_ids[i].clone(),
                    sigmoid(self.raw_score(features.row(i))),
                )
            })
            .collect())
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            model: self.clone(),
        };
        serde_json::to_string_pretty(&file).expect("model serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Header {
            format: String,
            version: u32,
        }
        let header: Header =
            serde_json::from_str(text).map_err(|e| Error::Decode(e.to_string()))?;
        if header.format != MODEL_FORMAT || header.version != MODEL_VERSION {
            return Err(Error::FormatVersion {
                expected: format!("{MODEL_FORMAT}/{MODEL_VERSION}"),
                found: format!("{}/{}", header.format, header.version),
            });
        }
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| Error::Decode(e.to_string()))?;
        let m = file.model;
        if let Some(max) = m.trees.iter().filter_map(TreeNode::max_feature_index).max() {
            if max >= m.feature_names.len() {
                return Err(Error::Decode(format!(
                    "tree references feature {max} but the model has {} features",
                    m.feature_names.len()
                )));
            }
        }
        if !m.base_score.is_finite() || !m.learning_rate.is_finite() {
            return Err(Error::Decode("non-finite model parameters".into()));
        }
        Ok(m)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

impl Classifier for BoostedEnsemble {
    fn predict(&self, features: &FeatureMatrix) -> Result<Vec<Prediction>> {
        BoostedEnsemble::predict(self, features)
    }
}

impl Learner for BoostingConfig {
    type Model = BoostedEnsemble;

    fn fit(&self, features: &FeatureMatrix, labels: &LabelVector) -> Result<BoostedEnsemble> {
        train(features, labels, self)
    }
}
