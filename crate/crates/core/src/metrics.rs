//! Per-model evaluation: hinge loss, misclassification and demographic parity.

use std::sync::{Arc, OnceLock};

use serde::Serialize;

use crate::data::Dataset;
use crate::enumerator::EnumeratedModel;
use crate::error::{Error, Result};
use crate::solver::DualSolution;

/// `max(0, 1 - y·ŷ)` on the decision value.
pub fn hinge_loss(y: f64, yhat: f64) -> f64 {
    (1.0 - y * yhat).max(0.0)
}

fn non_empty(ds: &Dataset) -> Result<()> {
    if ds.is_empty() {
        Err(Error::EmptyDataset)
    } else {
        Ok(())
    }
}

pub fn decision_values(model: &DualSolution, train: &Dataset, eval: &Dataset) -> Result<Vec<f64>> {
    (0..eval.n()).map(|j| model.decision_value(train, eval.x(j))).collect()
}

pub fn predictions(model: &DualSolution, train: &Dataset, eval: &Dataset) -> Result<Vec<f64>> {
    (0..eval.n()).map(|j| model.predict(train, eval.x(j))).collect()
}

/// Mean hinge loss of `model` on `eval`.
pub fn mean_hinge(model: &DualSolution, train: &Dataset, eval: &Dataset) -> Result<f64> {
    non_empty(eval)?;
    let values = decision_values(model, train, eval)?;
    let total: f64 = values.iter().zip(eval.labels()).map(|(&v, &y)| hinge_loss(y, v)).sum();
    Ok(total / eval.n() as f64)
}

/// Fraction of `eval` rows whose predicted label differs from the true one.
pub fn misclassification(model: &DualSolution, train: &Dataset, eval: &Dataset) -> Result<f64> {
    non_empty(eval)?;
    let predicted = predictions(model, train, eval)?;
    Ok(misclassification_from_predictions(&predicted, eval.labels()))
}

pub fn misclassification_from_predictions(predicted: &[f64], labels: &[f64]) -> f64 {
    let wrong = predicted.iter().zip(labels).filter(|(p, y)| p != y).count();
    wrong as f64 / labels.len() as f64
}

/// `|P(m = 1 | z = 1) - P(m = 1 | z = -1)|` with empirical frequencies.
pub fn demographic_parity_from_predictions(predicted: &[f64], z: &[f64]) -> Result<f64> {
    let rate = |group: f64| -> Result<f64> {
        let members: Vec<f64> = predicted
            .iter()
            .zip(z)
            .filter(|(_, &g)| g == group)
            .map(|(&p, _)| p)
            .collect();
        if members.is_empty() {
            return Err(Error::EmptyGroup(group as i8));
        }
        Ok(members.iter().filter(|&&p| p > 0.0).count() as f64 / members.len() as f64)
    };
    Ok((rate(1.0)? - rate(-1.0)?).abs())
}

pub fn demographic_parity(model: &DualSolution, train: &Dataset, eval: &Dataset, z_column: &str) -> Result<f64> {
    let z = eval.binary_column(z_column)?;
    let predicted = predictions(model, train, eval)?;
    demographic_parity_from_predictions(&predicted, &z)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelMetrics {
    pub objective_ratio: f64,
    pub train_objective: f64,
    #[serde(rename = "test_hinge")]
    pub test_hinge_mean: f64,
    /// Mean hinge relative to rank 1; `None` when the rank-1 loss is zero.
    pub test_loss_ratio: Option<f64>,
    #[serde(rename = "misclass")]
    pub misclassification_ratio: f64,
    #[serde(rename = "dp")]
    pub demographic_parity: Option<f64>,
}

/// Computes [`ModelMetrics`] for the models of one session against a fixed
/// evaluation set.
#[derive(Debug)]
pub struct Evaluator {
    train: Arc<Dataset>,
    eval: Arc<Dataset>,
    sensitive: Option<(String, Vec<f64>)>,
    rank_one_hinge: OnceLock<f64>,
}

impl Evaluator {
    /// `sensitive` names a column of `eval` mapped onto `{-1, +1}`.
    pub fn new(train: Arc<Dataset>, eval: Arc<Dataset>, sensitive: Option<&str>) -> Result<Self> {
        non_empty(&eval)?;
        if eval.d() != train.d() {
            return Err(Error::DimensionMismatch {
                expected: train.d(),
                actual: eval.d(),
            });
        }
        let sensitive = match sensitive {
            Some(name) => {
                let z = eval.binary_column(name)?;
                for group in [1.0, -1.0] {
                    if !z.contains(&group) {
                        return Err(Error::EmptyGroup(group as i8));
                    }
                }
                Some((name.to_string(), z))
            }
            None => None,
        };
        Ok(Evaluator {
            train,
            eval,
            sensitive,
            rank_one_hinge: OnceLock::new(),
        })
    }

    pub fn eval_set(&self) -> &Dataset {
        &self.eval
    }

    pub fn sensitive_column(&self) -> Option<&str> {
        self.sensitive.as_ref().map(|(name, _)| name.as_str())
    }

    /// `rank_one` is the first model of the same session; ratios are taken
    /// against it.
    pub fn evaluate(&self, model: &EnumeratedModel, rank_one: &EnumeratedModel) -> Result<ModelMetrics> {
        let values = decision_values(&model.solution, &self.train, &self.eval)?;
        let labels = self.eval.labels();
        let hinge = values.iter().zip(labels).map(|(&v, &y)| hinge_loss(y, v)).sum::<f64>() / labels.len() as f64;
        let predicted: Vec<f64> = values.iter().map(|&v| if v >= 0.0 { 1.0 } else { -1.0 }).collect();
        let baseline = match self.rank_one_hinge.get() {
            Some(&h) => h,
            None => {
                let h = mean_hinge(&rank_one.solution, &self.train, &self.eval)?;
                *self.rank_one_hinge.get_or_init(|| h)
            }
        };
        let demographic_parity = match &self.sensitive {
            Some((_, z)) => Some(demographic_parity_from_predictions(&predicted, z)?),
            None => None,
        };
        Ok(ModelMetrics {
            objective_ratio: model.objective_ratio,
            train_objective: model.objective(),
            test_hinge_mean: hinge,
            test_loss_ratio: (baseline > 0.0).then(|| hinge / baseline),
            misclassification_ratio: misclassification_from_predictions(&predicted, labels),
            demographic_parity,
        })
    }
}

/// Metrics for a ranked model list whose first entry is rank 1.
pub fn series(
    models: &[EnumeratedModel],
    train: Arc<Dataset>,
    eval: Arc<Dataset>,
    z_column: Option<&str>,
) -> Result<Vec<ModelMetrics>> {
    let first = models
        .first()
        .ok_or_else(|| Error::InvalidParameter("series needs at least one model".into()))?;
    if first.rank != 1 {
        return Err(Error::InvalidParameter("series must start at rank 1".into()));
    }
    let evaluator = Evaluator::new(train, eval, z_column)?;
    models.iter().map(|m| evaluator.evaluate(m, first)).collect()
}

/// The JSON line written for each enumerated model, shared by the CLI and
/// the HTTP service.
#[derive(Debug, Clone, Serialize)]
pub struct ModelRecord {
    pub rank: usize,
    pub objective: f64,
    pub objective_ratio: f64,
    pub support_size: usize,
    pub parent_rank: Option<usize>,
    pub model: DualSolution,
    pub metrics: ModelMetrics,
}

impl ModelRecord {
    pub fn new(model: &EnumeratedModel, metrics: ModelMetrics) -> Self {
        ModelRecord {
            rank: model.rank,
            objective: model.objective(),
            objective_ratio: model.objective_ratio,
            support_size: model.support().len(),
            parent_rank: model.parent_rank,
            model: model.solution.clone(),
            metrics,
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("model record serialization cannot fail")
    }
}
