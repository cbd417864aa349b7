//! Logistic-regression baseline classifier.
//!
//! Fitted by full-batch gradient ascent on the L2-penalized log-likelihood
//!
//! ```text
//! l(w) = sum_i [ y_i ln s(w.x_i) + (1 - y_i) ln(1 - s(w.x_i)) ] - (lambda/2) |w_1..|^2
//! ```
//!
//! with a backtracking line search (the step is halved until the loss does
//! not decrease). The intercept is never penalized. Weights start at zero,
//! so fitting is deterministic. Each categorical predictor contributes one
//! indicator per non-reference state, with state 0 as the reference.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::metrics::{confusion_from_scored, ClassifierMetrics};
use crate::records::{EncounterRecord, Schema};

/// How records map onto the feature vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LrEncoding {
    pub target_index: usize,
    /// `(variable index, cardinality)` per predictor, in declaration order.
    pub predictors: Vec<(usize, usize)>,
    /// One name per feature, aligned with the non-intercept weights.
    pub feature_names: Vec<String>,
}

impl LrEncoding {
    fn new(schema: &Schema, target: &str, predictors: &[&str]) -> Result<Self> {
        let target_index = schema
            .index_of(target)
            .ok_or_else(|| Error::Query(format!("unknown target '{target}'")))?;
        if schema.cardinality(target_index) != 2 {
            return Err(Error::Query(format!("target '{target}' must be binary")));
        }
        let mut specs = Vec::new();
        let mut feature_names = Vec::new();
        for code in predictors {
            let index = schema
                .index_of(code)
                .ok_or_else(|| Error::Query(format!("unknown predictor '{code}'")))?;
            if index == target_index {
                return Err(Error::Query(format!("'{code}' cannot predict itself")));
            }
            let cardinality = schema.cardinality(index);
            for state in 1..cardinality {
                feature_names.push(format!("{code}={state}"));
            }
            specs.push((index, cardinality));
        }
        Ok(LrEncoding {
            target_index,
            predictors: specs,
            feature_names,
        })
    }

    pub fn feature_count(&self) -> usize {
        self.feature_names.len()
    }

    /// Indicator features of one record, without the intercept.
    pub fn encode(&self, record: &EncounterRecord) -> Result<Vec<f64>> {
        let mut features = Vec::with_capacity(self.feature_count());
        for &(index, cardinality) in &self.predictors {
            let value = record.values[index] as usize;
            if value >= cardinality {
                return Err(Error::Input(format!(
                    "state {value} of variable {index} is outside the model's encoding"
                )));
            }
            for state in 1..cardinality {
                features.push(if value == state { 1.0 } else { 0.0 });
            }
        }
        Ok(features)
    }
}

/// Fit settings. `tolerance` applies to the infinity norm of the mean
/// gradient (the sum gradient divided by the record count), so it is
/// comparable across dataset sizes.
#[derive(Debug, Clone)]
pub struct LrConfig {
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub l2: f64,
    pub tolerance: f64,
}

impl Default for LrConfig {
    fn default() -> Self {
        LrConfig {
            learning_rate: 1.0,
            max_epochs: 2000,
            l2: 1e-4,
            tolerance: 1e-9,
        }
    }
}

/// Fitted model: `weights[0]` is the intercept.
#[derive(Debug, Clone)]
pub struct LrModel {
    pub encoding: LrEncoding,
    pub weights: Vec<f64>,
    pub iterations: usize,
    pub final_gradient_norm: f64,
}

impl LrModel {
    /// Named-weight text serialization, one `name value` line per weight.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "intercept {:.17}", self.weights[0]);
        for (name, weight) in self.encoding.feature_names.iter().zip(&self.weights[1..]) {
            let _ = writeln!(out, "{name} {weight:.17}");
        }
        out
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 30.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn linear(weights: &[f64], features: &[f64]) -> f64 {
    weights[0]
        + weights[1..]
            .iter()
            .zip(features)
            .map(|(w, x)| w * x)
            .sum::<f64>()
}

fn penalized_log_likelihood(weights: &[f64], data: &[(Vec<f64>, f64)], l2: f64) -> f64 {
    let mut total = 0.0;
    for (features, y) in data {
        let z = linear(weights, features);
        // y ln s(z) + (1-y) ln(1 - s(z)) = -softplus(-z) - (1-y) z
        total += -softplus(-z) - (1.0 - y) * z;
    }
    let penalty: f64 = weights[1..].iter().map(|w| w * w).sum();
    total - 0.5 * l2 * penalty
}

fn gradient(weights: &[f64], data: &[(Vec<f64>, f64)], l2: f64) -> Vec<f64> {
    let mut grad = vec![0.0; weights.len()];
    for (features, y) in data {
        let residual = y - sigmoid(linear(weights, features));
        grad[0] += residual;
        for (g, x) in grad[1..].iter_mut().zip(features) {
            *g += residual * x;
        }
    }
    for (g, w) in grad[1..].iter_mut().zip(&weights[1..]) {
        *g -= l2 * w;
    }
    grad
}

/// Fits from zero-initialized weights.
pub fn fit_lr(
    records: &[EncounterRecord],
    schema: &Schema,
    target: &str,
    predictors: &[&str],
    config: &LrConfig,
) -> Result<LrModel> {
    let encoding = LrEncoding::new(schema, target, predictors)?;
    let init = vec![0.0; encoding.feature_count() + 1];
    fit_lr_with_init(records, schema, target, predictors, config, &init)
}

/// Fits from caller-supplied initial weights (intercept first). With any
/// positive penalty the optimum is unique, so all admissible starts agree.
pub fn fit_lr_with_init(
    records: &[EncounterRecord],
    schema: &Schema,
    target: &str,
    predictors: &[&str],
    config: &LrConfig,
    initial_weights: &[f64],
) -> Result<LrModel> {
    if records.is_empty() {
        return Err(Error::Input("logistic regression needs a non-empty dataset".into()));
    }
    let encoding = LrEncoding::new(schema, target, predictors)?;
    if initial_weights.len() != encoding.feature_count() + 1 {
        return Err(Error::Input(format!(
            "expected {} initial weights, got {}",
            encoding.feature_count() + 1,
            initial_weights.len()
        )));
    }
    let data: Vec<(Vec<f64>, f64)> = records
        .iter()
        .map(|record| {
            let features = encoding.encode(record)?;
            Ok((features, f64::from(record.values[encoding.target_index])))
        })
        .collect::<Result<_>>()?;

    let n = data.len() as f64;
    let mut weights = initial_weights.to_vec();
    let mut loss = penalized_log_likelihood(&weights, &data, config.l2);
    let mut iterations = 0;
    let mut grad_norm = f64::INFINITY;

    for epoch in 0..config.max_epochs {
        let grad = gradient(&weights, &data, config.l2);
        grad_norm = grad.iter().fold(0.0f64, |m, g| m.max(g.abs())) / n;
        if grad_norm < config.tolerance {
            break;
        }
        // Backtracking: halve the step until the loss does not decrease.
        let mut step = config.learning_rate / n;
        let mut advanced = false;
        while step > 1e-18 {
            let proposal: Vec<f64> = weights
                .iter()
                .zip(&grad)
                .map(|(w, g)| w + step * g)
                .collect();
            let proposed_loss = penalized_log_likelihood(&proposal, &data, config.l2);
            if proposed_loss.is_nan() {
                return Err(Error::Input(format!(
                    "logistic regression diverged at epoch {epoch} (loss became NaN)"
                )));
            }
            if proposed_loss >= loss {
                weights = proposal;
                loss = proposed_loss;
                advanced = true;
                break;
            }
            step *= 0.5;
        }
        iterations = epoch + 1;
        if !advanced {
            break; // no ascent direction at float resolution
        }
    }

    Ok(LrModel {
        encoding,
        weights,
        iterations,
        final_gradient_norm: grad_norm,
    })
}

/// Probability and thresholded class for one record.
pub fn predict_lr(model: &LrModel, record: &EncounterRecord, threshold: f64) -> Result<(u8, f64)> {
    let features = model.encoding.encode(record)?;
    let probability = sigmoid(linear(&model.weights, &features));
    Ok((u8::from(probability >= threshold), probability))
}

/// Confusion-matrix evaluation through the same shared code path as the
/// network classifier.
pub fn evaluate_lr(
    model: &LrModel,
    records: &[EncounterRecord],
    threshold: f64,
) -> Result<ClassifierMetrics> {
    let scored = score_lr(model, records)?;
    Ok(confusion_from_scored(&scored, threshold))
}

/// `(actual, probability)` pairs for threshold sweeps and evaluation.
pub fn score_lr(model: &LrModel, records: &[EncounterRecord]) -> Result<Vec<(bool, f64)>> {
    records
        .iter()
        .map(|record| {
            let (_, probability) = predict_lr(model, record, 0.5)?;
            Ok((record.values[model.encoding.target_index] == 1, probability))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::records::{Schema, VariableSpec};
    use crate::rng::Rng;

    fn schema_ab() -> Schema {
        Schema::new(vec![
            VariableSpec::new("A", "A", &["0", "1"]),
            VariableSpec::new("Y", "Y", &["0", "1"]),
        ])
        .unwrap()
    }

    fn record(values: &[u8]) -> EncounterRecord {
        EncounterRecord {
            encounter_id: String::new(),
            values: values.to_vec(),
        }
    }

    #[test]
    fn separable_data_is_classified_perfectly() {
        let schema = schema_ab();
        let records: Vec<EncounterRecord> = (0..40)
            .map(|i| {
                let a = (i % 2) as u8;
                record(&[a, a])
            })
            .collect();
        let config = LrConfig {
            l2: 0.01,
            ..LrConfig::default()
        };
        let model = fit_lr(&records, &schema, "Y", &["A"], &config).unwrap();
        assert!(model.weights[1] > 0.0, "weight should match separation direction");
        let metrics = evaluate_lr(&model, &records, 0.5).unwrap();
        assert_eq!(metrics.accuracy, 1.0);
    }

    #[test]
    fn intercept_only_optimum_is_the_base_rate_logit() {
        // All features zero: with 30 positives of 100, the optimum intercept
        // is logit(0.3); feature weight shrinks to zero under the penalty.
        let schema = schema_ab();
        let mut records = vec![record(&[0, 1]); 30];
        records.extend(vec![record(&[0, 0]); 70]);
        let config = LrConfig {
            max_epochs: 20000,
            ..LrConfig::default()
        };
        let model = fit_lr(&records, &schema, "Y", &["A"], &config).unwrap();
        let logit = (0.3f64 / 0.7).ln();
        assert!(
            (model.weights[0] - logit).abs() < 1e-6,
            "intercept {} vs logit {}",
            model.weights[0],
            logit
        );
        assert!(model.weights[1].abs() < 1e-6);
    }

    fn random_training_data(
        n: usize,
        seed: u64,
    ) -> (Schema, Vec<EncounterRecord>) {
        let schema = Schema::new(vec![
            VariableSpec::new("S", "S", &["0", "1", "2"]),
            VariableSpec::new("A", "A", &["0", "1"]),
            VariableSpec::new("B", "B", &["0", "1"]),
            VariableSpec::new("Y", "Y", &["0", "1"]),
        ])
        .unwrap();
        let mut rng = Rng::new(seed);
        let records = (0..n)
            .map(|_| {
                let s = rng.next_below(3) as u8;
                let a = rng.next_below(2) as u8;
                let b = rng.next_below(2) as u8;
                let z = -0.5 + 0.8 * f64::from(s) - 1.2 * f64::from(a) + 0.4 * f64::from(b);
                let y = u8::from(rng.next_unit_f64() < sigmoid(z));
                record(&[s, a, b, y])
            })
            .collect();
        (schema, records)
    }

    #[test]
    fn analytic_gradient_matches_central_finite_differences() {
        let (schema, records) = random_training_data(60, 77);
        let encoding = LrEncoding::new(&schema, "Y", &["S", "A", "B"]).unwrap();
        let data: Vec<(Vec<f64>, f64)> = records
            .iter()
            .map(|r| (encoding.encode(r).unwrap(), f64::from(r.values[3])))
            .collect();
        let l2 = 0.05;
        let h = 1e-5;
        let mut rng = Rng::new(5150);
        for _ in 0..20 {
            let weights: Vec<f64> = (0..encoding.feature_count() + 1)
                .map(|_| 4.0 * rng.next_unit_f64() - 2.0)
                .collect();
            let analytic = gradient(&weights, &data, l2);
            for i in 0..weights.len() {
                let mut plus = weights.clone();
                plus[i] += h;
                let mut minus = weights.clone();
                minus[i] -= h;
                let numeric = (penalized_log_likelihood(&plus, &data, l2)
                    - penalized_log_likelihood(&minus, &data, l2))
                    / (2.0 * h);
                let relative = (analytic[i] - numeric).abs() / analytic[i].abs().max(1.0);
                assert!(
                    relative < 1e-5,
                    "component {i}: analytic {} vs numeric {numeric}",
                    analytic[i]
                );
            }
        }
    }

    #[test]
    fn loss_is_nondecreasing_across_epochs() {
        let (schema, records) = random_training_data(200, 13);
        let encoding = LrEncoding::new(&schema, "Y", &["S", "A", "B"]).unwrap();
        let data: Vec<(Vec<f64>, f64)> = records
            .iter()
            .map(|r| (encoding.encode(r).unwrap(), f64::from(r.values[3])))
            .collect();
        let config = LrConfig::default();
        // re-run the ascent manually, checking monotonicity step by step
        let mut weights = vec![0.0; encoding.feature_count() + 1];
        let mut loss = penalized_log_likelihood(&weights, &data, config.l2);
        for _ in 0..50 {
            let grad = gradient(&weights, &data, config.l2);
            let mut step = config.learning_rate / data.len() as f64;
            loop {
                let proposal: Vec<f64> =
                    weights.iter().zip(&grad).map(|(w, g)| w + step * g).collect();
                let proposed = penalized_log_likelihood(&proposal, &data, config.l2);
                if proposed >= loss {
                    weights = proposal;
                    assert!(proposed >= loss);
                    loss = proposed;
                    break;
                }
                step *= 0.5;
                assert!(step > 1e-18);
            }
        }
    }

    #[test]
    fn different_initializations_converge_to_the_same_optimum() {
        let (schema, records) = random_training_data(300, 21);
        let config = LrConfig {
            max_epochs: 50000,
            tolerance: 1e-12,
            ..LrConfig::default()
        };
        let from_zero = fit_lr(&records, &schema, "Y", &["S", "A", "B"], &config).unwrap();
        let other_init = vec![0.7, -1.3, 0.9, 2.0, -0.4];
        let from_other =
            fit_lr_with_init(&records, &schema, "Y", &["S", "A", "B"], &config, &other_init)
                .unwrap();
        for (a, b) in from_zero.weights.iter().zip(&from_other.weights) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn zero_weights_predict_half() {
        let schema = schema_ab();
        let model = LrModel {
            encoding: LrEncoding::new(&schema, "Y", &["A"]).unwrap(),
            weights: vec![0.0, 0.0],
            iterations: 0,
            final_gradient_norm: 0.0,
        };
        let (_, p) = predict_lr(&model, &record(&[1, 0]), 0.5).unwrap();
        assert_eq!(p, 0.5);
    }

    #[test]
    fn strong_indicator_weight_saturates_the_sigmoid() {
        let schema = schema_ab();
        let model = LrModel {
            encoding: LrEncoding::new(&schema, "Y", &["A"]).unwrap(),
            weights: vec![0.0, 10.0],
            iterations: 0,
            final_gradient_norm: 0.0,
        };
        let (class, p) = predict_lr(&model, &record(&[1, 0]), 0.5).unwrap();
        assert_eq!(class, 1);
        assert!((p - sigmoid(10.0)).abs() < 1e-15);
        assert!((p - 0.9999546021312976).abs() < 1e-12);
    }

    #[test]
    fn non_binary_target_is_rejected() {
        let schema = Schema::new(vec![
            VariableSpec::new("S", "S", &["0", "1", "2"]),
            VariableSpec::new("A", "A", &["0", "1"]),
        ])
        .unwrap();
        let err = fit_lr(&[record(&[0, 0])], &schema, "S", &["A"], &LrConfig::default());
        assert!(err.is_err());
    }

    #[test]
    fn surgery_encodes_as_two_indicators() {
        let schema = crate::records::study_schema();
        let encoding =
            LrEncoding::new(&schema, "AF", &["Surgery", "Pre_beta", "Post_beta", "Hypotension", "Epidural"])
                .unwrap();
        assert_eq!(encoding.feature_count(), 6); // 2 + 1 + 1 + 1 + 1
        assert_eq!(encoding.feature_names[0], "Surgery=1");
        assert_eq!(encoding.feature_names[1], "Surgery=2");
        let features = encoding
            .encode(&record(&[2, 1, 0, 0, 1, 0]))
            .unwrap();
        assert_eq!(features, vec![0.0, 1.0, 1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn named_weights_serialize_one_per_line() {
        let schema = schema_ab();
        let model = LrModel {
            encoding: LrEncoding::new(&schema, "Y", &["A"]).unwrap(),
            weights: vec![0.25, -1.5],
            iterations: 3,
            final_gradient_norm: 0.0,
        };
        let text = model.to_text();
        assert!(text.starts_with("intercept 0.25"));
        assert!(text.contains("A=1 -1.5"));
    }
}
