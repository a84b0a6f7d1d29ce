//! Predictors built from a dictionary and a parameter vector.

use ndarray::{s, Array1, ArrayView1, ArrayView2};
use rayon::prelude::*;

use crate::dictionary::{Dictionary, RegressorTerm, Signal, TimeSeriesData};
use crate::error::{NarmaxError, Result};
use crate::solver::LassoPath;

/// Free-run outputs beyond this magnitude count as divergence.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

#[derive(Clone, Debug, PartialEq)]
pub struct EstimatedModel {
    dictionary: Dictionary,
    theta: Array1<f64>,
    lambda: Option<f64>,
}

/// One-step-ahead predictions and residuals over `start..N`.
#[derive(Clone, Debug, PartialEq)]
pub struct OneStepPrediction {
    pub start: usize,
    pub prediction: Array1<f64>,
    pub residual: Array1<f64>,
}

impl EstimatedModel {
    pub fn new(dictionary: Dictionary, theta: Array1<f64>, lambda: Option<f64>) -> Result<Self> {
        if theta.len() != dictionary.len() {
            return Err(NarmaxError::LengthMismatch {
                what: "theta",
                expected: dictionary.len(),
                found: theta.len(),
            });
        }
        Ok(EstimatedModel {
            dictionary,
            theta,
            lambda,
        })
    }

    pub fn dictionary(&self) -> &Dictionary {
        &self.dictionary
    }

    pub fn theta(&self) -> ArrayView1<'_, f64> {
        self.theta.view()
    }

    pub fn lambda(&self) -> Option<f64> {
        self.lambda
    }

    /// Indices of nonzero coefficients.
    pub fn support(&self) -> Vec<usize> {
        self.theta
            .iter()
            .enumerate()
            .filter_map(|(j, &t)| (t != 0.0).then_some(j))
            .collect()
    }

    /// `(term, coefficient)` pairs for the nonzero coefficients.
    pub fn nonzero_terms(&self) -> Vec<(&RegressorTerm, f64)> {
        self.support()
            .into_iter()
            .map(|j| (&self.dictionary.terms()[j], self.theta[j]))
            .collect()
    }

    pub fn coefficient(&self, term: &RegressorTerm) -> Option<f64> {
        self.dictionary.position(term).map(|j| self.theta[j])
    }

    /// Recursive predictor using measured outputs and the residuals it forms
    /// itself (`e[k] = y[k] - y_hat[k]`, zero before `start`).
    pub fn one_step_predict(&self, data: &TimeSeriesData) -> Result<OneStepPrediction> {
        self.dictionary.check_data(data)?;
        let n = data.len();
        let start = self.dictionary.max_lag();
        let y = data.output();
        let inputs = data.inputs();
        let mut errors = Array1::<f64>::zeros(n);
        let mut prediction = Array1::zeros(n - start);

        for k in start..n {
            let y_hat = self.predict_at(k, y, inputs, |i| errors[i]);
            if !y_hat.is_finite() {
                return Err(NarmaxError::NonFinite {
                    what: "one-step prediction",
                    index: k,
                });
            }
            prediction[k - start] = y_hat;
            errors[k] = y[k] - y_hat;
        }
        Ok(OneStepPrediction {
            start,
            prediction,
            residual: errors.slice_move(s![start..]),
        })
    }

    /// Simulates the process part from the inputs alone, with every error
    /// factor held at zero. The first `max_lag` outputs are copied from
    /// `y_init`; the result has one entry per input row.
    pub fn free_run_simulate(&self, inputs: ArrayView2<'_, f64>, y_init: &[f64]) -> Result<Array1<f64>> {
        let n = inputs.nrows();
        let start = self.dictionary.max_lag();
        if n <= start {
            return Err(NarmaxError::InsufficientData {
                samples: n,
                max_lag: start,
            });
        }
        if y_init.len() < start {
            return Err(NarmaxError::LengthMismatch {
                what: "simulation seed",
                expected: start,
                found: y_init.len(),
            });
        }
        let needed = self.dictionary.required_inputs();
        if needed > inputs.ncols() {
            return Err(NarmaxError::MissingInput {
                channel: needed - 1,
                available: inputs.ncols(),
            });
        }

        let mut y = Array1::zeros(n);
        y.slice_mut(s![..start]).assign(&ArrayView1::from(&y_init[..start]));
        for k in start..n {
            let y_hat = self.predict_at(k, y.view(), inputs, |_| 0.0);
            if !y_hat.is_finite() || y_hat.abs() > DIVERGENCE_LIMIT {
                return Err(NarmaxError::Diverged { index: k });
            }
            y[k] = y_hat;
        }
        Ok(y)
    }

    fn predict_at(
        &self,
        k: usize,
        output: ArrayView1<'_, f64>,
        inputs: ArrayView2<'_, f64>,
        error: impl Fn(usize) -> f64,
    ) -> f64 {
        self.dictionary
            .terms()
            .iter()
            .zip(self.theta.iter())
            .filter(|(_, &t)| t != 0.0)
            .map(|(term, &t)| {
                t * term.value_at(k, |signal, i| match signal {
                    Signal::Output => output[i],
                    Signal::Input(c) => inputs[[i, c]],
                    Signal::Error => error(i),
                })
            })
            .sum()
    }
}

pub fn mean_absolute_error(simulated: ArrayView1<'_, f64>, observed: ArrayView1<'_, f64>) -> Result<f64> {
    if simulated.len() != observed.len() {
        return Err(NarmaxError::LengthMismatch {
            what: "compared series",
            expected: observed.len(),
            found: simulated.len(),
        });
    }
    if simulated.is_empty() {
        return Ok(0.0);
    }
    Ok(sum_abs_diff(simulated, observed) / simulated.len() as f64)
}

fn sum_abs_diff(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).sum()
}

/// Validation scores for every path entry.
#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    pub best_index: usize,
    /// Sum of absolute free-run errors over `max_lag..N`; infinite when the
    /// simulation diverged.
    pub errors: Vec<f64>,
    /// Samples compared per entry.
    pub compared: usize,
}

impl Selection {
    /// Mean absolute error of the selected entry.
    pub fn best_mae(&self) -> f64 {
        self.errors[self.best_index] / self.compared as f64
    }
}

/// Picks the path entry whose free-run simulation on `validation` has the
/// smallest sum of absolute errors. Ties go to the earlier (larger) penalty.
pub fn select_lambda(path: &LassoPath, validation: &TimeSeriesData) -> Result<Selection> {
    path.dictionary.check_data(validation)?;
    let start = path.dictionary.max_lag();
    let observed = validation.output();
    let seed: Vec<f64> = observed.slice(s![..start]).to_vec();

    let errors: Vec<f64> = path
        .entries
        .par_iter()
        .map(|entry| {
            let model = EstimatedModel {
                dictionary: path.dictionary.clone(),
                theta: entry.theta.clone(),
                lambda: Some(entry.lambda),
            };
            match model.free_run_simulate(validation.inputs(), &seed) {
                Ok(sim) => sum_abs_diff(sim.slice(s![start..]), observed.slice(s![start..])),
                Err(_) => f64::INFINITY,
            }
        })
        .collect();

    let mut best: Option<usize> = None;
    for (i, &e) in errors.iter().enumerate() {
        if e.is_finite() && best.is_none_or(|b| e < errors[b]) {
            best = Some(i);
        }
    }
    let best_index = best.ok_or(NarmaxError::AllDiverged)?;
    Ok(Selection {
        best_index,
        errors,
        compared: validation.len() - start,
    })
}

impl LassoPath {
    pub fn model(&self, index: usize) -> Result<EstimatedModel> {
        let entry = self.entries.get(index).ok_or_else(|| {
            NarmaxError::InvalidConfig(format!("path has {} entries, asked for {index}", self.entries.len()))
        })?;
        EstimatedModel::new(self.dictionary.clone(), entry.theta.clone(), Some(entry.lambda))
    }
}
