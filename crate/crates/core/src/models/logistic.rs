use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::scale::Standardizer;
use super::tree::FeatureSource;
use super::{mean_log_loss, sigmoid, validate_training, ModelParams, TrainedModel, TrainingMeta, MODEL_FORMAT_VERSION};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogisticHyper {
    /// Ridge strength on the weights (the intercept is not penalised).
    pub l2: f64,
    pub max_iters: usize,
    /// Stop once the gradient norm drops below this.
    pub tol: f64,
}

impl Default for LogisticHyper {
    fn default() -> Self {
        LogisticHyper {
            l2: 1.0,
            max_iters: 100,
            tol: 1e-8,
        }
    }
}

/// `sigmoid(w · standardize(x) + b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub scaler: Standardizer,
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LogisticModel {
    #[inline]
    pub fn proba<F: FeatureSource + ?Sized>(&self, row: &F) -> f64 {
        let z = self
            .weights
            .iter()
            .enumerate()
            .map(|(j, w)| w * self.scaler.apply(j, row.value(j)))
            .sum::<f64>()
            + self.bias;
        sigmoid(z)
    }
}

/// Objective `mean log-loss + l2/2 · ‖w‖²` and its gradient, with
/// `params = [w_0, …, w_{F-1}, b]` over an already standardised `x`.
pub fn logistic_objective(params: &[f64], x: &Matrix, y: &[u8], l2: f64) -> (f64, Vec<f64>) {
    let f = x.cols();
    let n = x.rows() as f64;
    let (w, b) = params.split_at(f);
    let z = margins(x, w, b[0]);
    let mut grad = vec![0.0; f + 1];
    for (i, r) in x.iter_rows().enumerate() {
        let resid = sigmoid(z[i]) - f64::from(y[i]);
        for (g, v) in grad[..f].iter_mut().zip(r) {
            *g += resid * v;
        }
        grad[f] += resid;
    }
    grad.iter_mut().for_each(|g| *g /= n);
    for (g, wj) in grad[..f].iter_mut().zip(w) {
        *g += l2 * wj;
    }
    let penalty = 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>();
    (mean_log_loss(&z, y) + penalty, grad)
}

fn margins(x: &Matrix, w: &[f64], b: f64) -> Vec<f64> {
    x.iter_rows()
        .map(|r| r.iter().zip(w).map(|(a, c)| a * c).sum::<f64>() + b)
        .collect()
}

/// Damped Newton iterations with Armijo backtracking.
pub fn train_logistic(x: &Matrix, y: &[u8], hyper: &LogisticHyper) -> Result<TrainedModel> {
    validate_training(x, y)?;
    if !(hyper.l2 >= 0.0) || !(hyper.tol > 0.0) {
        return Err(Error::Config("logistic l2 must be >= 0 and tol > 0".into()));
    }
    let scaler = Standardizer::fit(x);
    let xs = scaler.transform(x);
    let f = xs.cols();
    let n = xs.rows() as f64;

    let mut params = vec![0.0; f + 1];
    let (mut loss, mut grad) = logistic_objective(&params, &xs, y, hyper.l2);
    let mut trace = vec![loss];
    let mut converged = false;

    for _ in 0..hyper.max_iters {
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gnorm < hyper.tol {
            converged = true;
            break;
        }
        let z = margins(&xs, &params[..f], params[f]);
        let mut h = DMatrix::<f64>::zeros(f + 1, f + 1);
        let mut ext = vec![0.0; f + 1];
        for (i, r) in xs.iter_rows().enumerate() {
            let p = sigmoid(z[i]);
            let s = p * (1.0 - p) / n;
            ext[..f].copy_from_slice(r);
            ext[f] = 1.0;
            // lower triangle only
            for a in 0..=f {
                let sa = s * ext[a];
                if sa == 0.0 {
                    continue;
                }
                for c in 0..=a {
                    h[(a, c)] += sa * ext[c];
                }
            }
        }
        for a in 0..=f {
            for c in 0..a {
                h[(c, a)] = h[(a, c)];
            }
            h[(a, a)] += if a < f { hyper.l2 } else { 0.0 } + 1e-10;
        }
        let g = DVector::from_column_slice(&grad);
        let step = match h.clone().cholesky() {
            Some(ch) => ch.solve(&g),
            None => h.lu().solve(&g).unwrap_or_else(|| g.clone()),
        };
        let descent: f64 = -step.dot(&g);
        let (step, descent) = if descent < 0.0 {
            (step, descent)
        } else {
            (g.clone(), -g.dot(&g))
        };

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..50 {
            let cand: Vec<f64> = params.iter().zip(step.iter()).map(|(p, s)| p - t * s).collect();
            let (l, gr) = logistic_objective(&cand, &xs, y, hyper.l2);
            if l <= loss + 1e-4 * t * descent {
                accepted = Some((cand, l, gr));
                break;
            }
            t *= 0.5;
        }
        match accepted {
            Some((cand, l, gr)) => {
                params = cand;
                loss = l;
                grad = gr;
                trace.push(loss);
            }
            None => {
                converged = true;
                break;
            }
        }
    }
    if !converged {
        converged = grad.iter().map(|g| g * g).sum::<f64>().sqrt() < hyper.tol;
    }

    let bias = params[f];
    params.truncate(f);
    Ok(TrainedModel {
        format_version: MODEL_FORMAT_VERSION,
        feature_count: f,
        meta: TrainingMeta {
            seed: 0,
            hyperparameters: serde_json::to_value(hyper)?,
            loss_trace: trace,
            converged,
        },
        model: ModelParams::Logistic(LogisticModel {
            scaler,
            weights: params,
            bias,
        }),
    })
}
