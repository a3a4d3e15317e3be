//! Soft-margin RBF SVM trained by SMO with second-order working-set selection,
//! followed by a one-dimensional logistic calibration of decision values.

use serde::{Deserialize, Serialize};

use super::scale::Standardizer;
use super::tree::FeatureSource;
use super::{sigmoid, softplus, validate_training, ModelParams, TrainedModel, TrainingMeta, MODEL_FORMAT_VERSION};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmHyper {
    #[serde(rename = "c")]
    pub c: f64,
    /// Kernel width; `None` means `1 / F`.
    pub gamma: Option<f64>,
    /// Maximal KKT violation tolerated at convergence.
    pub tol: f64,
    /// Upper bound on SMO pair updates.
    pub max_passes: usize,
}

impl Default for SvmHyper {
    fn default() -> Self {
        SvmHyper {
            c: 1.0,
            gamma: None,
            tol: 1e-3,
            max_passes: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub scaler: Standardizer,
    pub gamma: f64,
    /// Standardised support vectors, row-major.
    pub support: Matrix,
    /// `α_i · y_i` per support vector.
    pub dual_coef: Vec<f64>,
    pub bias: f64,
    /// Calibration `p = sigmoid(a · f + b)`.
    pub platt_a: f64,
    pub platt_b: f64,
}

impl SvmModel {
    pub fn decision<F: FeatureSource + ?Sized>(&self, row: &F) -> f64 {
        let z: Vec<f64> = (0..self.support.cols())
            .map(|j| self.scaler.apply(j, row.value(j)))
            .collect();
        self.decision_standardized(&z)
    }

    fn decision_standardized(&self, z: &[f64]) -> f64 {
        self.support
            .iter_rows()
            .zip(&self.dual_coef)
            .map(|(sv, c)| c * rbf(self.gamma, sv, z))
            .sum::<f64>()
            + self.bias
    }

    pub fn proba<F: FeatureSource + ?Sized>(&self, row: &F) -> f64 {
        sigmoid(self.platt_a * self.decision(row) + self.platt_b)
    }
}

#[inline]
fn rbf(gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum();
    (-gamma * d2).exp()
}

/// Dual solution on the training set, exposed for KKT checks.
#[derive(Debug, Clone)]
pub struct SmoSolution {
    pub alpha: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub converged: bool,
}

const TAU: f64 = 1e-12;

/// Solves `min ½αᵀQα - eᵀα` s.t. `0 ≤ α ≤ C`, `yᵀα = 0`, `Q_ij = y_i y_j K_ij`.
pub(crate) fn smo(k: &[f64], y: &[f64], c: f64, tol: f64, max_iter: usize) -> SmoSolution {
    let n = y.len();
    let kk = |i: usize, j: usize| k[i * n + j];
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let in_up = |a: f64, yi: f64| (yi > 0.0 && a < c) || (yi < 0.0 && a > 0.0);
    let in_low = |a: f64, yi: f64| (yi > 0.0 && a > 0.0) || (yi < 0.0 && a < c);

    let mut iterations = 0;
    let mut converged = false;
    let (mut m_up, mut m_low);
    loop {
        // i: maximal -y G over I_up
        let mut i_sel = None;
        m_up = f64::NEG_INFINITY;
        for t in 0..n {
            if in_up(alpha[t], y[t]) {
                let v = -y[t] * grad[t];
                if v > m_up {
                    m_up = v;
                    i_sel = Some(t);
                }
            }
        }
        m_low = f64::INFINITY;
        let mut j_sel = None;
        let mut best_obj = f64::INFINITY;
        if let Some(i) = i_sel {
            for t in 0..n {
                if !in_low(alpha[t], y[t]) {
                    continue;
                }
                let v = -y[t] * grad[t];
                m_low = m_low.min(v);
                let b = m_up - v;
                if b > 0.0 {
                    let a = kk(i, i) + kk(t, t) - 2.0 * kk(i, t);
                    let a = if a > 0.0 { a } else { TAU };
                    let obj = -(b * b) / a;
                    if obj <= best_obj {
                        best_obj = obj;
                        j_sel = Some(t);
                    }
                }
            }
        }
        if m_up - m_low < tol {
            converged = true;
            break;
        }
        if iterations >= max_iter {
            break;
        }
        let (Some(i), Some(j)) = (i_sel, j_sel) else {
            converged = true;
            break;
        };
        iterations += 1;

        let (ai_old, aj_old) = (alpha[i], alpha[j]);
        let quad = {
            let q = kk(i, i) + kk(j, j) - 2.0 * kk(i, j);
            if q > 0.0 {
                q
            } else {
                TAU
            }
        };
        if y[i] != y[j] {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - ai_old, alpha[j] - aj_old);
        for t in 0..n {
            grad[t] += y[t] * (y[i] * kk(t, i) * di + y[j] * kk(t, j) * dj);
        }
    }
    let bias = if m_up.is_finite() && m_low.is_finite() {
        0.5 * (m_up + m_low)
    } else if m_up.is_finite() {
        m_up
    } else if m_low.is_finite() {
        m_low
    } else {
        0.0
    };
    SmoSolution {
        alpha,
        bias,
        iterations,
        converged,
    }
}

/// Platt scaling: fits `sigmoid(a·f + b)` to smoothed targets by Newton steps.
fn fit_platt(f: &[f64], y: &[f64]) -> (f64, f64) {
    let n_pos = y.iter().filter(|&&v| v > 0.0).count() as f64;
    let n_neg = y.len() as f64 - n_pos;
    let hi = (n_pos + 1.0) / (n_pos + 2.0);
    let lo = 1.0 / (n_neg + 2.0);
    let t: Vec<f64> = y.iter().map(|&v| if v > 0.0 { hi } else { lo }).collect();
    let objective = |a: f64, b: f64| -> f64 {
        f.iter()
            .zip(&t)
            .map(|(&fi, &ti)| {
                let z = a * fi + b;
                softplus(z) - ti * z
            })
            .sum()
    };
    let (mut a, mut b) = (1.0, ((n_neg + 1.0) / (n_pos + 1.0)).ln() * -1.0);
    let mut obj = objective(a, b);
    for _ in 0..100 {
        let (mut ga, mut gb, mut haa, mut hab, mut hbb) = (0.0, 0.0, 1e-12, 0.0, 1e-12);
        for (&fi, &ti) in f.iter().zip(&t) {
            let p = sigmoid(a * fi + b);
            let r = p - ti;
            let w = p * (1.0 - p);
            ga += r * fi;
            gb += r;
            haa += w * fi * fi;
            hab += w * fi;
            hbb += w;
        }
        if ga.abs() < 1e-10 && gb.abs() < 1e-10 {
            break;
        }
        let det = haa * hbb - hab * hab;
        if det.abs() < 1e-300 {
            break;
        }
        let da = (hbb * ga - hab * gb) / det;
        let db = (haa * gb - hab * ga) / det;
        let mut step = 1.0;
        let mut improved = false;
        while step > 1e-10 {
            let (na, nb) = (a - step * da, b - step * db);
            let no = objective(na, nb);
            if no < obj + 1e-4 * step * (ga * -da + gb * -db) {
                a = na;
                b = nb;
                obj = no;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (a, b)
}

pub(crate) fn kernel_matrix(x: &Matrix, gamma: f64) -> Vec<f64> {
    let n = x.rows();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        k[i * n + i] = 1.0;
        for j in 0..i {
            let v = rbf(gamma, x.row(i), x.row(j));
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    k
}

pub fn train_svm_rbf(x: &Matrix, y: &[u8], hyper: &SvmHyper) -> Result<TrainedModel> {
    let (model, solution) = fit_svm(x, y, hyper)?;
    Ok(TrainedModel {
        format_version: MODEL_FORMAT_VERSION,
        feature_count: x.cols(),
        meta: TrainingMeta {
            seed: 0,
            hyperparameters: serde_json::to_value(hyper)?,
            loss_trace: Vec::new(),
            converged: solution.converged,
        },
        model: ModelParams::SvmRbf(model),
    })
}

/// Trains and also returns the full dual solution over the training rows.
pub fn fit_svm(x: &Matrix, y: &[u8], hyper: &SvmHyper) -> Result<(SvmModel, SmoSolution)> {
    validate_training(x, y)?;
    let gamma = hyper.gamma.unwrap_or(1.0 / x.cols().max(1) as f64);
    if !(hyper.c > 0.0) || !(gamma > 0.0) {
        return Err(Error::Config("SVM requires C > 0 and gamma > 0".into()));
    }
    if !(hyper.tol > 0.0) {
        return Err(Error::Config("SVM tol must be positive".into()));
    }
    let scaler = Standardizer::fit(x);
    let xs = scaler.transform(x);
    let ys: Vec<f64> = y.iter().map(|&v| if v == 1 { 1.0 } else { -1.0 }).collect();
    let k = kernel_matrix(&xs, gamma);
    let sol = smo(&k, &ys, hyper.c, hyper.tol, hyper.max_passes);

    let n = xs.rows();
    let sv: Vec<usize> = (0..n).filter(|&i| sol.alpha[i] > 0.0).collect();
    let decision: Vec<f64> = (0..n)
        .map(|i| {
            sv.iter().map(|&s| sol.alpha[s] * ys[s] * k[i * n + s]).sum::<f64>() + sol.bias
        })
        .collect();
    let (platt_a, platt_b) = fit_platt(&decision, &ys);
    let model = SvmModel {
        support: xs.select_rows(&sv),
        dual_coef: sv.iter().map(|&s| sol.alpha[s] * ys[s]).collect(),
        scaler,
        gamma,
        bias: sol.bias,
        platt_a,
        platt_b,
    };
    Ok((model, sol))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_points_are_symmetric_support_vectors() {
        let x = Matrix::from_rows(&[[0.0, 0.0], [1.0, 2.0]]).unwrap();
        let (m, sol) = fit_svm(&x, &[0, 1], &SvmHyper { tol: 1e-9, ..Default::default() }).unwrap();
        assert!(sol.alpha.iter().all(|&a| a > 0.0));
        let f0 = m.decision(&x.row(0)[..]);
        let f1 = m.decision(&x.row(1)[..]);
        assert!((f0 + f1).abs() < 1e-8, "{f0} {f1}");
        assert!(f0 < 0.0 && f1 > 0.0);
    }

    #[test]
    fn xor_is_separated() {
        let x = Matrix::from_rows(&[[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]]).unwrap();
        let y = [0, 0, 1, 1];
        let (m, _) = fit_svm(&x, &y, &SvmHyper { c: 10.0, gamma: Some(1.0), ..Default::default() }).unwrap();
        for (r, &label) in x.iter_rows().zip(&y) {
            assert_eq!(u8::from(m.decision(r) > 0.0), label);
            assert_eq!(u8::from(m.proba(r) >= 0.5), label);
        }
    }

    #[test]
    fn dual_feasibility() {
        let x = Matrix::from_rows(&[[0.0], [0.4], [0.5], [1.0], [0.45], [0.9]]).unwrap();
        let y = [0, 0, 1, 1, 1, 0];
        let (_, sol) = fit_svm(&x, &y, &SvmHyper { c: 2.0, gamma: Some(0.5), ..Default::default() }).unwrap();
        let mut s = 0.0;
        for (a, &l) in sol.alpha.iter().zip(&y) {
            assert!((0.0..=2.0).contains(a));
            s += a * if l == 1 { 1.0 } else { -1.0 };
        }
        assert!(s.abs() < 1e-3);
    }

    #[test]
    fn invalid_hyper() {
        let x = Matrix::from_rows(&[[0.0], [1.0]]).unwrap();
        assert!(matches!(fit_svm(&x, &[0, 1], &SvmHyper { c: 0.0, ..Default::default() }), Err(Error::Config(_))));
        assert!(matches!(
            fit_svm(&x, &[0, 1], &SvmHyper { gamma: Some(-1.0), ..Default::default() }),
            Err(Error::Config(_))
        ));
    }
}
