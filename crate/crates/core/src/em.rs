//! Transductive refinement of predicted unseen-class Gaussians.
//!
//! A diagonal GMM over unlabeled test features, one component per unseen
//! class, initialized from the attribute-predicted parameters. Mixing
//! weights stay uniform for the whole run; only means and variances move.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::gaussian::{ClassGaussian, Scorer, VARIANCE_FLOOR};
use crate::linalg::Matrix;

/// Components whose total responsibility drops below this keep their parameters.
pub const COLLAPSE_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmConfig {
    pub max_iters: usize,
    pub rel_tol: f64,
    pub variance_floor: f64,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig {
            max_iters: 100,
            rel_tol: 1e-6,
            variance_floor: VARIANCE_FLOOR,
        }
    }
}

impl EmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(Error::Config("em max_iters must be at least 1".into()));
        }
        if self.rel_tol.is_nan() || self.rel_tol <= 0.0 {
            return Err(Error::Config(format!("em rel_tol must be positive, got {}", self.rel_tol)));
        }
        if self.variance_floor.is_nan() || self.variance_floor <= 0.0 {
            return Err(Error::Config(format!(
                "em variance_floor must be positive, got {}",
                self.variance_floor
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmResult {
    pub gaussians: Vec<ClassGaussian>,
    /// N_u × U, rows sum to one; computed under the final parameters.
    pub responsibilities: Matrix,
    /// Mixture log-likelihood of the initial parameters followed by one entry per iteration.
    pub log_likelihoods: Vec<f64>,
    pub iterations_run: usize,
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Responsibilities under uniform weights plus the mixture log-likelihood.
fn e_step(x: &Matrix, gs: &[ClassGaussian], exec: Exec) -> (Matrix, f64) {
    let u = gs.len();
    let log_weight = -(u as f64).ln();
    // one chunk per row: U responsibilities followed by the row's log normalizer
    let scorers: Vec<Scorer> = gs.iter().map(Scorer::new).collect();
    let mut buf = vec![0.0; x.rows() * (u + 1)];
    exec.fill_chunks(&mut buf, u + 1, |n, out| {
        let row = x.row(n);
        for (c, s) in scorers.iter().enumerate() {
            out[c] = log_weight + s.log_density(row);
        }
        let lse = log_sum_exp(&out[..u]);
        for v in out[..u].iter_mut() {
            *v = (*v - lse).exp();
        }
        out[u] = lse;
    });
    let mut resp = Vec::with_capacity(x.rows() * u);
    let mut ll = 0.0;
    for chunk in buf.chunks_exact(u + 1) {
        resp.extend_from_slice(&chunk[..u]);
        ll += chunk[u];
    }
    let resp = Matrix::new(x.rows(), u, resp).expect("rows*U responsibilities");
    (resp, ll)
}

fn m_step(x: &Matrix, resp: &Matrix, current: &[ClassGaussian], floor: f64) -> Result<Vec<ClassGaussian>> {
    let d = x.cols();
    current
        .iter()
        .enumerate()
        .map(|(c, g)| {
            let total: f64 = (0..x.rows()).map(|n| resp[(n, c)]).sum();
            if total < COLLAPSE_THRESHOLD {
                return Ok(g.clone());
            }
            let mut mean = vec![0.0; d];
            for (n, row) in x.row_iter().enumerate() {
                let r = resp[(n, c)];
                for (m, v) in mean.iter_mut().zip(row) {
                    *m += r * v;
                }
            }
            mean.iter_mut().for_each(|m| *m /= total);
            let mut var = vec![0.0; d];
            for (n, row) in x.row_iter().enumerate() {
                let r = resp[(n, c)];
                for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                    *s += r * (v - m) * (v - m);
                }
            }
            let var: Vec<f64> = var.iter().map(|s| (s / total).max(floor)).collect();
            ClassGaussian::from_variance(mean, &var)
        })
        .collect()
}

/// `Σ_n log[(1/U) Σ_c N(x_n | g_c)]`, evaluated with log-sum-exp.
pub fn gmm_log_likelihood(unlabeled: &Matrix, gaussians: &[ClassGaussian]) -> Result<f64> {
    check_inputs(unlabeled, gaussians)?;
    Ok(e_step(unlabeled, gaussians, Exec::default()).1)
}

fn check_inputs(x: &Matrix, gs: &[ClassGaussian]) -> Result<()> {
    if gs.is_empty() {
        return Err(Error::Config("mixture needs at least one component".into()));
    }
    if let Some(bad) = gs.iter().position(|g| g.dim() != x.cols()) {
        return Err(Error::dim(
            "em",
            format!("component {bad} has dim {}, data has {}", gs[bad].dim(), x.cols()),
        ));
    }
    Ok(())
}

pub fn em_refine(unlabeled: &Matrix, init: &[ClassGaussian], cfg: &EmConfig) -> Result<EmResult> {
    em_refine_with(unlabeled, init, cfg, Exec::default())
}

pub fn em_refine_with(
    unlabeled: &Matrix,
    init: &[ClassGaussian],
    cfg: &EmConfig,
    exec: Exec,
) -> Result<EmResult> {
    cfg.validate()?;
    check_inputs(unlabeled, init)?;
    if unlabeled.rows() < init.len() {
        return Err(Error::DataValidation(format!(
            "EM needs at least as many unlabeled rows ({}) as components ({})",
            unlabeled.rows(),
            init.len()
        )));
    }

    let mut gaussians = init.to_vec();
    let (mut resp, mut ll) = e_step(unlabeled, &gaussians, exec);
    let mut trace = vec![ll];
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        gaussians = m_step(unlabeled, &resp, &gaussians, cfg.variance_floor)?;
        let (r, next) = e_step(unlabeled, &gaussians, exec);
        iterations += 1;
        trace.push(next);
        resp = r;
        let converged = (next - ll).abs() / (1.0 + next.abs()) < cfg.rel_tol;
        ll = next;
        if converged {
            break;
        }
    }
    if !ll.is_finite() {
        return Err(Error::NonFinite { op: "em_refine" });
    }
    Ok(EmResult {
        gaussians,
        responsibilities: resp,
        log_likelihoods: trace,
        iterations_run: iterations,
    })
}
