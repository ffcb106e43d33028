//! Slice-wise association estimates for one target variable.
//!
//! Given nodewise residuals `Z` and a slice plan, `nu[h]` is the mean of
//! `1{Y in J_h} Z` over the sample, `psi` holds each observation's
//! contribution to `nu` minus `nu` itself, and `omega = psi'psi / n` is the
//! plug-in asymptotic covariance of `sqrt(n) nu`.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Result, SdaError};
use crate::slicing::SlicePlan;

/// Diagonal entries of `omega` below this are degenerate slices.
pub const DEGENERATE_VARIANCE: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct SdaResult {
    pub target_index: usize,
    pub nu_hat: Vec<f64>,
    #[serde(skip)]
    pub omega_hat: DMatrix<f64>,
    pub z_scores: Vec<f64>,
    pub n: usize,
    pub h_count: usize,
    pub degenerate_slices: Vec<usize>,
}

impl SdaResult {
    pub fn omega_diag(&self) -> Vec<f64> {
        self.omega_hat.diagonal().iter().copied().collect()
    }

    pub fn is_degenerate(&self, h: usize) -> bool {
        self.degenerate_slices.contains(&h)
    }

    pub fn degenerate_mask(&self) -> Vec<bool> {
        (0..self.h_count).map(|h| self.is_degenerate(h)).collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "target_index": self.target_index,
            "nu_hat": self.nu_hat,
            "omega_diag": self.omega_diag(),
            "z_scores": self.z_scores,
            "degenerate_slices": self.degenerate_slices,
        })
    }
}

fn check_len(residuals: &[f64], plan: &SlicePlan) -> Result<()> {
    if residuals.len() != plan.n() {
        return Err(SdaError::mismatch(format!(
            "{} residuals for a plan over {} observations",
            residuals.len(),
            plan.n()
        )));
    }
    Ok(())
}

/// `nu[h] = (1/n) sum_{j in J_h} Z_j`.
pub fn estimate_sda(residuals: &[f64], plan: &SlicePlan) -> Result<Vec<f64>> {
    check_len(residuals, plan)?;
    let n = residuals.len() as f64;
    let mut nu = vec![0.0; plan.h_count];
    for (&z, &h) in residuals.iter().zip(&plan.assignment) {
        nu[h] += z;
    }
    nu.iter_mut().for_each(|v| *v /= n);
    Ok(nu)
}

/// `psi[(j, h)] = 1{j in J_h} Z_j - nu[h]`.
pub fn influence_matrix(residuals: &[f64], plan: &SlicePlan, nu_hat: &[f64]) -> Result<DMatrix<f64>> {
    check_len(residuals, plan)?;
    if nu_hat.len() != plan.h_count {
        return Err(SdaError::mismatch(format!(
            "nu_hat has {} entries for {} slices",
            nu_hat.len(),
            plan.h_count
        )));
    }
    let n = residuals.len();
    let mut psi = DMatrix::from_fn(n, plan.h_count, |_, h| -nu_hat[h]);
    for (j, (&z, &h)) in residuals.iter().zip(&plan.assignment).enumerate() {
        psi[(j, h)] += z;
    }
    Ok(psi)
}

/// `omega = (1/n) sum_j psi_j psi_j'`.
pub fn variance_estimate(psi: &DMatrix<f64>) -> DMatrix<f64> {
    let n = psi.nrows() as f64;
    let mut omega = psi.tr_mul(psi) / n;
    // exact symmetry
    let h = omega.nrows();
    for a in 0..h {
        for b in 0..a {
            let v = 0.5 * (omega[(a, b)] + omega[(b, a)]);
            omega[(a, b)] = v;
            omega[(b, a)] = v;
        }
    }
    omega
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZScores {
    pub z: Vec<f64>,
    pub degenerate: Vec<usize>,
}

/// `z[h] = sqrt(n) nu[h] / sqrt(omega[h, h])`. Degenerate slices get
/// `z = 0` and are listed; if every slice is degenerate the test has no
/// variance to work with and this fails.
pub fn z_scores(nu_hat: &[f64], omega_hat: &DMatrix<f64>, n: usize) -> Result<ZScores> {
    if omega_hat.nrows() != nu_hat.len() || omega_hat.ncols() != nu_hat.len() {
        return Err(SdaError::mismatch("omega_hat does not match nu_hat"));
    }
    let root_n = (n as f64).sqrt();
    let mut z = Vec::with_capacity(nu_hat.len());
    let mut degenerate = Vec::new();
    for (h, &nu) in nu_hat.iter().enumerate() {
        let var = omega_hat[(h, h)];
        if var < DEGENERATE_VARIANCE {
            degenerate.push(h);
            z.push(0.0);
        } else {
            z.push(root_n * nu / var.sqrt());
        }
    }
    if degenerate.len() == nu_hat.len() {
        return Err(SdaError::NoVarianceSignal);
    }
    Ok(ZScores { z, degenerate })
}

/// Full estimate for one target; also returns `psi` for the bootstrap.
pub fn analyze(target_index: usize, residuals: &[f64], plan: &SlicePlan) -> Result<(SdaResult, DMatrix<f64>)> {
    let nu_hat = estimate_sda(residuals, plan)?;
    let psi = influence_matrix(residuals, plan, &nu_hat)?;
    let omega_hat = variance_estimate(&psi);
    let zs = z_scores(&nu_hat, &omega_hat, residuals.len())?;
    Ok((
        SdaResult {
            target_index,
            nu_hat,
            omega_hat,
            z_scores: zs.z,
            n: residuals.len(),
            h_count: plan.h_count,
            degenerate_slices: zs.degenerate,
        },
        psi,
    ))
}
