use num_complex::Complex64;

use super::{lambda_to_tau, SpectralDataSet};
use crate::error::{Error, Result};

/// Empirical fit of the eigenvalue and weight-number asymptotics.
///
/// All per-problem vectors are indexed by `k - 1`, inner vectors by `l - 1`.
#[derive(Debug, Clone)]
pub struct AsymptoticsReport {
    pub theta: Vec<f64>,
    pub kappa: Vec<Vec<Complex64>>,
    /// `Σ_{l' <= l} |κ_{l',k}|²`.
    pub kappa_partial: Vec<Vec<f64>>,
    pub beta_leading: Vec<Complex64>,
    pub kappa0: Vec<Vec<Complex64>>,
    pub kappa0_partial: Vec<Vec<f64>>,
}

fn partial_sums(v: &[Complex64]) -> Vec<f64> {
    v.iter()
        .scan(0.0, |acc, x| {
            *acc += x.norm_sqr();
            Some(*acc)
        })
        .collect()
}

/// Fits `θ_k` and `β_k` over the upper half of the index range with unit slope
/// in `l`, so the low-index remainders do not bias the constants.
pub fn asymptotics_report(data: &SpectralDataSet) -> Result<AsymptoticsReport> {
    let (n, count) = (data.order(), data.count());
    if count < 10 {
        return Err(Error::InvalidInput(format!("asymptotics need N >= 10, got {count}")));
    }
    let tail = count / 2 + 1..=count;
    let tail_len = tail.clone().count() as f64;
    let mut report = AsymptoticsReport {
        theta: Vec::new(),
        kappa: Vec::new(),
        kappa_partial: Vec::new(),
        beta_leading: Vec::new(),
        kappa0: Vec::new(),
        kappa0_partial: Vec::new(),
    };
    for k in 1..n {
        let taus: Vec<Complex64> = (1..=count).map(|l| lambda_to_tau(n, k, data.lambda(l, k))).collect();
        let theta = tail.clone().map(|l| taus[l - 1].re - l as f64).sum::<f64>() / tail_len;
        let kappa: Vec<Complex64> = taus
            .iter()
            .enumerate()
            .map(|(i, t)| t - (i + 1) as f64 - theta)
            .collect();
        let scaled: Vec<Complex64> = (1..=count)
            .map(|l| data.beta(l, k) / (l as f64).powi(n as i32))
            .collect();
        let beta_k = tail.clone().map(|l| scaled[l - 1]).sum::<Complex64>() / tail_len;
        let kappa0: Vec<Complex64> = scaled.iter().map(|b| b - beta_k).collect();
        report.theta.push(theta);
        report.kappa_partial.push(partial_sums(&kappa));
        report.kappa.push(kappa);
        report.beta_leading.push(beta_k);
        report.kappa0_partial.push(partial_sums(&kappa0));
        report.kappa0.push(kappa0);
    }
    Ok(report)
}
