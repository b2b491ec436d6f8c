//! Reconstruction of the coefficients from spectral data through the main
//! equation, working with data truncated at `l = N`.

mod kernel;
mod main_eq;
mod recovery;

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::forward::SpectralDataSet;

pub use kernel::build_g;
pub use main_eq::{
    assemble_system, solve_main_equation, solve_main_equation_with, MainEquationSystem, SolveReport,
    DEFAULT_SINGULAR_TOL, DET_CROSSING_TOL,
};
pub use recovery::{
    build_eta, coeffs_b_d, eta_map, model_phi, reconstruct, reconstruct_with_diagnostics, recover_phi,
    recover_weyl_check, series_t, EtaMap, PhiMap, Reconstruction, SeriesTable, WeylCheck,
};

/// `(l, k, ε)`: `ε = 0` tags the target data, `ε = 1` the model data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VIndex {
    pub l: usize,
    pub k: usize,
    pub eps: u8,
}

impl VIndex {
    pub fn new(l: usize, k: usize, eps: u8) -> Self {
        Self { l, k, eps }
    }

    /// `λ_{l,k,ε}` and `β_{l,k,ε}`.
    pub fn datum(&self, data: &SpectralDataSet, model: &SpectralDataSet) -> (Complex64, Complex64) {
        let set = if self.eps == 0 { data } else { model };
        let d = set.get(self.l, self.k);
        (d.lambda, d.beta)
    }
}

/// Distances `ξ_l` between target and model data, with `Ω` and `χ_l`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationProfile {
    n: usize,
    /// `xi[l - 1] = ξ_l`.
    pub xi: Vec<f64>,
    pub omega: f64,
    /// `chi[l - 1] = χ_l`.
    pub chi: Vec<f64>,
}

impl PerturbationProfile {
    pub fn xi(&self, l: usize) -> f64 {
        self.xi[l - 1]
    }

    /// Indices `l` with `ξ_l > 0`.
    pub fn active_levels(&self) -> Vec<usize> {
        (1..=self.xi.len()).filter(|&l| self.xi[l - 1] > 0.0).collect()
    }

    /// `w_{l,k}(x) = l^{-k} exp(-x π l cot(kπ/n))`.
    ///
    /// The exponent carries `π` because `ρ_{l,k} ~ π l / sin(kπ/n)`, so the
    /// Weyl solutions change like `exp(-x ρ cos(kπ/n))` along the grid.
    pub fn weight(&self, l: usize, k: usize, x: f64) -> f64 {
        growth_weight(self.n, l, k, x)
    }
}

pub(crate) fn growth_weight(n: usize, l: usize, k: usize, x: f64) -> f64 {
    let cot = 1.0 / (k as f64 * PI / n as f64).tan();
    (l as f64).powi(-(k as i32)) * (-x * PI * l as f64 * cot).exp()
}

fn chi(l: usize) -> f64 {
    // The tail beyond this bound is below 1e-15 relative.
    let upper = l + 200_000;
    let mut s = 0.0;
    for k in (1..=upper).rev() {
        let d = (l as f64 - k as f64).abs() + 1.0;
        s += 1.0 / ((k * k) as f64 * d * d);
    }
    s.sqrt()
}

pub fn perturbation_profile(data: &SpectralDataSet, model: &SpectralDataSet) -> Result<PerturbationProfile> {
    let (n, count) = (data.order(), data.count());
    if model.order() != n || model.count() != count {
        return Err(Error::InvalidInput(format!(
            "data (n = {n}, N = {count}) and model data (n = {}, N = {}) do not match",
            model.order(),
            model.count()
        )));
    }
    let xi: Vec<f64> = (1..=count)
        .map(|l| {
            let lf = l as f64;
            (1..n)
                .map(|k| {
                    lf.powi(-(n as i32 - 1)) * (data.lambda(l, k) - model.lambda(l, k)).norm()
                        + lf.powi(-(n as i32)) * (data.beta(l, k) - model.beta(l, k)).norm()
                })
                .sum()
        })
        .collect();
    let omega = xi
        .iter()
        .enumerate()
        .map(|(i, x)| ((i + 1) as f64).powi(n as i32 - 2) * x)
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt();
    Ok(PerturbationProfile {
        n,
        xi,
        omega,
        chi: (1..=count).map(chi).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::SpectralDatum;

    fn set(n: usize, count: usize, f: impl Fn(usize, usize) -> (f64, f64)) -> SpectralDataSet {
        let mut data = Vec::new();
        for k in 1..n {
            for l in 1..=count {
                let (lam, beta) = f(l, k);
                data.push(SpectralDatum {
                    l,
                    k,
                    lambda: Complex64::new(lam, 0.0),
                    beta: Complex64::new(beta, 0.0),
                });
            }
        }
        SpectralDataSet::new(n, count, data).unwrap()
    }

    #[test]
    fn profile_examples() {
        let model = set(3, 4, |l, k| ((l * 10 + k) as f64, 1.0 + l as f64));
        let same = perturbation_profile(&model, &model).unwrap();
        assert!(same.xi.iter().all(|&x| x == 0.0));
        assert_eq!(same.omega, 0.0);
        assert!(same.active_levels().is_empty());

        let mut data = model.clone();
        data.get_mut(1, 1).lambda += 1e-3;
        let p = perturbation_profile(&data, &model).unwrap();
        assert!((p.xi(1) - 1e-3).abs() < 1e-15);
        assert!((p.omega - 1e-3).abs() < 1e-15);
        assert_eq!(p.active_levels(), vec![1]);

        let expected = (PI.powi(4) / 90.0).sqrt();
        assert!((p.chi[0] - expected).abs() < 1e-12, "{} vs {expected}", p.chi[0]);
    }

    #[test]
    fn profile_rejects_mismatch() {
        let a = set(3, 4, |l, k| ((l * 10 + k) as f64, 1.0));
        let b = set(3, 5, |l, k| ((l * 10 + k) as f64, 1.0));
        assert!(perturbation_profile(&a, &b).is_err());
    }

    #[test]
    fn omega_is_homogeneous() {
        let model = set(4, 3, |l, k| ((l * 10 + k) as f64, 2.0));
        let shifted = |mag: f64| {
            let mut d = model.clone();
            for l in 1..=3 {
                d.get_mut(l, 2).lambda += mag * l as f64;
                d.get_mut(l, 1).beta -= mag;
            }
            perturbation_profile(&d, &model).unwrap().omega
        };
        let (a, b) = (shifted(1e-4), shifted(2e-4));
        assert!((b / a - 2.0).abs() < 1e-9);
    }
}
