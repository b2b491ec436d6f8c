//! Eigenvalues as zeros of `Δ_{k,k}` and the weight numbers attached to them.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};

use num_complex::Complex64;

use super::ode::SparseSystem;
use super::{
    delta_scaled, wedge_shift, Operator, SpectralDataSet, SpectralDatum, MULTIPLE_RATIO, RESIDUAL_RATIO, ROOT_TOL,
    SUBSTEP_AGREEMENT,
};
use crate::error::{Error, Result};
use crate::par;
use crate::quasidiff::CoefficientSet;

fn sector_sign(n: usize, k: usize) -> f64 {
    if (n - k).is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// `λ = (-1)^{n-k} (π τ / sin(πk/n))^n`.
pub fn tau_to_lambda(n: usize, k: usize, tau: Complex64) -> Complex64 {
    let s = (PI * k as f64 / n as f64).sin();
    (tau * (PI / s)).powu(n as u32) * sector_sign(n, k)
}

/// Inverse of [`tau_to_lambda`] on the principal branch.
pub fn lambda_to_tau(n: usize, k: usize, lambda: Complex64) -> Complex64 {
    let z = lambda * sector_sign(n, k);
    if z.norm() == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let s = (PI * k as f64 / n as f64).sin();
    z.powf(1.0 / n as f64) * (s / PI)
}

/// `Δ_{k,k}` along the `τ` coordinate with frozen scaling and step count.
struct Characteristic<'a> {
    op: &'a Operator,
    n: usize,
    k: usize,
    shift: f64,
    substeps: usize,
}

impl<'a> Characteristic<'a> {
    /// Scaling and substeps fixed from `seed`; substeps doubled until two
    /// successive values agree to 1e-9.
    fn new(op: &'a Operator, k: usize, seed: Complex64) -> Result<Self> {
        let n = op.order();
        let sys = op.system(tau_to_lambda(n, k, seed + 1.0), false);
        let mut me = Self {
            op,
            n,
            k,
            shift: wedge_shift(&op.system(tau_to_lambda(n, k, seed), false), n - k),
            substeps: sys.default_substeps(),
        };
        let probe = seed + 0.3;
        let mut prev = me.at_tau(probe)?;
        for _ in 0..6 {
            me.substeps *= 2;
            let next = me.at_tau(probe)?;
            let agree = (next - prev).norm() <= SUBSTEP_AGREEMENT * next.norm().max(prev.norm());
            prev = next;
            if agree {
                me.substeps /= 2;
                break;
            }
        }
        Ok(me)
    }

    fn system(&self, lambda: Complex64) -> SparseSystem {
        self.op.system(lambda, false)
    }

    fn at_lambda(&self, j: usize, lambda: Complex64) -> Result<Complex64> {
        delta_scaled(&self.system(lambda), j, self.k, self.shift, self.substeps)
    }

    fn at_tau(&self, tau: Complex64) -> Result<Complex64> {
        self.at_lambda(self.k, tau_to_lambda(self.n, self.k, tau))
    }

    /// Secant iteration in `τ` from `seed`.
    fn refine(&self, seed: Complex64) -> Option<Complex64> {
        let mut t0 = seed;
        let mut t1 = seed + 0.05;
        let mut f0 = self.at_tau(t0).ok()?;
        let mut f1 = self.at_tau(t1).ok()?;
        for _ in 0..80 {
            let denom = f1 - f0;
            if denom.norm() == 0.0 {
                break;
            }
            let mut step = f1 * (t1 - t0) / denom;
            if step.norm() > 0.5 {
                step *= 0.5 / step.norm();
            }
            let t2 = t1 - step;
            t0 = t1;
            f0 = f1;
            t1 = t2;
            f1 = self.at_tau(t1).ok()?;
            if step.norm() < ROOT_TOL * t1.norm().max(1.0) || f1.norm() == 0.0 {
                return Some(t1);
            }
        }
        if (t1 - t0).norm() < 1e-10 * t1.norm().max(1.0) {
            Some(t1)
        } else {
            None
        }
    }
}

/// Offset `θ_k` of the zero-coefficient operator: `τ_l ≈ l + θ_k`.
fn zero_theta(n: usize, k: usize) -> Result<f64> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), f64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(v) = cache.lock().expect("theta cache poisoned").get(&(n, k)) {
        return Ok(*v);
    }
    let theta = estimate_zero_theta(n, k)?;
    cache.lock().expect("theta cache poisoned").insert((n, k), theta);
    Ok(theta)
}

fn estimate_zero_theta(n: usize, k: usize) -> Result<f64> {
    let cs = CoefficientSet::zero(n, 200)?;
    let op = Operator::new(&cs);
    let scan: Vec<f64> = (0..400).map(|i| 0.05 + 0.02 * i as f64).collect();
    let values = par::map(&scan, |&t| {
        let tau = Complex64::new(t, 0.0);
        let sys = op.system(tau_to_lambda(n, k, tau), false);
        let shift = wedge_shift(&sys, n - k);
        delta_scaled(&sys, k, k, shift, sys.default_substeps() * 2).map(|v| v.norm())
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    let mut roots: Vec<Complex64> = Vec::new();
    for i in 1..scan.len() - 1 {
        if values[i] < values[i - 1] && values[i] <= values[i + 1] {
            let seed = Complex64::new(scan[i], 0.0);
            let ch = Characteristic::new(&op, k, seed)?;
            if let Some(r) = ch.refine(seed) {
                if roots.iter().all(|q| (q - r).norm() > 1e-6) && r.re > 0.0 {
                    roots.push(r);
                }
            }
        }
    }
    roots.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
    if roots.len() < 6 {
        return Err(Error::RootNotConverged { l: roots.len() + 1, k });
    }
    let j = 4;
    let mid = (roots[j].re + roots[j + 1].re) / 2.0;
    let counted = count_zeros(&op, k, mid)?;
    Ok(roots[j].re - counted as f64)
}

/// Winding number of `Δ_{k,k}` around `|λ| = |λ(τ_R)|`.
fn count_zeros(op: &Operator, k: usize, tau_r: f64) -> Result<i64> {
    let n = op.order();
    let radius = tau_to_lambda(n, k, Complex64::new(tau_r, 0.0)).norm();
    let substeps = op.system(Complex64::new(radius, 0.0), false).default_substeps();
    let eval = |alpha: f64| -> Result<Complex64> {
        let lambda = Complex64::from_polar(radius, alpha);
        let sys = op.system(lambda, false);
        let shift = wedge_shift(&sys, n - k);
        let v = delta_scaled(&sys, k, k, shift, substeps)?;
        Ok(v / v.norm().max(f64::MIN_POSITIVE))
    };
    let rate = radius.powf(1.0 / n as f64);
    let points = (8.0 * rate).ceil().max(64.0) as usize;
    let alphas: Vec<f64> = (0..=points).map(|i| 2.0 * PI * i as f64 / points as f64).collect();
    let values = par::map(&alphas, |&a| eval(a)).into_iter().collect::<Result<Vec<_>>>()?;
    let mut total = 0.0;
    for i in 0..points {
        total += arc_phase(&eval, alphas[i], alphas[i + 1], values[i], values[i + 1], 0)?;
    }
    Ok((total / (2.0 * PI)).round() as i64)
}

fn arc_phase(
    eval: &dyn Fn(f64) -> Result<Complex64>,
    a: f64,
    b: f64,
    fa: Complex64,
    fb: Complex64,
    depth: usize,
) -> Result<f64> {
    let d = (fb / fa).arg();
    if d.abs() <= PI / 4.0 || depth >= 16 {
        return Ok(d);
    }
    let mid = 0.5 * (a + b);
    let fm = eval(mid)?;
    Ok(arc_phase(eval, a, mid, fa, fm, depth + 1)? + arc_phase(eval, mid, b, fm, fb, depth + 1)?)
}

struct Located {
    lambda: Complex64,
    beta: Complex64,
}

fn locate(op: &Operator, k: usize, l: usize, theta: f64) -> Result<Located> {
    let n = op.order();
    let seed = Complex64::new(l as f64 + theta, 0.0);
    let ch = Characteristic::new(op, k, seed)?;
    let tau = ch.refine(seed).ok_or(Error::RootNotConverged { l, k })?;
    if (tau - seed).norm() > 0.5 {
        return Err(Error::RootNotConverged { l, k });
    }
    let lambda = tau_to_lambda(n, k, tau);
    let scale = ch.at_tau(tau + 0.25)?.norm();
    if ch.at_tau(tau)?.norm() > RESIDUAL_RATIO * scale {
        return Err(Error::RootNotConverged { l, k });
    }
    let gap = (tau_to_lambda(n, k, tau + 0.5) - tau_to_lambda(n, k, tau - 0.5)).norm();
    let h = 1e-3 * gap;
    let central = |h: f64| -> Result<Complex64> {
        let hp = Complex64::new(h, 0.0);
        Ok((ch.at_lambda(k, lambda + hp)? - ch.at_lambda(k, lambda - hp)?) / (2.0 * h))
    };
    let d1 = central(h)?;
    let d2 = central(2.0 * h)?;
    let derivative = (d1 * 4.0 - d2) / 3.0;
    if derivative.norm() * gap < MULTIPLE_RATIO * scale {
        return Err(Error::MultipleEigenvalue { l, k });
    }
    let numer = ch.at_lambda(k + 1, lambda)?;
    Ok(Located {
        lambda,
        beta: -numer / derivative,
    })
}

fn check_separation(taus: &[Complex64], k: usize) -> Result<()> {
    for (i, w) in taus.windows(2).enumerate() {
        if (w[1] - w[0]).norm() < 0.2 {
            return Err(Error::RootNotConverged { l: i + 2, k });
        }
    }
    Ok(())
}

fn locate_all(op: &Operator, k: usize, count: usize) -> Result<Vec<Located>> {
    let n = op.order();
    if k == 0 || k >= n {
        return Err(Error::InvalidInput(format!("problem index k = {k} outside 1..{}", n - 1)));
    }
    if count == 0 {
        return Ok(Vec::new());
    }
    let theta = zero_theta(n, k)?;
    let ls: Vec<usize> = (1..=count).collect();
    let found = par::map(&ls, |&l| locate(op, k, l, theta))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let taus: Vec<Complex64> = found.iter().map(|f| lambda_to_tau(n, k, f.lambda)).collect();
    check_separation(&taus, k)?;
    let counted = count_zeros(op, k, count as f64 + theta + 0.5)?;
    if counted != count as i64 {
        return Err(Error::ContourMismatch {
            k,
            counted,
            expected: count,
        });
    }
    Ok(found)
}

/// `λ_{1,k}, ..., λ_{N,k}`, verified complete by contour counting.
pub fn find_eigenvalues(c: &CoefficientSet, k: usize, count: usize) -> Result<Vec<Complex64>> {
    let op = Operator::new(c);
    Ok(locate_all(&op, k, count)?.into_iter().map(|f| f.lambda).collect())
}

/// Weight numbers `β = -Δ_{k+1,k} / Δ'_{k,k}` for located eigenvalues
/// (`eigenvalues[k - 1]` lists problem `k`).
pub fn weight_numbers(c: &CoefficientSet, eigenvalues: &[Vec<Complex64>]) -> Result<SpectralDataSet> {
    let n = c.order();
    if eigenvalues.len() != n - 1 {
        return Err(Error::DimensionMismatch {
            expected: n - 1,
            got: eigenvalues.len(),
        });
    }
    let count = eigenvalues[0].len();
    let op = Operator::new(c);
    let mut jobs = Vec::new();
    for (ki, list) in eigenvalues.iter().enumerate() {
        if list.len() != count {
            return Err(Error::DimensionMismatch {
                expected: count,
                got: list.len(),
            });
        }
        for (li, &lam) in list.iter().enumerate() {
            jobs.push((li + 1, ki + 1, lam));
        }
    }
    let data = par::map(&jobs, |&(l, k, lambda)| -> Result<SpectralDatum> {
        let tau = lambda_to_tau(n, k, lambda);
        let ch = Characteristic::new(&op, k, tau)?;
        let gap = (tau_to_lambda(n, k, tau + 0.5) - tau_to_lambda(n, k, tau - 0.5)).norm();
        let h = 1e-3 * gap;
        let central = |h: f64| -> Result<Complex64> {
            let hp = Complex64::new(h, 0.0);
            Ok((ch.at_lambda(k, lambda + hp)? - ch.at_lambda(k, lambda - hp)?) / (2.0 * h))
        };
        let derivative = (central(h)? * 4.0 - central(2.0 * h)?) / 3.0;
        let scale = ch.at_tau(tau + 0.25)?.norm();
        if derivative.norm() * gap < MULTIPLE_RATIO * scale {
            return Err(Error::MultipleEigenvalue { l, k });
        }
        Ok(SpectralDatum {
            l,
            k,
            lambda,
            beta: -ch.at_lambda(k + 1, lambda)? / derivative,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    SpectralDataSet::new(n, count, data)
}

/// Eigenvalues and weight numbers of all `n - 1` problems for `l <= count`.
pub fn spectral_data(c: &CoefficientSet, count: usize) -> Result<SpectralDataSet> {
    let n = c.order();
    let op = Operator::new(c);
    let mut data = Vec::with_capacity((n - 1) * count);
    for k in 1..n {
        for (i, f) in locate_all(&op, k, count)?.into_iter().enumerate() {
            data.push(SpectralDatum {
                l: i + 1,
                k,
                lambda: f.lambda,
                beta: f.beta,
            });
        }
    }
    SpectralDataSet::new(n, count, data)
}
