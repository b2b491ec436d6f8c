use num_complex::Complex64;

use super::kernel::{eta_factor, index_solutions};
use super::main_eq::MainEquationSystem;
use super::VIndex;
use crate::error::{Error, Result};
use crate::forward::{weyl_solution_op, Operator, QuasiTrajectory, SpectralDataSet};
use crate::funcspace::{antiderivative, derivative_values, integrate, GridFunction};
use crate::quasidiff::{binomial, bracket_slices, star_classical_from_quasi, CoefficientDerivatives, CoefficientSet};

type C = Complex64;

/// Recovered `φ_v` with classical derivatives `0..=n-2`, for the active indices.
///
/// Indices with `ξ_l = 0` are not stored: there `φ_v = φ̃_v`, and their
/// `ε = 0/1` terms cancel in every series.
#[derive(Debug, Clone)]
pub struct PhiMap {
    n: usize,
    active: Vec<VIndex>,
    derivs: Vec<Vec<GridFunction>>,
}

/// `η̃_v` with classical derivatives `0..=n-2`, for the active indices.
#[derive(Debug, Clone)]
pub struct EtaMap {
    n: usize,
    active: Vec<VIndex>,
    derivs: Vec<Vec<GridFunction>>,
}

macro_rules! derivative_map {
    ($t:ty) => {
        impl $t {
            pub fn order(&self) -> usize {
                self.n
            }

            pub fn active(&self) -> &[VIndex] {
                &self.active
            }

            /// `j`-th derivative at index `v`, or `None` for an inactive index.
            pub fn derivative(&self, v: VIndex, j: usize) -> Option<&GridFunction> {
                let pos = self.active.binary_search(&v).ok()?;
                self.derivs[pos].get(j)
            }

            pub fn get(&self, v: VIndex) -> Option<&GridFunction> {
                self.derivative(v, 0)
            }
        }
    };
}

derivative_map!(PhiMap);
derivative_map!(EtaMap);

/// `φ` from the solved main equation: `φ_0 = w (ξ ψ_0 + ψ_1)`, `φ_1 = w ψ_1`.
///
/// Derivatives are those of `φ̃` plus numerical derivatives of `φ - φ̃`.
pub fn recover_phi(sys: &MainEquationSystem) -> Result<PhiMap> {
    let n = sys.model.order();
    let m = sys.grid_size();
    if sys.psi(0).is_none() {
        return Err(Error::InvalidInput("main equation has not been solved".into()));
    }
    let active = sys.active().to_vec();
    let mut derivs = Vec::with_capacity(active.len());
    for (pos, v) in active.iter().enumerate() {
        let block = pos / 2 * 2;
        let xi = sys.profile.xi(v.l);
        let model = &sys.solutions[pos].phi;
        let delta: Vec<C> = (0..=m)
            .map(|i| {
                let x = i as f64 / m as f64;
                let w = sys.profile.weight(v.l, v.k, x);
                let psi = sys.psi(i).expect("checked above");
                let phi = if v.eps == 0 {
                    (psi[block] * xi + psi[block + 1]) * w
                } else {
                    psi[block + 1] * w
                };
                phi - model.state(i)[0]
            })
            .collect();
        let mut correction = GridFunction::new(delta, 0)?;
        let mut row = Vec::with_capacity(n - 1);
        for j in 0..=n - 2 {
            if j > 0 {
                correction = derivative_values(&correction);
            }
            let values = (0..=m).map(|i| model.state(i)[j] + correction.values()[i]).collect();
            row.push(GridFunction::new(values, (n - 1 - j) as i32)?);
        }
        derivs.push(row);
    }
    Ok(PhiMap { n, active, derivs })
}

fn eta_derivatives(
    n: usize,
    k: usize,
    beta: C,
    star: &QuasiTrajectory,
    cd: &CoefficientDerivatives,
) -> Result<Vec<GridFunction>> {
    let m = star.grid_size();
    let c = eta_factor(n, k, beta);
    let classical: Vec<Vec<C>> = (0..=m)
        .map(|i| star_classical_from_quasi(n, star.state(i), cd, i))
        .collect();
    (0..=n - 2)
        .map(|j| GridFunction::new(classical.iter().map(|d| d[j] * c).collect(), (n - 1 - j) as i32))
        .collect()
}

/// `η̃_v = (-1)^{n-k} β_v Φ̃*_{n-k+1}(·, λ_v)` with classical derivatives `0..=n-2`.
pub fn build_eta(
    model: &CoefficientSet,
    v: VIndex,
    data: &SpectralDataSet,
    model_data: &SpectralDataSet,
) -> Result<Vec<GridFunction>> {
    let n = model.order();
    let (lambda, beta) = v.datum(data, model_data);
    let star = weyl_solution_op(&Operator::new(model), n - v.k + 1, lambda, true)?;
    eta_derivatives(n, v.k, beta, &star, &CoefficientDerivatives::new(model)?)
}

/// `η̃` for every active index of an assembled system.
pub fn eta_map(sys: &MainEquationSystem) -> Result<EtaMap> {
    let n = sys.model.order();
    let cd = CoefficientDerivatives::new(&sys.model)?;
    let active = sys.active().to_vec();
    let derivs = active
        .iter()
        .enumerate()
        .map(|(pos, v)| eta_derivatives(n, v.k, sys.values[pos].1, &sys.solutions[pos].star, &cd))
        .collect::<Result<Vec<_>>>()?;
    Ok(EtaMap { n, active, derivs })
}

fn sign(eps: u8) -> f64 {
    if eps == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `T_{j1,j2} = Σ_v (-1)^ε φ_v^(j1) η̃_v^(j2)`, for `j1 + j2 <= n - 2`.
pub fn series_t(phi: &PhiMap, eta: &EtaMap, j1: usize, j2: usize) -> Result<GridFunction> {
    let n = phi.n;
    if eta.n != n || eta.active != phi.active {
        return Err(Error::InvalidInput("φ and η̃ maps cover different indices".into()));
    }
    if j1 + j2 > n - 2 {
        return Err(Error::InvalidInput(format!(
            "T_{{{j1},{j2}}} needs j1 + j2 <= {}",
            n - 2
        )));
    }
    let m = match phi.derivs.first() {
        Some(row) => row[0].grid_size(),
        None => return Err(Error::InvalidInput("empty active set; T vanishes on any grid".into())),
    };
    let mut acc = vec![C::new(0.0, 0.0); m + 1];
    for (pos, v) in phi.active.iter().enumerate() {
        let (f, e) = (phi.derivs[pos][j1].values(), eta.derivs[pos][j2].values());
        let s = sign(v.eps);
        for i in 0..=m {
            acc[i] += f[i] * e[i] * s;
        }
    }
    GridFunction::new(acc, (n - 1 - j1 - j2) as i32)
}

/// The series `T_{j1,j2}`, `j1 + j2 <= n - 2`, on one grid.
#[derive(Debug, Clone)]
pub struct SeriesTable {
    n: usize,
    /// `table[j1][j2]`.
    table: Vec<Vec<GridFunction>>,
}

impl SeriesTable {
    pub fn new(phi: &PhiMap, eta: &EtaMap, grid_size: usize) -> Result<Self> {
        let n = phi.n;
        let table = (0..=n - 2)
            .map(|j1| {
                (0..=n - 2 - j1)
                    .map(|j2| {
                        if phi.active.is_empty() {
                            Ok(GridFunction::zeros(grid_size, (n - 1 - j1 - j2) as i32))
                        } else {
                            series_t(phi, eta, j1, j2)
                        }
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { n, table })
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn t_big(&self, j1: usize, j2: usize) -> &GridFunction {
        &self.table[j1][j2]
    }

    /// `t_{r,s} = Σ_{u=s}^{r-1} C_r^{u+1} C_u^s T_{r-u-1,u-s}`, for `s < r <= n - 2`.
    pub fn t_small(&self, r: usize, s: usize) -> GridFunction {
        assert!(s < r && r <= self.n - 2, "t_{{{r},{s}}} outside the stored range");
        let mut acc = GridFunction::zeros(self.table[0][0].grid_size(), (self.n - r + s) as i32);
        for u in s..r {
            let c = (binomial(r, u + 1) * binomial(u, s)) as f64;
            acc = &acc + &self.table[r - u - 1][u - s].scale(C::new(c, 0.0));
        }
        acc
    }
}

/// `b_j = C_n^{j+s+1} C_{j+s}^s + (-1)^{n-s} δ_{j,n-s-1}` for `j = 0..=n-s-1` and
/// `d_j = Σ_{i<=j} (-1)^{j-i} b_i` for `j = 0..=n-s-2`.
///
/// Fails unless the closure `b_{n-s-1} - d_{n-s-2}` vanishes.
pub fn coeffs_b_d(n: usize, s: usize) -> Result<(Vec<i64>, Vec<i64>)> {
    if n < 2 || s > n - 2 {
        return Err(Error::InvalidInput(format!("need 0 <= s <= n - 2, got n = {n}, s = {s}")));
    }
    let top = n - s - 1;
    let b: Vec<i64> = (0..=top)
        .map(|j| {
            let mut v = binomial(n, j + s + 1) * binomial(j + s, s);
            if j == top {
                v += if (n - s).is_multiple_of(2) { 1 } else { -1 };
            }
            v
        })
        .collect();
    let mut d: Vec<i64> = Vec::with_capacity(top);
    for j in 0..top {
        let prev = if j == 0 { 0 } else { d[j - 1] };
        d.push(b[j] - prev);
    }
    let closure = b[top] - d[top - 1];
    if closure != 0 {
        return Err(Error::Closure { n, s, value: closure });
    }
    Ok((b, d))
}

/// Reconstructed coefficients with the by-products used to build them.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub coefficients: CoefficientSet,
    pub series: SeriesTable,
    /// `(s, max_x |d/dx(Σ d_j T_{n-s-2-j,j}) - Σ b_j T_{n-s-1-j,j}|)` for `s >= 1`.
    pub telescoping: Vec<(usize, f64)>,
}

/// Coefficients from `φ` and `η̃`; see [`reconstruct_with_diagnostics`].
pub fn reconstruct(model: &CoefficientSet, phi: &PhiMap, eta: &EtaMap) -> Result<CoefficientSet> {
    reconstruct_with_diagnostics(model, phi, eta).map(|r| r.coefficients)
}

fn combination(series: &SeriesTable, terms: impl IntoIterator<Item = (i64, usize, usize)>, m: usize) -> GridFunction {
    let mut acc = GridFunction::zeros(m, 0);
    for (c, j1, j2) in terms {
        if c != 0 {
            acc = &acc + &series.t_big(j1, j2).scale(C::new(c as f64, 0.0));
        }
    }
    acc
}

/// For `s = n-2, ..., 0`:
/// `p_s = p̃_s - d/dx(Σ_j d_j T_{n-s-2-j,j}) + Σ_{j<=r<=n-s-3} (-1)^r C_r^j p̃_{r+s+1}^{(r-j)} T_{0,j} - Σ_{r>s} p_r t_{r,s}`.
///
/// `s = 0` is integrated once: `σ = σ̃ + c` with
/// `c = -Σ_j d_j T_{n-2-j,j} + ∫(rest)`, shifted to zero mean.
pub fn reconstruct_with_diagnostics(model: &CoefficientSet, phi: &PhiMap, eta: &EtaMap) -> Result<Reconstruction> {
    let n = model.order();
    let m = model.grid_size();
    if phi.n != n {
        return Err(Error::DimensionMismatch { expected: n, got: phi.n });
    }
    let series = SeriesTable::new(phi, eta, m)?;
    let cd = CoefficientDerivatives::new(model)?;
    let mut p: Vec<Option<GridFunction>> = vec![None; n - 1];
    let mut telescoping = Vec::new();
    let mut sigma = None;
    for s in (0..=n - 2).rev() {
        let (b, d) = coeffs_b_d(n, s)?;
        let inner = combination(&series, d.iter().enumerate().map(|(j, &dj)| (dj, n - s - 2 - j, j)), m);
        let mut rest = GridFunction::zeros(m, 0);
        for j in 0..(n - s).saturating_sub(2) {
            for r in j..=n - s - 3 {
                let sgn = if r % 2 == 0 { 1.0 } else { -1.0 };
                let c = C::new(sgn * binomial(r, j) as f64, 0.0);
                let pd = cd.get(r + s + 1, r - j);
                rest = &rest + &(pd * series.t_big(0, j)).scale(c);
            }
        }
        for r in s + 1..=n - 2 {
            let pr = p[r].as_ref().expect("higher coefficients are reconstructed first");
            rest = &rest - &(pr * &series.t_small(r, s));
        }
        if s >= 1 {
            let s1 = derivative_values(&inner);
            let direct = combination(&series, b.iter().enumerate().map(|(j, &bj)| (bj, n - s - 1 - j, j)), m);
            telescoping.push((s, (&s1 - &direct).sup_norm()));
            let tilde = model.p(s);
            let ps = &(tilde - &s1) + &rest;
            p[s] = Some(ps.with_smoothness(tilde.smoothness()));
        } else {
            let mut corr = &antiderivative(&rest, false) - &inner;
            let mean = integrate(&corr);
            corr = corr.map(|v| v - mean);
            let tilde = model.sigma();
            sigma = Some((tilde + &corr).with_smoothness(tilde.smoothness()));
        }
    }
    let p_out: Vec<GridFunction> = p.into_iter().skip(1).map(|v| v.expect("filled for s >= 1")).collect();
    let coefficients = CoefficientSet::new(n, sigma.expect("s = 0 is always visited"), p_out)?;
    telescoping.reverse();
    Ok(Reconstruction {
        coefficients,
        series,
        telescoping,
    })
}

/// Discrepancies of the recovered Weyl solutions at one `λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeylCheck {
    pub lambda: C,
    /// Index `k0 = 1..n-1`: `Φ_{k0} = Φ̃_{k0} + Σ ... ⟨·, Φ̃_{k0+1}⟩` as displayed,
    /// relative sup distance to the Weyl solution of the reconstruction.
    pub literal: Vec<f64>,
    /// Index `k0 = 1..n-1`: `Φ_{k0+1} = Φ̃_{k0+1} + Σ ... ⟨·, Φ̃_{k0+1}⟩`, same measure.
    pub consistent: Vec<f64>,
    /// Boundary residual `max(|Φ_{k0+1}(0)|, |Φ_{k0+1}(1)|)` of the consistent
    /// variant (the value at 1 only when `k0 + 1 < n`).
    pub boundary: Vec<f64>,
}

fn relative_distance(a: &[C], b: &[C]) -> f64 {
    let scale = b.iter().map(|v| v.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / scale
}

/// Evaluates the finite-sum Weyl-solution recovery at `λ` and compares it
/// with the Weyl solutions of `reconstructed`.
pub fn recover_weyl_check(
    sys: &MainEquationSystem,
    phi: &PhiMap,
    reconstructed: &CoefficientSet,
    lambda: C,
) -> Result<WeylCheck> {
    let n = sys.model.order();
    let m = sys.grid_size();
    let model_op = Operator::new(&sys.model);
    let rec_op = Operator::new(reconstructed);
    let mut check = WeylCheck {
        lambda,
        literal: Vec::new(),
        consistent: Vec::new(),
        boundary: Vec::new(),
    };
    for k0 in 1..n {
        let inner = weyl_solution_op(&model_op, k0 + 1, lambda, false)?;
        let mut sum = vec![C::new(0.0, 0.0); m + 1];
        for (pos, v) in phi.active.iter().enumerate() {
            let (lam_v, beta_v) = sys.values[pos];
            let c = eta_factor(n, v.k, beta_v) * sign(v.eps) / (lambda - lam_v);
            let star = &sys.solutions[pos].star;
            let f = phi.derivs[pos][0].values();
            for (i, acc) in sum.iter_mut().enumerate() {
                *acc += f[i] * bracket_slices(star.state(i), inner.state(i)) * c;
            }
        }
        let base = weyl_solution_op(&model_op, k0, lambda, false)?;
        let literal: Vec<C> = (0..=m).map(|i| base.state(i)[0] + sum[i]).collect();
        let consistent: Vec<C> = (0..=m).map(|i| inner.state(i)[0] + sum[i]).collect();
        let truth_lit = weyl_solution_op(&rec_op, k0, lambda, false)?;
        let truth_con = weyl_solution_op(&rec_op, k0 + 1, lambda, false)?;
        let values = |t: &QuasiTrajectory| (0..=m).map(|i| t.state(i)[0]).collect::<Vec<_>>();
        check.literal.push(relative_distance(&literal, &values(&truth_lit)));
        check.consistent.push(relative_distance(&consistent, &values(&truth_con)));
        let mut b = consistent[0].norm();
        if k0 + 1 < n {
            b = b.max(consistent[m].norm());
        }
        check.boundary.push(b);
    }
    Ok(check)
}

/// Model solutions are independent of the target data; this lets callers
/// evaluate `φ̃_v` for an inactive index without assembling a system.
pub fn model_phi(model: &CoefficientSet, v: VIndex, data: &SpectralDataSet, model_data: &SpectralDataSet) -> Result<GridFunction> {
    let (lambda, _) = v.datum(data, model_data);
    Ok(index_solutions(&Operator::new(model), v.k, lambda)?.phi.component(0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn b_d_examples() {
        assert_eq!(coeffs_b_d(3, 0).unwrap(), (vec![3, 3, 0], vec![3, 0]));
        assert_eq!(coeffs_b_d(3, 1).unwrap(), (vec![3, 3], vec![3]));
        assert_eq!(coeffs_b_d(2, 0).unwrap(), (vec![2, 2], vec![2]));
    }

    #[test]
    fn closure_holds_through_order_eight() {
        for n in 2..=8 {
            for s in 0..=n - 2 {
                assert!(coeffs_b_d(n, s).is_ok(), "n = {n}, s = {s}");
            }
        }
    }

    #[test]
    fn plain_sum_of_b_is_not_zero() {
        let (b, _) = coeffs_b_d(3, 0).unwrap();
        assert_eq!(b.iter().sum::<i64>(), 6);
    }
}
