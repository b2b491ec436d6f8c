//! Forward problem: fundamental solutions, characteristic determinants, the
//! Weyl-Yurko matrix, eigenvalues, weight numbers and Weyl solutions.
//!
//! Problem indices `k` and eigenvalue indices `l` are 1-based, as are the
//! solution indices `j` in `delta`. Matrix storage is 0-based.

mod asymptotics;
pub(crate) mod ode;
mod spectrum;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Condition, Error, Result};
use crate::funcspace::GridFunction;
use crate::quasidiff::{build_f, build_fstar, AssociatedMatrix, CoefficientSet};
use ode::{SparseSystem, SubsetBasis};

pub use asymptotics::{asymptotics_report, AsymptoticsReport};
/// Secant step size, relative to `|τ|`, at which a root counts as converged.
pub const ROOT_TOL: f64 = 1e-13;
/// Relative agreement of the characteristic function between substep doublings.
pub const SUBSTEP_AGREEMENT: f64 = 1e-9;
/// Accepted `|Δ_{k,k}(τ*)| / |Δ_{k,k}(τ* + 1/4)|` at a located root.
pub const RESIDUAL_RATIO: f64 = 1e-7;
/// `|Δ'_{k,k}| · gap / scale` below which a root is treated as multiple.
pub const MULTIPLE_RATIO: f64 = 1e-6;
/// `|Δ_{k,k}| / max_j |Δ_{j,k}|` below which `λ` is treated as a pole.
pub const POLE_TOL: f64 = 1e-10;
/// Relative distance below which two eigenvalues count as equal.
pub const DISTINCT_TOL: f64 = 1e-12;
/// Largest spread of growth exponents across one shooting segment of a Weyl solution.
pub const SEGMENT_GROWTH: f64 = 8.0;

pub use spectrum::{find_eigenvalues, lambda_to_tau, spectral_data, tau_to_lambda, weight_numbers};

/// Quasi-derivative matrix of the fundamental system at every node.
#[derive(Debug, Clone)]
pub struct FundamentalTrajectory {
    n: usize,
    data: Vec<Complex64>,
}

impl FundamentalTrajectory {
    /// Quasi-derivative of order `row` of the solution `col` (both 0-based) at node `i`.
    pub fn entry(&self, i: usize, row: usize, col: usize) -> Complex64 {
        let n = self.n;
        self.data[i * n * n + col * n + row]
    }

    pub fn at(&self, i: usize) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.n, self.n, |r, c| self.entry(i, r, c))
    }

    pub fn grid_size(&self) -> usize {
        self.data.len() / (self.n * self.n) - 1
    }
}

/// Quasi-derivatives `y^[0..n-1]` of one solution at every node.
#[derive(Debug, Clone)]
pub struct QuasiTrajectory {
    n: usize,
    data: Vec<Complex64>,
}

impl QuasiTrajectory {
    pub fn order(&self) -> usize {
        self.n
    }

    pub fn grid_size(&self) -> usize {
        self.data.len() / self.n - 1
    }

    pub fn state(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// The quasi-derivative of order `nu` as a grid function.
    pub fn component(&self, nu: usize) -> GridFunction {
        let values = self.data.iter().skip(nu).step_by(self.n).copied().collect();
        GridFunction::new(values, 0).expect("trajectories span at least one interval")
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }
}

/// `M(λ)`: unit lower triangular, `M_{j,k} = -Δ_{j,k}/Δ_{k,k}` below the diagonal.
#[derive(Debug, Clone)]
pub struct WeylYurkoMatrix {
    pub lambda: Complex64,
    pub entries: DMatrix<Complex64>,
}

/// One eigenvalue with its weight number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralDatum {
    pub l: usize,
    pub k: usize,
    pub lambda: Complex64,
    pub beta: Complex64,
}

/// `{λ_{l,k}, β_{l,k}}` for `l = 1..N`, `k = 1..n-1`, sorted by `(k, l)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDataSet {
    n: usize,
    count: usize,
    data: Vec<SpectralDatum>,
}

impl SpectralDataSet {
    pub fn new(n: usize, count: usize, mut data: Vec<SpectralDatum>) -> Result<Self> {
        if n < 2 || count == 0 {
            return Err(Error::InvalidInput(format!("need n >= 2 and N >= 1, got n = {n}, N = {count}")));
        }
        data.sort_by_key(|d| (d.k, d.l));
        let expected = (n - 1) * count;
        if data.len() != expected {
            return Err(Error::InvalidInput(format!(
                "expected {expected} entries for n = {n}, N = {count}, got {}",
                data.len()
            )));
        }
        for (idx, d) in data.iter().enumerate() {
            let (k, l) = (idx / count + 1, idx % count + 1);
            if d.k != k || d.l != l {
                return Err(Error::InvalidInput(format!(
                    "entry (l = {}, k = {}) out of place; indices must cover l = 1..{count}, k = 1..{}",
                    d.l,
                    d.k,
                    n - 1
                )));
            }
            let finite = [d.lambda.re, d.lambda.im, d.beta.re, d.beta.im].iter().all(|v| v.is_finite());
            if !finite {
                return Err(Error::InvalidInput(format!("non-finite value at (l = {l}, k = {k})")));
            }
        }
        Ok(Self { n, count, data })
    }

    pub fn order(&self) -> usize {
        self.n
    }

    /// Truncation level `N`.
    pub fn count(&self) -> usize {
        self.count
    }

    pub fn data(&self) -> &[SpectralDatum] {
        &self.data
    }

    pub fn get(&self, l: usize, k: usize) -> &SpectralDatum {
        &self.data[(k - 1) * self.count + l - 1]
    }

    pub fn get_mut(&mut self, l: usize, k: usize) -> &mut SpectralDatum {
        &mut self.data[(k - 1) * self.count + l - 1]
    }

    pub fn lambda(&self, l: usize, k: usize) -> Complex64 {
        self.get(l, k).lambda
    }

    pub fn beta(&self, l: usize, k: usize) -> Complex64 {
        self.get(l, k).beta
    }

    /// Eigenvalues of problem `k` in order of `l`.
    pub fn eigenvalues(&self, k: usize) -> Vec<Complex64> {
        (1..=self.count).map(|l| self.lambda(l, k)).collect()
    }

    /// Distinct eigenvalues within each problem, disjoint adjacent spectra and
    /// nonzero weights.
    pub fn check_conditions(&self) -> Result<()> {
        let close = |a: Complex64, b: Complex64| (a - b).norm() <= DISTINCT_TOL * a.norm().max(b.norm()).max(1.0);
        for k in 1..self.n {
            for l in 1..=self.count {
                for l2 in l + 1..=self.count {
                    if close(self.lambda(l, k), self.lambda(l2, k)) {
                        return Err(Error::validation(
                            Condition::S1,
                            format!("eigenvalues not distinct: lambda_({l},{k}) = lambda_({l2},{k})"),
                        ));
                    }
                }
            }
        }
        for k in 1..self.n - 1 {
            for l in 1..=self.count {
                for l2 in 1..=self.count {
                    if close(self.lambda(l, k), self.lambda(l2, k + 1)) {
                        return Err(Error::validation(
                            Condition::S2,
                            format!("adjacent spectra intersect: lambda_({l},{k}) = lambda_({l2},{})", k + 1),
                        ));
                    }
                }
            }
        }
        for d in &self.data {
            if d.beta.norm() == 0.0 {
                return Err(Error::validation(
                    Condition::S3,
                    format!("weight number beta_({},{}) is zero", d.l, d.k),
                ));
            }
        }
        Ok(())
    }
}

/// Associated matrices of a coefficient set, built once and shared.
#[derive(Debug, Clone)]
pub(crate) struct Operator {
    f: AssociatedMatrix,
    fstar: AssociatedMatrix,
}

impl Operator {
    pub fn new(c: &CoefficientSet) -> Self {
        let f = build_f(c);
        let fstar = build_fstar(&f);
        Self { f, fstar }
    }

    pub fn order(&self) -> usize {
        self.f.order()
    }

    pub fn system(&self, lambda: Complex64, star: bool) -> SparseSystem {
        SparseSystem::new(if star { &self.fstar } else { &self.f }, lambda)
    }
}

/// Solution columns (0-based, sorted) and sign for `Δ_{j,k}`.
fn delta_columns(n: usize, j: usize, k: usize) -> (Vec<usize>, f64) {
    if j == k {
        ((k..n).collect(), 1.0)
    } else {
        let cols = (k - 1..n).filter(|&c| c != j - 1).collect();
        (cols, if (j - k - 1).is_multiple_of(2) { 1.0 } else { -1.0 })
    }
}

/// Dominant growth exponent of `m`-vectors for this system.
pub(crate) fn wedge_shift(sys: &SparseSystem, m: usize) -> f64 {
    sys.growth_rates().iter().take(m).sum()
}

/// `Δ_{j,k}(λ) e^{-shift}` on the given system.
pub(crate) fn delta_scaled(sys: &SparseSystem, j: usize, k: usize, shift: f64, substeps: usize) -> Result<Complex64> {
    let n = sys.order();
    let m = n - k;
    let basis = SubsetBasis::new(n, m);
    let (cols, sign) = delta_columns(n, j, k);
    let w = ode::wedge_at_end(sys, &basis, &cols, shift, substeps)?;
    let rows: Vec<usize> = (0..m).collect();
    let reversal = if (m * (m - 1) / 2).is_multiple_of(2) { 1.0 } else { -1.0 };
    Ok(w[basis.index_of(&rows)] * (sign * reversal))
}

fn check_delta_indices(n: usize, j: usize, k: usize) -> Result<()> {
    if k == 0 || k >= n || j < k || j > n {
        return Err(Error::InvalidInput(format!(
            "delta needs 1 <= k <= n-1 and k <= j <= n, got j = {j}, k = {k}, n = {n}"
        )));
    }
    Ok(())
}

/// Quasi-derivatives of the fundamental solutions at every node.
pub fn integrate_fundamental(c: &CoefficientSet, lambda: Complex64, star: bool) -> Result<FundamentalTrajectory> {
    let sys = Operator::new(c).system(lambda, star);
    let data = ode::fundamental_trajectory(&sys, sys.default_substeps())?;
    Ok(FundamentalTrajectory { n: c.order(), data })
}

/// The characteristic determinant `Δ_{j,k}(λ)`.
pub fn delta(c: &CoefficientSet, j: usize, k: usize, lambda: Complex64) -> Result<Complex64> {
    check_delta_indices(c.order(), j, k)?;
    let sys = Operator::new(c).system(lambda, false);
    delta_scaled(&sys, j, k, 0.0, sys.default_substeps())
}

/// `M(λ)` for a 0-based column `col` (`k = col + 1`), with all determinants
/// scaled by a common positive factor.
fn weyl_column(sys: &SparseSystem, k: usize) -> Result<Vec<Complex64>> {
    let n = sys.order();
    let mut col = vec![Complex64::new(0.0, 0.0); n];
    col[k - 1] = Complex64::new(1.0, 0.0);
    if k == n {
        return Ok(col);
    }
    let shift = wedge_shift(sys, n - k);
    let substeps = sys.default_substeps();
    let dkk = delta_scaled(sys, k, k, shift, substeps)?;
    let mut others = Vec::with_capacity(n - k);
    for j in k + 1..=n {
        others.push(delta_scaled(sys, j, k, shift, substeps)?);
    }
    let scale = others.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if !(dkk.norm() > POLE_TOL * scale) {
        return Err(Error::Pole {
            lambda: sys.lambda(),
            column: k,
        });
    }
    for (j, v) in (k + 1..=n).zip(others) {
        col[j - 1] = -v / dkk;
    }
    Ok(col)
}

/// The Weyl-Yurko matrix of the operator at `λ`.
pub fn weyl_matrix(c: &CoefficientSet, lambda: Complex64) -> Result<WeylYurkoMatrix> {
    let sys = Operator::new(c).system(lambda, false);
    let n = c.order();
    let mut entries = DMatrix::zeros(n, n);
    for k in 1..=n {
        let col = weyl_column(&sys, k)?;
        for (j, v) in col.into_iter().enumerate() {
            entries[(j, k - 1)] = v;
        }
    }
    Ok(WeylYurkoMatrix { lambda, entries })
}

pub(crate) fn weyl_solution_op(op: &Operator, k: usize, lambda: Complex64, star: bool) -> Result<QuasiTrajectory> {
    let n = op.order();
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!("Weyl solution index {k} outside 1..={n}")));
    }
    let sys = op.system(lambda, star);
    let y0 = weyl_column(&sys, k)?;
    let rates = sys.growth_rates();
    let spread = rates[0] - rates[n - 1];
    let grid = op.f.grid_size();
    let segments = ((spread / SEGMENT_GROWTH).ceil() as usize).clamp(1, grid);
    let data = if segments == 1 {
        ode::solution_trajectory(&sys, &y0, sys.default_substeps())?
    } else {
        shoot(&sys, k, grid, segments)?
    };
    Ok(QuasiTrajectory { n, data })
}

/// `Φ_k` by multiple shooting: the `k` conditions at 0, the `n - k` at 1 and
/// continuity at the segment joints form one block system. Integrating a
/// decaying solution forward over the whole interval would amplify rounding
/// by the full spread of growth exponents.
fn shoot(sys: &SparseSystem, k: usize, grid: usize, segments: usize) -> Result<Vec<Complex64>> {
    let n = sys.order();
    let bounds: Vec<usize> = (0..=segments).map(|j| j * grid / segments).collect();
    let fund = ode::segment_fundamentals(sys, &bounds, sys.default_substeps())?;
    let end = |j: usize| {
        let last = bounds[j + 1] - bounds[j];
        DMatrix::from_column_slice(n, n, &fund[j][last * n * n..(last + 1) * n * n])
    };
    let size = n * segments;
    let mut a = DMatrix::<Complex64>::zeros(size, size);
    let mut b = nalgebra::DVector::<Complex64>::zeros(size);
    let one = Complex64::new(1.0, 0.0);
    for i in 0..k {
        a[(i, i)] = one;
    }
    b[k - 1] = one;
    let mut row = k;
    for j in 0..segments - 1 {
        let y = end(j);
        for i in 0..n {
            for c in 0..n {
                a[(row + i, j * n + c)] = y[(i, c)];
            }
            a[(row + i, (j + 1) * n + i)] = -one;
        }
        row += n;
    }
    let y = end(segments - 1);
    for i in 0..n - k {
        for c in 0..n {
            a[(row + i, (segments - 1) * n + c)] = y[(i, c)];
        }
    }
    let mut s = a.lu().solve(&b).ok_or(Error::Pole {
        lambda: sys.lambda(),
        column: k,
    })?;
    // the prescribed values at 0, without the rounding of the solve
    s.rows_mut(0, k).copy_from(&b.rows(0, k));
    let mut data = Vec::with_capacity((grid + 1) * n);
    for j in 0..segments {
        let start = DMatrix::from_column_slice(n, 1, &s.as_slice()[j * n..(j + 1) * n]);
        let nodes = bounds[j + 1] - bounds[j] + usize::from(j + 1 == segments);
        for i in 0..nodes {
            let yi = DMatrix::from_column_slice(n, n, &fund[j][i * n * n..(i + 1) * n * n]);
            data.extend((yi * &start).iter().copied());
        }
    }
    Ok(data)
}

/// `Φ_k(·, λ)` (or `Φ*_k` for the star system) with all quasi-derivatives.
pub fn weyl_solution(c: &CoefficientSet, k: usize, lambda: Complex64, star: bool) -> Result<QuasiTrajectory> {
    weyl_solution_op(&Operator::new(c), k, lambda, star)
}

/// Solution of the (star) system from arbitrary initial quasi-derivatives.
pub fn solve_initial(c: &CoefficientSet, y0: &[Complex64], lambda: Complex64, star: bool) -> Result<QuasiTrajectory> {
    if y0.len() != c.order() {
        return Err(Error::DimensionMismatch {
            expected: c.order(),
            got: y0.len(),
        });
    }
    let sys = Operator::new(c).system(lambda, star);
    let data = ode::solution_trajectory(&sys, y0, sys.default_substeps())?;
    Ok(QuasiTrajectory { n: c.order(), data })
}
