//! Associated matrices, the quasi-derivative systems of the operator and its
//! adjoint-type counterpart, and the Lagrange bracket.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::funcspace::{differentiate, GridFunction};

/// Order `n` of the differential expression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Order(usize);

impl Order {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidInput(format!("operator order must be >= 2, got {n}")));
        }
        Ok(Self(n))
    }

    pub fn get(self) -> usize {
        self.0
    }
}

/// Coefficients of `y^(n) + Σ p_k y^(k) = λ y`, with `p_0` carried by its
/// antiderivative `sigma`.
///
/// `p[k - 1]` holds `p_k` for `k = 1..n-2` and must be tagged at least `k - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSet {
    order: Order,
    sigma: GridFunction,
    p: Vec<GridFunction>,
}

impl CoefficientSet {
    pub fn new(n: usize, sigma: GridFunction, p: Vec<GridFunction>) -> Result<Self> {
        let order = Order::new(n)?;
        if p.len() != n - 2 {
            return Err(Error::InvalidCoefficients(format!(
                "order {n} needs {} functions p_1..p_(n-2), got {}",
                n - 2,
                p.len()
            )));
        }
        if sigma.smoothness() < 0 {
            return Err(Error::InvalidCoefficients("sigma must be square integrable".into()));
        }
        for (i, pk) in p.iter().enumerate() {
            let k = i + 1;
            if pk.grid_size() != sigma.grid_size() {
                return Err(Error::InvalidCoefficients(format!(
                    "p_{k} lives on M = {}, sigma on M = {}",
                    pk.grid_size(),
                    sigma.grid_size()
                )));
            }
            if pk.smoothness() < k as i32 - 1 {
                return Err(Error::InvalidCoefficients(format!(
                    "p_{k} must be tagged >= {}, got {}",
                    k - 1,
                    pk.smoothness()
                )));
            }
        }
        Ok(Self { order, sigma, p })
    }

    pub fn zero(n: usize, grid_size: usize) -> Result<Self> {
        let p = (1..n.max(2) - 1)
            .map(|k| GridFunction::zeros(grid_size, k as i32 + 1))
            .collect();
        Self::new(n, GridFunction::zeros(grid_size, 1), p)
    }

    pub fn order(&self) -> usize {
        self.order.get()
    }

    pub fn grid_size(&self) -> usize {
        self.sigma.grid_size()
    }

    pub fn sigma(&self) -> &GridFunction {
        &self.sigma
    }

    /// `p_k` for `1 <= k <= n - 2`.
    pub fn p(&self, k: usize) -> &GridFunction {
        &self.p[k - 1]
    }

    pub fn p_all(&self) -> &[GridFunction] {
        &self.p
    }

    /// Same operator with another admissible antiderivative `sigma + c`.
    pub fn with_sigma_shift(&self, c: Complex64) -> Self {
        Self {
            order: self.order,
            sigma: self.sigma.map(|v| v + c),
            p: self.p.clone(),
        }
    }

    /// Largest sample magnitude over all stored coefficients.
    pub fn sup_norm(&self) -> f64 {
        self.p.iter().map(|f| f.sup_norm()).fold(self.sigma.sup_norm(), f64::max)
    }
}

/// Sparse `n × n` matrix of grid functions defining quasi-derivatives.
/// Rows and columns are 0-based.
#[derive(Debug, Clone)]
pub struct AssociatedMatrix {
    n: usize,
    entries: Vec<(usize, usize, GridFunction)>,
    star: bool,
}

impl AssociatedMatrix {
    pub fn order(&self) -> usize {
        self.n
    }

    pub fn is_star(&self) -> bool {
        self.star
    }

    pub fn entries(&self) -> &[(usize, usize, GridFunction)] {
        &self.entries
    }

    pub fn grid_size(&self) -> usize {
        self.entries
            .first()
            .map(|(_, _, f)| f.grid_size())
            .expect("associated matrices always store at least one entry")
    }

    pub fn get(&self, row: usize, col: usize) -> Option<&GridFunction> {
        self.entries
            .iter()
            .find(|(r, c, _)| *r == row && *c == col)
            .map(|(_, _, f)| f)
    }

    /// Applies `f*_{k,j} = (-1)^{k+j+1} f_{n-j+1, n-k+1}` and flips the flag.
    fn mirrored(&self) -> Self {
        let n = self.n;
        let mut entries: Vec<_> = self
            .entries
            .iter()
            .map(|(a, b, f)| {
                let (r, c) = (n - 1 - b, n - 1 - a);
                let g = if (r + c + 1) % 2 == 1 { -f } else { f.clone() };
                (r, c, g)
            })
            .collect();
        entries.sort_by_key(|(r, c, _)| (*r, *c));
        Self {
            n,
            entries,
            star: !self.star,
        }
    }
}

/// The associated matrix `F` of the operator.
pub fn build_f(c: &CoefficientSet) -> AssociatedMatrix {
    let n = c.order();
    let sigma = c.sigma();
    let entries = if n == 2 {
        vec![
            (0, 0, -sigma),
            (1, 0, -&(sigma * sigma)),
            (1, 1, sigma.clone()),
        ]
    } else {
        let mut e = vec![(n - 2, 0, -sigma), (n - 1, 1, sigma - c.p(1))];
        for col in 2..n - 1 {
            e.push((n - 1, col, -c.p(col)));
        }
        e
    };
    AssociatedMatrix {
        n,
        entries,
        star: false,
    }
}

/// The mirrored sign-alternating matrix `F*`. The map is an involution:
/// applied to `F*` it returns `F`.
pub fn build_fstar(f: &AssociatedMatrix) -> AssociatedMatrix {
    f.mirrored()
}

/// Multiplier of `λ` in the closing entry `(n, 1)`: `1`, or `(-1)^n` for the star system.
pub fn closing_sign(n: usize, star: bool) -> f64 {
    if star && n % 2 == 1 {
        -1.0
    } else {
        1.0
    }
}

/// `A(x_i, λ)` of the first-order system `Y' = A Y` for the vector of
/// quasi-derivatives.
pub fn system_matrix(a: &AssociatedMatrix, lambda: Complex64, x_index: usize) -> DMatrix<Complex64> {
    let n = a.n;
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for r in 0..n - 1 {
        m[(r, r + 1)] = Complex64::new(1.0, 0.0);
    }
    m[(n - 1, 0)] += lambda * closing_sign(n, a.star);
    for (r, c, f) in &a.entries {
        m[(*r, *c)] += f.values()[x_index];
    }
    m
}

/// Quasi-derivatives `(y^[0], ..., y^[n-1])` at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct QuasiState(pub Vec<Complex64>);

impl QuasiState {
    pub fn order(&self) -> usize {
        self.0.len()
    }
}

/// `⟨z, y⟩ = Σ (-1)^k z^[k] y^[n-k-1]`; `z` carries star quasi-derivatives.
pub fn lagrange_bracket(z: &QuasiState, y: &QuasiState) -> Result<Complex64> {
    if z.order() != y.order() {
        return Err(Error::DimensionMismatch {
            expected: z.order(),
            got: y.order(),
        });
    }
    Ok(bracket_slices(&z.0, &y.0))
}

pub(crate) fn bracket_slices(z: &[Complex64], y: &[Complex64]) -> Complex64 {
    let n = z.len();
    let mut s = Complex64::new(0.0, 0.0);
    for k in 0..n {
        let t = z[k] * y[n - k - 1];
        if k % 2 == 0 {
            s += t;
        } else {
            s -= t;
        }
    }
    s
}

pub fn binomial(n: usize, k: usize) -> i64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: i64 = 1;
    for i in 0..k {
        r = r * (n - i) as i64 / (i + 1) as i64;
    }
    r
}

/// Bracket written through classical derivatives (`n >= 3`).
///
/// `z_d[j] = z^(j)`, `y_d[j] = y^(j)` for `j = 0..n-1`, and `p_d(m, d)` returns
/// `p_m^(d)` at the same point.
pub fn classical_bracket(
    z_d: &[Complex64],
    y_d: &[Complex64],
    p_d: impl Fn(usize, usize) -> Complex64,
) -> Complex64 {
    let n = z_d.len();
    let mut s = Complex64::new(0.0, 0.0);
    for k in 0..n {
        let sign = if (n - k - 1).is_multiple_of(2) { 1.0 } else { -1.0 };
        s += z_d[n - k - 1] * y_d[k] * sign;
    }
    for k in 0..n.saturating_sub(2) {
        let top = n - k - 3;
        let mut inner = Complex64::new(0.0, 0.0);
        for j in 0..=top {
            let mut coef = Complex64::new(0.0, 0.0);
            for s_ in j..=top {
                let sign = if s_ % 2 == 0 { 1.0 } else { -1.0 };
                coef += p_d(s_ + k + 1, s_ - j) * (sign * binomial(s_, j) as f64);
            }
            inner += coef * z_d[j];
        }
        s += y_d[k] * inner;
    }
    s
}

/// Coefficient of `z^(j)` in the expansion of the star quasi-derivative
/// `z^[nu]`, `nu <= n - 2`, `j <= nu - 2`.
pub(crate) fn star_expansion_coef(
    n: usize,
    nu: usize,
    j: usize,
    p_d: impl Fn(usize, usize) -> Complex64,
) -> Complex64 {
    let mut coef = Complex64::new(0.0, 0.0);
    for s in j..=nu - 2 {
        let sign = if (s + nu).is_multiple_of(2) { 1.0 } else { -1.0 };
        coef += p_d(n - nu + s, s - j) * (sign * binomial(s, j) as f64);
    }
    coef
}

/// Numerical derivatives `p_m^(d)` of the coefficients, as needed when star
/// quasi-derivatives are converted to classical ones.
#[derive(Debug, Clone)]
pub struct CoefficientDerivatives {
    /// `table[m - 1][d] = p_m^(d)`.
    table: Vec<Vec<GridFunction>>,
}

impl CoefficientDerivatives {
    /// Derivatives of `p_m` up to its smoothness tag.
    pub fn new(c: &CoefficientSet) -> Result<Self> {
        let mut table = Vec::new();
        for pm in c.p_all() {
            let top = pm.smoothness().max(0) as usize;
            let mut row = vec![pm.clone()];
            for _ in 0..top {
                let next = differentiate(row.last().expect("row starts non-empty"))?;
                row.push(next);
            }
            table.push(row);
        }
        Ok(Self { table })
    }

    /// `p_m^(d)` at node `i`.
    pub fn value(&self, m: usize, d: usize, i: usize) -> Complex64 {
        self.table[m - 1][d].values()[i]
    }

    pub fn get(&self, m: usize, d: usize) -> &GridFunction {
        &self.table[m - 1][d]
    }
}

/// Classical derivatives `z^(0..=n-2)` of a star-system solution from its star
/// quasi-derivatives at node `i`.
pub fn star_classical_from_quasi(
    n: usize,
    z_quasi: &[Complex64],
    derivs: &CoefficientDerivatives,
    i: usize,
) -> Vec<Complex64> {
    let top = n.saturating_sub(2);
    let mut out: Vec<Complex64> = Vec::with_capacity(top + 1);
    for nu in 0..=top {
        let mut v = z_quasi[nu];
        for j in 0..nu.saturating_sub(1) {
            v -= star_expansion_coef(n, nu, j, |m, d| derivs.value(m, d, i)) * out[j];
        }
        out.push(v);
    }
    out
}
