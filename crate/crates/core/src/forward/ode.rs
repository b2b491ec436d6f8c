//! Fixed-step RK4 for the quasi-derivative systems and their exterior powers.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quasidiff::{closing_sign, AssociatedMatrix};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// `Y' = (S + F(x) + c λ E_{n,1}) Y` with `F` piecewise linear between nodes.
pub(crate) struct SparseSystem {
    n: usize,
    grid: usize,
    lambda: Complex64,
    closing: Complex64,
    /// Superdiagonal ones, then the closing entry, then the entries of `F`.
    entries: Vec<(usize, usize, Slot)>,
    coefficient_bound: f64,
}

#[derive(Clone)]
enum Slot {
    Const(Complex64),
    Grid(Vec<Complex64>),
}

impl SparseSystem {
    pub fn new(a: &AssociatedMatrix, lambda: Complex64) -> Self {
        let n = a.order();
        let closing = lambda * closing_sign(n, a.is_star());
        let mut entries: Vec<(usize, usize, Slot)> =
            (0..n - 1).map(|r| (r, r + 1, Slot::Const(ONE))).collect();
        entries.push((n - 1, 0, Slot::Const(closing)));
        let mut bound: f64 = 0.0;
        for (r, c, f) in a.entries() {
            bound = bound.max(f.sup_norm());
            entries.push((*r, *c, Slot::Grid(f.values().to_vec())));
        }
        Self {
            n,
            grid: a.grid_size(),
            lambda,
            closing,
            entries,
            coefficient_bound: bound,
        }
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn lambda(&self) -> Complex64 {
        self.lambda
    }

    /// Growth rates `Re ρ` of `ρ^n = c λ`, sorted descending.
    pub fn growth_rates(&self) -> Vec<f64> {
        growth_rates(self.n, self.closing)
    }

    /// Substeps per grid interval so that `rate * h_sub` stays small.
    pub fn default_substeps(&self) -> usize {
        let rate = self.closing.norm().powf(1.0 / self.n as f64)
            + self.coefficient_bound.powf(1.0 / self.n as f64)
            + 1.0;
        let h = 1.0 / self.grid as f64;
        ((rate * h / 0.005).ceil() as usize).max(1)
    }

    fn values_at(&self, interval: usize, t: f64, out: &mut [Complex64]) {
        for (slot, (_, _, s)) in out.iter_mut().zip(&self.entries) {
            *slot = match s {
                Slot::Const(v) => *v,
                Slot::Grid(g) => g[interval] * (1.0 - t) + g[interval + 1] * t,
            };
        }
    }
}

/// Real parts of the `n` roots of `ρ^n = z`, sorted descending.
pub(crate) fn growth_rates(n: usize, z: Complex64) -> Vec<f64> {
    let r = z.norm().powf(1.0 / n as f64);
    let a = z.arg() / n as f64;
    let mut v: Vec<f64> = (0..n)
        .map(|j| r * (a + 2.0 * std::f64::consts::PI * j as f64 / n as f64).cos())
        .collect();
    v.sort_by(|a, b| b.partial_cmp(a).unwrap());
    v
}

/// Linear right-hand side evaluated in terms of the current entry values.
trait Rhs {
    fn dim(&self) -> usize;
    fn eval(&self, vals: &[Complex64], y: &[Complex64], dy: &mut [Complex64]);
}

/// The vector system itself, applied to `cols` stacked solution vectors.
struct VectorRhs<'a> {
    sys: &'a SparseSystem,
    cols: usize,
}

impl Rhs for VectorRhs<'_> {
    fn dim(&self) -> usize {
        self.sys.n * self.cols
    }

    fn eval(&self, vals: &[Complex64], y: &[Complex64], dy: &mut [Complex64]) {
        let n = self.sys.n;
        dy.fill(ZERO);
        for c in 0..self.cols {
            let (yc, dc) = (&y[c * n..(c + 1) * n], &mut dy[c * n..(c + 1) * n]);
            for (v, (r, col, _)) in vals.iter().zip(&self.sys.entries) {
                dc[*r] += v * yc[*col];
            }
        }
    }
}

/// Index of `m`-element subsets of `{0..n-1}` encoded as bit masks.
#[derive(Debug, Clone)]
pub(crate) struct SubsetBasis {
    masks: Vec<u32>,
    index: Vec<usize>,
}

impl SubsetBasis {
    pub fn new(n: usize, m: usize) -> Self {
        let masks: Vec<u32> = (0u32..1 << n).filter(|s| s.count_ones() as usize == m).collect();
        let mut index = vec![usize::MAX; 1 << n];
        for (i, &s) in masks.iter().enumerate() {
            index[s as usize] = i;
        }
        Self { masks, index }
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn index_of(&self, elems: &[usize]) -> usize {
        let mask = elems.iter().fold(0u32, |acc, &e| acc | 1 << e);
        self.index[mask as usize]
    }
}

/// The additive compound `A^(m)` acting on `m`-vectors in the subset basis.
struct CompoundRhs {
    dim: usize,
    /// (entry slot, target, source, sign)
    terms: Vec<(usize, usize, usize, f64)>,
}

impl CompoundRhs {
    fn new(sys: &SparseSystem, basis: &SubsetBasis) -> Self {
        let mut terms = Vec::new();
        for (slot, (i, j, _)) in sys.entries.iter().enumerate() {
            let (i, j) = (*i, *j);
            for (src, &mask) in basis.masks.iter().enumerate() {
                if mask & (1 << j) == 0 {
                    continue;
                }
                if i == j {
                    terms.push((slot, src, src, 1.0));
                    continue;
                }
                if mask & (1 << i) != 0 {
                    continue;
                }
                let (lo, hi) = if i < j { (i, j) } else { (j, i) };
                let between = (mask >> (lo + 1)) & ((1u32 << (hi - lo - 1)) - 1);
                let sign = if between.count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
                let target = (mask & !(1 << j)) | (1 << i);
                terms.push((slot, basis.index[target as usize], src, sign));
            }
        }
        Self {
            dim: basis.len(),
            terms,
        }
    }
}

impl Rhs for CompoundRhs {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, vals: &[Complex64], y: &[Complex64], dy: &mut [Complex64]) {
        dy.fill(ZERO);
        for &(slot, t, s, sign) in &self.terms {
            dy[t] += vals[slot] * y[s] * sign;
        }
    }
}

/// Integrates `y' = (rhs - shift) y` over `[0, 1]`, calling `record` at every node.
fn sweep(
    sys: &SparseSystem,
    rhs: &dyn Rhs,
    y0: Vec<Complex64>,
    shift: f64,
    substeps: usize,
    record: impl FnMut(usize, &[Complex64]),
) -> Result<Vec<Complex64>> {
    sweep_nodes(sys, rhs, y0, shift, substeps, 0, sys.grid, record)
}

/// As [`sweep`] between the nodes `from` and `to`.
#[allow(clippy::too_many_arguments)]
fn sweep_nodes(
    sys: &SparseSystem,
    rhs: &dyn Rhs,
    y0: Vec<Complex64>,
    shift: f64,
    substeps: usize,
    from: usize,
    to: usize,
    mut record: impl FnMut(usize, &[Complex64]),
) -> Result<Vec<Complex64>> {
    let d = rhs.dim();
    let mut y = y0;
    let mut vals = vec![ZERO; sys.entries.len()];
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) =
        (vec![ZERO; d], vec![ZERO; d], vec![ZERO; d], vec![ZERO; d], vec![ZERO; d]);
    let h = 1.0 / (sys.grid * substeps) as f64;
    let dt = 1.0 / substeps as f64;
    let shift = Complex64::new(shift, 0.0);
    let f = |t: f64, interval: usize, y: &[Complex64], out: &mut [Complex64], vals: &mut [Complex64]| {
        sys.values_at(interval, t, vals);
        rhs.eval(vals, y, out);
        if shift != ZERO {
            for (o, v) in out.iter_mut().zip(y) {
                *o -= shift * v;
            }
        }
    };
    record(from, &y);
    for interval in from..to {
        for sub in 0..substeps {
            let t0 = sub as f64 * dt;
            f(t0, interval, &y, &mut k1, &mut vals);
            for i in 0..d {
                tmp[i] = y[i] + k1[i] * (0.5 * h);
            }
            f(t0 + 0.5 * dt, interval, &tmp, &mut k2, &mut vals);
            for i in 0..d {
                tmp[i] = y[i] + k2[i] * (0.5 * h);
            }
            f(t0 + 0.5 * dt, interval, &tmp, &mut k3, &mut vals);
            for i in 0..d {
                tmp[i] = y[i] + k3[i] * h;
            }
            f(t0 + dt, interval, &tmp, &mut k4, &mut vals);
            for i in 0..d {
                y[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
            }
        }
        if y.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Overflow {
                lambda: sys.lambda,
                grid: sys.grid,
            });
        }
        record(interval + 1, &y);
    }
    Ok(y)
}

/// Fundamental matrix at every node, stored node-major as `n × n` column-major blocks.
pub(crate) fn fundamental_trajectory(sys: &SparseSystem, substeps: usize) -> Result<Vec<Complex64>> {
    let n = sys.n;
    let mut y0 = vec![ZERO; n * n];
    for c in 0..n {
        y0[c * n + c] = ONE;
    }
    let mut traj = Vec::with_capacity((sys.grid + 1) * n * n);
    sweep(sys, &VectorRhs { sys, cols: n }, y0, 0.0, substeps, |_, y| {
        traj.extend_from_slice(y)
    })?;
    Ok(traj)
}

/// Solution vector trajectory from the given initial state.
pub(crate) fn solution_trajectory(
    sys: &SparseSystem,
    y0: &[Complex64],
    substeps: usize,
) -> Result<Vec<Complex64>> {
    let mut traj = Vec::with_capacity((sys.grid + 1) * sys.n);
    sweep(sys, &VectorRhs { sys, cols: 1 }, y0.to_vec(), 0.0, substeps, |_, y| {
        traj.extend_from_slice(y)
    })?;
    Ok(traj)
}

/// Fundamental matrices started from the identity at each segment start.
/// Segment `j` covers the nodes `bounds[j]..=bounds[j + 1]`; each entry is
/// node-major with `n × n` column-major blocks.
pub(crate) fn segment_fundamentals(
    sys: &SparseSystem,
    bounds: &[usize],
    substeps: usize,
) -> Result<Vec<Vec<Complex64>>> {
    let n = sys.n;
    bounds
        .windows(2)
        .map(|w| {
            let mut y0 = vec![ZERO; n * n];
            for c in 0..n {
                y0[c * n + c] = ONE;
            }
            let mut traj = Vec::with_capacity((w[1] - w[0] + 1) * n * n);
            sweep_nodes(sys, &VectorRhs { sys, cols: n }, y0, 0.0, substeps, w[0], w[1], |_, y| {
                traj.extend_from_slice(y)
            })?;
            Ok(traj)
        })
        .collect()
}

/// The `m`-vector `C_{a_1} ∧ ... ∧ C_{a_m}` at `x = 1`, scaled by `e^{-shift}`,
/// for a sorted set of fundamental-solution indices.
pub(crate) fn wedge_at_end(
    sys: &SparseSystem,
    basis: &SubsetBasis,
    columns: &[usize],
    shift: f64,
    substeps: usize,
) -> Result<Vec<Complex64>> {
    let rhs = CompoundRhs::new(sys, basis);
    let mut y0 = vec![ZERO; basis.len()];
    y0[basis.index_of(columns)] = ONE;
    sweep(sys, &rhs, y0, shift, substeps, |_, _| {})
}
