//! Functions sampled on the uniform grid `x_i = i/M` of `[0, 1]`.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Pointwise samples of a function on `M + 1` equally spaced nodes.
///
/// The smoothness tag records the declared Sobolev order `k` of the
/// represented function (membership in `W_2^k`). Differentiation lowers it by
/// one and refuses to go below zero.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    values: Vec<Complex64>,
    smoothness: i32,
}

impl GridFunction {
    pub fn new(values: Vec<Complex64>, smoothness: i32) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "a grid function needs at least 2 nodes, got {}",
                values.len()
            )));
        }
        if smoothness < -1 {
            return Err(Error::InvalidInput(format!("smoothness tag {smoothness} < -1")));
        }
        Ok(Self { values, smoothness })
    }

    pub fn zeros(grid_size: usize, smoothness: i32) -> Self {
        Self {
            values: vec![Complex64::new(0.0, 0.0); grid_size + 1],
            smoothness,
        }
    }

    pub fn from_fn(grid_size: usize, smoothness: i32, f: impl Fn(f64) -> Complex64) -> Self {
        let h = 1.0 / grid_size as f64;
        Self {
            values: (0..=grid_size).map(|i| f(i as f64 * h)).collect(),
            smoothness,
        }
    }

    pub fn from_real_fn(grid_size: usize, smoothness: i32, f: impl Fn(f64) -> f64) -> Self {
        Self::from_fn(grid_size, smoothness, |x| Complex64::new(f(x), 0.0))
    }

    /// Number of subintervals `M`.
    pub fn grid_size(&self) -> usize {
        self.values.len() - 1
    }

    pub fn step(&self) -> f64 {
        1.0 / self.grid_size() as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        i as f64 / self.grid_size() as f64
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn smoothness(&self) -> i32 {
        self.smoothness
    }

    pub fn with_smoothness(mut self, smoothness: i32) -> Self {
        self.smoothness = smoothness;
        self
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            values: self.values.iter().map(|&v| f(v)).collect(),
            smoothness: self.smoothness,
        }
    }

    /// Pointwise combination; the result carries the smaller smoothness tag.
    pub fn zip_with(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        assert_eq!(
            self.values.len(),
            other.values.len(),
            "grid functions live on different grids"
        );
        Self {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            smoothness: self.smoothness.min(other.smoothness),
        }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map(|v| v * c)
    }

    /// Largest absolute value over the nodes.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Value at an arbitrary `x` by linear interpolation between nodes.
    pub fn interpolate(&self, x: f64) -> Complex64 {
        let m = self.grid_size();
        let t = (x.clamp(0.0, 1.0) * m as f64).min(m as f64);
        let i = (t.floor() as usize).min(m - 1);
        let f = t - i as f64;
        self.values[i] * (1.0 - f) + self.values[i + 1] * f
    }
}

impl Add for &GridFunction {
    type Output = GridFunction;
    fn add(self, rhs: &GridFunction) -> GridFunction {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &GridFunction {
    type Output = GridFunction;
    fn sub(self, rhs: &GridFunction) -> GridFunction {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Mul for &GridFunction {
    type Output = GridFunction;
    fn mul(self, rhs: &GridFunction) -> GridFunction {
        self.zip_with(rhs, |a, b| a * b)
    }
}

impl Neg for &GridFunction {
    type Output = GridFunction;
    fn neg(self) -> GridFunction {
        self.map(|v| -v)
    }
}

/// `∫_0^1 f`: composite Simpson when `M` is even, trapezoid otherwise.
pub fn integrate(f: &GridFunction) -> Complex64 {
    let v = f.values();
    let m = f.grid_size();
    let h = f.step();
    if m.is_multiple_of(2) {
        let mut s = v[0] + v[m];
        for (i, &vi) in v.iter().enumerate().take(m).skip(1) {
            s += vi * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * (h / 3.0)
    } else {
        let inner: Complex64 = v[1..m].iter().sum();
        (inner + (v[0] + v[m]) * 0.5) * h
    }
}

/// Second-order central differences, one-sided three-point stencils at the ends.
pub fn differentiate(f: &GridFunction) -> Result<GridFunction> {
    if f.smoothness() < 1 {
        return Err(Error::NonDifferentiable(f.smoothness()));
    }
    Ok(derivative_values(f).with_smoothness(f.smoothness() - 1))
}

/// Differentiates regardless of the tag. Used on sampled trajectories that are
/// known to be smooth but carry no declared order.
pub(crate) fn derivative_values(f: &GridFunction) -> GridFunction {
    let v = f.values();
    let m = f.grid_size();
    let inv = 1.0 / (2.0 * f.step());
    let mut out = Vec::with_capacity(m + 1);
    if m == 1 {
        let d = (v[1] - v[0]) * (2.0 * inv);
        out.extend([d, d]);
    } else {
        out.push((v[0] * -3.0 + v[1] * 4.0 - v[2]) * inv);
        for i in 1..m {
            out.push((v[i + 1] - v[i - 1]) * inv);
        }
        out.push((v[m] * 3.0 - v[m - 1] * 4.0 + v[m - 2]) * inv);
    }
    GridFunction {
        values: out,
        smoothness: f.smoothness() - 1,
    }
}

/// Cumulative trapezoid antiderivative with `F(0) = 0`, optionally shifted to
/// have zero mean.
pub fn antiderivative(f: &GridFunction, mean_zero: bool) -> GridFunction {
    let v = f.values();
    let h = f.step();
    let mut out = Vec::with_capacity(v.len());
    let mut acc = Complex64::new(0.0, 0.0);
    out.push(acc);
    for w in v.windows(2) {
        acc += (w[0] + w[1]) * (0.5 * h);
        out.push(acc);
    }
    let mut g = GridFunction {
        values: out,
        smoothness: f.smoothness() + 1,
    };
    if mean_zero {
        let mean = integrate(&g);
        g = g.map(|x| x - mean);
    }
    g
}

fn l2_squared(f: &GridFunction) -> f64 {
    integrate(&f.map(|v| Complex64::new(v.norm_sqr(), 0.0))).re.max(0.0)
}

/// Norm in `W_2^k`. For `k = -1` this is the L2 norm of the mean-zero
/// antiderivative of `f`, i.e. the infimum over additive constants.
pub fn sobolev_norm(f: &GridFunction, k: i32) -> Result<f64> {
    if k < -1 {
        return Err(Error::InvalidInput(format!("Sobolev order {k} < -1")));
    }
    if k == -1 {
        return Ok(l2_squared(&antiderivative(f, true)).sqrt());
    }
    if k > f.smoothness() {
        return Err(Error::InsufficientSmoothness {
            needed: k,
            have: f.smoothness(),
        });
    }
    let mut total = l2_squared(f);
    let mut g = f.clone();
    for _ in 0..k {
        g = differentiate(&g)?;
        total += l2_squared(&g);
    }
    Ok(total.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn real(m: usize, tag: i32, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction::from_real_fn(m, tag, f)
    }

    #[test]
    fn integrate_examples() {
        assert!((integrate(&real(100, 0, |_| 1.0)).re - 1.0).abs() < 1e-14);
        assert!((integrate(&real(100, 0, |x| x)).re - 0.5).abs() < 1e-14);
        assert!((integrate(&real(101, 0, |x| x)).re - 0.5).abs() < 1e-14);
        let s = integrate(&real(200, 0, |x| (PI * x).sin())).re;
        assert!((s - 2.0 / PI).abs() < 1e-8);
    }

    #[test]
    fn differentiate_examples() {
        let d = differentiate(&real(50, 2, |x| x * x)).unwrap();
        for (i, v) in d.values().iter().enumerate() {
            assert!((v.re - 2.0 * d.node(i)).abs() < 1e-12);
        }
        let c = differentiate(&real(50, 3, |_| 4.2)).unwrap();
        assert!(c.sup_norm() < 1e-12);
        for m in [100, 200] {
            let d = differentiate(&real(m, 1, |x| (PI * x).sin())).unwrap();
            let err = (0..=m)
                .map(|i| (d.values()[i].re - PI * (PI * d.node(i)).cos()).abs())
                .fold(0.0, f64::max);
            assert!(err < 15.0 / (m * m) as f64, "m = {m}, err = {err}");
        }
        assert!(matches!(
            differentiate(&real(10, 0, |x| x)),
            Err(Error::NonDifferentiable(0))
        ));
    }

    #[test]
    fn antiderivative_examples() {
        let f = antiderivative(&real(40, 0, |_| 1.0), false);
        assert_eq!(f.smoothness(), 1);
        for (i, v) in f.values().iter().enumerate() {
            assert!((v.re - f.node(i)).abs() < 1e-14);
        }
        let g = antiderivative(&real(40, 0, |_| 1.0), true);
        for (i, v) in g.values().iter().enumerate() {
            assert!((v.re - (g.node(i) - 0.5)).abs() < 1e-14);
        }
        let s = antiderivative(&real(400, 0, |x| (PI * x).cos()), false);
        for (i, v) in s.values().iter().enumerate() {
            assert!((v.re - (PI * s.node(i)).sin() / PI).abs() < 1e-5);
        }
    }

    #[test]
    fn sobolev_examples() {
        assert_eq!(sobolev_norm(&GridFunction::zeros(10, 3), 2).unwrap(), 0.0);
        assert_eq!(sobolev_norm(&GridFunction::zeros(10, 3), -1).unwrap(), 0.0);
        let s = sobolev_norm(&real(400, 0, |x| (PI * x).sin()), 0).unwrap();
        assert!((s - 0.5f64.sqrt()).abs() < 1e-8);
        let c = sobolev_norm(&real(400, 0, |_| 1.0), -1).unwrap();
        assert!((c - (1.0f64 / 12.0).sqrt()).abs() < 1e-8);
        assert!(matches!(
            sobolev_norm(&real(10, 0, |x| x), 1),
            Err(Error::InsufficientSmoothness { needed: 1, have: 0 })
        ));
    }
}
