use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::io::read_coefficients;
use crate::error::{Error, Result};
use crate::forward::{SpectralDataSet, DISTINCT_TOL, MULTIPLE_RATIO, POLE_TOL, RESIDUAL_RATIO, ROOT_TOL, SUBSTEP_AGREEMENT};
use crate::funcspace::GridFunction;
use crate::inverse::{perturbation_profile, DEFAULT_SINGULAR_TOL, DET_CROSSING_TOL};
use crate::quasidiff::CoefficientSet;

pub const DEFAULT_GRID_SIZE: usize = 2000;
pub const MIN_GRID_SIZE: usize = 200;

/// Built-in model coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// All coefficients zero.
    Zero,
    /// `σ = x² - 1/3`, `p_k` alternating between `1 - x` and `x²`.
    SmoothPoly,
    /// `σ` a mean-zero zigzag with four teeth, `p_k = 0`.
    RoughSigma,
}

impl Preset {
    pub fn build(self, n: usize, grid_size: usize) -> Result<CoefficientSet> {
        match self {
            Preset::Zero => CoefficientSet::zero(n, grid_size),
            Preset::SmoothPoly => {
                let sigma = GridFunction::from_real_fn(grid_size, 1, |x| x * x - 1.0 / 3.0);
                let p = (1..n.saturating_sub(1))
                    .map(|k| {
                        let odd = k % 2 == 1;
                        GridFunction::from_real_fn(grid_size, k as i32 + 1, move |x| if odd { 1.0 - x } else { x * x })
                    })
                    .collect();
                CoefficientSet::new(n, sigma, p)
            }
            Preset::RoughSigma => {
                let sigma = GridFunction::from_real_fn(grid_size, 0, |x| {
                    let t = 4.0 * x;
                    2.0 * (t - (t + 0.5).floor()).abs() - 0.5
                });
                let p = (1..n.saturating_sub(1))
                    .map(|k| GridFunction::zeros(grid_size, k as i32 + 1))
                    .collect();
                CoefficientSet::new(n, sigma, p)
            }
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(Preset::Zero),
            "smooth-poly" => Ok(Preset::SmoothPoly),
            "rough-sigma" => Ok(Preset::RoughSigma),
            _ => Err(Error::InvalidInput(format!(
                "unknown model preset {s:?} (expected zero, smooth-poly or rough-sigma)"
            ))),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::Zero => "zero",
            Preset::SmoothPoly => "smooth-poly",
            Preset::RoughSigma => "rough-sigma",
        })
    }
}

/// Where the model coefficients come from.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Preset(Preset),
    /// A coefficient CSV; its grid overrides the configured one.
    File(PathBuf),
}

impl ModelSpec {
    pub fn build(&self, n: usize, grid_size: usize) -> Result<CoefficientSet> {
        match self {
            ModelSpec::Preset(p) => p.build(n, grid_size),
            ModelSpec::File(path) => {
                let c = read_coefficients(path)?;
                if c.order() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        got: c.order(),
                    });
                }
                Ok(c)
            }
        }
    }
}

impl FromStr for ModelSpec {
    type Err = Error;

    /// A preset name, or anything else as a file path.
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.parse::<Preset>() {
            Ok(p) => ModelSpec::Preset(p),
            Err(_) if s.ends_with(".csv") || s.contains('/') => ModelSpec::File(PathBuf::from(s)),
            Err(e) => return Err(e),
        })
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelSpec::Preset(p) => p.fmt(f),
            ModelSpec::File(path) => write!(f, "{}", path.display()),
        }
    }
}

/// Which data entries to move and by how much.
///
/// Entry `(l, k)` gets `λ += mag · u · l^{n-1} · e^{iφ}` with `u` drawn
/// uniformly from `[1/2, 1]`; with `beta` set, also `β += mag · u' · l^n · e^{iφ}`.
/// The powers of `l` match the weights in `ξ_l`, so `Ω` is proportional to `mag`.
///
/// Text form: `l=1..3,k=all,mag=1e-3,phase=0,beta=0` (any subset of keys).
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationSpec {
    pub levels: Vec<usize>,
    /// `None` means every `k`.
    pub problems: Option<Vec<usize>>,
    pub magnitude: f64,
    pub phase: f64,
    pub beta: bool,
}

impl Default for PerturbationSpec {
    fn default() -> Self {
        Self {
            levels: vec![1, 2, 3],
            problems: None,
            magnitude: 1e-3,
            phase: 0.0,
            beta: false,
        }
    }
}

fn parse_index_list(s: &str) -> Result<Vec<usize>> {
    let bad = || Error::InvalidInput(format!("bad index list {s:?}"));
    let mut out = Vec::new();
    for part in s.split(';') {
        if let Some((a, b)) = part.split_once("..") {
            let (a, b): (usize, usize) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|_| bad())?);
        }
    }
    if out.contains(&0) {
        return Err(bad());
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

impl FromStr for PerturbationSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut spec = Self::default();
        for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| Error::InvalidInput(format!("perturbation item {item:?} is not key=value")))?;
            let num = |v: &str| {
                v.parse::<f64>()
                    .map_err(|_| Error::InvalidInput(format!("bad number {v:?} for {key}")))
            };
            match key {
                "l" => spec.levels = parse_index_list(value)?,
                "k" if value == "all" => spec.problems = None,
                "k" => spec.problems = Some(parse_index_list(value)?),
                "mag" => spec.magnitude = num(value)?,
                "phase" => spec.phase = num(value)?,
                "beta" => spec.beta = matches!(value, "1" | "true" | "yes"),
                _ => return Err(Error::InvalidInput(format!("unknown perturbation key {key:?}"))),
            }
        }
        if !spec.magnitude.is_finite() || !spec.phase.is_finite() {
            return Err(Error::InvalidInput("perturbation magnitude and phase must be finite".into()));
        }
        Ok(spec)
    }
}

impl fmt::Display for PerturbationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |v: &[usize]| v.iter().map(ToString::to_string).collect::<Vec<_>>().join(";");
        let k = self.problems.as_deref().map_or("all".to_string(), list);
        write!(
            f,
            "l={},k={k},mag={:e},phase={},beta={}",
            list(&self.levels),
            self.magnitude,
            self.phase,
            u8::from(self.beta)
        )
    }
}

impl PerturbationSpec {
    /// Perturbed copy of `model_data`, deterministic in `seed`.
    pub fn apply(&self, model_data: &SpectralDataSet, seed: u64) -> Result<SpectralDataSet> {
        let (n, count) = (model_data.order(), model_data.count());
        if let Some(&l) = self.levels.iter().find(|&&l| l > count) {
            return Err(Error::InvalidInput(format!("perturbed level l = {l} exceeds N = {count}")));
        }
        let problems: Vec<usize> = self.problems.clone().unwrap_or_else(|| (1..n).collect());
        if let Some(&k) = problems.iter().find(|&&k| k >= n) {
            return Err(Error::InvalidInput(format!("perturbed problem k = {k} outside 1..{}", n - 1)));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rot = Complex64::from_polar(self.magnitude, self.phase);
        let mut data = model_data.clone();
        for &l in &self.levels {
            for &k in &problems {
                let lf = l as f64;
                let u: f64 = rng.gen_range(0.5..=1.0);
                let u_beta: f64 = rng.gen_range(0.5..=1.0);
                let d = data.get_mut(l, k);
                d.lambda += rot * (u * lf.powi(n as i32 - 1));
                if self.beta {
                    d.beta += rot * (u_beta * lf.powi(n as i32));
                }
            }
        }
        Ok(data)
    }

    /// Copy whose magnitude is rescaled so that `Ω` equals `omega` exactly.
    pub fn with_omega(&self, model_data: &SpectralDataSet, seed: u64, omega: f64) -> Result<Self> {
        let unit = Self {
            magnitude: 1.0,
            ..self.clone()
        };
        let reference = perturbation_profile(&unit.apply(model_data, seed)?, model_data)?.omega;
        if !(reference > 0.0) {
            return Err(Error::InvalidInput("perturbation moves no data; Ω cannot be scaled".into()));
        }
        Ok(Self {
            magnitude: omega / reference,
            ..self.clone()
        })
    }
}

/// Tolerances of one run. The forward ones are fixed constants and listed so
/// that reports are self-describing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Singular-value ratio below which the main equation counts as singular.
    pub solver: f64,
    /// Relative spectral-data discrepancy accepted by `roundtrip`.
    pub acceptance: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            solver: DEFAULT_SINGULAR_TOL,
            acceptance: 1e-4,
        }
    }
}

impl Tolerances {
    /// `(name, value)` for every tolerance in effect.
    pub fn rows(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("tol_solver_singular_ratio", self.solver),
            ("tol_det_crossing", DET_CROSSING_TOL),
            ("tol_acceptance", self.acceptance),
            ("tol_root_step", ROOT_TOL),
            ("tol_substep_agreement", SUBSTEP_AGREEMENT),
            ("tol_root_residual_ratio", RESIDUAL_RATIO),
            ("tol_multiple_root_ratio", MULTIPLE_RATIO),
            ("tol_pole", POLE_TOL),
            ("tol_distinct", DISTINCT_TOL),
        ]
    }
}

/// Everything one command needs.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub order: usize,
    pub grid_size: usize,
    pub count: usize,
    pub model: ModelSpec,
    pub perturbation: PerturbationSpec,
    /// Target `Ω` values for a stability sweep.
    pub scales: Vec<f64>,
    pub tolerances: Tolerances,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            order: 3,
            grid_size: DEFAULT_GRID_SIZE,
            count: 5,
            model: ModelSpec::Preset(Preset::Zero),
            perturbation: PerturbationSpec::default(),
            scales: vec![1e-4, 2e-4, 4e-4, 8e-4],
            tolerances: Tolerances::default(),
            seed: 0,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.order < 2 {
            return Err(Error::InvalidInput(format!("order n = {} must be at least 2", self.order)));
        }
        if self.count < 1 {
            return Err(Error::InvalidInput("number of eigenvalues N must be at least 1".into()));
        }
        if self.grid_size < MIN_GRID_SIZE {
            return Err(Error::InvalidInput(format!(
                "grid size M = {} is below the minimum {MIN_GRID_SIZE}",
                self.grid_size
            )));
        }
        if self.scales.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(Error::InvalidInput("sweep scales must be finite and non-negative".into()));
        }
        if !(self.tolerances.solver > 0.0 && self.tolerances.acceptance > 0.0) {
            return Err(Error::InvalidInput("tolerances must be positive".into()));
        }
        Ok(())
    }

    pub fn build_model(&self) -> Result<CoefficientSet> {
        self.model.build(self.order, self.grid_size)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perturbation_text_round_trips() {
        let spec: PerturbationSpec = "l=1..3,k=2,mag=2e-3,phase=0.5,beta=1".parse().unwrap();
        assert_eq!(spec.levels, vec![1, 2, 3]);
        assert_eq!(spec.problems, Some(vec![2]));
        assert_eq!(spec.to_string().parse::<PerturbationSpec>().unwrap(), spec);
        assert!("mag=inf".parse::<PerturbationSpec>().is_err());
        assert!("l=0".parse::<PerturbationSpec>().is_err());
        assert!("what=1".parse::<PerturbationSpec>().is_err());
    }

    #[test]
    fn model_spec_parsing() {
        assert_eq!("zero".parse::<ModelSpec>().unwrap(), ModelSpec::Preset(Preset::Zero));
        assert!(matches!("a/b.csv".parse::<ModelSpec>().unwrap(), ModelSpec::File(_)));
        assert!("nonsense".parse::<ModelSpec>().is_err());
    }

    #[test]
    fn rough_sigma_has_zero_mean() {
        let c = Preset::RoughSigma.build(3, 800).unwrap();
        assert!(crate::funcspace::integrate(c.sigma()).norm() < 1e-6);
        assert_eq!(c.sigma().smoothness(), 0);
    }

    #[test]
    fn validation_bounds() {
        let mut cfg = ExperimentConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.grid_size = 100;
        assert!(cfg.validate().is_err());
    }
}
