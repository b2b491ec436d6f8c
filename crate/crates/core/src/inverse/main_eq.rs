use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::kernel::{check_denominator, index_solutions, kernel, IndexSolutions, KernelArgs};
use super::{perturbation_profile, PerturbationProfile, VIndex};
use crate::error::{Error, Result};
use crate::forward::{Operator, SpectralDataSet};
use crate::par;
use crate::quasidiff::CoefficientSet;

/// Smallest-to-largest singular value ratio below which `I - R̃(x)` counts as singular.
pub const DEFAULT_SINGULAR_TOL: f64 = 1e-10;
/// Relative distance from 0 of `det(I - R̃)` along a grid interval below which
/// the determinant is taken to cross zero between nodes.
pub const DET_CROSSING_TOL: f64 = 1e-8;

/// The truncated main equation `(I - R̃(x)) ψ(x) = ψ̃(x)` over the active indices.
pub struct MainEquationSystem {
    pub(crate) model: CoefficientSet,
    pub(crate) profile: PerturbationProfile,
    active: Vec<VIndex>,
    /// `λ_v`, `β_v` per active index.
    pub(crate) values: Vec<(Complex64, Complex64)>,
    pub(crate) solutions: Vec<IndexSolutions>,
    /// Node-major, `active.len()` entries per node.
    psi_tilde: Vec<Complex64>,
    /// Node-major row-major blocks of `active.len()²` entries.
    r_tilde: Vec<Complex64>,
    psi: Option<Vec<Complex64>>,
    report: Option<SolveReport>,
}

/// Diagnostics of a solved main equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    /// `max_x ‖(I - R̃)ψ - ψ̃‖_∞`.
    pub residual: f64,
    /// Smallest singular value of `I - R̃(x)` over the grid.
    pub sv_min: f64,
    pub sv_min_x: f64,
    /// Largest `‖R̃(x)‖_∞` (max row sum) over the grid.
    pub r_norm: f64,
}

impl MainEquationSystem {
    pub fn active(&self) -> &[VIndex] {
        &self.active
    }

    pub fn profile(&self) -> &PerturbationProfile {
        &self.profile
    }

    pub fn grid_size(&self) -> usize {
        self.model.grid_size()
    }

    pub fn psi_tilde(&self, node: usize) -> &[Complex64] {
        let a = self.active.len();
        &self.psi_tilde[node * a..(node + 1) * a]
    }

    pub fn psi(&self, node: usize) -> Option<&[Complex64]> {
        let a = self.active.len();
        self.psi.as_ref().map(|p| &p[node * a..(node + 1) * a])
    }

    pub fn r_tilde(&self, node: usize) -> DMatrix<Complex64> {
        let a = self.active.len();
        DMatrix::from_row_slice(a, a, &self.r_tilde[node * a * a..(node + 1) * a * a])
    }

    pub fn report(&self) -> Option<SolveReport> {
        self.report
    }
}

/// Builds `ψ̃` and `R̃` on the grid from the model and the two data sets.
pub fn assemble_system(
    model: &CoefficientSet,
    data: &SpectralDataSet,
    model_data: &SpectralDataSet,
) -> Result<MainEquationSystem> {
    let n = model.order();
    if data.order() != n {
        return Err(Error::InvalidInput(format!(
            "data are for order {}, model has order {n}",
            data.order()
        )));
    }
    data.check_conditions()?;
    let profile = perturbation_profile(data, model_data)?;
    let mut active = Vec::new();
    for l in profile.active_levels() {
        for k in 1..n {
            for eps in 0..2 {
                active.push(VIndex::new(l, k, eps));
            }
        }
    }
    let values: Vec<(Complex64, Complex64)> = active.iter().map(|v| v.datum(data, model_data)).collect();
    // before any Weyl solution is built: a coincidence may also sit on a pole
    for (v, (lam, _)) in active.iter().zip(&values) {
        for (v0, (lam0, _)) in active.iter().zip(&values) {
            if v0.k + 1 == v.k {
                check_denominator(*lam, *lam0)?;
            }
        }
    }
    let op = Operator::new(model);
    let jobs: Vec<(usize, Complex64)> = active.iter().zip(&values).map(|(v, (lam, _))| (v.k, *lam)).collect();
    let solutions = par::map(&jobs, |&(k, lam)| index_solutions(&op, k, lam))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let a = active.len();
    let m = model.grid_size();
    // g[v * a + v0] = G_{v,v0} on the grid
    let pairs: Vec<(usize, usize)> = (0..a).flat_map(|v| (0..a).map(move |v0| (v, v0))).collect();
    let g = par::map(&pairs, |&(v, v0)| {
        kernel(&KernelArgs {
            n,
            k: active[v].k,
            k0: active[v0].k,
            lambda: values[v].0,
            lambda0: values[v0].0,
            beta: values[v].1,
            star: &solutions[v].star,
            phi0: &solutions[v0].phi,
            sigma: model.sigma(),
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let blocks = a / 2;
    let mut psi_tilde = vec![Complex64::new(0.0, 0.0); (m + 1) * a];
    let mut r_tilde = vec![Complex64::new(0.0, 0.0); (m + 1) * a * a];
    for node in 0..=m {
        let x = node as f64 / m as f64;
        let w: Vec<f64> = (0..blocks)
            .map(|b| profile.weight(active[2 * b].l, active[2 * b].k, x))
            .collect();
        let xi: Vec<f64> = (0..blocks).map(|b| profile.xi(active[2 * b].l)).collect();
        let pt = &mut psi_tilde[node * a..(node + 1) * a];
        for b in 0..blocks {
            let f0 = solutions[2 * b].phi.state(node)[0];
            let f1 = solutions[2 * b + 1].phi.state(node)[0];
            pt[2 * b] = (f0 - f1) / (w[b] * xi[b]);
            pt[2 * b + 1] = f1 / w[b];
        }
        let rt = &mut r_tilde[node * a * a..(node + 1) * a * a];
        for b0 in 0..blocks {
            for b in 0..blocks {
                let gv = |e: usize, e0: usize| g[(2 * b + e) * a + 2 * b0 + e0][node];
                let (g00, g01, g10, g11) = (gv(0, 0), gv(1, 0), gv(0, 1), gv(1, 1));
                // P_{l0} [[g00, g01], [g10, g11]] Q_l with P = [[1/ξ0, -1/ξ0], [0, 1]], Q = [[ξ, 1], [0, -1]]
                let (u0, u1) = ((g00 - g10) / xi[b0], (g01 - g11) / xi[b0]);
                let ratio = w[b] / w[b0];
                rt[(2 * b0) * a + 2 * b] = u0 * xi[b] * ratio;
                rt[(2 * b0) * a + 2 * b + 1] = (u0 - u1) * ratio;
                rt[(2 * b0 + 1) * a + 2 * b] = g10 * xi[b] * ratio;
                rt[(2 * b0 + 1) * a + 2 * b + 1] = (g10 - g11) * ratio;
            }
        }
    }
    Ok(MainEquationSystem {
        model: model.clone(),
        profile,
        active,
        values,
        solutions,
        psi_tilde,
        r_tilde,
        psi: None,
        report: None,
    })
}

struct NodeSolution {
    psi: Vec<Complex64>,
    residual: f64,
    sv_min: f64,
    sv_ratio: f64,
    det: Complex64,
    r_norm: f64,
}

fn solve_node(r: DMatrix<Complex64>, rhs: &[Complex64]) -> NodeSolution {
    let a = rhs.len();
    let r_norm = (0..a)
        .map(|i| r.row(i).iter().map(|v| v.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let mat = DMatrix::<Complex64>::identity(a, a) - r;
    let b = DVector::from_column_slice(rhs);
    let lu = mat.clone().lu();
    let det = lu.determinant();
    let psi = lu.solve(&b).unwrap_or_else(|| DVector::from_element(a, Complex64::new(f64::NAN, 0.0)));
    let residual = (&mat * &psi - &b).iter().map(|v| v.norm()).fold(0.0, f64::max);
    let sv = mat.singular_values();
    let (smax, smin) = (sv.max(), sv.min());
    NodeSolution {
        psi: psi.iter().copied().collect(),
        residual,
        sv_min: smin,
        sv_ratio: if smax > 0.0 { smin / smax } else { 0.0 },
        det,
        r_norm,
    }
}

/// Distance from the origin to the segment `[a, b]`, relative to its longer end.
fn segment_gap(a: Complex64, b: Complex64) -> f64 {
    let d = b - a;
    let t = if d.norm_sqr() > 0.0 {
        (-(a.conj() * d).re / d.norm_sqr()).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        0.0
    } else {
        (a + d * t).norm() / scale
    }
}

/// Solves the main equation at every node by LU factorization.
pub fn solve_main_equation(sys: MainEquationSystem) -> Result<MainEquationSystem> {
    solve_main_equation_with(sys, DEFAULT_SINGULAR_TOL)
}

/// As [`solve_main_equation`] with an explicit singularity threshold.
pub fn solve_main_equation_with(mut sys: MainEquationSystem, singular_tol: f64) -> Result<MainEquationSystem> {
    let a = sys.active.len();
    let m = sys.grid_size();
    if a == 0 {
        sys.psi = Some(Vec::new());
        sys.report = Some(SolveReport {
            residual: 0.0,
            sv_min: 1.0,
            sv_min_x: 0.0,
            r_norm: 0.0,
        });
        return Ok(sys);
    }
    let nodes: Vec<usize> = (0..=m).collect();
    let solved = par::map(&nodes, |&i| solve_node(sys.r_tilde(i), sys.psi_tilde(i)));
    let x_of = |i: usize| i as f64 / m as f64;
    let mut report = SolveReport {
        residual: 0.0,
        sv_min: f64::INFINITY,
        sv_min_x: 0.0,
        r_norm: 0.0,
    };
    for (i, s) in solved.iter().enumerate() {
        if !(s.sv_ratio > singular_tol) || !s.residual.is_finite() {
            return Err(Error::Singular {
                x: x_of(i),
                sv_min: s.sv_min,
            });
        }
        if s.sv_min < report.sv_min {
            report.sv_min = s.sv_min;
            report.sv_min_x = x_of(i);
        }
        report.residual = report.residual.max(s.residual);
        report.r_norm = report.r_norm.max(s.r_norm);
    }
    for (i, w) in solved.windows(2).enumerate() {
        if segment_gap(w[0].det, w[1].det) < DET_CROSSING_TOL {
            let s = if w[0].sv_min < w[1].sv_min { &w[0] } else { &w[1] };
            return Err(Error::Singular {
                x: 0.5 * (x_of(i) + x_of(i + 1)),
                sv_min: s.sv_min,
            });
        }
    }
    sys.psi = Some(solved.into_iter().flat_map(|s| s.psi).collect());
    sys.report = Some(report);
    Ok(sys)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_gap_detects_crossings() {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        assert_eq!(segment_gap(c(1.0, 0.0), c(-1.0, 0.0)), 0.0);
        assert!(segment_gap(c(1.0, 1.0), c(2.0, 1.0)) > 0.4);
        assert!(segment_gap(c(1.0, 1e-12), c(-1.0, 1e-12)) < 1e-8);
    }
}
