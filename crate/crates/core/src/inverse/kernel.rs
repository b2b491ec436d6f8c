use num_complex::Complex64;

use super::VIndex;
use crate::error::{Error, Result};
use crate::forward::{weyl_solution_op, Operator, QuasiTrajectory, SpectralDataSet, DISTINCT_TOL};
use crate::funcspace::GridFunction;
use crate::quasidiff::{bracket_slices, CoefficientSet};

/// `(-1)^{n-k} β`: the factor that turns `Φ̃*_{n-k+1}(·, λ_v)` into `η̃_v`.
///
/// With weight numbers normalized as `β = -Δ_{k+1,k}/Δ'_{k,k}` (positive
/// `2π²l²` in the Sturm-Liouville case) this sign is what makes the first-order
/// reconstruction agree with classical perturbation theory.
pub(crate) fn eta_factor(n: usize, k: usize, beta: Complex64) -> Complex64 {
    if (n - k).is_multiple_of(2) {
        beta
    } else {
        -beta
    }
}

/// Classical first derivative of a solution from its quasi-derivatives.
fn first_derivative(state: &[Complex64], sigma: Complex64) -> Complex64 {
    if state.len() == 2 {
        state[1] - sigma * state[0]
    } else {
        state[1]
    }
}

/// Cumulative `∫ z y` by the trapezoid rule with endpoint-derivative
/// correction, from the left end (`from_left`) or from the right end.
fn product_integral(z: &QuasiTrajectory, y: &QuasiTrajectory, sigma: &GridFunction, from_left: bool) -> Vec<Complex64> {
    let m = z.grid_size();
    let h = 1.0 / m as f64;
    let f: Vec<Complex64> = (0..=m).map(|i| z.state(i)[0] * y.state(i)[0]).collect();
    let df: Vec<Complex64> = (0..=m)
        .map(|i| {
            let s = sigma.values()[i];
            let (zs, ys) = (z.state(i), y.state(i));
            first_derivative(zs, s) * ys[0] + zs[0] * first_derivative(ys, s)
        })
        .collect();
    let piece = |i: usize| (f[i] + f[i + 1]) * (0.5 * h) + (df[i] - df[i + 1]) * (h * h / 12.0);
    let mut out = vec![Complex64::new(0.0, 0.0); m + 1];
    if from_left {
        for i in 0..m {
            out[i + 1] = out[i] + piece(i);
        }
    } else {
        for i in (0..m).rev() {
            out[i] = out[i + 1] + piece(i);
        }
    }
    out
}

/// Inputs of one kernel `G_{v,v0}`.
pub(crate) struct KernelArgs<'a> {
    pub n: usize,
    pub k: usize,
    pub k0: usize,
    pub lambda: Complex64,
    pub lambda0: Complex64,
    pub beta: Complex64,
    /// `Φ̃*_{n-k+1}(·, λ_v)`.
    pub star: &'a QuasiTrajectory,
    /// `Φ̃_{k0+1}(·, λ_{v0})`.
    pub phi0: &'a QuasiTrajectory,
    pub sigma: &'a GridFunction,
}

/// `G_{v,v0}` on the grid.
///
/// The bracket vanishes at `x = 0` when `k0 >= k` and at `x = 1` when
/// `k0 <= k - 2`; there `G` is the integral of `G' = c Φ̃* Φ̃` from that end,
/// which needs no division and also covers `λ_v = λ_{v0}`. Only `k0 = k - 1`
/// uses the bracket quotient.
pub(crate) fn kernel(args: &KernelArgs) -> Result<Vec<Complex64>> {
    let c = eta_factor(args.n, args.k, args.beta);
    if args.k0 >= args.k {
        let g = product_integral(args.star, args.phi0, args.sigma, true);
        return Ok(g.into_iter().map(|v| v * c).collect());
    }
    if args.k0 + 2 <= args.k {
        let g = product_integral(args.star, args.phi0, args.sigma, false);
        return Ok(g.into_iter().map(|v| -v * c).collect());
    }
    check_denominator(args.lambda, args.lambda0)?;
    let gap = args.lambda0 - args.lambda;
    let m = args.star.grid_size();
    Ok((0..=m)
        .map(|i| bracket_slices(args.star.state(i), args.phi0.state(i)) * c / gap)
        .collect())
}

/// Model Weyl solutions attached to one index `v = (l, k, ε)`.
pub(crate) struct IndexSolutions {
    /// `φ̃_v = Φ̃_{k+1}(·, λ_v)`.
    pub phi: QuasiTrajectory,
    /// `Φ̃*_{n-k+1}(·, λ_v)`.
    pub star: QuasiTrajectory,
}

pub(crate) fn index_solutions(op: &Operator, k: usize, lambda: Complex64) -> Result<IndexSolutions> {
    let n = op.order();
    Ok(IndexSolutions {
        phi: weyl_solution_op(op, k + 1, lambda, false)?,
        star: weyl_solution_op(op, n - k + 1, lambda, true)?,
    })
}

/// `G_{v,v0}(x) = (-1)^{n-k} β_v ⟨Φ̃*_{n-k+1}(x, λ_v), Φ̃_{k0+1}(x, λ_{v0})⟩ / (λ_{v0} - λ_v)`
/// for the model coefficients `model`.
pub fn build_g(
    model: &CoefficientSet,
    v: VIndex,
    v0: VIndex,
    data: &SpectralDataSet,
    model_data: &SpectralDataSet,
) -> Result<GridFunction> {
    let op = Operator::new(model);
    let n = model.order();
    let (lambda, beta) = v.datum(data, model_data);
    let (lambda0, _) = v0.datum(data, model_data);
    let star = weyl_solution_op(&op, n - v.k + 1, lambda, true)?;
    let phi0 = weyl_solution_op(&op, v0.k + 1, lambda0, false)?;
    let values = kernel(&KernelArgs {
        n,
        k: v.k,
        k0: v0.k,
        lambda,
        lambda0,
        beta,
        star: &star,
        phi0: &phi0,
        sigma: model.sigma(),
    })?;
    GridFunction::new(values, 1)
}

/// Rejects `λ_0 = λ` for the pairs whose kernel divides by `λ_0 - λ`.
pub(crate) fn check_denominator(lambda: Complex64, lambda0: Complex64) -> Result<()> {
    let scale = lambda.norm().max(lambda0.norm()).max(1.0);
    if (lambda0 - lambda).norm() <= DISTINCT_TOL * scale {
        return Err(Error::NotDisjoint {
            lambda,
            jitter: DISTINCT_TOL * scale,
        });
    }
    Ok(())
}
