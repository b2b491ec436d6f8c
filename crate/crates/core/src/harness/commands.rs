use std::fs;
use std::path::Path;

use num_complex::Complex64;

use super::config::{ExperimentConfig, Tolerances};
use super::io::{
    read_spectral_data, write_asymptotics, write_coefficients, write_report, write_spectral_data,
};
use crate::error::{Error, Result};
use crate::forward::{asymptotics_report, spectral_data, AsymptoticsReport, SpectralDataSet};
use crate::funcspace::{integrate, sobolev_norm};
use crate::inverse::{
    assemble_system, eta_map, perturbation_profile, reconstruct_with_diagnostics, recover_phi, recover_weyl_check,
    solve_main_equation_with, SolveReport, WeylCheck,
};
use crate::par;
use crate::quasidiff::CoefficientSet;

/// Spectral parameter of the Weyl-solution diagnostic in inversion reports.
pub const WEYL_CHECK_LAMBDA: Complex64 = Complex64::new(3.3, 7.1);

/// Result of one inversion with its diagnostics.
#[derive(Debug, Clone)]
pub struct Inversion {
    pub coefficients: CoefficientSet,
    pub omega: f64,
    pub active: usize,
    pub solve: SolveReport,
    /// Per `s >= 1`: mismatch between the differentiated and the direct `𝒮₁`.
    pub telescoping: Vec<(usize, f64)>,
    /// `None` when the diagnostic `λ` sits on a pole.
    pub weyl: Option<WeylCheck>,
}

/// Assemble, solve, recover and reconstruct.
pub fn invert(
    model: &CoefficientSet,
    data: &SpectralDataSet,
    model_data: &SpectralDataSet,
    tolerances: &Tolerances,
) -> Result<Inversion> {
    let sys = assemble_system(model, data, model_data)?;
    let sys = solve_main_equation_with(sys, tolerances.solver)?;
    let phi = recover_phi(&sys)?;
    let eta = eta_map(&sys)?;
    let rec = reconstruct_with_diagnostics(model, &phi, &eta)?;
    let weyl = match recover_weyl_check(&sys, &phi, &rec.coefficients, WEYL_CHECK_LAMBDA) {
        Ok(w) => Some(w),
        Err(Error::Pole { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(Inversion {
        omega: sys.profile().omega,
        active: sys.active().len(),
        solve: sys.report().expect("solved system carries a report"),
        telescoping: rec.telescoping,
        weyl,
        coefficients: rec.coefficients,
    })
}

/// `‖p_k - p̃_k‖` in `W_2^{k-1}` for `k = 0..=n-2`; the `k = 0` entry is the
/// L2 norm of the mean-zero difference of `σ`.
pub fn coefficient_errors(a: &CoefficientSet, b: &CoefficientSet) -> Result<Vec<f64>> {
    if a.order() != b.order() {
        return Err(Error::DimensionMismatch {
            expected: a.order(),
            got: b.order(),
        });
    }
    let ds = a.sigma() - b.sigma();
    let mean = integrate(&ds);
    let mut out = vec![sobolev_norm(&ds.map(|v| v - mean), 0)?];
    for k in 1..a.order() - 1 {
        out.push(sobolev_norm(&(a.p(k) - b.p(k)), k as i32 - 1)?);
    }
    Ok(out)
}

/// Largest relative differences of eigenvalues and of weight numbers.
pub fn data_discrepancy(a: &SpectralDataSet, b: &SpectralDataSet) -> Result<(f64, f64)> {
    if a.order() != b.order() || a.count() != b.count() {
        return Err(Error::InvalidInput("spectral data sets have different shapes".into()));
    }
    let rel = |x: Complex64, y: Complex64| (x - y).norm() / y.norm().max(f64::MIN_POSITIVE);
    Ok(a.data().iter().fold((0.0f64, 0.0f64), |(ml, mb), d| {
        let e = b.get(d.l, d.k);
        (ml.max(rel(d.lambda, e.lambda)), mb.max(rel(d.beta, e.beta)))
    }))
}

fn prepare(cfg: &ExperimentConfig) -> Result<()> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.output_dir)?;
    Ok(())
}

fn header_rows(cfg: &ExperimentConfig, n: usize, m: usize) -> Vec<(String, String)> {
    let mut rows = vec![
        ("order".to_string(), n.to_string()),
        ("grid_size".into(), m.to_string()),
        ("num_eigenvalues".into(), cfg.count.to_string()),
        ("model".into(), cfg.model.to_string()),
    ];
    rows.extend(cfg.tolerances.rows().into_iter().map(|(k, v)| (k.to_string(), v.to_string())));
    rows
}

fn inversion_rows(inv: &Inversion) -> Vec<(String, String)> {
    let mut rows = vec![
        ("omega".to_string(), inv.omega.to_string()),
        ("active_indices".into(), inv.active.to_string()),
        ("main_eq_residual".into(), inv.solve.residual.to_string()),
        ("main_eq_sv_min".into(), inv.solve.sv_min.to_string()),
        ("main_eq_sv_min_x".into(), inv.solve.sv_min_x.to_string()),
        ("main_eq_r_norm".into(), inv.solve.r_norm.to_string()),
    ];
    for (s, v) in &inv.telescoping {
        rows.push((format!("telescoping_s{s}"), v.to_string()));
    }
    if let Some(w) = &inv.weyl {
        rows.push(("weyl_check_lambda_re".into(), w.lambda.re.to_string()));
        rows.push(("weyl_check_lambda_im".into(), w.lambda.im.to_string()));
        for (i, (lit, con)) in w.literal.iter().zip(&w.consistent).enumerate() {
            rows.push((format!("weyl_literal_k{}", i + 1), lit.to_string()));
            rows.push((format!("weyl_consistent_k{}", i + 1), con.to_string()));
            rows.push((format!("weyl_boundary_k{}", i + 1), w.boundary[i].to_string()));
        }
    }
    rows
}

/// Output of [`cmd_forward`].
#[derive(Debug, Clone)]
pub struct ForwardOutput {
    pub data: SpectralDataSet,
    pub asymptotics: Option<AsymptoticsReport>,
}

/// Writes `spectral_data.json`, and `asymptotics.csv` when `N >= 10`.
pub fn cmd_forward(cfg: &ExperimentConfig) -> Result<ForwardOutput> {
    prepare(cfg)?;
    let model = cfg.build_model()?;
    let data = spectral_data(&model, cfg.count)?;
    write_spectral_data(&cfg.output_dir.join("spectral_data.json"), &data)?;
    let asymptotics = if cfg.count >= 10 {
        let report = asymptotics_report(&data)?;
        write_asymptotics(&cfg.output_dir.join("asymptotics.csv"), &report)?;
        Some(report)
    } else {
        None
    };
    Ok(ForwardOutput { data, asymptotics })
}

/// Inverts the data file against the configured model; writes
/// `coefficients.csv` and `invert_report.csv`.
pub fn cmd_invert(cfg: &ExperimentConfig, data_path: &Path) -> Result<Inversion> {
    prepare(cfg)?;
    let data = read_spectral_data(data_path)?;
    let model = cfg.build_model()?;
    if data.order() != model.order() {
        return Err(Error::DimensionMismatch {
            expected: model.order(),
            got: data.order(),
        });
    }
    data.check_conditions()?;
    let model_data = spectral_data(&model, data.count())?;
    let inv = invert(&model, &data, &model_data, &cfg.tolerances)?;
    write_coefficients(&cfg.output_dir.join("coefficients.csv"), &inv.coefficients)?;
    let mut rows = header_rows(cfg, model.order(), model.grid_size());
    rows.push(("data_file".into(), data_path.display().to_string()));
    rows.extend(inversion_rows(&inv));
    for (k, e) in coefficient_errors(&inv.coefficients, &model)?.iter().enumerate() {
        rows.push((format!("distance_to_model_p{k}"), e.to_string()));
    }
    write_report(&cfg.output_dir.join("invert_report.csv"), &rows)?;
    Ok(inv)
}

/// Output of [`cmd_roundtrip`].
#[derive(Debug, Clone)]
pub struct RoundtripReport {
    pub inversion: Inversion,
    pub max_rel_lambda: f64,
    pub max_rel_beta: f64,
    pub passed: bool,
}

/// Model data, perturbation, inversion, and forward run of the result;
/// writes `perturbed_data.json`, `coefficients.csv`, `roundtrip_report.csv`.
pub fn cmd_roundtrip(cfg: &ExperimentConfig) -> Result<RoundtripReport> {
    prepare(cfg)?;
    let model = cfg.build_model()?;
    let model_data = spectral_data(&model, cfg.count)?;
    let data = cfg.perturbation.apply(&model_data, cfg.seed)?;
    write_spectral_data(&cfg.output_dir.join("perturbed_data.json"), &data)?;
    let inversion = invert(&model, &data, &model_data, &cfg.tolerances)?;
    write_coefficients(&cfg.output_dir.join("coefficients.csv"), &inversion.coefficients)?;
    let again = spectral_data(&inversion.coefficients, cfg.count)?;
    let (max_rel_lambda, max_rel_beta) = data_discrepancy(&again, &data)?;
    let passed = max_rel_lambda.max(max_rel_beta) < cfg.tolerances.acceptance;
    let mut rows = header_rows(cfg, model.order(), model.grid_size());
    rows.push(("perturbation".into(), cfg.perturbation.to_string()));
    rows.push(("seed".into(), cfg.seed.to_string()));
    rows.extend(inversion_rows(&inversion));
    rows.push(("max_rel_lambda".into(), max_rel_lambda.to_string()));
    rows.push(("max_rel_beta".into(), max_rel_beta.to_string()));
    rows.push(("passed".into(), passed.to_string()));
    write_report(&cfg.output_dir.join("roundtrip_report.csv"), &rows)?;
    Ok(RoundtripReport {
        inversion,
        max_rel_lambda,
        max_rel_beta,
        passed,
    })
}

/// One scale of a stability sweep.
#[derive(Debug, Clone)]
pub struct StabilityRow {
    pub target_omega: f64,
    pub omega: f64,
    /// `‖p_k - p̃_k‖_{W_2^{k-1}}`, `k = 0..=n-2`, or the failure message.
    pub outcome: std::result::Result<Vec<f64>, String>,
    pub sv_min: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct StabilityReport {
    /// Sorted by `Ω`.
    pub rows: Vec<StabilityRow>,
    /// Least-squares slope of `log error` against `log Ω` over the three
    /// smallest positive `Ω` that succeeded, per `k`.
    pub slopes: Vec<Option<f64>>,
}

fn log_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let len = pts.len() as f64;
    let (mx, my) = (
        pts.iter().map(|p| p.0).sum::<f64>() / len,
        pts.iter().map(|p| p.1).sum::<f64>() / len,
    );
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Inversions at each target `Ω` in `cfg.scales`; writes `stability.csv` and
/// the gnuplot script `stability.gp`.
pub fn cmd_stability_sweep(cfg: &ExperimentConfig) -> Result<StabilityReport> {
    prepare(cfg)?;
    if cfg.scales.is_empty() {
        return Err(Error::InvalidInput("stability sweep needs at least one scale".into()));
    }
    let model = cfg.build_model()?;
    let n = model.order();
    let model_data = spectral_data(&model, cfg.count)?;
    let mut rows = par::map(&cfg.scales, |&target| {
        let run = || -> Result<(f64, Vec<f64>, f64)> {
            let data = if target == 0.0 {
                model_data.clone()
            } else {
                cfg.perturbation
                    .with_omega(&model_data, cfg.seed, target)?
                    .apply(&model_data, cfg.seed)?
            };
            let omega = perturbation_profile(&data, &model_data)?.omega;
            let inv = invert(&model, &data, &model_data, &cfg.tolerances)?;
            Ok((omega, coefficient_errors(&inv.coefficients, &model)?, inv.solve.sv_min))
        };
        match run() {
            Ok((omega, errors, sv)) => StabilityRow {
                target_omega: target,
                omega,
                outcome: Ok(errors),
                sv_min: Some(sv),
            },
            Err(e) => StabilityRow {
                target_omega: target,
                omega: target,
                outcome: Err(e.to_string()),
                sv_min: None,
            },
        }
    });
    rows.sort_by(|a, b| a.omega.total_cmp(&b.omega));
    let fit: Vec<&StabilityRow> = rows
        .iter()
        .filter(|r| r.omega > 0.0 && r.outcome.is_ok())
        .take(3)
        .collect();
    let slopes = (0..n - 1)
        .map(|k| {
            let pts: Vec<(f64, f64)> = fit
                .iter()
                .map(|r| (r.omega, r.outcome.as_ref().expect("filtered to successes")[k]))
                .collect();
            log_slope(&pts)
        })
        .collect();
    let report = StabilityReport { rows, slopes };
    write_stability(cfg, n, &report)?;
    Ok(report)
}

fn write_stability(cfg: &ExperimentConfig, n: usize, report: &StabilityReport) -> Result<()> {
    let mut w = csv::Writer::from_path(cfg.output_dir.join("stability.csv"))?;
    let mut header = vec!["target_omega".to_string(), "omega".into(), "status".into()];
    header.extend((0..n - 1).map(|k| format!("err_p{k}")));
    header.push("sv_min".into());
    w.write_record(&header)?;
    for r in &report.rows {
        let mut rec = vec![r.target_omega.to_string(), r.omega.to_string()];
        match &r.outcome {
            Ok(errs) => {
                rec.push("ok".into());
                rec.extend(errs.iter().map(ToString::to_string));
            }
            Err(msg) => {
                rec.push(format!("failed: {msg}"));
                rec.extend(std::iter::repeat_n(String::new(), n - 1));
            }
        }
        rec.push(r.sv_min.map(|v| v.to_string()).unwrap_or_default());
        w.write_record(&rec)?;
    }
    w.flush()?;

    let mut rows = header_rows(cfg, n, cfg.grid_size);
    rows.push(("perturbation".into(), cfg.perturbation.to_string()));
    rows.push(("seed".into(), cfg.seed.to_string()));
    for (k, s) in report.slopes.iter().enumerate() {
        rows.push((format!("slope_p{k}"), s.map(|v| v.to_string()).unwrap_or_default()));
    }
    write_report(&cfg.output_dir.join("stability_report.csv"), &rows)?;

    let mut gp = String::from(
        "set datafile separator \",\"\nset logscale xy\nset key autotitle columnhead left top\n\
         set xlabel \"Omega\"\nset ylabel \"coefficient error\"\nset grid\n",
    );
    let curves: Vec<String> = (0..n - 1)
        .map(|k| format!("\"stability.csv\" using 2:{} with linespoints", 4 + k))
        .collect();
    gp.push_str(&format!("plot {}\n", curves.join(", \\\n     ")));
    fs::write(cfg.output_dir.join("stability.gp"), gp)?;
    Ok(())
}
