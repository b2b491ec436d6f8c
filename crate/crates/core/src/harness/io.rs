//! File formats: spectral data as JSON, coefficients and reports as CSV.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{AsymptoticsReport, SpectralDataSet, SpectralDatum};
use crate::funcspace::GridFunction;
use crate::quasidiff::CoefficientSet;

#[derive(Serialize, Deserialize)]
struct DatumRecord {
    l: usize,
    k: usize,
    lambda: [f64; 2],
    beta: [f64; 2],
}

#[derive(Serialize, Deserialize)]
struct DataFile {
    n: usize,
    #[serde(rename = "N")]
    count: usize,
    data: Vec<DatumRecord>,
}

fn pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

pub fn spectral_data_to_json(data: &SpectralDataSet) -> Result<String> {
    let file = DataFile {
        n: data.order(),
        count: data.count(),
        data: data
            .data()
            .iter()
            .map(|d| DatumRecord {
                l: d.l,
                k: d.k,
                lambda: pair(d.lambda),
                beta: pair(d.beta),
            })
            .collect(),
    };
    Ok(serde_json::to_string_pretty(&file)?)
}

pub fn spectral_data_from_json(text: &str) -> Result<SpectralDataSet> {
    let file: DataFile = serde_json::from_str(text)?;
    let data = file
        .data
        .into_iter()
        .map(|r| SpectralDatum {
            l: r.l,
            k: r.k,
            lambda: Complex64::new(r.lambda[0], r.lambda[1]),
            beta: Complex64::new(r.beta[0], r.beta[1]),
        })
        .collect();
    SpectralDataSet::new(file.n, file.count, data)
}

pub fn write_spectral_data(path: &Path, data: &SpectralDataSet) -> Result<()> {
    Ok(fs::write(path, spectral_data_to_json(data)? + "\n")?)
}

pub fn read_spectral_data(path: &Path) -> Result<SpectralDataSet> {
    spectral_data_from_json(&fs::read_to_string(path)?)
}

fn coefficient_header(n: usize) -> Vec<String> {
    let mut h = vec!["x".to_string(), "sigma_re".into(), "sigma_im".into()];
    for k in 1..n - 1 {
        h.push(format!("p{k}_re"));
        h.push(format!("p{k}_im"));
    }
    h
}

pub fn write_coefficients(path: &Path, c: &CoefficientSet) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(coefficient_header(c.order()))?;
    let m = c.grid_size();
    for i in 0..=m {
        let mut row = vec![(i as f64 / m as f64).to_string()];
        let mut push = |z: Complex64| {
            row.push(z.re.to_string());
            row.push(z.im.to_string());
        };
        push(c.sigma().values()[i]);
        for p in c.p_all() {
            push(p.values()[i]);
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a coefficient CSV. Smoothness tags are set to the minimum the
/// coefficient class allows (`σ`: 0, `p_k`: `k - 1`).
pub fn read_coefficients(path: &Path) -> Result<CoefficientSet> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header.len() < 3 || header.len().is_multiple_of(2) {
        return Err(Error::InvalidInput(format!("coefficient header has {} columns", header.len())));
    }
    let n = (header.len() - 3) / 2 + 2;
    if header != coefficient_header(n) {
        return Err(Error::InvalidInput(format!("unexpected coefficient header {header:?}")));
    }
    let mut columns: Vec<Vec<Complex64>> = vec![Vec::new(); n - 1];
    let mut xs = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let num = |j: usize| -> Result<f64> {
            rec[j]
                .parse::<f64>()
                .map_err(|_| Error::InvalidInput(format!("row {}: bad number {:?}", line + 2, &rec[j])))
        };
        xs.push(num(0)?);
        for (c, col) in columns.iter_mut().enumerate() {
            col.push(Complex64::new(num(1 + 2 * c)?, num(2 + 2 * c)?));
        }
    }
    if xs.len() < 2 {
        return Err(Error::InvalidInput("coefficient file needs at least two grid nodes".into()));
    }
    let m = xs.len() - 1;
    if let Some(i) = (0..=m).find(|&i| (xs[i] - i as f64 / m as f64).abs() > 1e-9) {
        return Err(Error::InvalidInput(format!("node {i} at x = {} is off the uniform grid", xs[i])));
    }
    let mut cols = columns.into_iter();
    let sigma = GridFunction::new(cols.next().expect("n >= 2 gives a sigma column"), 0)?;
    let p = cols
        .enumerate()
        .map(|(i, v)| GridFunction::new(v, i as i32))
        .collect::<Result<Vec<_>>>()?;
    CoefficientSet::new(n, sigma, p)
}

/// Two-column `key,value` CSV.
pub fn write_report(path: &Path, rows: &[(String, String)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["key", "value"])?;
    for (k, v) in rows {
        w.write_record([k, v])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_asymptotics(path: &Path, report: &AsymptoticsReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "k",
        "l",
        "theta",
        "kappa_re",
        "kappa_im",
        "kappa_partial",
        "beta_leading_re",
        "beta_leading_im",
        "kappa0_re",
        "kappa0_im",
        "kappa0_partial",
    ])?;
    for (ki, kappa) in report.kappa.iter().enumerate() {
        for (li, z) in kappa.iter().enumerate() {
            let z0 = report.kappa0[ki][li];
            w.write_record([
                (ki + 1).to_string(),
                (li + 1).to_string(),
                report.theta[ki].to_string(),
                z.re.to_string(),
                z.im.to_string(),
                report.kappa_partial[ki][li].to_string(),
                report.beta_leading[ki].re.to_string(),
                report.beta_leading[ki].im.to_string(),
                z0.re.to_string(),
                z0.im.to_string(),
                report.kappa0_partial[ki][li].to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
