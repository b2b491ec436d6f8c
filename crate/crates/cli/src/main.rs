use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use isp_core::harness::{
    cmd_forward, cmd_invert, cmd_roundtrip, cmd_stability_sweep, ExperimentConfig, ModelSpec, PerturbationSpec,
    Tolerances, DEFAULT_GRID_SIZE,
};
use isp_core::{Error, Result};

/// Forward and inverse spectral problems for higher-order differential operators.
#[derive(Parser)]
#[command(name = "isp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalues and weight numbers of the model; writes spectral_data.json.
    Forward(Common),
    /// Reconstruct coefficients from a spectral-data file.
    Invert {
        /// Spectral-data JSON file.
        data: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Perturb the model data, invert, and recompute the spectral data.
    Roundtrip {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        perturb: Perturb,
    },
    /// Coefficient error against Ω over several perturbation scales.
    StabilitySweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        perturb: Perturb,
        /// Target Ω values, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "1e-4,2e-4,4e-4,8e-4")]
        scales: Vec<f64>,
    },
}

#[derive(Args)]
struct Common {
    /// Operator order n.
    #[arg(long, default_value_t = 3)]
    order: usize,
    /// Number of grid intervals M.
    #[arg(long, default_value_t = DEFAULT_GRID_SIZE)]
    grid_size: usize,
    /// Eigenvalues per problem N.
    #[arg(long, default_value_t = 5)]
    num_eigenvalues: usize,
    /// zero, smooth-poly, rough-sigma, or a coefficient CSV path.
    #[arg(long, default_value = "zero")]
    model: String,
    /// Tolerances: a number (acceptance) or solver=..,acceptance=..
    #[arg(long)]
    tol: Option<String>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct Perturb {
    /// Perturbation, e.g. l=1..3,k=all,mag=1e-3,phase=0,beta=0
    #[arg(long, default_value = "")]
    perturb: String,
    /// Seed of the perturbation factors.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn parse_tol(text: Option<&str>) -> Result<Tolerances> {
    let mut tol = Tolerances::default();
    let Some(text) = text else { return Ok(tol) };
    let num = |v: &str| {
        v.parse::<f64>()
            .map_err(|_| Error::InvalidInput(format!("bad tolerance {v:?}")))
    };
    for item in text.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        match item.split_once('=') {
            None => tol.acceptance = num(item)?,
            Some(("acceptance", v)) => tol.acceptance = num(v)?,
            Some(("solver", v)) => tol.solver = num(v)?,
            Some((key, _)) => return Err(Error::InvalidInput(format!("unknown tolerance {key:?}"))),
        }
    }
    Ok(tol)
}

fn config(common: &Common, perturb: Option<&Perturb>, scales: Option<&[f64]>) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig {
        order: common.order,
        grid_size: common.grid_size,
        count: common.num_eigenvalues,
        model: common.model.parse::<ModelSpec>()?,
        tolerances: parse_tol(common.tol.as_deref())?,
        output_dir: common.out.clone(),
        ..ExperimentConfig::default()
    };
    if let Some(p) = perturb {
        cfg.perturbation = p.perturb.parse::<PerturbationSpec>()?;
        cfg.seed = p.seed;
    }
    if let Some(s) = scales {
        cfg.scales = s.to_vec();
    }
    Ok(cfg)
}

fn complex(z: isp_core::Complex64) -> String {
    format!("{:.12e} {} {:.12e}i", z.re, if z.im < 0.0 { '-' } else { '+' }, z.im.abs())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Forward(common) => {
            let cfg = config(&common, None, None)?;
            let out = cmd_forward(&cfg)?;
            for d in out.data.data() {
                println!("l={} k={} lambda={} beta={}", d.l, d.k, complex(d.lambda), complex(d.beta));
            }
            if let Some(a) = out.asymptotics {
                for (k, theta) in a.theta.iter().enumerate() {
                    println!("theta_{} = {theta:.6}", k + 1);
                }
            }
            println!("wrote {}", cfg.output_dir.join("spectral_data.json").display());
        }
        Command::Invert { data, common } => {
            let cfg = config(&common, None, None)?;
            let inv = cmd_invert(&cfg, &data)?;
            println!(
                "Omega = {:.6e}, active = {}, residual = {:.3e}, sv_min = {:.3e}",
                inv.omega, inv.active, inv.solve.residual, inv.solve.sv_min
            );
            println!("wrote {}", cfg.output_dir.join("coefficients.csv").display());
        }
        Command::Roundtrip { common, perturb } => {
            let cfg = config(&common, Some(&perturb), None)?;
            let r = cmd_roundtrip(&cfg)?;
            println!(
                "Omega = {:.6e}, max relative discrepancy: lambda {:.3e}, beta {:.3e} ({})",
                r.inversion.omega,
                r.max_rel_lambda,
                r.max_rel_beta,
                if r.passed { "pass" } else { "FAIL" }
            );
            if !r.passed {
                eprintln!("error: round trip exceeded tolerance {:.1e}", cfg.tolerances.acceptance);
                return Ok(ExitCode::from(1));
            }
        }
        Command::StabilitySweep { common, perturb, scales } => {
            let cfg = config(&common, Some(&perturb), Some(&scales))?;
            let r = cmd_stability_sweep(&cfg)?;
            for row in &r.rows {
                match &row.outcome {
                    Ok(errs) => println!("Omega = {:.3e}: errors {:?}", row.omega, errs),
                    Err(msg) => println!("Omega = {:.3e}: failed ({msg})", row.omega),
                }
            }
            for (k, s) in r.slopes.iter().enumerate() {
                match s {
                    Some(v) => println!("slope p{k}: {v:.4}"),
                    None => println!("slope p{k}: n/a"),
                }
            }
            println!("wrote {}", cfg.output_dir.join("stability.csv").display());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
