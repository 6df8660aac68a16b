//! Command-line front end.
//!
//! ```text
//! slt-lab run --config F --out D [--seed S] [--threads T]
//! slt-lab theory --model M --beta B --n N1,N2,...
//! slt-lab fit --dir D
//! slt-lab plotdata --dir D
//! ```
//!
//! Exit codes: 0 on success, 2 on invalid input (config, model id, missing
//! or garbled files), 3 when a replication fails its mixing diagnostics
//! after the automatic retry, 1 for anything else.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use log::{error, info};

use crate::error::{Error, Result};
use crate::harness::io::{self as files, RunManifest};
use crate::harness::{fit_table, run_experiment, ExperimentConfig, FitReport};
use crate::model::{ModelId, ModelSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NON_MIXING: i32 = 3;

/// Environment variable used for `--out` when the flag is absent.
pub const OUT_DIR_ENV: &str = "SLT_LAB_OUT";

#[derive(Debug, Parser)]
#[command(
    name = "slt-lab",
    version,
    about = "Learning curves of Bayes observables for singular models"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an experiment and write its result files.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, env = OUT_DIR_ENV)]
        out: PathBuf,
        /// Overrides `master_seed` from the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; 0 picks the number of cores.
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Print theory predictions as CSV.
    Theory {
        #[arg(long)]
        model: String,
        #[arg(long)]
        beta: f64,
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
    },
    /// Recompute fits.json from aggregate.csv.
    Fit {
        #[arg(long)]
        dir: PathBuf,
    },
    /// Print long-format plot data as CSV.
    Plotdata {
        #[arg(long)]
        dir: PathBuf,
    },
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_non_mixing() {
        return EXIT_NON_MIXING;
    }
    match e {
        Error::Config(_)
        | Error::Invalid(_)
        | Error::Io { .. }
        | Error::Format { .. }
        | Error::Dimension { .. }
        | Error::OutsideBox { .. } => EXIT_INVALID,
        _ => EXIT_FAILURE,
    }
}

fn report_error(e: &Error) -> i32 {
    error!("{e}");
    eprintln!("error: {e}");
    exit_code(e)
}

fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

pub fn load_config(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut cfg = ExperimentConfig::from_toml_str(&text).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        other => other,
    })?;
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    Ok(cfg)
}

/// Runs an experiment and writes the five result files.
pub fn run_to_dir(cfg: &ExperimentConfig, out: &Path, threads: usize) -> Result<FitReport> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?;
    let started = timestamp();
    let output = pool.install(|| run_experiment(cfg))?;
    let report = fit_table(&output.table)?;
    let manifest = RunManifest::new(&output, started, timestamp());
    files::write_results(out, &output, &report, &manifest)?;
    Ok(report)
}

pub fn cmd_run(config: &Path, out: &Path, seed: Option<u64>, threads: usize) -> i32 {
    let result = load_config(config, seed).and_then(|cfg| {
        info!(
            "running {} beta={} n_grid={:?} R={}",
            cfg.model, cfg.beta, cfg.n_grid, cfg.replications
        );
        run_to_dir(&cfg, out, threads)
    });
    match result {
        Ok(report) => {
            print_summary(&mut std::io::stdout(), &report);
            info!("results written to {}", out.display());
            EXIT_OK
        }
        Err(e) => report_error(&e),
    }
}

/// Theory rows as CSV. Cells that need an unknown constant are left empty.
pub fn theory_csv(model: ModelId, beta: f64, ns: &[usize]) -> Result<String> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::Invalid(format!("beta must be positive, got {beta}")));
    }
    if ns.contains(&0) {
        return Err(Error::Invalid("every n must be positive".into()));
    }
    let card = ModelSpec::builtin(model).theory_card();
    let l0 = card.l0;
    let mut out = String::from(
        "model,beta,n,L0,Bg,Bt,Gg,Gt,Yg,Yt,Vt,waic,Bg-L0,Bt-L0,Gg-L0,Gt-L0,GgGt-2L0\n",
    );
    let f = files::fmt_real;
    for &n in ns {
        let cells: Vec<String> = match card.predict(beta, n) {
            Ok(o) => [
                o.bg,
                o.bt,
                o.gg,
                o.gt,
                o.yg,
                o.yt,
                o.vt,
                o.waic,
                o.bg - l0,
                o.bt - l0,
                o.gg - l0,
                o.gt - l0,
            ]
            .map(f)
            .to_vec(),
            Err(Error::MissingConstant(_)) => vec![String::new(); 12],
            Err(e) => return Err(e),
        };
        let sum = card.predict_gibbs_sum(beta, n)?;
        out.push_str(&format!(
            "{model},{},{n},{},{},{}\n",
            f(beta),
            f(l0),
            cells.join(","),
            f(sum)
        ));
    }
    Ok(out)
}

pub fn cmd_theory(out: &mut dyn Write, model: &str, beta: f64, ns: &[usize]) -> i32 {
    let result = model
        .parse::<ModelId>()
        .and_then(|m| theory_csv(m, beta, ns));
    match result {
        Ok(text) => {
            let _ = out.write_all(text.as_bytes());
            EXIT_OK
        }
        Err(e) => report_error(&e),
    }
}

pub fn print_summary(out: &mut dyn Write, report: &FitReport) {
    let fit = &report.fit;
    let _ = writeln!(
        out,
        "model {} beta {} n_grid {:?}",
        report.model, report.beta, report.n_grid
    );
    let pair = |v: Option<f64>, s: Option<f64>| match (v, s) {
        (Some(v), Some(s)) => format!("{v:.5} +/- {s:.5}"),
        _ => "n/a".into(),
    };
    let _ = writeln!(out, "  kappa_hat  {}", pair(fit.kappa_hat, fit.kappa_se));
    let _ = writeln!(out, "  lambda_hat {}", pair(fit.lambda_hat, fit.lambda_se));
    let _ = writeln!(
        out,
        "  lambda_cv  {}",
        pair(fit.lambda_cv_hat, fit.lambda_cv_se)
    );
    let _ = writeln!(out, "  nu_hat     {}", pair(fit.nu_hat, fit.nu_se));
    let _ = writeln!(out, "  Vt slope   {}", pair(fit.vt_slope, fit.vt_slope_se));
    for c in &report.checks {
        let verdict = if c.pass { "PASS" } else { "FAIL" };
        let _ = writeln!(
            out,
            "  {verdict} {:<16} value {:.5} se {:.5} target {:.5} ({})",
            c.name, c.value, c.se, c.target, c.rule
        );
    }
}

/// Recomputes `fits.json` from `aggregate.csv` in `dir`.
pub fn refit_dir(dir: &Path) -> Result<FitReport> {
    let table = files::read_aggregate(&dir.join(files::AGGREGATE_CSV))?;
    let report = fit_table(&table)?;
    files::write_fits(dir, &report)?;
    Ok(report)
}

pub fn cmd_fit(out: &mut dyn Write, dir: &Path) -> i32 {
    match refit_dir(dir) {
        Ok(report) => {
            print_summary(out, &report);
            EXIT_OK
        }
        Err(e) => report_error(&e),
    }
}

pub fn plotdata_csv(dir: &Path) -> Result<Vec<u8>> {
    let table = files::read_aggregate(&dir.join(files::AGGREGATE_CSV))?;
    Ok(files::plot_csv(&files::plot_rows(&table)))
}

pub fn cmd_plotdata(out: &mut dyn Write, dir: &Path) -> i32 {
    match plotdata_csv(dir) {
        Ok(bytes) => {
            let _ = out.write_all(&bytes);
            EXIT_OK
        }
        Err(e) => report_error(&e),
    }
}

/// Dispatches a parsed command line and returns the process exit code.
pub fn dispatch(cli: Cli) -> i32 {
    let mut stdout = std::io::stdout();
    match cli.command {
        Command::Run {
            config,
            out,
            seed,
            threads,
        } => cmd_run(&config, &out, seed, threads),
        Command::Theory { model, beta, n } => cmd_theory(&mut stdout, &model, beta, &n),
        Command::Fit { dir } => cmd_fit(&mut stdout, &dir),
        Command::Plotdata { dir } => cmd_plotdata(&mut stdout, &dir),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn column(csv: &str, name: &str, row: usize) -> String {
        let mut lines = csv.lines();
        let header: Vec<&str> = lines.next().unwrap().split(',').collect();
        let k = header.iter().position(|h| *h == name).unwrap();
        lines
            .nth(row)
            .unwrap()
            .split(',')
            .nth(k)
            .unwrap()
            .to_string()
    }

    #[test]
    fn theory_rows() {
        let t = theory_csv(ModelId::Regular1d, 1.0, &[100, 200]).unwrap();
        let gg: f64 = column(&t, "Gg-L0", 0).parse().unwrap();
        assert!((gg - 0.01).abs() < 1e-15);
        let gt: f64 = column(&t, "Gt-L0", 1).parse().unwrap();
        assert_eq!(gt, 0.0);

        let t = theory_csv(ModelId::NonrenormA, 1.0, &[1000]).unwrap();
        let gg: f64 = column(&t, "Gg-L0", 0).parse().unwrap();
        assert!((gg - 4.154e-3).abs() < 1e-6, "{gg}");
    }

    #[test]
    fn unknown_nu_leaves_cells_empty() {
        let t = theory_csv(ModelId::SingularAb, 1.0, &[100]).unwrap();
        assert_eq!(column(&t, "Gg", 0), "");
        let s: f64 = column(&t, "GgGt-2L0", 0).parse().unwrap();
        assert!((s - 0.01).abs() < 1e-15);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Config("x".into())), EXIT_INVALID);
        let nm = Error::Replication {
            n: 100,
            replication: 3,
            source: Box::new(Error::NonMixing {
                min_ess: 3.0,
                max_rhat: 2.0,
            }),
        };
        assert_eq!(exit_code(&nm), EXIT_NON_MIXING);
        assert_eq!(exit_code(&Error::SignChange), EXIT_FAILURE);
    }

    #[test]
    fn empty_dir_fit_is_invalid() {
        let dir = tempfile::tempdir().unwrap();
        let mut sink = Vec::new();
        assert_eq!(cmd_fit(&mut sink, dir.path()), EXIT_INVALID);
        assert_eq!(cmd_plotdata(&mut sink, dir.path()), EXIT_INVALID);
    }

    #[test]
    fn unknown_model_is_invalid() {
        let mut sink = Vec::new();
        assert_eq!(cmd_theory(&mut sink, "foo", 1.0, &[100]), EXIT_INVALID);
    }
}
