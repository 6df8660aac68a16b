//! Result files: `observables.csv`, `aggregate.csv`, `fits.json`,
//! `manifest.json` and the `config.toml` echo.
//!
//! CSV files are comma separated with a header row and LF line endings.
//! Reals are written with 17 significant digits so they parse back to the
//! same bits.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::aggregate::{AggregateRow, AggregateTable, MeanSe, Series};
use super::config::ExperimentConfig;
use super::experiment::{ExperimentOutput, ReplicationRecord};
use super::fit::FitReport;
use crate::error::{Error, Result};
use crate::model::ModelId;

pub const OBSERVABLES_CSV: &str = "observables.csv";
pub const AGGREGATE_CSV: &str = "aggregate.csv";
pub const FITS_JSON: &str = "fits.json";
pub const MANIFEST_JSON: &str = "manifest.json";
pub const CONFIG_TOML: &str = "config.toml";

pub const OBSERVABLE_COLUMNS: [&str; 15] = [
    "model",
    "beta",
    "n",
    "replication",
    "Bg",
    "Bt",
    "Gg",
    "Gt",
    "Yg",
    "Yt",
    "Vt",
    "waic",
    "ess_min",
    "accept_rate",
    "Ln0",
];

pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_writer(buf: &mut Vec<u8>) -> csv::Writer<&mut Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(buf)
}

fn csv_bytes(header: &[String], rows: &[Vec<String>]) -> Vec<u8> {
    let mut buf = Vec::new();
    {
        let mut w = csv_writer(&mut buf);
        w.write_record(header).expect("in-memory write");
        for r in rows {
            w.write_record(r).expect("in-memory write");
        }
        w.flush().expect("in-memory write");
    }
    buf
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn observables_csv(model: ModelId, records: &[ReplicationRecord]) -> Vec<u8> {
    let header: Vec<String> = OBSERVABLE_COLUMNS.iter().map(|s| s.to_string()).collect();
    let rows: Vec<Vec<String>> = records
        .iter()
        .map(|rec| {
            let o = &rec.observables;
            let mut row = vec![
                model.to_string(),
                fmt_real(o.beta),
                rec.n.to_string(),
                rec.replication.to_string(),
            ];
            row.extend(
                [
                    o.bg,
                    o.bt,
                    o.gg,
                    o.gt,
                    o.yg,
                    o.yt,
                    o.vt,
                    o.waic,
                    rec.ess_min,
                    rec.accept_rate,
                    o.ln0,
                ]
                .map(fmt_real),
            );
            row
        })
        .collect();
    csv_bytes(&header, &rows)
}

fn aggregate_header() -> Vec<String> {
    let mut h: Vec<String> = ["model", "beta", "n", "replications"]
        .map(String::from)
        .to_vec();
    for s in Series::ALL {
        h.push(format!("{}_mean", s.name()));
        h.push(format!("{}_se", s.name()));
    }
    h
}

pub fn aggregate_csv(table: &AggregateTable) -> Vec<u8> {
    let rows: Vec<Vec<String>> = table
        .rows
        .iter()
        .map(|r| {
            let mut row = vec![
                table.model.to_string(),
                fmt_real(table.beta),
                r.n.to_string(),
                r.replications.to_string(),
            ];
            for s in Series::ALL {
                let m = r.get(s);
                row.push(fmt_real(m.mean));
                row.push(fmt_real(m.se));
            }
            row
        })
        .collect();
    csv_bytes(&aggregate_header(), &rows)
}

/// Parses `aggregate.csv` back into a table.
pub fn read_aggregate(path: &Path) -> Result<AggregateTable> {
    let bad = |message: String| Error::Format {
        path: path.to_path_buf(),
        message,
    };
    let text = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().from_reader(text.as_slice());
    let header = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
    let expected = aggregate_header();
    if header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(bad("unexpected header".into()));
    }
    let mut model = None;
    let mut beta = None;
    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let ctx = |col: usize, e: String| {
            bad(format!("row {}, column `{}`: {e}", line + 1, expected[col]))
        };
        let real = |col: usize| rec[col].parse::<f64>().map_err(|e| ctx(col, e.to_string()));
        let int = |col: usize| {
            rec[col]
                .parse::<usize>()
                .map_err(|e| ctx(col, e.to_string()))
        };
        let m: ModelId = rec[0].parse().map_err(|e: Error| ctx(0, e.to_string()))?;
        let b = real(1)?;
        if model.is_some_and(|x| x != m) || beta.is_some_and(|x: f64| x.to_bits() != b.to_bits()) {
            return Err(bad(format!("row {}: mixed model or beta", line + 1)));
        }
        model = Some(m);
        beta = Some(b);
        let stats = (0..Series::ALL.len())
            .map(|k| {
                Ok(MeanSe {
                    mean: real(4 + 2 * k)?,
                    se: real(5 + 2 * k)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(AggregateRow::new(int(2)?, int(3)?, stats));
    }
    match (model, beta) {
        (Some(model), Some(beta)) => Ok(AggregateTable { model, beta, rows }),
        _ => Err(bad("no data rows".into())),
    }
}

pub fn fits_json(report: &FitReport) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s.into_bytes()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedEntry {
    pub n: usize,
    pub replication: usize,
    pub seed: u64,
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    /// The configuration as TOML text; re-parses to an equal config.
    pub config_toml: String,
    pub config: ExperimentConfig,
    pub master_seed: u64,
    pub started_at: String,
    pub finished_at: String,
    pub seeds: Vec<SeedEntry>,
}

impl RunManifest {
    pub fn new(output: &ExperimentOutput, started_at: String, finished_at: String) -> Self {
        RunManifest {
            version: format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION")),
            config_toml: output.config.to_toml_string(),
            config: output.config.clone(),
            master_seed: output.config.master_seed,
            started_at,
            finished_at,
            seeds: output
                .records
                .iter()
                .map(|r| SeedEntry {
                    n: r.n,
                    replication: r.replication,
                    seed: r.seed,
                })
                .collect(),
        }
    }
}

/// Writes the five result files into `dir`, creating it if needed.
pub fn write_results(
    dir: &Path,
    output: &ExperimentOutput,
    report: &FitReport,
    manifest: &RunManifest,
) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let cfg = &output.config;
    write_file(
        &dir.join(OBSERVABLES_CSV),
        &observables_csv(cfg.model, &output.records),
    )?;
    write_file(&dir.join(AGGREGATE_CSV), &aggregate_csv(&output.table))?;
    write_file(&dir.join(FITS_JSON), &fits_json(report))?;
    let mut m = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    m.push('\n');
    write_file(&dir.join(MANIFEST_JSON), m.as_bytes())?;
    write_file(&dir.join(CONFIG_TOML), cfg.to_toml_string().as_bytes())
}

pub fn write_fits(dir: &Path, report: &FitReport) -> Result<PathBuf> {
    let path = dir.join(FITS_JSON);
    write_file(&path, &fits_json(report))?;
    Ok(path)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotRow {
    pub series: Series,
    pub n: usize,
    pub value: f64,
    pub se: f64,
    pub theory_value: Option<f64>,
}

/// Long-format rows, one per (observable, n), with theory values where the
/// theory card determines them.
pub fn plot_rows(table: &AggregateTable) -> Vec<PlotRow> {
    let card = crate::model::ModelSpec::builtin(table.model).theory_card();
    let mut out = Vec::new();
    for s in Series::OBSERVABLES {
        for r in &table.rows {
            let m = r.get(s);
            let theory_value = card.predict(table.beta, r.n).ok().map(|o| s.of(&o));
            out.push(PlotRow {
                series: s,
                n: r.n,
                value: m.mean,
                se: m.se,
                theory_value,
            });
        }
    }
    out
}

pub fn plot_csv(rows: &[PlotRow]) -> Vec<u8> {
    let header: Vec<String> = ["series", "n", "value", "se", "theory_value"]
        .map(String::from)
        .to_vec();
    let rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.series.name().to_string(),
                r.n.to_string(),
                fmt_real(r.value),
                fmt_real(r.se),
                r.theory_value.map(fmt_real).unwrap_or_default(),
            ]
        })
        .collect();
    csv_bytes(&header, &rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelSpec;

    #[test]
    fn reals_round_trip_exactly() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02e23, f64::MIN_POSITIVE, 0.0] {
            assert_eq!(fmt_real(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
        assert!(fmt_real(f64::NAN).parse::<f64>().unwrap().is_nan());
    }

    #[test]
    fn aggregate_round_trip() {
        let card = ModelSpec::builtin(ModelId::NonrenormA).theory_card();
        let sets: Vec<_> = [200, 500]
            .iter()
            .map(|&n| card.predict(0.5, n).unwrap())
            .collect();
        let table = AggregateTable::exact(ModelId::NonrenormA, 0.5, &sets);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(AGGREGATE_CSV);
        fs::write(&path, aggregate_csv(&table)).unwrap();
        assert_eq!(read_aggregate(&path).unwrap(), table);
        let bytes = fs::read(&path).unwrap();
        assert!(!bytes.contains(&b'\r'));
    }

    #[test]
    fn garbled_aggregate_is_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(AGGREGATE_CSV);
        fs::write(&path, "model,beta\nregular1d,1\n").unwrap();
        assert!(matches!(read_aggregate(&path), Err(Error::Format { .. })));
        assert!(matches!(
            read_aggregate(&dir.path().join("missing.csv")),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn plot_rows_shape() {
        let card = ModelSpec::builtin(ModelId::Regular1d).theory_card();
        let sets: Vec<_> = [100, 200, 400]
            .iter()
            .map(|&n| card.predict(1.0, n).unwrap())
            .collect();
        let table = AggregateTable::exact(ModelId::Regular1d, 1.0, &sets);
        let rows = plot_rows(&table);
        assert_eq!(rows.len(), 18);
        for r in rows {
            assert_eq!(r.theory_value, Some(r.value));
        }
    }
}
