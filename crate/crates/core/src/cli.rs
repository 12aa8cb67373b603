//! Command-line interface.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use indexmap::IndexMap;
use serde::Serialize;

use crate::config::RunConfig;
use crate::data::{load, synthesize, Part, Schema, SurvivalDataset, SynthSpec, Table};
use crate::error::{Error, Result};
use crate::grfn::{bel_pl, contour, mode_density, RealInterval};
use crate::metrics::EvalReport;
use crate::pipeline::{evaluate_part, fit_dataset, ModelFile};
use crate::training::Mode;

#[derive(Debug, Parser)]
#[command(name = "esurv", version, about = "Evidential multimodal survival analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PartArg {
    Train,
    Val,
    Test,
}

impl From<PartArg> for Part {
    fn from(p: PartArg) -> Part {
        match p {
            PartArg::Train => Part::Train,
            PartArg::Val => Part::Val,
            PartArg::Test => Part::Test,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model; writes the model, training log and reports.
    Fit {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_parser = parse_mode)]
        mode: Option<Mode>,
        /// Comma-separated seeds; each run goes to its own subdirectory.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
    },
    /// Evaluate a saved model on one part of its split.
    Evaluate {
        /// Model file, or with --seeds the fit output directory.
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        part: PartArg,
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
    },
    /// Predict survival times for the rows of a CSV file.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
    },
    /// Write a synthetic two-modality cohort with its schema and config.
    Simulate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 0.6)]
        censoring: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Emit contour, Bel/Pl and mode-density columns over a grid.
    Inspect {
        #[arg(long)]
        model: PathBuf,
        /// Row index into the dataset of --config, or a CSV whose first row is used.
        #[arg(long)]
        row: String,
        /// `lo,hi,n` in transformed-time units.
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn parse_mode(s: &str) -> std::result::Result<Mode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Runs a parsed command, writing results to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Fit { config, mode, seeds } => cmd_fit(&config, mode, seeds, out),
        Command::Evaluate { model, config, part, seeds } => cmd_evaluate(&model, &config, part.into(), seeds, out),
        Command::Predict { model, input } => cmd_predict(&model, &input, out),
        Command::Simulate { n, seed, censoring, out: dir } => cmd_simulate(n, seed, censoring, &dir, out),
        Command::Inspect { model, row, grid, config } => cmd_inspect(&model, &row, &grid, config.as_deref(), out),
    }
}

/// Single-line JSON error record.
pub fn error_record(err: &Error) -> String {
    let class = err.class();
    serde_json::json!({
        "error": class.name(),
        "exit_code": class.exit_code(),
        "message": err.to_string(),
    })
    .to_string()
}

fn base_dir(path: &Path) -> &Path {
    path.parent().unwrap_or(Path::new("."))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn emit(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes()).map_err(|e| Error::io("<stdout>", e))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn load_config(path: &Path) -> Result<(RunConfig, Schema, SurvivalDataset)> {
    let cfg = RunConfig::read(path)?;
    let schema_path = base_dir(path).join(&cfg.schema);
    let schema = Schema::read(&schema_path)?;
    let ds = load(&schema, base_dir(&schema_path))?;
    Ok((cfg, schema, ds))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

fn mean_std(values: &[f64]) -> MeanStd {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    MeanStd { mean, std: var.sqrt() }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub c_index: f64,
    pub c_index_harrell: f64,
    pub ibs: f64,
    pub ibll: f64,
    pub logrank_p: f64,
    pub reliabilities: IndexMap<String, f64>,
    pub modality_c_index: IndexMap<String, f64>,
}

/// Mean and population standard deviation of each metric across seeds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub mode: Mode,
    pub part: Part,
    pub seeds: Vec<u64>,
    pub metrics: IndexMap<String, MeanStd>,
    pub runs: Vec<SeedSummary>,
}

pub fn summarize(mode: Mode, part: Part, reports: &[(u64, EvalReport)]) -> Summary {
    let runs: Vec<SeedSummary> = reports
        .iter()
        .map(|(seed, r)| SeedSummary {
            seed: *seed,
            c_index: r.c_index,
            c_index_harrell: r.c_index_harrell,
            ibs: r.ibs,
            ibll: r.ibll,
            logrank_p: r.logrank_p,
            reliabilities: r.reliabilities.clone(),
            modality_c_index: r.modalities.iter().map(|(k, v)| (k.clone(), v.c_index)).collect(),
        })
        .collect();
    let mut metrics = IndexMap::new();
    let column = |f: &dyn Fn(&SeedSummary) -> f64| mean_std(&runs.iter().map(f).collect::<Vec<_>>());
    metrics.insert("c_index".to_string(), column(&|r| r.c_index));
    metrics.insert("c_index_harrell".to_string(), column(&|r| r.c_index_harrell));
    metrics.insert("ibs".to_string(), column(&|r| r.ibs));
    metrics.insert("ibll".to_string(), column(&|r| r.ibll));
    if let Some(first) = runs.first() {
        for name in first.reliabilities.keys() {
            metrics.insert(format!("reliability.{name}"), column(&|r| r.reliabilities[name]));
        }
        for name in first.modality_c_index.keys() {
            metrics.insert(format!("c_index.{name}"), column(&|r| r.modality_c_index[name]));
        }
    }
    Summary { mode, part, seeds: reports.iter().map(|r| r.0).collect(), metrics, runs }
}

fn seed_dir(root: &Path, seed: u64) -> PathBuf {
    root.join(format!("seed-{seed}"))
}

fn cmd_fit(config: &Path, mode: Option<Mode>, seeds: Option<Vec<u64>>, out: &mut dyn Write) -> Result<()> {
    let (mut cfg, schema, ds) = load_config(config)?;
    if let Some(m) = mode {
        cfg.mode = m;
    }
    let root = base_dir(config).join(&cfg.output_dir);
    let multi = seeds.is_some();
    let seeds = seeds.unwrap_or_else(|| vec![cfg.seed]);
    let mut test_reports = Vec::new();
    for &seed in &seeds {
        cfg.seed = seed;
        let dir = if multi { seed_dir(&root, seed) } else { root.clone() };
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let fit = fit_dataset(&ds, &schema.id_column, &cfg)?;
        fit.model_file.write(&dir.join("model.json"))?;
        write_file(&dir.join("train_log.jsonl"), &fit.log.to_jsonl())?;
        write_file(&dir.join("val_report.json"), &to_json(&fit.val_report))?;
        let test = crate::pipeline::evaluate_rows(&fit.model_file, &fit.model, &ds, &fit.split.test)?;
        write_file(&dir.join("test_report.json"), &to_json(&test))?;
        let line = serde_json::json!({
            "seed": seed,
            "mode": cfg.mode,
            "model": dir.join("model.json"),
            "epochs": fit.log.n_epochs(),
            "val_c_index": fit.val_report.c_index,
            "test_c_index": test.c_index,
            "reliabilities": fit.val_report.reliabilities,
        });
        emit(out, &format!("{line}\n"))?;
        test_reports.push((seed, test));
    }
    if multi {
        let summary = summarize(cfg.mode, Part::Test, &test_reports);
        std::fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
        write_file(&root.join("summary.json"), &to_json(&summary))?;
    }
    Ok(())
}

fn cmd_evaluate(model: &Path, config: &Path, part: Part, seeds: Option<Vec<u64>>, out: &mut dyn Write) -> Result<()> {
    let (cfg, _, ds) = load_config(config)?;
    match seeds {
        None => {
            let mf = ModelFile::read(model)?;
            emit(out, &to_json(&evaluate_part(&mf, &ds, &cfg, part)?))
        }
        Some(seeds) => {
            let mut reports = Vec::new();
            let mut mode = cfg.mode;
            for seed in seeds {
                let mf = ModelFile::read(&seed_dir(model, seed).join("model.json"))?;
                mode = mf.mode;
                reports.push((seed, evaluate_part(&mf, &ds, &cfg, part)?));
            }
            emit(out, &to_json(&summarize(mode, part, &reports)))
        }
    }
}

fn cmd_predict(model: &Path, input: &Path, out: &mut dyn Write) -> Result<()> {
    let mf = ModelFile::read(model)?;
    let mm = mf.model()?;
    let table = Table::read(input)?;
    let features = mf.encode_table(&table)?;
    let id_col = table.headers.iter().position(|h| *h == mf.id_column);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["id", "predicted_time", "mu", "sigma2", "h"])?;
    let mut xs: Vec<&[f64]> = Vec::new();
    for (row, raw) in table.rows.iter().enumerate() {
        xs.clear();
        xs.extend(features.iter().map(|m| m[row].as_slice()));
        let p = mm.predict(&xs)?;
        let id = id_col.map_or_else(|| row.to_string(), |c| raw[c].clone());
        w.write_record([id, fmt_f64(p.time), fmt_f64(p.grfn.mu), fmt_f64(p.grfn.sigma2), fmt_f64(p.grfn.h)])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::io("<stdout>", e.into_error()))?;
    out.write_all(&bytes).map_err(|e| Error::io("<stdout>", e))
}

/// Shortest round-trip text, switching to exponent form for very small or large magnitudes.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || !a.is_finite() || (1e-4..1e15).contains(&a) {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

fn write_csv(path: &Path, header: &[String], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn cmd_simulate(n: usize, seed: u64, censoring: f64, dir: &Path, out: &mut dyn Write) -> Result<()> {
    let spec = SynthSpec { censoring, ..SynthSpec::default() };
    let cohort = synthesize(n, seed, &spec)?;
    let ds = &cohort.dataset;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut modalities = IndexMap::new();
    for m in &ds.modalities {
        let file = format!("{}.csv", m.name);
        let mut header = vec!["id".to_string()];
        header.extend(m.encoding.numeric_columns.iter().cloned());
        write_csv(
            &dir.join(&file),
            &header,
            ds.ids.iter().zip(&m.rows).map(|(id, r)| {
                std::iter::once(id.clone()).chain(r.iter().map(|&v| fmt_f64(v))).collect()
            }),
        )?;
        modalities.insert(
            m.name.clone(),
            crate::data::ModalitySchema {
                file: file.into(),
                feature_columns: m.encoding.numeric_columns.clone(),
                categorical_columns: Vec::new(),
            },
        );
    }
    write_csv(
        &dir.join("outcome.csv"),
        &["id".into(), "time".into(), "event".into()],
        (0..ds.n()).map(|i| vec![ds.ids[i].clone(), fmt_f64(ds.time[i]), (ds.event[i] as u8).to_string()]),
    )?;
    write_csv(
        &dir.join("truth.csv"),
        &["id".into(), "true_time".into(), "linear_predictor".into()],
        (0..ds.n()).map(|i| vec![ds.ids[i].clone(), fmt_f64(cohort.true_times[i]), fmt_f64(cohort.linear_predictor[i])]),
    )?;
    let schema = Schema {
        id_column: "id".into(),
        time_column: "time".into(),
        event_column: "event".into(),
        outcome_file: Some("outcome.csv".into()),
        modalities,
    };
    write_file(&dir.join("schema.toml"), &schema.to_toml())?;
    let mut cfg = RunConfig::new("schema.toml");
    cfg.seed = seed;
    write_file(&dir.join("config.toml"), &toml::to_string(&cfg).expect("config serializes"))?;
    let line = serde_json::json!({ "n": n, "seed": seed, "censoring_target": censoring, "censoring_achieved": cohort.achieved_censoring, "out": dir });
    emit(out, &format!("{line}\n"))
}

fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
    let bad = || Error::Config(format!("grid '{spec}' must be lo,hi,n with lo < hi and n >= 2"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].parse().map_err(|_| bad())?;
    let n: usize = parts[2].parse().map_err(|_| bad())?;
    if !(lo < hi && lo.is_finite() && hi.is_finite()) || n < 2 {
        return Err(bad());
    }
    Ok((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect())
}

fn cmd_inspect(model: &Path, row: &str, grid: &str, config: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    let mf = ModelFile::read(model)?;
    let mm = mf.model()?;
    let ys = parse_grid(grid)?;
    let features: Vec<Vec<f64>> = if let Ok(index) = row.parse::<usize>() {
        let config = config.ok_or_else(|| Error::Config("a row index needs --config to locate the data".into()))?;
        let (_, _, ds) = load_config(config)?;
        if index >= ds.n() {
            return Err(Error::Data(format!("row {index} out of range for {} rows", ds.n())));
        }
        mf.features(&ds, &[index])?.into_iter().map(|mut m| m.remove(0)).collect()
    } else {
        let table = Table::read(Path::new(row))?;
        if table.rows.is_empty() {
            return Err(Error::Data(format!("{row} has no data rows")));
        }
        mf.encode_table(&table)?.into_iter().map(|mut m| m.remove(0)).collect()
    };
    let xs: Vec<&[f64]> = features.iter().map(Vec::as_slice).collect();
    let fo = mm.fuse(&xs)?;

    let mut header = vec!["y".to_string(), "contour_fused".to_string()];
    header.extend(mm.names().iter().map(|n| format!("contour_{n}")));
    header.extend(["pl_survival", "bel_survival", "mode_density"].map(String::from));
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header)?;
    for &y in &ys {
        let mut rec = vec![fmt_f64(y), fmt_f64(contour(&fo.fused, y)?)];
        for g in &fo.discounted {
            rec.push(fmt_f64(contour(g, y)?));
        }
        let (bel, pl) = bel_pl(&fo.fused, &RealInterval::at_least(y));
        rec.push(fmt_f64(pl));
        rec.push(fmt_f64(bel));
        rec.push(mode_density(&fo.fused, y).map_or_else(|| "NA".to_string(), fmt_f64));
        w.write_record(&rec)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::io("<stdout>", e.into_error()))?;
    out.write_all(&bytes).map_err(|e| Error::io("<stdout>", e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("0,1,3").unwrap(), vec![0.0, 0.5, 1.0]);
        assert!(parse_grid("1,0,3").is_err());
        assert!(parse_grid("0,1").is_err());
        assert!(parse_grid("0,1,1").is_err());
    }

    #[test]
    fn float_text_round_trips() {
        for v in [0.0, 1.5, -2.25e-9, 3.0e-300, 7.0e20, 0.1, 12345.678] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_f64(2.5e-7), "2.5e-7");
    }

    #[test]
    fn mean_std_population() {
        let m = mean_std(&[1.0, 3.0]);
        assert_eq!((m.mean, m.std), (2.0, 1.0));
    }

    #[test]
    fn error_record_is_one_line_json() {
        let rec = error_record(&Error::Schema("missing column 'x'".into()));
        assert!(!rec.contains('\n'));
        let v: serde_json::Value = serde_json::from_str(&rec).unwrap();
        assert_eq!(v["exit_code"], 2);
        assert_eq!(v["error"], "config");
    }
}
