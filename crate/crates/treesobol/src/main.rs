use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde_json::Value;
use treesobol::harness::{self, Scenario};
use treesobol::io::{self as tio, PosteriorWriter};
use treesobol::lhd::{maximin_lhd, DEFAULT_RESTARTS};
use treesobol::{fit_with, SamplerConfig};
use treesobol_core::{aggregate_reports, ProductMeasure, SobolEngine};

#[derive(Parser)]
#[command(version, about = "Exact Sobol' indices for sum-of-trees ensembles")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sobol' indices of an ensemble file, or of every draw in a posterior file.
    Indices {
        file: PathBuf,
        /// Highest interaction order to report.
        #[arg(long, default_value_t = 2)]
        order: usize,
        /// Emit CSV rows (draw, set, V, S, T) instead of JSON.
        #[arg(long)]
        csv: bool,
    },
    /// Fit the sampler to a data CSV and write a posterior file.
    Fit {
        data: PathBuf,
        /// Sampler settings (TOML); defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Run a simulation scenario and write its metric row as CSV.
    Scenario {
        config: PathBuf,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Split counts versus first-order indices on the count-inflation example.
    DemoCounts {
        /// Scenario overrides (TOML); the built-in demo setting otherwise.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Print a maximin Latin hypercube as CSV.
    Lhd {
        n: usize,
        p: usize,
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_RESTARTS)]
        restarts: usize,
    },
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn indices(file: &Path, order: usize, csv: bool) -> Result<()> {
    let text = read(file)?;
    let v: Value = serde_json::from_str(&text).context("parsing JSON")?;
    let ensembles = if v.is_array() {
        tio::parse_posterior(&text)?
            .into_iter()
            .map(|d| d.ensemble)
            .collect()
    } else {
        vec![tio::ensemble_from_json(&v)?]
    };
    let reports = ensembles
        .iter()
        .map(|e| SobolEngine::new(e, &ProductMeasure::uniform(e.domain()))?.report(order))
        .collect::<treesobol_core::Result<Vec<_>>>()?;
    let mut out = output(None)?;
    if v.is_array() {
        let rep = aggregate_reports(reports)?;
        if csv {
            tio::write_report_csv(&rep, &mut out)?;
        } else {
            serde_json::to_writer_pretty(&mut out, &tio::posterior_report_to_json(&rep))?;
            writeln!(out)?;
        }
    } else if csv {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(["draw", "set", "V", "S", "T"])?;
        for row in tio::report_rows("0", &reports[0]) {
            w.write_record(&row)?;
        }
        w.flush()?;
    } else {
        serde_json::to_writer_pretty(&mut out, &tio::report_to_json(&reports[0]))?;
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Indices { file, order, csv } => indices(&file, order, csv)?,
        Cmd::Fit { data, config, out } => {
            let cfg: SamplerConfig = match config {
                Some(p) => toml::from_str(&read(&p)?).context("parsing sampler config")?,
                None => SamplerConfig::default(),
            };
            let data = tio::read_dataset(
                File::open(&data).with_context(|| format!("opening {}", data.display()))?,
            )?;
            let mut w = PosteriorWriter::new(output(out.as_deref())?)?;
            fit_with(&data, &cfg, |_, ens, sigma| w.push(ens, sigma))?;
            w.finish()?;
        }
        Cmd::Scenario { config, out } => {
            let s = Scenario::parse(&read(&config)?)?;
            let res = harness::run_scenario(&s)?;
            harness::write_metric_rows(&[res.row], output(out.as_deref())?)?;
        }
        Cmd::DemoCounts { config, out } => {
            let s = match config {
                Some(p) => Scenario::parse(&read(&p)?)?,
                None => Scenario::demo(),
            };
            let demo = harness::run_demo_counts(&s)?;
            eprintln!(
                "mean counts {:?}, mean S {:?}",
                demo.mean_counts, demo.mean_first_order
            );
            harness::write_counts_csv(&demo, output(out.as_deref())?)?;
        }
        Cmd::Lhd {
            n,
            p,
            seed,
            restarts,
        } => {
            let x = maximin_lhd(n, p, seed, restarts)?;
            let mut w = csv::Writer::from_writer(output(None)?);
            w.write_record((1..=p).map(|j| format!("x{j}")))?;
            for row in x {
                w.write_record(row.iter().map(f64::to_string))?;
            }
            w.flush()?;
        }
    }
    Ok(())
}
