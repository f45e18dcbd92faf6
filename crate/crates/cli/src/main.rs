use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rlex::alloc::TrackingAllocator;
use rlex::ingest::{write_csv, write_schema, EncodingParams};
use rlex::runner::{bench, parse_sort_spec, report_stats, run, Catalog, Mode, Plan, RunReport};
use rlex::synth::{lineitem, q6_plan, ShipDates};

#[global_allocator]
static ALLOC: TrackingAllocator = TrackingAllocator::system();

/// Runs JSON query plans over run-length and index encoded tables.
#[derive(Parser)]
#[command(name = "rlex", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a plan and print or write its report.
    Run {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// compressed, plain or diff.
        #[arg(long, default_value = "compressed")]
        mode: Mode,
        /// Report destination; stdout when omitted.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Sort and encode the CSV tables of a directory into `<data>/encoded`.
    Encode {
        #[arg(long)]
        data: PathBuf,
        /// `table:col1,col2`; repeatable.
        #[arg(long = "sort-by")]
        sort_by: Vec<String>,
        #[arg(long, default_value_t = EncodingParams::default().row_threshold)]
        row_threshold: usize,
        #[arg(long, default_value_t = EncodingParams::default().ratio_threshold)]
        ratio_threshold: f64,
    },
    /// Print per-column statistics of every table.
    Stats {
        #[arg(long)]
        data: PathBuf,
    },
    /// Time a plan over warm repetitions.
    Bench {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "compressed")]
        mode: Mode,
        #[arg(long, default_value_t = 5)]
        repetitions: usize,
    },
    /// Write a synthetic `lineitem` CSV, its schema and a sample plan.
    Gen {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        rows: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// One ship date per day instead of per month.
        #[arg(long)]
        daily: bool,
    },
}

fn write_json(value: &impl serde::Serialize, dest: Option<&Path>) -> rlex::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match dest {
        Some(p) => fs::write(p, text + "\n")?,
        None => {
            let mut out = std::io::stdout().lock();
            if let Err(e) = writeln!(out, "{text}") {
                // A closed pipe downstream is not a failure.
                if e.kind() != std::io::ErrorKind::BrokenPipe {
                    return Err(e.into());
                }
            }
        }
    }
    Ok(())
}

/// 2 when a differential run disagreed, else 0.
fn run_exit_code(rep: &RunReport) -> u8 {
    if rep.matched() {
        0
    } else {
        2
    }
}

fn read_plan(path: &Path) -> rlex::Result<Plan> {
    Plan::from_json(&fs::read_to_string(path)?)
}

fn execute(cmd: Command) -> rlex::Result<ExitCode> {
    match cmd {
        Command::Run { plan, data, mode, report } => {
            let catalog = Catalog::load_dir(&data)?;
            let rep = run(&catalog, &read_plan(&plan)?, mode)?;
            write_json(&rep, report.as_deref())?;
            let code = run_exit_code(&rep);
            if code != 0 {
                let d = rep.differential.as_ref();
                eprintln!("differential mismatch: {}", d.and_then(|d| d.first_mismatch.as_deref()).unwrap_or("results differ"));
            }
            return Ok(ExitCode::from(code));
        }
        Command::Encode { data, sort_by, row_threshold, ratio_threshold } => {
            let mut catalog = Catalog::ingest_dir(&data)?;
            let sort: BTreeMap<String, Vec<String>> =
                sort_by.iter().map(|s| parse_sort_spec(s)).collect::<rlex::Result<_>>()?;
            let params = EncodingParams { row_threshold, ratio_threshold, ..EncodingParams::default() };
            let choices = catalog.encode(&params, &sort)?;
            catalog.save_encoded(&data.join("encoded"), &sort, &choices)?;
            let summary: BTreeMap<&String, BTreeMap<&String, &rlex::ingest::EncodingChoice>> = choices
                .iter()
                .map(|(t, cs)| {
                    let fields = &catalog.tables[t].fields;
                    (t, fields.iter().map(|f| &f.name).zip(cs).collect())
                })
                .collect();
            write_json(&summary, None)?;
        }
        Command::Stats { data } => {
            let catalog = Catalog::load_dir(&data)?;
            let out: BTreeMap<&String, BTreeMap<String, rlex::column::ColumnStats>> =
                catalog.tables.iter().map(|(name, t)| (name, report_stats(t).into_iter().collect())).collect();
            write_json(&out, None)?;
        }
        Command::Bench { plan, data, mode, repetitions } => {
            let catalog = Catalog::load_dir(&data)?;
            write_json(&bench(&catalog, &read_plan(&plan)?, mode, repetitions)?, None)?;
        }
        Command::Gen { out, rows, seed, daily } => {
            fs::create_dir_all(&out)?;
            let mut dicts = Default::default();
            let dates = if daily { ShipDates::Daily } else { ShipDates::Monthly };
            let table = lineitem(rows, seed, dates, &mut dicts);
            write_csv(&table, &dicts, &out.join("lineitem.csv"))?;
            write_schema(&table, &out.join("lineitem.schema.json"))?;
            fs::write(out.join("q6.json"), serde_json::to_string_pretty(&q6_plan())? + "\n")?;
            let files = ["lineitem.csv", "lineitem.schema.json", "q6.json"];
            write_json(&serde_json::json!({ "table": "lineitem", "rows": rows, "files": files }), None)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match execute(Cli::parse().command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mismatch_exits_with_two() {
        let mut rep = run(&rlex::synth::sales_fixture(), &Plan::scan("sales"), Mode::Diff).unwrap();
        assert_eq!(run_exit_code(&rep), 0);
        rep.differential.as_mut().unwrap().matched = false;
        assert_eq!(run_exit_code(&rep), 2);
    }
}
