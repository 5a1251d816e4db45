use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use eprlab::engine::Seeds;
use eprlab::scenario::{
    analyze_records, canonical_json, exact_oracle_report, list_builtins, parse_config, read_records, run_scenario,
    RecordFormat, RunOptions, Scenario,
};
use eprlab::tables::{product_table, row_sum, InstructionSet, SettingPair};
use eprlab::{engine::ExperimentConfig, engine::ModelSpec, Error, Result};

#[derive(Parser)]
#[command(name = "eprlab", version, about = "Local hidden-variable simulations of a three-setting spin experiment")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
    Both,
}

impl From<Format> for RecordFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Json => RecordFormat::Json,
            Format::Csv => RecordFormat::Csv,
            Format::Both => RecordFormat::Both,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one or more scenario files. Several files run in parallel, each
    /// writing into its own subdirectory of --out.
    Run {
        #[arg(long = "config", required = true)]
        configs: Vec<PathBuf>,
        /// Output directory; defaults to the scenario's `outputs.dir`, then `out`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Replace every stream seed by ones derived from this master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Record hidden values alongside each trial.
        #[arg(long)]
        audit: bool,
        /// Export records in this format.
        #[arg(long, value_enum)]
        format: Option<Format>,
        #[arg(long)]
        deterministic_timestamps: bool,
    },
    /// Print the 8 x 9 product table.
    Table {
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        /// Also write table.csv and table.json here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print exact expectations for a scenario's source and pair distributions.
    Oracle {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Re-run the analyses of a scenario on exported records.
    Analyze {
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write analysis.json here instead of printing it.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List models, stack algorithms and analyses.
    List,
}

fn load(path: &Path, seed: Option<u64>, audit: bool) -> Result<Scenario> {
    let mut scenario = parse_config(path)?;
    if let Some(master) = seed {
        scenario.config.seeds = Seeds::from_master(master);
    }
    scenario.config.audit |= audit;
    Ok(scenario)
}

fn default_scenario() -> Scenario {
    Scenario::new("default", ExperimentConfig::new(ModelSpec::Mermin, 1, 0))
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::create_dir_all(path.parent().unwrap_or(Path::new("."))).map_err(|e| Error::Io {
        path: path.into(),
        source: e,
    })?;
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.into(),
        source: e,
    })
}

fn table_json() -> serde_json::Value {
    let table = product_table();
    let rows: serde_json::Map<_, _> = InstructionSet::ALL
        .iter()
        .map(|s| (s.label(), json!({ "products": table.row(*s), "row_sum": row_sum(*s) })))
        .collect();
    json!({
        "columns": SettingPair::ALL.iter().map(|p| p.label()).collect::<Vec<_>>(),
        "rows": rows,
    })
}

fn run(configs: &[PathBuf], out: Option<&Path>, seed: Option<u64>, audit: bool, format: Option<Format>, deterministic: bool) -> Result<()> {
    let scenarios = configs
        .iter()
        .map(|c| load(c, seed, audit))
        .collect::<Result<Vec<_>>>()?;
    let batch = scenarios.len() > 1;
    let mut names: Vec<&str> = scenarios.iter().map(|s| s.name.as_str()).collect();
    names.sort_unstable();
    if names.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Config {
            field: "name".into(),
            message: "scenarios in one batch need distinct names".into(),
        });
    }
    let options = |s: &Scenario| RunOptions {
        out_dir: match (out, &s.outputs.dir) {
            (Some(out), _) if batch => out.join(&s.name),
            (Some(out), _) => out.to_path_buf(),
            (None, Some(dir)) => dir.clone(),
            (None, None) if batch => Path::new("out").join(&s.name),
            (None, None) => PathBuf::from("out"),
        },
        format: format.map(Into::into),
        deterministic_timestamps: deterministic,
    };
    let results: Vec<Result<String>> = std::thread::scope(|scope| {
        let handles: Vec<_> = scenarios
            .iter()
            .map(|s| {
                let options = options(s);
                scope.spawn(move || run_scenario(s, &options).map(|o| o.summary))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("scenario thread panicked")).collect()
    });
    for result in results {
        print!("{}", result?);
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            configs,
            out,
            seed,
            audit,
            format,
            deterministic_timestamps,
        } => run(&configs, out.as_deref(), seed, audit, format, deterministic_timestamps)?,
        Command::Table { format, out } => {
            let csv = product_table().to_csv();
            let json = canonical_json(&table_json());
            if let Some(dir) = out {
                write(&dir.join("table.csv"), &csv)?;
                write(&dir.join("table.json"), &json)?;
            }
            match format {
                Format::Csv => print!("{csv}"),
                Format::Json => print!("{json}"),
                Format::Both => print!("{csv}\n{json}"),
            }
        }
        Command::Oracle { config } => {
            let scenario = match config {
                Some(path) => parse_config(path)?,
                None => default_scenario(),
            };
            print!("{}", canonical_json(&exact_oracle_report(&scenario.config.source, &scenario.config.pairs)));
        }
        Command::Analyze { records, config, out } => {
            let scenario = match config {
                Some(path) => parse_config(path)?,
                None => default_scenario(),
            };
            let analysis = canonical_json(&analyze_records(&read_records(&records)?, &scenario)?);
            match out {
                Some(dir) => write(&dir.join("analysis.json"), &analysis)?,
                None => print!("{analysis}"),
            }
        }
        Command::List => print!("{}", list_builtins()),
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
