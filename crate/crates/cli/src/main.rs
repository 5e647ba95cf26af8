use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use uhrsim_core::batch::{run_batch, sweep_rows, sweep_specs, sweep_table, BatchError, RunSpec};
use uhrsim_core::netsim::RunError;
use uhrsim_core::scenario::{parse_duration, preset, preset_text, ScenarioConfig, PRESET_NAMES};

const EXIT_CONFIG: u8 = 1;
const EXIT_AUDIT: u8 = 2;

#[derive(Parser)]
#[command(name = "uhrsim", version, about = "Discrete-event multi-link WLAN simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one seed of a scenario.
    Run {
        /// Scenario file, or the name of a built-in preset.
        #[arg(long)]
        config: String,
        #[arg(long)]
        seed: Option<u64>,
        /// Simulated seconds; overrides run.duration_s.
        #[arg(long)]
        duration: Option<String>,
        #[arg(long)]
        out: PathBuf,
        /// Also write a per-event trace.log.
        #[arg(long)]
        trace: bool,
    },
    /// Run every value of a numeric key over several seeds.
    Sweep {
        #[arg(long)]
        config: String,
        #[arg(long)]
        key: String,
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        values: Vec<String>,
        /// Number of seeds, counted up from run.seed.
        #[arg(long, default_value_t = 5)]
        seeds: u64,
        #[arg(long)]
        duration: Option<String>,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; 0 uses every core.
        #[arg(long, env = "UHRSIM_JOBS", default_value_t = 0)]
        jobs: usize,
    },
    /// Inspect the built-in scenarios.
    Preset {
        name: Option<String>,
        /// Dump the scenario text.
        #[arg(long)]
        print: bool,
    },
}

enum Failure {
    Config(String),
    Audit(String),
}

impl From<BatchError> for Failure {
    fn from(e: BatchError) -> Self {
        match e {
            BatchError::Run(RunError::Audit(a)) => Failure::Audit(a.to_string()),
            other => Failure::Config(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Audit(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_AUDIT)
        }
    }
}

/// Reads `--config`: a file if one exists at that path, else a preset name.
/// Returns the config and its output label.
fn load(arg: &str, duration: Option<&str>) -> Result<(ScenarioConfig, String), Failure> {
    let path = Path::new(arg);
    let (mut cfg, preset_name) = if path.exists() {
        let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("{arg}: {e}")))?;
        let cfg = ScenarioConfig::parse(&text).map_err(|e| Failure::Config(format!("{arg}:\n{e}")))?;
        (cfg, None)
    } else if let Some(cfg) = preset(arg) {
        (cfg, Some(arg.to_string()))
    } else {
        return Err(Failure::Config(format!(
            "{arg}: no such file or preset (presets: {})",
            PRESET_NAMES.join(", ")
        )));
    };
    if let Some(d) = duration {
        cfg.run.duration = parse_duration(d, 1_000_000_000).map_err(Failure::Config)?;
        if cfg.run.duration.as_nanos() == 0 {
            return Err(Failure::Config("duration must be positive".into()));
        }
    }
    let label = preset_name.unwrap_or_else(|| cfg.hash_hex());
    Ok((cfg, label))
}

fn dispatch(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Run {
            config,
            seed,
            duration,
            out,
            trace,
        } => {
            let (cfg, label) = load(&config, duration.as_deref())?;
            let seed = seed.unwrap_or(cfg.run.seed);
            let mut spec = RunSpec::new(label, cfg, seed);
            spec.trace = trace || spec.config.run.trace;
            let result = run_batch(std::slice::from_ref(&spec), 1, Some(&out))
                .pop()
                .expect("one result")?;
            print!("{}", result.report.summary_text());
            println!("output={}", spec.dir(&out).display());
            Ok(())
        }
        Command::Sweep {
            config,
            key,
            values,
            seeds,
            duration,
            out,
            jobs,
        } => {
            let (cfg, _) = load(&config, duration.as_deref())?;
            if seeds == 0 {
                return Err(Failure::Config("--seeds must be at least 1".into()));
            }
            let values: Vec<String> = values.into_iter().filter(|v| !v.is_empty()).collect();
            let plan = sweep_specs(&cfg, &key, &values, seeds)?;
            let specs: Vec<RunSpec> = plan.iter().map(|(_, s)| s.clone()).collect();
            let results = run_batch(&specs, jobs, Some(&out));
            let mut runs = Vec::new();
            let mut audit = None;
            for ((value, spec), r) in plan.into_iter().zip(results) {
                match r {
                    Ok(r) => runs.push((value, r)),
                    Err(BatchError::Run(RunError::Audit(a))) => {
                        audit.get_or_insert(format!("{key}={value} seed={}: {a}", spec.seed));
                    }
                    Err(e) => return Err(e.into()),
                }
            }
            let table = sweep_table(&key, &sweep_rows(&values, &runs));
            let path = out.join("sweep.csv");
            fs::write(&path, &table).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            print!("{table}");
            match audit {
                Some(m) => Err(Failure::Audit(m)),
                None => Ok(()),
            }
        }
        Command::Preset { name, print } => {
            let Some(name) = name else {
                for n in PRESET_NAMES {
                    println!("{n}");
                }
                return Ok(());
            };
            let text = preset_text(&name).ok_or_else(|| {
                Failure::Config(format!("unknown preset {name:?} (presets: {})", PRESET_NAMES.join(", ")))
            })?;
            if print {
                print!("{text}");
            } else {
                let cfg = preset(&name).expect("preset parses");
                println!("{name} hash={}", cfg.hash_hex());
            }
            Ok(())
        }
    }
}
