use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use decohist::{list_presets, run, set_threads, verify, CliError, CriteriaFile, ExperimentConfig, Preset, ResultTable};

#[derive(Parser)]
#[command(name = "decohist", version, about = "Run, list and verify decohist experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one preset and write its CSV and JSON sidecar.
    Run(RunArgs),
    /// Print every preset with its figure and default parameters.
    List,
    /// Check a result file against a criteria file.
    Verify {
        #[arg(long)]
        result: PathBuf,
        #[arg(long)]
        criteria: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    preset: String,
    /// Environment dimension D0 (or the comma list of D0 values).
    #[arg(long)]
    d0: Option<String>,
    /// Record dimension d for the discrimination presets.
    #[arg(long)]
    dim: Option<String>,
    /// `a:b:steps` or a comma list.
    #[arg(long)]
    gamma_grid: Option<String>,
    #[arg(long)]
    length: Option<String>,
    /// `eq`, `neq`, or a positive multiple of the relaxation time.
    #[arg(long)]
    dt: Option<String>,
    /// haar, perm, sign or mub (comma list for ensemble-compare).
    #[arg(long)]
    family: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Any other parameter, as key=value. Repeatable.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
}

fn resolve(args: &RunArgs) -> Result<ExperimentConfig, CliError> {
    let preset: Preset = args.preset.parse()?;
    let mut c = ExperimentConfig::new(preset, args.seed);
    let flags: [(&str, &Option<String>, &[&str]); 6] = [
        ("--d0", &args.d0, &["d0", "d0s"]),
        ("--dim", &args.dim, &["d", "dims"]),
        ("--gamma-grid", &args.gamma_grid, &["gamma_grid"]),
        ("--length", &args.length, &["length"]),
        ("--dt", &args.dt, &["dt"]),
        ("--family", &args.family, &["family", "families"]),
    ];
    for (flag, value, keys) in flags {
        let Some(v) = value else { continue };
        let key = keys
            .iter()
            .find(|k| c.has(k))
            .ok_or_else(|| CliError::InvalidConfig(format!("{flag} does not apply to {preset}")))?;
        c.set(key, v)?;
    }
    for kv in &args.params {
        let (k, v) = kv.split_once('=').ok_or_else(|| CliError::InvalidConfig(format!("--param {kv:?} is not key=value")))?;
        c.set(k.trim(), v)?;
    }
    Ok(c)
}

fn run_command(args: RunArgs) -> Result<ExitCode, CliError> {
    if let Some(n) = args.threads {
        set_threads(n)?;
    }
    let config = resolve(&args)?;
    let table = run(&config)?;
    let out = args.out.clone().unwrap_or_else(|| PathBuf::from(format!("{}.csv", config.preset)));
    table.write(&out)?;
    println!("wrote {} ({} rows)", out.display(), table.n_rows());
    for (k, v) in &table.summary {
        println!("  {k} = {v}");
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    // `decohist <preset> …` is shorthand for `decohist run <preset> …`.
    let mut argv: Vec<String> = std::env::args().collect();
    if argv.get(1).is_some_and(|a| a.parse::<Preset>().is_ok()) {
        argv.insert(1, "run".into());
    }
    // Exit code 2 is reserved for verification failures.
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::Run(args) => run_command(args),
        Command::List => {
            for (name, figure, defaults) in list_presets() {
                println!("{name:<18} {figure:<22} {defaults}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { result, criteria } => (|| {
            let table = ResultTable::read(&result)?;
            let reports = verify(&table, &CriteriaFile::read(&criteria)?)?;
            for r in &reports {
                println!("{r}");
            }
            Ok(if reports.iter().all(|r| r.passed()) { ExitCode::SUCCESS } else { ExitCode::from(2) })
        })(),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
