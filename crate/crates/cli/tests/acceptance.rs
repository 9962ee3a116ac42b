//! Runs every acceptance criterion at full size and prints one line per criterion.
//!
//! `ACCEPTANCE_ONLY=id1,id2` restricts the run to the named criteria.

use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use decohist::{run, verify::verify_criterion, CriteriaFile, Criterion, CriterionReport, ExperimentConfig};

fn run_one(c: &Criterion) -> decohist::Result<CriterionReport> {
    let mut config = ExperimentConfig::new(c.preset, c.seed.unwrap_or(0));
    for (k, v) in &c.params {
        config.set_value(k, v.clone())?;
    }
    verify_criterion(&run(&config)?, c)
}

fn main() -> ExitCode {
    // Reuse eigendecompositions across invocations unless the caller chose a cache.
    if std::env::var_os("DECOHIST_CACHE").is_none() {
        std::env::set_var("DECOHIST_CACHE", Path::new(env!("CARGO_TARGET_TMPDIR")).join("decohist-cache"));
    }
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("criteria/acceptance.json");
    let file = match CriteriaFile::read(&path) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("cannot read {}: {e}", path.display());
            return ExitCode::FAILURE;
        }
    };
    let only: Option<Vec<String>> = std::env::var("ACCEPTANCE_ONLY").ok().map(|s| s.split(',').map(|x| x.trim().to_owned()).collect());

    let mut failed = 0;
    let mut total = 0;
    for c in &file.criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&c.id)) {
            continue;
        }
        total += 1;
        let start = Instant::now();
        let outcome = run_one(c);
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(report) => {
                if !report.passed() {
                    failed += 1;
                }
                println!("{report} [{secs:.1}s]");
            }
            Err(e) => {
                failed += 1;
                println!("FAIL {}: {} [{secs:.1}s]\n    error: {e}", c.id, c.title);
            }
        }
    }
    println!("acceptance: {} of {total} criteria passed", total - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
