//! `salemkit` command-line front end.
//!
//! ```text
//! salemkit construct  --params <file> --out <dir> [--seed N] [--preset NAME] [--threads K]
//! salemkit verify     --params <metadata.json | dir> --out <dir>
//! salemkit experiment --params <file> --out <dir> [--seed N] [--preset NAME]
//! ```
//!
//! Exit codes: 0 success, 1 verdict failure, 2 validation failure,
//! 3 degenerate derived parameters, 4 parse failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use salemkit::analysis::{run_experiment, verify_suite, ExperimentReport, ExperimentSpec};
use salemkit::constructions::{build, Built, ConstructionParams, Preset};
use salemkit::measures::{measure_from_text, measure_to_text, DiscreteMeasure};
use salemkit::Error;

const OUTPUT_SCHEMA: u32 = 1;

#[derive(Parser)]
#[command(name = "salemkit", version, about = "Exact truncations of random multiscale fractal measures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a construction and write its measure files and metadata.
    Construct(RunConfig),
    /// Re-check written measure files and run the matching verification suite.
    Verify(RunConfig),
    /// Run a sharpness, restriction, resonance or energy experiment.
    Experiment(RunConfig),
}

#[derive(Args, Clone, Debug)]
struct RunConfig {
    /// Parameter document (JSON).
    #[arg(long)]
    params: PathBuf,
    /// Output directory.
    #[arg(long, env = "SALEMKIT_OUT")]
    out: PathBuf,
    /// Seed; overrides the one in the parameter document.
    #[arg(long)]
    seed: Option<u64>,
    /// Constant preset: paper-constants or desk-scale.
    #[arg(long)]
    preset: Option<String>,
    /// Worker thread cap.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
}

enum Failure {
    Lib(Error),
    Verdicts(usize),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse(_) => 4,
        Error::DegenerateParameters(_)
        | Error::DivisibilityViolated(_)
        | Error::SubtreeNotSparse(_)
        | Error::LambdaTooLarge { .. }
        | Error::ScaleAlignment(_)
        | Error::InfeasibleMarginals { .. }
        | Error::LatticeOverflow { .. } => 3,
        _ => 2,
    }
}

fn parse_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Parse(format!("{}: {e}", path.display()))
}

fn read_json(path: &Path) -> Result<Value, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| parse_err(path, e))
}

fn write(path: &Path, contents: &str) -> Result<(), Error> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn parse_preset(name: &str) -> Result<Preset, Error> {
    Preset::parse(name).ok_or_else(|| {
        Error::InvalidParameters(format!("unknown preset {name:?} (expected paper-constants or desk-scale)"))
    })
}

/// Unwraps an output echo `{ preset, <key>: doc }` if present, returning the inner doc and its preset.
fn unwrap_echo(doc: Value, key: &str) -> (Value, Option<String>) {
    match doc {
        Value::Object(mut m) if m.contains_key(key) && m.contains_key("schema") => {
            let preset = m.get("preset").and_then(Value::as_str).map(str::to_string);
            (m.remove(key).unwrap_or(Value::Null), preset)
        }
        other => (other, None),
    }
}

fn choose_preset(cfg: &RunConfig, embedded: Option<String>) -> Result<Preset, Error> {
    match cfg.preset.as_deref().or(embedded.as_deref()) {
        Some(name) => parse_preset(name),
        None => Ok(Preset::PaperConstants),
    }
}

fn apply_seed(doc: &mut Value, seed: Option<u64>, what: &str) -> Result<(), Error> {
    let Value::Object(m) = doc else {
        return Err(Error::Parse(format!("{what} must be a JSON object")));
    };
    if let Some(s) = seed {
        m.insert("seed".into(), json!(s));
    }
    if !m.contains_key("seed") {
        return Err(Error::InvalidParameters(format!("{what} has no seed and none was given with --seed")));
    }
    Ok(())
}

fn load_params(cfg: &RunConfig) -> Result<(ConstructionParams, Preset), Error> {
    let (mut doc, embedded) = unwrap_echo(read_json(&cfg.params)?, "params");
    let preset = choose_preset(cfg, embedded)?;
    apply_seed(&mut doc, cfg.seed, "parameter document")?;
    let params: ConstructionParams = serde_json::from_value(doc).map_err(|e| parse_err(&cfg.params, e))?;
    Ok((params.resolved(preset), preset))
}

/// Measure families written for each construction, by file prefix.
fn families(built: &Built) -> Vec<(&'static str, &[DiscreteMeasure])> {
    let mut out: Vec<(&'static str, &[DiscreteMeasure])> = vec![("mu", built.family())];
    match built {
        Built::Geo(fm) => {
            out.push(("grid", &fm.grid_family));
            out.push(("random", &fm.random_family));
        }
        Built::RestrictionGeo(b) => {
            out.push(("grid", &b.grid_family));
            out.push(("random", &b.random_family));
            out.push(("eta", &b.eta_family));
            out.push(("test_data", &b.f_data));
        }
        Built::RestrictionNongeo(b) => out.push(("nu", &b.nu)),
        Built::Salem(_) | Built::HeavyCore(_) => {}
    }
    out
}

fn measure_files(built: &Built) -> Vec<(String, String)> {
    let mut files = Vec::new();
    for (prefix, fam) in families(built) {
        for (i, mu) in fam.iter().enumerate() {
            files.push((format!("measures/{prefix}_{}.txt", i + 1), measure_to_text(mu)));
        }
    }
    files
}

fn file_stem(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' }).collect()
}

fn write_reports(out: &Path, reports: &[ExperimentReport], verbose: u8) -> Result<usize, Error> {
    let mut failed = 0;
    for (i, r) in reports.iter().enumerate() {
        let stem = format!("{:02}_{}", i + 1, file_stem(&r.experiment));
        write(&out.join("reports").join(format!("{stem}.json")), &format!("{}\n", r.to_json()?))?;
        for (series, csv) in r.to_csv() {
            write(&out.join("reports").join(&stem).join(format!("{}.csv", file_stem(&series))), &csv)?;
        }
        let status = if r.passed() { "pass" } else { "FAIL" };
        println!("{stem}: {status} ({} verdicts)", r.verdicts.len());
        for v in &r.verdicts {
            if !v.pass || verbose > 0 {
                println!("  {} {}: {}", if v.pass { "ok  " } else { "FAIL" }, v.name, v.detail);
            }
        }
        if !r.passed() {
            failed += 1;
        }
    }
    Ok(failed)
}

fn cmd_construct(cfg: &RunConfig) -> Result<(), Failure> {
    let (params, preset) = load_params(cfg)?;
    if cfg.verbose > 0 {
        eprintln!("building {} (preset {}, seed {})", params.construction.name(), preset.name(), params.seed);
    }
    let built = build(&params)?;
    let files = measure_files(&built);
    for (name, text) in &files {
        write(&cfg.out.join(name), text)?;
    }
    let meta = json!({
        "schema": OUTPUT_SCHEMA,
        "preset": preset.name(),
        "params": params,
        "measures": files.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>(),
        "construction": built.metadata(),
    });
    write(&cfg.out.join("metadata.json"), &pretty(&meta))?;
    println!("{}: {} measure files written to {}", params.construction.name(), files.len(), cfg.out.display());
    Ok(())
}

fn cmd_verify(cfg: &RunConfig) -> Result<(), Failure> {
    let meta_path = if cfg.params.is_dir() { cfg.params.join("metadata.json") } else { cfg.params.clone() };
    let base = meta_path.parent().map(Path::to_path_buf).unwrap_or_default();
    let sub = RunConfig { params: meta_path.clone(), ..cfg.clone() };
    let (params, preset) = load_params(&sub)?;
    let built = build(&params)?;
    let mut artifacts = ExperimentReport::new(
        "measure_files",
        json!({ "metadata": meta_path.display().to_string() }),
        Some(params.seed),
    );
    artifacts.tolerance("exact", 0.0);
    let mut mismatched = Vec::new();
    let expected = measure_files(&built);
    for (name, text) in &expected {
        let path = base.join(name);
        let found = fs::read_to_string(&path).map_err(|e| parse_err(&path, e))?;
        let parsed = measure_from_text(&found).map_err(|e| parse_err(&path, e))?;
        if measure_to_text(&parsed) != *text {
            mismatched.push(name.clone());
        }
    }
    let detail = if mismatched.is_empty() {
        format!("{} files match the rebuilt construction", expected.len())
    } else {
        format!("differ from the rebuilt construction: {}", mismatched.join(", "))
    };
    artifacts.verdict("files_match_rebuild", mismatched.is_empty(), "exact", detail);
    let mut reports = vec![artifacts];
    reports.extend(verify_suite(&built)?);
    write(
        &cfg.out.join("verify.json"),
        &pretty(&json!({ "schema": OUTPUT_SCHEMA, "preset": preset.name(), "params": params })),
    )?;
    match write_reports(&cfg.out, &reports, cfg.verbose)? {
        0 => Ok(()),
        n => Err(Failure::Verdicts(n)),
    }
}

fn cmd_experiment(cfg: &RunConfig) -> Result<(), Failure> {
    let (mut doc, embedded) = unwrap_echo(read_json(&cfg.params)?, "spec");
    let preset = choose_preset(cfg, embedded)?;
    let construction = doc
        .get_mut("construction")
        .ok_or_else(|| Error::Parse(format!("{}: missing construction", cfg.params.display())))?;
    apply_seed(construction, cfg.seed, "construction")?;
    let mut spec: ExperimentSpec = serde_json::from_value(doc).map_err(|e| parse_err(&cfg.params, e))?;
    spec.construction = spec.construction.resolved(preset);
    if cfg.verbose > 0 {
        eprintln!("running {:?} on {} points", spec.experiment, spec.points.len());
    }
    let reports = run_experiment(&spec)?;
    write(
        &cfg.out.join("experiment.json"),
        &pretty(&json!({ "schema": OUTPUT_SCHEMA, "preset": preset.name(), "spec": spec })),
    )?;
    match write_reports(&cfg.out, &reports, cfg.verbose)? {
        0 => Ok(()),
        n => Err(Failure::Verdicts(n)),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match &cli.command {
        Command::Construct(c) | Command::Verify(c) | Command::Experiment(c) => c,
    };
    if let Some(k) = cfg.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::Construct(c) => cmd_construct(c),
        Command::Verify(c) => cmd_verify(c),
        Command::Experiment(c) => cmd_experiment(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verdicts(n)) => {
            eprintln!("{n} report(s) failed");
            ExitCode::from(1)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
