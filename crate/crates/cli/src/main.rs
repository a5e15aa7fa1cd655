//! Command-line entry point: batch evaluation, interactive single-contract
//! mode, scoring-only mode, and environment verification.

mod render;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use solgen_core::compile::{compile_check, discover_compilers, CompileResult};
use solgen_core::dataset::{load_jsonl, BenchmarkEntry, FsmSpec, LineError};
use solgen_core::metrics::evaluate;
use solgen_core::pipeline::{
    run_batch, run_pipeline_observed, BatchOptions, CompletionBackend, EngineConfig, HttpBackend,
    ProviderKind, ScriptedBackend,
};
use solgen_core::report::{compare_pair, PairedResult};
use solgen_core::schema::schema_from_json;
use solgen_core::solidity::{lint_forbidden_patterns, parse_surface};

// Exit codes: 0 success, 1 environment, 2 usage/input, 3 processing failure.
const EXIT_ENV: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_PROCESSING: u8 = 3;

#[derive(Parser)]
#[command(
    name = "solgen",
    version,
    about = "Generate and evaluate Solidity contracts from natural-language specifications"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline over a JSONL dataset and write records + summaries.
    Batch(BatchArgs),
    /// Run one entry with live event streaming and a detailed breakdown.
    Single(SingleArgs),
    /// Score an existing contract against a schema, no model backend needed.
    Score(ScoreArgs),
    /// Verify compiler availability and backend reachability.
    Doctor(DoctorArgs),
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// Engine configuration file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Chat-completion provider.
    #[arg(long, value_enum)]
    provider: Option<ProviderArg>,
    /// Script file for the scripted provider.
    #[arg(long)]
    script: Option<PathBuf>,
    /// Model name for agent calls.
    #[arg(long)]
    model: Option<String>,
    /// Maximum audit-refine iterations.
    #[arg(long = "max-refine")]
    max_refine: Option<u32>,
    /// Disable the security refinement loop.
    #[arg(long = "no-reinforcement")]
    no_reinforcement: bool,
    /// Concurrent pipeline runs in batch mode.
    #[arg(long)]
    parallelism: Option<usize>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum ProviderArg {
    Http,
    Scripted,
}

#[derive(Args)]
struct BatchArgs {
    /// Input dataset (JSONL, one entry per line).
    #[arg(long)]
    input: PathBuf,
    /// Output directory for records and summaries.
    #[arg(long)]
    out: PathBuf,
    /// Skip entries that already have a record file.
    #[arg(long)]
    resume: bool,
    /// Allow writing into a non-empty output directory.
    #[arg(long)]
    force: bool,
    #[command(flatten)]
    common: CommonOpts,
}

#[derive(Args)]
struct SingleArgs {
    /// Dataset to pick the entry from.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Entry id within --input.
    #[arg(long)]
    id: Option<String>,
    /// A file holding a raw natural-language specification instead.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Optional output directory for the record file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Emit the machine-readable record instead of prose.
    #[arg(long)]
    json: bool,
    #[command(flatten)]
    common: CommonOpts,
}

#[derive(Args)]
struct ScoreArgs {
    /// Solidity source to score.
    #[arg(long)]
    code: PathBuf,
    /// Schema JSON the contract is scored against.
    #[arg(long)]
    schema: PathBuf,
    /// Optional ground-truth Solidity for paired comparison.
    #[arg(long)]
    gt: Option<PathBuf>,
    /// Optional FSM spec JSON.
    #[arg(long)]
    fsm: Option<PathBuf>,
    /// Emit machine-readable JSON instead of prose.
    #[arg(long)]
    json: bool,
    #[command(flatten)]
    common: CommonOpts,
}

#[derive(Args)]
struct DoctorArgs {
    #[command(flatten)]
    common: CommonOpts,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn env(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_ENV,
            message: message.into(),
        }
    }

    fn processing(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_PROCESSING,
            message: message.into(),
        }
    }
}

fn main() -> ExitCode {
    reset_sigpipe();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Batch(args) => cmd_batch(args),
        Command::Single(args) => cmd_single(args),
        Command::Score(args) => cmd_score(args),
        Command::Doctor(args) => cmd_doctor(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

/// Die quietly on a closed pipe (`solgen ... | head`) instead of panicking.
#[cfg(unix)]
fn reset_sigpipe() {
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
}

#[cfg(not(unix))]
fn reset_sigpipe() {}

/// Load configuration and apply command-line overrides.
fn effective_config(common: &CommonOpts) -> Result<EngineConfig, Failure> {
    let mut cfg = match &common.config {
        Some(path) => EngineConfig::load(path)
            .map_err(|e| Failure::usage(format!("cannot load config: {e}")))?,
        None => EngineConfig::default(),
    };
    if let Some(model) = &common.model {
        cfg.pipeline.model = model.clone();
    }
    if let Some(n) = common.max_refine {
        cfg.pipeline.max_refinement_iterations = n;
    }
    if common.no_reinforcement {
        cfg.pipeline.enable_reinforcement = false;
    }
    if let Some(p) = common.parallelism {
        cfg.pipeline.parallelism = p.max(1);
    }
    if let Some(p) = common.provider {
        cfg.pipeline.provider = match p {
            ProviderArg::Http => ProviderKind::Http,
            ProviderArg::Scripted => ProviderKind::Scripted,
        };
    }
    Ok(cfg)
}

fn build_backend(
    cfg: &EngineConfig,
    common: &CommonOpts,
) -> Result<Box<dyn CompletionBackend>, Failure> {
    match cfg.pipeline.provider {
        ProviderKind::Scripted => {
            let script = common
                .script
                .as_ref()
                .ok_or_else(|| Failure::usage("the scripted provider requires --script <file>"))?;
            let backend = ScriptedBackend::from_file(script)
                .map_err(|e| Failure::usage(format!("cannot load script: {e}")))?;
            Ok(Box::new(backend))
        }
        ProviderKind::Http => Ok(Box::new(HttpBackend::new(
            &cfg.pipeline.base_url,
            &cfg.pipeline.api_key_env,
            cfg.pipeline.max_response_bytes,
        ))),
    }
}

fn load_entries(input: &Path) -> Result<(Vec<BenchmarkEntry>, Vec<LineError>), Failure> {
    let reader = load_jsonl(input).map_err(|e| Failure::usage(e.to_string()))?;
    let mut entries = Vec::new();
    let mut errors = Vec::new();
    for item in reader {
        match item {
            Ok(e) => entries.push(e),
            Err(e) => errors.push(e),
        }
    }
    Ok((entries, errors))
}

fn dir_is_nonempty(path: &Path) -> bool {
    std::fs::read_dir(path)
        .map(|mut d| d.next().is_some())
        .unwrap_or(false)
}

fn cmd_batch(args: BatchArgs) -> Result<(), Failure> {
    // Validate the input before touching the output directory.
    if !args.input.is_file() {
        return Err(Failure::usage(format!(
            "input file not found: {}",
            args.input.display()
        )));
    }
    let cfg = effective_config(&args.common)?;
    let backend = build_backend(&cfg, &args.common)?;
    let (entries, line_errors) = load_entries(&args.input)?;
    for e in &line_errors {
        eprintln!("skipping malformed input {e}");
    }
    if entries.is_empty() {
        return Err(Failure::usage("dataset contains no usable entries"));
    }

    if args.out.exists() && dir_is_nonempty(&args.out) && !args.resume && !args.force {
        return Err(Failure::usage(format!(
            "output directory {} is not empty; pass --force to overwrite or --resume to continue",
            args.out.display()
        )));
    }
    std::fs::create_dir_all(&args.out)
        .map_err(|e| Failure::env(format!("cannot create output directory: {e}")))?;

    let options = BatchOptions {
        out_dir: args.out.clone(),
        parallelism: cfg.pipeline.parallelism,
        resume: args.resume,
    };
    let outcome = run_batch(&entries, &line_errors, &cfg, backend.as_ref(), &options)
        .map_err(|e| Failure::processing(format!("batch run failed: {e}")))?;

    println!(
        "{} entries processed ({} reused), mean composite {:.2}, summary at {}",
        outcome.summary.n,
        outcome.skipped_existing,
        outcome.summary.composite.mean,
        args.out.join("summary.json").display()
    );
    if outcome.failed_entries > 0 {
        eprintln!(
            "{} entry/entries failed; see records for details",
            outcome.failed_entries
        );
    }
    Ok(())
}

fn cmd_single(args: SingleArgs) -> Result<(), Failure> {
    let cfg = effective_config(&args.common)?;
    let backend = build_backend(&cfg, &args.common)?;

    let entry = match (&args.input, &args.id, &args.spec) {
        (Some(input), Some(id), None) => {
            let (entries, _) = load_entries(input)?;
            entries
                .into_iter()
                .find(|e| &e.id == id)
                .ok_or_else(|| Failure::usage(format!("no entry with id `{id}` in dataset")))?
        }
        (None, None, Some(spec_path)) => {
            let requirement = std::fs::read_to_string(spec_path)
                .map_err(|e| Failure::usage(format!("cannot read spec: {e}")))?;
            BenchmarkEntry {
                id: spec_path
                    .file_stem()
                    .map(|s| s.to_string_lossy().to_string())
                    .unwrap_or_else(|| "spec".to_string()),
                requirement,
                fsm: None,
                ground_truth_code: String::new(),
            }
        }
        _ => {
            return Err(Failure::usage(
                "single mode needs either --input with --id, or --spec",
            ))
        }
    };

    let compilers = if cfg.compile.enabled {
        discover_compilers(&cfg.compile.solc_paths)
    } else {
        Vec::new()
    };
    let mut run_cfg = cfg.clone();
    if entry.ground_truth_code.is_empty() {
        run_cfg.pipeline.compare_ground_truth = false;
    }

    let stream = |e: &solgen_core::pipeline::PipelineEvent| {
        if !args.json {
            println!("{}", render::event_line(e));
        }
    };
    let record = run_pipeline_observed(
        &entry,
        &run_cfg,
        backend.as_ref(),
        &compilers,
        Some(&stream),
    );

    if let Some(out) = &args.out {
        std::fs::create_dir_all(out)
            .map_err(|e| Failure::env(format!("cannot create output directory: {e}")))?;
        let path = out.join(solgen_core::pipeline::record_file_name(&record.entry_id));
        std::fs::write(&path, record.to_json())
            .map_err(|e| Failure::env(format!("cannot write record: {e}")))?;
    }

    if args.json {
        let json = String::from_utf8(record.to_json()).expect("record json utf-8");
        println!("{json}");
    } else {
        println!("\n{}", render::breakdown(&record));
    }
    if record.failed {
        return Err(Failure::processing("pipeline run failed"));
    }
    Ok(())
}

fn cmd_score(args: ScoreArgs) -> Result<(), Failure> {
    let cfg = effective_config(&args.common)?;
    let source = std::fs::read_to_string(&args.code)
        .map_err(|e| Failure::usage(format!("cannot read code: {e}")))?;
    let schema_bytes = std::fs::read(&args.schema)
        .map_err(|e| Failure::usage(format!("cannot read schema: {e}")))?;
    let schema = schema_from_json(&schema_bytes)
        .map_err(|e| Failure::usage(format!("invalid schema: {e}")))?;
    let fsm: Option<FsmSpec> = match &args.fsm {
        Some(path) => {
            let bytes =
                std::fs::read(path).map_err(|e| Failure::usage(format!("cannot read fsm: {e}")))?;
            Some(
                serde_json::from_slice(&bytes)
                    .map_err(|e| Failure::usage(format!("invalid fsm: {e}")))?,
            )
        }
        None => None,
    };

    let (surface, warnings) = parse_surface(&source)
        .map_err(|e| Failure::processing(format!("cannot parse {}: {e}", args.code.display())))?;
    for w in &warnings {
        eprintln!("parse warning at line {}: {}", w.line, w.message);
    }
    let lint = lint_forbidden_patterns(&surface, &source);

    let comparison: Option<PairedResult> = match &args.gt {
        Some(gt_path) => {
            let gt_source = std::fs::read_to_string(gt_path)
                .map_err(|e| Failure::usage(format!("cannot read ground truth: {e}")))?;
            let (gt_surface, _) = parse_surface(&gt_source).map_err(|e| {
                Failure::processing(format!("cannot parse {}: {e}", gt_path.display()))
            })?;
            let gt_lint = lint_forbidden_patterns(&gt_surface, &gt_source);
            Some(
                compare_pair(
                    &schema,
                    fsm.as_ref(),
                    &surface,
                    &gt_surface,
                    &lint,
                    &gt_lint,
                    &cfg.metrics,
                )
                .map_err(|e| Failure::processing(e.to_string()))?,
            )
        }
        None => None,
    };

    let quality = evaluate(&schema, fsm.as_ref(), &surface, &lint, &cfg.metrics)
        .map_err(|e| Failure::processing(e.to_string()))?;

    if args.json {
        let payload = serde_json::json!({
            "quality": quality,
            "lint": lint,
            "comparison": comparison,
        });
        println!(
            "{}",
            serde_json::to_string_pretty(&payload).expect("payload serializes")
        );
    } else {
        println!(
            "{}",
            render::score_breakdown(&quality, &lint, comparison.as_ref())
        );
    }
    Ok(())
}

fn cmd_doctor(args: DoctorArgs) -> Result<(), Failure> {
    let cfg = effective_config(&args.common)?;
    let mut healthy = true;

    let compilers = discover_compilers(&cfg.compile.solc_paths);
    if compilers.is_empty() {
        healthy = false;
        println!("[FAIL] compiler: no Solidity compiler found (install solc or set compile.solc_paths in config)");
    } else {
        let versions: Vec<String> = compilers.iter().map(|c| c.version.to_string()).collect();
        println!("[ OK ] compiler: {}", versions.join(", "));
        // One tiny end-to-end check through the standard-JSON interface.
        let probe = compile_check(
            "pragma solidity >=0.4.0; contract DoctorProbe { }",
            std::time::Duration::from_secs(cfg.compile.timeout_secs),
            &compilers,
        );
        match probe.status {
            solgen_core::compile::CompileStatus::Success => println!(
                "[ OK ] compile probe: success with {}",
                probe.compiler_version
            ),
            _ => {
                healthy = false;
                println!("[FAIL] compile probe: {}", describe_compile(&probe));
            }
        }
    }

    match cfg.pipeline.provider {
        ProviderKind::Scripted => {
            println!("[SKIP] backend: scripted provider selected, no endpoint to reach");
        }
        ProviderKind::Http => {
            let backend = HttpBackend::new(
                &cfg.pipeline.base_url,
                &cfg.pipeline.api_key_env,
                cfg.pipeline.max_response_bytes,
            );
            if !backend.has_key() {
                println!(
                    "[WARN] backend: environment variable {} is not set",
                    cfg.pipeline.api_key_env
                );
            }
            match reach_endpoint(backend.base_url()) {
                Ok(note) => println!("[ OK ] backend: {} ({note})", backend.base_url()),
                Err(e) => {
                    healthy = false;
                    println!("[FAIL] backend: {} unreachable ({e})", backend.base_url());
                }
            }
        }
    }

    if healthy {
        println!("environment ready");
        Ok(())
    } else {
        Err(Failure::env("environment checks failed"))
    }
}

fn describe_compile(r: &CompileResult) -> String {
    r.reason.clone().unwrap_or_else(|| {
        r.diagnostics
            .first()
            .map(|d| d.message.clone())
            .unwrap_or_else(|| format!("{:?}", r.status))
    })
}

/// Any HTTP response counts as reachable; only transport failures do not.
fn reach_endpoint(base_url: &str) -> Result<String, String> {
    let url = format!("{base_url}/models");
    let client = reqwest::blocking::Client::builder()
        .timeout(std::time::Duration::from_secs(10))
        .build()
        .map_err(|e| e.to_string())?;
    match client.get(&url).send() {
        Ok(resp) => Ok(format!("HTTP {}", resp.status())),
        Err(e) => Err(e.to_string()),
    }
}
