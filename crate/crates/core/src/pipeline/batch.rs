//! Bounded-parallelism batch runner with crash-safe, resumable output.
//!
//! Per-entry records are written atomically (temp file + rename) as they
//! finish; a rerun with `resume` skips entries whose record file already
//! exists. The index and summaries are rebuilt in input order at the end,
//! so outputs are byte-identical for a given input regardless of
//! parallelism.

use std::collections::VecDeque;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use crate::compile::{discover_compilers, CompilerInfo};
use crate::dataset::{BenchmarkEntry, LineError};
use crate::report::{render_json, render_markdown, summarize, BatchSummary};

use super::{run_pipeline, CompletionBackend, EngineConfig, PipelineRecord};

#[derive(Debug, Clone)]
pub struct BatchOptions {
    pub out_dir: PathBuf,
    pub parallelism: usize,
    /// Skip entries that already have a readable record file.
    pub resume: bool,
}

#[derive(Debug)]
pub struct BatchOutcome {
    pub summary: BatchSummary,
    pub records: Vec<PipelineRecord>,
    pub records_written: usize,
    pub skipped_existing: usize,
    pub failed_entries: usize,
}

/// Stable, filesystem-safe record file name for an entry id.
pub fn record_file_name(entry_id: &str) -> String {
    let sanitized: String = entry_id
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect();
    if sanitized == entry_id && !sanitized.is_empty() {
        format!("{sanitized}.json")
    } else {
        // Disambiguate ids that sanitize to the same string.
        let h = super::digest(entry_id.as_bytes());
        format!("{}-{}.json", sanitized, &h[..8])
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let tmp = path.with_extension("json.tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)
}

fn load_existing_record(path: &Path) -> Option<PipelineRecord> {
    let bytes = std::fs::read(path).ok()?;
    serde_json::from_slice(&bytes).ok()
}

/// Process entries with at most `parallelism` concurrent pipeline runs.
/// Line errors from ingestion are carried into the summary; a worker failure
/// on one entry never aborts the batch.
pub fn run_batch(
    entries: &[BenchmarkEntry],
    line_errors: &[LineError],
    cfg: &EngineConfig,
    backend: &dyn CompletionBackend,
    options: &BatchOptions,
) -> io::Result<BatchOutcome> {
    let records_dir = options.out_dir.join("records");
    std::fs::create_dir_all(&records_dir)?;

    let compilers: Vec<CompilerInfo> = if cfg.compile.enabled {
        discover_compilers(&cfg.compile.solc_paths)
    } else {
        Vec::new()
    };

    let queue: Mutex<VecDeque<usize>> = Mutex::new((0..entries.len()).collect());
    let results: Mutex<Vec<Option<(PipelineRecord, bool)>>> = Mutex::new(vec![None; entries.len()]);
    let workers = options.parallelism.max(1).min(entries.len().max(1));

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let idx = {
                    let mut q = queue.lock().expect("queue lock");
                    match q.pop_front() {
                        Some(i) => i,
                        None => return,
                    }
                };
                let entry = &entries[idx];
                let path = records_dir.join(record_file_name(&entry.id));
                let reused = if options.resume {
                    load_existing_record(&path)
                } else {
                    None
                };
                let (record, skipped) = match reused {
                    Some(r) => (r, true),
                    None => {
                        let r = run_pipeline(entry, cfg, backend, &compilers);
                        let _ = write_atomic(&path, &r.to_json());
                        (r, false)
                    }
                };
                results.lock().expect("results lock")[idx] = Some((record, skipped));
            });
        }
    });

    let collected = results.into_inner().expect("results lock");
    let mut records = Vec::with_capacity(entries.len());
    let mut skipped_existing = 0usize;
    for slot in collected {
        let (record, skipped) = slot.expect("every queued entry produces a record");
        if skipped {
            skipped_existing += 1;
        }
        records.push(record);
    }

    let summary = summarize(&records, line_errors.len(), &cfg.metrics);
    std::fs::write(options.out_dir.join("summary.json"), render_json(&summary))?;
    std::fs::write(
        options.out_dir.join("summary.md"),
        render_markdown(&summary),
    )?;

    let mut index = String::new();
    for r in &records {
        let line = serde_json::json!({
            "entry_id": r.entry_id,
            "record": format!("records/{}", record_file_name(&r.entry_id)),
            "composite": r.quality.composite,
            "grade": r.quality.grade.to_string(),
            "compile_status": r.compile.status,
            "failed": r.failed,
        });
        index.push_str(&serde_json::to_string(&line).expect("index line serializes"));
        index.push('\n');
    }
    std::fs::write(options.out_dir.join("index.jsonl"), index)?;

    let failed_entries = records.iter().filter(|r| r.failed).count();
    Ok(BatchOutcome {
        summary,
        records_written: entries.len() - skipped_existing,
        skipped_existing,
        failed_entries,
        records,
    })
}
