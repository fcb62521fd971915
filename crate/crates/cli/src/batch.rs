use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::json;

use plurisurf::format::{to_json, SCHEMA_VERSION};

use crate::commands::{pipeline, run_case};
use crate::output::{write_output, CliError, CliResult};

/// Run the pipeline on every `*.json` file of `dir`, writing one report per
/// case plus `index.json` into `out`. Output does not depend on `jobs`.
pub fn run(dir: &Path, out: Option<&Path>, jobs: usize, timing: bool) -> CliResult {
    let out = out.ok_or_else(|| CliError::new(1, "directory input needs --output DIR"))?;
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::new(3, format!("cannot read {}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::new(1, e.to_string()))?;
    let results: Vec<_> = pool.install(|| {
        files
            .par_iter()
            .map(|path| (path, run_case(path, timing, pipeline)))
            .collect()
    });

    let mut entries = Vec::new();
    let mut worst = 0u8;
    for (path, result) in results {
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("case").to_string();
        match result {
            Ok(report) => {
                let file = format!("{stem}.report.json");
                write_output(Some(&out.join(&file)), &to_json(&report))?;
                entries.push(json!({
                    "input": stem,
                    "status": "ok",
                    "exit_code": 0,
                    "report": file,
                    "m0": report.certificate.as_ref().map(|c| c.m0),
                }));
            }
            Err(e) => {
                worst = worst.max(e.code);
                entries.push(json!({
                    "input": stem,
                    "status": "error",
                    "exit_code": e.code,
                    "error": e.message,
                }));
            }
        }
    }
    let index = json!({
        "schema_version": SCHEMA_VERSION,
        "command": "pipeline",
        "cases": entries,
    });
    write_output(Some(&out.join("index.json")), &to_json(&index))?;
    if worst != 0 {
        return Err(CliError::new(worst, "some cases failed; see index.json"));
    }
    Ok(())
}
