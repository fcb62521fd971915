use std::path::Path;
use std::time::Instant;

use serde_json::Value;

use plurisurf::bounds::{semigroup_decompose, SemigroupTable};
use plurisurf::format::{
    parse_case, parse_document, to_json, Case, MmpSummary, OracleSuite, PairDoc, ReportDocument, SemigroupEntry,
    TerminalizationSummary, Timing,
};
use plurisurf::pipeline::{run_pipeline, verify_certificate, BoundCertificate};
use plurisurf::programs::{count_negative_discrepancy, run_mmp, terminalize_with_order, CrossingOrder};
use plurisurf::sample::{random_klt_pair, seeded, SampleParams};
use plurisurf::singularity::{brute_force_min_discrepancy, classify as classify_pair, Discrepancy};
use plurisurf::Error;

use crate::output::{read_input, write_output, CliError, CliResult};

/// Read a case, run `f`, and write its report.
pub fn single(
    input: &Path,
    output: Option<&Path>,
    timing: bool,
    f: impl FnOnce(&Case) -> Result<ReportDocument, Error>,
) -> CliResult {
    let report = run_case(input, timing, f)?;
    write_output(output, &to_json(&report))
}

pub fn run_case(
    input: &Path,
    timing: bool,
    f: impl FnOnce(&Case) -> Result<ReportDocument, Error>,
) -> CliResult<ReportDocument> {
    let text = read_input(input)?;
    let case = parse_case(&text)?;
    let start = Instant::now();
    let mut report = f(&case)?;
    report.case = case.name.clone();
    if timing {
        report.timing = Some(Timing {
            elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        });
    }
    Ok(report)
}

pub fn classify(case: &Case, depth: Option<usize>) -> Result<ReportDocument, Error> {
    let report = classify_pair(&case.pair)?;
    let mut doc = ReportDocument::new("classify");
    doc.log.push(format!(
        "classification {:?}, minimal exceptional discrepancy {}",
        report.classification, report.min_exceptional_discrepancy
    ));
    if let Some(depth) = depth {
        let searched = brute_force_min_discrepancy(&case.pair, depth)?;
        match &report.min_exceptional_discrepancy {
            Discrepancy::Finite(closed) if *closed != searched => {
                return Err(Error::verification(
                    "classify",
                    format!("closed form {closed} differs from depth-{depth} search {searched}"),
                ))
            }
            Discrepancy::Finite(_) => doc.log.push(format!("depth-{depth} search agrees: {searched}")),
            Discrepancy::NegInfinity => doc
                .log
                .push(format!("depth-{depth} search reached {searched}; the pair is not lc")),
        }
    }
    doc.singularity = Some(report);
    Ok(doc)
}

pub fn terminalize(case: &Case, order: CrossingOrder) -> Result<ReportDocument, Error> {
    let (out, f) = terminalize_with_order(&case.pair, order)?;
    let mut doc = ReportDocument::new("terminalize");
    doc.log.push(format!("{} blow-ups", f.steps().len()));
    doc.singularity = Some(classify_pair(&out)?);
    doc.terminalization = Some(TerminalizationSummary {
        steps: f.steps().to_vec(),
        output: PairDoc::from_pair(&out),
    });
    Ok(doc)
}

pub fn mmp(case: &Case) -> Result<ReportDocument, Error> {
    let trace = run_mmp(&case.pair)?;
    let mut doc = ReportDocument::new("mmp");
    doc.log.push(format!("{} contractions", trace.steps.len()));
    doc.mmp = Some(MmpSummary {
        negative_discrepancy_count: count_negative_discrepancy(&trace),
        steps: trace.steps,
        outcome: trace.outcome,
        final_pair: PairDoc::from_pair(&trace.final_pair),
    });
    Ok(doc)
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Null => Some("none".to_string()),
        _ => None,
    }
}

fn stage_log(cert: &BoundCertificate) -> Vec<String> {
    cert.stages
        .iter()
        .map(|s| {
            let parts: Vec<String> = s
                .constants
                .iter()
                .filter_map(|(k, v)| scalar(v).map(|v| format!("{k}={v}")))
                .collect();
            format!("{}: {}", s.stage, parts.join(", "))
        })
        .collect()
}

pub fn pipeline(case: &Case) -> Result<ReportDocument, Error> {
    let inputs = case
        .inputs
        .as_ref()
        .ok_or_else(|| Error::parse("inputs", "the pipeline needs delta, epsilon and component_bound"))?;
    let cert = run_pipeline(&case.pair, inputs, case.certificate.as_ref())?;
    let mut doc = ReportDocument::new("pipeline");
    doc.singularity = Some(classify_pair(&case.pair)?);
    doc.log = stage_log(&cert);
    doc.log.push(format!("m0 = {}", cert.m0));
    doc.certificate = Some(cert);
    Ok(doc)
}

fn parse_sweep(s: &str) -> CliResult<(u64, u64)> {
    let bad = || CliError::new(3, format!("--sweep expects A..B, got {s:?}"));
    let (a, b) = s.split_once("..").ok_or_else(bad)?;
    let a: u64 = a.trim().parse().map_err(|_| bad())?;
    let b: u64 = b.trim().parse().map_err(|_| bad())?;
    if a > b {
        return Err(bad());
    }
    Ok((a, b))
}

pub fn semigroup(n: u64, m: Option<u64>, sweep: Option<&str>, output: Option<&Path>) -> CliResult {
    let (lo, hi) = match (m, sweep) {
        (Some(m), _) => (m, m),
        (None, Some(s)) => parse_sweep(s)?,
        (None, None) => return Err(CliError::new(3, "give --m or --sweep")),
    };
    if hi - lo > 1_000_000 {
        return Err(CliError::new(1, "sweep ranges are limited to 10^6 values"));
    }
    let mut entries = Vec::new();
    for m in lo..=hi {
        entries.push(SemigroupEntry {
            n,
            m,
            decomposition: semigroup_decompose(n, m)?,
        });
    }
    let mut doc = ReportDocument::new("semigroup");
    let representable = entries.iter().filter(|e| e.decomposition.is_representable()).count();
    doc.log.push(format!("{representable} of {} values representable", entries.len()));
    doc.semigroup = Some(entries);
    write_output(output, &to_json(&doc))
}

pub fn verify(input: &Path, output: Option<&Path>) -> CliResult {
    let text = read_input(input)?;
    let report: ReportDocument = parse_document(&text)?;
    let cert = report
        .certificate
        .ok_or_else(|| CliError::from(Error::parse("certificate", "the report carries no certificate")))?;
    verify_certificate(&cert)?;
    let mut doc = ReportDocument::new("verify");
    doc.case = report.case;
    doc.log.push(format!("all {} stages verified; m0 = {}", cert.stages.len(), cert.m0));
    write_output(output, &to_json(&doc))
}

pub fn oracle(
    discrepancy: bool,
    semigroup: bool,
    seed: u64,
    cases: usize,
    depth: usize,
    output: Option<&Path>,
) -> CliResult {
    let mut suites = Vec::new();
    if discrepancy {
        let mut rng = seeded(seed);
        let params = SampleParams::default();
        let mut mismatches = Vec::new();
        for i in 0..cases {
            let pair = random_klt_pair(&mut rng, &params);
            let closed = classify_pair(&pair)?.min_exceptional_discrepancy;
            let searched = brute_force_min_discrepancy(&pair, depth)?;
            if closed != Discrepancy::Finite(searched.clone()) {
                mismatches.push(format!("case {i}: closed form {closed}, search {searched}"));
            }
        }
        suites.push(OracleSuite {
            suite: format!("discrepancy (depth {depth})"),
            cases,
            mismatches,
        });
    }
    if semigroup {
        let mut mismatches = Vec::new();
        let mut count = 0;
        for n in 1..=30u64 {
            let top = n * n + 500;
            let table = SemigroupTable::new(n, top);
            for m in 1..=top {
                count += 1;
                let d = semigroup_decompose(n, m)?;
                let ok = d.is_representable() == table.contains(m)
                    && (!d.is_representable() || d.total(n) == Some(m))
                    && (m <= n * n || d.is_representable());
                if !ok {
                    mismatches.push(format!("N = {n}, m = {m}: {d:?}"));
                }
            }
        }
        suites.push(OracleSuite {
            suite: "semigroup (N <= 30, m <= N^2 + 500)".to_string(),
            cases: count,
            mismatches,
        });
    }
    let failed: usize = suites.iter().map(|s| s.mismatches.len()).sum();
    let mut doc = ReportDocument::new("oracle");
    for s in &suites {
        doc.log.push(format!("{}: {} cases, {} mismatches", s.suite, s.cases, s.mismatches.len()));
    }
    doc.oracle = Some(suites);
    write_output(output, &to_json(&doc))?;
    if failed > 0 {
        return Err(CliError::new(2, format!("{failed} oracle mismatches")));
    }
    Ok(())
}
