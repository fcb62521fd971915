//! Browser bindings: three operations over JSON strings, shared with the CLI
//! formats.

use wasm_bindgen::prelude::*;

use plurisurf::bounds::semigroup_decompose;
use plurisurf::format::{parse_case, to_json, PairDoc, ReportDocument, SemigroupEntry, TerminalizationSummary};
use plurisurf::programs::terminalize;
use plurisurf::singularity::classify;
use plurisurf::Error;

pub fn semigroup_report(n: u64, m: u64) -> Result<String, Error> {
    let decomposition = semigroup_decompose(n, m)?;
    let mut doc = ReportDocument::new("semigroup");
    doc.semigroup = Some(vec![SemigroupEntry { n, m, decomposition }]);
    Ok(to_json(&doc))
}

pub fn classify_report(case: &str) -> Result<String, Error> {
    let case = parse_case(case)?;
    let mut doc = ReportDocument::new("classify");
    doc.case = case.name;
    doc.singularity = Some(classify(&case.pair)?);
    Ok(to_json(&doc))
}

pub fn terminalize_report(case: &str) -> Result<String, Error> {
    let case = parse_case(case)?;
    let (out, f) = terminalize(&case.pair)?;
    let mut doc = ReportDocument::new("terminalize");
    doc.case = case.name;
    doc.log.push(format!("{} blow-ups", f.steps().len()));
    doc.singularity = Some(classify(&out)?);
    doc.terminalization = Some(TerminalizationSummary {
        steps: f.steps().to_vec(),
        output: PairDoc::from_pair(&out),
    });
    Ok(to_json(&doc))
}

fn js(r: Result<String, Error>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn semigroup(n: u32, m: u32) -> Result<String, JsError> {
    js(semigroup_report(n.into(), m.into()))
}

#[wasm_bindgen(js_name = classifyCase)]
pub fn classify_case(case: &str) -> Result<String, JsError> {
    js(classify_report(case))
}

#[wasm_bindgen(js_name = terminalizeCase)]
pub fn terminalize_case(case: &str) -> Result<String, JsError> {
    js(terminalize_report(case))
}
