//! End-to-end bound pipeline: rounding, terminalization, ε-klt check,
//! redundant part, MMP, negative discrepancies, Cartier index, volume and the
//! final threshold, recorded as a replayable certificate.

use std::collections::BTreeMap;
use std::fmt;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

use crate::bigness::{numerical_representative, BignessCertificate, BignessOracle, TrackedCertificateOracle, ZariskiOracle};
use crate::bounds::{birationality_threshold, semigroup_decompose, Decomposition};
use crate::divisor::{round_coefficients, CoefficientSet, LogDivisor, QDivisor};
use crate::error::{Error, Result};
use crate::format::{CertificateDoc, PairDoc};
use crate::model::LogPair;
use crate::morphism::{ModelMorphism, Step};
use crate::programs::{count_negative_discrepancy, redundant_part, run_mmp, terminalize, MmpOutcome, MmpStep};
use crate::rational::Rational;
use crate::singularity::{cartier_index, classify};

pub const CAVEAT_TRACKED: &str = "nef and big are relative to the tracked configuration";
pub const CAVEAT_VOLUME: &str = "the comparison D^2 >= vol(K_X) is not checked; only D^2 > 0 on the final model";
pub const CAVEAT_ASSUMED_BIG: &str = "bigness of K + Delta was assumed by the caller, not certified";
pub const CAVEAT_NO_REDUNDANCY: &str = "redundant part not computed: no bigness certificate";

pub const STAGES: [&str; 10] = [
    "input",
    "round",
    "terminalize",
    "epsilon-klt",
    "redundant-part",
    "mmp",
    "negative-discrepancies",
    "cartier-index",
    "volume",
    "threshold",
];

/// Supplied Cartier index bound, or the concrete index of the final model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum CartierChoice {
    Given(u64),
    #[default]
    ComputeConcrete,
}

impl fmt::Display for CartierChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CartierChoice::Given(n) => write!(f, "{n}"),
            CartierChoice::ComputeConcrete => f.write_str("compute-concrete"),
        }
    }
}

impl Serialize for CartierChoice {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            CartierChoice::Given(n) => s.serialize_u64(*n),
            CartierChoice::ComputeConcrete => s.serialize_str("compute-concrete"),
        }
    }
}

impl<'de> Deserialize<'de> for CartierChoice {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            N(u64),
            S(String),
        }
        match Raw::deserialize(d)? {
            Raw::N(n) => Ok(CartierChoice::Given(n)),
            Raw::S(s) if s == "compute-concrete" => Ok(CartierChoice::ComputeConcrete),
            Raw::S(s) => Err(serde::de::Error::custom(format!(
                "expected a positive integer or \"compute-concrete\", got {s:?}"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundInputs {
    pub delta: Rational,
    pub epsilon: Rational,
    /// The component bound `A`.
    pub component_bound: u64,
    #[serde(default)]
    pub n_cartier: CartierChoice,
    #[serde(default = "default_true")]
    pub restrict_redundant: bool,
    #[serde(default)]
    pub assume_big: bool,
}

fn default_true() -> bool {
    true
}

impl BoundInputs {
    pub fn new(delta: Rational, epsilon: Rational, component_bound: u64) -> Self {
        BoundInputs {
            delta,
            epsilon,
            component_bound,
            n_cartier: CartierChoice::ComputeConcrete,
            restrict_redundant: true,
            assume_big: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |x: &Rational| x.is_positive() && *x < Rational::one();
        if !unit(&self.delta) {
            return Err(Error::domain(format!("delta = {} must lie in (0, 1)", self.delta)));
        }
        if !unit(&self.epsilon) {
            return Err(Error::domain(format!("epsilon = {} must lie in (0, 1)", self.epsilon)));
        }
        if self.component_bound == 0 {
            return Err(Error::domain("component_bound must be at least 1"));
        }
        if self.n_cartier == CartierChoice::Given(0) {
            return Err(Error::domain("n_cartier must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageRecord {
    pub stage: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<PairDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PairDoc>,
    /// Steps of the morphism from the upper to the lower model of the stage.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub steps: Vec<Step>,
    #[serde(default)]
    pub constants: BTreeMap<String, Value>,
    /// Bigness certificate for the stage's output pair.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bigness: Option<CertificateDoc>,
}

impl StageRecord {
    fn new(stage: &str) -> Self {
        StageRecord {
            stage: stage.to_string(),
            input: None,
            output: None,
            steps: Vec::new(),
            constants: BTreeMap::new(),
            bigness: None,
        }
    }

    fn constant(mut self, key: &str, value: impl Serialize) -> Self {
        self.constants
            .insert(key.to_string(), serde_json::to_value(value).expect("constants serialize"));
        self
    }

    fn transform(mut self, input: &LogPair, output: &LogPair) -> Self {
        self.input = Some(PairDoc::from_pair(input));
        self.output = Some(PairDoc::from_pair(output));
        self
    }

    fn certified(mut self, pair: &LogPair, cert: Option<&BignessCertificate>) -> Self {
        self.bigness = cert.map(|c| CertificateDoc::from_certificate(pair.model(), c));
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundCertificate {
    pub inputs: BoundInputs,
    pub stages: Vec<StageRecord>,
    pub n_cartier: u64,
    /// `18 · n_cartier`.
    pub n_final: u64,
    pub m0: u64,
    pub caveats: Vec<String>,
}

fn labelled(pair: &LogPair, d: &QDivisor) -> BTreeMap<String, Rational> {
    d.iter()
        .map(|(id, c)| (pair.model().label(id).to_string(), c.clone()))
        .collect()
}

fn stage_error(stage: &str, message: impl Into<String>) -> Error {
    Error::Stage {
        stage: stage.to_string(),
        message: message.into(),
    }
}

/// Certify `K + Δ_new` on the same model, first by shifting a known
/// certificate, then from scratch.
fn recertify(
    pair: &LogPair,
    old: &LogPair,
    cert: Option<&BignessCertificate>,
) -> Option<BignessCertificate> {
    let target = pair.log_canonical();
    let shifted = cert.and_then(|c| {
        TrackedCertificateOracle {
            reference: old.log_canonical(),
            certificate: c.clone(),
        }
        .certify(pair.model(), &target)
    });
    shifted.or_else(|| ZariskiOracle.certify(pair.model(), &target))
}

/// Run every stage on `pair`. `supplied` is a bigness certificate for
/// `K + Δ` on the input model; without one the pipeline tries to build one.
pub fn run_pipeline(
    pair: &LogPair,
    inputs: &BoundInputs,
    supplied: Option<&BignessCertificate>,
) -> Result<BoundCertificate> {
    inputs.validate().map_err(|e| e.in_stage("inputs"))?;
    let mut stages = Vec::new();
    let mut caveats = vec![CAVEAT_TRACKED.to_string(), CAVEAT_VOLUME.to_string()];

    // input
    let s = "input";
    pair.ensure_boundary().map_err(|e| e.in_stage(s))?;
    if !pair.model().is_smooth() {
        return Err(stage_error(s, "the input model must be smooth with an SNC configuration"));
    }
    let report = classify(pair).map_err(|e| e.in_stage(s))?;
    if !report.classification.is_klt() {
        return Err(stage_error(s, format!("the pair is not klt ({:?})", report.classification)));
    }
    let (cert, source) = match supplied {
        Some(c) => {
            c.verify(pair.model(), &pair.log_canonical())
                .map_err(|e| e.in_stage(s))?;
            (Some(c.clone()), "supplied")
        }
        None => match ZariskiOracle.certify(pair.model(), &pair.log_canonical()) {
            Some(c) => (Some(c), "constructed"),
            None if inputs.assume_big => {
                caveats.push(CAVEAT_ASSUMED_BIG.to_string());
                (None, "assumed")
            }
            None => {
                return Err(stage_error(
                    s,
                    "no bigness certificate was supplied and none could be constructed",
                ))
            }
        },
    };
    let mut rec = StageRecord::new(s)
        .constant("classification", report.classification)
        .constant("certificate_source", source)
        .certified(pair, cert.as_ref());
    rec.output = Some(PairDoc::from_pair(pair));
    stages.push(rec);

    // round
    let s = "round";
    let (rounded, k) = if pair.boundary().is_empty() {
        (pair.clone(), None)
    } else {
        let set = CoefficientSet::of_divisor(pair.boundary()).map_err(|e| e.in_stage(s))?;
        let r = round_coefficients(&set, &inputs.delta).map_err(|e| e.in_stage(s))?;
        let out = pair
            .with_boundary(r.apply_divisor(pair.boundary()))
            .map_err(|e| e.in_stage(s))?;
        (out, Some(r.k))
    };
    let cert = match &cert {
        Some(_) => Some(recertify(&rounded, pair, cert.as_ref()).ok_or_else(|| {
            stage_error(s, "the rounded pair is not certified big; use a smaller delta")
        })?),
        None => None,
    };
    stages.push(
        StageRecord::new(s)
            .transform(pair, &rounded)
            .constant("delta", &inputs.delta)
            .constant("k", k)
            .certified(&rounded, cert.as_ref()),
    );

    // terminalize
    let s = "terminalize";
    let (term, f) = terminalize(&rounded).map_err(|e| e.in_stage(s))?;
    let cert = cert.map(|c| c.pullback(&f));
    if let Some(c) = &cert {
        c.verify(term.model(), &term.log_canonical())
            .map_err(|e| e.in_stage(s))?;
    }
    let mut rec = StageRecord::new(s)
        .transform(&rounded, &term)
        .constant("blow_ups", f.steps().len())
        .certified(&term, cert.as_ref());
    rec.steps = f.steps().to_vec();
    stages.push(rec);

    // epsilon-klt
    let s = "epsilon-klt";
    let report = classify(&term).map_err(|e| e.in_stage(s))?;
    if !report.is_epsilon_klt(&inputs.epsilon) {
        return Err(stage_error(
            s,
            format!(
                "the terminal pair is not {}-klt (threshold {})",
                inputs.epsilon,
                report
                    .epsilon_klt_threshold
                    .as_ref()
                    .map_or("none".to_string(), ToString::to_string)
            ),
        ));
    }
    stages.push(
        StageRecord::new(s)
            .constant("epsilon", &inputs.epsilon)
            .constant("classification", report.classification)
            .constant("threshold", &report.epsilon_klt_threshold)
            .constant("threshold_attained", report.epsilon_klt_threshold_attained),
    );

    // redundant-part
    let s = "redundant-part";
    let (reduced, cert, removed) = match (&cert, inputs.restrict_redundant) {
        (Some(c), true) => {
            let oracle = TrackedCertificateOracle {
                reference: term.log_canonical(),
                certificate: c.clone(),
            };
            let r = redundant_part(&term, &oracle).map_err(|e| e.in_stage(s))?;
            let reduced = term.with_boundary(r.remaining).map_err(|e| e.in_stage(s))?;
            (reduced, Some(r.certificate), Some(r.removed))
        }
        (None, true) => {
            caveats.push(CAVEAT_NO_REDUNDANCY.to_string());
            (term.clone(), None, None)
        }
        (_, false) => (term.clone(), cert, None),
    };
    let nt = reduced.boundary().len() as u64;
    if nt > inputs.component_bound {
        return Err(stage_error(
            s,
            format!("{nt} boundary components exceed the bound A = {}", inputs.component_bound),
        ));
    }
    stages.push(
        StageRecord::new(s)
            .transform(&term, &reduced)
            .constant("computed", removed.is_some())
            .constant("removed", removed.as_ref().map(|r| labelled(&term, r)))
            .constant("components", nt)
            .constant("component_bound", inputs.component_bound)
            .certified(&reduced, cert.as_ref()),
    );

    // mmp
    let s = "mmp";
    let trace = run_mmp(&reduced).map_err(|e| e.in_stage(s))?;
    if let MmpOutcome::NonNefResidual { curve, log_degree } = &trace.outcome {
        return Err(stage_error(
            s,
            format!("(K + Delta).{curve} = {log_degree} < 0 on a curve that cannot be contracted; K + Delta is not big"),
        ));
    }
    let fin = trace.final_pair.clone();
    let representative = match &cert {
        Some(c) => Some(trace.morphism.pushforward(&(&c.nef_part + &c.effective_part))),
        None => numerical_representative(fin.model(), &fin.log_canonical()),
    };
    let mut rec = StageRecord::new(s)
        .transform(&reduced, &fin)
        .constant("contractions", trace.steps.len())
        .constant("trace", &trace.steps)
        .constant("representative", representative.as_ref().map(|r| labelled(&fin, r)));
    rec.steps = trace.morphism.steps().to_vec();
    stages.push(rec);

    // negative-discrepancies
    let s = "negative-discrepancies";
    let count = count_negative_discrepancy(&trace) as u64;
    if count > nt {
        return Err(stage_error(
            s,
            format!("{count} curves with negative discrepancy exceed nt = {nt}"),
        ));
    }
    if count > inputs.component_bound {
        return Err(stage_error(
            s,
            format!("{count} curves with negative discrepancy exceed A = {}", inputs.component_bound),
        ));
    }
    stages.push(
        StageRecord::new(s)
            .constant("count", count)
            .constant("components", nt)
            .constant("component_bound", inputs.component_bound),
    );

    // cartier-index
    let s = "cartier-index";
    let concrete = cartier_index(&fin.log_canonical(), &trace.morphism).map_err(|e| e.in_stage(s))?;
    let n = match inputs.n_cartier {
        CartierChoice::Given(n) if n % concrete != 0 => {
            return Err(stage_error(
                s,
                format!("supplied N = {n} is not a multiple of the concrete index {concrete}"),
            ))
        }
        CartierChoice::Given(n) => n,
        CartierChoice::ComputeConcrete => concrete,
    };
    stages.push(
        StageRecord::new(s)
            .constant("concrete", concrete)
            .constant("choice", inputs.n_cartier.to_string())
            .constant("n", n),
    );

    // volume
    let s = "volume";
    let volume = representative.as_ref().map(|r| fin.model().intersect(r, r));
    match &volume {
        Some(v) if !v.is_positive() => {
            return Err(stage_error(s, format!("(K + Delta)^2 = {v} is not positive")))
        }
        None => caveats.push("volume not computed: K + Delta has no representative on tracked curves".to_string()),
        _ => {}
    }
    stages.push(StageRecord::new(s).constant("volume", &volume));

    // threshold
    let s = "threshold";
    let n_final = n
        .checked_mul(18)
        .ok_or_else(|| stage_error(s, "18 N overflows"))?;
    let m0 = birationality_threshold(n).map_err(|e| e.in_stage(s))?;
    let decomposition = semigroup_decompose(n_final, m0).map_err(|e| e.in_stage(s))?;
    stages.push(
        StageRecord::new(s)
            .constant("n_final", n_final)
            .constant("m0", m0)
            .constant("decomposition", decomposition),
    );

    Ok(BoundCertificate {
        inputs: inputs.clone(),
        stages,
        n_cartier: n,
        n_final,
        m0,
        caveats,
    })
}

fn mismatch(stage: &str, message: impl Into<String>) -> Error {
    Error::verification(stage, message)
}

fn read<T: DeserializeOwned>(rec: &StageRecord, key: &str) -> Result<T> {
    let v = rec
        .constants
        .get(key)
        .ok_or_else(|| mismatch(&rec.stage, format!("missing constant {key}")))?;
    serde_json::from_value(v.clone())
        .map_err(|e| mismatch(&rec.stage, format!("constant {key}: {e}")))
}

fn expect_eq<T: PartialEq + fmt::Debug>(stage: &str, what: &str, recorded: &T, actual: &T) -> Result<()> {
    if recorded == actual {
        Ok(())
    } else {
        Err(mismatch(
            stage,
            format!("{what}: recorded {recorded:?}, recomputed {actual:?}"),
        ))
    }
}

fn pair_of(rec: &StageRecord, output: bool) -> Result<LogPair> {
    let (doc, which) = if output {
        (&rec.output, "output")
    } else {
        (&rec.input, "input")
    };
    let doc = doc
        .as_ref()
        .ok_or_else(|| mismatch(&rec.stage, format!("missing {which} pair")))?;
    doc.to_pair(which)
        .map_err(|e| mismatch(&rec.stage, format!("{which} pair: {e}")))
}

fn certificate_of(rec: &StageRecord, pair: &LogPair) -> Result<Option<BignessCertificate>> {
    let Some(doc) = &rec.bigness else {
        return Ok(None);
    };
    let cert = doc
        .to_certificate(pair.model(), "bigness")
        .map_err(|e| mismatch(&rec.stage, e.to_string()))?;
    cert.verify(pair.model(), &pair.log_canonical())
        .map_err(|e| mismatch(&rec.stage, format!("bigness certificate: {e}")))?;
    Ok(Some(cert))
}

fn check<T>(stage: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| mismatch(stage, e.to_string()))
}

/// Replay every stage identity recorded in `cert`, then recompute the whole
/// pipeline from the recorded input and compare. Any disagreement is a
/// [`Error::Verification`].
pub fn verify_certificate(cert: &BoundCertificate) -> Result<()> {
    let names: Vec<&str> = cert.stages.iter().map(|r| r.stage.as_str()).collect();
    if names != STAGES {
        return Err(mismatch("certificate", format!("unexpected stage list {names:?}")));
    }
    let st = |name: &str| &cert.stages[STAGES.iter().position(|s| *s == name).expect("known stage")];
    let inputs = &cert.inputs;

    // input
    let rec = st("input");
    let input = pair_of(rec, true)?;
    let supplied = certificate_of(rec, &input)?;
    let report = check("input", classify(&input))?;
    if !report.classification.is_klt() {
        return Err(mismatch("input", "input pair is not klt"));
    }
    let source: String = read(rec, "certificate_source")?;

    // round
    let rec = st("round");
    let before = pair_of(rec, false)?;
    expect_eq("round", "input pair", &before, &input)?;
    let rounded = pair_of(rec, true)?;
    expect_eq("round", "model", rounded.model(), input.model())?;
    let k: Option<u64> = read(rec, "k")?;
    if let Some(k) = k {
        let set = check("round", CoefficientSet::of_divisor(input.boundary()))?;
        let r = check("round", round_coefficients(&set, &inputs.delta))?;
        expect_eq("round", "k", &k, &r.k)?;
        expect_eq("round", "boundary", rounded.boundary(), &r.apply_divisor(input.boundary()))?;
        let slack = Rational::one() - &inputs.delta;
        for (id, a) in input.boundary().iter() {
            let b = rounded.coefficient(id);
            if !(b <= *a && &slack * a < b) {
                return Err(mismatch("round", format!("{} rounded from {a} to {b}", input.model().label(id))));
            }
        }
    } else {
        expect_eq("round", "boundary", rounded.boundary(), input.boundary())?;
    }
    certificate_of(rec, &rounded)?;

    // terminalize
    let rec = st("terminalize");
    expect_eq("terminalize", "input pair", &pair_of(rec, false)?, &rounded)?;
    let term = pair_of(rec, true)?;
    let f = check("terminalize", ModelMorphism::from_steps(rounded.model().clone(), rec.steps.clone()))?;
    expect_eq("terminalize", "replayed model", f.source(), term.model())?;
    expect_eq(
        "terminalize",
        "crepant pullback",
        &f.pullback_log(&rounded.log_canonical()),
        &term.log_canonical(),
    )?;
    if !check("terminalize", classify(&term))?.classification.is_terminal() {
        return Err(mismatch("terminalize", "output pair is not terminal"));
    }
    if let Some(k) = k {
        let kq = Rational::from_bigint(k.into());
        if let Some((id, c)) = term.boundary().iter().find(|(_, c)| !(*c * &kq).is_integer()) {
            return Err(mismatch("terminalize", format!("{c} on {} is off the 1/{k} grid", term.model().label(id))));
        }
    }
    certificate_of(rec, &term)?;

    // epsilon-klt
    let rec = st("epsilon-klt");
    let report = check("epsilon-klt", classify(&term))?;
    if !report.is_epsilon_klt(&inputs.epsilon) {
        return Err(mismatch("epsilon-klt", "terminal pair is not epsilon-klt"));
    }
    let threshold: Option<Rational> = read(rec, "threshold")?;
    expect_eq("epsilon-klt", "threshold", &threshold, &report.epsilon_klt_threshold)?;

    // redundant-part
    let rec = st("redundant-part");
    expect_eq("redundant-part", "input pair", &pair_of(rec, false)?, &term)?;
    let reduced = pair_of(rec, true)?;
    expect_eq("redundant-part", "model", reduced.model(), term.model())?;
    for (id, c) in reduced.boundary().iter() {
        if *c != term.coefficient(id) {
            return Err(mismatch("redundant-part", "a component was only partly removed"));
        }
    }
    let nt = reduced.boundary().len() as u64;
    if nt > inputs.component_bound {
        return Err(mismatch("redundant-part", "component bound exceeded"));
    }
    certificate_of(rec, &reduced)?;

    // mmp
    let rec = st("mmp");
    expect_eq("mmp", "input pair", &pair_of(rec, false)?, &reduced)?;
    let fin = pair_of(rec, true)?;
    let g = check("mmp", ModelMorphism::from_steps(fin.model().clone(), rec.steps.clone()))?;
    expect_eq("mmp", "replayed model", g.source(), reduced.model())?;
    expect_eq("mmp", "pushed boundary", &g.pushforward(reduced.boundary()), fin.boundary())?;
    if !fin.model().nef_check(&fin.log_canonical()).is_nef() {
        return Err(mismatch("mmp", "final K + Delta is not nef on tracked curves"));
    }
    let trace: Vec<MmpStep> = read(rec, "trace")?;
    let pulled = g.pullback_log(&fin.log_canonical());
    for step in &trace {
        if !(step.log_degree.is_negative() && step.self_intersection.is_negative()) {
            return Err(mismatch("mmp", format!("{} was not a negative extremal curve", step.label)));
        }
        expect_eq("mmp", "final discrepancy", &step.final_discrepancy, &-pulled.divisor.coeff(step.curve))?;
    }

    // negative-discrepancies
    let rec = st("negative-discrepancies");
    let count = trace.iter().filter(|s| s.final_discrepancy.is_negative()).count() as u64;
    expect_eq("negative-discrepancies", "count", &read::<u64>(rec, "count")?, &count)?;
    if count > nt || count > inputs.component_bound {
        return Err(mismatch("negative-discrepancies", "count exceeds its bound"));
    }

    // cartier-index
    let rec = st("cartier-index");
    let concrete = check("cartier-index", cartier_index(&fin.log_canonical(), &g))?;
    expect_eq("cartier-index", "concrete index", &read::<u64>(rec, "concrete")?, &concrete)?;
    let expected_n = match inputs.n_cartier {
        CartierChoice::Given(n) => n,
        CartierChoice::ComputeConcrete => concrete,
    };
    if expected_n % concrete != 0 {
        return Err(mismatch("cartier-index", "N is not a multiple of the concrete index"));
    }
    expect_eq("cartier-index", "N", &cert.n_cartier, &expected_n)?;

    // volume
    let rec = st("volume");
    let volume: Option<Rational> = read(rec, "volume")?;
    let representative: Option<BTreeMap<String, Rational>> = read(st("mmp"), "representative")?;
    if let Some(map) = &representative {
        let rep: QDivisor = check(
            "volume",
            map.iter()
                .map(|(l, c)| {
                    fin.model()
                        .id_of_label(l)
                        .map(|id| (id, c.clone()))
                        .ok_or_else(|| Error::domain(format!("unknown label {l}")))
                })
                .collect::<Result<QDivisor>>(),
        )?;
        for &c in fin.model().ids() {
            let lhs = fin.model().degree_on(&LogDivisor::plain(rep.clone()), c);
            if lhs != fin.log_degree(c) {
                return Err(mismatch("volume", "representative is not numerically K + Delta"));
            }
        }
        let v = fin.model().intersect(&rep, &rep);
        expect_eq("volume", "volume", &volume, &Some(v.clone()))?;
        if !v.is_positive() {
            return Err(mismatch("volume", "volume is not positive"));
        }
    }

    // threshold
    let rec = st("threshold");
    let n_final = cert
        .n_cartier
        .checked_mul(18)
        .ok_or_else(|| mismatch("threshold", "18 N overflows"))?;
    expect_eq("threshold", "n_final", &cert.n_final, &n_final)?;
    let m0 = n_final
        .checked_mul(n_final)
        .and_then(|x| x.checked_add(1))
        .ok_or_else(|| mismatch("threshold", "m0 overflows"))?;
    expect_eq("threshold", "m0", &cert.m0, &m0)?;
    expect_eq("threshold", "recorded m0", &read::<u64>(rec, "m0")?, &m0)?;
    let d: Decomposition = read(rec, "decomposition")?;
    expect_eq("threshold", "decomposition total", &d.total(n_final), &Some(m0))?;

    // full recomputation
    let supplied = if source == "supplied" { supplied } else { None };
    let again = run_pipeline(&input, inputs, supplied.as_ref())
        .map_err(|e| mismatch("replay", e.to_string()))?;
    if again != *cert {
        let stage = again
            .stages
            .iter()
            .zip(&cert.stages)
            .find(|(a, b)| a != b)
            .map_or("certificate".to_string(), |(a, _)| a.stage.clone());
        return Err(mismatch(&stage, "recomputed certificate differs from the recorded one"));
    }
    Ok(())
}
