//! Value-preservation checks: evaluate two Z-integrals that should agree and
//! compare, either one pair at a time or over a JSON-lines corpus.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cov::{apply_cov, ChangeOfVariable, CovError};
use crate::integral::{SpecDoc, SpecError, ZIntegralSpec};
use crate::zeval::{evaluate, swings, EvalConfig, Status, ZError, ZResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    EqualWithinTol,
    Mismatch,
    ExistenceAsymmetry,
    BothNonconverged,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::EqualWithinTol => "equal_within_tol",
            Verdict::Mismatch => "mismatch",
            Verdict::ExistenceAsymmetry => "existence_asymmetry",
            Verdict::BothNonconverged => "both_nonconverged",
        }
    }

    fn parse(text: &str) -> Option<Verdict> {
        [
            Verdict::EqualWithinTol,
            Verdict::Mismatch,
            Verdict::ExistenceAsymmetry,
            Verdict::BothNonconverged,
        ]
        .into_iter()
        .find(|v| v.as_str() == text)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The verdict table. Quadrature failures count as non-converged.
pub fn verdict_for(left: &ZResult, right: &ZResult, tol: f64) -> Verdict {
    let l = left.status == Status::Converged;
    let r = right.status == Status::Converged;
    match (l, r) {
        (true, true) if (left.value - right.value).abs() <= tol => Verdict::EqualWithinTol,
        (true, true) => Verdict::Mismatch,
        (true, false) | (false, true) => Verdict::ExistenceAsymmetry,
        (false, false) => Verdict::BothNonconverged,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationOutcome {
    pub case_id: String,
    pub left: ZResult,
    pub right: ZResult,
    pub verdict: Verdict,
    pub tolerance: f64,
}

/// Evaluate both sides with the same configuration and compare.
pub fn compare_pair(
    left: &ZIntegralSpec,
    right: &ZIntegralSpec,
    cfg: &EvalConfig,
    tol: f64,
) -> Result<VerificationOutcome, ZError> {
    compare_pair_with(left, cfg, right, cfg, tol, "")
}

/// Like [`compare_pair`] with a separate configuration for each side.
pub fn compare_pair_with(
    left: &ZIntegralSpec,
    left_cfg: &EvalConfig,
    right: &ZIntegralSpec,
    right_cfg: &EvalConfig,
    tol: f64,
    case_id: &str,
) -> Result<VerificationOutcome, ZError> {
    let l = evaluate(left, left_cfg)?;
    let r = evaluate(right, right_cfg)?;
    Ok(VerificationOutcome {
        case_id: case_id.into(),
        verdict: verdict_for(&l, &r, tol),
        left: l,
        right: r,
        tolerance: tol,
    })
}

/// One line of a corpus file.
///
/// Pairs give either `right_spec` or a `cov` applied to `left_spec`; single
/// cases give neither and expect a status instead of a verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusCase {
    pub id: String,
    pub left_spec: SpecDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub right_spec: Option<SpecDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cov: Option<String>,
    /// A verdict for pairs, a status for single cases.
    pub expected_verdict: String,
    pub tol: f64,
    /// Value every converged side must match within `tol`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<EvalConfig>,
    /// Configuration for the right side; defaults to `config`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub right_config: Option<EvalConfig>,
    /// Apply a custom `cov` even though its validity is inconclusive.
    #[serde(default)]
    pub allow_inconclusive: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("cannot read corpus {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("no cases")]
    NoCases,
    #[error("line {line}: field `{field}`: {message}")]
    Schema {
        line: usize,
        field: String,
        message: String,
    },
    #[error("line {line}: duplicate case id `{id}`")]
    DuplicateId { line: usize, id: String },
    #[error("case `{id}`: {source}")]
    Cov { id: String, source: CovError },
    #[error("case `{id}`: {source}")]
    Eval { id: String, source: ZError },
}

/// A case after its specs, transform and expectation have been built.
#[derive(Debug, Clone)]
pub struct PreparedCase {
    pub case: CorpusCase,
    pub left: ZIntegralSpec,
    pub right: Option<ZIntegralSpec>,
    pub expected: Expected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expected {
    Verdict(Verdict),
    Status(Status),
}

impl Expected {
    fn parse(text: &str) -> Option<Expected> {
        if let Some(v) = Verdict::parse(text) {
            return Some(Expected::Verdict(v));
        }
        [
            Status::Converged,
            Status::Oscillatory,
            Status::Drifting,
            Status::QuadFailure,
        ]
        .into_iter()
        .find(|s| s.as_str() == text)
        .map(Expected::Status)
    }
}

fn spec_field(side: &str, doc: &SpecDoc, err: &SpecError) -> String {
    let sub = match err {
        SpecError::MissingField(f) => f,
        SpecError::UnexpectedField { field, .. } => field,
        SpecError::UnknownType(_) => "type",
        SpecError::Taper(_) => {
            if doc.kind == "fin" {
                "w"
            } else {
                "z"
            }
        }
        SpecError::Parse(_) | SpecError::ForeignVariable { .. } => {
            if doc.kind == "fin" {
                "g"
            } else {
                "f"
            }
        }
        SpecError::BadVariable(_) => "var",
        SpecError::NotFinite { .. } | SpecError::NonPositiveUpper(_) => {
            if doc.kind == "fin" {
                "beta"
            } else {
                "a"
            }
        }
    };
    format!("{side}.{sub}")
}

/// serde reports unknown or missing fields as "... field `name` ...".
fn serde_field(message: &str) -> String {
    message
        .split('`')
        .nth(1)
        .map_or_else(|| "(line)".to_string(), str::to_string)
}

/// Parse and build every case of a JSON-lines corpus. Blank lines and lines
/// starting with `#` are skipped.
pub fn parse_corpus(text: &str) -> Result<Vec<PreparedCase>, CorpusError> {
    let mut cases: Vec<PreparedCase> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let raw = raw.trim();
        if raw.is_empty() || raw.starts_with('#') {
            continue;
        }
        let case: CorpusCase = serde_json::from_str(raw).map_err(|e| {
            let message = e.to_string();
            CorpusError::Schema {
                line,
                field: serde_field(&message),
                message,
            }
        })?;
        if cases.iter().any(|c| c.case.id == case.id) {
            return Err(CorpusError::DuplicateId { line, id: case.id });
        }
        let schema = |field: String, message: String| CorpusError::Schema { line, field, message };
        let left = case
            .left_spec
            .build()
            .map_err(|e| schema(spec_field("left_spec", &case.left_spec, &e), e.to_string()))?;
        let expected = Expected::parse(&case.expected_verdict).ok_or_else(|| {
            schema(
                "expected_verdict".into(),
                format!("unknown verdict or status `{}`", case.expected_verdict),
            )
        })?;
        if !(case.tol > 0.0 && case.tol.is_finite()) {
            return Err(schema("tol".into(), format!("must be positive, got {}", case.tol)));
        }
        let right = match (&case.right_spec, &case.cov) {
            (Some(_), Some(_)) => return Err(schema("cov".into(), "give either right_spec or cov, not both".into())),
            (Some(doc), None) => Some(
                doc.build()
                    .map_err(|e| schema(spec_field("right_spec", doc, &e), e.to_string()))?,
            ),
            (None, Some(text)) => {
                let cov = ChangeOfVariable::from_spec_string(text, &left).map_err(|e| match e {
                    CovError::SpecString(_) | CovError::Parse(_) => schema("cov".into(), e.to_string()),
                    other => CorpusError::Cov {
                        id: case.id.clone(),
                        source: other,
                    },
                })?;
                Some(
                    apply_cov(&left, &cov, case.allow_inconclusive).map_err(|source| CorpusError::Cov {
                        id: case.id.clone(),
                        source,
                    })?,
                )
            }
            (None, None) => None,
        };
        match (&right, expected) {
            (Some(_), Expected::Status(_)) => {
                return Err(schema("expected_verdict".into(), "pairs expect a verdict".into()))
            }
            (None, Expected::Verdict(_)) => {
                return Err(schema("expected_verdict".into(), "single cases expect a status".into()))
            }
            _ => {}
        }
        for (field, cfg) in [("config", &case.config), ("right_config", &case.right_config)] {
            if let Some(cfg) = cfg {
                cfg.validate().map_err(|e| schema(field.into(), e.to_string()))?;
            }
        }
        cases.push(PreparedCase {
            case,
            left,
            right,
            expected,
        });
    }
    if cases.is_empty() {
        return Err(CorpusError::NoCases);
    }
    Ok(cases)
}

pub fn load_corpus(path: &Path) -> Result<Vec<PreparedCase>, CorpusError> {
    let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_corpus(&text)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SideReport {
    pub value: f64,
    pub status: Status,
    pub evaluations: usize,
}

impl From<&ZResult> for SideReport {
    fn from(r: &ZResult) -> Self {
        SideReport {
            value: r.value,
            status: r.status,
            evaluations: r.evaluations,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseReport {
    pub id: String,
    /// Verdict for pairs, status for single cases.
    pub outcome: String,
    pub expected: String,
    pub passed: bool,
    pub left: SideReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub right: Option<SideReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub cases: Vec<CaseReport>,
    pub passed: bool,
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<32} {:<20} {:<20} {:>14} {:>14} {:>12}  result",
            "id", "outcome", "expected", "left", "right", "evaluations"
        )?;
        for c in &self.cases {
            let right = c.right.as_ref().map_or("-".to_string(), |r| format!("{:.9}", r.value));
            let evals = c.left.evaluations + c.right.as_ref().map_or(0, |r| r.evaluations);
            write!(
                f,
                "{:<32} {:<20} {:<20} {:>14.9} {:>14} {:>12}  {}",
                c.id,
                c.outcome,
                c.expected,
                c.left.value,
                right,
                evals,
                if c.passed { "ok" } else { "FAIL" }
            )?;
            if let Some(d) = &c.detail {
                write!(f, "  ({d})")?;
            }
            writeln!(f)?;
        }
        let failed = self.cases.iter().filter(|c| !c.passed).count();
        write!(f, "{} cases, {} failed", self.cases.len(), failed)
    }
}

fn value_detail(expected: Option<f64>, tol: f64, sides: &[&ZResult]) -> Option<String> {
    let want = expected?;
    sides
        .iter()
        .filter(|r| r.status == Status::Converged)
        .find(|r| (r.value - want).abs() > tol)
        .map(|r| format!("value {} differs from expected {want} by more than {tol}", r.value))
}

/// Evaluate one prepared case.
pub fn run_case(prepared: &PreparedCase, base: &EvalConfig) -> Result<CaseReport, CorpusError> {
    let case = &prepared.case;
    let left_cfg = case.config.clone().unwrap_or_else(|| base.clone());
    let right_cfg = case.right_config.clone().unwrap_or_else(|| left_cfg.clone());
    let eval_err = |source| CorpusError::Eval {
        id: case.id.clone(),
        source,
    };
    match &prepared.right {
        Some(right) => {
            let out = compare_pair_with(&prepared.left, &left_cfg, right, &right_cfg, case.tol, &case.id)
                .map_err(eval_err)?;
            let detail = value_detail(case.expected_value, case.tol, &[&out.left, &out.right]);
            Ok(CaseReport {
                id: case.id.clone(),
                outcome: out.verdict.to_string(),
                expected: case.expected_verdict.clone(),
                passed: prepared.expected == Expected::Verdict(out.verdict) && detail.is_none(),
                left: (&out.left).into(),
                right: Some((&out.right).into()),
                detail,
            })
        }
        None => {
            let r = evaluate(&prepared.left, &left_cfg).map_err(eval_err)?;
            let detail = value_detail(case.expected_value, case.tol, &[&r]);
            Ok(CaseReport {
                id: case.id.clone(),
                outcome: r.status.to_string(),
                expected: case.expected_verdict.clone(),
                passed: prepared.expected == Expected::Status(r.status) && detail.is_none(),
                left: (&r).into(),
                right: None,
                detail,
            })
        }
    }
}

/// Run every case; the report is ordered by case id.
pub fn run_suite(cases: &[PreparedCase], base: &EvalConfig) -> Result<SuiteReport, CorpusError> {
    let mut reports = cases.iter().map(|c| run_case(c, base)).collect::<Result<Vec<_>, _>>()?;
    reports.sort_by(|a, b| a.id.cmp(&b.id));
    let passed = reports.iter().all(|r| r.passed);
    Ok(SuiteReport { cases: reports, passed })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DemoEntry {
    pub label: String,
    pub spec: String,
    pub result: ZResult,
    /// Changes between consecutive turning points of the bracket sequence.
    pub swings: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DemoReport {
    pub entries: Vec<DemoEntry>,
}

impl DemoReport {
    pub fn count(&self, status: Status) -> usize {
        self.entries.iter().filter(|e| e.result.status == status).count()
    }

    /// One converged run and two oscillatory ones, as expected.
    pub fn as_expected(&self) -> bool {
        self.count(Status::Converged) == 1 && self.count(Status::Oscillatory) == 2
    }
}

impl fmt::Display for DemoReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            let r = &e.result;
            writeln!(f, "{}", e.label)?;
            writeln!(f, "  integral: {}", e.spec)?;
            writeln!(f, "  status:   {}", r.status)?;
            writeln!(f, "  value:    {:.10}  (last sample)", r.value)?;
            if !e.swings.is_empty() {
                let shown: Vec<String> = e.swings.iter().rev().take(4).rev().map(|s| format!("{s:.4}")).collect();
                writeln!(f, "  swings:   {}", shown.join(", "))?;
            }
            let step = (r.samples.len() / 12).max(1);
            write!(f, "  trace:   ")?;
            for s in r.samples.iter().step_by(step) {
                write!(f, " ({:.4}, {:.6})", s.param, s.value)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Evaluation settings used by the demo for the `y = x²` image, whose
/// bracket oscillates with period growing like `√b` and needs a long run
/// of samples to show it.
pub fn slow_tone_config() -> EvalConfig {
    EvalConfig {
        b_step: 1.0,
        b_count: 400,
        ..EvalConfig::default()
    }
}

/// The three runs behind the existence caveat: `sin` with a matched
/// termination function converges, the same integral with a plain taper
/// oscillates, and the `y = x²` image of the converging one oscillates.
pub fn demo_existence_asymmetry() -> DemoReport {
    let runs = [
        (
            "sin(x) from 0, matched z",
            ZIntegralSpec::infinite("sin(x)", "x", 0.0, "matched:omega=1,c=1"),
            EvalConfig::default(),
        ),
        (
            "sin(x) from 0, plain taper",
            ZIntegralSpec::infinite("sin(x)", "x", 0.0, "taper:c=1"),
            EvalConfig::default(),
        ),
        (
            "y = x^2 image of sin(x) from 1, matched z",
            ZIntegralSpec::infinite("sin(y^(1/2))/(2*y^(1/2))", "y", 1.0, "matched:omega=1,c=1"),
            slow_tone_config(),
        ),
    ];
    let entries = runs
        .into_iter()
        .map(|(label, spec, cfg)| {
            let spec = spec.expect("demo integrals are well formed");
            let result = evaluate(&spec, &cfg).expect("demo configurations are valid");
            let values: Vec<f64> = result.samples.iter().map(|s| s.value).collect();
            DemoEntry {
                label: label.into(),
                spec: spec.to_string(),
                swings: swings(&values, cfg.tol),
                result,
            }
        })
        .collect();
    DemoReport { entries }
}
