//! The `zvar` command line.
//!
//! Exit status: 0 when the integral converged or the verdicts hold, 2 on
//! non-convergence or a mismatch, 1 on usage and evaluation errors.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::cov::{apply_cov, validate_cov, ChangeOfVariable};
use crate::integral::{SpecDoc, ZIntegralSpec};
use crate::verify::{demo_existence_asymmetry, load_corpus, run_suite, verdict_for, Verdict};
use crate::zeval::{evaluate, AccelMethod, EvalConfig, FiniteMode, Sample, Status, ZResult};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;

/// Environment variable overriding the per-point evaluation budget.
pub const MAX_EVALS_ENV: &str = "ZVAR_MAX_EVALS";

#[derive(Debug, Parser)]
#[command(name = "zvar", version, about = "Z-integrals: evaluate, change variables, verify")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate one integral.
    Eval {
        #[command(flatten)]
        spec: SpecArgs,
        #[command(flatten)]
        config: ConfigArgs,
        /// Print the parsed integral and exit.
        #[arg(long)]
        print_spec: bool,
        #[arg(long)]
        json: bool,
    },
    /// Apply a change of variable; evaluates and compares both sides unless
    /// --print-spec is given.
    Transform {
        #[command(flatten)]
        spec: SpecArgs,
        /// power:d=1,r=2 | exp:d=1,alpha=1 | shift:k=5 | linear:d=2 |
        /// bridge:d=1,alpha=1 | custom:P=<expr>,Q=<expr>[,lo=..,hi=..]
        #[arg(long)]
        cov: String,
        /// Apply a custom transform whose validity is only inconclusive.
        #[arg(long)]
        allow_inconclusive: bool,
        /// Print the transformed integral and exit.
        #[arg(long)]
        print_spec: bool,
        /// Tolerance for the value comparison.
        #[arg(long, default_value_t = 1e-5)]
        compare_tol: f64,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        json: bool,
    },
    /// Run a JSON-lines corpus of expected verdicts.
    Verify {
        corpus: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        json: bool,
    },
    /// The existence-asymmetry demonstration.
    Demo {
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kind {
    Inf,
    Fin,
}

#[derive(Debug, Args)]
struct SpecArgs {
    /// Whole integral as JSON, e.g. a `spec_echo` from earlier output.
    #[arg(long, conflicts_with_all = ["kind", "f", "g", "a", "beta", "z", "w", "var"])]
    spec: Option<String>,
    #[arg(long = "type", value_enum)]
    kind: Option<Kind>,
    /// Integrand of an infinite-limit integral.
    #[arg(long, allow_hyphen_values = true)]
    f: Option<String>,
    /// Integrand of a finite integral with critical point 0.
    #[arg(long, allow_hyphen_values = true)]
    g: Option<String>,
    /// Integration variable (default x for inf, u for fin).
    #[arg(long)]
    var: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    a: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Termination function: taper:c=1 | matched:omega=1,c=1 [,scale=..]
    #[arg(long)]
    z: Option<String>,
    /// Boundary taper: wfromz:<termination function>
    #[arg(long)]
    w: Option<String>,
}

impl SpecArgs {
    fn doc(&self) -> Result<SpecDoc, String> {
        if let Some(json) = &self.spec {
            return serde_json::from_str(json).map_err(|e| format!("--spec: {e}"));
        }
        let kind = self.kind.ok_or("missing --type (inf or fin) or --spec")?;
        Ok(SpecDoc {
            kind: match kind {
                Kind::Inf => "inf".into(),
                Kind::Fin => "fin".into(),
            },
            f: self.f.clone(),
            g: self.g.clone(),
            var: self.var.clone(),
            a: self.a,
            beta: self.beta,
            z: self.z.clone(),
            w: self.w.clone(),
        })
    }

    fn build(&self) -> Result<ZIntegralSpec, String> {
        let doc = self.doc()?;
        for (name, v) in [("a", doc.a), ("beta", doc.beta)] {
            if let Some(v) = v {
                if !v.is_finite() {
                    return Err(format!("--{name} must be finite, got {v}"));
                }
            }
        }
        doc.build().map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Direct,
    Bridge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AccelArg {
    Levin,
    Aitken,
}

#[derive(Debug, Args)]
struct ConfigArgs {
    /// Full evaluation configuration as JSON; flags below override it.
    #[arg(long)]
    config: Option<String>,
    /// Finite integrals: shrink δ directly or go through u = e^(-x).
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long, allow_hyphen_values = true)]
    b_start: Option<f64>,
    #[arg(long)]
    b_step: Option<f64>,
    /// Grow b geometrically by this ratio.
    #[arg(long)]
    b_ratio: Option<f64>,
    #[arg(long)]
    b_count: Option<usize>,
    #[arg(long)]
    delta_shrink: Option<f64>,
    #[arg(long)]
    delta_count: Option<usize>,
    #[arg(long)]
    delta_min: Option<f64>,
    /// Trailing samples that must agree.
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    quad_tol: Option<f64>,
    /// Per-point evaluation budget (also ZVAR_MAX_EVALS).
    #[arg(long)]
    max_evals: Option<usize>,
    #[arg(long)]
    no_accelerate: bool,
    #[arg(long, value_enum)]
    accel: Option<AccelArg>,
    /// Evaluate samples on one thread.
    #[arg(long)]
    serial: bool,
}

impl ConfigArgs {
    fn build(&self, env: &dyn Fn(&str) -> Option<String>) -> Result<EvalConfig, String> {
        let mut cfg = match &self.config {
            Some(json) => serde_json::from_str(json).map_err(|e| format!("--config: {e}"))?,
            None => EvalConfig::default(),
        };
        if let Some(raw) = env(MAX_EVALS_ENV) {
            cfg.max_evals_per_point = raw
                .trim()
                .parse()
                .map_err(|_| format!("{MAX_EVALS_ENV} must be a positive integer, got `{raw}`"))?;
        }
        let finite = |name: &str, v: Option<f64>| -> Result<Option<f64>, String> {
            match v {
                Some(x) if !x.is_finite() => Err(format!("--{name} must be finite, got {x}")),
                other => Ok(other),
            }
        };
        if let Some(m) = self.mode {
            cfg.finite_mode = match m {
                ModeArg::Direct => FiniteMode::Direct,
                ModeArg::Bridge => FiniteMode::Bridge,
            };
        }
        if let Some(v) = finite("b-start", self.b_start)? {
            cfg.b_start = Some(v);
        }
        if let Some(v) = finite("b-step", self.b_step)? {
            cfg.b_step = v;
        }
        if let Some(v) = finite("b-ratio", self.b_ratio)? {
            cfg.b_ratio = Some(v);
        }
        if let Some(v) = self.b_count {
            cfg.b_count = v;
        }
        if let Some(v) = finite("delta-shrink", self.delta_shrink)? {
            cfg.delta_shrink = v;
        }
        if let Some(v) = self.delta_count {
            cfg.delta_count = v;
        }
        if let Some(v) = finite("delta-min", self.delta_min)? {
            cfg.delta_min = v;
        }
        if let Some(v) = self.window {
            cfg.stability_window = v;
        }
        if let Some(v) = finite("tol", self.tol)? {
            cfg.tol = v;
        }
        if let Some(v) = finite("quad-tol", self.quad_tol)? {
            cfg.quad_tol = v;
        }
        if let Some(v) = self.max_evals {
            cfg.max_evals_per_point = v;
        }
        if self.no_accelerate {
            cfg.accelerate = false;
        }
        if let Some(a) = self.accel {
            cfg.accel_method = match a {
                AccelArg::Levin => AccelMethod::Levin,
                AccelArg::Aitken => AccelMethod::Aitken,
            };
        }
        if self.serial {
            cfg.parallel = false;
        }
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }
}

/// Machine-readable result of `eval`.
#[derive(Debug, Serialize)]
pub struct EvalOutput<'a> {
    pub value: f64,
    pub error_estimate: f64,
    pub status: Status,
    pub samples: &'a [Sample],
    pub evaluations: usize,
    pub accelerated: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<&'a str>,
    pub spec_echo: Option<SpecDoc>,
    pub config_echo: &'a EvalConfig,
}

impl<'a> EvalOutput<'a> {
    pub fn new(r: &'a ZResult, spec: &ZIntegralSpec, cfg: &'a EvalConfig) -> Self {
        EvalOutput {
            value: r.value,
            error_estimate: r.error_estimate,
            status: r.status,
            samples: &r.samples,
            evaluations: r.evaluations,
            accelerated: r.accelerated,
            note: r.note.as_deref(),
            spec_echo: spec.to_doc(),
            config_echo: cfg,
        }
    }
}

fn status_code(status: Status) -> i32 {
    if status == Status::Converged {
        EXIT_OK
    } else {
        EXIT_NOT_CONVERGED
    }
}

fn write_result(out: &mut dyn Write, r: &ZResult) -> std::io::Result<()> {
    writeln!(out, "status:         {}", r.status)?;
    writeln!(out, "value:          {:.12}", r.value)?;
    writeln!(out, "error estimate: {:.3e}", r.error_estimate)?;
    writeln!(out, "evaluations:    {}", r.evaluations)?;
    if r.accelerated {
        writeln!(out, "accelerated:    yes")?;
    }
    if let (Some(first), Some(last)) = (r.samples.first(), r.samples.last()) {
        writeln!(
            out,
            "samples:        {} (parameter {} to {})",
            r.samples.len(),
            first.param,
            last.param
        )?;
    }
    if let Some(note) = &r.note {
        writeln!(out, "note:           {note}")?;
    }
    Ok(())
}

fn write_spec(out: &mut dyn Write, spec: &ZIntegralSpec, json: bool) -> std::io::Result<()> {
    if json {
        match spec.to_doc() {
            Some(doc) => writeln!(out, "{}", serde_json::to_string(&doc).expect("spec docs serialize")),
            None => writeln!(out, "null"),
        }
    } else {
        match spec {
            ZIntegralSpec::Infinite(s) => {
                writeln!(out, "integrand: {}", s.integrand)?;
                writeln!(out, "variable:  {}", s.var)?;
                writeln!(out, "lower:     {}", s.lower)?;
                writeln!(out, "z:         {}", s.z)
            }
            ZIntegralSpec::Finite(s) => {
                writeln!(out, "integrand: {}", s.integrand)?;
                writeln!(out, "variable:  {}", s.var)?;
                writeln!(out, "upper:     {}", s.upper)?;
                match s.w.spec_string() {
                    Some(w) => writeln!(out, "w:         {w}"),
                    None => writeln!(out, "w:         {} (floor {})", s.w.body(), s.w.floor()),
                }
            }
        }
    }
}

/// Run the command line with the process environment.
pub fn run_cli<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    run_cli_with_env(argv, &|k| std::env::var(k).ok(), out, err)
}

/// Run the command line with an explicit environment lookup.
pub fn run_cli_with_env<I, T>(
    argv: I,
    env: &dyn Fn(&str) -> Option<String>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_ERROR
                }
            };
        }
    };
    match dispatch(cli.command, env, out) {
        Ok(code) => code,
        Err(message) => {
            let _ = writeln!(err, "error: {message}");
            EXIT_ERROR
        }
    }
}

fn dispatch(command: Command, env: &dyn Fn(&str) -> Option<String>, out: &mut dyn Write) -> Result<i32, String> {
    let io = |e: std::io::Error| format!("write failed: {e}");
    match command {
        Command::Eval {
            spec,
            config,
            print_spec,
            json,
        } => {
            let spec = spec.build()?;
            if print_spec {
                write_spec(out, &spec, json).map_err(io)?;
                return Ok(EXIT_OK);
            }
            let cfg = config.build(env)?;
            let r = evaluate(&spec, &cfg).map_err(|e| e.to_string())?;
            if json {
                let doc = EvalOutput::new(&r, &spec, &cfg);
                writeln!(out, "{}", serde_json::to_string(&doc).expect("results serialize")).map_err(io)?;
            } else {
                write_result(out, &r).map_err(io)?;
            }
            Ok(status_code(r.status))
        }
        Command::Transform {
            spec,
            cov,
            allow_inconclusive,
            print_spec,
            compare_tol,
            config,
            json,
        } => {
            let spec = spec.build()?;
            let cov = ChangeOfVariable::from_spec_string(&cov, &spec).map_err(|e| e.to_string())?;
            let report = validate_cov(&cov).map_err(|e| e.to_string())?;
            let transformed = apply_cov(&spec, &cov, allow_inconclusive).map_err(|e| e.to_string())?;
            if print_spec {
                write_spec(out, &transformed, json).map_err(io)?;
                return Ok(EXIT_OK);
            }
            if !(compare_tol > 0.0 && compare_tol.is_finite()) {
                return Err(format!("--compare-tol must be positive, got {compare_tol}"));
            }
            let cfg = config.build(env)?;
            let left = evaluate(&spec, &cfg).map_err(|e| e.to_string())?;
            let right = evaluate(&transformed, &cfg).map_err(|e| e.to_string())?;
            let verdict = verdict_for(&left, &right, compare_tol);
            if json {
                #[derive(Serialize)]
                struct TransformOutput<'a> {
                    verdict: Verdict,
                    validity: String,
                    original: EvalOutput<'a>,
                    transformed: EvalOutput<'a>,
                }
                let doc = TransformOutput {
                    verdict,
                    validity: report.verdict.to_string(),
                    original: EvalOutput::new(&left, &spec, &cfg),
                    transformed: EvalOutput::new(&right, &transformed, &cfg),
                };
                writeln!(out, "{}", serde_json::to_string(&doc).expect("results serialize")).map_err(io)?;
            } else {
                writeln!(out, "transform: {cov}  [{}]", report.verdict).map_err(io)?;
                writeln!(out, "\noriginal: {spec}").map_err(io)?;
                write_result(out, &left).map_err(io)?;
                writeln!(out, "\ntransformed: {transformed}").map_err(io)?;
                write_result(out, &right).map_err(io)?;
                writeln!(out, "\nverdict: {verdict}").map_err(io)?;
            }
            Ok(if verdict == Verdict::EqualWithinTol {
                EXIT_OK
            } else {
                EXIT_NOT_CONVERGED
            })
        }
        Command::Verify { corpus, config, json } => {
            let cfg = config.build(env)?;
            let cases = load_corpus(&corpus).map_err(|e| e.to_string())?;
            let report = run_suite(&cases, &cfg).map_err(|e| e.to_string())?;
            if json {
                writeln!(out, "{}", serde_json::to_string(&report).expect("reports serialize")).map_err(io)?;
            } else {
                writeln!(out, "{report}").map_err(io)?;
            }
            Ok(if report.passed { EXIT_OK } else { EXIT_NOT_CONVERGED })
        }
        Command::Demo { json } => {
            let report = demo_existence_asymmetry();
            if json {
                writeln!(out, "{}", serde_json::to_string(&report).expect("reports serialize")).map_err(io)?;
            } else {
                write!(out, "{report}").map_err(io)?;
            }
            Ok(if report.as_expected() {
                EXIT_OK
            } else {
                EXIT_NOT_CONVERGED
            })
        }
    }
}
