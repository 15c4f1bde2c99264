//! Numerical evaluation of Z-integrals as limits of bracket sequences.
//!
//! For an infinite limit the bracket is
//! `F(b) = ∫_a^b f + ∫_0^c f(b+s) z(s) ds`, sampled along an increasing
//! sequence of `b`. For a critical lower limit at 0 it is
//! `G(δ) = ∫_{v₀δ}^δ g(u) w(u/δ) du + ∫_δ^β g`, sampled along `δ = β ρ^k`.
//! Both windows are integrated in a local variable so that precision does
//! not degrade as `b` grows or `δ` shrinks.

mod accel;
mod classify;

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use accel::{iterated_aitken, levin_u};
pub use classify::{classify_sequence, swings, SWING_BAND};

use crate::cov::{bridge_transform, CovError};
use crate::expr::EvalError;
use crate::integral::{FiniteSpec, InfiniteSpec, ZIntegralSpec};
use crate::quad::{integrate, QuadError, QuadOptions, QuadResult};

/// Highest Levin order tried; lower orders are tried as well.
const LEVIN_ORDER: usize = 6;
const AITKEN_PASSES: usize = 2;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ZError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("need at least {need} samples, have {have}")]
    TooFewSamples { have: usize, need: usize },
    #[error("bridge mode needs a boundary taper built from a termination function")]
    BridgeUnavailable,
    #[error("bridge transform: {0}")]
    Bridge(#[from] CovError),
    #[error("integrand: {0}")]
    Integrand(#[from] EvalError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    Oscillatory,
    Drifting,
    QuadFailure,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::Oscillatory => "oscillatory",
            Status::Drifting => "drifting",
            Status::QuadFailure => "quad_failure",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FiniteMode {
    /// Shrink `δ` directly in the original variable.
    #[default]
    Direct,
    /// Rewrite through `u = e^(−x)` and evaluate as an infinite limit.
    Bridge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccelMethod {
    #[default]
    Levin,
    Aitken,
}

/// Sampling, tolerance and budget settings shared by both evaluators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// First `b`; defaults to the lower limit (or 1 for a geometric
    /// schedule starting at or below 0).
    pub b_start: Option<f64>,
    /// Arithmetic step `Δ` between successive `b`.
    pub b_step: f64,
    /// When set, `b` grows geometrically by this ratio instead.
    pub b_ratio: Option<f64>,
    pub b_count: usize,
    /// `ρ` in `δ_k = β ρ^k`.
    pub delta_shrink: f64,
    pub delta_count: usize,
    /// Direct mode stops before `δ` falls below this.
    pub delta_min: f64,
    /// Number of trailing samples `m` that must agree for convergence.
    pub stability_window: usize,
    pub tol: f64,
    /// Absolute tolerance of each inner integral.
    pub quad_tol: f64,
    /// Inner tolerance relative to `∫|integrand|`, for windows where the
    /// integrand is large and rounding dominates.
    pub quad_rel_tol: f64,
    /// Evaluation budget of each inner integral.
    pub max_evals_per_point: usize,
    pub accelerate: bool,
    pub accel_method: AccelMethod,
    pub finite_mode: FiniteMode,
    /// Compute samples on the rayon pool. Results do not depend on this.
    pub parallel: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            b_start: None,
            b_step: 0.7,
            b_ratio: None,
            b_count: 16,
            delta_shrink: 0.5,
            delta_count: 17,
            delta_min: 1e-8,
            stability_window: 4,
            tol: 1e-7,
            quad_tol: 1e-10,
            quad_rel_tol: 1e-13,
            max_evals_per_point: 10_000_000,
            accelerate: true,
            accel_method: AccelMethod::Levin,
            finite_mode: FiniteMode::Direct,
            parallel: true,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<(), ZError> {
        let bad = |msg: String| Err(ZError::InvalidConfig(msg));
        let m = self.stability_window;
        if m < 3 {
            return bad(format!("stability_window must be at least 3, got {m}"));
        }
        if self.b_count < m || self.delta_count < m {
            return bad(format!(
                "b_count ({}) and delta_count ({}) must be at least stability_window ({m})",
                self.b_count, self.delta_count
            ));
        }
        if !(self.b_step > 0.0 && self.b_step.is_finite()) {
            return bad(format!("b_step must be positive, got {}", self.b_step));
        }
        if let Some(r) = self.b_ratio {
            if !(r > 1.0 && r.is_finite()) {
                return bad(format!("b_ratio must exceed 1, got {r}"));
            }
        }
        if let Some(b) = self.b_start {
            if !b.is_finite() {
                return bad(format!("b_start must be finite, got {b}"));
            }
        }
        if !(self.delta_shrink > 0.0 && self.delta_shrink < 1.0) {
            return bad(format!("delta_shrink must lie in (0, 1), got {}", self.delta_shrink));
        }
        if !(self.delta_min > 0.0 && self.delta_min.is_finite()) {
            return bad(format!("delta_min must be positive, got {}", self.delta_min));
        }
        if !(self.quad_tol > 0.0 && self.quad_tol.is_finite()) {
            return bad(format!("quad_tol must be positive, got {}", self.quad_tol));
        }
        if !(self.quad_rel_tol >= 0.0 && self.quad_rel_tol < 1.0) {
            return bad(format!("quad_rel_tol must lie in [0, 1), got {}", self.quad_rel_tol));
        }
        if !(self.tol > self.quad_tol && self.tol.is_finite()) {
            return bad(format!("tol ({}) must exceed quad_tol ({})", self.tol, self.quad_tol));
        }
        if self.max_evals_per_point < 21 {
            return bad(format!(
                "max_evals_per_point must be at least 21, got {}",
                self.max_evals_per_point
            ));
        }
        Ok(())
    }

    fn quad_options(&self) -> QuadOptions {
        QuadOptions {
            abs_tol: self.quad_tol,
            rel_l1_tol: self.quad_rel_tol,
            max_evals: self.max_evals_per_point,
            open_endpoints: true,
        }
    }

    /// The `b` values for an infinite integral with lower limit `a`, and
    /// the index shift used by the Levin transform.
    fn b_schedule(&self, a: f64) -> Result<(Vec<f64>, f64), ZError> {
        let k = self.b_count;
        match self.b_ratio {
            None => {
                let start = self.b_start.unwrap_or(a);
                if start < a {
                    return Err(ZError::InvalidConfig(format!(
                        "b_start ({start}) lies below the lower limit ({a})"
                    )));
                }
                let bs = (0..k).map(|i| start + i as f64 * self.b_step).collect();
                let beta = if start > 0.0 { start / self.b_step } else { 1.0 };
                Ok((bs, beta))
            }
            Some(r) => {
                let start = self.b_start.unwrap_or(if a > 0.0 { a } else { 1.0 });
                if start < a || start <= 0.0 {
                    return Err(ZError::InvalidConfig(format!(
                        "geometric b_start ({start}) must be positive and at least the lower limit ({a})"
                    )));
                }
                let bs: Vec<f64> = (0..k).map(|i| start * r.powi(i as i32)).collect();
                if let Some(bad) = bs.iter().find(|b| !b.is_finite()) {
                    return Err(ZError::InvalidConfig(format!("b schedule overflows ({bad})")));
                }
                Ok((bs, 1.0))
            }
        }
    }
}

/// One point of the bracket sequence; serialized as `[param, value]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "(f64, f64)", from = "(f64, f64)")]
pub struct Sample {
    /// `b` or `δ`.
    pub param: f64,
    pub value: f64,
}

impl From<Sample> for (f64, f64) {
    fn from(s: Sample) -> Self {
        (s.param, s.value)
    }
}

impl From<(f64, f64)> for Sample {
    fn from((param, value): (f64, f64)) -> Self {
        Sample { param, value }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZResult {
    /// Last bracket value, or the accelerated estimate when acceleration
    /// produced convergence. `NaN` when no sample could be computed.
    pub value: f64,
    pub error_estimate: f64,
    pub status: Status,
    pub samples: Vec<Sample>,
    pub evaluations: usize,
    pub accelerated: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Evaluate either kind of Z-integral; finite ones use `cfg.finite_mode`.
pub fn evaluate(spec: &ZIntegralSpec, cfg: &EvalConfig) -> Result<ZResult, ZError> {
    match spec {
        ZIntegralSpec::Infinite(s) => eval_infinite(s, cfg),
        ZIntegralSpec::Finite(s) => eval_finite(s, cfg, cfg.finite_mode),
    }
}

struct PointIntegrals {
    piece: QuadResult,
    window: QuadResult,
}

impl PointIntegrals {
    fn converged(&self) -> bool {
        self.piece.converged && self.window.converged
    }
}

/// Compute the integrals for points `0..n` in order, in batches of one per
/// worker thread, stopping after the batch in which the first fault or
/// unconverged integral appears. Later points would be discarded anyway,
/// and they are the expensive ones.
fn map_points<F>(n: usize, parallel: bool, f: F) -> Vec<Result<PointIntegrals, QuadError>>
where
    F: Fn(usize) -> Result<PointIntegrals, QuadError> + Sync + Send,
{
    let batch = if parallel {
        rayon::current_num_threads().max(1)
    } else {
        1
    };
    let mut out = Vec::with_capacity(n);
    let mut start = 0;
    while start < n {
        let end = (start + batch).min(n);
        let chunk: Vec<_> = if parallel {
            (start..end).into_par_iter().map(&f).collect()
        } else {
            (start..end).map(&f).collect()
        };
        let stop = chunk.iter().any(|p| !p.as_ref().is_ok_and(PointIntegrals::converged));
        out.extend(chunk);
        if stop {
            break;
        }
        start = end;
    }
    out
}

fn zero_integral() -> QuadResult {
    QuadResult {
        value: 0.0,
        error_estimate: 0.0,
        evaluations: 0,
        converged: true,
        l1_norm: 0.0,
        panels: 0,
    }
}

/// `∫_a^∞ f` through the termination function of `spec`.
pub fn eval_infinite(spec: &InfiniteSpec, cfg: &EvalConfig) -> Result<ZResult, ZError> {
    cfg.validate()?;
    let (bs, beta) = cfg.b_schedule(spec.lower)?;
    let f = spec.integrand.compile(&[spec.var.as_str()])?;
    let z = &spec.z;
    let c = z.width();
    let opts = cfg.quad_options();
    let a = spec.lower;

    let points = map_points(bs.len(), cfg.parallel, |k| {
        let (lo, hi) = if k == 0 { (a, bs[0]) } else { (bs[k - 1], bs[k]) };
        let piece = if hi > lo {
            integrate(|x| f.eval1(x), lo, hi, &opts)?
        } else {
            zero_integral()
        };
        let b = bs[k];
        let window = integrate(
            |s| {
                let zs = z.eval(s)?;
                Ok(if zs == 0.0 { 0.0 } else { f.eval1(b + s)? * zs })
            },
            0.0,
            c,
            &opts,
        )?;
        Ok(PointIntegrals { piece, window })
    });

    let mut acc = Accumulator::default();
    for (k, point) in points.into_iter().enumerate() {
        match point {
            Ok(p) => {
                acc.evaluations += p.piece.evaluations + p.window.evaluations;
                if let Some(why) = unconverged(&p, bs[k]) {
                    acc.failure = Some(why);
                    break;
                }
                acc.push(bs[k], p);
            }
            Err(e) => {
                acc.failure = Some(format!("at b = {}: {e}", bs[k]));
                break;
            }
        }
    }
    Ok(acc.finish(cfg, beta))
}

fn unconverged(p: &PointIntegrals, param: f64) -> Option<String> {
    for (what, q) in [("prefix piece", &p.piece), ("window", &p.window)] {
        if !q.converged {
            return Some(format!(
                "{what} at {param} did not reach tolerance within {} evaluations (error estimate {:e})",
                q.evaluations, q.error_estimate
            ));
        }
    }
    None
}

/// `∫_0^β g` through the boundary taper of `spec`.
pub fn eval_finite(spec: &FiniteSpec, cfg: &EvalConfig, mode: FiniteMode) -> Result<ZResult, ZError> {
    cfg.validate()?;
    match mode {
        FiniteMode::Direct => eval_finite_direct(spec, cfg),
        FiniteMode::Bridge => {
            if spec.w.origin().is_none() {
                return Err(ZError::BridgeUnavailable);
            }
            match bridge_transform(&spec.clone().into(), 1.0, 1.0)? {
                ZIntegralSpec::Infinite(inf) => eval_infinite(&inf, cfg),
                ZIntegralSpec::Finite(_) => unreachable!("bridge of a finite integral is infinite"),
            }
        }
    }
}

fn eval_finite_direct(spec: &FiniteSpec, cfg: &EvalConfig) -> Result<ZResult, ZError> {
    let g = spec.integrand.compile(&[spec.var.as_str()])?;
    let w = &spec.w;
    let floor = w.floor();
    let beta = spec.upper;
    let deltas: Vec<f64> = (0..cfg.delta_count)
        .map(|k| beta * cfg.delta_shrink.powi(k as i32))
        .take_while(|&d| d >= cfg.delta_min)
        .collect();
    let opts = cfg.quad_options();

    let points = map_points(deltas.len(), cfg.parallel, |k| {
        let delta = deltas[k];
        let piece = if k == 0 {
            zero_integral()
        } else {
            integrate(|u| g.eval1(u), delta, deltas[k - 1], &opts)?
        };
        // head in the local variable v = u/δ
        let window = integrate(
            |v| {
                let wv = w.eval(v)?;
                Ok(if wv == 0.0 {
                    0.0
                } else {
                    g.eval1(delta * v)? * wv * delta
                })
            },
            floor,
            1.0,
            &opts,
        )?;
        Ok(PointIntegrals { piece, window })
    });

    let mut acc = Accumulator::default();
    for (k, point) in points.into_iter().enumerate() {
        match point {
            Ok(p) => {
                acc.evaluations += p.piece.evaluations + p.window.evaluations;
                if let Some(why) = unconverged(&p, deltas[k]) {
                    // the sequence stops where the per-point cost runs out
                    acc.truncated = Some(why);
                    break;
                }
                acc.push(deltas[k], p);
            }
            Err(e) => {
                acc.failure = Some(format!("at δ = {}: {e}", deltas[k]));
                break;
            }
        }
    }
    if acc.failure.is_none() && acc.samples.len() < cfg.stability_window {
        acc.failure = Some(format!(
            "only {} samples before {}",
            acc.samples.len(),
            acc.truncated
                .clone()
                .unwrap_or_else(|| format!("δ fell below delta_min = {}", cfg.delta_min))
        ));
    }
    Ok(acc.finish(cfg, 1.0))
}

#[derive(Default)]
struct Accumulator {
    prefix: f64,
    prefix_comp: f64,
    prefix_err: f64,
    samples: Vec<Sample>,
    quad_errors: Vec<f64>,
    evaluations: usize,
    failure: Option<String>,
    truncated: Option<String>,
}

impl Accumulator {
    fn push(&mut self, param: f64, p: PointIntegrals) {
        // Neumaier summation of the running prefix
        let x = p.piece.value;
        let t = self.prefix + x;
        if self.prefix.abs() >= x.abs() {
            self.prefix_comp += (self.prefix - t) + x;
        } else {
            self.prefix_comp += (x - t) + self.prefix;
        }
        self.prefix = t;
        self.prefix_err += p.piece.error_estimate;
        self.samples.push(Sample {
            param,
            value: self.prefix + self.prefix_comp + p.window.value,
        });
        self.quad_errors.push(self.prefix_err + p.window.error_estimate);
    }

    fn finish(self, cfg: &EvalConfig, levin_beta: f64) -> ZResult {
        let last_err = self.quad_errors.last().copied().unwrap_or(f64::INFINITY);
        let last_value = self.samples.last().map_or(f64::NAN, |s| s.value);
        let note = self.failure.clone().or(self.truncated.clone());
        if let Some(why) = self.failure {
            return ZResult {
                value: last_value,
                error_estimate: last_err,
                status: Status::QuadFailure,
                samples: self.samples,
                evaluations: self.evaluations,
                accelerated: false,
                note: Some(why),
            };
        }
        let values: Vec<f64> = self.samples.iter().map(|s| s.value).collect();
        let m = cfg.stability_window;
        let status = classify_sequence(&values, m, cfg.tol).expect("sample count checked above");
        let tail_spread = classify::spread(&values[values.len() - m..]);
        let mut result = ZResult {
            value: last_value,
            error_estimate: tail_spread + last_err,
            status,
            samples: self.samples,
            evaluations: self.evaluations,
            accelerated: false,
            note,
        };
        if status == Status::Drifting && cfg.accelerate {
            if let Some((value, spread)) = accelerate(&values, cfg, levin_beta) {
                result.value = value;
                result.error_estimate = spread + last_err;
                result.status = Status::Converged;
                result.accelerated = true;
            }
        }
        result
    }
}

/// Accelerated limit estimate, accepted only when the last
/// `stability_window` accelerated values agree within `tol`.
fn accelerate(values: &[f64], cfg: &EvalConfig, levin_beta: f64) -> Option<(f64, f64)> {
    let m = cfg.stability_window;
    let tail: Vec<f64> = match cfg.accel_method {
        AccelMethod::Levin => {
            // each estimate uses order + 2 samples; keep m estimates and
            // take the order whose estimates agree best
            let max_order = LEVIN_ORDER.min(values.len().checked_sub(m + 1)?);
            (2..=max_order)
                .filter_map(|order| {
                    let acc = levin_u(values, order, levin_beta);
                    acc[acc.len() - m..].iter().copied().collect::<Option<Vec<f64>>>()
                })
                .min_by(|a, b| classify::spread(a).total_cmp(&classify::spread(b)))?
        }
        AccelMethod::Aitken => {
            let passes = AITKEN_PASSES.min((values.len().saturating_sub(m)) / 2);
            if passes == 0 {
                return None;
            }
            let acc = iterated_aitken(values, passes);
            acc[acc.len() - m..].to_vec()
        }
    };
    if tail.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let spread = classify::spread(&tail);
    (spread <= cfg.tol).then(|| (*tail.last().expect("m >= 3"), spread))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inf(f: &str, a: f64, z: &str) -> InfiniteSpec {
        match ZIntegralSpec::infinite(f, "x", a, z).unwrap() {
            ZIntegralSpec::Infinite(s) => s,
            _ => unreachable!(),
        }
    }

    fn fin(g: &str, beta: f64, w: &str) -> FiniteSpec {
        match ZIntegralSpec::finite(g, "u", beta, w).unwrap() {
            ZIntegralSpec::Finite(s) => s,
            _ => unreachable!(),
        }
    }

    #[test]
    fn inverse_square() {
        let cfg = EvalConfig {
            b_step: 1.0,
            b_count: 30,
            ..EvalConfig::default()
        };
        let r = eval_infinite(&inf("x^-2", 1.0, "taper:c=1"), &cfg).unwrap();
        assert_eq!(r.status, Status::Converged, "{r:?}");
        assert!((r.value - 1.0).abs() < 1e-6, "{}", r.value);
        let r = eval_infinite(&inf("x^-2", 1.0, "taper:c=1"), &EvalConfig::default()).unwrap();
        assert_eq!(r.status, Status::Converged);
        assert!((r.value - 1.0).abs() < 1e-6, "{}", r.value);
    }

    #[test]
    fn sine_with_matched_taper() {
        let r = eval_infinite(&inf("sin(x)", 0.0, "matched:omega=1,c=1"), &EvalConfig::default()).unwrap();
        assert_eq!(r.status, Status::Converged);
        assert!(!r.accelerated);
        assert!((r.value - 1.0).abs() < 1e-8, "{}", r.value);
        for s in &r.samples {
            assert!((s.value - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn sine_with_plain_taper_oscillates() {
        let r = eval_infinite(&inf("sin(x)", 0.0, "taper:c=1"), &EvalConfig::default()).unwrap();
        assert_eq!(r.status, Status::Oscillatory, "{:?}", r.samples);
    }

    #[test]
    fn root_singularity_direct() {
        let r = eval_finite(
            &fin("u^(-1/2)", 1.0, "wfromz:taper:c=1"),
            &EvalConfig::default(),
            FiniteMode::Direct,
        )
        .unwrap();
        assert_eq!(r.status, Status::Converged, "{r:?}");
        assert!((r.value - 2.0).abs() < 1e-6, "{}", r.value);
    }

    #[test]
    fn oscillating_singularity_bridge() {
        let r = eval_finite(
            &fin("sin(1/u)/u^2", 1.0, "wfromz:taper:c=1"),
            &EvalConfig::default(),
            FiniteMode::Bridge,
        )
        .unwrap();
        assert_eq!(r.status, Status::Converged, "{r:?}");
        assert!((r.value - 1f64.cos()).abs() < 1e-5, "{}", r.value);
    }

    #[test]
    fn log_divergence_drifts() {
        let r = eval_finite(
            &fin("1/u", 1.0, "wfromz:taper:c=1"),
            &EvalConfig::default(),
            FiniteMode::Direct,
        )
        .unwrap();
        assert_eq!(r.status, Status::Drifting);
        assert!(!r.accelerated);
    }

    #[test]
    fn bridge_needs_origin() {
        let w = crate::taper::BoundaryTaper::custom(crate::expr::Expr::var("v"), 0.0).unwrap();
        let spec = FiniteSpec::new(crate::expr::Expr::var("u"), "u", 1.0, w).unwrap();
        assert_eq!(
            eval_finite(&spec, &EvalConfig::default(), FiniteMode::Bridge).unwrap_err(),
            ZError::BridgeUnavailable
        );
    }

    #[test]
    fn geometric_schedule_for_log_tails() {
        let spec = match ZIntegralSpec::infinite("1/(y*ln(y)^2)", "y", std::f64::consts::E, "taper:c=1").unwrap() {
            ZIntegralSpec::Infinite(s) => s,
            _ => unreachable!(),
        };
        let cfg = EvalConfig {
            b_ratio: Some(10.0),
            ..EvalConfig::default()
        };
        let r = eval_infinite(&spec, &cfg).unwrap();
        assert_eq!(r.status, Status::Converged, "{r:?}");
        assert!((r.value - 1.0).abs() < 1e-6, "{}", r.value);
    }

    #[test]
    fn budget_exhaustion_is_quad_failure() {
        let cfg = EvalConfig {
            max_evals_per_point: 100,
            ..EvalConfig::default()
        };
        let r = eval_infinite(&inf("exp(x)*sin(exp(x))", 0.0, "taper:c=1"), &cfg).unwrap();
        assert_eq!(r.status, Status::QuadFailure);
        assert!(r.note.is_some());
    }

    #[test]
    fn domain_fault_is_quad_failure() {
        let r = eval_infinite(&inf("1/(x-3)", 0.0, "taper:c=1"), &EvalConfig::default()).unwrap();
        assert_eq!(r.status, Status::QuadFailure);
    }

    #[test]
    fn config_invariants() {
        let bad = [
            EvalConfig {
                stability_window: 2,
                ..EvalConfig::default()
            },
            EvalConfig {
                b_count: 3,
                ..EvalConfig::default()
            },
            EvalConfig {
                tol: 1e-12,
                ..EvalConfig::default()
            },
            EvalConfig {
                delta_shrink: 1.0,
                ..EvalConfig::default()
            },
            EvalConfig {
                b_step: 0.0,
                ..EvalConfig::default()
            },
            EvalConfig {
                b_ratio: Some(1.0),
                ..EvalConfig::default()
            },
        ];
        for cfg in bad {
            assert!(matches!(cfg.validate(), Err(ZError::InvalidConfig(_))), "{cfg:?}");
        }
        let cfg = EvalConfig {
            b_start: Some(0.0),
            ..EvalConfig::default()
        };
        assert!(eval_infinite(&inf("x^-2", 1.0, "taper"), &cfg).is_err());
    }

    #[test]
    fn serial_and_parallel_agree() {
        let spec = inf("sin(x)/x", 1.0, "taper:c=1");
        let a = eval_infinite(&spec, &EvalConfig::default()).unwrap();
        let b = eval_infinite(
            &spec,
            &EvalConfig {
                parallel: false,
                ..EvalConfig::default()
            },
        )
        .unwrap();
        assert_eq!(a, b);
    }
}
