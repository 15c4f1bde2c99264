//! Termination functions `z(s)` on `[0, c]` and boundary tapers `w(v)` on
//! `[0, 1]`.
//!
//! A termination function multiplies the integrand over the terminal window
//! `[b, b + c]` of an infinite-limit integral; a boundary taper multiplies it
//! over the head `[0, δ]` of a finite integral with a critical lower limit.
//! Admissible termination functions are bounded and continuous with
//! `z(0) = 1` and `z(c) = 0`.

use std::fmt;
use std::sync::Arc;

use crate::expr::{CompiledExpr, EvalError, Expr, UnaryOp};
use crate::quad::{integrate, QuadError, QuadOptions};
use crate::spec_string::{num, SpecString, SpecStringError};

/// Sup-norm bound enforced on every constructed termination function.
///
/// Moment-matched functions for low tones carry large coefficients
/// (`max|z|` is about 70 for ω = 1 and about 310 for ω = 1/2 with c = 1).
pub const MAX_ABS: f64 = 1e3;

/// Endpoint tolerance for `z(0) = 1`, `z(c) = 0` and `w(1) = 1`.
pub const ENDPOINT_TOL: f64 = 1e-12;

/// Absolute tolerance of the moment integrals.
pub const MOMENT_TOL: f64 = 1e-13;

/// Largest acceptable condition estimate of the moment system.
pub const MAX_CONDITION: f64 = 1e8;

const CONTINUITY_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TaperError {
    #[error("parameter `{name}` must be positive and finite, got {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error(
        "moment system for omega={omega}, c={width} is near-singular (condition estimate {condition:.3e}); choose a different c"
    )]
    IllConditioned { omega: f64, width: f64, condition: f64 },
    #[error("termination function violates `{check}`: {detail}")]
    Invariant { check: &'static str, detail: String },
    #[error("moment quadrature failed: {0}")]
    Quad(#[from] QuadError),
    #[error("evaluation failed: {0}")]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Spec(#[from] SpecStringError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TaperKind {
    /// Reflected quintic smoothstep.
    SmoothTaper,
    /// Smooth taper times `1 + a1 sin(2πs/c) + a2 sin(4πs/c)` with the
    /// coefficients solving the two moment conditions at `omega`.
    MatchedTrig { omega: f64, coefficients: [f64; 2] },
}

/// `z(s)` on `[0, width]`.
#[derive(Debug, Clone)]
pub struct TerminationFunction {
    body: Expr,
    width: f64,
    kind: TaperKind,
    /// `1` for constructed functions; `z(s) = base(scale * s)` otherwise.
    scale: f64,
    program: Arc<CompiledExpr>,
}

impl PartialEq for TerminationFunction {
    fn eq(&self, other: &Self) -> bool {
        self.body == other.body && self.width == other.width && self.kind == other.kind && self.scale == other.scale
    }
}

fn positive(name: &'static str, value: f64) -> Result<f64, TaperError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(TaperError::InvalidParameter { name, value })
    }
}

fn quintic_taper(width: f64) -> Expr {
    let t = if width == 1.0 {
        Expr::var("s")
    } else {
        Expr::var("s").div(Expr::Const(width))
    };
    let c = Expr::Const;
    let poly = c(10.0)
        .mul(t.clone().pow(c(3.0)))
        .sub(c(15.0).mul(t.clone().pow(c(4.0))))
        .add(c(6.0).mul(t.pow(c(5.0))));
    c(1.0).sub(poly)
}

fn sine_mode(k: f64, width: f64) -> Expr {
    Expr::Const(k * 2.0 * std::f64::consts::PI / width)
        .mul(Expr::var("s"))
        .apply(UnaryOp::Sin)
}

impl TerminationFunction {
    fn from_parts(body: Expr, width: f64, kind: TaperKind, scale: f64) -> Result<Self, TaperError> {
        let program = Arc::new(body.compile(&["s"])?);
        Ok(TerminationFunction {
            body,
            width,
            kind,
            scale,
            program,
        })
    }

    pub fn body(&self) -> &Expr {
        &self.body
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn kind(&self) -> TaperKind {
        self.kind
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    #[inline]
    pub fn eval(&self, s: f64) -> Result<f64, EvalError> {
        self.program.eval1(s)
    }

    /// `s ↦ z(factor · s)` on `[0, width / factor]`.
    pub fn rescaled(&self, factor: f64) -> Result<TerminationFunction, TaperError> {
        positive("factor", factor)?;
        if factor == 1.0 {
            return Ok(self.clone());
        }
        let body = self.body.substitute("s", &Expr::Const(factor).mul(Expr::var("s")));
        TerminationFunction::from_parts(body, self.width / factor, self.kind, self.scale * factor)
    }

    /// Check endpoint values, the sup-norm bound and continuity on a dense
    /// sample.
    pub fn validate(&self) -> Result<(), TaperError> {
        let z0 = self.eval(0.0)?;
        if (z0 - 1.0).abs() > ENDPOINT_TOL {
            return Err(TaperError::Invariant {
                check: "z(0) = 1",
                detail: format!("z(0) = {z0}"),
            });
        }
        let zc = self.eval(self.width)?;
        if zc.abs() > ENDPOINT_TOL {
            return Err(TaperError::Invariant {
                check: "z(c) = 0",
                detail: format!("z(c) = {zc}"),
            });
        }
        let h = self.width / CONTINUITY_SAMPLES as f64;
        let values = (0..=CONTINUITY_SAMPLES)
            .map(|i| self.eval(i as f64 * h))
            .collect::<Result<Vec<_>, _>>()?;
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| v.abs() > MAX_ABS) {
            return Err(TaperError::Invariant {
                check: "bounded",
                detail: format!("|z({})| = {} exceeds {MAX_ABS}", i as f64 * h, v.abs()),
            });
        }
        // a jump shows up as one difference far larger than its neighbours
        let diffs: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        for i in 0..diffs.len() {
            let before = if i > 0 { diffs[i - 1] } else { 0.0 };
            let after = diffs.get(i + 1).copied().unwrap_or(0.0);
            let local = before.max(after) + 1e-6 * values[i].abs().max(1.0);
            if diffs[i] > 10.0 * local {
                return Err(TaperError::Invariant {
                    check: "continuous",
                    detail: format!("jump of {} near s = {}", diffs[i], i as f64 * h),
                });
            }
        }
        Ok(())
    }

    /// Spec string that rebuilds this function.
    pub fn spec_string(&self) -> String {
        let width = self.width * self.scale;
        let mut out = match self.kind {
            TaperKind::SmoothTaper => format!("taper:c={}", num(width)),
            TaperKind::MatchedTrig { omega, .. } => format!("matched:omega={},c={}", num(omega), num(width)),
        };
        if self.scale != 1.0 {
            out.push_str(&format!(",scale={}", num(self.scale)));
        }
        out
    }

    /// Parse `taper:c=..`, `matched:omega=..,c=..`; an optional `scale=..`
    /// rescales the result.
    pub fn from_spec_string(text: &str) -> Result<TerminationFunction, TaperError> {
        let spec = SpecString::parse(text)?;
        let z = match spec.kind.as_str() {
            "taper" => {
                spec.expect_keys(&["c", "scale"])?;
                make_smooth_taper(spec.number_or("c", Some(1.0))?)?
            }
            "matched" => {
                spec.expect_keys(&["omega", "c", "scale"])?;
                make_matched_trig(spec.number("omega")?, spec.number_or("c", Some(1.0))?)?
            }
            other => return Err(SpecStringError::UnknownKind(other.to_string()).into()),
        };
        z.rescaled(spec.number_or("scale", Some(1.0))?)
    }
}

impl fmt::Display for TerminationFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.spec_string())
    }
}

/// Quintic smoothstep reflected onto `[0, c]`: `1 - (10t³ - 15t⁴ + 6t⁵)`
/// with `t = s/c`; first and second derivatives vanish at both ends.
pub fn make_smooth_taper(c: f64) -> Result<TerminationFunction, TaperError> {
    positive("c", c)?;
    TerminationFunction::from_parts(quintic_taper(c), c, TaperKind::SmoothTaper, 1.0)
}

fn moment_options() -> QuadOptions {
    QuadOptions {
        abs_tol: MOMENT_TOL,
        rel_l1_tol: 0.0,
        max_evals: 1_000_000,
        open_endpoints: false,
    }
}

/// `(∫₀^c cos(ωs) h(s) ds, ∫₀^c sin(ωs) h(s) ds)`.
fn trig_moments<F>(h: F, omega: f64, width: f64) -> Result<(f64, f64), TaperError>
where
    F: Fn(f64) -> Result<f64, EvalError>,
{
    let opts = moment_options();
    let cos = integrate(|s| Ok((omega * s).cos() * h(s)?), 0.0, width, &opts)?;
    let sin = integrate(|s| Ok((omega * s).sin() * h(s)?), 0.0, width, &opts)?;
    Ok((cos.value, sin.value))
}

fn condition_2x2(m: [[f64; 2]; 2]) -> f64 {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let norm = |a: [[f64; 2]; 2]| (a[0][0].abs() + a[1][0].abs()).max(a[0][1].abs() + a[1][1].abs());
    if det == 0.0 {
        return f64::INFINITY;
    }
    let inverse = [[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]];
    norm(m) * norm(inverse)
}

/// Termination function whose trig moments at `omega` are
/// `∫ cos(ωs) z = 0` and `∫ sin(ωs) z = 1/ω`, which makes the infinite-limit
/// bracket of `sin(ωx)` independent of `b`.
pub fn make_matched_trig(omega: f64, c: f64) -> Result<TerminationFunction, TaperError> {
    positive("omega", omega)?;
    positive("c", c)?;
    let taper = quintic_taper(c).compile(&["s"])?;
    let mode = |k: f64| move |s: f64| (k * 2.0 * std::f64::consts::PI * s / c).sin();

    let (c0, s0) = trig_moments(|s| taper.eval1(s), omega, c)?;
    let (c1, s1) = trig_moments(|s| Ok(taper.eval1(s)? * mode(1.0)(s)), omega, c)?;
    let (c2, s2) = trig_moments(|s| Ok(taper.eval1(s)? * mode(2.0)(s)), omega, c)?;

    let system = [[c1, c2], [s1, s2]];
    let condition = condition_2x2(system);
    if condition.is_nan() || condition > MAX_CONDITION {
        return Err(TaperError::IllConditioned {
            omega,
            width: c,
            condition,
        });
    }
    let rhs = [-c0, 1.0 / omega - s0];
    let det = c1 * s2 - c2 * s1;
    let a1 = (rhs[0] * s2 - c2 * rhs[1]) / det;
    let a2 = (c1 * rhs[1] - s1 * rhs[0]) / det;

    let modulation = Expr::Const(1.0)
        .add(Expr::Const(a1).mul(sine_mode(1.0, c)))
        .add(Expr::Const(a2).mul(sine_mode(2.0, c)));
    let body = quintic_taper(c).mul(modulation);
    let z = TerminationFunction::from_parts(
        body,
        c,
        TaperKind::MatchedTrig {
            omega,
            coefficients: [a1, a2],
        },
        1.0,
    )?;
    z.validate()?;
    Ok(z)
}

/// `(∫₀^c cos(ωs) z(s) ds, ∫₀^c sin(ωs) z(s) ds − 1/ω)`.
pub fn check_moments(z: &TerminationFunction, omega: f64) -> Result<(f64, f64), TaperError> {
    positive("omega", omega)?;
    let (cos, sin) = trig_moments(|s| z.eval(s), omega, z.width())?;
    Ok((cos, sin - 1.0 / omega))
}

/// `w(v)` on `[0, 1]`, identically zero on `[0, floor]`.
#[derive(Debug, Clone)]
pub struct BoundaryTaper {
    body: Expr,
    floor: f64,
    origin: Option<TerminationFunction>,
    program: Arc<CompiledExpr>,
}

impl PartialEq for BoundaryTaper {
    fn eq(&self, other: &Self) -> bool {
        self.body == other.body && self.floor == other.floor && self.origin == other.origin
    }
}

impl BoundaryTaper {
    /// A taper given directly as an expression in `v`, without a
    /// termination-function origin.
    pub fn custom(body: Expr, floor: f64) -> Result<BoundaryTaper, TaperError> {
        if !(0.0..1.0).contains(&floor) {
            return Err(TaperError::InvalidParameter {
                name: "floor",
                value: floor,
            });
        }
        let program = Arc::new(body.compile(&["v"])?);
        let w = BoundaryTaper {
            body,
            floor,
            origin: None,
            program,
        };
        let w1 = w.eval(1.0)?;
        if (w1 - 1.0).abs() > ENDPOINT_TOL {
            return Err(TaperError::Invariant {
                check: "w(1) = 1",
                detail: format!("w(1) = {w1}"),
            });
        }
        Ok(w)
    }

    pub fn body(&self) -> &Expr {
        &self.body
    }

    /// Support floor `v₀`: `w(v) = 0` for `v ≤ v₀`.
    pub fn floor(&self) -> f64 {
        self.floor
    }

    /// Termination function this taper was derived from, if any.
    pub fn origin(&self) -> Option<&TerminationFunction> {
        self.origin.as_ref()
    }

    #[inline]
    pub fn eval(&self, v: f64) -> Result<f64, EvalError> {
        if v <= self.floor {
            Ok(0.0)
        } else {
            self.program.eval1(v)
        }
    }

    pub fn spec_string(&self) -> Option<String> {
        self.origin.as_ref().map(|z| format!("wfromz:{}", z.spec_string()))
    }

    /// Parse `wfromz:<z spec>` or `wfromz:(<z spec>)`.
    pub fn from_spec_string(text: &str) -> Result<BoundaryTaper, TaperError> {
        let text = text.trim();
        let inner = text.strip_prefix("wfromz:").ok_or_else(|| {
            let kind = text.split(':').next().unwrap_or(text).to_string();
            TaperError::Spec(SpecStringError::UnknownKind(kind))
        })?;
        let inner = inner
            .trim()
            .strip_prefix('(')
            .and_then(|s| s.strip_suffix(')'))
            .unwrap_or(inner);
        Ok(boundary_taper_from_z(&TerminationFunction::from_spec_string(inner)?))
    }
}

/// `w(v) = z(−ln v)` on `(e^{−c}, 1]`, zero below; the correspondence
/// induced by `u = e^{−x}`.
pub fn boundary_taper_from_z(z: &TerminationFunction) -> BoundaryTaper {
    let body = z.body().substitute("s", &Expr::var("v").apply(UnaryOp::Ln).neg());
    let program = Arc::new(body.compile(&["v"]).expect("termination bodies only use `s`"));
    BoundaryTaper {
        body,
        floor: (-z.width()).exp(),
        origin: Some(z.clone()),
        program,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_taper_endpoints_and_midpoint() {
        let z = make_smooth_taper(1.0).unwrap();
        assert_eq!(z.eval(0.0).unwrap(), 1.0);
        assert_eq!(z.eval(1.0).unwrap(), 0.0);
        assert_eq!(z.eval(0.5).unwrap(), 0.5);
        let dz = z.body().differentiate("s");
        assert!(dz.eval_at("s", 0.0).unwrap().abs() < 1e-12);
        assert!(dz.eval_at("s", 1.0).unwrap().abs() < 1e-12);
        let d2z = dz.differentiate("s");
        assert!(d2z.eval_at("s", 0.0).unwrap().abs() < 1e-12);
        assert!(d2z.eval_at("s", 1.0).unwrap().abs() < 1e-12);
        z.validate().unwrap();
    }

    #[test]
    fn smooth_taper_scales_with_width() {
        let z1 = make_smooth_taper(1.0).unwrap();
        let z2 = make_smooth_taper(2.0).unwrap();
        for i in 0..=40 {
            let s = i as f64 * 0.05;
            assert!((z2.eval(s).unwrap() - z1.eval(s / 2.0).unwrap()).abs() <= 1e-15);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(
            make_smooth_taper(0.0),
            Err(TaperError::InvalidParameter { .. })
        ));
        assert!(matches!(
            make_smooth_taper(f64::NAN),
            Err(TaperError::InvalidParameter { .. })
        ));
        assert!(matches!(
            make_matched_trig(-1.0, 1.0),
            Err(TaperError::InvalidParameter { .. })
        ));
    }

    #[test]
    fn matched_trig_zeroes_both_residuals() {
        for omega in [0.5, 1.0, 2.0] {
            let z = make_matched_trig(omega, 1.0).unwrap();
            let (rc, rs) = check_moments(&z, omega).unwrap();
            assert!(rc.abs() < 1e-10 && rs.abs() < 1e-10, "omega={omega}: {rc} {rs}");
            assert!((z.eval(0.0).unwrap() - 1.0).abs() <= ENDPOINT_TOL);
            assert!(z.eval(1.0).unwrap().abs() <= ENDPOINT_TOL);
        }
    }

    #[test]
    fn plain_taper_is_not_matched() {
        let z = make_smooth_taper(1.0).unwrap();
        let (_, rs) = check_moments(&z, 1.0).unwrap();
        assert!(rs < -0.54, "{rs}");
        let m = make_matched_trig(1.0, 1.0).unwrap();
        let (rc, rs) = check_moments(&m, 2.0).unwrap();
        assert!(rc.abs().max(rs.abs()) > 1e-3);
    }

    #[test]
    fn boundary_taper_support_and_values() {
        let z = make_smooth_taper(1.0).unwrap();
        let w = boundary_taper_from_z(&z);
        assert_eq!(w.eval(1.0).unwrap(), 1.0);
        assert_eq!(w.floor(), (-1.0f64).exp());
        assert_eq!(w.eval((-1.0f64).exp()).unwrap(), 0.0);
        assert_eq!(w.eval(0.1).unwrap(), 0.0);
        assert_eq!(w.eval(0.0).unwrap(), 0.0);
        let expected = z.eval(2.0f64.ln()).unwrap();
        assert!((w.eval(0.5).unwrap() - expected).abs() < 1e-15);

        let m = make_matched_trig(1.0, 1.0).unwrap();
        assert!((boundary_taper_from_z(&m).eval(1.0).unwrap() - 1.0).abs() <= ENDPOINT_TOL);
    }

    #[test]
    fn custom_boundary_taper_checks_unit_endpoint() {
        let v = Expr::var("v");
        assert!(BoundaryTaper::custom(v.clone(), 0.0).is_ok());
        assert!(BoundaryTaper::custom(v.clone().mul(Expr::Const(2.0)), 0.0).is_err());
        assert!(BoundaryTaper::custom(v, 1.0).is_err());
    }

    #[test]
    fn validation_catches_broken_functions() {
        let bad_end = TerminationFunction::from_parts(
            Expr::Const(1.0).sub(Expr::var("s").mul(Expr::Const(0.5))),
            1.0,
            TaperKind::SmoothTaper,
            1.0,
        )
        .unwrap();
        assert!(matches!(
            bad_end.validate(),
            Err(TaperError::Invariant { check: "z(c) = 0", .. })
        ));

        // 1 - s + 8000 s (1 - s): endpoints fine, far too large inside
        let s = Expr::var("s");
        let huge = Expr::Const(1.0)
            .sub(s.clone())
            .add(Expr::Const(8000.0).mul(s.clone()).mul(Expr::Const(1.0).sub(s)));
        let huge = TerminationFunction::from_parts(huge, 1.0, TaperKind::SmoothTaper, 1.0).unwrap();
        assert!(matches!(
            huge.validate(),
            Err(TaperError::Invariant { check: "bounded", .. })
        ));
    }

    #[test]
    fn spec_strings_round_trip() {
        for text in [
            "taper:c=1",
            "taper:c=2.5",
            "matched:omega=1,c=1",
            "matched:omega=0.5,c=1,scale=2",
        ] {
            let z = TerminationFunction::from_spec_string(text).unwrap();
            assert_eq!(z.spec_string(), text);
            assert_eq!(TerminationFunction::from_spec_string(&z.spec_string()).unwrap(), z);
        }
        assert_eq!(TerminationFunction::from_spec_string("taper").unwrap().width(), 1.0);
        let w = BoundaryTaper::from_spec_string("wfromz:(matched:omega=1,c=1)").unwrap();
        assert_eq!(w.spec_string().unwrap(), "wfromz:matched:omega=1,c=1");
        assert!(matches!(
            TerminationFunction::from_spec_string("boxcar:c=1"),
            Err(TaperError::Spec(SpecStringError::UnknownKind(_)))
        ));
        assert!(BoundaryTaper::from_spec_string("taper:c=1").is_err());
    }

    #[test]
    fn rescaling_stretches_support() {
        let z = make_smooth_taper(1.0).unwrap();
        let half = z.rescaled(2.0).unwrap();
        assert_eq!(half.width(), 0.5);
        assert!((half.eval(0.25).unwrap() - 0.5).abs() < 1e-15);
        half.validate().unwrap();
        let back = half.rescaled(0.5).unwrap();
        assert!((back.eval(0.3).unwrap() - z.eval(0.3).unwrap()).abs() < 1e-15);
    }
}
