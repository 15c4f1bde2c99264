//! Changes of variable between Z-integrals: maps that keep an infinite limit
//! infinite, maps that keep a critical lower limit at 0, and the exponential
//! bridge between the two settings.

use std::fmt;

use crate::expr::{DomainFault, EvalError, Expr, ParseError, UnaryOp};
use crate::integral::{FiniteSpec, InfiniteSpec, SpecError, ZIntegralSpec};
use crate::spec_string::{num, SpecString, SpecStringError};
use crate::taper::{boundary_taper_from_z, TaperError};

const ROUND_TRIP_POINTS: usize = 32;
const ROUND_TRIP_TOL: f64 = 1e-8;
const GEOMETRIC_SAMPLES: usize = 256;
const DENSE_SAMPLES: usize = 1024;
/// A refined local minimum of the derivative below this fraction of its
/// neighbours counts as touching zero.
const TOUCH_RATIO: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CovError {
    #[error("parameter {name} must be positive and finite, got {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("power map with r = {r} needs a positive lower limit, got {a} (only odd integer r extends below 0)")]
    CaveatViolation { r: f64, a: f64 },
    #[error("inverse does not undo the forward map: Q(P({at})) = {got}")]
    RoundTrip { at: f64, got: f64 },
    #[error("invalid domain [{lo}, {hi}]")]
    InvalidDomain { lo: f64, hi: f64 },
    #[error("{cov} changes of variable apply to {expected} integrals")]
    KindMismatch { cov: CovKind, expected: &'static str },
    #[error("integral is in `{spec}` but the change of variable maps `{cov}`")]
    VariableMismatch { spec: String, cov: String },
    #[error("change of variable is invalid: {0}")]
    Invalid(ValidationReport),
    #[error("validity of a custom change of variable is inconclusive; pass the override to apply it anyway")]
    NeedsOverride(ValidationReport),
    #[error("the bridge needs a boundary taper built from a termination function")]
    BridgeUnavailable,
    #[error("only exponential bridges `u = d·e^(−αx)` can be applied")]
    UnsupportedBridge,
    #[error("evaluation fault at {at}: {source}")]
    Eval { at: f64, source: EvalError },
    #[error("expression: {0}")]
    Parse(#[from] ParseError),
    #[error(transparent)]
    SpecString(#[from] SpecStringError),
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Taper(#[from] TaperError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovKind {
    /// Maps `[a, ∞)` onto `[P(a), ∞)`.
    Infinite,
    /// Maps `(0, β]` onto `(0, P(β)]`.
    Finite,
    /// Maps `[a, ∞)` onto `(0, ψ(a)]`.
    Bridge,
}

impl fmt::Display for CovKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CovKind::Infinite => "infinite",
            CovKind::Finite => "finite",
            CovKind::Bridge => "bridge",
        })
    }
}

/// Closed-form families whose validity is known analytically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    /// `y = d·x^r`
    Power { d: f64, r: f64 },
    /// `y = d·e^(αx)`
    Exp { d: f64, alpha: f64 },
    /// `y = x + k`
    Shift { k: f64 },
    /// `y = d·x`
    Linear { d: f64 },
    /// `t = (u/d)^(1/r)`, i.e. `u = d·t^r`
    FinitePower { d: f64, r: f64 },
    /// `u = d·e^(−αx)`
    Bridge { d: f64, alpha: f64 },
}

/// A change of variable `to = P(from)` with inverse `from = Q(to)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChangeOfVariable {
    pub kind: CovKind,
    pub from_var: String,
    pub to_var: String,
    /// `P`, in `from_var`.
    pub forward: Expr,
    /// `Q = P⁻¹`, in `to_var`.
    pub inverse: Expr,
    /// `P'`, in `from_var`.
    pub forward_derivative: Expr,
    /// `Q'`, in `to_var`.
    pub inverse_derivative: Expr,
    /// Domain of `P` used for sampling checks.
    pub domain: (f64, f64),
    pub family: Option<Family>,
    /// Validity established analytically rather than by sampling.
    pub certified: bool,
}

fn positive(name: &'static str, value: f64) -> Result<f64, CovError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(CovError::InvalidParameter { name, value })
    }
}

fn is_odd_integer(r: f64) -> bool {
    r.fract() == 0.0 && (r.abs() as u64) % 2 == 1
}

/// `1/r` as an expression, written as a fraction when `r` is an integer.
fn reciprocal(r: f64) -> Expr {
    if r.fract() == 0.0 && r != 1.0 {
        Expr::Const(1.0).div(Expr::Const(r))
    } else {
        Expr::Const(1.0 / r)
    }
}

/// `(r - 1)/r`, written as a fraction when `r` is an integer.
fn reduced_exponent(r: f64) -> Expr {
    if r.fract() == 0.0 {
        Expr::Const(r - 1.0).div(Expr::Const(r))
    } else {
        Expr::Const((r - 1.0) / r)
    }
}

fn scaled(coeff: f64, e: Expr) -> Expr {
    if coeff == 1.0 {
        e
    } else {
        Expr::Const(coeff).mul(e)
    }
}

fn over(e: Expr, divisor: f64) -> Expr {
    if divisor == 1.0 {
        e
    } else {
        e.div(Expr::Const(divisor))
    }
}

fn power_of(base: Expr, exponent: f64) -> Expr {
    if exponent == 1.0 {
        base
    } else {
        base.pow(Expr::Const(exponent))
    }
}

/// `d·x^r` as forward map and `(y/d)^(1/r)` with derivative
/// `1/(r·d·(y/d)^((r-1)/r))` as inverse.
fn power_parts(from: &str, to: &str, d: f64, r: f64) -> (Expr, Expr, Expr, Expr) {
    let x = Expr::var(from);
    let y = Expr::var(to);
    let forward = scaled(d, power_of(x.clone(), r));
    let forward_derivative = scaled(d * r, power_of(x, r - 1.0)).simplified();
    let ratio = over(y, d);
    let inverse = if r == 1.0 {
        ratio.clone()
    } else {
        ratio.clone().pow(reciprocal(r))
    };
    let denominator = if r == 1.0 {
        Expr::Const(r * d)
    } else {
        scaled(r * d, ratio.pow(reduced_exponent(r)))
    };
    let inverse_derivative = Expr::Const(1.0).div(denominator).simplified();
    (forward, inverse, forward_derivative, inverse_derivative)
}

/// `y = d·x^r` on `[a, ∞)`. Requires `a > 0` unless `r` is an odd integer.
pub fn make_power_cov(d: f64, r: f64, a: f64) -> Result<ChangeOfVariable, CovError> {
    positive("d", d)?;
    positive("r", r)?;
    if !a.is_finite() {
        return Err(CovError::InvalidDomain {
            lo: a,
            hi: f64::INFINITY,
        });
    }
    if a <= 0.0 && !is_odd_integer(r) {
        return Err(CovError::CaveatViolation { r, a });
    }
    let (forward, inverse, forward_derivative, inverse_derivative) = power_parts("x", "y", d, r);
    Ok(ChangeOfVariable {
        kind: CovKind::Infinite,
        from_var: "x".into(),
        to_var: "y".into(),
        forward,
        inverse,
        forward_derivative,
        inverse_derivative,
        domain: (a, default_hi(a)),
        family: Some(Family::Power { d, r }),
        certified: true,
    })
}

/// `y = d·e^(αx)` on the whole line.
pub fn make_exp_cov(d: f64, alpha: f64) -> Result<ChangeOfVariable, CovError> {
    positive("d", d)?;
    positive("alpha", alpha)?;
    let x = Expr::var("x");
    let y = Expr::var("y");
    let exp = scaled(alpha, x.clone()).apply(UnaryOp::Exp);
    Ok(ChangeOfVariable {
        kind: CovKind::Infinite,
        from_var: "x".into(),
        to_var: "y".into(),
        forward: scaled(d, exp.clone()),
        inverse: over(over(y.clone(), d).apply(UnaryOp::Ln), alpha),
        forward_derivative: scaled(d * alpha, exp),
        inverse_derivative: Expr::Const(1.0).div(scaled(alpha, y)),
        domain: (-10.0, 10.0),
        family: Some(Family::Exp { d, alpha }),
        certified: true,
    })
}

/// `y = x + k`.
pub fn make_shift_cov(k: f64) -> Result<ChangeOfVariable, CovError> {
    if !k.is_finite() {
        return Err(CovError::InvalidParameter { name: "k", value: k });
    }
    Ok(ChangeOfVariable {
        kind: CovKind::Infinite,
        from_var: "x".into(),
        to_var: "y".into(),
        forward: Expr::var("x").add(Expr::Const(k)).simplified(),
        inverse: Expr::var("y").sub(Expr::Const(k)).simplified(),
        forward_derivative: Expr::Const(1.0),
        inverse_derivative: Expr::Const(1.0),
        domain: (-100.0, 100.0),
        family: Some(Family::Shift { k }),
        certified: true,
    })
}

/// `y = d·x`.
pub fn make_linear_cov(d: f64) -> Result<ChangeOfVariable, CovError> {
    positive("d", d)?;
    Ok(ChangeOfVariable {
        kind: CovKind::Infinite,
        from_var: "x".into(),
        to_var: "y".into(),
        forward: scaled(d, Expr::var("x")),
        inverse: over(Expr::var("y"), d),
        forward_derivative: Expr::Const(d),
        inverse_derivative: Expr::Const(1.0 / d),
        domain: (-100.0, 100.0),
        family: Some(Family::Linear { d }),
        certified: true,
    })
}

/// `u = d·t^r` on `(0, β]`, so `t = (u/d)^(1/r)`.
pub fn make_finite_power_cov(d: f64, r: f64, beta: f64) -> Result<ChangeOfVariable, CovError> {
    positive("d", d)?;
    positive("r", r)?;
    positive("beta", beta)?;
    // forward is t(u); inverse is u(t) = d·t^r
    let (inverse, forward, inverse_derivative, forward_derivative) = power_parts("t", "u", d, r);
    Ok(ChangeOfVariable {
        kind: CovKind::Finite,
        from_var: "u".into(),
        to_var: "t".into(),
        forward,
        inverse,
        forward_derivative,
        inverse_derivative,
        domain: (0.0, beta),
        family: Some(Family::FinitePower { d, r }),
        certified: true,
    })
}

/// `u = d·e^(−αx)`, from the infinite setting to the finite one.
pub fn make_bridge_cov(d: f64, alpha: f64) -> Result<ChangeOfVariable, CovError> {
    positive("d", d)?;
    positive("alpha", alpha)?;
    let x = Expr::var("x");
    let u = Expr::var("u");
    let decay = scaled(-alpha, x).apply(UnaryOp::Exp);
    Ok(ChangeOfVariable {
        kind: CovKind::Bridge,
        from_var: "x".into(),
        to_var: "u".into(),
        forward: scaled(d, decay.clone()),
        inverse: over(over(u.clone(), d).apply(UnaryOp::Ln), alpha).neg(),
        forward_derivative: scaled(-d * alpha, decay),
        inverse_derivative: Expr::Const(-1.0).div(scaled(alpha, u)),
        domain: (0.0, 30.0 / alpha),
        family: Some(Family::Bridge { d, alpha }),
        certified: true,
    })
}

fn default_hi(lo: f64) -> f64 {
    if lo > 0.0 {
        (10.0 * lo).max(100.0)
    } else {
        lo.abs().max(1.0) * 100.0
    }
}

/// A user-supplied map `to = P(from)` with its inverse. Validity can only be
/// checked by sampling, so validation is at best inconclusive.
pub fn make_custom_cov(
    kind: CovKind,
    forward: &str,
    inverse: &str,
    domain: (f64, f64),
) -> Result<ChangeOfVariable, CovError> {
    let (from, to) = match kind {
        CovKind::Infinite => ("x", "y"),
        CovKind::Finite => ("u", "t"),
        CovKind::Bridge => ("x", "u"),
    };
    let (lo, hi) = domain;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) || (kind == CovKind::Finite && lo < 0.0) {
        return Err(CovError::InvalidDomain { lo, hi });
    }
    let forward = Expr::parse(forward, &[from])?;
    let inverse = Expr::parse(inverse, &[to])?;
    let cov = ChangeOfVariable {
        kind,
        from_var: from.into(),
        to_var: to.into(),
        forward_derivative: forward.differentiate(from),
        inverse_derivative: inverse.differentiate(to),
        forward,
        inverse,
        domain,
        family: None,
        certified: false,
    };
    cov.check_round_trip()?;
    Ok(cov)
}

impl ChangeOfVariable {
    /// The map in the other direction. Inverting a certified map keeps it
    /// certified: monotonicity and the limiting behaviour carry over.
    pub fn inverse(&self) -> Result<ChangeOfVariable, CovError> {
        let lo = self.eval_forward(self.domain.0)?;
        let hi = self.eval_forward(self.domain.1)?;
        Ok(ChangeOfVariable {
            kind: self.kind,
            from_var: self.to_var.clone(),
            to_var: self.from_var.clone(),
            forward: self.inverse.clone(),
            inverse: self.forward.clone(),
            forward_derivative: self.inverse_derivative.clone(),
            inverse_derivative: self.forward_derivative.clone(),
            domain: (lo.min(hi), lo.max(hi)),
            family: None,
            certified: self.certified,
        })
    }

    pub fn eval_forward(&self, s: f64) -> Result<f64, CovError> {
        self.forward
            .eval_at(&self.from_var, s)
            .map_err(|source| CovError::Eval { at: s, source })
    }

    pub fn eval_inverse(&self, t: f64) -> Result<f64, CovError> {
        self.inverse
            .eval_at(&self.to_var, t)
            .map_err(|source| CovError::Eval { at: t, source })
    }

    fn round_trip_points(&self) -> Vec<f64> {
        let (lo, hi) = self.domain;
        // interior points only: finite maps may be singular at 0
        (0..ROUND_TRIP_POINTS)
            .map(|i| lo + (hi - lo) * (i as f64 + 0.5) / ROUND_TRIP_POINTS as f64)
            .collect()
    }

    fn check_round_trip(&self) -> Result<(), CovError> {
        for s in self.round_trip_points() {
            let got = self.eval_inverse(self.eval_forward(s)?)?;
            if (got - s).abs() > ROUND_TRIP_TOL * s.abs().max(1.0) {
                return Err(CovError::RoundTrip { at: s, got });
            }
        }
        Ok(())
    }

    pub fn spec_string(&self) -> String {
        match self.family {
            Some(Family::Power { d, r }) | Some(Family::FinitePower { d, r }) => {
                format!("power:d={},r={}", num(d), num(r))
            }
            Some(Family::Exp { d, alpha }) => format!("exp:d={},alpha={}", num(d), num(alpha)),
            Some(Family::Shift { k }) => format!("shift:k={}", num(k)),
            Some(Family::Linear { d }) => format!("linear:d={}", num(d)),
            Some(Family::Bridge { d, alpha }) => format!("bridge:d={},alpha={}", num(d), num(alpha)),
            None => format!(
                "custom:P={},Q={},lo={},hi={}",
                self.forward,
                self.inverse,
                num(self.domain.0),
                num(self.domain.1)
            ),
        }
    }

    /// Parse a transform string for use on `spec`:
    /// `power:d=1,r=2`, `exp:d=1,alpha=1`, `shift:k=5`, `linear:d=2`,
    /// `bridge:d=1,alpha=1` or `custom:P=<expr>,Q=<expr>[,lo=..,hi=..]`.
    ///
    /// `power` means `y = d·x^r` for infinite integrals and `u = d·t^r` for
    /// finite ones; custom maps take their kind from `spec`.
    pub fn from_spec_string(text: &str, spec: &ZIntegralSpec) -> Result<ChangeOfVariable, CovError> {
        let s = SpecString::parse(text)?;
        let bound = match spec {
            ZIntegralSpec::Infinite(i) => i.lower,
            ZIntegralSpec::Finite(f) => f.upper,
        };
        match (s.kind.as_str(), spec) {
            ("power", ZIntegralSpec::Infinite(_)) => {
                s.expect_keys(&["d", "r"])?;
                make_power_cov(s.number_or("d", Some(1.0))?, s.number("r")?, bound)
            }
            ("power", ZIntegralSpec::Finite(_)) => {
                s.expect_keys(&["d", "r"])?;
                make_finite_power_cov(s.number_or("d", Some(1.0))?, s.number("r")?, bound)
            }
            ("exp", _) => {
                s.expect_keys(&["d", "alpha"])?;
                make_exp_cov(s.number_or("d", Some(1.0))?, s.number_or("alpha", Some(1.0))?)
            }
            ("shift", _) => {
                s.expect_keys(&["k"])?;
                make_shift_cov(s.number("k")?)
            }
            ("linear", _) => {
                s.expect_keys(&["d"])?;
                make_linear_cov(s.number("d")?)
            }
            ("bridge", _) => {
                s.expect_keys(&["d", "alpha"])?;
                make_bridge_cov(s.number_or("d", Some(1.0))?, s.number_or("alpha", Some(1.0))?)
            }
            ("custom", _) => {
                s.expect_keys(&["P", "Q", "lo", "hi"])?;
                let kind = if spec.is_infinite() {
                    CovKind::Infinite
                } else {
                    CovKind::Finite
                };
                let default = match kind {
                    CovKind::Finite => (0.0, bound),
                    _ => (bound, default_hi(bound)),
                };
                let lo = s.number_or("lo", Some(default.0))?;
                let hi = s.number_or("hi", Some(default.1))?;
                make_custom_cov(kind, s.text("P")?, s.text("Q")?, (lo, hi))
            }
            (other, _) => Err(SpecStringError::UnknownKind(other.into()).into()),
        }
    }
}

impl fmt::Display for ChangeOfVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} = {}  ({} = {})",
            self.to_var, self.forward, self.from_var, self.inverse
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Valid,
    Invalid,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Valid => "valid",
            Verdict::Invalid => "invalid",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub id: &'static str,
    pub passed: bool,
    pub evidence: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub verdict: Verdict,
    pub checks: Vec<Check>,
    pub sampled_domain: (f64, f64),
}

impl ValidationReport {
    pub fn failed(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} on [{}, {}]",
            self.verdict, self.sampled_domain.0, self.sampled_domain.1
        )?;
        for c in &self.checks {
            let mark = if c.passed { "ok" } else { "FAILED" };
            write!(f, "; {} {}: {}", c.id, mark, c.evidence)?;
        }
        Ok(())
    }
}

fn geometric(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let ratio = (hi / lo).ln() / (n - 1) as f64;
    (0..n).map(|i| lo * (ratio * i as f64).exp()).collect()
}

fn linear(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Evaluate `e` at `x`; overflow and underflow-to-infinity results come back
/// as `None` so that they can be skipped, other faults are errors.
fn sample(e: &Expr, var: &str, x: f64) -> Result<Option<f64>, CovError> {
    match e.eval_at(var, x) {
        Ok(v) => Ok(Some(v)),
        Err(EvalError::Domain(DomainFault::NonFinite(_))) => Ok(None),
        Err(source) => Err(CovError::Eval { at: x, source }),
    }
}

fn golden_min(e: &Expr, var: &str, mut lo: f64, mut hi: f64) -> Result<(f64, f64), CovError> {
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let value = |x: f64| -> Result<f64, CovError> { Ok(sample(e, var, x)?.unwrap_or(f64::INFINITY)) };
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let mut f1 = value(x1)?;
    let mut f2 = value(x2)?;
    for _ in 0..80 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = value(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = value(x2)?;
        }
    }
    Ok(if f1 <= f2 { (x1, f1) } else { (x2, f2) })
}

/// Check that `sign · e` stays strictly positive on `xs`, refining every
/// local minimum so that a derivative that merely touches zero between
/// samples is caught.
fn sign_check(id: &'static str, e: &Expr, var: &str, xs: &[f64], sign: f64) -> Result<Check, CovError> {
    let mut vals = Vec::with_capacity(xs.len());
    let mut skipped = 0usize;
    for &x in xs {
        match sample(e, var, x)? {
            Some(v) => vals.push((x, sign * v)),
            None => skipped += 1,
        }
    }
    if let Some(&(x, v)) = vals.iter().find(|(_, v)| *v <= 0.0) {
        return Ok(Check {
            id,
            passed: false,
            evidence: format!("value {} at {var} = {x}", sign * v),
        });
    }
    for w in vals.windows(3) {
        let (_, left) = w[0];
        let (_, mid) = w[1];
        let (_, right) = w[2];
        if mid <= left && mid <= right {
            let signed = Expr::Const(sign).mul(e.clone());
            let (xm, vm) = golden_min(&signed, var, w[0].0, w[2].0)?;
            if vm <= TOUCH_RATIO * left.max(right) {
                return Ok(Check {
                    id,
                    passed: false,
                    evidence: format!("falls to {} near {var} = {xm}", sign * vm),
                });
            }
        }
    }
    let mut evidence = format!("{} samples", vals.len());
    if skipped > 0 {
        evidence.push_str(&format!(", {skipped} out of floating-point range skipped"));
    }
    Ok(Check {
        id,
        passed: true,
        evidence,
    })
}

/// Sampled evidence for the validity conditions of `cov`, plus the analytic
/// certificate for closed-form families.
pub fn validate_cov(cov: &ChangeOfVariable) -> Result<ValidationReport, CovError> {
    let mut checks = Vec::new();
    let var = cov.from_var.as_str();
    let (lo, hi) = cov.domain;
    let sampled_domain;
    match cov.kind {
        CovKind::Infinite => {
            let start = lo.max(1.0);
            let end = 1e6f64.max(10.0 * start);
            sampled_domain = (lo.min(start), end);
            let xs = geometric(start, end, GEOMETRIC_SAMPLES);
            checks.push(sign_check(
                "P' > 0 (geometric)",
                &cov.forward_derivative,
                var,
                &xs,
                1.0,
            )?);
            if !cov.certified {
                let dense = linear(lo, hi, DENSE_SAMPLES);
                checks.push(sign_check("P' > 0 (dense)", &cov.forward_derivative, var, &dense, 1.0)?);
            }
            let far = sample(&cov.forward, var, 1e6)?;
            let near = sample(&cov.forward, var, 1e5)?;
            let (passed, evidence) = match (near, far) {
                (_, None) => (true, "P(1e6) overflows".to_string()),
                (Some(n), Some(f)) => (f > 1e3 && f > n, format!("P(1e5) = {n}, P(1e6) = {f}")),
                (None, Some(f)) => (false, format!("P(1e6) = {f} after P(1e5) overflowed")),
            };
            checks.push(Check {
                id: "P unbounded",
                passed,
                evidence,
            });
        }
        CovKind::Finite => {
            let beta = hi;
            sampled_domain = (1e-12 * beta, beta);
            let xs = geometric(1e-12 * beta, beta, GEOMETRIC_SAMPLES);
            checks.push(sign_check("P > 0", &cov.forward, var, &xs, 1.0)?);
            checks.push(sign_check("P' > 0", &cov.forward_derivative, var, &xs, 1.0)?);
            let mut values = Vec::new();
            for k in 1..=12 {
                let u = beta * 10f64.powi(-k);
                values.push(sample(&cov.forward, var, u)?.unwrap_or(f64::INFINITY));
            }
            let decreasing = values.windows(2).all(|w| w[1] < w[0]);
            let last = *values.last().expect("twelve samples");
            checks.push(Check {
                id: "P → 0 at 0",
                passed: decreasing && last < 1e-3,
                evidence: format!("P(β·1e-12) = {last}, decreasing: {decreasing}"),
            });
        }
        CovKind::Bridge => {
            let start = lo.max(1.0);
            sampled_domain = (start, 1e6);
            let xs: Vec<f64> = geometric(start, 1e6, GEOMETRIC_SAMPLES)
                .into_iter()
                .filter(|&x| {
                    sample(&cov.forward, var, x)
                        .ok()
                        .flatten()
                        .is_some_and(|v| v.abs() > 1e-300)
                })
                .collect();
            checks.push(sign_check("ψ > 0", &cov.forward, var, &xs, 1.0)?);
            checks.push(sign_check("ψ' < 0", &cov.forward_derivative, var, &xs, -1.0)?);
            let mut values = Vec::new();
            for k in 1..=6 {
                values.push(sample(&cov.forward, var, 10f64.powi(k))?.unwrap_or(f64::INFINITY));
            }
            let decreasing = values.windows(2).all(|w| w[1] <= w[0]);
            let last = *values.last().expect("six samples");
            checks.push(Check {
                id: "ψ → 0 at ∞",
                passed: decreasing && last < 1e-3,
                evidence: format!("ψ(1e6) = {last}, non-increasing: {decreasing}"),
            });
        }
    }
    let round_trip = match cov.check_round_trip() {
        Ok(()) => Check {
            id: "Q(P(s)) = s",
            passed: true,
            evidence: format!("{ROUND_TRIP_POINTS} points"),
        },
        Err(e) => Check {
            id: "Q(P(s)) = s",
            passed: false,
            evidence: e.to_string(),
        },
    };
    checks.push(round_trip);
    if cov.certified {
        checks.push(Check {
            id: "closed form",
            passed: true,
            evidence: "monotone closed-form family".into(),
        });
    }
    let verdict = if cov.certified {
        Verdict::Valid
    } else if checks.iter().any(|c| !c.passed) {
        Verdict::Invalid
    } else {
        Verdict::Inconclusive
    };
    Ok(ValidationReport {
        verdict,
        checks,
        sampled_domain,
    })
}

/// Substitute `from = Q(to)` into the integrand and multiply by `Q'(to)`.
fn pulled_back(integrand: &Expr, cov: &ChangeOfVariable) -> Expr {
    integrand
        .substitute(&cov.from_var, &cov.inverse)
        .mul(cov.inverse_derivative.clone())
        .simplified()
}

/// Rewrite `spec` in the new variable. The limit moves to `P(a)` or `P(β)`;
/// the termination function or boundary taper is carried over unchanged.
///
/// Custom maps are only inconclusively valid and need `allow_inconclusive`.
pub fn apply_cov(
    spec: &ZIntegralSpec,
    cov: &ChangeOfVariable,
    allow_inconclusive: bool,
) -> Result<ZIntegralSpec, CovError> {
    if cov.kind == CovKind::Bridge {
        return match cov.family {
            Some(Family::Bridge { d, alpha }) => bridge_transform(spec, d, alpha),
            _ => Err(CovError::UnsupportedBridge),
        };
    }
    if spec.var() != cov.from_var {
        return Err(CovError::VariableMismatch {
            spec: spec.var().into(),
            cov: cov.from_var.clone(),
        });
    }
    if let (ZIntegralSpec::Infinite(s), Some(Family::Power { r, .. })) = (spec, cov.family) {
        if s.lower <= 0.0 && !is_odd_integer(r) {
            return Err(CovError::CaveatViolation { r, a: s.lower });
        }
    }
    let report = validate_cov(cov)?;
    match report.verdict {
        Verdict::Invalid => return Err(CovError::Invalid(report)),
        Verdict::Inconclusive if !allow_inconclusive => return Err(CovError::NeedsOverride(report)),
        _ => {}
    }
    let integrand = pulled_back(spec.integrand(), cov);
    Ok(match (spec, cov.kind) {
        (ZIntegralSpec::Infinite(s), CovKind::Infinite) => {
            let lower = cov.eval_forward(s.lower)?;
            InfiniteSpec::new(integrand, &cov.to_var, lower, s.z.clone())?.into()
        }
        (ZIntegralSpec::Finite(s), CovKind::Finite) => {
            let upper = cov.eval_forward(s.upper)?;
            FiniteSpec::new(integrand, &cov.to_var, upper, s.w.clone())?.into()
        }
        (_, kind) => {
            return Err(CovError::KindMismatch {
                cov: kind,
                expected: if kind == CovKind::Infinite {
                    "infinite"
                } else {
                    "finite"
                },
            })
        }
    })
}

/// Move between the two settings through `u = d·e^(−αx)`.
///
/// Finite to infinite: `f(x) = g(d·e^(−αx))·d·α·e^(−αx)` on
/// `[−ln(β/d)/α, ∞)` with `z(s) = z₀(α s)`, where `w = w_{z₀}`.
/// Infinite to finite: `g(u) = f(−ln(u/d)/α)/(α u)` on `(0, d·e^(−αa)]` with
/// `w(v) = z(−ln(v)/α)`. With `α = 1` the tapers correspond exactly.
pub fn bridge_transform(spec: &ZIntegralSpec, d: f64, alpha: f64) -> Result<ZIntegralSpec, CovError> {
    positive("d", d)?;
    positive("alpha", alpha)?;
    match spec {
        ZIntegralSpec::Finite(s) => {
            let z0 = s.w.origin().ok_or(CovError::BridgeUnavailable)?;
            let x = if s.var == "x" { "y" } else { "x" };
            let decay = scaled(-alpha, Expr::var(x)).apply(UnaryOp::Exp);
            let u_of_x = scaled(d, decay.clone());
            let integrand = s
                .integrand
                .substitute(&s.var, &u_of_x)
                .mul(scaled(d * alpha, decay))
                .simplified();
            let lower = -(s.upper / d).ln() / alpha;
            let z = z0.rescaled(alpha)?;
            Ok(InfiniteSpec::new(integrand, x, lower, z)?.into())
        }
        ZIntegralSpec::Infinite(s) => {
            let u = if s.var == "u" { "t" } else { "u" };
            let x_of_u = over(over(Expr::var(u), d).apply(UnaryOp::Ln), alpha).neg();
            let integrand = s
                .integrand
                .substitute(&s.var, &x_of_u)
                .div(scaled(alpha, Expr::var(u)))
                .simplified();
            let upper = d * (-alpha * s.lower).exp();
            let w = boundary_taper_from_z(&s.z.rescaled(1.0 / alpha)?);
            Ok(FiniteSpec::new(integrand, u, upper, w)?.into())
        }
    }
}
