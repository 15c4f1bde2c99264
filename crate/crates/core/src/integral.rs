//! Integral problems: an infinite upper limit with a termination function,
//! or a critical lower limit at 0 with a boundary taper.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::expr::{Expr, ParseError};
use crate::taper::{BoundaryTaper, TaperError, TerminationFunction};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpecError {
    #[error("{field} must be finite, got {value}")]
    NotFinite { field: &'static str, value: f64 },
    #[error("upper limit must be positive, got {0}")]
    NonPositiveUpper(f64),
    #[error("integrand uses `{found}` but the integration variable is `{var}`")]
    ForeignVariable { var: String, found: String },
    #[error("invalid integration variable name `{0}`")]
    BadVariable(String),
    #[error("missing field `{0}`")]
    MissingField(&'static str),
    #[error("field `{field}` is not used by `{kind}` integrals")]
    UnexpectedField { field: &'static str, kind: &'static str },
    #[error("unknown integral type `{0}` (expected `inf` or `fin`)")]
    UnknownType(String),
    #[error("integrand: {0}")]
    Parse(#[from] ParseError),
    #[error("taper: {0}")]
    Taper(#[from] TaperError),
}

fn check_var(integrand: &Expr, var: &str) -> Result<(), SpecError> {
    let mut chars = var.chars();
    let ok =
        chars.next().is_some_and(|c| c.is_ascii_alphabetic()) && chars.all(|c| c.is_ascii_alphanumeric() || c == '_');
    if !ok {
        return Err(SpecError::BadVariable(var.into()));
    }
    if let Some(other) = integrand.free_vars().into_iter().find(|v| v != var) {
        return Err(SpecError::ForeignVariable {
            var: var.into(),
            found: other,
        });
    }
    Ok(())
}

/// `∫_a^∞ f`, defined through the termination function `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct InfiniteSpec {
    pub integrand: Expr,
    pub var: String,
    pub lower: f64,
    pub z: TerminationFunction,
}

impl InfiniteSpec {
    pub fn new(integrand: Expr, var: &str, lower: f64, z: TerminationFunction) -> Result<Self, SpecError> {
        if !lower.is_finite() {
            return Err(SpecError::NotFinite {
                field: "lower limit",
                value: lower,
            });
        }
        check_var(&integrand, var)?;
        Ok(InfiniteSpec {
            integrand,
            var: var.into(),
            lower,
            z,
        })
    }
}

/// `∫_0^β g` with the critical point at 0, defined through the boundary
/// taper `w`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteSpec {
    pub integrand: Expr,
    pub var: String,
    pub upper: f64,
    pub w: BoundaryTaper,
}

impl FiniteSpec {
    pub fn new(integrand: Expr, var: &str, upper: f64, w: BoundaryTaper) -> Result<Self, SpecError> {
        if !upper.is_finite() {
            return Err(SpecError::NotFinite {
                field: "upper limit",
                value: upper,
            });
        }
        if upper <= 0.0 {
            return Err(SpecError::NonPositiveUpper(upper));
        }
        check_var(&integrand, var)?;
        Ok(FiniteSpec {
            integrand,
            var: var.into(),
            upper,
            w,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ZIntegralSpec {
    Infinite(InfiniteSpec),
    Finite(FiniteSpec),
}

impl From<InfiniteSpec> for ZIntegralSpec {
    fn from(s: InfiniteSpec) -> Self {
        ZIntegralSpec::Infinite(s)
    }
}

impl From<FiniteSpec> for ZIntegralSpec {
    fn from(s: FiniteSpec) -> Self {
        ZIntegralSpec::Finite(s)
    }
}

impl ZIntegralSpec {
    /// Parse an infinite-limit problem from text.
    pub fn infinite(integrand: &str, var: &str, lower: f64, z: &str) -> Result<Self, SpecError> {
        let f = Expr::parse(integrand, &[var])?;
        let z = TerminationFunction::from_spec_string(z)?;
        Ok(InfiniteSpec::new(f, var, lower, z)?.into())
    }

    /// Parse a finite critical-limit problem from text.
    pub fn finite(integrand: &str, var: &str, upper: f64, w: &str) -> Result<Self, SpecError> {
        let g = Expr::parse(integrand, &[var])?;
        let w = BoundaryTaper::from_spec_string(w)?;
        Ok(FiniteSpec::new(g, var, upper, w)?.into())
    }

    pub fn integrand(&self) -> &Expr {
        match self {
            ZIntegralSpec::Infinite(s) => &s.integrand,
            ZIntegralSpec::Finite(s) => &s.integrand,
        }
    }

    pub fn var(&self) -> &str {
        match self {
            ZIntegralSpec::Infinite(s) => &s.var,
            ZIntegralSpec::Finite(s) => &s.var,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, ZIntegralSpec::Infinite(_))
    }

    /// Serializable form; `None` when the boundary taper has no
    /// termination-function origin and so no spec string.
    pub fn to_doc(&self) -> Option<SpecDoc> {
        Some(match self {
            ZIntegralSpec::Infinite(s) => SpecDoc {
                kind: "inf".into(),
                f: Some(s.integrand.to_string()),
                g: None,
                var: Some(s.var.clone()),
                a: Some(s.lower),
                beta: None,
                z: Some(s.z.spec_string()),
                w: None,
            },
            ZIntegralSpec::Finite(s) => SpecDoc {
                kind: "fin".into(),
                f: None,
                g: Some(s.integrand.to_string()),
                var: Some(s.var.clone()),
                a: None,
                beta: Some(s.upper),
                z: None,
                w: Some(s.w.spec_string()?),
            },
        })
    }
}

impl fmt::Display for ZIntegralSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ZIntegralSpec::Infinite(s) => write!(f, "Z∫_{}^∞ {} d{}  [z = {}]", s.lower, s.integrand, s.var, s.z),
            ZIntegralSpec::Finite(s) => {
                let w =
                    s.w.spec_string()
                        .unwrap_or_else(|| format!("custom w, floor {}", s.w.floor()));
                write!(f, "Z∫_0^{} {} d{}  [w = {}]", s.upper, s.integrand, s.var, w)
            }
        }
    }
}

/// JSON / command-line form of an integral problem.
///
/// `{"type":"inf","f":"x^-2","a":1,"z":"taper:c=1"}` or
/// `{"type":"fin","g":"u^(-1/2)","beta":1,"w":"wfromz:taper:c=1"}`; `var`
/// defaults to `x` and `u` respectively.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecDoc {
    #[serde(rename = "type")]
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub var: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<String>,
}

impl SpecDoc {
    pub fn build(&self) -> Result<ZIntegralSpec, SpecError> {
        let unexpected = |field: &'static str, present: bool, kind: &'static str| {
            if present {
                Err(SpecError::UnexpectedField { field, kind })
            } else {
                Ok(())
            }
        };
        match self.kind.as_str() {
            "inf" => {
                unexpected("g", self.g.is_some(), "inf")?;
                unexpected("beta", self.beta.is_some(), "inf")?;
                unexpected("w", self.w.is_some(), "inf")?;
                let f = self.f.as_deref().ok_or(SpecError::MissingField("f"))?;
                let a = self.a.ok_or(SpecError::MissingField("a"))?;
                let z = self.z.as_deref().unwrap_or("taper:c=1");
                ZIntegralSpec::infinite(f, self.var.as_deref().unwrap_or("x"), a, z)
            }
            "fin" => {
                unexpected("f", self.f.is_some(), "fin")?;
                unexpected("a", self.a.is_some(), "fin")?;
                unexpected("z", self.z.is_some(), "fin")?;
                let g = self.g.as_deref().ok_or(SpecError::MissingField("g"))?;
                let beta = self.beta.ok_or(SpecError::MissingField("beta"))?;
                let w = self.w.as_deref().unwrap_or("wfromz:taper:c=1");
                ZIntegralSpec::finite(g, self.var.as_deref().unwrap_or("u"), beta, w)
            }
            other => Err(SpecError::UnknownType(other.into())),
        }
    }
}
