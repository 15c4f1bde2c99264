//! `kind:key=value,key=value` strings used on the command line and in corpus
//! files for tapers and transforms.

use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpecStringError {
    #[error("malformed spec string `{text}`: {reason}")]
    Malformed { text: String, reason: String },
    #[error("`{kind}` does not take parameter `{key}`")]
    UnknownKey { kind: String, key: String },
    #[error("parameter `{key}` of `{kind}` is missing")]
    MissingKey { kind: String, key: String },
    #[error("parameter `{key}` must be a finite number, got `{value}`")]
    NotANumber { key: String, value: String },
    #[error("unknown kind `{0}`")]
    UnknownKind(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpecString {
    pub kind: String,
    params: BTreeMap<String, String>,
}

impl SpecString {
    pub fn parse(text: &str) -> Result<SpecString, SpecStringError> {
        let text = text.trim();
        let (kind, rest) = match text.split_once(':') {
            Some((k, r)) => (k.trim(), r.trim()),
            None => (text, ""),
        };
        if kind.is_empty() || !kind.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return Err(SpecStringError::Malformed {
                text: text.into(),
                reason: "expected `kind:key=value,...`".into(),
            });
        }
        let mut params = BTreeMap::new();
        if !rest.is_empty() {
            for item in rest.split(',') {
                let (key, value) = item.split_once('=').ok_or_else(|| SpecStringError::Malformed {
                    text: text.into(),
                    reason: format!("`{item}` is not `key=value`"),
                })?;
                let key = key.trim();
                if key.is_empty() || params.insert(key.to_string(), value.trim().to_string()).is_some() {
                    return Err(SpecStringError::Malformed {
                        text: text.into(),
                        reason: format!("empty or repeated key in `{item}`"),
                    });
                }
            }
        }
        Ok(SpecString {
            kind: kind.to_string(),
            params,
        })
    }

    /// Reject any key outside `allowed`.
    pub fn expect_keys(&self, allowed: &[&str]) -> Result<(), SpecStringError> {
        match self.params.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(key) => Err(SpecStringError::UnknownKey {
                kind: self.kind.clone(),
                key: key.clone(),
            }),
            None => Ok(()),
        }
    }

    pub fn text(&self, key: &str) -> Result<&str, SpecStringError> {
        self.params
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| SpecStringError::MissingKey {
                kind: self.kind.clone(),
                key: key.into(),
            })
    }

    pub fn number_or(&self, key: &str, default: Option<f64>) -> Result<f64, SpecStringError> {
        match self.params.get(key) {
            Some(raw) => match raw.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(SpecStringError::NotANumber {
                    key: key.into(),
                    value: raw.clone(),
                }),
            },
            None => default.ok_or_else(|| SpecStringError::MissingKey {
                kind: self.kind.clone(),
                key: key.into(),
            }),
        }
    }

    pub fn number(&self, key: &str) -> Result<f64, SpecStringError> {
        self.number_or(key, None)
    }
}

/// Shortest round-tripping decimal form of a float.
pub(crate) fn num(v: f64) -> String {
    format!("{v}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_kind_and_params() {
        let s = SpecString::parse("matched:omega=1.5, c=2").unwrap();
        assert_eq!(s.kind, "matched");
        assert_eq!(s.number("omega").unwrap(), 1.5);
        assert_eq!(s.number("c").unwrap(), 2.0);
        assert_eq!(s.number_or("scale", Some(1.0)).unwrap(), 1.0);
        assert!(s.expect_keys(&["omega", "c"]).is_ok());
        assert!(matches!(
            s.expect_keys(&["omega"]),
            Err(SpecStringError::UnknownKey { key, .. }) if key == "c"
        ));
    }

    #[test]
    fn bare_kind_and_errors() {
        assert_eq!(SpecString::parse("taper").unwrap().kind, "taper");
        assert!(SpecString::parse(":c=1").is_err());
        assert!(SpecString::parse("taper:c").is_err());
        assert!(SpecString::parse("taper:c=1,c=2").is_err());
        let s = SpecString::parse("taper:c=abc").unwrap();
        assert!(matches!(s.number("c"), Err(SpecStringError::NotANumber { .. })));
        assert!(matches!(s.number("d"), Err(SpecStringError::MissingKey { .. })));
    }
}
