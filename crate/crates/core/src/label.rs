use alloc::format;
use alloc::string::String;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

/// Binary detection label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Vul,
    Ben,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Vul => "vul",
            Label::Ben => "ben",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown label '{0}', expected 'vul' or 'ben'")]
pub struct UnknownLabel(pub String);

impl FromStr for Label {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "vul" => Ok(Label::Vul),
            "ben" => Ok(Label::Ben),
            other => Err(UnknownLabel(other.into())),
        }
    }
}

/// A CWE identifier in canonical `CWE-<digits>` form.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Cwe(String);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("'{0}' is not a CWE identifier of the form CWE-<digits>")]
pub struct InvalidCwe(pub String);

impl Cwe {
    /// Parse `CWE-<digits>`, accepting any letter case for the prefix.
    pub fn parse(s: &str) -> Result<Self, InvalidCwe> {
        let s = s.trim();
        let digits = s
            .get(..4)
            .filter(|p| p.eq_ignore_ascii_case("cwe-"))
            .map(|_| &s[4..])
            .ok_or_else(|| InvalidCwe(s.into()))?;
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(InvalidCwe(s.into()));
        }
        let mut canonical = String::from("CWE-");
        canonical.push_str(digits);
        Ok(Cwe(canonical))
    }

    /// First `CWE-<digits>` occurrence anywhere in `text`.
    pub fn find_in(text: &str) -> Option<Self> {
        let bytes = text.as_bytes();
        (0..bytes.len()).find_map(|pos| {
            let prefix = bytes.get(pos..pos + 4)?;
            if !prefix.eq_ignore_ascii_case(b"cwe-") {
                return None;
            }
            if pos > 0 && bytes[pos - 1].is_ascii_alphanumeric() {
                return None;
            }
            let digits = bytes[pos + 4..].iter().take_while(|b| b.is_ascii_digit()).count();
            (digits > 0).then(|| Cwe(format!("CWE-{}", &text[pos + 4..pos + 4 + digits])))
        })
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Cwe {
    type Error = InvalidCwe;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Cwe::parse(&value)
    }
}

impl From<Cwe> for String {
    fn from(value: Cwe) -> Self {
        value.0
    }
}

impl FromStr for Cwe {
    type Err = InvalidCwe;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Cwe::parse(s)
    }
}

impl fmt::Display for Cwe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}
