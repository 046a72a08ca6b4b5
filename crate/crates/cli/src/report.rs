use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use weh_core::{Error, Result};

use crate::config::{RunConfig, SCHEMA_VERSION};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// Failed, and listed in `expect_fail`.
    ExpectedFail,
    /// Passed although listed in `expect_fail`.
    UnexpectedPass,
}

impl Verdict {
    pub fn new(pass: bool, expected_fail: bool) -> Self {
        match (pass, expected_fail) {
            (true, false) => Verdict::Pass,
            (false, false) => Verdict::Fail,
            (false, true) => Verdict::ExpectedFail,
            (true, true) => Verdict::UnexpectedPass,
        }
    }

    /// Whether the run may still exit successfully.
    pub fn acceptable(self) -> bool {
        self != Verdict::Fail
    }
}

/// One check in a report. Non-finite constants are written as the strings `"inf"`, `"-inf"`, `"nan"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    #[serde(with = "float_map")]
    pub constants: BTreeMap<String, f64>,
    pub pass: bool,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vacuous_ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub version: String,
    pub os: String,
    pub arch: String,
}

impl Environment {
    pub fn current() -> Self {
        Environment {
            version: env!("CARGO_PKG_VERSION").to_string(),
            os: std::env::consts::OS.to_string(),
            arch: std::env::consts::ARCH.to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceSummary {
    pub label: String,
    pub n: usize,
    pub diam: f64,
    pub beta: f64,
    pub local_edges: usize,
    pub jump_pairs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub kind: String,
    pub environment: Environment,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<RunConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space: Option<SpaceSummary>,
    #[serde(default)]
    pub checks: Vec<Check>,
    /// Plot rows keyed by table name.
    #[serde(
        default,
        skip_serializing_if = "BTreeMap::is_empty",
        with = "float_tables"
    )]
    pub tables: BTreeMap<String, Vec<BTreeMap<String, f64>>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fragments: Vec<Report>,
    pub pass: bool,
}

impl Report {
    pub fn new(kind: &str, config: &RunConfig, space: SpaceSummary) -> Self {
        Report {
            schema_version: SCHEMA_VERSION,
            kind: kind.to_string(),
            environment: Environment::current(),
            config: Some(config.clone()),
            space: Some(space),
            checks: Vec::new(),
            tables: BTreeMap::new(),
            fragments: Vec::new(),
            pass: true,
        }
    }

    /// Appends a check; its verdict honours the config's `expect_fail` list.
    pub fn push(&mut self, mut check: Check) {
        let expected = self
            .config
            .as_ref()
            .is_some_and(|c| c.expect_fail.contains(&check.name));
        check.verdict = Verdict::new(check.pass, expected);
        self.pass &= check.verdict.acceptable();
        self.checks.push(check);
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text)?;
        let found = v.get("schema_version").and_then(Value::as_u64).unwrap_or(0) as u32;
        if found != SCHEMA_VERSION {
            return Err(Error::SchemaVersion {
                expected: SCHEMA_VERSION,
                found,
            });
        }
        Ok(serde_json::from_value(v)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

fn encode(v: f64) -> Value {
    if v.is_finite() {
        Value::from(v)
    } else if v.is_nan() {
        Value::from("nan")
    } else if v > 0.0 {
        Value::from("inf")
    } else {
        Value::from("-inf")
    }
}

fn decode<E: serde::de::Error>(v: &Value) -> std::result::Result<f64, E> {
    match v {
        Value::Number(n) => n.as_f64().ok_or_else(|| E::custom("number out of range")),
        Value::String(s) if s == "inf" => Ok(f64::INFINITY),
        Value::String(s) if s == "-inf" => Ok(f64::NEG_INFINITY),
        Value::String(s) if s == "nan" => Ok(f64::NAN),
        other => Err(E::custom(format!("expected a number, got {other}"))),
    }
}

mod float_map {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        m: &BTreeMap<String, f64>,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        m.iter()
            .map(|(k, v)| (k.clone(), encode(*v)))
            .collect::<BTreeMap<_, _>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<BTreeMap<String, f64>, D::Error> {
        BTreeMap::<String, Value>::deserialize(d)?
            .into_iter()
            .map(|(k, v)| Ok((k, decode(&v)?)))
            .collect()
    }
}

mod float_tables {
    use super::*;
    use serde::{Deserializer, Serializer};

    type Tables = BTreeMap<String, Vec<BTreeMap<String, f64>>>;

    pub fn serialize<S: Serializer>(t: &Tables, s: S) -> std::result::Result<S::Ok, S::Error> {
        let enc: BTreeMap<&String, Vec<BTreeMap<&String, Value>>> = t
            .iter()
            .map(|(name, rows)| {
                (
                    name,
                    rows.iter()
                        .map(|r| r.iter().map(|(k, v)| (k, encode(*v))).collect())
                        .collect(),
                )
            })
            .collect();
        enc.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Tables, D::Error> {
        let raw = BTreeMap::<String, Vec<BTreeMap<String, Value>>>::deserialize(d)?;
        raw.into_iter()
            .map(|(name, rows)| {
                let rows = rows
                    .into_iter()
                    .map(|r| r.into_iter().map(|(k, v)| Ok((k, decode(&v)?))).collect())
                    .collect::<std::result::Result<_, D::Error>>()?;
                Ok((name, rows))
            })
            .collect()
    }
}

/// Builder for a [`Check`]; the verdict is settled by [`Report::push`].
pub fn check(name: &str, pass: bool) -> Check {
    Check {
        name: name.to_string(),
        constants: BTreeMap::new(),
        pass,
        verdict: Verdict::new(pass, false),
        vacuous_ratio: None,
        witness: None,
        note: None,
    }
}

impl Check {
    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.constants.insert(key.to_string(), value);
        self
    }

    pub fn witness<T: Serialize>(mut self, w: &T) -> Self {
        let v = serde_json::to_value(w).expect("witness serializes");
        if !v.is_null() {
            self.witness = Some(v);
        }
        self
    }

    pub fn note(mut self, note: Option<String>) -> Self {
        self.note = note;
        self
    }

    pub fn vacuous(mut self, non_vacuous: usize, trials: usize) -> Self {
        if trials > 0 {
            self.vacuous_ratio = Some(1.0 - non_vacuous as f64 / trials as f64);
        }
        self
    }

    pub fn constant(&self, key: &str) -> Option<f64> {
        self.constants.get(key).copied()
    }
}
