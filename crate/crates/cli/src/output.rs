use std::io::Write;
use std::path::Path;

use anyhow::Context;
use serde::Serialize;
use serde_json::{json, Map, Value};

use qgroup::extcheck::ExtError;
use qgroup::foxrank::{FoxError, LevelRecord};
use qgroup::magnus::MagnusError;
use qgroup::pquot::QuotientError;
use qgroup::scalars::ScalarError;
use qgroup::wordexpr::ParseError;

use crate::args::{Cli, Command};

pub const SCHEMA: &str = "v1";

pub const EXIT_OK: u8 = 0;
pub const EXIT_OTHER: u8 = 1;
pub const EXIT_PARSE: u8 = 2;
pub const EXIT_INCONCLUSIVE: u8 = 3;
pub const EXIT_RELATOR: u8 = 4;
pub const EXIT_CAP: u8 = 5;

/// A finished report and the exit code to return with it.
pub struct Outcome {
    pub json: Value,
    pub code: u8,
}

impl Outcome {
    pub fn ok(cli: &Cli, body: impl Serialize) -> Result<Self, Failure> {
        Ok(Outcome {
            json: report(cli, body)?,
            code: EXIT_OK,
        })
    }
}

#[derive(Debug)]
pub enum Failure {
    Parse { message: String, position: Option<usize> },
    Config(String),
    Relator { relator: String, level: usize },
    Cap { cap: usize, reached: usize, completed: Vec<LevelRecord> },
    Other(anyhow::Error),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Parse { .. } => EXIT_PARSE,
            Failure::Relator { .. } => EXIT_RELATOR,
            Failure::Cap { .. } => EXIT_CAP,
            Failure::Config(_) | Failure::Other(_) => EXIT_OTHER,
        }
    }

    /// Attach levels finished before a cap was hit.
    pub fn with_completed(self, done: Vec<LevelRecord>) -> Self {
        match self {
            Failure::Cap { cap, reached, .. } => Failure::Cap {
                cap,
                reached,
                completed: done,
            },
            f => f,
        }
    }

    pub fn to_json(&self, cli: &Cli) -> Value {
        let error = match self {
            Failure::Parse { message, position } => json!({
                "kind": "parse",
                "message": message,
                "position": position,
            }),
            Failure::Config(message) => json!({ "kind": "config", "message": message }),
            Failure::Relator { relator, level } => json!({
                "kind": "relator_violation",
                "message": format!("relator `{relator}` does not vanish in the level-{level} quotient"),
                "relator": relator,
                "level": level,
            }),
            Failure::Cap { cap, reached, completed } => json!({
                "kind": "cap_exceeded",
                "message": format!("enumeration cap {cap} exceeded ({reached} elements reached)"),
                "cap": cap,
                "reached": reached,
                "completed_levels": completed,
            }),
            Failure::Other(e) => json!({ "kind": "error", "message": format!("{e:#}") }),
        };
        json!({ "schema": SCHEMA, "manifest": manifest(cli), "error": error })
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Other(e)
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Other(e.into())
    }
}

impl From<ParseError> for Failure {
    fn from(e: ParseError) -> Self {
        Failure::Parse {
            position: Some(e.position()),
            message: e.to_string(),
        }
    }
}

impl From<ScalarError> for Failure {
    fn from(e: ScalarError) -> Self {
        match e {
            ScalarError::InvalidLiteral(_) => Failure::Parse {
                message: e.to_string(),
                position: None,
            },
            ScalarError::NotPrime(_) => Failure::Config(e.to_string()),
            e => Failure::Other(e.into()),
        }
    }
}

impl From<MagnusError> for Failure {
    fn from(e: MagnusError) -> Self {
        match e {
            MagnusError::UnknownGenerator(_) => Failure::Parse {
                message: e.to_string(),
                position: None,
            },
            MagnusError::InvalidSchedule(_) => Failure::Config(e.to_string()),
            e => Failure::Other(e.into()),
        }
    }
}

impl From<QuotientError> for Failure {
    fn from(e: QuotientError) -> Self {
        match e {
            QuotientError::CapExceeded { cap, reached } => Failure::Cap {
                cap,
                reached,
                completed: Vec::new(),
            },
            QuotientError::RelatorViolation { relator, level } => Failure::Relator { relator, level },
            QuotientError::InvalidLevel(_) => Failure::Config(e.to_string()),
            QuotientError::Scalar(s) => s.into(),
            QuotientError::Eval(m) => m.into(),
            e => Failure::Other(e.into()),
        }
    }
}

impl From<FoxError> for Failure {
    fn from(e: FoxError) -> Self {
        match e {
            FoxError::Quotient(q) => q.into(),
            FoxError::Parse(p) => p.into(),
            FoxError::UnknownGenerator(_)
            | FoxError::DuplicateGenerator(_)
            | FoxError::EmptyRelator(_)
            | FoxError::NonIntegerRelator(_) => Failure::Parse {
                message: e.to_string(),
                position: None,
            },
            FoxError::ZeroRank => Failure::Config(e.to_string()),
            e => Failure::Other(e.into()),
        }
    }
}

impl From<ExtError> for Failure {
    fn from(e: ExtError) -> Self {
        match e {
            ExtError::Fox(f) => f.into(),
            ExtError::Scalar(s) => s.into(),
            e => Failure::Config(e.to_string()),
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Eval(_) => "eval",
        Command::Certify(_) => "certify",
        Command::Beta1(_) => "beta1",
        Command::Amalgam(_) => "amalgam",
        Command::Extend(_) => "extend",
        Command::QuotientInfo(_) => "quotient-info",
        Command::Probe(_) => "probe",
        Command::Sylvester(_) => "sylvester",
    }
}

/// Tool version and the full command configuration; no clock or host data.
pub fn manifest(cli: &Cli) -> Value {
    json!({
        "tool": "qgroup",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command_name(&cli.command),
        "config": serde_json::to_value(&cli.command).unwrap_or(Value::Null),
    })
}

/// Wrap `body` with the schema tag and manifest; object bodies are merged in.
pub fn report(cli: &Cli, body: impl Serialize) -> Result<Value, Failure> {
    let mut out = Map::new();
    out.insert("schema".into(), SCHEMA.into());
    out.insert("manifest".into(), manifest(cli));
    match serde_json::to_value(body)? {
        Value::Object(m) => out.extend(m),
        v => {
            out.insert("result".into(), v);
        }
    }
    Ok(Value::Object(out))
}

pub fn emit(json: &Value, path: Option<&Path>) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(json)?;
    text.push('\n');
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}
