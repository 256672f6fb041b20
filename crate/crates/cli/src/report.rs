//! Failure classes, exit codes and the JSON run report.

use std::fmt;
use std::path::Path;

use serde_json::{json, Value};

use crate::config::RunConfig;

#[derive(Debug)]
pub enum Failure {
    /// The config file is unreadable, malformed or incomplete.
    Config(String),
    Core(starsync::Error),
}

impl Failure {
    pub fn code(&self) -> &'static str {
        match self {
            Failure::Config(_) => "config",
            Failure::Core(e) => e.code(),
        }
    }

    /// 1 for bad input, 2 for numerical or resource failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Core(e) if e.is_parameter_error() => 1,
            Failure::Core(_) => 2,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(msg) => write!(f, "config error: {msg}"),
            Failure::Core(e) => e.fmt(f),
        }
    }
}

impl From<starsync::Error> for Failure {
    fn from(e: starsync::Error) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Core(e.into())
    }
}

pub fn build(command: &str, config: Option<&RunConfig>, outcome: &Result<Value, Failure>) -> Value {
    let (status, exit, error, results) = match outcome {
        Ok(results) => ("ok", 0, Value::Null, results.clone()),
        Err(f) => (
            "error",
            f.exit_code(),
            json!({ "code": f.code(), "message": f.to_string() }),
            Value::Null,
        ),
    };
    json!({
        "command": command,
        "status": status,
        "exit_code": exit,
        "error": error,
        "config": config.map_or(Value::Null, |c| serde_json::to_value(c).expect("config serializes")),
        "results": results,
    })
}

pub fn write(dir: &Path, report: &Value) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut text = serde_json::to_string_pretty(report).expect("report serializes");
    text.push('\n');
    std::fs::write(dir.join("report.json"), text)
}
