use std::fmt::Display;
use std::io::IsTerminal;
use std::path::{Path, PathBuf};

use awplan_core::iofmt::ParseError;
use serde::Serialize;

/// A user-facing error; always maps to exit code 2.
#[derive(Debug, Serialize)]
pub struct Failure {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub location: Option<Location>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub details: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct Location {
    pub json_path: String,
    pub line: usize,
    pub column: usize,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            file: None,
            message: message.into(),
            location: None,
            details: Vec::new(),
        }
    }

    pub fn input(file: Option<&Path>, message: impl Display) -> Self {
        Self {
            file: file.map(Path::to_path_buf),
            ..Self::usage(message.to_string())
        }
    }

    pub fn io(file: &Path, err: std::io::Error) -> Self {
        Self::input(Some(file), format!("cannot access `{}`: {err}", file.display()))
    }

    pub fn parse(file: &Path, err: &ParseError) -> Self {
        Self {
            location: Some(Location {
                json_path: err.path().to_string(),
                line: err.line(),
                column: err.column(),
            }),
            ..Self::input(Some(file), format!("`{}` {err}", file.display()))
        }
    }

    pub fn invalid(file: &Path, details: Vec<String>) -> Self {
        Self {
            details,
            ..Self::input(Some(file), format!("`{}` failed validation", file.display()))
        }
    }
}

pub struct Diagnostics {
    json: bool,
    color: bool,
}

#[derive(Serialize)]
struct Line<'a> {
    level: &'a str,
    #[serde(flatten)]
    body: Body<'a>,
}

#[derive(Serialize)]
#[serde(untagged)]
enum Body<'a> {
    Failure(&'a Failure),
    Message { message: &'a str },
}

impl Diagnostics {
    pub fn from_env(json: bool) -> Self {
        let color = std::env::var_os("AWPLAN_NO_COLOR").is_none() && std::io::stderr().is_terminal();
        Self { json, color }
    }

    fn emit(&self, level: &str, ansi: &str, body: Body<'_>) {
        if self.json {
            let line = serde_json::to_string(&Line { level, body }).expect("diagnostic serializes");
            eprintln!("{line}");
            return;
        }
        let tag = if self.color {
            format!("\x1b[{ansi}m{level}:\x1b[0m")
        } else {
            format!("{level}:")
        };
        match body {
            Body::Message { message } => eprintln!("{tag} {message}"),
            Body::Failure(f) => {
                eprintln!("{tag} {}", f.message);
                for d in &f.details {
                    eprintln!("  - {d}");
                }
            }
        }
    }

    pub fn failure(&self, f: &Failure) {
        self.emit("error", "1;31", Body::Failure(f));
    }

    pub fn warning(&self, message: &str) {
        self.emit("warning", "1;33", Body::Message { message });
    }

    pub fn note(&self, message: &str) {
        self.emit("note", "1;36", Body::Message { message });
    }
}
