//! Canonical JSON serialization and plot-series export.
//!
//! Canonical JSON is pretty-printed with two-space indentation, struct
//! fields in declaration order and maps in key order. Reals are written with
//! four decimal places; a real that does not survive that rounding (fitted
//! slopes, for instance) is written in its shortest exact form instead, so
//! parse-then-serialize is always byte-identical and lossless.

use std::io;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};
use thiserror::Error;

use crate::perfmodel::{estimate_q, Modulation, QModel};
use crate::spectrum::NeighborConfig;
use crate::topology::PathMetrics;

/// Decimal places used for reals in canonical output.
pub const REAL_DECIMALS: usize = 4;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("at `{path}` (line {line}, column {column}): {message}")]
pub struct ParseError {
    path: String,
    line: usize,
    column: usize,
    message: String,
}

impl ParseError {
    pub fn path(&self) -> &str {
        &self.path
    }

    pub fn line(&self) -> usize {
        self.line
    }

    pub fn column(&self) -> usize {
        self.column
    }
}

/// Deserializes `text`, reporting the JSON path and location of the first
/// mismatch.
pub fn from_json_str<T: DeserializeOwned>(text: &str) -> Result<T, ParseError> {
    let error = |path: String, inner: serde_json::Error| ParseError {
        path,
        line: inner.line(),
        column: inner.column(),
        message: inner.to_string(),
    };
    let mut de = serde_json::Deserializer::from_str(text);
    let value = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        error(path, e.into_inner())
    })?;
    de.end().map_err(|e| error(".".into(), e))?;
    Ok(value)
}

struct CanonicalFormatter<'a>(PrettyFormatter<'a>);

fn fixed_or_exact(value: f64) -> String {
    let fixed = format!("{value:.prec$}", prec = REAL_DECIMALS);
    match fixed.parse::<f64>() {
        Ok(back) if back == value => fixed,
        // Debug gives the shortest exact form, e.g. `1e-12`, which is valid JSON.
        _ => format!("{value:?}"),
    }
}

impl Formatter for CanonicalFormatter<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(fixed_or_exact(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_array(writer)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object(writer)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object_value(writer)
    }
}

/// Serializes `value` in canonical form, with a trailing newline.
///
/// Non-finite reals have no JSON form and come out as `null`, which will not
/// parse back into an `f64` field.
pub fn to_canonical_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, CanonicalFormatter(PrettyFormatter::new()));
    value
        .serialize(&mut ser)
        .expect("serializing domain types into memory cannot fail");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

/// Serialize, parse, and serialize again; returns the parsed copy when both
/// serializations agree byte for byte.
pub fn round_trip<T: Serialize + DeserializeOwned>(value: &T) -> Result<T, RoundTripError> {
    let first = to_canonical_json(value);
    let parsed: T = from_json_str(&first)?;
    let second = to_canonical_json(&parsed);
    if first != second {
        return Err(RoundTripError::NotCanonical);
    }
    Ok(parsed)
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RoundTripError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("re-serialization differs from the first serialization")]
    NotCanonical,
}

/// A labelled (x, y) series sorted by x.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlotSeries {
    pub label: String,
    pub x_name: String,
    pub y_name: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Error, PartialEq)]
pub enum PlotError {
    #[error("no distances given")]
    EmptyDistances,
    #[error("non-finite value in series: ({0}, {1})")]
    NonFinite(f64, f64),
    #[error("csv line {line}: {message}")]
    Csv { line: usize, message: String },
}

/// Q-value versus distance for one modulation and neighbor context.
pub fn export_q_vs_distance(
    model: &QModel,
    modulation: Modulation,
    neighbors: NeighborConfig,
    distances: &[f64],
) -> Result<PlotSeries, PlotError> {
    if distances.is_empty() {
        return Err(PlotError::EmptyDistances);
    }
    let mut points = Vec::with_capacity(distances.len());
    for &d in distances {
        let q = estimate_q(model, &PathMetrics::with_distance(d), modulation, neighbors).value_db;
        if !d.is_finite() || !q.is_finite() {
            return Err(PlotError::NonFinite(d, q));
        }
        points.push((d, q));
    }
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let context = if neighbors.in_dedicated_partition {
        "dedicated".to_string()
    } else {
        format!(
            "g{}u{}",
            neighbors.guarded_native_count, neighbors.unguarded_native_count
        )
    };
    Ok(PlotSeries {
        label: format!("{modulation} {context}"),
        x_name: "distance_km".into(),
        y_name: "q_db".into(),
        points,
    })
}

impl PlotSeries {
    /// Header `x_name,y_name` followed by one row per point.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{},{}\n", self.x_name, self.y_name);
        for (x, y) in &self.points {
            out.push_str(&format!("{x:.prec$},{y:.prec$}\n", prec = REAL_DECIMALS));
        }
        out
    }

    /// Parses CSV written by [`PlotSeries::to_csv`]. The label is not part
    /// of the CSV form and is supplied by the caller.
    pub fn from_csv(label: &str, text: &str) -> Result<Self, PlotError> {
        let mut lines = text.lines();
        let header = lines.next().ok_or(PlotError::Csv {
            line: 1,
            message: "missing header".into(),
        })?;
        let (x_name, y_name) = header.split_once(',').ok_or(PlotError::Csv {
            line: 1,
            message: "header must be `x_name,y_name`".into(),
        })?;
        let mut points = Vec::new();
        for (i, row) in lines.enumerate() {
            let line = i + 2;
            let bad = |message: &str| PlotError::Csv {
                line,
                message: message.into(),
            };
            let (x, y) = row.split_once(',').ok_or_else(|| bad("expected two columns"))?;
            let x: f64 = x.trim().parse().map_err(|_| bad("x is not a number"))?;
            let y: f64 = y.trim().parse().map_err(|_| bad("y is not a number"))?;
            points.push((x, y));
        }
        Ok(Self {
            label: label.into(),
            x_name: x_name.into(),
            y_name: y_name.into(),
            points,
        })
    }
}
