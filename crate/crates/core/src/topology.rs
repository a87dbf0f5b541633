//! Host network model: ROADM nodes joined by fiber spans, and per-path
//! metric aggregation (distance, attenuation, OLA / ROADM / Raman counts).
//!
//! Optical line amplifier sites are not graph nodes. A link between two
//! nodes is the ordered set of spans joining them; every span that ends on
//! an OLA site carries `has_inline_ola`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Node {
    pub id: String,
    pub name: String,
    pub has_roadm: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Amplifier {
    #[serde(rename = "EDFA")]
    Edfa,
    #[serde(rename = "Raman")]
    Raman,
}

/// One amplified fiber section. Spans are bidirectional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Span {
    pub from: String,
    pub to: String,
    pub length_km: f64,
    pub attenuation_db: f64,
    pub amplifier: Amplifier,
    pub dcm_present: bool,
    /// The span ends on a line amplifier site rather than on `to`'s ROADM.
    pub has_inline_ola: bool,
}

impl Span {
    fn joins(&self, a: &str, b: &str) -> bool {
        (self.from == a && self.to == b) || (self.from == b && self.to == a)
    }
}

/// Aggregated figures for a path.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathMetrics {
    pub distance_km: f64,
    pub attenuation_db: f64,
    pub ola_count: u32,
    pub roadm_count: u32,
    pub raman_span_count: u32,
}

impl PathMetrics {
    /// Metrics of a path that covers `distance_km` and nothing else; used for
    /// what-if estimates where only reach matters.
    pub fn with_distance(distance_km: f64) -> Self {
        Self {
            distance_km,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TopologyViolationCode {
    EmptyNodeId,
    DuplicateNode,
    DanglingEndpoint,
    SelfLoop,
    NegativeLength,
    NegativeAttenuation,
    NonFiniteValue,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopologyViolation {
    pub code: TopologyViolationCode,
    pub message: String,
}

#[derive(Debug, Error, PartialEq)]
pub enum TopologyError {
    #[error("schema violation at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("span {span} references unknown node `{node}`")]
    DanglingEndpoint { span: usize, node: String },
    #[error("duplicate node id `{0}`")]
    DuplicateNode(String),
    #[error("invalid topology: {0}")]
    Invalid(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PathError {
    #[error("empty node sequence")]
    EmptySequence,
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("no span connects `{0}` and `{1}`")]
    Disconnected(String, String),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkTopology {
    nodes: Vec<Node>,
    spans: Vec<Span>,
}

impl NetworkTopology {
    /// Builds a topology, rejecting it if any invariant is violated.
    pub fn new(nodes: Vec<Node>, spans: Vec<Span>) -> Result<Self, TopologyError> {
        let topo = Self { nodes, spans };
        topo.check()?;
        Ok(topo)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn spans(&self) -> &[Span] {
        &self.spans
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes.iter().find(|n| n.id == id)
    }

    fn check(&self) -> Result<(), TopologyError> {
        let mut seen = BTreeSet::new();
        for node in &self.nodes {
            if !seen.insert(node.id.as_str()) {
                return Err(TopologyError::DuplicateNode(node.id.clone()));
            }
        }
        for (i, span) in self.spans.iter().enumerate() {
            for end in [&span.from, &span.to] {
                if !seen.contains(end.as_str()) {
                    return Err(TopologyError::DanglingEndpoint {
                        span: i,
                        node: end.clone(),
                    });
                }
            }
        }
        match validate_topology(self).into_iter().next() {
            Some(v) => Err(TopologyError::Invalid(v.message)),
            None => Ok(()),
        }
    }

    /// Sums every span on each hop of `node_sequence`.
    pub fn aggregate_path<S: AsRef<str>>(&self, node_sequence: &[S]) -> Result<PathMetrics, PathError> {
        let first = node_sequence.first().ok_or(PathError::EmptySequence)?;
        let mut metrics = PathMetrics::default();
        let mut roadm = |id: &str| -> Result<(), PathError> {
            let node = self.node(id).ok_or_else(|| PathError::UnknownNode(id.to_string()))?;
            metrics.roadm_count += u32::from(node.has_roadm);
            Ok(())
        };
        roadm(first.as_ref())?;
        for hop in node_sequence.windows(2) {
            roadm(hop[1].as_ref())?;
        }
        for hop in node_sequence.windows(2) {
            let (a, b) = (hop[0].as_ref(), hop[1].as_ref());
            let mut connected = false;
            for span in self.spans.iter().filter(|s| s.joins(a, b)) {
                connected = true;
                metrics.distance_km += span.length_km;
                metrics.attenuation_db += span.attenuation_db;
                metrics.ola_count += u32::from(span.has_inline_ola);
                metrics.raman_span_count += u32::from(span.amplifier == Amplifier::Raman);
            }
            if !connected {
                return Err(PathError::Disconnected(a.to_string(), b.to_string()));
            }
        }
        Ok(metrics)
    }
}

/// Parses a topology document and enforces every invariant.
pub fn parse_topology(document: &str) -> Result<NetworkTopology, TopologyError> {
    let raw: NetworkTopology = crate::iofmt::from_json_str(document).map_err(|e| TopologyError::Schema {
        path: e.path().to_string(),
        message: e.to_string(),
    })?;
    raw.check()?;
    Ok(raw)
}

/// Lists every invariant violation; an empty list means the topology is valid.
pub fn validate_topology(topology: &NetworkTopology) -> Vec<TopologyViolation> {
    use TopologyViolationCode::*;
    let mut out = Vec::new();
    let mut push = |code, message: String| out.push(TopologyViolation { code, message });

    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for node in &topology.nodes {
        if node.id.is_empty() {
            push(EmptyNodeId, format!("node `{}` has an empty id", node.name));
        }
        *counts.entry(node.id.as_str()).or_default() += 1;
    }
    for (id, n) in &counts {
        if *n > 1 {
            push(DuplicateNode, format!("node id `{id}` appears {n} times"));
        }
    }
    for (i, span) in topology.spans.iter().enumerate() {
        for end in [&span.from, &span.to] {
            if !counts.contains_key(end.as_str()) {
                push(DanglingEndpoint, format!("span {i} references unknown node `{end}`"));
            }
        }
        if span.from == span.to {
            push(SelfLoop, format!("span {i} starts and ends at `{}`", span.from));
        }
        if !span.length_km.is_finite() || !span.attenuation_db.is_finite() {
            push(
                NonFiniteValue,
                format!("span {i} has a non-finite length or attenuation"),
            );
            continue;
        }
        if span.length_km <= 0.0 {
            push(
                NegativeLength,
                format!("span {i} length {} km is not positive", span.length_km),
            );
        }
        if span.attenuation_db <= 0.0 {
            push(
                NegativeAttenuation,
                format!("span {i} attenuation {} dB is not positive", span.attenuation_db),
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use TopologyViolationCode::*;

    fn node(id: &str, has_roadm: bool) -> Node {
        Node {
            id: id.into(),
            name: id.into(),
            has_roadm,
        }
    }

    fn span(from: &str, to: &str, km: f64, db: f64) -> Span {
        Span {
            from: from.into(),
            to: to.into(),
            length_km: km,
            attenuation_db: db,
            amplifier: Amplifier::Edfa,
            dcm_present: true,
            has_inline_ola: false,
        }
    }

    fn chain() -> NetworkTopology {
        NetworkTopology::new(
            vec![node("A", true), node("B", true), node("C", false), node("D", true)],
            vec![
                span("A", "B", 10.0, 3.0),
                span("B", "C", 20.0, 5.0),
                span("C", "D", 30.0, 7.0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn parses_two_node_document() {
        let doc = r#"{"nodes":[{"id":"BO1","name":"Bologna","has_roadm":true},
            {"id":"MI1","name":"Milano","has_roadm":true}],
            "spans":[{"from":"BO1","to":"MI1","length_km":277,"attenuation_db":78,
            "amplifier":"EDFA","dcm_present":true,"has_inline_ola":false}]}"#;
        let topo = parse_topology(doc).unwrap();
        assert_eq!(topo.nodes().len(), 2);
        assert_eq!(topo.spans().len(), 1);
    }

    #[test]
    fn single_node_document_is_valid() {
        let doc = r#"{"nodes":[{"id":"A","name":"a","has_roadm":true}],"spans":[]}"#;
        let topo = parse_topology(doc).unwrap();
        assert_eq!(
            topo.aggregate_path(&["A"]).unwrap(),
            PathMetrics {
                roadm_count: 1,
                ..PathMetrics::default()
            }
        );
    }

    #[test]
    fn dangling_endpoint_is_rejected() {
        let doc = r#"{"nodes":[{"id":"A","name":"a","has_roadm":true}],
            "spans":[{"from":"A","to":"XX","length_km":1,"attenuation_db":1,
            "amplifier":"Raman","dcm_present":false,"has_inline_ola":false}]}"#;
        assert_eq!(
            parse_topology(doc).unwrap_err(),
            TopologyError::DanglingEndpoint {
                span: 0,
                node: "XX".into()
            }
        );
    }

    #[test]
    fn schema_error_names_field() {
        let doc = r#"{"nodes":[{"id":"A","name":"a","has_roadm":"yes"}],"spans":[]}"#;
        match parse_topology(doc).unwrap_err() {
            TopologyError::Schema { path, .. } => assert_eq!(path, "nodes[0].has_roadm"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_node_is_rejected_on_parse() {
        let doc =
            r#"{"nodes":[{"id":"A","name":"a","has_roadm":true},{"id":"A","name":"b","has_roadm":false}],"spans":[]}"#;
        assert_eq!(
            parse_topology(doc).unwrap_err(),
            TopologyError::DuplicateNode("A".into())
        );
    }

    #[test]
    fn validate_reports_codes() {
        assert!(validate_topology(&chain()).is_empty());

        let mut bad = chain();
        bad.spans[1].length_km = -5.0;
        let codes: Vec<_> = validate_topology(&bad).into_iter().map(|v| v.code).collect();
        assert_eq!(codes, vec![NegativeLength]);

        let mut dup = chain();
        dup.nodes.push(node("A", false));
        let codes: Vec<_> = validate_topology(&dup).into_iter().map(|v| v.code).collect();
        assert_eq!(codes, vec![DuplicateNode]);

        let mut looped = chain();
        looped.spans[0].to = "A".into();
        assert_eq!(validate_topology(&looped)[0].code, SelfLoop);
    }

    #[test]
    fn aggregates_chain() {
        let m = chain().aggregate_path(&["A", "B", "C", "D"]).unwrap();
        assert_eq!(m.distance_km, 60.0);
        assert_eq!(m.attenuation_db, 15.0);
        assert_eq!(m.roadm_count, 3);
    }

    #[test]
    fn sums_parallel_spans_through_ola_sites() {
        let mut s1 = span("A", "B", 100.0, 20.0);
        s1.has_inline_ola = true;
        let mut s2 = span("B", "A", 50.0, 12.0);
        s2.amplifier = Amplifier::Raman;
        let topo = NetworkTopology::new(vec![node("A", true), node("B", true)], vec![s1, s2]).unwrap();
        assert_eq!(
            topo.aggregate_path(&["A", "B"]).unwrap(),
            PathMetrics {
                distance_km: 150.0,
                attenuation_db: 32.0,
                ola_count: 1,
                roadm_count: 2,
                raman_span_count: 1
            }
        );
    }

    #[test]
    fn path_errors() {
        let topo = chain();
        let empty: [&str; 0] = [];
        assert_eq!(topo.aggregate_path(&empty).unwrap_err(), PathError::EmptySequence);
        assert_eq!(
            topo.aggregate_path(&["A", "C"]).unwrap_err(),
            PathError::Disconnected("A".into(), "C".into())
        );
        assert_eq!(
            topo.aggregate_path(&["Z"]).unwrap_err(),
            PathError::UnknownNode("Z".into())
        );
    }

    #[test]
    fn reversal_is_symmetric() {
        let topo = chain();
        assert_eq!(
            topo.aggregate_path(&["A", "B", "C", "D"]).unwrap(),
            topo.aggregate_path(&["D", "C", "B", "A"]).unwrap()
        );
    }
}
