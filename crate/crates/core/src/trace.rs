//! Engine event trace and its newline-delimited JSON encoding.
//!
//! A trace file starts with one header record describing the time models
//! and interaction graphs, followed by one record per [`TraceEvent`] in
//! emission order.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::state::{AgentId, InfluenceId, InteractionGraphs, LevelId};
use crate::time::{Consistency, Interval, LevelTimeModel, TimeError, Timestamp, UnionTimeModel};

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace sink: {0}")]
    Sink(#[from] io::Error),
    #[error("malformed trace at line {line}: {msg}")]
    Malformed { line: usize, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EventKind {
    ReactionStart,
    ReactionEnd,
    Perception,
    GlobalRevision,
    Decision,
    Natural,
    Dispatch,
    TickAdvance,
    ConsistencyReport,
}

impl EventKind {
    pub const ALL: [EventKind; 9] = [
        EventKind::ReactionStart,
        EventKind::ReactionEnd,
        EventKind::Perception,
        EventKind::GlobalRevision,
        EventKind::Decision,
        EventKind::Natural,
        EventKind::Dispatch,
        EventKind::TickAdvance,
        EventKind::ConsistencyReport,
    ];
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// One engine event. Optional fields are present only for the kinds that use
/// them:
///
/// - `period`: reactions, perceptions, decisions, natural actions (the
///   acting period) and dispatches (the target's transitory period);
/// - `influences`: inputs of a `ReactionStart`, outputs of `Decision` and
///   `Natural`;
/// - `anchors`: for a `Perception`, the consistent instant read in each
///   perceived level;
/// - `levels`: for a `GlobalRevision`, the levels whose perceptions were
///   combined; for a `ConsistencyReport`, the consistent levels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub seq: u64,
    pub kind: EventKind,
    pub time: Timestamp,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<LevelId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agent: Option<AgentId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<Interval>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<LevelId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub influence: Option<InfluenceId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub influences: Option<Vec<InfluenceId>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchors: Option<BTreeMap<LevelId, Timestamp>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<LevelId>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub consistency: Option<Consistency>,
    pub digest: String,
}

impl TraceEvent {
    pub fn new(kind: EventKind, time: Timestamp, digest: String) -> Self {
        TraceEvent {
            seq: 0,
            kind,
            time,
            level: None,
            agent: None,
            period: None,
            target: None,
            influence: None,
            influences: None,
            anchors: None,
            levels: None,
            consistency: None,
            digest,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeaderLevel {
    pub name: LevelId,
    pub ticks: Vec<Timestamp>,
}

/// First record of a trace: everything the checker needs besides the events.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub format: String,
    pub seed: u64,
    pub levels: Vec<HeaderLevel>,
    pub perception: Vec<(LevelId, LevelId)>,
    pub influence: Vec<(LevelId, LevelId)>,
}

pub const TRACE_FORMAT: &str = "levelsim-trace/1";

impl TraceHeader {
    pub fn new(time: &UnionTimeModel, graphs: &InteractionGraphs, seed: u64) -> Self {
        TraceHeader {
            format: TRACE_FORMAT.to_string(),
            seed,
            levels: time
                .levels()
                .map(|m| HeaderLevel {
                    name: m.level().clone(),
                    ticks: m.ticks().to_vec(),
                })
                .collect(),
            perception: graphs.perception_edges().cloned().collect(),
            influence: graphs.influence_edges().cloned().collect(),
        }
    }

    pub fn time_model(&self) -> Result<UnionTimeModel, TimeError> {
        let models = self
            .levels
            .iter()
            .map(|l| LevelTimeModel::new(l.name.clone(), l.ticks.clone()))
            .collect::<Result<Vec<_>, _>>()?;
        UnionTimeModel::new(models)
    }
}

/// A complete trace: header plus events.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub header: TraceHeader,
    pub events: Vec<TraceEvent>,
}

impl Trace {
    pub fn write_ndjson<W: Write>(&self, mut sink: W) -> Result<(), TraceError> {
        writeln!(sink, "{}", serde_json::to_string(&self.header).map_err(io::Error::from)?)?;
        for event in &self.events {
            writeln!(sink, "{}", serde_json::to_string(event).map_err(io::Error::from)?)?;
        }
        sink.flush()?;
        Ok(())
    }

    pub fn to_ndjson(&self) -> String {
        let mut buf = Vec::new();
        self.write_ndjson(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("JSON is UTF-8")
    }

    pub fn read_ndjson<R: BufRead>(source: R) -> Result<Trace, TraceError> {
        let mut header = None;
        let mut events = Vec::new();
        for (n, line) in source.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let malformed = |e: serde_json::Error| TraceError::Malformed {
                line: n + 1,
                msg: e.to_string(),
            };
            if header.is_none() {
                let h: TraceHeader = serde_json::from_str(&line).map_err(malformed)?;
                if h.format != TRACE_FORMAT {
                    return Err(TraceError::Malformed {
                        line: n + 1,
                        msg: format!("unsupported format {:?}", h.format),
                    });
                }
                header = Some(h);
            } else {
                events.push(serde_json::from_str(&line).map_err(malformed)?);
            }
        }
        let header = header.ok_or(TraceError::Malformed {
            line: 0,
            msg: "empty trace".into(),
        })?;
        Ok(Trace { header, events })
    }

    /// Number of events per kind and level (`None` for level-less events).
    pub fn counts(&self) -> BTreeMap<(EventKind, Option<LevelId>), usize> {
        let mut out = BTreeMap::new();
        for e in &self.events {
            *out.entry((e.kind, e.level.clone())).or_insert(0) += 1;
        }
        out
    }

    pub fn count(&self, kind: EventKind, level: Option<&str>) -> usize {
        self.events
            .iter()
            .filter(|e| e.kind == kind && level.is_none_or(|l| e.level.as_ref().map(LevelId::as_str) == Some(l)))
            .count()
    }

    /// Renumbers `seq` after events were edited by hand.
    pub fn renumber(&mut self) {
        for (n, e) in self.events.iter_mut().enumerate() {
            e.seq = n as u64;
        }
    }
}
