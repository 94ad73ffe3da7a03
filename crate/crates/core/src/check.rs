//! Replays a recorded trace against the scheduling rules.
//!
//! The checker only needs the trace itself: the header carries the time
//! models and graphs, and the events carry periods, anchors and influence
//! ids. It reports every violation it finds rather than stopping at the first.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::state::{AgentId, InfluenceId, LevelId};
use crate::time::{Interval, Timestamp, UnionTimeModel};
use crate::trace::{EventKind, Trace, TraceError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rule {
    /// `seq` numbers are contiguous from zero.
    Sequence,
    /// Tick advances strictly increase, enumerate the union ticks, and every
    /// event carries the current tick.
    Clock,
    /// Each level reacts exactly once at each of its ticks after the first,
    /// over the period ending there.
    ReactionSchedule,
    /// Within a tick, every reaction ends before the first perception.
    ReactionBeforePerception,
    /// Perceptions read each perceptible level at its floor.
    PerceptionAnchor,
    /// One revision per agent that perceived at a tick, none for others.
    Revision,
    /// Dispatched influences reach the next reaction of their target.
    Routing,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub rule: Rule,
    pub seq: Option<u64>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.seq {
            Some(seq) => write!(f, "[{}] event {}: {}", self.rule, seq, self.message),
            None => write!(f, "[{}] {}", self.rule, self.message),
        }
    }
}

#[derive(Debug, Default)]
pub struct CheckReport {
    pub events: usize,
    pub violations: Vec<Violation>,
}

impl CheckReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self, rule: Rule) -> usize {
        self.violations.iter().filter(|v| v.rule == rule).count()
    }
}

type Revision = (u64, BTreeSet<LevelId>);

struct Checker<'a> {
    trace: &'a Trace,
    time: UnionTimeModel,
    perception: BTreeSet<(LevelId, LevelId)>,
    influence: BTreeSet<(LevelId, LevelId)>,
    /// Clock value in force at each event.
    clock: Vec<Timestamp>,
    out: Vec<Violation>,
}

impl Checker<'_> {
    fn flag(&mut self, rule: Rule, seq: Option<u64>, message: impl Into<String>) {
        self.out.push(Violation {
            rule,
            seq,
            message: message.into(),
        });
    }

    fn sequence(&mut self) {
        let bad: Vec<(u64, usize)> = self
            .trace
            .events
            .iter()
            .enumerate()
            .filter(|(n, e)| e.seq != *n as u64)
            .map(|(n, e)| (e.seq, n))
            .collect();
        for (seq, n) in bad {
            self.flag(Rule::Sequence, Some(seq), format!("found at position {n}"));
        }
    }

    fn clock(&mut self) {
        let mut clock = self.time.min();
        let mut advances = Vec::new();
        let mut flagged = Vec::new();
        for e in &self.trace.events {
            if e.kind == EventKind::TickAdvance {
                if e.time <= clock {
                    flagged.push((e.seq, format!("clock moves from {clock} to {}", e.time)));
                }
                clock = e.time;
                advances.push(e.time);
            } else if e.time != clock {
                flagged.push((e.seq, format!("{} stamped {} while the clock is {clock}", e.kind, e.time)));
            }
            self.clock.push(clock);
        }
        let expected = &self.time.ticks()[1..];
        if advances != expected {
            let got: BTreeSet<_> = advances.iter().collect();
            let missing: Vec<String> = expected
                .iter()
                .filter(|t| !got.contains(t))
                .map(ToString::to_string)
                .collect();
            flagged.push((
                u64::MAX,
                format!(
                    "tick advances {:?} do not enumerate the union ticks (missing {:?})",
                    advances.iter().map(ToString::to_string).collect::<Vec<_>>(),
                    missing
                ),
            ));
        }
        for (seq, msg) in flagged {
            self.flag(Rule::Clock, (seq != u64::MAX).then_some(seq), msg);
        }
    }

    fn reaction_schedule(&mut self) {
        let mut ends: BTreeMap<LevelId, Vec<Timestamp>> = BTreeMap::new();
        let mut starts: BTreeMap<LevelId, Vec<Timestamp>> = BTreeMap::new();
        let mut flagged = Vec::new();
        for e in &self.trace.events {
            let slot = match e.kind {
                EventKind::ReactionStart => &mut starts,
                EventKind::ReactionEnd => &mut ends,
                _ => continue,
            };
            let Some(level) = &e.level else {
                flagged.push((Some(e.seq), "reaction without level".to_string()));
                continue;
            };
            slot.entry(level.clone()).or_default().push(e.time);
            let Ok(model) = self.time.level(level) else {
                flagged.push((Some(e.seq), format!("reaction of undeclared level {level}")));
                continue;
            };
            let expected = model
                .predecessor(e.time)
                .ok()
                .flatten()
                .map(|lower| Interval { lower, upper: e.time });
            if expected.is_none() || e.period != expected {
                flagged.push((
                    Some(e.seq),
                    format!(
                        "{} of {level} at {} over {}, not a period of the level",
                        e.kind,
                        e.time,
                        e.period.map_or("no period".to_string(), |p| p.to_string())
                    ),
                ));
            }
        }
        for model in self.time.levels() {
            let expected = &model.ticks()[1..];
            for (what, seen) in [("ReactionStart", &starts), ("ReactionEnd", &ends)] {
                let got = seen.get(model.level()).map(Vec::as_slice).unwrap_or(&[]);
                if got != expected {
                    flagged.push((
                        None,
                        format!(
                            "level {}: {what} at {:?}, expected {:?}",
                            model.level(),
                            got.iter().map(ToString::to_string).collect::<Vec<_>>(),
                            expected.iter().map(ToString::to_string).collect::<Vec<_>>()
                        ),
                    ));
                }
            }
        }
        for (seq, msg) in flagged {
            self.flag(Rule::ReactionSchedule, seq, msg);
        }
    }

    fn reaction_before_perception(&mut self) {
        let mut last_end: BTreeMap<Timestamp, usize> = BTreeMap::new();
        for (n, e) in self.trace.events.iter().enumerate() {
            if e.kind == EventKind::ReactionEnd {
                last_end.insert(self.clock[n], n);
            }
        }
        let mut flagged = Vec::new();
        for (n, e) in self.trace.events.iter().enumerate() {
            if e.kind != EventKind::Perception {
                continue;
            }
            if let Some(end) = last_end.get(&self.clock[n]) {
                if *end > n {
                    flagged.push((
                        e.seq,
                        format!(
                            "perception at {} precedes reaction end (event {})",
                            self.clock[n], self.trace.events[*end].seq
                        ),
                    ));
                }
            }
        }
        for (seq, msg) in flagged {
            self.flag(Rule::ReactionBeforePerception, Some(seq), msg);
        }
    }

    fn perception_anchor(&mut self) {
        let mut flagged = Vec::new();
        for e in self.trace.events.iter().filter(|e| e.kind == EventKind::Perception) {
            let (Some(level), Some(anchors)) = (&e.level, &e.anchors) else {
                flagged.push((e.seq, "perception without level or anchors".to_string()));
                continue;
            };
            let t = e.time;
            match self.time.level(level).and_then(|m| m.successor(t)) {
                Ok(upper) if e.period == Some(Interval { lower: t, upper }) => {}
                _ => flagged.push((e.seq, format!("perception of {level} at {t} does not open a period of the level"))),
            }
            let perceptible: BTreeSet<&LevelId> = self
                .perception
                .iter()
                .filter(|(from, _)| from == level)
                .map(|(_, to)| to)
                .collect();
            let anchored: BTreeSet<&LevelId> = anchors.keys().collect();
            if perceptible != anchored {
                flagged.push((e.seq, format!("{level} perceived {anchored:?}, perception graph allows {perceptible:?}")));
            }
            for (target, at) in anchors {
                match self.time.floor_level(target, t) {
                    Ok(floor) if floor == *at => {}
                    Ok(floor) => flagged.push((e.seq, format!("read {target} at {at}, its floor at {t} is {floor}"))),
                    Err(err) => flagged.push((e.seq, format!("anchor on {target}: {err}"))),
                }
            }
        }
        for (seq, msg) in flagged {
            self.flag(Rule::PerceptionAnchor, Some(seq), msg);
        }
    }

    fn revision(&mut self) {
        let mut perceived: BTreeMap<(Timestamp, AgentId), BTreeSet<LevelId>> = BTreeMap::new();
        // (seq, levels combined) of each revision
        let mut revised: BTreeMap<(Timestamp, AgentId), Vec<Revision>> = BTreeMap::new();
        let mut flagged = Vec::new();
        for e in &self.trace.events {
            match (e.kind, e.agent) {
                (EventKind::Perception, Some(a)) => {
                    perceived
                        .entry((e.time, a))
                        .or_default()
                        .extend(e.level.clone());
                }
                (EventKind::GlobalRevision, Some(a)) => {
                    let levels = e.levels.clone().unwrap_or_default().into_iter().collect();
                    revised.entry((e.time, a)).or_default().push((e.seq, levels));
                }
                (EventKind::Perception | EventKind::GlobalRevision, None) => {
                    flagged.push((Some(e.seq), format!("{} without agent", e.kind)));
                }
                _ => {}
            }
        }
        for ((t, a), levels) in &perceived {
            match revised.get(&(*t, *a)) {
                None => flagged.push((None, format!("agent {a} perceived at {t} but was not revised"))),
                Some(revs) => {
                    for (seq, _) in revs.iter().skip(1) {
                        flagged.push((Some(*seq), format!("agent {a} revised {} times at {t}", revs.len())));
                    }
                    let (seq, used) = &revs[0];
                    if used != levels {
                        flagged.push((Some(*seq), format!("revision of agent {a} at {t} combines {used:?}, perceived {levels:?}")));
                    }
                }
            }
        }
        for ((t, a), revs) in &revised {
            if !perceived.contains_key(&(*t, *a)) {
                for (seq, _) in revs {
                    flagged.push((Some(*seq), format!("agent {a} revised at {t} without perceiving")));
                }
            }
        }
        for (seq, msg) in flagged {
            self.flag(Rule::Revision, seq, msg);
        }
    }

    fn routing(&mut self) {
        let events = &self.trace.events;
        let mut producer: BTreeMap<InfluenceId, (LevelId, u64)> = BTreeMap::new();
        let mut flagged = Vec::new();
        for e in events {
            if matches!(e.kind, EventKind::Decision | EventKind::Natural) {
                let Some(level) = &e.level else { continue };
                for id in e.influences.iter().flatten() {
                    if producer.insert(*id, (level.clone(), e.seq)).is_some() {
                        flagged.push((Some(e.seq), format!("influence {id} produced twice")));
                    }
                }
            }
        }
        let mut dispatched: BTreeSet<InfluenceId> = BTreeSet::new();
        for (n, e) in events.iter().enumerate() {
            if e.kind != EventKind::Dispatch {
                continue;
            }
            let (Some(id), Some(target), Some(period)) = (e.influence, &e.target, e.period) else {
                flagged.push((Some(e.seq), "dispatch without influence, target or period".to_string()));
                continue;
            };
            if !dispatched.insert(id) {
                flagged.push((Some(e.seq), format!("influence {id} dispatched twice")));
            }
            if let Some((source, _)) = producer.get(&id) {
                if e.level.as_ref() != Some(source) {
                    flagged.push((Some(e.seq), format!("influence {id} produced in {source} but dispatched from {:?}", e.level)));
                }
                if !self.influence.contains(&(source.clone(), target.clone())) {
                    flagged.push((Some(e.seq), format!("influence graph forbids {source} -> {target}")));
                }
                let expected = self.time.floor_level(target, e.time).and_then(|floor| {
                    let upper = self.time.level(target)?.successor(floor)?;
                    Ok(Interval { lower: floor, upper })
                });
                if expected.as_ref().ok() != Some(&period) {
                    flagged.push((Some(e.seq), format!("influence {id} sent to {target} over {period}, expected the period opened at the floor of {}", e.time)));
                }
            }
            let consumer = events[n + 1..]
                .iter()
                .find(|r| r.kind == EventKind::ReactionStart && r.level.as_ref() == Some(target));
            match consumer {
                None => flagged.push((Some(e.seq), format!("influence {id} never reaches a reaction of {target}"))),
                Some(r) => {
                    if r.period != Some(period) || !r.influences.iter().flatten().any(|i| *i == id) {
                        flagged.push((
                            Some(e.seq),
                            format!("influence {id} missing from the next reaction of {target} (event {})", r.seq),
                        ));
                    }
                }
            }
        }
        for (id, (_, seq)) in &producer {
            if !dispatched.contains(id) {
                flagged.push((Some(*seq), format!("influence {id} was produced but never dispatched")));
            }
        }
        for (seq, msg) in flagged {
            self.flag(Rule::Routing, seq, msg);
        }
    }
}

/// Checks every scheduling rule of [`Rule`] against `trace`.
pub fn check_trace(trace: &Trace) -> Result<CheckReport, TraceError> {
    let time = trace.header.time_model().map_err(|e| TraceError::Malformed {
        line: 1,
        msg: e.to_string(),
    })?;
    let mut checker = Checker {
        trace,
        time,
        perception: trace.header.perception.iter().cloned().collect(),
        influence: trace.header.influence.iter().cloned().collect(),
        clock: Vec::with_capacity(trace.events.len()),
        out: Vec::new(),
    };
    checker.sequence();
    checker.clock();
    checker.reaction_schedule();
    checker.reaction_before_perception();
    checker.perception_anchor();
    checker.revision();
    checker.routing();
    Ok(CheckReport {
        events: trace.events.len(),
        violations: checker.out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_fixture, FixtureParams};

    fn trace() -> Trace {
        let mut f = build_fixture("two-level", &FixtureParams::default()).unwrap();
        f.set_seed(1);
        f.run(&[]).unwrap().trace
    }

    #[test]
    fn recorded_trace_is_clean() {
        let report = check_trace(&trace()).unwrap();
        assert!(report.is_clean(), "{:?}", report.violations);
        assert_eq!(report.events, 49);
    }

    #[test]
    fn gaps_in_seq_are_reported() {
        let mut t = trace();
        t.events[3].seq = 99;
        let report = check_trace(&t).unwrap();
        assert_eq!(report.count(Rule::Sequence), 1);
        assert_eq!(report.violations.len(), 1);
    }

    #[test]
    fn missing_reaction_end_breaks_the_schedule() {
        let mut t = trace();
        let end = t.events.iter().rposition(|e| e.kind == EventKind::ReactionEnd).unwrap();
        t.events.remove(end);
        t.renumber();
        let report = check_trace(&t).unwrap();
        assert_eq!(report.count(Rule::ReactionSchedule), 1, "{:?}", report.violations);
    }

    #[test]
    fn revision_without_perception() {
        let mut t = trace();
        let g = t.events.iter().position(|e| e.kind == EventKind::GlobalRevision).unwrap();
        t.events[g].agent = Some(AgentId(5));
        let report = check_trace(&t).unwrap();
        // agent 0 lost its revision and agent 5 revised without perceiving
        assert_eq!(report.count(Rule::Revision), 2, "{:?}", report.violations);
    }

    #[test]
    fn violations_print_with_rule_and_seq() {
        let v = Violation {
            rule: Rule::Clock,
            seq: Some(4),
            message: "late".into(),
        };
        assert_eq!(v.to_string(), "[Clock] event 4: late");
    }
}
