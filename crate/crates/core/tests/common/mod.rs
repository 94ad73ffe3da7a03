#![allow(dead_code)]

use levelsim::models::{build_fixture, FixtureParams, FIXTURES};
use levelsim::trace::{EventKind, Trace};
use levelsim::Timestamp;

pub fn ts(n: i64) -> Timestamp {
    Timestamp::from_integer(n)
}

pub fn fixture_trace(name: &str, seed: u64, params: &FixtureParams) -> Trace {
    let mut f = build_fixture(name, params).unwrap();
    f.set_seed(seed);
    f.run(&[]).unwrap().trace
}

pub fn default_traces(seed: u64) -> Vec<(&'static str, Trace)> {
    FIXTURES
        .iter()
        .map(|name| (*name, fixture_trace(name, seed, &FixtureParams::default())))
        .collect()
}

fn position(trace: &Trace, pred: impl Fn(&levelsim::TraceEvent) -> bool) -> usize {
    trace.events.iter().position(pred).expect("event to mutate")
}

/// Moves the first perception at `t` in front of the last reaction end at `t`.
pub fn reorder_reaction_perception(trace: &mut Trace, t: Timestamp) {
    let p = position(trace, |e| e.kind == EventKind::Perception && e.time == t);
    let r = trace
        .events
        .iter()
        .rposition(|e| e.kind == EventKind::ReactionEnd && e.time == t)
        .expect("a reaction at t");
    let ev = trace.events.remove(p);
    trace.events.insert(r, ev);
    trace.renumber();
}

/// Sends the first dispatch towards `from` to `to` instead.
pub fn retarget_dispatch(trace: &mut Trace, from: &str, to: &str) {
    let d = position(trace, |e| {
        e.kind == EventKind::Dispatch && e.target.as_ref().map(|l| l.as_str()) == Some(from)
    });
    trace.events[d].target = Some(to.into());
}

/// Records the first revision at `t` twice.
pub fn duplicate_revision(trace: &mut Trace, t: Timestamp) {
    let g = position(trace, |e| e.kind == EventKind::GlobalRevision && e.time == t);
    let ev = trace.events[g].clone();
    trace.events.insert(g + 1, ev);
    trace.renumber();
}

/// Drops the advance to `t`.
pub fn skip_tick(trace: &mut Trace, t: Timestamp) {
    let a = position(trace, |e| e.kind == EventKind::TickAdvance && e.time == t);
    trace.events.remove(a);
    trace.renumber();
}

/// Shifts the first anchor of the first perception at `t` to `to`.
pub fn alter_anchor(trace: &mut Trace, t: Timestamp, to: Timestamp) {
    let p = position(trace, |e| e.kind == EventKind::Perception && e.time == t);
    let anchors = trace.events[p].anchors.as_mut().expect("perceptions carry anchors");
    let first = anchors.values_mut().next().expect("a perceived level");
    *first = to;
}
