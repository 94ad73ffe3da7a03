//! Static timelines of a trace.
//!
//! One lane per level and one cell per union tick. A cell starts with `|`
//! when the level is consistent at that tick and `-` while it is inside a
//! transitory period, followed by the operations it ran there: `R`
//! (reaction), `P` (perception), `D` (decision). The `M` lane marks joint
//! global state revisions, and the `state` lane tells whether the whole
//! simulation is consistent (`C`), half-consistent (`H`) or transitory (`T`).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use crate::state::LevelId;
use crate::time::{Consistency, Timestamp};
use crate::trace::{EventKind, Trace, TraceError};

fn tick_label(t: Timestamp) -> String {
    if t.denom() == 1 {
        t.numer().to_string()
    } else {
        t.to_string()
    }
}

struct Timeline {
    ticks: Vec<Timestamp>,
    lanes: Vec<(LevelId, Vec<String>)>,
    revisions: Vec<bool>,
    states: Vec<char>,
}

fn timeline(trace: &Trace) -> Result<Timeline, TraceError> {
    let time = trace.header.time_model().map_err(|e| TraceError::Malformed {
        line: 1,
        msg: e.to_string(),
    })?;
    let ticks = time.ticks().to_vec();
    let column: BTreeMap<Timestamp, usize> = ticks.iter().enumerate().map(|(n, t)| (*t, n)).collect();
    let mut ops: BTreeMap<(LevelId, usize), BTreeSet<u8>> = BTreeMap::new();
    let mut revisions = vec![false; ticks.len()];
    let mut states = vec![' '; ticks.len()];
    for e in &trace.events {
        let Some(&col) = column.get(&e.time) else { continue };
        let glyph = match e.kind {
            EventKind::ReactionEnd => 0,
            EventKind::Perception => 1,
            EventKind::Decision => 2,
            EventKind::GlobalRevision => {
                revisions[col] = true;
                continue;
            }
            EventKind::ConsistencyReport => {
                states[col] = match e.consistency {
                    Some(Consistency::Consistent) => 'C',
                    Some(Consistency::HalfConsistent) => 'H',
                    Some(Consistency::Transitory) => 'T',
                    None => '?',
                };
                continue;
            }
            _ => continue,
        };
        if let Some(level) = &e.level {
            ops.entry((level.clone(), col)).or_default().insert(glyph);
        }
    }
    let lanes = time
        .levels()
        .map(|model| {
            let cells = ticks
                .iter()
                .enumerate()
                .map(|(col, t)| {
                    let mut cell = String::from(if model.contains(*t) { "|" } else { "-" });
                    for g in ops.get(&(model.level().clone(), col)).into_iter().flatten() {
                        cell.push(['R', 'P', 'D'][*g as usize]);
                    }
                    cell
                })
                .collect();
            (model.level().clone(), cells)
        })
        .collect();
    Ok(Timeline {
        ticks,
        lanes,
        revisions,
        states,
    })
}

/// Plain-text timeline, one line per lane.
pub fn render_text(trace: &Trace) -> Result<String, TraceError> {
    let tl = timeline(trace)?;
    let label = tl
        .lanes
        .iter()
        .map(|(l, _)| l.as_str().len())
        .chain([5])
        .max()
        .unwrap_or(5)
        + 2;
    let width = tl
        .ticks
        .iter()
        .map(|t| tick_label(*t).len())
        .chain([4])
        .max()
        .unwrap_or(4)
        + 2;
    let mut out = String::new();
    let mut row = |name: &str, cells: Vec<String>| {
        let mut line = format!("{name:<label$}");
        for c in cells {
            let _ = write!(line, "{c:<width$}");
        }
        out.push_str(line.trim_end());
        out.push('\n');
    };
    row("time", tl.ticks.iter().map(|t| tick_label(*t)).collect());
    for (level, cells) in &tl.lanes {
        row(level.as_str(), cells.clone());
    }
    row("M", tl.revisions.iter().map(|r| if *r { "M" } else { "" }.to_string()).collect());
    row("state", tl.states.iter().map(char::to_string).collect());
    Ok(out)
}

/// SVG rendering of the same timeline.
pub fn render_svg(trace: &Trace) -> Result<String, TraceError> {
    let tl = timeline(trace)?;
    let (left, col, lane_h) = (80, 70, 36);
    let lanes = tl.lanes.len() + 2;
    let w = left + col * tl.ticks.len() + 20;
    let h = lane_h * (lanes + 1);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="monospace" font-size="13">"#
    );
    for (n, t) in tl.ticks.iter().enumerate() {
        let x = left + col * n;
        let _ = writeln!(s, r#"<text x="{x}" y="20">{}</text>"#, tick_label(*t));
    }
    let mut lane = |row: usize, name: &str, cells: Vec<(bool, String)>| {
        let y = lane_h * (row + 1) + 20;
        let _ = writeln!(s, r#"<text x="4" y="{y}">{name}</text>"#);
        let _ = writeln!(
            s,
            r##"<line x1="{left}" y1="{y}" x2="{}" y2="{y}" stroke="#bbb"/>"##,
            w - 20
        );
        for (n, (mark, text)) in cells.into_iter().enumerate() {
            let x = left + col * n;
            if mark {
                let _ = writeln!(
                    s,
                    r#"<line x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="black" stroke-width="2"/>"#,
                    y - 12,
                    y + 6
                );
            }
            if !text.is_empty() {
                let _ = writeln!(s, r#"<text x="{}" y="{}">{text}</text>"#, x + 5, y - 2);
            }
        }
    };
    for (row, (level, cells)) in tl.lanes.iter().enumerate() {
        let cells = cells
            .iter()
            .map(|c| (c.starts_with('|'), c[1..].to_string()))
            .collect();
        lane(row, level.as_str(), cells);
    }
    lane(
        tl.lanes.len(),
        "M",
        tl.revisions.iter().map(|r| (false, if *r { "M".into() } else { String::new() })).collect(),
    );
    lane(
        tl.lanes.len() + 1,
        "state",
        tl.states.iter().map(|c| (false, c.to_string())).collect(),
    );
    s.push_str("</svg>\n");
    Ok(s)
}
