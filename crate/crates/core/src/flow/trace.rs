use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::book::{BookState, EventKind, ModelParams, Side};

/// One recorded event: time, kind, and the mid/spread of the state right
/// after it.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceEvent {
    pub t: f64,
    pub event: EventKind,
    pub mid_half_ticks: i64,
    pub spread_ticks: u32,
}

/// Full book state recorded at an event time, together with how long the
/// chain stayed in it (the time to the following event). The holding time is
/// what makes time-weighted stationary estimators consistent.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub state: BookState,
    pub holding_dt: f64,
}

/// Time-stamped path of one simulation run, recorded after burn-in.
///
/// `initial_mid_half_ticks` and `initial_spread_ticks` describe the state at
/// the end of burn-in (time `t_start`), so event-time price increments are
/// first differences of `[initial_mid, events[0].mid, events[1].mid, ...]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub seed: u64,
    pub stream: u64,
    pub params_digest: String,
    pub t_start: f64,
    pub initial_mid_half_ticks: i64,
    pub initial_spread_ticks: u32,
    pub events: Vec<TraceEvent>,
    pub snapshots: Vec<Snapshot>,
    /// True if the total rate hit zero mid-run and the trace was truncated.
    pub halted: bool,
}

impl Trace {
    pub fn n_events(&self) -> usize {
        self.events.len()
    }

    /// Mid-price path in half-ticks, including the initial value: length
    /// `n_events + 1`.
    pub fn mid_path(&self) -> Vec<i64> {
        let mut path = Vec::with_capacity(self.events.len() + 1);
        path.push(self.initial_mid_half_ticks);
        path.extend(self.events.iter().map(|e| e.mid_half_ticks));
        path
    }
}

pub const EVENTS_CSV_HEADER: &str = "t_model_time,event_code,mid_half_ticks,spread_ticks";

/// Write the event stream as CSV (`t, event code, mid, spread`). Times use
/// shortest-roundtrip formatting, so identical runs produce byte-identical
/// files and parsing recovers the exact values.
pub fn write_events_csv<W: Write>(trace: &Trace, levels: usize, mut out: W) -> io::Result<()> {
    writeln!(out, "{EVENTS_CSV_HEADER}")?;
    for e in &trace.events {
        writeln!(
            out,
            "{},{},{},{}",
            e.t,
            e.event.code(levels),
            e.mid_half_ticks,
            e.spread_ticks
        )?;
    }
    Ok(())
}

/// Write snapshots as CSV: `t, ask_price_ticks`, then per-level ask and bid
/// volumes in shares (`2N + 2` columns).
pub fn write_snapshots_csv<W: Write>(
    trace: &Trace,
    params: &ModelParams,
    mut out: W,
) -> io::Result<()> {
    let mut header = String::from("t_model_time,ask_price_ticks");
    for i in 1..=params.levels {
        header.push_str(&format!(",ask_shares_{i}"));
    }
    for i in 1..=params.levels {
        header.push_str(&format!(",bid_shares_{i}"));
    }
    writeln!(out, "{header}")?;
    let unit = u64::from(params.unit);
    for snap in &trace.snapshots {
        let mut row = format!("{},{}", snap.t, snap.state.ask_price_ticks());
        for side in [Side::Ask, Side::Bid] {
            for &c in snap.state.counts(side) {
                row.push_str(&format!(",{}", u64::from(c) * unit));
            }
        }
        writeln!(out, "{row}")?;
    }
    Ok(())
}

#[derive(Debug, Error)]
pub enum TraceReadError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
}

fn malformed(line: usize, message: impl Into<String>) -> TraceReadError {
    TraceReadError::Malformed {
        line,
        message: message.into(),
    }
}

/// Parse an events CSV written by [`write_events_csv`].
pub fn read_events_csv<R: BufRead>(levels: usize, input: R) -> Result<Vec<TraceEvent>, TraceReadError> {
    let mut events = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        if idx == 0 {
            continue; // header
        }
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let mut fields = line.split(',');
        let mut next = |name: &str| {
            fields
                .next()
                .ok_or_else(|| malformed(lineno, format!("missing column {name}")))
        };
        let t: f64 = next("t")?
            .parse()
            .map_err(|e| malformed(lineno, format!("bad t: {e}")))?;
        let code: u32 = next("event_code")?
            .parse()
            .map_err(|e| malformed(lineno, format!("bad event_code: {e}")))?;
        let event = EventKind::from_code(code, levels)
            .ok_or_else(|| malformed(lineno, format!("event code {code} outside alphabet")))?;
        let mid_half_ticks: i64 = next("mid_half_ticks")?
            .parse()
            .map_err(|e| malformed(lineno, format!("bad mid: {e}")))?;
        let spread_ticks: u32 = next("spread_ticks")?
            .parse()
            .map_err(|e| malformed(lineno, format!("bad spread: {e}")))?;
        events.push(TraceEvent {
            t,
            event,
            mid_half_ticks,
            spread_ticks,
        });
    }
    Ok(events)
}

/// Parse a snapshots CSV written by [`write_snapshots_csv`]; holding times
/// are not stored in the file, attach them with [`attach_holding_times`].
pub fn read_snapshots_csv<R: BufRead>(
    params: &ModelParams,
    input: R,
) -> Result<Vec<(f64, BookState)>, TraceReadError> {
    let n = params.levels;
    let unit = u64::from(params.unit);
    let mut snapshots = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        if idx == 0 || line.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 2 * n + 2 {
            return Err(malformed(
                lineno,
                format!("expected {} columns, got {}", 2 * n + 2, fields.len()),
            ));
        }
        let t: f64 = fields[0]
            .parse()
            .map_err(|e| malformed(lineno, format!("bad t: {e}")))?;
        let anchor: i64 = fields[1]
            .parse()
            .map_err(|e| malformed(lineno, format!("bad ask_price_ticks: {e}")))?;
        let parse_side = |cols: &[&str]| -> Result<Vec<u32>, TraceReadError> {
            cols.iter()
                .map(|s| {
                    let shares: u64 = s
                        .parse()
                        .map_err(|e| malformed(lineno, format!("bad volume: {e}")))?;
                    Ok((shares / unit) as u32)
                })
                .collect()
        };
        let ask = parse_side(&fields[2..2 + n])?;
        let bid = parse_side(&fields[2 + n..])?;
        let state = BookState::new(ask, bid, anchor)
            .map_err(|e| malformed(lineno, format!("invalid state: {e}")))?;
        snapshots.push((t, state));
    }
    Ok(snapshots)
}

/// Recover snapshot holding times from the event stream: each snapshot sits
/// at some event's time and is held until the next event. Snapshots are
/// only written when a following event exists, so every one resolves.
pub fn attach_holding_times(
    snapshots: Vec<(f64, BookState)>,
    events: &[TraceEvent],
) -> Result<Vec<Snapshot>, TraceReadError> {
    let mut out = Vec::with_capacity(snapshots.len());
    let mut idx = 0usize;
    for (row, (t, state)) in snapshots.into_iter().enumerate() {
        while idx < events.len() && events[idx].t < t {
            idx += 1;
        }
        if idx + 1 >= events.len() || events[idx].t != t {
            return Err(malformed(
                row + 2,
                "snapshot time not found in event stream",
            ));
        }
        out.push(Snapshot {
            t,
            state,
            holding_dt: events[idx + 1].t - t,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::book::CancelMode;

    fn small_trace() -> (Trace, ModelParams) {
        let params = ModelParams::flat(2, 1, 1.0, 1.0, 1.0, 1.0, 1, CancelMode::Proportional);
        let s0 = BookState::full(&params, 5);
        let s1 = crate::book::apply_event(&s0, &params, EventKind::MarketBuy).unwrap();
        let trace = Trace {
            seed: 7,
            stream: 0,
            params_digest: params.digest(),
            t_start: 0.0,
            initial_mid_half_ticks: s0.mid_half_ticks(),
            initial_spread_ticks: s0.spread_ticks() as u32,
            events: vec![
                TraceEvent {
                    t: 0.5,
                    event: EventKind::MarketBuy,
                    mid_half_ticks: s1.mid_half_ticks(),
                    spread_ticks: s1.spread_ticks() as u32,
                },
                TraceEvent {
                    t: 0.75,
                    event: EventKind::LimitAsk(1),
                    mid_half_ticks: s0.mid_half_ticks(),
                    spread_ticks: s0.spread_ticks() as u32,
                },
            ],
            snapshots: vec![Snapshot {
                t: 0.5,
                state: s1,
                holding_dt: 0.25,
            }],
            halted: false,
        };
        (trace, params)
    }

    #[test]
    fn events_csv_roundtrip() {
        let (trace, params) = small_trace();
        let mut buf = Vec::new();
        write_events_csv(&trace, params.levels, &mut buf).unwrap();
        let parsed = read_events_csv(params.levels, buf.as_slice()).unwrap();
        assert_eq!(parsed, trace.events);
    }

    #[test]
    fn snapshots_csv_roundtrip_with_holding_times() {
        let (trace, params) = small_trace();
        let mut buf = Vec::new();
        write_snapshots_csv(&trace, &params, &mut buf).unwrap();
        let parsed = read_snapshots_csv(&params, buf.as_slice()).unwrap();
        let attached = attach_holding_times(parsed, &trace.events).unwrap();
        assert_eq!(attached, trace.snapshots);
    }

    #[test]
    fn snapshot_csv_has_expected_column_count() {
        let (trace, params) = small_trace();
        let mut buf = Vec::new();
        write_snapshots_csv(&trace, &params, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let header = text.lines().next().unwrap();
        assert_eq!(header.split(',').count(), 2 * params.levels + 2);
    }

    #[test]
    fn mid_path_prepends_initial() {
        let (trace, _) = small_trace();
        let path = trace.mid_path();
        assert_eq!(path.len(), 3);
        assert_eq!(path[0], trace.initial_mid_half_ticks);
    }
}
