//! Trace-driven simulation in virtual time.
//!
//! The simulator pushes packets into a [`Control`] as their arrival times
//! come due and pops once per tick at times k / line_rate (k = 1, 2, ...).
//! Arrivals that land exactly on a tick are pushed before that tick's pop,
//! ticks with an empty tree are skipped with no idle penalty, and the loop
//! keeps ticking after the last arrival until the tree drains. All arithmetic
//! is exact, so a given (trace, policy, line rate) always produces
//! byte-identical output.
//!
//! Formats, both versioned by a leading comment line:
//! - trace CSV: `# pifotree-trace v1`, header `arrival_s,flow,size`, one row
//!   per packet; ids are assigned 1, 2, ... in file order.
//! - departures CSV: `# pifotree-departures v1`, header
//!   `id,flow,arrival_s,departure_s`.

use std::str::FromStr;

use thiserror::Error;

use crate::control::{Control, ControlError, Packet};
use crate::rat::Time;

pub const TRACE_HEADER: &str = "# pifotree-trace v1";
pub const DEPARTURES_HEADER: &str = "# pifotree-departures v1";

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord {
    pub flow: String,
    pub arrival: Time,
    pub size: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DepartureRecord {
    pub id: u64,
    pub flow: String,
    pub arrival: Time,
    pub departure: Time,
}

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("line rate must be positive")]
    ZeroRate,
    #[error("first line must be {0:?}")]
    Header(&'static str),
    #[error("expected columns {expected:?}, got {got:?}")]
    Columns { expected: String, got: String },
    #[error("record {index}: {msg}")]
    Record { index: usize, msg: String },
    #[error("record {0}: arrivals must be non-decreasing")]
    ArrivalsOutOfOrder(usize),
    #[error("csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Control(#[from] ControlError),
}

impl From<csv::Error> for SimError {
    fn from(e: csv::Error) -> Self {
        SimError::Csv(e.to_string())
    }
}

/// The outcome of a run: every packet's timings, plus the index range of
/// departures in the saturated window. The window starts at the first pop
/// that had at least two packets queued (the scheduler had a real choice) and
/// ends at the last pop at or before the final arrival; `None` if the tree
/// never held two packets at once.
#[derive(Clone, Debug, PartialEq)]
pub struct SimReport {
    pub departures: Vec<DepartureRecord>,
    pub saturated: Option<(usize, usize)>,
}

fn record_err(index: usize, msg: impl Into<String>) -> SimError {
    SimError::Record {
        index,
        msg: msg.into(),
    }
}

fn check_header(text: &str, expected: &'static str) -> Result<(), SimError> {
    match text.lines().next() {
        Some(first) if first.trim() == expected => Ok(()),
        _ => Err(SimError::Header(expected)),
    }
}

fn check_columns(got: &csv::StringRecord, expected: &[&str]) -> Result<(), SimError> {
    let got_cols: Vec<&str> = got.iter().map(str::trim).collect();
    if got_cols != expected {
        return Err(SimError::Columns {
            expected: expected.join(","),
            got: got_cols.join(","),
        });
    }
    Ok(())
}

fn parse_time(index: usize, field: &str, what: &str) -> Result<Time, SimError> {
    Time::from_str(field).map_err(|e| record_err(index, format!("bad {what} {field:?}: {e}")))
}

pub fn read_trace(text: &str) -> Result<Vec<TraceRecord>, SimError> {
    check_header(text, TRACE_HEADER)?;
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    check_columns(reader.headers()?, &["arrival_s", "flow", "size"])?;
    let mut out: Vec<TraceRecord> = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let index = i + 1;
        let row = row?;
        if row.len() != 3 {
            return Err(record_err(index, format!("expected 3 fields, got {}", row.len())));
        }
        let arrival = parse_time(index, &row[0], "arrival")?;
        if let Some(prev) = out.last() {
            if arrival < prev.arrival {
                return Err(SimError::ArrivalsOutOfOrder(index));
            }
        }
        let flow = row[1].to_string();
        if flow.is_empty() {
            return Err(record_err(index, "empty flow label"));
        }
        let size: u64 = row[2]
            .parse()
            .map_err(|e| record_err(index, format!("bad size {:?}: {e}", &row[2])))?;
        out.push(TraceRecord {
            flow,
            arrival,
            size,
        });
    }
    Ok(out)
}

pub fn trace_to_csv(records: &[TraceRecord]) -> String {
    let mut out = format!("{TRACE_HEADER}\narrival_s,flow,size\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{}\n",
            r.arrival.to_decimal_string(),
            r.flow,
            r.size
        ));
    }
    out
}

pub fn read_departures(text: &str) -> Result<Vec<DepartureRecord>, SimError> {
    check_header(text, DEPARTURES_HEADER)?;
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    check_columns(reader.headers()?, &["id", "flow", "arrival_s", "departure_s"])?;
    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let index = i + 1;
        let row = row?;
        if row.len() != 4 {
            return Err(record_err(index, format!("expected 4 fields, got {}", row.len())));
        }
        let id: u64 = row[0]
            .parse()
            .map_err(|e| record_err(index, format!("bad id {:?}: {e}", &row[0])))?;
        out.push(DepartureRecord {
            id,
            flow: row[1].to_string(),
            arrival: parse_time(index, &row[2], "arrival")?,
            departure: parse_time(index, &row[3], "departure")?,
        });
    }
    Ok(out)
}

pub fn departures_to_csv(records: &[DepartureRecord]) -> String {
    let mut out = format!("{DEPARTURES_HEADER}\nid,flow,arrival_s,departure_s\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.id,
            r.flow,
            r.arrival.to_decimal_string(),
            r.departure.to_decimal_string()
        ));
    }
    out
}

/// Runs `trace` through `control` at `line_rate` pops per second.
pub fn simulate(
    control: &mut Control,
    trace: &[TraceRecord],
    line_rate: u64,
) -> Result<SimReport, SimError> {
    if line_rate == 0 {
        return Err(SimError::ZeroRate);
    }
    let last_arrival = trace.last().map(|r| r.arrival);
    let mut departures: Vec<DepartureRecord> = Vec::new();
    let mut saturated_start: Option<usize> = None;
    let mut next = 0;
    let mut tick: u64 = 1;
    while next < trace.len() || control.backlog() > 0 {
        let now = Time::new(tick as i64, line_rate as i64).expect("positive tick");
        while next < trace.len() && trace[next].arrival <= now {
            let r = &trace[next];
            control.push(Packet {
                id: next as u64 + 1,
                flow: r.flow.clone(),
                arrival: r.arrival,
                size: r.size,
            })?;
            next += 1;
        }
        let backlog = control.backlog();
        if let Some(pkt) = control.pop() {
            if backlog >= 2 && saturated_start.is_none() {
                saturated_start = Some(departures.len());
            }
            departures.push(DepartureRecord {
                id: pkt.id,
                flow: pkt.flow,
                arrival: pkt.arrival,
                departure: now,
            });
        }
        tick += 1;
    }
    let saturated = saturated_start.and_then(|start| {
        let last = last_arrival?;
        let end = departures.iter().rposition(|d| d.departure <= last)?;
        (start <= end).then_some((start, end))
    });
    Ok(SimReport {
        departures,
        saturated,
    })
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::control::{build_control, NodePolicy, PolicySpec};
    use crate::topo::Addr;

    fn fcfs_pair() -> Control {
        build_control(&PolicySpec {
            topology: "[*,*]".parse().unwrap(),
            embedding: None,
            policies: BTreeMap::from([(Addr::root(), NodePolicy::Fcfs)]),
            flows: BTreeMap::from([
                ("A".to_string(), "1".parse().unwrap()),
                ("B".to_string(), "2".parse().unwrap()),
            ]),
        })
        .unwrap()
    }

    fn t(s: &str) -> Time {
        s.parse().unwrap()
    }

    fn rec(flow: &str, arrival: &str) -> TraceRecord {
        TraceRecord {
            flow: flow.to_string(),
            arrival: t(arrival),
            size: 1,
        }
    }

    #[test]
    fn departs_one_packet_per_tick_in_fcfs_order() {
        let mut c = fcfs_pair();
        let trace = [rec("A", "0"), rec("B", "0"), rec("A", "0")];
        let report = simulate(&mut c, &trace, 1).unwrap();
        let seen: Vec<(u64, String)> = report
            .departures
            .iter()
            .map(|d| (d.id, d.departure.to_decimal_string()))
            .collect();
        assert_eq!(
            seen,
            [
                (1, "1".to_string()),
                (2, "2".to_string()),
                (3, "3".to_string())
            ]
        );
    }

    #[test]
    fn arrival_on_a_tick_is_pushed_before_that_pop() {
        let mut c = fcfs_pair();
        let report = simulate(&mut c, &[rec("A", "1")], 1).unwrap();
        assert_eq!(report.departures[0].departure, t("1"));
    }

    #[test]
    fn empty_ticks_are_skipped_without_penalty() {
        let mut c = fcfs_pair();
        let trace = [rec("A", "0"), rec("B", "2.5")];
        let report = simulate(&mut c, &trace, 1).unwrap();
        let times: Vec<Time> = report.departures.iter().map(|d| d.departure).collect();
        assert_eq!(times, [t("1"), t("3")]);
    }

    #[test]
    fn empty_trace_produces_empty_output() {
        let mut c = fcfs_pair();
        let report = simulate(&mut c, &[], 4).unwrap();
        assert!(report.departures.is_empty());
        assert_eq!(report.saturated, None);
    }

    #[test]
    fn saturation_covers_backlogged_pops_up_to_the_last_arrival() {
        let mut c = fcfs_pair();
        // Arrivals at 0.1s spacing, pops at 0.5s spacing: backlog from the
        // first tick; the last of 6 arrivals lands at 0.5s.
        let trace = [
            rec("A", "0"),
            rec("B", "0.1"),
            rec("A", "0.2"),
            rec("B", "0.3"),
            rec("A", "0.4"),
            rec("B", "0.5"),
        ];
        let report = simulate(&mut c, &trace, 2).unwrap();
        assert_eq!(report.saturated, Some((0, 0)));
        assert_eq!(report.departures.len(), 6);

        let mut c = fcfs_pair();
        let report = simulate(&mut c, &[rec("A", "0"), rec("B", "3")], 1).unwrap();
        assert_eq!(report.saturated, None);
    }

    #[test]
    fn rejects_a_zero_line_rate() {
        let mut c = fcfs_pair();
        assert_eq!(simulate(&mut c, &[], 0), Err(SimError::ZeroRate));
    }

    #[test]
    fn trace_csv_round_trips_and_validates() {
        let text = "# pifotree-trace v1\narrival_s,flow,size\n0,A,1\n0.1,B,2\n0.25,A,1\n";
        let records = read_trace(text).unwrap();
        assert_eq!(records.len(), 3);
        assert_eq!(records[1], rec("B", "0.1").clone_with_size(2));
        assert_eq!(trace_to_csv(&records), text);

        assert_eq!(
            read_trace("arrival_s,flow,size\n"),
            Err(SimError::Header(TRACE_HEADER))
        );
        assert!(matches!(
            read_trace("# pifotree-trace v1\narrival_s,flow\n0,A\n"),
            Err(SimError::Columns { .. })
        ));
        assert_eq!(
            read_trace("# pifotree-trace v1\narrival_s,flow,size\n1,A,1\n0.5,B,1\n"),
            Err(SimError::ArrivalsOutOfOrder(2))
        );
        assert!(matches!(
            read_trace("# pifotree-trace v1\narrival_s,flow,size\n-1,A,1\n"),
            Err(SimError::Record { index: 1, .. })
        ));
    }

    impl TraceRecord {
        fn clone_with_size(&self, size: u64) -> TraceRecord {
            TraceRecord {
                size,
                ..self.clone()
            }
        }
    }

    #[test]
    fn departures_csv_round_trips() {
        let rows = vec![
            DepartureRecord {
                id: 1,
                flow: "A".to_string(),
                arrival: t("0"),
                departure: t("0.25"),
            },
            DepartureRecord {
                id: 2,
                flow: "B".to_string(),
                arrival: t("0.1"),
                departure: t("0.5"),
            },
        ];
        let text = departures_to_csv(&rows);
        assert_eq!(
            text,
            "# pifotree-departures v1\nid,flow,arrival_s,departure_s\n1,A,0,0.25\n2,B,0.1,0.5\n"
        );
        assert_eq!(read_departures(&text).unwrap(), rows);
    }
}
