//! Gantt-style SVG rendering of simulation results.
//!
//! One horizontal bar per packet, from its arrival time to its departure
//! time, rows in arrival order and colors keyed by flow label. The output is
//! a single self-contained SVG document; every bar carries `data-id` and
//! `data-flow` attributes so tests and downstream tools can parse it back.

use crate::sim::DepartureRecord;

const PALETTE: [&str; 7] = [
    "red",
    "skyblue",
    "forestgreen",
    "lightsalmon",
    "dodgerblue",
    "darkseagreen",
    "orchid",
];

const WIDTH: f64 = 860.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 10.0;
const TOP: f64 = 22.0;
const BOTTOM: f64 = 8.0;
const ROW: f64 = 14.0;
const BAR: f64 = 10.0;

fn secs(t: crate::rat::Time) -> f64 {
    t.numer() as f64 / t.denom() as f64
}

pub fn render_gantt(records: &[DepartureRecord]) -> String {
    let mut rows: Vec<&DepartureRecord> = records.iter().collect();
    rows.sort_by_key(|r| (r.arrival, r.id));

    let mut flows: Vec<&str> = rows.iter().map(|r| r.flow.as_str()).collect();
    flows.sort_unstable();
    flows.dedup();
    let color = |flow: &str| {
        let i = flows.iter().position(|f| *f == flow).unwrap_or(0);
        PALETTE[i % PALETTE.len()]
    };

    let max_time = rows
        .iter()
        .map(|r| secs(r.departure))
        .fold(0.0_f64, f64::max);
    let plot_width = WIDTH - LEFT - RIGHT;
    let x_of = |t: f64| {
        if max_time > 0.0 {
            LEFT + t / max_time * plot_width
        } else {
            LEFT
        }
    };
    let height = TOP + rows.len() as f64 * ROW + BOTTOM;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{height}\" \
         viewBox=\"0 0 {WIDTH} {height}\">\n"
    ));
    svg.push_str(
        "  <style>.bar{stroke:#333;stroke-width:0.4;}text{font:10px sans-serif;fill:#222;}</style>\n",
    );
    svg.push_str(&format!(
        "  <line x1=\"{LEFT}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#888\"/>\n",
        TOP - 4.0,
        WIDTH - RIGHT,
        TOP - 4.0
    ));
    svg.push_str(&format!(
        "  <text x=\"{LEFT}\" y=\"{:.2}\">0s</text>\n",
        TOP - 8.0
    ));
    svg.push_str(&format!(
        "  <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{max_time:.2}s</text>\n",
        WIDTH - RIGHT,
        TOP - 8.0
    ));
    for (row, r) in rows.iter().enumerate() {
        let y = TOP + row as f64 * ROW;
        let x = x_of(secs(r.arrival));
        let w = (x_of(secs(r.departure)) - x).max(1.0);
        svg.push_str(&format!(
            "  <text x=\"4\" y=\"{:.2}\">{} {}</text>\n",
            y + BAR - 1.0,
            r.id,
            r.flow
        ));
        svg.push_str(&format!(
            "  <rect class=\"bar\" data-id=\"{}\" data-flow=\"{}\" x=\"{x:.2}\" y=\"{y:.2}\" \
             width=\"{w:.2}\" height=\"{BAR}\" fill=\"{}\"><title>{} {}: {} to {}</title></rect>\n",
            r.id,
            r.flow,
            color(&r.flow),
            r.id,
            r.flow,
            r.arrival.to_decimal_string(),
            r.departure.to_decimal_string()
        ));
    }
    svg.push_str("</svg>\n");
    svg
}
