//! Horizontal interval chart of rank confidence sets.
//!
//! One row per population, best estimated rank at the top. Each row has a
//! bar (`class="interval"`) spanning `L..U` and a dot (`class="point"`) at the
//! estimated rank. The x axis runs over ranks `1..p`.

use std::fmt::Write;

use crate::rankcs::{CsMode, RankConfidenceSet};

const WIDTH: f64 = 720.0;
const ROW: f64 = 22.0;
const LEFT: f64 = 150.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
        .replace('\'', "&apos;")
}

/// `labels[j]` names population `j` (0-based, as in the set's intervals).
pub fn interval_chart(cs: &RankConfidenceSet, labels: &[String]) -> String {
    let p = cs.populations.max(1);
    let mut rows: Vec<_> = cs.intervals.iter().collect();
    rows.sort_by(|a, b| a.rank.total_cmp(&b.rank).then(a.index.cmp(&b.index)));
    let height = TOP + BOTTOM + ROW * rows.len() as f64;
    let span = WIDTH - LEFT - RIGHT;
    let x = |rank: f64| {
        if p == 1 {
            LEFT + span / 2.0
        } else {
            LEFT + (rank - 1.0) / (p as f64 - 1.0) * span
        }
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="12">"#
    );
    let mode = match cs.mode {
        CsMode::Marginal => "marginal",
        CsMode::Simultaneous => "simultaneous",
    };
    let _ = writeln!(
        s,
        r#"<text x="{LEFT}" y="20" font-size="14">Rank confidence sets ({mode}, coverage {})</text>"#,
        cs.coverage
    );
    for (i, iv) in rows.iter().enumerate() {
        let y = TOP + ROW * (i as f64 + 0.5);
        let label = labels.get(iv.index).map(String::as_str).unwrap_or("");
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end" dominant-baseline="middle">{}</text>"#,
            LEFT - 10.0,
            y,
            escape(label)
        );
        let _ = writeln!(
            s,
            r##"<line class="interval" x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#4a7ab5" stroke-width="8" stroke-linecap="round"/>"##,
            x(iv.lower as f64),
            x(iv.upper as f64)
        );
        let _ = writeln!(
            s,
            r##"<circle class="point" cx="{:.2}" cy="{y:.2}" r="4" fill="#c0392b"/>"##,
            x(iv.rank)
        );
    }
    let axis_y = TOP + ROW * rows.len() as f64 + 10.0;
    let _ = writeln!(
        s,
        r##"<line x1="{LEFT}" y1="{axis_y:.2}" x2="{:.2}" y2="{axis_y:.2}" stroke="#333"/>"##,
        WIDTH - RIGHT
    );
    let step = (p as f64 / 10.0).ceil().max(1.0) as usize;
    let mut ticks: Vec<usize> = (1..=p).step_by(step).collect();
    if ticks.last() != Some(&p) {
        ticks.push(p);
    }
    for t in ticks {
        let tx = x(t as f64);
        let _ = writeln!(
            s,
            r##"<line x1="{tx:.2}" y1="{axis_y:.2}" x2="{tx:.2}" y2="{:.2}" stroke="#333"/>"##,
            axis_y + 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{tx:.2}" y="{:.2}" text-anchor="middle">{t}</text>"#,
            axis_y + 18.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">rank</text>"#,
        LEFT + span / 2.0,
        axis_y + 36.0
    );
    s.push_str("</svg>\n");
    s
}
