//! Static SVG of attitude and bias error against time, built from trace
//! rows only.

use std::fmt::Write as _;

use hybrid_attitude::Mode;

use crate::output::TraceRow;
use crate::Failure;

const WIDTH: f64 = 900.0;
const PANEL_H: f64 = 280.0;
const MARGIN_L: f64 = 80.0;
const MARGIN_R: f64 = 150.0;
const MARGIN_T: f64 = 40.0;
const GAP: f64 = 70.0;
/// Values at or below this are drawn on the floor of the log axis.
const LOG_FLOOR: f64 = 1e-16;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

struct Panel<'a> {
    title: &'a str,
    top: f64,
    value: fn(&TraceRow) -> f64,
}

fn log_range(rows: &[TraceRow], value: fn(&TraceRow) -> f64) -> (f64, f64) {
    let (lo, hi) = rows
        .iter()
        .map(|r| value(r).max(LOG_FLOOR).log10())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let (lo, hi) = (lo.floor(), hi.ceil());
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 1.0, lo + 1.0)
    }
}

pub fn render(rows: &[TraceRow]) -> Result<String, Failure> {
    if rows.is_empty() {
        return Err(Failure::validation("empty_trace", "trace has no rows"));
    }
    let mut modes: Vec<Mode> = Vec::new();
    for r in rows {
        if !modes.contains(&r.mode) {
            modes.push(r.mode);
        }
    }
    let t_max = rows.iter().map(|r| r.t).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let height = MARGIN_T + 2.0 * PANEL_H + GAP + 50.0;
    let panels = [
        Panel { title: "attitude error |R~|^2", top: MARGIN_T, value: |r| r.attitude_err },
        Panel { title: "bias error |b^ - b|", top: MARGIN_T + PANEL_H + GAP, value: |r| r.bias_err },
    ];

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for p in &panels {
        let (lo, hi) = log_range(rows, p.value);
        let x = |t: f64| MARGIN_L + plot_w * t / t_max;
        let y = |v: f64| p.top + PANEL_H * (hi - v.max(LOG_FLOOR).log10()) / (hi - lo);
        let _ = writeln!(
            svg,
            r#"<rect x="{MARGIN_L}" y="{}" width="{plot_w}" height="{PANEL_H}" fill="none" stroke="black"/>"#,
            p.top
        );
        let _ = writeln!(svg, r#"<text x="{MARGIN_L}" y="{}" font-size="14">{}</text>"#, p.top - 10.0, p.title);
        let step = ((hi - lo) / 8.0).ceil().max(1.0);
        let mut e = lo;
        while e <= hi {
            let yy = p.top + PANEL_H * (hi - e) / (hi - lo);
            let _ = writeln!(
                svg,
                r##"<line x1="{MARGIN_L}" y1="{yy:.2}" x2="{:.2}" y2="{yy:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">1e{e}</text>"##,
                MARGIN_L + plot_w,
                MARGIN_L - 6.0,
                yy + 4.0
            );
            e += step;
        }
        for i in 0..=5 {
            let t = t_max * i as f64 / 5.0;
            let _ = writeln!(
                svg,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{t:.4}</text>"#,
                x(t),
                p.top + PANEL_H + 16.0
            );
        }
        for (mi, mode) in modes.iter().enumerate() {
            let color = COLORS[mi % COLORS.len()];
            let pts: Vec<String> = rows
                .iter()
                .filter(|r| r.mode == *mode)
                .map(|r| format!("{:.2},{:.2}", x(r.t), y((p.value)(r))))
                .collect();
            let _ = writeln!(
                svg,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                pts.join(" ")
            );
            for r in rows.iter().filter(|r| r.mode == *mode && r.jump == 1) {
                let _ = writeln!(
                    svg,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="none" stroke="{color}"/>"#,
                    x(r.t),
                    y((p.value)(r))
                );
            }
        }
    }
    for (mi, mode) in modes.iter().enumerate() {
        let yy = MARGIN_T + 20.0 * mi as f64 + 10.0;
        let xx = WIDTH - MARGIN_R + 15.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{xx}" y1="{yy}" x2="{}" y2="{yy}" stroke="{}" stroke-width="3"/><text x="{}" y="{}">{}</text>"#,
            xx + 25.0,
            COLORS[mi % COLORS.len()],
            xx + 32.0,
            yy + 4.0,
            mode.name()
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">t [s]</text>"#,
        MARGIN_L + plot_w / 2.0,
        height - 10.0
    );
    svg.push_str("</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(t: f64, mode: Mode, err: f64, jump: u8) -> TraceRow {
        TraceRow { t, j: 0, mode, attitude_err: err, bias_err: 0.0, phi: err, q: 1, l0: err, jump }
    }

    #[test]
    fn one_polyline_per_mode_and_panel() {
        let rows = vec![
            row(0.0, Mode::HybridI, 1.0, 0),
            row(0.0, Mode::SmoothI, 1.0, 0),
            row(1.0, Mode::HybridI, 1e-4, 1),
            row(1.0, Mode::SmoothI, 1e-2, 0),
        ];
        let svg = render(&rows).unwrap();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 4);
        assert_eq!(svg.matches("<circle").count(), 2);
        assert!(svg.contains(">hybridI<") && svg.contains(">smoothI<"));
    }

    #[test]
    fn empty_trace_is_rejected() {
        assert!(render(&[]).is_err());
    }

    #[test]
    fn flat_series_gets_a_range() {
        assert_eq!(log_range(&[row(0.0, Mode::SmoothII, 0.0, 0)], |r| r.bias_err), (-17.0, -15.0));
    }
}
