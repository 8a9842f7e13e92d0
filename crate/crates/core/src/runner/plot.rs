//! Minimal SVG line plot of every table column against `t`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use log::warn;

use super::table::{ResultTable, TableError};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN: f64 = 56.0;
const Y_MAX: f64 = 1.05;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
];

/// SVG document and the number of points clipped to `[0, 1.05]`.
pub fn render_svg(table: &ResultTable) -> (String, usize) {
    let t0 = table.times.first().copied().unwrap_or(0.0);
    let t1 = table.times.last().copied().unwrap_or(1.0);
    let span = if t1 > t0 { t1 - t0 } else { 1.0 };
    let plot_w = WIDTH - 2.0 * MARGIN;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let x = |t: f64| MARGIN + (t - t0) / span * plot_w;
    let y = |v: f64| HEIGHT - MARGIN - v / Y_MAX * plot_h;

    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    )
    .unwrap();
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    writeln!(
        svg,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    )
    .unwrap();
    for tick in 0..=5 {
        let v = tick as f64 * 0.2;
        let t = t0 + span * tick as f64 / 5.0;
        writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="end">{v:.1}</text>"#,
            MARGIN - 6.0,
            y(v) + 4.0
        )
        .unwrap();
        writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="middle">{t:.3}</text>"#,
            x(t),
            HEIGHT - MARGIN + 16.0
        )
        .unwrap();
    }

    let mut clipped = 0;
    for (i, (name, col)) in table.columns.iter().zip(&table.values).enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut points = String::new();
        for (t, v) in table.times.iter().zip(col) {
            let shown = if v.is_nan() { 0.0 } else { v.clamp(0.0, Y_MAX) };
            if shown != *v {
                clipped += 1;
            }
            write!(points, "{:.2},{:.2} ", x(*t), y(shown)).unwrap();
        }
        writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            points.trim_end()
        )
        .unwrap();
        writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-size="12" fill="{color}">{}</text>"#,
            MARGIN + 10.0,
            MARGIN + 16.0 + 15.0 * i as f64,
            escape(name)
        )
        .unwrap();
    }
    svg.push_str("</svg>\n");
    (svg, clipped)
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

pub fn emit_plot(table: &ResultTable, path: &Path) -> Result<(), TableError> {
    let (svg, clipped) = render_svg(table);
    if clipped > 0 {
        warn!("{clipped} plotted values fell outside [0, {Y_MAX}] and were clipped");
    }
    fs::write(path, svg).map_err(|source| TableError::Io {
        path: path.display().to_string(),
        source,
    })
}
