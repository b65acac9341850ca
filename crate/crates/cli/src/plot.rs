//! SVG learning curves from a results CSV.
//!
//! Output is a pure function of the inputs: curves are `<polyline>`, ±1 std
//! bands are `<polygon>`, the optional limit is the only `<line>` and axes
//! and ticks are `<path>` elements.

use std::fmt::Write as _;
use std::io::Read;

use coldpref::experiment::{AggregateRow, PolicyKind};

#[derive(Debug, thiserror::Error)]
pub enum PlotError {
    #[error("results contain no rows")]
    Empty,
    #[error("results mix datasets ({}); choose one with --dataset", .0.join(", "))]
    MultipleDatasets(Vec<String>),
    #[error("dataset `{0}` not found in results")]
    UnknownDataset(String),
    #[error("limit file: {0}")]
    Limit(String),
    #[error(transparent)]
    Core(#[from] coldpref::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub fn color(policy: PolicyKind) -> &'static str {
    match policy {
        PolicyKind::RandomBlank => "green",
        PolicyKind::WarmstartUncertainty => "blue",
        PolicyKind::ColdstartPretrained => "orange",
    }
}

pub const LIMIT_COLOR: &str = "red";

fn label(policy: PolicyKind) -> &'static str {
    match policy {
        PolicyKind::RandomBlank => "random (blank)",
        PolicyKind::WarmstartUncertainty => "warm-start uncertainty",
        PolicyKind::ColdstartPretrained => "cold-start pretrained",
    }
}

/// Reads a `dataset,f1_limit` file into `(dataset, f1)` rows.
pub fn read_limit_csv<R: Read>(reader: R) -> Result<Vec<(String, f64)>, PlotError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != ["dataset", "f1_limit"] {
        return Err(PlotError::Limit(format!(
            "header must be `dataset,f1_limit`, got `{}`",
            header.join(",")
        )));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let f1: f64 = rec[1]
            .parse()
            .map_err(|_| PlotError::Limit(format!("bad value `{}`", &rec[1])))?;
        out.push((rec[0].to_string(), f1));
    }
    Ok(out)
}

/// Keeps the rows of one dataset: `wanted`, or the only one present.
pub fn select_dataset(rows: Vec<AggregateRow>, wanted: Option<&str>) -> Result<Vec<AggregateRow>, PlotError> {
    if rows.is_empty() {
        return Err(PlotError::Empty);
    }
    let mut names: Vec<String> = rows.iter().map(|r| r.dataset.clone()).collect();
    names.sort();
    names.dedup();
    let chosen = match wanted {
        Some(w) if names.iter().any(|n| n == w) => w.to_string(),
        Some(w) => return Err(PlotError::UnknownDataset(w.to_string())),
        None if names.len() == 1 => names.remove(0),
        None => return Err(PlotError::MultipleDatasets(names)),
    };
    Ok(rows.into_iter().filter(|r| r.dataset == chosen).collect())
}

fn nice_step(span: f64, target_ticks: f64) -> f64 {
    let raw = span / target_ticks;
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 5.0, 10.0]
        .into_iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag)
}

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 460.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 210.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 56.0;

/// Renders one dataset's aggregated curves.
pub fn render_svg(rows: &[AggregateRow], limit: Option<f64>, title: &str) -> Result<String, PlotError> {
    if rows.is_empty() {
        return Err(PlotError::Empty);
    }
    let x_max = rows.iter().map(|r| r.queries).max().unwrap_or(1).max(1) as f64;
    let mut y_lo = f64::INFINITY;
    let mut y_hi = f64::NEG_INFINITY;
    for r in rows {
        y_lo = y_lo.min(r.f1_mean - r.f1_std);
        y_hi = y_hi.max(r.f1_mean + r.f1_std);
    }
    if let Some(l) = limit {
        y_lo = y_lo.min(l);
        y_hi = y_hi.max(l);
    }
    let mut y_lo = ((y_lo / 0.05).floor() * 0.05).max(0.0);
    let mut y_hi = ((y_hi / 0.05).ceil() * 0.05).min(1.0);
    if y_hi - y_lo < 0.1 {
        y_lo = (y_lo - 0.05).max(0.0);
        y_hi = (y_lo + 0.1).min(1.0);
        y_lo = y_lo.min(y_hi - 0.1);
    }

    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |q: f64| LEFT + q / x_max * pw;
    let sy = |v: f64| TOP + (1.0 - (v.clamp(y_lo, y_hi) - y_lo) / (y_hi - y_lo)) * ph;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + pw / 2.0,
        escape(title)
    );

    // Axes.
    let _ = writeln!(
        svg,
        r#"<path d="M{:.2} {:.2} L{:.2} {:.2} L{:.2} {:.2}" fill="none" stroke="black"/>"#,
        LEFT,
        TOP,
        LEFT,
        TOP + ph,
        LEFT + pw,
        TOP + ph
    );
    let mut ticks = String::new();
    let mut tick_labels = String::new();
    let x_step = nice_step(x_max, 8.0);
    let mut q = 0.0;
    while q <= x_max + 1e-9 {
        let x = sx(q);
        let _ = write!(ticks, "M{:.2} {:.2} L{:.2} {:.2} ", x, TOP + ph, x, TOP + ph + 5.0);
        let _ = writeln!(
            tick_labels,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{q}</text>"#,
            TOP + ph + 18.0
        );
        q += x_step;
    }
    let y_step = if y_hi - y_lo > 0.4 { 0.1 } else { 0.05 };
    let first = (y_lo / y_step).ceil() as i64;
    let last = (y_hi / y_step + 1e-9).floor() as i64;
    for k in first..=last {
        let v = k as f64 * y_step;
        let y = sy(v);
        let _ = write!(ticks, "M{:.2} {:.2} L{:.2} {:.2} ", LEFT - 5.0, y, LEFT, y);
        let _ = writeln!(
            tick_labels,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{v:.2}</text>"#,
            LEFT - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(svg, r#"<path d="{}" stroke="black"/>"#, ticks.trim_end());
    svg.push_str(&tick_labels);
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">oracle queries</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 14.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">F1</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );

    let mut legend = Vec::new();
    for policy in PolicyKind::ALL {
        let mut pts: Vec<&AggregateRow> = rows.iter().filter(|r| r.policy == policy).collect();
        if pts.is_empty() {
            continue;
        }
        pts.sort_by_key(|r| r.queries);
        let c = color(policy);
        if pts.iter().any(|r| r.n_runs > 1) {
            let upper = pts.iter().map(|r| (r.queries, r.f1_mean + r.f1_std));
            let lower = pts.iter().rev().map(|r| (r.queries, r.f1_mean - r.f1_std));
            let points: Vec<String> = upper
                .chain(lower)
                .map(|(q, v)| format!("{:.2},{:.2}", sx(q as f64), sy(v)))
                .collect();
            let _ = writeln!(
                svg,
                r#"<polygon points="{}" fill="{c}" fill-opacity="0.15" stroke="none"/>"#,
                points.join(" ")
            );
        }
        let points: Vec<String> = pts
            .iter()
            .map(|r| format!("{:.2},{:.2}", sx(r.queries as f64), sy(r.f1_mean)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{c}" stroke-width="2"/>"#,
            points.join(" ")
        );
        legend.push((c, label(policy)));
    }
    if let Some(l) = limit {
        let y = sy(l);
        let _ = writeln!(
            svg,
            r#"<line x1="{LEFT:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{LIMIT_COLOR}" stroke-width="2" stroke-dasharray="6 4"/>"#,
            LEFT + pw
        );
        legend.push((LIMIT_COLOR, "practical limit"));
    }
    let lx = LEFT + pw + 20.0;
    for (i, (c, text)) in legend.iter().enumerate() {
        let y = TOP + 10.0 + 22.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<rect x="{lx:.2}" y="{:.2}" width="18" height="4" fill="{c}"/>"#,
            y - 2.0
        );
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}">{text}</text>"#, lx + 26.0, y + 4.0);
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}
