//! Static SVG output: tour route maps and runtime scaling charts.
//!
//! All numbers are written with fixed precision so identical inputs give
//! identical bytes.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::bench::{median, Algorithm, BenchRecord};
use crate::error::{Error, Result};
use crate::instance::{CostRange, NodeLayout};
use crate::tour::Tour;

const PALETTE: [&str; 10] = [
    "#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];
const ROUTE_STROKE: &str = "#c0392b";

/// Node `i` at angle `2 pi i / n` on a circle of radius 0.45 around the
/// center of the unit square.
pub fn circular_layout(n: usize) -> NodeLayout {
    let coords = (0..n)
        .map(|i| {
            let angle = 2.0 * PI * i as f64 / n as f64;
            (0.5 + 0.45 * angle.cos(), 0.5 + 0.45 * angle.sin())
        })
        .collect();
    NodeLayout { coords }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteOptions {
    pub width: u32,
    pub height: u32,
    pub margin: u32,
    pub title: Option<String>,
}

impl Default for RouteOptions {
    fn default() -> Self {
        Self {
            width: 600,
            height: 600,
            margin: 30,
            title: None,
        }
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn svg_open(out: &mut String, width: u32, height: u32) {
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">"
    );
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
}

/// Draws the tour as a closed polyline through the layout, small dots on every node,
/// a large green dot on the first node and a large blue dot on the node
/// halfway along the tour.
pub fn render_route(layout: &NodeLayout, tour: &Tour, options: &RouteOptions) -> Result<String> {
    let n = tour.len();
    if layout.len() != n {
        return Err(Error::Render(format!(
            "layout has {} nodes but the tour has {n}",
            layout.len()
        )));
    }
    if n == 0 {
        return Err(Error::Render("empty tour".into()));
    }
    let span_x = f64::from(options.width - 2 * options.margin);
    let span_y = f64::from(options.height - 2 * options.margin);
    let margin = f64::from(options.margin);
    let px = |v: usize| {
        let (x, y) = layout.coords[v];
        (margin + x * span_x, margin + (1.0 - y) * span_y)
    };

    let mut out = String::new();
    svg_open(&mut out, options.width, options.height);
    if let Some(title) = &options.title {
        let _ = writeln!(out, "<title>{}</title>", escape(title));
    }
    let points: Vec<String> = tour
        .order
        .iter()
        .chain(std::iter::once(&tour.order[0]))
        .map(|&v| {
            let (x, y) = px(v);
            format!("{x:.2},{y:.2}")
        })
        .collect();
    let _ = writeln!(
        out,
        "<polyline class=\"route\" points=\"{}\" fill=\"none\" stroke=\"{ROUTE_STROKE}\" stroke-width=\"1.5\"/>",
        points.join(" ")
    );
    out.push_str("<g class=\"nodes\" fill=\"#222222\">\n");
    for v in 0..n {
        let (cx, cy) = px(v);
        let _ = writeln!(
            out,
            "<circle class=\"node\" cx=\"{cx:.2}\" cy=\"{cy:.2}\" r=\"3\"/>"
        );
    }
    out.push_str("</g>\n");
    let (sx, sy) = px(tour.order[0]);
    let (mx, my) = px(tour.order[n / 2]);
    let _ = writeln!(
        out,
        "<circle class=\"start\" cx=\"{sx:.2}\" cy=\"{sy:.2}\" r=\"8\" fill=\"#2ca02c\"/>"
    );
    let _ = writeln!(
        out,
        "<circle class=\"mid\" cx=\"{mx:.2}\" cy=\"{my:.2}\" r=\"8\" fill=\"#1f77b4\"/>"
    );
    out.push_str("</svg>\n");
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axes {
    /// Logarithmic n and runtime.
    LogLog,
    /// Linear n, logarithmic runtime.
    LogLin,
    LinLin,
}

impl std::str::FromStr for Axes {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "loglog" => Ok(Axes::LogLog),
            "loglin" => Ok(Axes::LogLin),
            "linlin" => Ok(Axes::LinLin),
            other => Err(Error::Render(format!("unknown axes {other:?}"))),
        }
    }
}

type SeriesKey = (Algorithm, u64, CostRange);

/// One line per (algorithm, seed, cost range) through the median runtime
/// at each `n`. Series take palette colors in key order; the marker shape
/// follows the cost range (circle for the first range present, cross for
/// the second, square after that).
pub fn render_scaling(records: &[BenchRecord], axes: Axes) -> Result<String> {
    if records.is_empty() {
        return Err(Error::Render("no records to plot".into()));
    }
    let mut series: BTreeMap<SeriesKey, BTreeMap<usize, Vec<f64>>> = BTreeMap::new();
    for r in records {
        series
            .entry((r.algorithm, r.seed, r.range()))
            .or_default()
            .entry(r.n)
            .or_default()
            .push(r.runtime_ms);
    }
    let ranges: Vec<CostRange> = records
        .iter()
        .map(BenchRecord::range)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    let log_x = axes == Axes::LogLog;
    let log_y = axes != Axes::LinLin;
    let tx = |n: f64| if log_x { n.log10() } else { n };
    let ty = |t: f64| if log_y { t.max(1e-3).log10() } else { t };

    let points: Vec<(SeriesKey, Vec<(f64, f64)>)> = series
        .into_iter()
        .map(|(key, by_n)| {
            let pts = by_n
                .into_iter()
                .map(|(n, mut ts)| (tx(n as f64), ty(median(&mut ts))))
                .collect();
            (key, pts)
        })
        .collect();

    let all = points.iter().flat_map(|(_, p)| p.iter().copied());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for (x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if x1 - x0 < 1e-9 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y1 - y0 < 1e-9 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    if !log_y && y0 > 0.0 {
        y0 = 0.0;
    }

    let (width, height) = (760u32, 480u32);
    let (left, right, top, bottom) = (70.0, 560.0, 30.0, 420.0);
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * (right - left);
    let sy = |y: f64| bottom - (y - y0) / (y1 - y0) * (bottom - top);

    let mut out = String::new();
    svg_open(&mut out, width, height);
    let _ = writeln!(
        out,
        "<g class=\"axes\" stroke=\"#222222\" stroke-width=\"1\">\n<line x1=\"{left}\" y1=\"{bottom}\" x2=\"{right}\" y2=\"{bottom}\"/>\n<line x1=\"{left}\" y1=\"{top}\" x2=\"{left}\" y2=\"{bottom}\"/>\n</g>"
    );
    out.push_str(
        "<g class=\"ticks\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#222222\">\n",
    );
    let label = |v: f64, log: bool| {
        let value = if log { 10f64.powf(v) } else { v };
        if value >= 100.0 {
            format!("{value:.0}")
        } else if value >= 1.0 {
            format!("{value:.1}")
        } else {
            format!("{value:.3}")
        }
    };
    for k in 0..=4 {
        let f = f64::from(k) / 4.0;
        let xv = x0 + f * (x1 - x0);
        let yv = y0 + f * (y1 - y0);
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>",
            sx(xv),
            bottom + 16.0,
            label(xv, log_x)
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>",
            left - 6.0,
            sy(yv) + 4.0,
            label(yv, log_y)
        );
    }
    let _ = writeln!(
        out,
        "<text class=\"xlabel\" x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">n</text>",
        (left + right) / 2.0,
        bottom + 40.0
    );
    let _ = writeln!(
        out,
        "<text class=\"ylabel\" x=\"16\" y=\"{:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.2})\">runtime (ms)</text>",
        (top + bottom) / 2.0,
        (top + bottom) / 2.0
    );
    out.push_str("</g>\n");

    for (index, ((algorithm, seed, range), pts)) in points.iter().enumerate() {
        let color = PALETTE[index % PALETTE.len()];
        let shape = ranges.iter().position(|r| r == range).unwrap_or(0);
        let _ = writeln!(
            out,
            "<g class=\"series\" data-algorithm=\"{algorithm}\" data-seed=\"{seed}\" data-range=\"{range}\">"
        );
        if pts.len() > 1 {
            let path: Vec<String> = pts
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            let _ = writeln!(
                out,
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>",
                path.join(" ")
            );
        }
        for &(x, y) in pts {
            let (cx, cy) = (sx(x), sy(y));
            match shape {
                0 => {
                    let _ = writeln!(
                        out,
                        "<circle class=\"marker\" cx=\"{cx:.2}\" cy=\"{cy:.2}\" r=\"4\" fill=\"none\" stroke=\"{color}\"/>"
                    );
                }
                1 => {
                    let _ = writeln!(
                        out,
                        "<path class=\"marker\" d=\"M{:.2},{:.2} L{:.2},{:.2} M{:.2},{:.2} L{:.2},{:.2}\" stroke=\"{color}\"/>",
                        cx - 4.0,
                        cy - 4.0,
                        cx + 4.0,
                        cy + 4.0,
                        cx - 4.0,
                        cy + 4.0,
                        cx + 4.0,
                        cy - 4.0
                    );
                }
                _ => {
                    let _ = writeln!(
                        out,
                        "<rect class=\"marker\" x=\"{:.2}\" y=\"{:.2}\" width=\"8\" height=\"8\" fill=\"none\" stroke=\"{color}\"/>",
                        cx - 4.0,
                        cy - 4.0
                    );
                }
            }
        }
        out.push_str("</g>\n");
    }

    out.push_str("<g class=\"legend\" font-family=\"sans-serif\" font-size=\"11\">\n");
    for (index, ((algorithm, seed, range), _)) in points.iter().enumerate() {
        let color = PALETTE[index % PALETTE.len()];
        let y = top + 16.0 * index as f64;
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{y:.2}\" fill=\"{color}\">{algorithm} seed {seed} [{}, {}]</text>",
            right + 16.0,
            range.low,
            range.high
        );
    }
    out.push_str("</g>\n</svg>\n");
    Ok(out)
}
