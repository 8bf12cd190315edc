//! Figures and tables rendered from traces and result tables.
//!
//! Every figure is an SVG 1.1 document plus a CSV holding the plotted
//! numbers. Numeric cells carry their exact value in a `data-value`
//! attribute (shortest round-trip form); visible labels use 6 significant
//! digits.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::bench::protocol::BenchResult;
use crate::constraints::{audit_rows, DomainRule};
use crate::dpg::Side;
use crate::error::{Error, Result};
use crate::ga::TraceRecord;
use crate::tabular::Dataset;

#[derive(Debug, Clone, PartialEq)]
pub struct Figure {
    pub svg: String,
    pub csv: String,
}

impl Figure {
    /// Writes the SVG to `path` and the CSV next to it with a `.csv`
    /// extension. Returns the CSV path.
    pub fn write(&self, path: &Path) -> Result<PathBuf> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        fs::write(path, &self.svg).map_err(|e| Error::io(path, e))?;
        let csv = path.with_extension("csv");
        fs::write(&csv, &self.csv).map_err(|e| Error::io(&csv, e))?;
        Ok(csv)
    }
}

/// `v` with 6 significant digits, trailing zeros trimmed.
pub fn fmt6(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 { "0".into() } else { v.to_string() };
    }
    let mag = v.abs().log10().floor() as i32;
    if !(-4..6).contains(&mag) {
        let s = format!("{v:.5e}");
        let (m, e) = s.split_once('e').expect("exponent form");
        let m = if m.contains('.') { m.trim_end_matches('0').trim_end_matches('.') } else { m };
        return format!("{m}e{e}");
    }
    let decimals = (5 - mag).max(0) as usize;
    let s = format!("{v:.decimals$}");
    let s = if s.contains('.') { s.trim_end_matches('0').trim_end_matches('.').to_string() } else { s };
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn svg_open(width: f64, height: f64, title: &str) -> String {
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\" font-family=\"sans-serif\" font-size=\"11\">\n<title>{}</title>\n",
        escape(title)
    )
}

/// White to dark blue for `t ∈ [0, 1]`.
fn shade(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let mix = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(247.0, 8.0), mix(251.0, 48.0), mix(255.0, 107.0))
}

fn normaliser(values: impl Iterator<Item = f64>) -> impl Fn(f64) -> f64 {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
    move |v| if hi > lo { (v - lo) / (hi - lo) } else { 0.5 }
}

fn check_trace(trace: &[TraceRecord], names: &[String]) -> Result<usize> {
    let first = trace.first().ok_or_else(|| Error::InvalidConfig("trace is empty".into()))?;
    let d = first.delta.len();
    if names.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: names.len() });
    }
    for (g, r) in trace.iter().enumerate() {
        if r.generation != g {
            return Err(Error::Schema { path: format!("$[{g}].generation"), msg: format!("expected {g}") });
        }
        if r.delta.len() != d || r.best.x.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: r.delta.len() });
        }
    }
    Ok(d)
}

/// Query of a trace: stored on generation 0, else recovered from the first
/// delta.
pub fn trace_query(trace: &[TraceRecord]) -> Vec<f64> {
    let first = &trace[0];
    first.query.clone().unwrap_or_else(|| first.best.x.iter().zip(&first.delta).map(|(x, d)| x - d).collect())
}

/// Per-feature deltas, one column per generation transition (the first
/// column is query → generation 0).
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaTable {
    pub features: Vec<String>,
    pub transitions: Vec<String>,
    /// `deltas[f][g]`.
    pub deltas: Vec<Vec<f64>>,
    /// `flags[f][g]`: generation `g`'s best breaks a bound on feature `f`.
    pub flags: Vec<Vec<bool>>,
}

impl DeltaTable {
    pub fn column_sums(&self) -> Vec<f64> {
        self.deltas.iter().map(|row| row.iter().sum()).collect()
    }

    /// Aligned text with violating cells marked `×`.
    pub fn to_text(&self) -> String {
        let cell =
            |f: usize, g: usize| format!("{}{}", fmt6(self.deltas[f][g]), if self.flags[f][g] { " ×" } else { "" });
        let mut widths: Vec<usize> = self.transitions.iter().map(|t| t.chars().count()).collect();
        for f in 0..self.features.len() {
            for (g, w) in widths.iter_mut().enumerate() {
                *w = (*w).max(cell(f, g).chars().count());
            }
        }
        let name_w = self.features.iter().map(|n| n.chars().count()).max().unwrap_or(0).max(7);
        let mut s = format!("{:<name_w$}", "feature");
        for (t, w) in self.transitions.iter().zip(&widths) {
            let _ = write!(s, "  {t:>w$}");
        }
        s.push('\n');
        for (f, name) in self.features.iter().enumerate() {
            let _ = write!(s, "{name:<name_w$}");
            for (g, w) in widths.iter().enumerate() {
                let _ = write!(s, "  {:>w$}", cell(f, g));
            }
            s.push('\n');
        }
        s
    }

    /// Long form: `feature,transition,delta,violated`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("feature,transition,delta,violated\n");
        for (f, name) in self.features.iter().enumerate() {
            for (g, t) in self.transitions.iter().enumerate() {
                let _ = writeln!(s, "{name},{t},{:?},{}", self.deltas[f][g], self.flags[f][g]);
            }
        }
        s
    }
}

pub fn delta_table(trace: &[TraceRecord], feature_names: &[String]) -> Result<DeltaTable> {
    let d = check_trace(trace, feature_names)?;
    let transitions = trace
        .iter()
        .map(|r| if r.generation == 0 { "q→0".to_string() } else { format!("{}→{}", r.generation - 1, r.generation) })
        .collect();
    let deltas = (0..d).map(|f| trace.iter().map(|r| r.delta[f]).collect()).collect();
    let flags = (0..d).map(|f| trace.iter().map(|r| r.violations.iter().any(|(vf, _)| *vf == f)).collect()).collect();
    Ok(DeltaTable { features: feature_names.to_vec(), transitions, deltas, flags })
}

const CELL: f64 = 28.0;
const LABEL_W: f64 = 140.0;
const TOP: f64 = 40.0;

/// Features × generations grid shaded by `|Δ|`, min-max normalised over the
/// figure.
pub fn evolution_heatmap(trace: &[TraceRecord], feature_names: &[String]) -> Result<Figure> {
    let d = check_trace(trace, feature_names)?;
    let g = trace.len();
    let norm = normaliser(trace.iter().flat_map(|r| r.delta.iter().map(|v| v.abs())));
    let (w, h) = (LABEL_W + CELL * g as f64 + 20.0, TOP + CELL * d as f64 + 30.0);
    let mut svg = svg_open(w, h, "Feature change between generations");
    let _ = writeln!(svg, "<g class=\"grid\" data-rows=\"{d}\" data-cols=\"{g}\">");
    let mut csv = String::from("feature,generation,delta\n");
    for (f, name) in feature_names.iter().enumerate() {
        let y = TOP + CELL * f as f64;
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>",
            LABEL_W - 6.0,
            y + CELL * 0.65,
            escape(name)
        );
        for r in trace {
            let v = r.delta[f];
            let x = LABEL_W + CELL * r.generation as f64;
            let _ = writeln!(
                svg,
                "<rect x=\"{x}\" y=\"{y}\" width=\"{CELL}\" height=\"{CELL}\" fill=\"{}\" stroke=\"#ffffff\" data-feature=\"{}\" data-generation=\"{}\" data-value=\"{v:?}\"><title>{} {}</title></rect>",
                shade(norm(v.abs())),
                escape(name),
                r.generation,
                escape(name),
                fmt6(v)
            );
            let _ = writeln!(csv, "{name},{},{v:?}", r.generation);
        }
    }
    svg.push_str("</g>\n");
    for r in trace {
        let x = LABEL_W + CELL * (r.generation as f64 + 0.5);
        let _ = writeln!(svg, "<text x=\"{x}\" y=\"{}\" text-anchor=\"middle\">{}</text>", TOP - 8.0, r.generation);
    }
    svg.push_str("</svg>\n");
    Ok(Figure { svg, csv })
}

/// `(feature, generation, value)` for every heatmap cell, parsed back from
/// the SVG metadata.
pub fn parse_heatmap_cells(svg: &str) -> Result<Vec<(String, usize, f64)>> {
    let attr = |tag: &str, key: &str| -> Option<String> {
        let pat = format!("{key}=\"");
        let start = tag.find(&pat)? + pat.len();
        let end = tag[start..].find('"')? + start;
        Some(tag[start..end].to_string())
    };
    let bad = |m: &str| Error::Schema { path: "svg".into(), msg: m.into() };
    let mut out = Vec::new();
    for tag in svg.split("<rect").skip(1) {
        let tag = &tag[..tag.find('>').unwrap_or(tag.len())];
        let (Some(f), Some(g), Some(v)) =
            (attr(tag, "data-feature"), attr(tag, "data-generation"), attr(tag, "data-value"))
        else {
            continue;
        };
        let f = f.replace("&lt;", "<").replace("&gt;", ">").replace("&quot;", "\"").replace("&amp;", "&");
        out.push((f, g.parse().map_err(|_| bad("bad generation"))?, v.parse().map_err(|_| bad("bad value"))?));
    }
    Ok(out)
}

/// Horizontal bars of `|final − query|` per feature, annotated with the
/// change, the number of generations with a non-zero delta and the
/// `query → augmented` values.
pub fn cumulative_change_barplot(trace: &[TraceRecord], feature_names: &[String]) -> Result<Figure> {
    let d = check_trace(trace, feature_names)?;
    let query = trace_query(trace);
    let last = &trace[trace.len() - 1].best.x;
    let change: Vec<f64> = (0..d).map(|f| (last[f] - query[f]).abs()).collect();
    let steps: Vec<usize> = (0..d).map(|f| trace.iter().filter(|r| r.delta[f] != 0.0).count()).collect();
    let max = change.iter().copied().fold(0.0, f64::max);
    let bar_w = 260.0;
    let (w, h) = (LABEL_W + bar_w + 320.0, TOP + CELL * d as f64 + 20.0);
    let mut svg = svg_open(w, h, "Cumulative feature change");
    let mut csv = String::from("feature,query,augmented,abs_change,changed_generations\n");
    for f in 0..d {
        let y = TOP + CELL * f as f64;
        let len = if max > 0.0 { bar_w * change[f] / max } else { 0.0 };
        let name = escape(&feature_names[f]);
        let _ =
            writeln!(svg, "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{name}</text>", LABEL_W - 6.0, y + CELL * 0.65);
        let _ = writeln!(
            svg,
            "<rect x=\"{LABEL_W}\" y=\"{}\" width=\"{len}\" height=\"{}\" fill=\"#08306b\" data-feature=\"{name}\" data-value=\"{:?}\" data-steps=\"{}\"/>",
            y + 4.0,
            CELL - 8.0,
            change[f],
            steps[f]
        );
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\">Δ {} (n={}) {} → {}</text>",
            LABEL_W + len + 6.0,
            y + CELL * 0.65,
            fmt6(change[f]),
            steps[f],
            fmt6(query[f]),
            fmt6(last[f])
        );
        let _ = writeln!(csv, "{},{:?},{:?},{:?},{}", feature_names[f], query[f], last[f], change[f], steps[f]);
    }
    svg.push_str("</svg>\n");
    Ok(Figure { svg, csv })
}

/// Methods × datasets matrix of mean violation rates.
/// Violation rate per `(level bits, rep)` run.
type RunRates = BTreeMap<(u64, usize), f64>;

pub fn violation_heatmap(results: &[BenchResult]) -> Result<Figure> {
    if !results.iter().any(|r| r.violation_rate.is_some()) {
        return Err(Error::MissingColumn("violation_rate".into()));
    }
    let mut methods: Vec<&str> = Vec::new();
    let mut datasets: Vec<&str> = Vec::new();
    // (method, dataset) -> run key -> rate; rows of one run share the rate
    let mut runs: BTreeMap<(&str, &str), RunRates> = BTreeMap::new();
    for r in results {
        let Some(rate) = r.violation_rate else { continue };
        if !methods.contains(&r.method.as_str()) {
            methods.push(&r.method);
        }
        if !datasets.contains(&r.dataset.as_str()) {
            datasets.push(&r.dataset);
        }
        runs.entry((&r.method, &r.dataset)).or_default().insert((r.level.to_bits(), r.rep), rate);
    }
    let cell = |m: &str, d: &str| runs.get(&(m, d)).map(|rates| rates.values().sum::<f64>() / rates.len() as f64);
    let norm = normaliser(runs.keys().filter_map(|(m, d)| cell(m, d)).chain([0.0]));
    let cw = 90.0;
    let (w, h) = (LABEL_W + cw * datasets.len() as f64 + 20.0, TOP + CELL * methods.len() as f64 + 20.0);
    let mut svg = svg_open(w, h, "Mean constraint violation rate");
    let mut csv = String::from("method,dataset,violation_rate\n");
    for (j, d) in datasets.iter().enumerate() {
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
            LABEL_W + cw * (j as f64 + 0.5),
            TOP - 8.0,
            escape(d)
        );
    }
    for (i, m) in methods.iter().enumerate() {
        let y = TOP + CELL * i as f64;
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>",
            LABEL_W - 6.0,
            y + CELL * 0.65,
            escape(m)
        );
        for (j, d) in datasets.iter().enumerate() {
            let x = LABEL_W + cw * j as f64;
            match cell(m, d) {
                Some(v) => {
                    let t = norm(v);
                    let _ = writeln!(
                        svg,
                        "<rect x=\"{x}\" y=\"{y}\" width=\"{cw}\" height=\"{CELL}\" fill=\"{}\" stroke=\"#ffffff\" data-method=\"{}\" data-dataset=\"{}\" data-value=\"{v:?}\"/>",
                        shade(t),
                        escape(m),
                        escape(d)
                    );
                    let color = if t > 0.5 { "#ffffff" } else { "#000000" };
                    let _ = writeln!(
                        svg,
                        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" fill=\"{color}\">{}</text>",
                        x + cw / 2.0,
                        y + CELL * 0.65,
                        fmt6(v)
                    );
                    let _ = writeln!(csv, "{m},{d},{v:?}");
                }
                None => {
                    let _ = writeln!(svg, "<rect x=\"{x}\" y=\"{y}\" width=\"{cw}\" height=\"{CELL}\" fill=\"#dddddd\" stroke=\"#ffffff\"/>");
                }
            }
        }
    }
    svg.push_str("</svg>\n");
    Ok(Figure { svg, csv })
}

/// Scatter of two features of `samples`; points breaking any rule are drawn
/// as red crosses, the rule box on these two features as a dashed frame.
pub fn violation_scatter(samples: &Dataset, rules: &[DomainRule], fx: &str, fy: &str) -> Result<Figure> {
    let ix = samples.feature_index(fx).ok_or_else(|| Error::UnknownFeature(fx.into()))?;
    let iy = samples.feature_index(fy).ok_or_else(|| Error::UnknownFeature(fy.into()))?;
    let report = audit_rows(samples.feature_names(), samples.rows(), rules)?;
    let bad: std::collections::BTreeSet<usize> = report.violations.iter().map(|v| v.sample).collect();
    let side_of = |name: &str, side: Side| {
        rules
            .iter()
            .filter(|r| r.feature == name)
            .map(|r| if side == Side::Lower { r.lower } else { r.upper })
            .find(|v| v.is_finite())
    };
    let mut xs: Vec<f64> = samples.rows().map(|r| r[ix]).collect();
    let mut ys: Vec<f64> = samples.rows().map(|r| r[iy]).collect();
    xs.extend([side_of(fx, Side::Lower), side_of(fx, Side::Upper)].into_iter().flatten());
    ys.extend([side_of(fy, Side::Lower), side_of(fy, Side::Upper)].into_iter().flatten());
    let span = |v: &[f64]| {
        let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &x| (l.min(x), h.max(x)));
        if hi > lo {
            (lo, hi)
        } else {
            (lo - 1.0, lo + 1.0)
        }
    };
    let ((x0, x1), (y0, y1)) = (span(&xs), span(&ys));
    let size = 360.0;
    let pad = 50.0;
    let px = |v: f64| pad + size * (v - x0) / (x1 - x0);
    let py = |v: f64| pad + size * (1.0 - (v - y0) / (y1 - y0));
    let mut svg = svg_open(size + 2.0 * pad, size + 2.0 * pad, &format!("{fx} vs {fy}"));
    let _ = writeln!(
        svg,
        "<rect x=\"{pad}\" y=\"{pad}\" width=\"{size}\" height=\"{size}\" fill=\"none\" stroke=\"#999999\"/>"
    );
    let (rx0, rx1) = (side_of(fx, Side::Lower).unwrap_or(x0), side_of(fx, Side::Upper).unwrap_or(x1));
    let (ry0, ry1) = (side_of(fy, Side::Lower).unwrap_or(y0), side_of(fy, Side::Upper).unwrap_or(y1));
    let _ = writeln!(
        svg,
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#333333\" stroke-dasharray=\"4 3\" class=\"rule-box\"/>",
        px(rx0), py(ry1), px(rx1) - px(rx0), py(ry0) - py(ry1)
    );
    let mut csv = format!("sample,{fx},{fy},violating\n");
    for (i, r) in samples.rows().enumerate() {
        let (x, y) = (r[ix], r[iy]);
        let v = bad.contains(&i);
        if v {
            let (cx, cy) = (px(x), py(y));
            let _ = writeln!(
                svg,
                "<path d=\"M{} {}L{} {}M{} {}L{} {}\" stroke=\"#cb181d\" stroke-width=\"1.5\" data-sample=\"{i}\" data-x=\"{x:?}\" data-y=\"{y:?}\"/>",
                cx - 3.0, cy - 3.0, cx + 3.0, cy + 3.0, cx - 3.0, cy + 3.0, cx + 3.0, cy - 3.0
            );
        } else {
            let _ = writeln!(svg, "<circle cx=\"{}\" cy=\"{}\" r=\"2.5\" fill=\"#2171b5\" data-sample=\"{i}\" data-x=\"{x:?}\" data-y=\"{y:?}\"/>", px(x), py(y));
        }
        let _ = writeln!(csv, "{i},{x:?},{y:?},{v}");
    }
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
        pad + size / 2.0,
        size + 2.0 * pad - 12.0,
        escape(fx)
    );
    let _ = writeln!(
        svg,
        "<text x=\"14\" y=\"{}\" transform=\"rotate(-90 14 {})\" text-anchor=\"middle\">{}</text>",
        pad + size / 2.0,
        pad + size / 2.0,
        escape(fy)
    );
    let _ =
        writeln!(svg, "<text x=\"{pad}\" y=\"{}\">violation rate {}</text>", pad - 12.0, fmt6(report.violation_rate));
    svg.push_str("</svg>\n");
    Ok(Figure { svg, csv })
}
