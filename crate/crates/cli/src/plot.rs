//! Standalone SVG plots: stacked line charts for sweep CSVs and ternary
//! heatmaps for three-type per-state CSVs.
//!
//! Output depends only on the input values, so identical data gives
//! byte-identical files. Every plotted value is also written verbatim into a
//! `data-v` attribute.

use std::fmt::Write as _;
use std::io::Read;
use std::str::FromStr;

use anyhow::{bail, Context, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    LineChart,
    SimplexHeatmap,
}

impl FromStr for PlotKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "line-chart" | "line" => Ok(PlotKind::LineChart),
            "simplex-heatmap" | "heatmap" | "simplex" => Ok(PlotKind::SimplexHeatmap),
            other => Err(format!("unknown plot kind '{other}' (expected line-chart or simplex-heatmap)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    /// Raw CSV cells; `NaN` or unparsable cells leave gaps.
    pub raw: Vec<String>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub y_label: String,
    pub series: Vec<Series>,
    pub scale: Scale,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineChart {
    pub x_label: String,
    pub x: Vec<f64>,
    pub x_scale: Scale,
    pub panels: Vec<Panel>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub counts: [u32; 3],
    pub raw: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexHeatmap {
    pub population: u32,
    pub value_label: String,
    pub scale: Scale,
    pub cells: Vec<Cell>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlotDocument {
    Line(LineChart),
    Simplex(SimplexHeatmap),
}

#[derive(Debug, Clone, Default)]
pub struct PlotOptions {
    pub kind: Option<PlotKind>,
    /// Heatmap column: `probability`/`s` (default) or `rte`.
    pub value: Option<String>,
    /// Plot `rte_normalized_*` instead of `rte_*` in line charts.
    pub normalized: bool,
    /// Force linear axes and color scales.
    pub linear: bool,
    pub x_label: Option<String>,
}

fn parse_cell(s: &str) -> f64 {
    s.trim().parse().unwrap_or(f64::NAN)
}

/// Log scale when everything is positive and spans at least two decades.
fn auto_scale(values: impl Iterator<Item = f64>, linear: bool) -> Scale {
    if linear {
        return Scale::Linear;
    }
    let (mut lo, mut hi, mut any) = (f64::INFINITY, 0.0f64, false);
    for v in values.filter(|v| v.is_finite()) {
        if v <= 0.0 {
            return Scale::Linear;
        }
        lo = lo.min(v);
        hi = hi.max(v);
        any = true;
    }
    if any && hi / lo >= 100.0 {
        Scale::Log
    } else {
        Scale::Linear
    }
}

impl PlotDocument {
    pub fn from_csv<R: Read>(input: R, opts: &PlotOptions) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let headers: Vec<String> = rdr.headers()?.iter().map(String::from).collect();
        let rows: Vec<Vec<String>> = rdr
            .records()
            .map(|r| r.map(|r| r.iter().map(String::from).collect()))
            .collect::<std::result::Result<_, _>>()
            .context("reading CSV rows")?;
        let kind = match opts.kind {
            Some(k) => k,
            None if headers.first().map(String::as_str) == Some("param_value") => PlotKind::LineChart,
            None => PlotKind::SimplexHeatmap,
        };
        match kind {
            PlotKind::LineChart => line_chart(&headers, &rows, opts).map(PlotDocument::Line),
            PlotKind::SimplexHeatmap => heatmap(&headers, &rows, opts).map(PlotDocument::Simplex),
        }
    }

    pub fn to_svg(&self) -> String {
        match self {
            PlotDocument::Line(c) => c.to_svg(),
            PlotDocument::Simplex(h) => h.to_svg(),
        }
    }
}

fn line_chart(headers: &[String], rows: &[Vec<String>], opts: &PlotOptions) -> Result<LineChart> {
    if headers.first().map(String::as_str) != Some("param_value") {
        bail!("line charts need a sweep CSV (first column param_value)");
    }
    if rows.is_empty() {
        bail!("sweep CSV has no rows");
    }
    let column = |name: &str| headers.iter().position(|h| h == name);
    let series_of = |idx: usize, label: &str| {
        let raw: Vec<String> = rows.iter().map(|r| r[idx].clone()).collect();
        Series {
            label: label.to_string(),
            values: raw.iter().map(|s| parse_cell(s)).collect(),
            raw,
        }
    };
    let x: Vec<f64> = rows.iter().map(|r| parse_cell(&r[0])).collect();
    let rte_prefix = if opts.normalized { "rte_normalized_" } else { "rte_" };
    let h_series: Vec<Series> = column("entropy_rate").map(|i| series_of(i, "H")).into_iter().collect();
    let mut s_series = Vec::new();
    let mut r_series = Vec::new();
    for (i, h) in headers.iter().enumerate() {
        if let Some(l) = h.strip_prefix("s_") {
            s_series.push(series_of(i, l));
        } else if let Some(l) = h.strip_prefix(rte_prefix) {
            if opts.normalized || !h.starts_with("rte_normalized_") {
                r_series.push(series_of(i, l));
            }
        }
    }
    let labels = ["entropy rate", "stationary probability", if opts.normalized { "normalized RTE" } else { "RTE" }];
    let mut out = Vec::new();
    for (label, series) in labels.into_iter().zip([h_series, s_series, r_series]) {
        if series.is_empty() {
            continue;
        }
        let scale = if label == "entropy rate" {
            Scale::Linear
        } else {
            auto_scale(series.iter().flat_map(|s| s.values.iter().copied()), opts.linear)
        };
        out.push(Panel {
            y_label: label.into(),
            series,
            scale,
        });
    }
    Ok(LineChart {
        x_label: opts.x_label.clone().unwrap_or_else(|| "parameter".into()),
        x_scale: auto_scale(x.iter().copied(), opts.linear),
        x,
        panels: out,
    })
}

fn heatmap(headers: &[String], rows: &[Vec<String>], opts: &PlotOptions) -> Result<SimplexHeatmap> {
    let types = headers.iter().take_while(|h| h.starts_with('a') && h[1..].parse::<usize>().is_ok()).count();
    if types != 3 {
        bail!("simplex heatmaps need a three-type per-state CSV (found {types} count columns)");
    }
    let wanted: &[&str] = match opts.value.as_deref() {
        None | Some("s") | Some("probability") => &["probability", "s"],
        Some("rte") => &["rte"],
        Some(other) => bail!("unknown heatmap value '{other}' (expected s or rte)"),
    };
    let vcol = headers
        .iter()
        .position(|h| wanted.contains(&h.as_str()))
        .with_context(|| format!("CSV has no {} column", wanted.join("/")))?;
    let mut cells = Vec::with_capacity(rows.len());
    let mut population = None;
    for (line, r) in rows.iter().enumerate() {
        let mut counts = [0u32; 3];
        for k in 0..3 {
            counts[k] = r[k].trim().parse().with_context(|| format!("row {}: bad count '{}'", line + 2, r[k]))?;
        }
        let n: u32 = counts.iter().sum();
        if *population.get_or_insert(n) != n {
            bail!("row {}: counts sum to {n}, earlier rows to {}", line + 2, population.unwrap());
        }
        cells.push(Cell {
            counts,
            raw: r[vcol].clone(),
            value: parse_cell(&r[vcol]),
        });
    }
    let population = population.context("CSV has no rows")?;
    if population == 0 {
        bail!("population must be positive");
    }
    Ok(SimplexHeatmap {
        population,
        value_label: if wanted[0] == "rte" { "RTE".into() } else { "s".into() },
        scale: auto_scale(cells.iter().map(|c| c.value), opts.linear),
        cells,
    })
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"];

/// Sequential scale from dark purple to yellow; luminance rises monotonically.
const RAMP: [(f64, [f64; 3]); 5] = [
    (0.0, [68.0, 1.0, 84.0]),
    (0.25, [59.0, 82.0, 139.0]),
    (0.5, [33.0, 145.0, 140.0]),
    (0.75, [94.0, 201.0, 98.0]),
    (1.0, [253.0, 231.0, 37.0]),
];

fn ramp(t: f64) -> String {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let k = RAMP.windows(2).position(|w| t <= w[1].0).unwrap_or(RAMP.len() - 2);
    let (t0, c0) = RAMP[k];
    let (t1, c1) = RAMP[k + 1];
    let u = (t - t0) / (t1 - t0);
    let c: Vec<u8> = (0..3).map(|i| (c0[i] + u * (c1[i] - c0[i])).round() as u8).collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

struct Axis {
    lo: f64,
    hi: f64,
    scale: Scale,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, scale: Scale) -> Axis {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| v.is_finite() && (scale == Scale::Linear || *v > 0.0)) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            return Axis { lo: 0.0, hi: 1.0, scale };
        }
        match scale {
            Scale::Log => Axis {
                lo: 10f64.powf(lo.log10().floor()),
                hi: 10f64.powf(hi.log10().ceil().max(lo.log10().floor() + 1.0)),
                scale,
            },
            Scale::Linear => {
                if hi - lo <= 1e-12 * hi.abs().max(1e-300) {
                    let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.05 };
                    Axis { lo: lo - pad, hi: hi + pad, scale }
                } else {
                    let pad = (hi - lo) * 0.05;
                    Axis { lo: lo - pad, hi: hi + pad, scale }
                }
            }
        }
    }

    /// Position in [0, 1].
    fn frac(&self, v: f64) -> f64 {
        match self.scale {
            Scale::Linear => (v - self.lo) / (self.hi - self.lo),
            Scale::Log => (v.log10() - self.lo.log10()) / (self.hi.log10() - self.lo.log10()),
        }
    }

    fn ticks(&self) -> Vec<f64> {
        match self.scale {
            Scale::Log => {
                let (a, b) = (self.lo.log10().round() as i32, self.hi.log10().round() as i32);
                let stride = ((b - a) as f64 / 6.0).ceil().max(1.0) as i32;
                (a..=b).step_by(stride as usize).map(|e| 10f64.powi(e)).collect()
            }
            Scale::Linear => {
                let raw = (self.hi - self.lo) / 5.0;
                let mag = 10f64.powf(raw.log10().floor());
                let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
                let first = (self.lo / step).ceil() as i64;
                let last = (self.hi / step).floor() as i64;
                (first..=last).map(|k| k as f64 * step).collect()
            }
        }
    }
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if !(1e-3..1e5).contains(&a) {
        let e = a.log10().floor() as i32;
        let m = v / 10f64.powi(e);
        if (m.abs() - 1.0).abs() < 1e-9 {
            format!("{}1e{e}", if v < 0.0 { "-" } else { "" })
        } else {
            format!("{m:.1}e{e}")
        }
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

impl LineChart {
    pub fn to_svg(&self) -> String {
        let (w, ph, left, right, top, gap) = (640.0, 200.0, 80.0, 150.0, 20.0, 60.0);
        let pw = w - left - right;
        let h = top + self.panels.len() as f64 * (ph + gap) + 10.0;
        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
        let xa = Axis::fit(self.x.iter().copied(), self.x_scale);
        let xa = Axis {
            lo: self.x.iter().copied().filter(|v| v.is_finite()).fold(f64::INFINITY, f64::min).min(xa.hi),
            hi: self.x.iter().copied().filter(|v| v.is_finite()).fold(f64::NEG_INFINITY, f64::max).max(xa.lo),
            scale: self.x_scale,
        };
        let xa = if xa.hi > xa.lo { xa } else { Axis { lo: xa.lo - 0.5, hi: xa.lo + 0.5, scale: Scale::Linear } };
        for (p, panel) in self.panels.iter().enumerate() {
            let y0 = top + p as f64 * (ph + gap);
            let ya = Axis::fit(panel.series.iter().flat_map(|s| s.values.iter().copied()), panel.scale);
            let px = |v: f64| left + xa.frac(v) * pw;
            let py = |v: f64| y0 + ph - ya.frac(v) * ph;
            let _ = writeln!(svg, r#"<g class="panel" data-quantity="{}">"#, esc(&panel.y_label));
            let _ = writeln!(
                svg,
                r#"<rect x="{left}" y="{y0}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
            );
            for t in ya.ticks() {
                let y = py(t);
                let _ = writeln!(
                    svg,
                    r##"<line x1="{left}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
                    left + pw,
                    left - 4.0,
                    y + 4.0,
                    tick_label(t)
                );
            }
            for t in xa.ticks() {
                if t < xa.lo || t > xa.hi {
                    continue;
                }
                let x = px(t);
                let _ = writeln!(
                    svg,
                    r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                    y0 + ph,
                    y0 + ph + 4.0,
                    y0 + ph + 16.0,
                    tick_label(t)
                );
            }
            let _ = writeln!(
                svg,
                r#"<text transform="translate({:.2},{:.2}) rotate(-90)" text-anchor="middle">{}</text>"#,
                left - 55.0,
                y0 + ph / 2.0,
                esc(&panel.y_label)
            );
            let _ = writeln!(
                svg,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                left + pw / 2.0,
                y0 + ph + 32.0,
                esc(&self.x_label)
            );
            for (k, s) in panel.series.iter().enumerate() {
                let color = PALETTE[k % PALETTE.len()];
                let mut d = String::new();
                let mut pen_down = false;
                for (x, v) in self.x.iter().zip(&s.values) {
                    let ok = v.is_finite() && x.is_finite() && (panel.scale == Scale::Linear || *v > 0.0);
                    if ok {
                        let _ = write!(d, "{}{:.2},{:.2} ", if pen_down { "L" } else { "M" }, px(*x), py(*v));
                    }
                    pen_down = ok;
                }
                let _ = writeln!(
                    svg,
                    r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.5" data-label="{}" data-v="{}"/>"#,
                    d.trim_end(),
                    esc(&s.label),
                    esc(&s.raw.join(" "))
                );
                let ly = y0 + 12.0 + 14.0 * k as f64;
                let _ = writeln!(
                    svg,
                    r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
                    left + pw + 10.0,
                    left + pw + 30.0,
                    left + pw + 35.0,
                    ly + 4.0,
                    esc(&s.label)
                );
            }
            svg.push_str("</g>\n");
        }
        svg.push_str("</svg>\n");
        svg
    }
}

impl SimplexHeatmap {
    pub fn to_svg(&self) -> String {
        let side = 560.0;
        let height = side * 3f64.sqrt() / 2.0;
        let (margin, bar) = (40.0, 90.0);
        let w = side + 2.0 * margin + bar;
        let h = height + 2.0 * margin;
        // Type 1 at the top, type 2 bottom left, type 3 bottom right.
        let v = [(margin + side / 2.0, margin), (margin, margin + height), (margin + side, margin + height)];
        let n = self.population as f64;
        let r = side / n / 3f64.sqrt();
        let finite: Vec<f64> = self
            .cells
            .iter()
            .map(|c| c.value)
            .filter(|x| x.is_finite() && (self.scale == Scale::Linear || *x > 0.0))
            .collect();
        let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let t_of = |x: f64| {
            if !(hi > lo) {
                return 0.5;
            }
            match self.scale {
                Scale::Linear => (x - lo) / (hi - lo),
                Scale::Log => (x.log10() - lo.log10()) / (hi.log10() - lo.log10()),
            }
        };
        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.2}" height="{h:.2}" viewBox="0 0 {w:.2} {h:.2}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(svg, r#"<rect width="{w:.2}" height="{h:.2}" fill="white"/>"#);
        let tri = format!(
            "M{:.2},{:.2} L{:.2},{:.2} L{:.2},{:.2} Z",
            v[0].0, v[0].1, v[1].0, v[1].1, v[2].0, v[2].1
        );
        let _ = writeln!(svg, r#"<defs><clipPath id="simplex"><path d="{tri}"/></clipPath>"#);
        let _ = writeln!(svg, r#"<linearGradient id="ramp" x1="0" y1="1" x2="0" y2="0">"#);
        for (t, _) in RAMP {
            let _ = writeln!(svg, r#"<stop offset="{t}" stop-color="{}"/>"#, ramp(t));
        }
        svg.push_str("</linearGradient></defs>\n");
        let _ = writeln!(svg, r#"<g clip-path="url(#simplex)" stroke="none">"#);
        for c in &self.cells {
            let f = c.counts.map(|a| a as f64 / n);
            let cx = f[0] * v[0].0 + f[1] * v[1].0 + f[2] * v[2].0;
            let cy = f[0] * v[0].1 + f[1] * v[1].1 + f[2] * v[2].1;
            let mut d = String::new();
            for k in 0..6 {
                let ang = std::f64::consts::FRAC_PI_6 + k as f64 * std::f64::consts::FRAC_PI_3;
                let _ = write!(
                    d,
                    "{}{:.2},{:.2}",
                    if k == 0 { "M" } else { "L" },
                    cx + r * 1.01 * ang.cos(),
                    cy + r * 1.01 * ang.sin()
                );
            }
            let fill = if c.value.is_finite() && (self.scale == Scale::Linear || c.value > 0.0) {
                ramp(t_of(c.value))
            } else {
                "#bbbbbb".to_string()
            };
            let _ = writeln!(
                svg,
                r#"<path d="{d}Z" fill="{fill}" data-a="{} {} {}" data-v="{}"/>"#,
                c.counts[0],
                c.counts[1],
                c.counts[2],
                esc(&c.raw)
            );
        }
        svg.push_str("</g>\n");
        let _ = writeln!(svg, r#"<path d="{tri}" fill="none" stroke="black"/>"#);
        let labels = ["type 1", "type 2", "type 3"];
        let offs = [(0.0, -8.0), (-6.0, 16.0), (6.0, 16.0)];
        for k in 0..3 {
            let _ = writeln!(
                svg,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                v[k].0 + offs[k].0,
                v[k].1 + offs[k].1,
                labels[k]
            );
        }
        let bx = margin + side + 30.0;
        let (by, bh) = (margin, height);
        let _ = writeln!(
            svg,
            r#"<rect x="{bx:.2}" y="{by:.2}" width="16" height="{bh:.2}" fill="url(#ramp)" stroke="black"/>"#
        );
        if hi > lo {
            let axis = Axis {
                lo,
                hi,
                scale: self.scale,
            };
            let mut ticks: Vec<f64> = axis.ticks().into_iter().filter(|t| *t >= lo && *t <= hi).collect();
            if ticks.is_empty() {
                ticks = vec![lo, hi];
            }
            for t in ticks {
                let y = by + bh - t_of(t) * bh;
                let _ = writeln!(
                    svg,
                    r#"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}">{}</text>"#,
                    bx + 16.0,
                    bx + 20.0,
                    bx + 22.0,
                    y + 4.0,
                    tick_label(t)
                );
            }
        }
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}{}</text>"#,
            bx + 8.0,
            by - 10.0,
            esc(&self.value_label),
            if self.scale == Scale::Log { " (log)" } else { "" }
        );
        svg.push_str("</svg>\n");
        svg
    }
}
