//! Text artifacts: versioned CSV tables, a minimal SVG line plot, and
//! atomic file writes.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write as _};
use std::path::Path;

use crate::lock::LockTrajectory;
use crate::spectral::SpectralDensity;

pub const SPECTRUM_SCHEMA: &str = "bhet-spectrum/1";
pub const CORRELATION_SCHEMA: &str = "bhet-correlation/1";
pub const LOCK_SCHEMA: &str = "bhet-lock/1";

/// `#`-prefixed header lines written above every table.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Metadata {
    pub config_hash: String,
    pub tool_version: String,
    pub entries: Vec<(String, String)>,
}

impl Metadata {
    pub fn new(config_hash: impl Into<String>, tool_version: impl Into<String>) -> Self {
        Metadata {
            config_hash: config_hash.into(),
            tool_version: tool_version.into(),
            entries: Vec::new(),
        }
    }

    pub fn with(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.entries.push((key.into(), value.to_string()));
        self
    }

    fn write_header(&self, out: &mut String, schema: &str) {
        let _ = writeln!(out, "# schema: {schema}");
        let _ = writeln!(out, "# tool_version: {}", self.tool_version);
        let _ = writeln!(out, "# config_hash: {}", self.config_hash);
        for (k, v) in &self.entries {
            let _ = writeln!(out, "# {k}: {v}");
        }
    }
}

/// `omega,chi_normalized[,sigma]`.
pub fn spectrum_csv(sd: &SpectralDensity, meta: &Metadata) -> String {
    let mut out = String::new();
    meta.write_header(&mut out, SPECTRUM_SCHEMA);
    let _ = writeln!(out, "# normalization: {}", sd.normalization.as_str());
    if let Some(n) = sd.snapshot.segments {
        let _ = writeln!(out, "# segments: {n}");
    }
    match &sd.sigma {
        Some(sigma) => {
            out.push_str("omega,chi_normalized,sigma\n");
            for ((w, c), s) in sd.omega.iter().zip(&sd.chi).zip(sigma) {
                let _ = writeln!(out, "{w},{c},{s}");
            }
        }
        None => {
            out.push_str("omega,chi_normalized\n");
            for (w, c) in sd.omega.iter().zip(&sd.chi) {
                let _ = writeln!(out, "{w},{c}");
            }
        }
    }
    out
}

/// Parses a table written by [`spectrum_csv`] back into
/// `(omega, chi, sigma)` columns.
pub fn parse_spectrum_csv(text: &str) -> Result<(Vec<f64>, Vec<f64>, Option<Vec<f64>>), String> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().ok_or("missing header")?;
    let with_sigma = match header {
        "omega,chi_normalized" => false,
        "omega,chi_normalized,sigma" => true,
        other => return Err(format!("unexpected header `{other}`")),
    };
    let (mut w, mut c, mut s) = (Vec::new(), Vec::new(), Vec::new());
    for (i, line) in lines.enumerate() {
        let cols: Vec<&str> = line.split(',').collect();
        let num = |k: usize| -> Result<f64, String> {
            cols.get(k)
                .ok_or(format!("row {i}: missing column {k}"))?
                .parse::<f64>()
                .map_err(|e| format!("row {i}: {e}"))
        };
        w.push(num(0)?);
        c.push(num(1)?);
        if with_sigma {
            s.push(num(2)?);
        }
    }
    Ok((w, c, with_sigma.then_some(s)))
}

/// `tau,lambda_prime,lambda_prime_quadrature`.
pub fn correlation_csv(tau: &[f64], direct: &[f64], quadrature: &[f64], meta: &Metadata) -> String {
    let mut out = String::new();
    meta.write_header(&mut out, CORRELATION_SCHEMA);
    out.push_str("tau,lambda_prime,lambda_prime_quadrature\n");
    for ((t, a), b) in tau.iter().zip(direct).zip(quadrature) {
        let _ = writeln!(out, "{t},{a},{b}");
    }
    out
}

/// `t,phibar,error`.
pub fn lock_csv(traj: &LockTrajectory, meta: &Metadata) -> String {
    let mut out = String::new();
    meta.write_header(&mut out, LOCK_SCHEMA);
    out.push_str("t,phibar,error\n");
    for ((t, p), e) in traj.t.iter().zip(&traj.phibar).zip(&traj.error) {
        let _ = writeln!(out, "{t},{p},{e}");
    }
    out
}

/// Writes `contents` to a temporary sibling and renames it over `path`, so
/// readers never observe a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "path has no file name"))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesStyle {
    Line,
    Points,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub style: SeriesStyle,
}

impl Series {
    pub fn line(label: impl Into<String>, x: &[f64], y: &[f64]) -> Self {
        Series {
            label: label.into(),
            x: x.to_vec(),
            y: y.to_vec(),
            style: SeriesStyle::Line,
        }
    }

    pub fn points(label: impl Into<String>, x: &[f64], y: &[f64]) -> Self {
        Series {
            style: SeriesStyle::Points,
            ..Series::line(label, x, y)
        }
    }
}

#[derive(Debug, Clone)]
pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Plot `10 log10(y)` instead of `y`.
    pub db: bool,
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];
const PANEL_W: f64 = 420.0;
const PANEL_H: f64 = 300.0;
const MARGIN: f64 = 56.0;

fn nice_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    if !(hi > lo) {
        return vec![lo];
    }
    let raw = (hi - lo) / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{:.3}", v);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders panels side by side in a grid with `columns` columns.
pub fn svg_plot(panels: &[Panel], columns: usize) -> String {
    let columns = columns.max(1);
    let rows = panels.len().div_ceil(columns).max(1);
    let width = columns as f64 * PANEL_W;
    let height = rows as f64 * PANEL_H;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, panel) in panels.iter().enumerate() {
        let ox = (i % columns) as f64 * PANEL_W;
        let oy = (i / columns) as f64 * PANEL_H;
        render_panel(&mut out, panel, ox, oy);
    }
    out.push_str("</svg>\n");
    out
}

fn render_panel(out: &mut String, panel: &Panel, ox: f64, oy: f64) {
    let tf = |y: f64| if panel.db { 10.0 * y.log10() } else { y };
    let mut xs = (f64::INFINITY, f64::NEG_INFINITY);
    let mut ys = (f64::INFINITY, f64::NEG_INFINITY);
    for s in &panel.series {
        for (&x, &y) in s.x.iter().zip(&s.y) {
            let y = tf(y);
            if x.is_finite() && y.is_finite() {
                xs = (xs.0.min(x), xs.1.max(x));
                ys = (ys.0.min(y), ys.1.max(y));
            }
        }
    }
    if !xs.0.is_finite() {
        xs = (0.0, 1.0);
        ys = (0.0, 1.0);
    }
    if ys.1 - ys.0 < 1e-12 {
        ys = (ys.0 - 0.5, ys.1 + 0.5);
    }
    let pad = 0.05 * (ys.1 - ys.0);
    ys = (ys.0 - pad, ys.1 + pad);
    if xs.1 - xs.0 < 1e-12 {
        xs = (xs.0 - 0.5, xs.1 + 0.5);
    }

    let (l, r) = (ox + MARGIN, ox + PANEL_W - 14.0);
    let (t, b) = (oy + 26.0, oy + PANEL_H - 40.0);
    let px = |x: f64| l + (x - xs.0) / (xs.1 - xs.0) * (r - l);
    let py = |y: f64| b - (y - ys.0) / (ys.1 - ys.0) * (b - t);

    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="13">{}</text>"#,
        (l + r) / 2.0,
        oy + 16.0,
        escape(&panel.title)
    );
    let _ = writeln!(
        out,
        r#"<rect x="{l:.1}" y="{t:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#,
        r - l,
        b - t
    );
    for x in nice_ticks(xs.0, xs.1, 6) {
        let _ = writeln!(
            out,
            r#"<line x1="{0:.1}" y1="{b:.1}" x2="{0:.1}" y2="{1:.1}" stroke="black"/><text x="{0:.1}" y="{2:.1}" text-anchor="middle">{3}</text>"#,
            px(x),
            b + 4.0,
            b + 16.0,
            fmt_tick(x)
        );
    }
    for y in nice_ticks(ys.0, ys.1, 5) {
        let _ = writeln!(
            out,
            r#"<line x1="{0:.1}" y1="{1:.1}" x2="{l:.1}" y2="{1:.1}" stroke="black"/><text x="{2:.1}" y="{3:.1}" text-anchor="end">{4}</text>"#,
            l - 4.0,
            py(y),
            l - 6.0,
            py(y) + 4.0,
            fmt_tick(y)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        (l + r) / 2.0,
        oy + PANEL_H - 8.0,
        escape(&panel.x_label)
    );
    let y_label = if panel.db {
        format!("{} (dB)", panel.y_label)
    } else {
        panel.y_label.clone()
    };
    let _ = writeln!(
        out,
        r#"<text transform="translate({:.1},{:.1}) rotate(-90)" text-anchor="middle">{}</text>"#,
        ox + 14.0,
        (t + b) / 2.0,
        escape(&y_label)
    );

    for (k, s) in panel.series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let pts: Vec<(f64, f64)> = s
            .x
            .iter()
            .zip(&s.y)
            .map(|(&x, &y)| (x, tf(y)))
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|(x, y)| (px(x), py(y)))
            .collect();
        match s.style {
            SeriesStyle::Line => {
                let mut d = String::new();
                for (j, (x, y)) in pts.iter().enumerate() {
                    let _ = write!(d, "{}{x:.2},{y:.2}", if j == 0 { "M" } else { " L" });
                }
                let _ = writeln!(out, r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="1.5"/>"#);
            }
            SeriesStyle::Points => {
                for (x, y) in pts {
                    let _ = writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="1.6" fill="{color}"/>"#);
                }
            }
        }
        let ly = t + 14.0 + 13.0 * k as f64;
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{ly:.1}" text-anchor="end" fill="{color}">{}</text>"#,
            r - 6.0,
            escape(&s.label)
        );
    }
}
