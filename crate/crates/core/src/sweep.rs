//! α-sweeps over groups and bandwidths, with CSV, JSON and SVG output.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::density::SymmetryGroup;
use crate::error::{Error, Result};
use crate::paley_wiener::Bandwidth;
use crate::solution::ExtremalSolution;
use crate::solve::{solve, RouteChoice, CROSS_CHECK_TOL};

/// Environment variable capping sweep parallelism.
pub const THREADS_ENV: &str = "EXTREMAL_THREADS";

/// CSV header; failed rows append one extra column with the error code.
pub const CSV_HEADER: &str = "group,delta,alpha,k,sqrtA,aValue,route,nodes,residual";

/// Fraction of points that must succeed for a sweep to count as successful.
pub const MIN_SUCCESS_FRACTION: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
    Svg,
}

impl FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            "svg" => Ok(Self::Svg),
            other => Err(Error::InvalidInput(format!("unknown format `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub groups: Vec<SymmetryGroup>,
    pub deltas: Vec<Bandwidth>,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub alpha_step: f64,
    pub k: usize,
    pub route: RouteChoice,
    pub out_path: Option<PathBuf>,
    pub format: OutputFormat,
    /// Compare numerical-kernel rows against the variational route at the sweep endpoints.
    pub cross_check: bool,
}

impl SweepConfig {
    /// All groups over the four standard bandwidths.
    pub fn standard(alpha_min: f64, alpha_max: f64, alpha_step: f64) -> Result<Self> {
        let deltas = [1.0, 4.0 / 3.0, 1.5, 2.0]
            .iter()
            .map(|&d| Bandwidth::new(d))
            .collect::<Result<Vec<_>>>()?;
        let cfg = Self {
            groups: SymmetryGroup::ALL.to_vec(),
            deltas,
            alpha_min,
            alpha_max,
            alpha_step,
            k: 1,
            route: RouteChoice::Auto,
            out_path: None,
            format: OutputFormat::Csv,
            cross_check: true,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_step > 0.0 && self.alpha_step.is_finite()) {
            return Err(Error::InvalidInput(format!("alpha step {} must be positive", self.alpha_step)));
        }
        if !(self.alpha_min.is_finite() && self.alpha_max.is_finite() && self.alpha_min <= self.alpha_max) {
            return Err(Error::InvalidInput(format!(
                "alpha range [{}, {}] is empty",
                self.alpha_min, self.alpha_max
            )));
        }
        if self.groups.is_empty() || self.deltas.is_empty() {
            return Err(Error::InvalidInput("sweep needs at least one group and one bandwidth".into()));
        }
        if self.k == 0 {
            return Err(Error::InvalidInput("k must be at least 1".into()));
        }
        Ok(())
    }

    /// `α_min + i·step` up to `α_max` (with a relative slack of 1e−9 steps),
    /// rounded to 12 decimals so that printed grids are clean.
    pub fn alphas(&self) -> Vec<f64> {
        let count = ((self.alpha_max - self.alpha_min) / self.alpha_step + 1e-9).floor() as usize;
        (0..=count)
            .map(|i| {
                let a = self.alpha_min + i as f64 * self.alpha_step;
                let r = (a * 1e12).round() / 1e12;
                if r == 0.0 {
                    0.0
                } else {
                    r
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub group: SymmetryGroup,
    pub delta: Bandwidth,
    pub alpha: f64,
    pub k: usize,
    pub outcome: std::result::Result<ExtremalSolution, Error>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub route: RouteChoice,
    pub points: Vec<SweepPoint>,
    pub warnings: Vec<String>,
}

impl SweepReport {
    pub fn success_fraction(&self) -> f64 {
        if self.points.is_empty() {
            return 1.0;
        }
        let ok = self.points.iter().filter(|p| p.outcome.is_ok()).count();
        ok as f64 / self.points.len() as f64
    }

    pub fn succeeded(&self) -> bool {
        self.success_fraction() >= MIN_SUCCESS_FRACTION
    }
}

/// Thread count from [`THREADS_ENV`], falling back to the available parallelism.
pub fn sweep_threads() -> usize {
    let default = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or(default)
}

/// Runs every `(group, Δ, α)` point. Points are computed concurrently and
/// collected in input order, so the report is independent of scheduling.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepReport> {
    cfg.validate()?;
    let alphas = cfg.alphas();
    let mut jobs = Vec::with_capacity(cfg.groups.len() * cfg.deltas.len() * alphas.len());
    for &g in &cfg.groups {
        for &d in &cfg.deltas {
            for &a in &alphas {
                jobs.push((g, d, a));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(sweep_threads())
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    let points: Vec<SweepPoint> = pool.install(|| {
        jobs.par_iter()
            .map(|&(group, delta, alpha)| SweepPoint {
                group,
                delta,
                alpha,
                k: cfg.k,
                outcome: solve(group, delta, alpha, cfg.k, cfg.route),
            })
            .collect()
    });
    let mut report = SweepReport {
        route: cfg.route,
        points,
        warnings: Vec::new(),
    };
    if cfg.cross_check {
        report.warnings = pool.install(|| endpoint_cross_check(cfg, &report.points));
    }
    Ok(report)
}

/// Variational re-solve of the first and last α for every series that the
/// auto route sends to the numerical kernel.
fn endpoint_cross_check(cfg: &SweepConfig, points: &[SweepPoint]) -> Vec<String> {
    if cfg.route != RouteChoice::Auto || cfg.k != 1 {
        return Vec::new();
    }
    let checks: Vec<&SweepPoint> = cfg
        .groups
        .iter()
        .filter(|g| !matches!(g, SymmetryGroup::U | SymmetryGroup::O))
        .flat_map(|&g| {
            cfg.deltas.iter().flat_map(move |&d| {
                let series: Vec<&SweepPoint> = points.iter().filter(|p| p.group == g && p.delta == d).collect();
                let mut ends = Vec::new();
                if let Some(first) = series.first() {
                    ends.push(*first);
                }
                if series.len() > 1 {
                    ends.push(*series.last().unwrap());
                }
                ends
            })
        })
        .collect();
    checks
        .par_iter()
        .filter_map(|p| {
            let kernel = p.outcome.as_ref().ok()?;
            match solve(p.group, p.delta, p.alpha, 1, RouteChoice::Variational) {
                Ok(v) => {
                    let rel = (v.a_value - kernel.a_value).abs() / kernel.a_value;
                    (rel > CROSS_CHECK_TOL).then(|| {
                        format!(
                            "{} Δ={} α={}: kernel and variational differ by {rel:.2e} relative",
                            p.group, p.delta, p.alpha
                        )
                    })
                }
                Err(e) => Some(format!(
                    "{} Δ={} α={}: variational cross-check failed: {e}",
                    p.group, p.delta, p.alpha
                )),
            }
        })
        .collect()
}

/// One output record; also the single-result JSON schema.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRecord {
    pub group: SymmetryGroup,
    pub delta: f64,
    pub alpha: f64,
    pub k: usize,
    pub lambda0: Option<f64>,
    #[serde(rename = "aValue")]
    pub a_value: Option<f64>,
    #[serde(rename = "sqrtA")]
    pub sqrt_a: Option<f64>,
    pub route: String,
    pub nodes: Option<usize>,
    pub residual: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl ResultRecord {
    pub fn new(
        group: SymmetryGroup,
        delta: Bandwidth,
        alpha: f64,
        k: usize,
        requested: RouteChoice,
        outcome: &std::result::Result<ExtremalSolution, Error>,
    ) -> Self {
        match outcome {
            Ok(s) => Self {
                group,
                delta: delta.get(),
                alpha,
                k,
                lambda0: Some(s.lambda0),
                a_value: Some(s.a_value),
                sqrt_a: Some(s.sqrt_a()),
                route: s.route.to_string(),
                nodes: Some(s.diagnostics.nodes),
                residual: Some(s.diagnostics.residual),
                warnings: s.diagnostics.warnings.clone(),
                error: None,
                message: None,
            },
            Err(e) => Self {
                group,
                delta: delta.get(),
                alpha,
                k,
                lambda0: None,
                a_value: None,
                sqrt_a: None,
                route: requested.to_string(),
                nodes: None,
                residual: None,
                warnings: Vec::new(),
                error: Some(e.code().to_string()),
                message: Some(e.to_string()),
            },
        }
    }

    pub fn from_point(p: &SweepPoint, requested: RouteChoice) -> Self {
        Self::new(p.group, p.delta, p.alpha, p.k, requested, &p.outcome)
    }
}

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn to_csv(report: &SweepReport) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for p in &report.points {
        let r = ResultRecord::from_point(p, report.route);
        let _ = write!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.group,
            r.delta,
            r.alpha,
            r.k,
            opt(r.sqrt_a),
            opt(r.a_value),
            r.route,
            opt(r.nodes),
            opt(r.residual)
        );
        if let Some(code) = &r.error {
            let _ = write!(out, ",{code}");
        }
        out.push('\n');
    }
    out
}

pub fn to_json(report: &SweepReport) -> String {
    let records: Vec<ResultRecord> = report
        .points
        .iter()
        .map(|p| ResultRecord::from_point(p, report.route))
        .collect();
    let mut s = serde_json::to_string_pretty(&records).expect("records serialize");
    s.push('\n');
    s
}

const SVG_W: f64 = 800.0;
const SVG_H: f64 = 500.0;
const COLORS: [&str; 5] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];
const DASHES: [&str; 4] = ["", "6,3", "2,3", "8,3,2,3"];

fn group_color(g: SymmetryGroup) -> &'static str {
    let i = SymmetryGroup::ALL.iter().position(|x| *x == g).unwrap_or(0);
    COLORS[i % COLORS.len()]
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Line plot of `√𝔸` against `α`, one polyline per `(group, Δ)` series.
pub fn to_svg(report: &SweepReport) -> String {
    let (left, right, top, bottom) = (70.0, 170.0, 30.0, 60.0);
    let pw = SVG_W - left - right;
    let ph = SVG_H - top - bottom;
    let ok: Vec<(&SweepPoint, f64)> = report
        .points
        .iter()
        .filter_map(|p| p.outcome.as_ref().ok().map(|s| (p, s.sqrt_a())))
        .collect();
    let (mut x0, mut x1) = report
        .points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.alpha), b.max(p.alpha)));
    if !(x1 > x0) {
        x0 -= 0.5;
        x1 += 0.5;
    }
    let y1 = ok.iter().map(|(_, y)| *y).fold(0.0, f64::max) * 1.1;
    let y1 = if y1 > 0.0 { y1 } else { 1.0 };
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| top + ph - y / y1 * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_W}" height="{SVG_H}" viewBox="0 0 {SVG_W} {SVG_H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{SVG_W}" height="{SVG_H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for i in 0..=5 {
        let fx = x0 + (x1 - x0) * i as f64 / 5.0;
        let fy = y1 * i as f64 / 5.0;
        let (px, py) = (sx(fx), sy(fy));
        let _ = writeln!(
            s,
            r#"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{fx:.2}</text>"#,
            top + ph,
            top + ph + 5.0,
            top + ph + 20.0
        );
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{py:.2}" x2="{left}" y2="{py:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{fy:.3}</text>"#,
            left - 5.0,
            left - 8.0,
            py + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="14">α</text>"#,
        left + pw / 2.0,
        SVG_H - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" text-anchor="middle" font-size="14" transform="rotate(-90 18 {:.2})">√𝔸</text>"#,
        top + ph / 2.0,
        top + ph / 2.0
    );

    // series in first-appearance order
    let mut series: Vec<(SymmetryGroup, Bandwidth)> = Vec::new();
    for p in &report.points {
        if !series.contains(&(p.group, p.delta)) {
            series.push((p.group, p.delta));
        }
    }
    let mut deltas: Vec<Bandwidth> = Vec::new();
    for (_, d) in &series {
        if !deltas.contains(d) {
            deltas.push(*d);
        }
    }
    for (idx, (g, d)) in series.iter().enumerate() {
        let color = group_color(*g);
        let di = deltas.iter().position(|x| x == d).unwrap_or(0);
        let dash = DASHES[di % DASHES.len()];
        let dash_attr = if dash.is_empty() {
            String::new()
        } else {
            format!(r#" stroke-dasharray="{dash}""#)
        };
        // a failed point breaks the line
        let mut runs: Vec<Vec<(f64, f64)>> = vec![Vec::new()];
        for p in report.points.iter().filter(|p| p.group == *g && p.delta == *d) {
            match &p.outcome {
                Ok(sol) => runs.last_mut().unwrap().push((sx(p.alpha), sy(sol.sqrt_a()))),
                Err(_) => runs.push(Vec::new()),
            }
        }
        for run in runs.iter().filter(|r| !r.is_empty()) {
            let pts: Vec<String> = run.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash_attr} points="{}"/>"#,
                pts.join(" ")
            );
        }
        let ly = top + 10.0 + 18.0 * idx as f64;
        let lx = left + pw + 15.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"{dash_attr}/><text x="{:.2}" y="{:.2}">{} Δ={:.4}</text>"#,
            lx + 25.0,
            lx + 30.0,
            ly + 4.0,
            xml_escape(g.as_str()),
            d.get()
        );
    }
    s.push_str("</svg>\n");
    s
}

pub fn render(report: &SweepReport, format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => to_csv(report),
        OutputFormat::Json => to_json(report),
        OutputFormat::Svg => to_svg(report),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bw(d: f64) -> Bandwidth {
        Bandwidth::new(d).unwrap()
    }

    fn small(groups: Vec<SymmetryGroup>) -> SweepConfig {
        SweepConfig {
            groups,
            deltas: vec![bw(1.0)],
            alpha_min: 0.0,
            alpha_max: 1.0,
            alpha_step: 0.25,
            k: 1,
            route: RouteChoice::Auto,
            out_path: None,
            format: OutputFormat::Csv,
            cross_check: false,
        }
    }

    #[test]
    fn alpha_grid() {
        let mut c = small(vec![SymmetryGroup::U]);
        assert_eq!(c.alphas(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        c.alpha_step = 0.05;
        c.alpha_max = 4.0;
        let a = c.alphas();
        assert_eq!(a.len(), 81);
        assert_eq!(a[3], 0.15);
        assert_eq!(*a.last().unwrap(), 4.0);
    }

    #[test]
    fn rejects_bad_configs() {
        let mut c = small(vec![SymmetryGroup::U]);
        c.alpha_step = 0.0;
        assert!(c.validate().is_err());
        let mut c = small(vec![SymmetryGroup::U]);
        c.alpha_min = 2.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn flat_weight_column_is_constant() {
        let r = run_sweep(&small(vec![SymmetryGroup::U])).unwrap();
        let csv = to_csv(&r);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        for line in lines {
            let cols: Vec<&str> = line.split(',').collect();
            assert_eq!(cols.len(), 9);
            assert!((cols[4].parse::<f64>().unwrap() - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn failed_points_get_an_error_column() {
        let mut c = small(vec![SymmetryGroup::Sp]);
        c.route = RouteChoice::Debranges;
        let r = run_sweep(&c).unwrap();
        assert!(!r.succeeded());
        for line in to_csv(&r).lines().skip(1) {
            let cols: Vec<&str> = line.split(',').collect();
            assert_eq!(cols.len(), 10);
            assert_eq!(cols[4], "");
            assert_eq!(cols[9], "invalid_input");
        }
    }

    #[test]
    fn svg_and_json_render() {
        let r = run_sweep(&small(vec![SymmetryGroup::U, SymmetryGroup::O])).unwrap();
        let svg = to_svg(&r);
        assert!(svg.starts_with("<svg") && svg.contains(r#"width="800""#) && svg.contains(r#"height="500""#));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains(">α<") && svg.contains("√𝔸"));
        let v: serde_json::Value = serde_json::from_str(&to_json(&r)).unwrap();
        let first = &v.as_array().unwrap()[0];
        for key in ["group", "delta", "alpha", "k", "lambda0", "aValue", "sqrtA", "route", "nodes", "residual"] {
            assert!(first.get(key).is_some(), "missing {key}");
        }
    }
}
