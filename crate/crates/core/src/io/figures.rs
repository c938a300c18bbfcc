//! Figure data series and minimal self-contained SVG rendering.
//!
//! Figures 1 and 2 hold the same (N, stderr) series; figure 1 is drawn on
//! linear axes and figure 2 on log-log axes. Figure 3 shows measured K(p)
//! with the closed-form curves overlaid.

use std::fmt::Write as _;

use crate::analysis::ScalingResult;
use crate::distributions::DistributionSpec;
use crate::formulas::{FitCoefficients, GAMMA_COEFFICIENTS, NORMAL_COEFFICIENTS, P_MAX, P_MIN};
use crate::mc_engine::StdErrTable;

pub const OVERLAY_POINTS: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub panel: char,
    pub dist: String,
    pub p: f64,
    pub n: usize,
    pub stderr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KSource {
    Measured,
    Formula,
}

impl KSource {
    fn as_str(self) -> &'static str {
        match self {
            KSource::Measured => "measured",
            KSource::Formula => "formula",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KPoint {
    pub panel: char,
    pub dist: String,
    pub source: KSource,
    pub p: f64,
    pub k: f64,
}

/// Panels a (normal, `high` levels), b (gamma, `high`), c (gamma, `low`),
/// for the standard-parameter distributions present in `table`.
pub fn stderr_series(table: &StdErrTable, high: &[f64], low: &[f64]) -> Vec<CurvePoint> {
    let normal = DistributionSpec::standard_normal().label();
    let gamma = DistributionSpec::standard_gamma().label();
    let panels: [(char, &str, &[f64]); 3] = [
        ('a', &normal, high),
        ('b', &gamma, high),
        ('c', &gamma, low),
    ];
    let mut out = Vec::new();
    for (panel, label, levels) in panels {
        for &p in levels {
            for r in table.series(label, p) {
                out.push(CurvePoint {
                    panel,
                    dist: label.to_string(),
                    p: r.p,
                    n: r.n,
                    stderr: r.stderr,
                });
            }
        }
    }
    out
}

/// `count` levels spanning [0.001, 0.999], evenly spaced in logit and
/// including 0.5. `count` is rounded up to an even number >= 4.
pub fn overlay_levels(count: usize) -> Vec<f64> {
    let half = count.max(4).div_ceil(2);
    let span = (P_MAX / (1.0 - P_MAX)).ln();
    let logistic = |x: f64| 1.0 / (1.0 + (-x).exp());
    let mut out: Vec<f64> = (0..half)
        .map(|i| logistic(-span * (half - 1 - i) as f64 / (half - 1) as f64))
        .chain((1..=half).map(|j| logistic(span * j as f64 / half as f64)))
        .collect();
    out[0] = P_MIN;
    *out.last_mut().unwrap() = P_MAX;
    out
}

/// Panels a (normal) and b (gamma): measured K for the standard
/// distributions plus the closed-form curve at `overlay` levels.
pub fn k_series(results: &[ScalingResult], overlay: usize) -> Vec<KPoint> {
    let blocks: [(char, String, FitCoefficients); 2] = [
        (
            'a',
            DistributionSpec::standard_normal().label(),
            NORMAL_COEFFICIENTS,
        ),
        (
            'b',
            DistributionSpec::standard_gamma().label(),
            GAMMA_COEFFICIENTS,
        ),
    ];
    let levels = overlay_levels(overlay);
    let mut out = Vec::new();
    for (panel, label, coef) in blocks {
        out.extend(results.iter().filter(|r| r.dist == label).map(|r| KPoint {
            panel,
            dist: label.clone(),
            source: KSource::Measured,
            p: r.p,
            k: r.k,
        }));
        out.extend(levels.iter().map(|&p| KPoint {
            panel,
            dist: label.clone(),
            source: KSource::Formula,
            p,
            k: coef.eval(p),
        }));
    }
    out
}

pub fn stderr_series_csv(points: &[CurvePoint]) -> String {
    let mut s = String::from("panel,dist,p,N,stderr\n");
    for c in points {
        let _ = writeln!(s, "{},{},{},{},{}", c.panel, c.dist, c.p, c.n, c.stderr);
    }
    s
}

pub fn k_series_csv(points: &[KPoint]) -> String {
    let mut s = String::from("panel,dist,source,p,K\n");
    for k in points {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            k.panel,
            k.dist,
            k.source.as_str(),
            k.p,
            k.k
        );
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mark {
    Line,
    Dots,
}

struct Series {
    name: String,
    points: Vec<(f64, f64)>,
    mark: Mark,
}

struct Panel {
    title: String,
    x_label: &'static str,
    y_label: &'static str,
    x_log: bool,
    y_log: bool,
    series: Vec<Series>,
}

const PANEL_W: f64 = 380.0;
const PANEL_H: f64 = 300.0;
const MARGIN_L: f64 = 60.0;
const MARGIN_R: f64 = 90.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 45.0;
const COLOURS: [&str; 9] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f",
    "#17becf",
];

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if !(1e-2..1e4).contains(&a) {
        return format!("{v:.0e}");
    }
    let s = format!("{v:.3}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Axis {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| v.is_finite() && (!log || *v > 0.0)) {
            let v = if log { v.log10() } else { v };
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if log {
            (lo, hi) = (lo.floor(), hi.ceil());
        }
        if hi - lo < 1e-12 {
            hi = lo + 1.0;
        }
        if !log {
            let pad = 0.05 * (hi - lo);
            lo = if lo >= 0.0 {
                (lo - pad).max(0.0)
            } else {
                lo - pad
            };
            hi += pad;
        }
        Axis { lo, hi, log }
    }

    fn unit(&self, v: f64) -> f64 {
        let v = if self.log { v.log10() } else { v };
        (v - self.lo) / (self.hi - self.lo)
    }

    fn ticks(&self) -> Vec<f64> {
        if self.log {
            (self.lo as i32..=self.hi as i32)
                .map(|e| 10f64.powi(e))
                .collect()
        } else {
            (0..=4)
                .map(|i| self.lo + (self.hi - self.lo) * f64::from(i) / 4.0)
                .collect()
        }
    }
}

fn render(title: &str, panels: &[Panel]) -> String {
    let width = PANEL_W * panels.len().max(1) as f64;
    let height = PANEL_H + 30.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="18" text-anchor="middle" font-size="14">{title}</text>"#,
        width / 2.0
    );
    for (i, panel) in panels.iter().enumerate() {
        let ox = PANEL_W * i as f64;
        let oy = 30.0;
        let (x0, x1) = (ox + MARGIN_L, ox + PANEL_W - MARGIN_R);
        let (y0, y1) = (oy + PANEL_H - MARGIN_B, oy + MARGIN_T);
        let xa = Axis::fit(
            panel
                .series
                .iter()
                .flat_map(|s| s.points.iter().map(|p| p.0)),
            panel.x_log,
        );
        let ya = Axis::fit(
            panel
                .series
                .iter()
                .flat_map(|s| s.points.iter().map(|p| p.1)),
            panel.y_log,
        );
        let px = |v: f64| x0 + (x1 - x0) * xa.unit(v);
        let py = |v: f64| y0 + (y1 - y0) * ya.unit(v);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{}</text>"#,
            (x0 + x1) / 2.0,
            oy + 14.0,
            panel.title
        );
        let _ = writeln!(
            s,
            r#"<rect x="{x0}" y="{y1}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            x1 - x0,
            y0 - y1
        );
        for t in xa.ticks() {
            let x = px(t);
            let _ = writeln!(
                s,
                r#"<line x1="{x:.1}" y1="{y0}" x2="{x:.1}" y2="{}" stroke="black"/><text x="{x:.1}" y="{}" text-anchor="middle">{}</text>"#,
                y0 + 4.0,
                y0 + 16.0,
                tick_label(t)
            );
        }
        for t in ya.ticks() {
            let y = py(t);
            let _ = writeln!(
                s,
                r#"<line x1="{}" y1="{y:.1}" x2="{x0}" y2="{y:.1}" stroke="black"/><text x="{}" y="{:.1}" text-anchor="end">{}</text>"#,
                x0 - 4.0,
                x0 - 6.0,
                y + 4.0,
                tick_label(t)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            (x0 + x1) / 2.0,
            y0 + 32.0,
            panel.x_label
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle" transform="rotate(-90 {} {})">{}</text>"#,
            ox + 14.0,
            (y0 + y1) / 2.0,
            ox + 14.0,
            (y0 + y1) / 2.0,
            panel.y_label
        );
        for (j, series) in panel.series.iter().enumerate() {
            let colour = COLOURS[j % COLOURS.len()];
            let pts: Vec<(f64, f64)> = series
                .points
                .iter()
                .filter(|(x, y)| (!panel.x_log || *x > 0.0) && (!panel.y_log || *y > 0.0))
                .map(|&(x, y)| (px(x), py(y)))
                .collect();
            match series.mark {
                Mark::Line => {
                    let path: Vec<String> =
                        pts.iter().map(|(x, y)| format!("{x:.1},{y:.1}")).collect();
                    let _ = writeln!(
                        s,
                        r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#,
                        path.join(" ")
                    );
                }
                Mark::Dots => {
                    for (x, y) in &pts {
                        let _ = writeln!(
                            s,
                            r#"<circle cx="{x:.1}" cy="{y:.1}" r="2.2" fill="{colour}"/>"#
                        );
                    }
                }
            }
            let ly = y1 + 12.0 + 14.0 * j as f64;
            let _ = writeln!(
                s,
                r#"<rect x="{}" y="{}" width="10" height="3" fill="{colour}"/><text x="{}" y="{}">{}</text>"#,
                x1 + 8.0,
                ly - 4.0,
                x1 + 22.0,
                ly,
                series.name
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

fn stderr_panels(points: &[CurvePoint], log: bool) -> Vec<Panel> {
    let titles = [
        ('a', "normal"),
        ('b', "gamma, high levels"),
        ('c', "gamma, low levels"),
    ];
    titles
        .iter()
        .filter(|(id, _)| points.iter().any(|c| c.panel == *id))
        .map(|&(id, name)| {
            let mut levels: Vec<f64> = points
                .iter()
                .filter(|c| c.panel == id)
                .map(|c| c.p)
                .collect();
            levels.dedup();
            Panel {
                title: format!("{id}) {name}"),
                x_label: "N",
                y_label: "standard error",
                x_log: log,
                y_log: log,
                series: levels
                    .iter()
                    .map(|&p| Series {
                        name: format!("q{p}"),
                        points: points
                            .iter()
                            .filter(|c| c.panel == id && c.p == p)
                            .map(|c| (c.n as f64, c.stderr))
                            .collect(),
                        mark: Mark::Line,
                    })
                    .collect(),
            }
        })
        .collect()
}

/// Standard error against N on linear axes.
pub fn fig1_svg(points: &[CurvePoint]) -> String {
    render(
        "Standard error of quantile estimates",
        &stderr_panels(points, false),
    )
}

/// Standard error against N on log-log axes.
pub fn fig2_svg(points: &[CurvePoint]) -> String {
    render(
        "Standard error of quantile estimates (log-log)",
        &stderr_panels(points, true),
    )
}

/// Measured K(p) with closed-form overlay.
pub fn fig3_svg(points: &[KPoint]) -> String {
    let panels: Vec<Panel> = [('a', "normal"), ('b', "gamma")]
        .iter()
        .filter(|(id, _)| points.iter().any(|k| k.panel == *id))
        .map(|&(id, name)| {
            let pick = |src: KSource| -> Vec<(f64, f64)> {
                points
                    .iter()
                    .filter(|k| k.panel == id && k.source == src)
                    .map(|k| (k.p, k.k))
                    .collect()
            };
            Panel {
                title: format!("{id}) {name}"),
                x_label: "p",
                y_label: "K(p)",
                x_log: false,
                y_log: name == "gamma",
                series: vec![
                    Series {
                        name: "measured".into(),
                        points: pick(KSource::Measured),
                        mark: Mark::Dots,
                    },
                    Series {
                        name: "formula".into(),
                        points: pick(KSource::Formula),
                        mark: Mark::Line,
                    },
                ],
            }
        })
        .collect();
    render("Scaling coefficient K(p)", &panels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::Breakpoint;
    use crate::mc_engine::StdErrRow;

    fn table() -> StdErrTable {
        let mut rows = Vec::new();
        for spec in [
            DistributionSpec::standard_normal(),
            DistributionSpec::standard_gamma(),
        ] {
            for n in [10, 100, 1000] {
                for p in [0.001, 0.5, 0.999] {
                    rows.push(StdErrRow {
                        spec,
                        n,
                        p,
                        stderr: 1.0 / (n as f64).sqrt(),
                        mean_estimate: 0.0,
                        s_bar: 1.0,
                    });
                }
            }
        }
        StdErrTable::from_rows(rows).unwrap()
    }

    #[test]
    fn overlay_has_200_points_including_median() {
        let lv = overlay_levels(OVERLAY_POINTS);
        assert_eq!(lv.len(), 200);
        assert_eq!((lv[0], lv[199]), (P_MIN, P_MAX));
        assert!(lv.windows(2).all(|w| w[0] < w[1]));
        assert!(lv.contains(&0.5));
    }

    #[test]
    fn k_overlay_at_median() {
        let rs = vec![ScalingResult {
            dist: DistributionSpec::standard_normal().label(),
            p: 0.5,
            slope: -0.5,
            intercept_log10: 0.1,
            k: 1.26,
            n_min: Breakpoint::NotAssessed,
            n_used: 7,
        }];
        let pts = k_series(&rs, OVERLAY_POINTS);
        let mid = pts
            .iter()
            .find(|k| k.panel == 'a' && k.source == KSource::Formula && k.p == 0.5)
            .unwrap();
        assert!((mid.k - 1.253).abs() < 1e-15);
        assert_eq!(
            pts.iter().filter(|k| k.source == KSource::Formula).count(),
            400
        );
        assert_eq!(
            pts.iter().filter(|k| k.source == KSource::Measured).count(),
            1
        );
        let svg = fig3_svg(&pts);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn stderr_panels_select_levels() {
        let pts = stderr_series(&table(), &[0.5, 0.999], &[0.001]);
        assert_eq!(pts.iter().filter(|c| c.panel == 'a').count(), 6);
        assert_eq!(pts.iter().filter(|c| c.panel == 'b').count(), 6);
        assert_eq!(pts.iter().filter(|c| c.panel == 'c').count(), 3);
        let csv = stderr_series_csv(&pts);
        assert_eq!(csv.lines().count(), 16);
        for svg in [fig1_svg(&pts), fig2_svg(&pts)] {
            assert_eq!(svg.matches("<polyline").count(), 5);
        }
    }

    #[test]
    fn tick_labels() {
        assert_eq!(tick_label(1000.0), "1000");
        assert_eq!(tick_label(0.25), "0.25");
        assert_eq!(tick_label(1e-3), "1e-3");
        assert_eq!(tick_label(0.0), "0");
    }
}
