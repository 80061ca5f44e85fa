//! Deterministic SVG plots of the CSV tables. Output is a pure function of the
//! CSV text: every number is printed with a fixed precision and series are
//! ordered by key.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Read;

use super::csv_out::{check_header, read_raw, Fields, Table};
use crate::error::{Error, Result};

const WIDTH: f64 = 700.0;
const HEIGHT: f64 = 420.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 200.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 55.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// Which figure to draw from a table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// Misclassification into source-private classes against flip rate, one curve per SPCR.
    NoiseCurves,
    /// H-score against SPCR, one curve per arm.
    SpcrCurves,
    /// H-score against α.
    AlphaCurve,
    /// H-score against target-private proportion, one curve per SSL arm.
    AblationCurves,
    /// Observed noise rate against flip rate, one curve per uncertainty kind and SPCR.
    UncertaintyNoise,
    /// Loss components against step.
    Losses,
    /// Raw inputs and learned features of the toy runs.
    ToyScatter,
}

impl PlotKind {
    pub fn file_name(self) -> &'static str {
        match self {
            PlotKind::NoiseCurves => "noise_curves.svg",
            PlotKind::SpcrCurves => "spcr_curves.svg",
            PlotKind::AlphaCurve => "alpha_curve.svg",
            PlotKind::AblationCurves => "ssl_ablation.svg",
            PlotKind::UncertaintyNoise => "uncertainty_noise.svg",
            PlotKind::Losses => "losses.svg",
            PlotKind::ToyScatter => "toy_scatter.svg",
        }
    }

    fn table(self) -> Table {
        match self {
            PlotKind::NoiseCurves | PlotKind::SpcrCurves | PlotKind::AlphaCurve | PlotKind::AblationCurves => {
                Table::Eval
            }
            PlotKind::UncertaintyNoise => Table::Noise,
            PlotKind::Losses => Table::Steps,
            PlotKind::ToyScatter => Table::ToyPoints,
        }
    }
}

/// One rendered SVG.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlotFile {
    pub name: String,
    pub svg: String,
}

#[derive(Debug, Clone)]
struct Series {
    name: String,
    points: Vec<(f64, f64)>,
    dashed: bool,
}

#[derive(Debug, Clone)]
struct Chart {
    title: String,
    x_label: String,
    y_label: String,
    series: Vec<Series>,
}

/// Renders the plots for a CSV table. With `kind = None` the figure is chosen from
/// the table header and, for evaluation tables, from the arm names. An input
/// without data rows yields no files.
pub fn emit_plots<R: Read>(input: R, kind: Option<PlotKind>) -> Result<Vec<PlotFile>> {
    let (header, records) = read_raw(input)?;
    if header.is_empty() && records.is_empty() {
        return Ok(Vec::new());
    }
    let kind = match kind {
        Some(k) => {
            check_header(&header, k.table())?;
            k
        }
        None => {
            let table = Table::detect(&header).ok_or_else(|| {
                Error::Schema(format!(
                    "unrecognised header `{}`; expected one of the step, eval, noise or toy_points tables",
                    header.join(",")
                ))
            })?;
            if records.is_empty() {
                return Ok(Vec::new());
            }
            infer_kind(table, &records)?
        }
    };
    if records.is_empty() {
        return Ok(Vec::new());
    }
    let files = match kind {
        PlotKind::ToyScatter => toy_scatter(&records)?,
        _ => vec![PlotFile {
            name: kind.file_name().to_string(),
            svg: render_chart(&chart_for(kind, &records)?),
        }],
    };
    Ok(files)
}

fn infer_kind(table: Table, records: &[csv::StringRecord]) -> Result<PlotKind> {
    Ok(match table {
        Table::Steps => PlotKind::Losses,
        Table::Noise => PlotKind::UncertaintyNoise,
        Table::ToyPoints => PlotKind::ToyScatter,
        Table::ToySummary => {
            return Err(Error::Schema("toy_summary table has nothing to plot; use the toy_points table".into()))
        }
        Table::Eval => {
            let has = |arm: &str| records.iter().any(|r| r.get(9) == Some(arm));
            if has("oracle") {
                PlotKind::NoiseCurves
            } else if has("ssl_all") || has("ssl_common") {
                PlotKind::AblationCurves
            } else if has("alpha") {
                PlotKind::AlphaCurve
            } else {
                PlotKind::SpcrCurves
            }
        }
    })
}

/// Seed-averaged `(x, y)` per series key; x values in ascending order.
fn group_mean(items: impl Iterator<Item = (String, f64, f64)>) -> BTreeMap<String, Vec<(f64, f64)>> {
    let mut acc: BTreeMap<String, Vec<(f64, f64, usize)>> = BTreeMap::new();
    for (key, x, y) in items {
        let pts = acc.entry(key).or_default();
        match pts.iter_mut().find(|p| p.0 == x) {
            Some(p) => {
                p.1 += y;
                p.2 += 1;
            }
            None => pts.push((x, y, 1)),
        }
    }
    acc.into_iter()
        .map(|(k, mut pts)| {
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            (k, pts.into_iter().map(|(x, s, n)| (x, s / n as f64)).collect())
        })
        .collect()
}

fn series_from(groups: BTreeMap<String, Vec<(f64, f64)>>, dashed: impl Fn(&str) -> bool) -> Vec<Series> {
    groups
        .into_iter()
        .map(|(name, points)| Series {
            dashed: dashed(&name),
            name,
            points,
        })
        .collect()
}

fn chart_for(kind: PlotKind, records: &[csv::StringRecord]) -> Result<Chart> {
    let table = kind.table();
    let fields = |i: usize, r| Fields::new(table, i, r);
    let mut items = Vec::with_capacity(records.len());
    let chart = match kind {
        PlotKind::NoiseCurves => {
            // Source-only rows become a flat baseline over the flip-rate range.
            let mut rates: Vec<f64> = Vec::new();
            let mut base = Vec::new();
            for (i, r) in records.iter().enumerate() {
                let f = fields(i, r);
                let (spcr, rate, y) = (f.f64(2)?, f.f64(3)?, f.f64(8)?);
                match f.str(9)? {
                    "source_only" => base.push((format!("source-only, SPCR {spcr:.2}"), spcr, y)),
                    _ => {
                        rates.push(rate);
                        items.push((format!("SPCR {spcr:.2}"), rate, y));
                    }
                }
            }
            let (lo, hi) = rates.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
            let mut series = series_from(group_mean(items.into_iter()), |_| false);
            if lo.is_finite() {
                for (name, pts) in group_mean(base.into_iter()) {
                    let y = pts[0].1;
                    series.push(Series {
                        name,
                        points: vec![(lo, y), (hi, y)],
                        dashed: true,
                    });
                }
            }
            Chart {
                title: "Misclassification into source-private classes".into(),
                x_label: "flip rate".into(),
                y_label: "misclassified fraction".into(),
                series,
            }
        }
        PlotKind::SpcrCurves => {
            for (i, r) in records.iter().enumerate() {
                let f = fields(i, r);
                let spcr = f.f64(2)?;
                items.push((f.str(9)?.to_string(), spcr, f.f64(7)?));
            }
            let log_x = items.iter().all(|p| p.1 > 0.0);
            if log_x {
                for p in &mut items {
                    p.1 = p.1.log10();
                }
            }
            Chart {
                title: "H-score across SPCR".into(),
                x_label: if log_x { "log10 SPCR" } else { "SPCR" }.into(),
                y_label: "H-score".into(),
                series: series_from(group_mean(items.into_iter()), |n| n == "source_only"),
            }
        }
        PlotKind::AlphaCurve => {
            for (i, r) in records.iter().enumerate() {
                let f = fields(i, r);
                items.push((f.str(9)?.to_string(), f.f64(4)?, f.f64(7)?));
            }
            Chart {
                title: "H-score against SSL weight".into(),
                x_label: "alpha".into(),
                y_label: "H-score".into(),
                series: series_from(group_mean(items.into_iter()), |_| false),
            }
        }
        PlotKind::AblationCurves => {
            for (i, r) in records.iter().enumerate() {
                let f = fields(i, r);
                items.push((f.str(9)?.to_string(), f.f64(10)?, f.f64(7)?));
            }
            Chart {
                title: "SSL on common vs all target data".into(),
                x_label: "target-private proportion".into(),
                y_label: "H-score".into(),
                series: series_from(group_mean(items.into_iter()), |n| n == "no_ssl"),
            }
        }
        PlotKind::UncertaintyNoise => {
            for (i, r) in records.iter().enumerate() {
                let f = fields(i, r);
                let spcr = f.f64(2)?;
                items.push((format!("{}, SPCR {spcr:.2}", f.str(4)?), f.f64(3)?, f.f64(5)?));
            }
            Chart {
                title: "Observed batch noise rate".into(),
                x_label: "flip rate".into(),
                y_label: "noise rate".into(),
                series: series_from(group_mean(items.into_iter()), |_| false),
            }
        }
        PlotKind::Losses => {
            for (i, r) in records.iter().enumerate() {
                let f = fields(i, r);
                let step = f.f64(0)?;
                for (col, name) in [(1, "L_s"), (2, "L_adv"), (3, "L_ssl")] {
                    items.push((name.to_string(), step, f.f64(col)?));
                }
            }
            Chart {
                title: "Loss components".into(),
                x_label: "step".into(),
                y_label: "loss".into(),
                series: series_from(group_mean(items.into_iter()), |_| false),
            }
        }
        PlotKind::ToyScatter => unreachable!("scatter is rendered separately"),
    };
    Ok(chart)
}

#[derive(Debug, Clone, Copy)]
struct Frame {
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
    xr: (f64, f64),
    yr: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        self.x0 + (x - self.xr.0) / (self.xr.1 - self.xr.0) * self.w
    }

    fn py(&self, y: f64) -> f64 {
        self.y0 + self.h - (y - self.yr.0) / (self.yr.1 - self.yr.0) * self.h
    }
}

fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn svg_open(out: &mut String, width: f64, height: f64, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<rect width="{width:.0}" height="{height:.0}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        width / 2.0,
        escape(title)
    );
}

fn axes(out: &mut String, fr: &Frame, x_label: &str, y_label: &str) {
    let _ = writeln!(
        out,
        r##"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="#333"/>"##,
        fr.x0, fr.y0, fr.w, fr.h
    );
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        let xv = fr.xr.0 + t * (fr.xr.1 - fr.xr.0);
        let yv = fr.yr.0 + t * (fr.yr.1 - fr.yr.0);
        let (px, py) = (fr.px(xv), fr.py(yv));
        let bottom = fr.y0 + fr.h;
        let _ = writeln!(
            out,
            r##"<line x1="{px:.1}" y1="{bottom:.1}" x2="{px:.1}" y2="{:.1}" stroke="#333"/><text x="{px:.1}" y="{:.1}" text-anchor="middle">{xv:.3}</text>"##,
            bottom + 4.0,
            bottom + 16.0
        );
        let _ = writeln!(
            out,
            r##"<line x1="{:.1}" y1="{py:.1}" x2="{:.1}" y2="{py:.1}" stroke="#333"/><text x="{:.1}" y="{:.1}" text-anchor="end">{yv:.3}</text>"##,
            fr.x0 - 4.0,
            fr.x0,
            fr.x0 - 6.0,
            py + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        fr.x0 + fr.w / 2.0,
        fr.y0 + fr.h + 36.0,
        escape(x_label)
    );
    let (lx, ly) = (fr.x0 - 52.0, fr.y0 + fr.h / 2.0);
    let _ = writeln!(
        out,
        r#"<text x="{lx:.1}" y="{ly:.1}" text-anchor="middle" transform="rotate(-90 {lx:.1} {ly:.1})">{}</text>"#,
        escape(y_label)
    );
}

fn render_chart(chart: &Chart) -> String {
    let all = || chart.series.iter().flat_map(|s| s.points.iter());
    let fr = Frame {
        x0: MARGIN_L,
        y0: MARGIN_T,
        w: WIDTH - MARGIN_L - MARGIN_R,
        h: HEIGHT - MARGIN_T - MARGIN_B,
        xr: padded_range(all().map(|p| p.0)),
        yr: padded_range(all().map(|p| p.1)),
    };
    let mut out = String::new();
    svg_open(&mut out, WIDTH, HEIGHT, &chart.title);
    axes(&mut out, &fr, &chart.x_label, &chart.y_label);
    for (i, s) in chart.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", fr.px(x), fr.py(y)))
            .collect();
        let dash = if s.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#,
            pts.join(" ")
        );
        let ly = MARGIN_T + 12.0 + 16.0 * i as f64;
        let lx = WIDTH - MARGIN_R + 12.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="1.5"{dash}/><text x="{:.1}" y="{:.1}">{}</text>"#,
            lx + 18.0,
            lx + 22.0,
            ly + 4.0,
            escape(&s.name)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// One scatter file per `(seed, SPCR)` with panels for raw inputs and each arm's features.
/// Source points are filled, target points hollow; colour follows the class label.
fn toy_scatter(records: &[csv::StringRecord]) -> Result<Vec<PlotFile>> {
    type Pt = (String, usize, f64, f64);
    let mut groups: BTreeMap<(u64, String), BTreeMap<String, Vec<Pt>>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        let f = Fields::new(Table::ToyPoints, i, r);
        let spcr = format!("{:.2}", f.f64(1)?);
        let arm = f.str(2)?.to_string();
        let (x, y) = if arm == "raw" { (f.f64(5)?, f.f64(6)?) } else { (f.f64(7)?, f.f64(8)?) };
        groups
            .entry((f.u64(0)?, spcr))
            .or_default()
            .entry(arm)
            .or_default()
            .push((f.str(3)?.to_string(), f.u64(4)? as usize, x, y));
    }
    let panel_order = |a: &str| match a {
        "raw" => 0,
        "sup" => 1,
        "sup_ssl" => 2,
        _ => 3,
    };
    let mut files = Vec::new();
    for ((seed, spcr), panels) in groups {
        let mut panels: Vec<(String, Vec<Pt>)> = panels.into_iter().collect();
        panels.sort_by_key(|(a, _)| (panel_order(a), a.clone()));
        let pw = 300.0;
        let width = 20.0 + pw * panels.len() as f64;
        let height = 340.0;
        let mut out = String::new();
        svg_open(&mut out, width, height, &format!("Toy data, SPCR {spcr}, seed {seed}"));
        for (p, (arm, pts)) in panels.iter().enumerate() {
            let fr = Frame {
                x0: 20.0 + pw * p as f64 + 40.0,
                y0: 50.0,
                w: pw - 60.0,
                h: 240.0,
                xr: padded_range(pts.iter().map(|q| q.2)),
                yr: padded_range(pts.iter().map(|q| q.3)),
            };
            let label = match arm.as_str() {
                "raw" => "input space",
                "sup" => "features, L_s",
                "sup_ssl" => "features, L_s + L_ssl",
                other => other,
            };
            axes(&mut out, &fr, label, "");
            for (domain, class, x, y) in pts {
                let color = PALETTE[class % PALETTE.len()];
                let fill = if domain == "source" { color } else { "none" };
                let _ = writeln!(
                    out,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="2" fill="{fill}" stroke="{color}" stroke-width="0.8"/>"#,
                    fr.px(*x),
                    fr.py(*y)
                );
            }
        }
        out.push_str("</svg>\n");
        files.push(PlotFile {
            name: format!("toy_scatter_spcr{spcr}_seed{seed}.svg"),
            svg: out,
        });
    }
    Ok(files)
}
