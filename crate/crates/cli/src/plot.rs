//! Line charts written as SVG markup.

use std::collections::BTreeMap;
use std::fmt::Write;
use std::path::Path;

use arcgate::fit::DEFAULT_RANGE;
use arcgate::{act, eval_f, ActivationKind, ArcGateParams};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 52.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];
/// Samples per fitted curve.
const FIT_POINTS: usize = 241;

#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

#[derive(Debug, Clone)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Tick positions at a 1-2-5 step covering `[lo, hi]`.
pub fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    let raw = span / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .into_iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn tick_label(v: f64) -> String {
    let s = format!("{:.6}", if v == 0.0 { 0.0 } else { v });
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

fn bounds(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if lo > hi {
        return None;
    }
    if lo == hi {
        let pad = lo.abs().max(1.0) * 0.5;
        return Some((lo - pad, hi + pad));
    }
    let pad = 0.05 * (hi - lo);
    Some((lo - pad, hi + pad))
}

impl Chart {
    pub fn to_svg(&self) -> Result<String, String> {
        let all = || self.series.iter().flat_map(|s| s.points.iter());
        let (x0, x1) = bounds(all().map(|p| p.0)).ok_or("no finite points to plot")?;
        let (y0, y1) = bounds(all().map(|p| p.1)).ok_or("no finite points to plot")?;
        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| TOP + (y1 - y) / (y1 - y0) * ph;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
            LEFT + pw / 2.0,
            escape(&self.title)
        );

        let _ = writeln!(s, r##"<g stroke="#dddddd" stroke-width="1">"##);
        for t in ticks(x0, x1) {
            let _ = writeln!(
                s,
                r#"<line x1="{0:.2}" y1="{TOP:.2}" x2="{0:.2}" y2="{1:.2}"/>"#,
                sx(t),
                TOP + ph
            );
        }
        for t in ticks(y0, y1) {
            let _ = writeln!(
                s,
                r#"<line x1="{LEFT:.2}" y1="{0:.2}" x2="{1:.2}" y2="{0:.2}"/>"#,
                sy(t),
                LEFT + pw
            );
        }
        let _ = writeln!(s, "</g>");
        let _ = writeln!(
            s,
            r#"<rect x="{LEFT:.2}" y="{TOP:.2}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="black"/>"#
        );
        for t in ticks(x0, x1) {
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                sx(t),
                TOP + ph + 16.0,
                tick_label(t)
            );
        }
        for t in ticks(y0, y1) {
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                LEFT - 6.0,
                sy(t) + 4.0,
                tick_label(t)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 12.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="16" y="{0:.2}" text-anchor="middle" transform="rotate(-90 16 {0:.2})">{1}</text>"#,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );

        for (i, series) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let dash = if series.dashed { r#" stroke-dasharray="6 4""# } else { "" };
            // non-finite samples split the line
            for run in series.points.split(|p| !(p.0.is_finite() && p.1.is_finite())) {
                if run.is_empty() {
                    continue;
                }
                let pts: Vec<String> =
                    run.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
                let _ = writeln!(
                    s,
                    r#"<polyline fill="none" stroke="{color}" stroke-width="1.6"{dash} points="{}"/>"#,
                    pts.join(" ")
                );
            }
            let ly = TOP + 8.0 + 18.0 * i as f64;
            let lx = LEFT + pw + 14.0;
            let _ = writeln!(
                s,
                r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"{dash}/>"#,
                lx + 24.0
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
                lx + 30.0,
                ly + 4.0,
                escape(&series.name)
            );
        }
        s.push_str("</svg>\n");
        Ok(s)
    }
}

fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>), String> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| format!("{}: {e}", path.display()))?;
    let header = reader
        .headers()
        .map_err(|e| format!("{}: {e}", path.display()))?
        .iter()
        .map(String::from)
        .collect();
    let rows = reader
        .records()
        .map(|r| {
            r.map(|rec| rec.iter().map(String::from).collect())
                .map_err(|e| format!("{}: {e}", path.display()))
        })
        .collect::<Result<_, _>>()?;
    Ok((header, rows))
}

fn number(s: &str) -> Result<f64, String> {
    s.trim().parse::<f64>().map_err(|e| format!("{s:?}: {e}"))
}

fn column(header: &[String], name: &str) -> Result<usize, String> {
    header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| format!("missing column {name:?}"))
}

fn title_from(path: &Path) -> String {
    path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned())
}

/// Wide table: `x` then one column per curve.
pub fn sensitivity_chart(path: &Path) -> Result<Chart, String> {
    let (header, rows) = read_table(path)?;
    if header.len() < 2 || header[0] != "x" {
        return Err(format!("{}: expected columns x,<curve>...", path.display()));
    }
    let mut series: Vec<Series> = header[1..]
        .iter()
        .map(|name| Series {
            name: name.clone(),
            points: Vec::with_capacity(rows.len()),
            dashed: false,
        })
        .collect();
    for row in &rows {
        let x = number(&row[0])?;
        for (s, v) in series.iter_mut().zip(&row[1..]) {
            s.points.push((x, number(v)?));
        }
    }
    Ok(Chart {
        title: title_from(path),
        x_label: "x".into(),
        y_label: "F(x)".into(),
        series,
    })
}

/// Fit table: each fitted activation, and its target when it is a known one.
pub fn fit_chart(path: &Path) -> Result<Chart, String> {
    let (header, rows) = read_table(path)?;
    let name = column(&header, "target")?;
    let kind = column(&header, "kind")?;
    let a = column(&header, "a")?;
    let (lo, hi) = DEFAULT_RANGE;
    let xs: Vec<f64> = (0..FIT_POINTS)
        .map(|i| lo + (hi - lo) * i as f64 / (FIT_POINTS - 1) as f64)
        .collect();
    let mut series = Vec::new();
    for row in &rows {
        let e: Vec<f64> = row[a..a + 7].iter().map(|v| number(v)).collect::<Result<_, _>>()?;
        if e.iter().any(|v| !v.is_finite()) {
            continue;
        }
        let params = ArcGateParams::from_effective(e[0], e[1], e[2], e[3], e[4], e[5], e[6])
            .map_err(|err| err.to_string())?;
        let fitted = xs
            .iter()
            .map(|&x| eval_f(x, &params).map(|g| (x, g.f)).map_err(|e| e.to_string()))
            .collect::<Result<_, _>>()?;
        series.push(Series {
            name: format!("fit {}", row[name]),
            points: fitted,
            dashed: false,
        });
        if let Ok(k) = row[kind].parse::<ActivationKind>() {
            let target = xs
                .iter()
                .map(|&x| act(k, x).map(|y| (x, y)).map_err(|e| e.to_string()))
                .collect::<Result<_, _>>()?;
            series.push(Series {
                name: k.to_string(),
                points: target,
                dashed: true,
            });
        }
    }
    Ok(Chart {
        title: title_from(path),
        x_label: "x".into(),
        y_label: "F(x)".into(),
        series,
    })
}

/// Sweep table: mean accuracy per model at each sigma.
pub fn sweep_chart(path: &Path) -> Result<Chart, String> {
    let (header, rows) = read_table(path)?;
    let model = column(&header, "model")?;
    let sigma = column(&header, "sigma")?;
    let acc = column(&header, "accuracy")?;
    let mut order: Vec<String> = Vec::new();
    let mut sums: BTreeMap<(String, u64), (f64, f64, usize)> = BTreeMap::new();
    for row in &rows {
        let m = row[model].clone();
        if !order.contains(&m) {
            order.push(m.clone());
        }
        let s = number(&row[sigma])?;
        let entry = sums.entry((m, s.to_bits())).or_insert((s, 0.0, 0));
        entry.1 += number(&row[acc])?;
        entry.2 += 1;
    }
    let series = order
        .into_iter()
        .map(|m| {
            let mut points: Vec<(f64, f64)> = sums
                .iter()
                .filter(|((name, _), _)| *name == m)
                .map(|(_, &(s, total, n))| (s, total / n as f64))
                .collect();
            points.sort_by(|p, q| p.0.total_cmp(&q.0));
            Series {
                name: m,
                points,
                dashed: false,
            }
        })
        .collect();
    Ok(Chart {
        title: title_from(path),
        x_label: "noise sigma".into(),
        y_label: "test accuracy".into(),
        series,
    })
}
