//! Minimal SVG line plots with shaded error bands.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::{CliError, CliResult};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    /// `(x, y, error)` sorted by `x`.
    pub points: Vec<(f64, f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Figure {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
        return (lo - pad, hi + pad);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn tick_label(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e4) {
        format!("{v:.1e}")
    } else {
        format!("{v:.3}")
    }
}

impl Figure {
    pub fn to_svg(&self) -> String {
        let pts = || self.series.iter().flat_map(|s| s.points.iter());
        let (x0, x1) = range(pts().map(|p| p.0));
        let (y0, y1) = range(pts().flat_map(|p| [p.1 - p.2.max(0.0), p.1 + p.2.max(0.0)]));
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
            r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            LEFT + pw / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            s,
            r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );
        for i in 0..=4 {
            let f = i as f64 / 4.0;
            let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
            let (px, py) = (sx(xv), sy(yv));
            let _ = writeln!(
                s,
                r#"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                TOP + ph,
                TOP + ph + 5.0,
                TOP + ph + 18.0,
                tick_label(xv)
            );
            let _ = writeln!(
                s,
                r#"<line x1="{:.2}" y1="{py:.2}" x2="{LEFT}" y2="{py:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                LEFT - 5.0,
                LEFT - 8.0,
                py + 4.0,
                tick_label(yv)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 15.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );
        for (k, series) in self.series.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            let p = &series.points;
            if !p.is_empty() {
                let upper = p
                    .iter()
                    .map(|&(x, y, e)| format!("{:.2},{:.2}", sx(x), sy(y + e.max(0.0))));
                let lower = p
                    .iter()
                    .rev()
                    .map(|&(x, y, e)| format!("{:.2},{:.2}", sx(x), sy(y - e.max(0.0))));
                let band: Vec<String> = upper.chain(lower).collect();
                let _ = writeln!(
                    s,
                    r#"<polygon points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
                    band.join(" ")
                );
                let line: Vec<String> = p
                    .iter()
                    .map(|&(x, y, _)| format!("{:.2},{:.2}", sx(x), sy(y)))
                    .collect();
                let _ = writeln!(
                    s,
                    r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                    line.join(" ")
                );
            }
            let ly = TOP + 10.0 + 18.0 * k as f64;
            let lx = WIDTH - RIGHT + 12.0;
            let _ = writeln!(
                s,
                r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
                lx + 18.0,
                lx + 24.0,
                ly + 4.0,
                escape(&series.name)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

struct Csv {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    fn parse(text: &str) -> CliResult<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header = rdr
            .headers()
            .map_err(|e| CliError::data("plot", e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        let rows = rdr
            .records()
            .map(|r| r.map(|r| r.iter().map(str::to_string).collect()))
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::data("plot", e.to_string()))?;
        Ok(Csv { header, rows })
    }

    fn col(&self, name: &str) -> CliResult<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::data("plot", format!("missing column `{name}`")))
    }
}

fn num(s: &str) -> Option<f64> {
    s.parse().ok().filter(|v: &f64| v.is_finite())
}

/// One series per transposition count: normalized `A_t` against `t`.
pub fn fig3(text: &str) -> CliResult<Figure> {
    let csv = Csv::parse(text)?;
    let (it, ik, ia, ie) = (
        csv.col("t")?,
        csv.col("perm_count")?,
        csv.col("A_t_normalized")?,
        csv.col("std_error")?,
    );
    let mut groups: BTreeMap<u64, Vec<(f64, f64, f64)>> = BTreeMap::new();
    for r in &csv.rows {
        let k: u64 = r[ik]
            .parse()
            .map_err(|_| CliError::data("plot", format!("bad perm_count `{}`", r[ik])))?;
        let entry = groups.entry(k).or_default();
        if let (Some(t), Some(a), Some(e)) = (num(&r[it]), num(&r[ia]), num(&r[ie])) {
            entry.push((t, a, e));
        }
    }
    let series = groups
        .into_iter()
        .map(|(k, mut points)| {
            points.sort_by(|a, b| a.0.total_cmp(&b.0));
            Series {
                name: format!("{k} transpositions"),
                points,
            }
        })
        .collect();
    Ok(Figure {
        title: "Anti-randomness of the toy ensemble".into(),
        x_label: "t".into(),
        y_label: "normalized A_t".into(),
        series,
    })
}

/// One series per (model, n, regime) against depth; repeats are averaged.
pub fn fig45(text: &str, column: &str) -> CliResult<Figure> {
    let err_col = match column {
        "mu1_minus_half" => "mu1_stderr",
        "var" => "var_stderr",
        other => {
            return Err(CliError::Usage(format!(
                "cannot plot column `{other}`; use mu1_minus_half or var"
            )))
        }
    };
    let csv = Csv::parse(text)?;
    let (im, in_, il, ir) = (csv.col("model")?, csv.col("n")?, csv.col("L")?, csv.col("regime")?);
    let (iv, ie) = (csv.col(column)?, csv.col(err_col)?);
    let mut groups: BTreeMap<(String, u64, String), BTreeMap<u64, (f64, f64, usize)>> = BTreeMap::new();
    for r in &csv.rows {
        let n: u64 = r[in_]
            .parse()
            .map_err(|_| CliError::data("plot", format!("bad n `{}`", r[in_])))?;
        let l: u64 = r[il]
            .parse()
            .map_err(|_| CliError::data("plot", format!("bad L `{}`", r[il])))?;
        let (Some(v), Some(e)) = (num(&r[iv]), num(&r[ie])) else {
            continue;
        };
        let cell = groups
            .entry((r[im].clone(), n, r[ir].clone()))
            .or_default()
            .entry(l)
            .or_insert((0.0, 0.0, 0));
        cell.0 += v;
        cell.1 += e;
        cell.2 += 1;
    }
    let series = groups
        .into_iter()
        .map(|((m, n, regime), cells)| Series {
            name: format!("{m} n={n} {regime}"),
            points: cells
                .into_iter()
                .map(|(l, (v, e, c))| (l as f64, v / c as f64, e / c as f64))
                .collect(),
        })
        .collect();
    Ok(Figure {
        title: "Margin moments against depth".into(),
        x_label: "layers L".into(),
        y_label: column.replace('_', " "),
        series,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_table_gives_axes_only() {
        let f = fig3("t,perm_count,A_t_normalized,std_error,zero_consistent\n").unwrap();
        let svg = f.to_svg();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 0);
        assert!(svg.contains("normalized A_t"));
    }

    #[test]
    fn one_polyline_per_series() {
        let mut text = String::from("t,perm_count,A_t_normalized,std_error,zero_consistent\n");
        for k in [0, 1, 5, 15] {
            for t in 1..=3 {
                text.push_str(&format!("{t},{k},{},0.01,true\n", 0.1 * t as f64));
            }
        }
        text.push_str("4,0,undefined,0.1,false\n");
        let svg = fig3(&text).unwrap().to_svg();
        assert_eq!(svg.matches("<polyline").count(), 4);
        assert_eq!(svg.matches("<polygon").count(), 4);
        assert_eq!(svg, fig3(&text).unwrap().to_svg());
    }

    #[test]
    fn sweep_repeats_are_averaged() {
        let text = "model,n,L,regime,mu1_minus_half,mu1_stderr,var,var_stderr,seed\n\
                    reupload,2,1,test,0.1,0.01,0.2,0.02,0\n\
                    reupload,2,1,test,0.3,0.03,0.2,0.02,0\n\
                    reupload,2,2,test,0.0,0.0,0.1,0.01,0\n";
        let f = fig45(text, "mu1_minus_half").unwrap();
        assert_eq!(f.series.len(), 1);
        let p = &f.series[0].points;
        assert!((p[0].1 - 0.2).abs() < 1e-15 && (p[0].2 - 0.02).abs() < 1e-15);
        assert!(fig45(text, "seed").is_err());
    }
}
