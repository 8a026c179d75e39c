use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::{BandRow, Example31Report, LemmaReport, Outcome, SummaryTable};
use crate::error::{MirgError, Result};
use crate::evt::Orientation;

/// `%g`-style rendering with 6 significant digits.
pub fn format_sig(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mant, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let mant = trim_zeros(mant);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mant}e{sign}{:02}", exp.abs())
    } else {
        trim_zeros(&format!("{x:.*}", (5 - exp) as usize)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| MirgError::io(path, e))
}

fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    out
}

fn orientation_name(o: Orientation) -> &'static str {
    match o {
        Orientation::Positive => "pos",
        Orientation::Negative => "neg",
    }
}

/// Writes CSV files and SVG charts for `outcome` into `dir` (created if
/// missing) and returns the paths written.
pub fn emit_outputs(outcome: &Outcome, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| MirgError::io(dir, e))?;
    let mut files: Vec<(PathBuf, String)> = Vec::new();
    match outcome {
        Outcome::Table1(t) => table1_files(t, dir, &mut files),
        Outcome::Hrv(t) => hrv_files(t, dir, &mut files),
        Outcome::Lemma(r) => lemma_files(r, dir, &mut files),
        Outcome::Example31(r) => example31_files(r, dir, &mut files),
    }
    for (path, text) in &files {
        write_file(path, text)?;
    }
    Ok(files.into_iter().map(|(p, _)| p).collect())
}

fn table1_files(t: &SummaryTable, dir: &Path, files: &mut Vec<(PathBuf, String)>) {
    let mut rows = t.hill.clone();
    rows.sort_by(|a, b| a.alpha.total_cmp(&b.alpha).then(a.k.cmp(&b.k)));
    files.push((
        dir.join("table1.csv"),
        csv_text(
            &["alpha", "k", "bias", "mse", "replicates"],
            rows.iter().map(|r| {
                vec![
                    format_sig(r.alpha),
                    r.k.to_string(),
                    format_sig(r.bias),
                    format_sig(r.mse),
                    r.replicates.to_string(),
                ]
            }),
        ),
    ));
    files.push((
        dir.join("table1_dropped.csv"),
        csv_text(
            &["alpha", "k", "dropped", "outside_theory"],
            rows.iter().map(|r| {
                vec![
                    format_sig(r.alpha),
                    r.k.to_string(),
                    r.dropped.to_string(),
                    r.outside_theory.to_string(),
                ]
            }),
        ),
    ));
    let mut chart = Chart::new("Hill bias by k", "k", "bias");
    let mut alphas: Vec<f64> = rows.iter().map(|r| r.alpha).collect();
    alphas.dedup();
    for (i, &a) in alphas.iter().enumerate() {
        let pts = rows
            .iter()
            .filter(|r| r.alpha == a && r.bias.is_finite())
            .map(|r| (r.k as f64, r.bias))
            .collect();
        chart.lines.push(Line {
            label: format!("alpha {}", format_sig(a)),
            points: pts,
            color: PALETTE[i % PALETTE.len()],
            dashed: false,
        });
    }
    chart.reference = Some(0.0);
    files.push((dir.join("table1_bias.svg"), chart.render()));
}

fn hrv_files(t: &SummaryTable, dir: &Path, files: &mut Vec<(PathBuf, String)>) {
    let mut rows: Vec<&BandRow> = t.bands.iter().collect();
    rows.sort_by(|a, b| {
        a.alpha
            .total_cmp(&b.alpha)
            .then(a.alpha0.total_cmp(&b.alpha0))
            .then(orientation_name(a.orientation).cmp(orientation_name(b.orientation)).reverse())
            .then(a.k.cmp(&b.k))
    });
    files.push((
        dir.join("hrv_bands.csv"),
        csv_text(
            &["alpha", "alpha0", "orientation", "k", "mean", "q10", "q25", "q75", "q90", "replicates"],
            rows.iter().map(|r| {
                vec![
                    format_sig(r.alpha),
                    format_sig(r.alpha0),
                    orientation_name(r.orientation).to_string(),
                    r.k.to_string(),
                    format_sig(r.mean),
                    format_sig(r.q10),
                    format_sig(r.q25),
                    format_sig(r.q75),
                    format_sig(r.q90),
                    r.replicates.to_string(),
                ]
            }),
        ),
    ));
    let mut start = 0;
    while start < rows.len() {
        let key = (rows[start].alpha, rows[start].alpha0, rows[start].orientation);
        let end = start
            + rows[start..]
                .iter()
                .take_while(|r| (r.alpha, r.alpha0, r.orientation) == key)
                .count();
        let family = &rows[start..end];
        let o = orientation_name(key.2);
        let title = format!("Hillish ({o}), alpha {} alpha0 {}", format_sig(key.0), format_sig(key.1));
        let mut chart = Chart::new(&title, "k", "Hillish");
        let pts = |f: fn(&BandRow) -> f64| -> Vec<(f64, f64)> {
            family.iter().map(|r| (r.k as f64, f(r))).filter(|p| p.1.is_finite()).collect()
        };
        chart.bands.push(Band {
            lower: pts(|r| r.q10),
            upper: pts(|r| r.q90),
            fill: "#f7c6d9",
        });
        chart.bands.push(Band {
            lower: pts(|r| r.q25),
            upper: pts(|r| r.q75),
            fill: "#9b6fc4",
        });
        chart.lines.push(Line {
            label: "mean".into(),
            points: pts(|r| r.mean),
            color: "#000000",
            dashed: false,
        });
        chart.reference = Some(1.0);
        let name = format!("hrv_{}_{}_{o}.svg", format_sig(key.0), format_sig(key.1));
        files.push((dir.join(name), chart.render()));
        start = end;
    }
}

fn lemma_files(r: &LemmaReport, dir: &Path, files: &mut Vec<(PathBuf, String)>) {
    files.push((
        dir.join("lemma_pmf.csv"),
        csv_text(
            &["m1", "m2", "graph", "limit", "diff", "std_error"],
            r.cells.iter().map(|c| {
                vec![
                    c.m1.to_string(),
                    c.m2.to_string(),
                    format_sig(c.graph),
                    format_sig(c.limit),
                    format_sig(c.diff),
                    format_sig(c.std_error),
                ]
            }),
        ),
    ));
    files.push((
        dir.join("lemma_summary.csv"),
        csv_text(
            &["n", "replicates", "max_abs_diff", "max_std_error", "pass"],
            [vec![
                r.n.to_string(),
                r.replicates.to_string(),
                format_sig(r.max_abs_diff),
                format_sig(r.max_std_error),
                r.pass().to_string(),
            ]],
        ),
    ));
}

fn example31_files(r: &Example31Report, dir: &Path, files: &mut Vec<(PathBuf, String)>) {
    files.push((
        dir.join("example31.csv"),
        csv_text(
            &["k", "u", "v", "estimate", "std_error", "limit"],
            r.cells.iter().map(|c| {
                vec![
                    c.k.to_string(),
                    format_sig(c.u),
                    format_sig(c.v),
                    format_sig(c.estimate),
                    format_sig(c.std_error),
                    format_sig(c.limit),
                ]
            }),
        ),
    ));
    files.push((
        dir.join("example31_hill.csv"),
        csv_text(
            &["k", "alpha_hat", "target"],
            r.hill
                .iter()
                .map(|h| vec![h.k.to_string(), format_sig(h.alpha_hat), format_sig(h.target)]),
        ),
    ));
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

struct Line {
    label: String,
    points: Vec<(f64, f64)>,
    color: &'static str,
    dashed: bool,
}

struct Band {
    lower: Vec<(f64, f64)>,
    upper: Vec<(f64, f64)>,
    fill: &'static str,
}

/// Minimal SVG line chart: axes, filled bands, polylines, optional
/// horizontal reference line.
struct Chart {
    title: String,
    x_label: String,
    y_label: String,
    lines: Vec<Line>,
    bands: Vec<Band>,
    reference: Option<f64>,
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const MARGIN: f64 = 56.0;

impl Chart {
    fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Chart {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            lines: vec![],
            bands: vec![],
            reference: None,
        }
    }

    fn render(&self) -> String {
        let all = self
            .lines
            .iter()
            .flat_map(|l| l.points.iter())
            .chain(self.bands.iter().flat_map(|b| b.lower.iter().chain(&b.upper)));
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in all {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if let Some(r) = self.reference {
            y0 = y0.min(r);
            y1 = y1.max(r);
        }
        if !x0.is_finite() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        if x1 <= x0 {
            x1 = x0 + 1.0;
        }
        if y1 <= y0 {
            y1 = y0 + 1.0;
        }
        let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (W - 2.0 * MARGIN);
        let sy = |y: f64| H - MARGIN - (y - y0) / (y1 - y0) * (H - 2.0 * MARGIN);
        let path = |pts: &mut dyn Iterator<Item = &(f64, f64)>| {
            pts.map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect::<Vec<_>>()
                .join(" ")
        };

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        for b in &self.bands {
            let pts = path(&mut b.lower.iter().chain(b.upper.iter().rev()));
            let _ = writeln!(s, r#"<polygon points="{pts}" fill="{}" stroke="none"/>"#, b.fill);
        }
        if let Some(r) = self.reference {
            let _ = writeln!(
                s,
                r##"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#555555" stroke-dasharray="6,4"/>"##,
                sx(x0),
                sx(x1),
                y = sy(r)
            );
        }
        for l in &self.lines {
            let dash = if l.dashed { r#" stroke-dasharray="4,3""# } else { "" };
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"{dash}/>"#,
                path(&mut l.points.iter()),
                l.color
            );
        }
        let (bx, by) = (MARGIN, H - MARGIN);
        let _ = writeln!(
            s,
            r#"<path d="M{bx},{t} L{bx},{by} L{r},{by}" fill="none" stroke="black"/>"#,
            t = MARGIN,
            r = W - MARGIN
        );
        for (v, x) in [(x0, sx(x0)), (x1, sx(x1))] {
            let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, by + 16.0, format_sig(v));
        }
        for (v, y) in [(y0, sy(y0)), (y1, sy(y1))] {
            let _ = writeln!(s, r#"<text x="{:.2}" y="{y:.2}" text-anchor="end">{}</text>"#, bx - 4.0, format_sig(v));
        }
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, W / 2.0, H - 12.0, escape(&self.x_label));
        let _ = writeln!(
            s,
            r#"<text x="14" y="{:.2}" text-anchor="middle" transform="rotate(-90 14 {:.2})">{}</text>"#,
            H / 2.0,
            H / 2.0,
            escape(&self.y_label)
        );
        let _ = writeln!(s, r#"<text x="{:.2}" y="24" text-anchor="middle">{}</text>"#, W / 2.0, escape(&self.title));
        for (i, l) in self.lines.iter().enumerate() {
            let y = MARGIN + 14.0 * i as f64;
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{y:.2}" fill="{}" text-anchor="end">{}</text>"#,
                W - MARGIN,
                l.color,
                escape(&l.label)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::HillRow;

    #[test]
    fn sig_formatting() {
        let cases = [
            (0.0, "0"),
            (1.0, "1"),
            (0.018, "0.018"),
            (1.0 / 3.0, "0.333333"),
            (123456.7, "123457"),
            (1234567.0, "1.23457e+06"),
            (0.00001234, "1.234e-05"),
            (-2.5, "-2.5"),
            (0.0001, "0.0001"),
            (f64::NAN, "nan"),
            (f64::INFINITY, "inf"),
        ];
        for (x, want) in cases {
            assert_eq!(format_sig(x), want, "{x}");
        }
    }

    #[test]
    fn empty_table_gives_header_only_csv() {
        let dir = tempfile::tempdir().unwrap();
        let files = emit_outputs(&Outcome::Table1(SummaryTable::default()), dir.path()).unwrap();
        assert!(files.iter().any(|f| f.ends_with("table1.csv")));
        let text = fs::read_to_string(dir.path().join("table1.csv")).unwrap();
        assert_eq!(text, "alpha,k,bias,mse,replicates\n");
        let svg = fs::read_to_string(dir.path().join("table1_bias.svg")).unwrap();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn table1_rows_sorted() {
        let row = |alpha: f64, k: usize| HillRow {
            alpha,
            k,
            bias: 0.01,
            mse: 0.002,
            replicates: 10,
            dropped: 0,
            outside_theory: false,
        };
        let t = SummaryTable {
            hill: vec![row(1.4, 1000), row(1.2, 200), row(1.4, 200)],
            ..Default::default()
        };
        let dir = tempfile::tempdir().unwrap();
        emit_outputs(&Outcome::Table1(t), dir.path()).unwrap();
        let text = fs::read_to_string(dir.path().join("table1.csv")).unwrap();
        assert_eq!(
            text,
            "alpha,k,bias,mse,replicates\n1.2,200,0.01,0.002,10\n1.4,200,0.01,0.002,10\n1.4,1000,0.01,0.002,10\n"
        );
    }

    #[test]
    fn unwritable_dir_reports_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, "x").unwrap();
        let err = emit_outputs(&Outcome::Table1(SummaryTable::default()), &blocker.join("sub")).unwrap_err();
        assert!(err.to_string().contains("file"), "{err}");
    }

    proptest::proptest! {
        #[test]
        fn sig_format_round_trips_to_six_digits(x in proptest::num::f64::NORMAL) {
            let back: f64 = format_sig(x).parse().unwrap();
            proptest::prop_assert!(((back - x) / x).abs() <= 5e-6, "{} -> {}", x, back);
        }
    }
}
