//! CSV, summary and SVG emitters, and header verification.
//!
//! Every CSV starts with `# key: value` lines carrying at least the config
//! hash, the precision mode and the floor, followed by one column-name line
//! and numeric rows.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::propagator::estimate_floor;

/// Ordered `key: value` header.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Header {
    pub entries: Vec<(String, String)>,
}

impl Header {
    pub fn new(kind: &str, hash: &str, precision: &str, floor: f64) -> Self {
        let mut h = Self::default();
        h.push("kind", kind);
        h.push("config_hash", hash);
        h.push("precision", precision);
        h.push("floor", format!("{floor:e}"));
        h
    }

    pub fn push(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

/// Writes columns of equal length. Values use the shortest round-trip
/// representation so reruns are byte-identical.
pub fn write_csv(path: &Path, header: &Header, columns: &[(&str, &[f64])]) -> Result<()> {
    let rows = columns.first().map_or(0, |c| c.1.len());
    if columns.iter().any(|c| c.1.len() != rows) {
        return Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::InvalidInput,
            "CSV columns differ in length",
        )));
    }
    let mut out = String::with_capacity(rows * columns.len() * 24);
    for (k, v) in &header.entries {
        let _ = writeln!(out, "# {k}: {v}");
    }
    let _ = writeln!(out, "# rows: {rows}");
    let names: Vec<&str> = columns.iter().map(|c| c.0).collect();
    let _ = writeln!(out, "{}", names.join(","));
    for i in 0..rows {
        for (j, c) in columns.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{:e}", c.1[i]);
        }
        out.push('\n');
    }
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, out)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvData {
    pub header: Header,
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl CsvData {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.columns[i].as_slice())
    }
}

pub fn read_csv(path: &Path) -> Result<CsvData> {
    let text = fs::read_to_string(path)?;
    let bad = |msg: String| Error::Io(std::io::Error::new(std::io::ErrorKind::InvalidData, msg));
    let mut header = Header::default();
    let mut lines = text.lines();
    let names: Vec<String> = loop {
        let line = lines
            .next()
            .ok_or_else(|| bad(format!("{}: no column line", path.display())))?;
        if let Some(rest) = line.strip_prefix("# ") {
            let (k, v) = rest
                .split_once(": ")
                .ok_or_else(|| bad(format!("{}: malformed header `{line}`", path.display())))?;
            header.entries.push((k.to_string(), v.to_string()));
        } else {
            break line.split(',').map(str::to_string).collect();
        }
    };
    let mut columns = vec![Vec::new(); names.len()];
    for (row, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != names.len() {
            return Err(bad(format!(
                "{}: row {row} has {} fields, expected {}",
                path.display(),
                fields.len(),
                names.len()
            )));
        }
        for (c, f) in columns.iter_mut().zip(fields) {
            c.push(
                f.parse()
                    .map_err(|_| bad(format!("{}: bad number `{f}`", path.display())))?,
            );
        }
    }
    Ok(CsvData {
        header,
        names,
        columns,
    })
}

/// Result of re-checking one CSV against its header.
#[derive(Debug, Clone, PartialEq)]
pub struct Verification {
    pub file: String,
    pub problems: Vec<String>,
}

impl Verification {
    pub fn ok(&self) -> bool {
        self.problems.is_empty()
    }
}

/// Re-checks header claims against content: row count, required keys,
/// finite values, the floor (when `floor_column` and `floor_distance` are
/// recorded) and the total (when `total_column` and `total` are recorded).
pub fn verify_csv(path: &Path, expected_hash: Option<&str>) -> Result<Verification> {
    let data = read_csv(path)?;
    let h = &data.header;
    let mut problems = Vec::new();
    for key in ["config_hash", "precision", "floor", "rows"] {
        if h.get(key).is_none() {
            problems.push(format!("missing header `{key}`"));
        }
    }
    let rows = data.columns.first().map_or(0, Vec::len);
    if h.get("rows").and_then(|r| r.parse::<usize>().ok()) != Some(rows) {
        problems.push(format!(
            "header rows {:?} but {rows} data rows",
            h.get("rows")
        ));
    }
    if let (Some(want), Some(got)) = (expected_hash, h.get("config_hash")) {
        if want != got {
            problems.push(format!("config hash {got} does not match {want}"));
        }
    }
    for (name, col) in data.names.iter().zip(&data.columns) {
        if col.iter().any(|v| !v.is_finite()) {
            problems.push(format!("column `{name}` has non-finite values"));
        }
    }
    let floor: Option<f64> = h.get("floor").and_then(|f| f.parse().ok());
    if let (Some(col), Some(dist), Some(t), Some(floor)) = (
        h.get("floor_column").and_then(|c| data.column(c)),
        h.get("floor_distance").and_then(|d| d.parse::<f64>().ok()),
        data.column("t"),
        floor,
    ) {
        let again = estimate_floor(t, col, dist);
        if again != floor {
            problems.push(format!("floor {floor:e} but content gives {again:e}"));
        }
    }
    if let (Some(col), Some(total)) = (
        h.get("total_column").and_then(|c| data.column(c)),
        h.get("total").and_then(|t| t.parse::<f64>().ok()),
    ) {
        if col.last().copied() != Some(total) {
            problems.push(format!(
                "total {total:e} but last cumulative {:?}",
                col.last()
            ));
        }
    }
    Ok(Verification {
        file: path.display().to_string(),
        problems,
    })
}

/// Plain `key: value` summary.
pub fn write_summary(path: &Path, header: &Header, entries: &[(String, String)]) -> Result<()> {
    let mut out = String::new();
    for (k, v) in header.entries.iter().chain(entries) {
        let _ = writeln!(out, "{k}: {v}");
    }
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_summary(path: &Path) -> Result<BTreeMap<String, String>> {
    Ok(fs::read_to_string(path)?
        .lines()
        .filter_map(|l| l.split_once(": "))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect())
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 520.0;
const MARGIN_L: f64 = 80.0;
const MARGIN_R: f64 = 150.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 60.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub dashed: bool,
}

impl Series {
    pub fn new(label: &str, x: &[f64], y: &[f64]) -> Self {
        Self {
            label: label.to_string(),
            x: x.to_vec(),
            y: y.to_vec(),
            dashed: false,
        }
    }

    pub fn dashed(mut self) -> Self {
        self.dashed = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Marker {
    pub x: f64,
    pub y: f64,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    /// Log y axis whose lower limit is this floor. Values below are not drawn.
    pub log_floor: Option<f64>,
    pub series: Vec<Series>,
    pub markers: Vec<Marker>,
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    log: bool,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        MARGIN_L + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - MARGIN_L - MARGIN_R)
    }

    fn py(&self, y: f64) -> f64 {
        let (y, y0, y1) = if self.log {
            (y.log10(), self.y0.log10(), self.y1.log10())
        } else {
            (y, self.y0, self.y1)
        };
        HEIGHT - MARGIN_B - (y - y0) / (y1 - y0) * (HEIGHT - MARGIN_T - MARGIN_B)
    }
}

fn nice_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let raw = (hi - lo) / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * step {
        out.push(if t.abs() < 1e-12 * step { 0.0 } else { t });
        t += step;
    }
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn axes(svg: &mut String, f: &Frame, title: &str, x_label: &str, y_label: &str) {
    let (l, r) = (MARGIN_L, WIDTH - MARGIN_R);
    let (t, b) = (MARGIN_T, HEIGHT - MARGIN_B);
    let _ = writeln!(
        svg,
        r#"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        r - l,
        b - t
    );
    for x in nice_ticks(f.x0, f.x1, 8) {
        let p = f.px(x);
        let _ = writeln!(
            svg,
            r#"<line x1="{p:.2}" y1="{b}" x2="{p:.2}" y2="{}" stroke="black"/><text x="{p:.2}" y="{}" font-size="12" text-anchor="middle">{x}</text>"#,
            b + 5.0,
            b + 20.0
        );
    }
    if f.log {
        let d0 = f.y0.log10().ceil() as i32;
        let d1 = f.y1.log10().floor() as i32;
        let stride = ((d1 - d0) / 10 + 1).max(1);
        let mut d = d0;
        while d <= d1 {
            let p = f.py(10f64.powi(d));
            let _ = writeln!(
                svg,
                r#"<line x1="{}" y1="{p:.2}" x2="{l}" y2="{p:.2}" stroke="black"/><text x="{}" y="{:.2}" font-size="12" text-anchor="end">1e{d}</text>"#,
                l - 5.0,
                l - 8.0,
                p + 4.0
            );
            d += stride;
        }
    } else {
        for y in nice_ticks(f.y0, f.y1, 8) {
            let p = f.py(y);
            let _ = writeln!(
                svg,
                r#"<line x1="{}" y1="{p:.2}" x2="{l}" y2="{p:.2}" stroke="black"/><text x="{}" y="{:.2}" font-size="12" text-anchor="end">{y}</text>"#,
                l - 5.0,
                l - 8.0,
                p + 4.0
            );
        }
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="24" font-size="15" text-anchor="middle">{}</text>"#,
        0.5 * (l + r),
        escape(title)
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" font-size="13" text-anchor="middle">{}</text>"#,
        0.5 * (l + r),
        HEIGHT - 15.0,
        escape(x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{0:.1}" font-size="13" text-anchor="middle" transform="rotate(-90 18 {0:.1})">{1}</text>"#,
        0.5 * (t + b),
        escape(y_label)
    );
}

fn open_svg() -> String {
    format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">
<rect width="100%" height="100%" fill="white"/>
"#
    )
}

impl LinePlot {
    pub fn to_svg(&self) -> String {
        let xs = self.series.iter().flat_map(|s| s.x.iter().copied());
        let (x0, x1) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| {
            (a.min(x), b.max(x))
        });
        let visible = |y: f64| y.is_finite() && self.log_floor.is_none_or(|fl| y >= fl);
        let ys = self
            .series
            .iter()
            .flat_map(|s| s.y.iter().copied())
            .chain(self.markers.iter().map(|m| m.y))
            .filter(|&y| visible(y));
        let (mut y0, mut y1) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), y| {
            (a.min(y), b.max(y))
        });
        if let Some(fl) = self.log_floor {
            y0 = fl;
            y1 = if y1 > fl { y1 * 10.0 } else { fl * 1e3 };
        } else if !(y1 > y0) {
            y0 -= 1.0;
            y1 += 1.0;
        } else {
            let pad = 0.05 * (y1 - y0);
            y0 -= pad;
            y1 += pad;
        }
        let (x0, x1) = if x1 > x0 {
            (x0, x1)
        } else {
            (x0 - 1.0, x0 + 1.0)
        };
        let f = Frame {
            x0,
            x1,
            y0,
            y1,
            log: self.log_floor.is_some(),
        };
        let mut svg = open_svg();
        axes(&mut svg, &f, &self.title, &self.x_label, &self.y_label);
        for (k, s) in self.series.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            let dash = if s.dashed {
                r#" stroke-dasharray="6 4""#
            } else {
                ""
            };
            let mut d = String::new();
            let mut pen = false;
            for (&x, &y) in s.x.iter().zip(&s.y) {
                if visible(y) && y <= y1 {
                    let _ = write!(
                        d,
                        "{}{:.2},{:.2} ",
                        if pen { "L" } else { "M" },
                        f.px(x),
                        f.py(y)
                    );
                    pen = true;
                } else {
                    pen = false;
                }
            }
            let _ = writeln!(
                svg,
                r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#,
                d.trim_end()
            );
            let ly = MARGIN_T + 18.0 * (k as f64 + 1.0);
            let lx = WIDTH - MARGIN_R + 10.0;
            let _ = writeln!(
                svg,
                r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"{dash}/><text x="{}" y="{}" font-size="12">{}</text>"#,
                lx + 25.0,
                lx + 30.0,
                ly + 4.0,
                escape(&s.label)
            );
        }
        for m in &self.markers {
            if visible(m.y) {
                let _ = writeln!(
                    svg,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="black"/><text x="{:.2}" y="{:.2}" font-size="11">{}</text>"#,
                    f.px(m.x),
                    f.py(m.y),
                    f.px(m.x) + 6.0,
                    f.py(m.y) - 6.0,
                    escape(&m.label)
                );
            }
        }
        svg.push_str("</svg>\n");
        svg
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContourPlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// values[j][i] at (x[i], y[j]).
    pub values: Vec<Vec<f64>>,
    pub levels: Vec<f64>,
    /// Level drawn thick.
    pub highlight: Option<f64>,
    /// Overlay points (x, y).
    pub path: Vec<(f64, f64)>,
}

/// Marching-squares segments of one level.
pub fn contour_segments(x: &[f64], y: &[f64], v: &[Vec<f64>], level: f64) -> Vec<[(f64, f64); 2]> {
    let mut segs = Vec::new();
    let lerp = |a: f64, b: f64, va: f64, vb: f64| a + (b - a) * (level - va) / (vb - va);
    for j in 0..y.len().saturating_sub(1) {
        for i in 0..x.len().saturating_sub(1) {
            let c = [v[j][i], v[j][i + 1], v[j + 1][i + 1], v[j + 1][i]];
            if c.iter().any(|z| !z.is_finite()) {
                continue;
            }
            let corners = [
                (x[i], y[j]),
                (x[i + 1], y[j]),
                (x[i + 1], y[j + 1]),
                (x[i], y[j + 1]),
            ];
            let mut pts = Vec::with_capacity(4);
            for e in 0..4 {
                let (a, b) = (e, (e + 1) % 4);
                if (c[a] < level) != (c[b] < level) {
                    let (pa, pb) = (corners[a], corners[b]);
                    pts.push((lerp(pa.0, pb.0, c[a], c[b]), lerp(pa.1, pb.1, c[a], c[b])));
                }
            }
            if pts.len() == 2 {
                segs.push([pts[0], pts[1]]);
            } else if pts.len() == 4 {
                segs.push([pts[0], pts[1]]);
                segs.push([pts[2], pts[3]]);
            }
        }
    }
    segs
}

impl ContourPlot {
    pub fn to_svg(&self) -> String {
        let f = Frame {
            x0: self.x[0],
            x1: self.x[self.x.len() - 1],
            y0: self.y[0],
            y1: self.y[self.y.len() - 1],
            log: false,
        };
        let mut svg = open_svg();
        axes(&mut svg, &f, &self.title, &self.x_label, &self.y_label);
        for (k, &level) in self.levels.iter().enumerate() {
            let thick = self.highlight == Some(level);
            let color = if thick {
                "black"
            } else {
                PALETTE[k % PALETTE.len()]
            };
            let mut d = String::new();
            for s in contour_segments(&self.x, &self.y, &self.values, level) {
                let _ = write!(
                    d,
                    "M{:.2},{:.2}L{:.2},{:.2}",
                    f.px(s[0].0),
                    f.py(s[0].1),
                    f.px(s[1].0),
                    f.py(s[1].1)
                );
            }
            let _ = writeln!(
                svg,
                r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="{}"/>"#,
                if thick { 2.5 } else { 1.0 }
            );
            let ly = MARGIN_T + 16.0 * (k as f64 + 1.0);
            let lx = WIDTH - MARGIN_R + 10.0;
            let _ = writeln!(
                svg,
                r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}" font-size="12">{level}</text>"#,
                lx + 25.0,
                lx + 30.0,
                ly + 4.0
            );
        }
        for &(x, y) in &self.path {
            if x >= f.x0 && x <= f.x1 && y >= f.y0 && y <= f.y1 {
                let _ = writeln!(
                    svg,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="black"/>"#,
                    f.px(x),
                    f.py(y)
                );
            }
        }
        svg.push_str("</svg>\n");
        svg
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_and_verify() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        let t = [0.0, 1.0, 2.0, 3.0];
        let p = [1e-30, 2e-30, 0.1, 0.2];
        let c = [0.0, 1.5e-30, 0.05, 0.2];
        let floor = estimate_floor(&t, &p, 4.0);
        let mut h = Header::new("exact", "abc", "ext", floor);
        h.push("floor_column", "P").push("floor_distance", 4.0);
        h.push("total_column", "C").push("total", 0.2);
        write_csv(&path, &h, &[("t", &t), ("P", &p), ("C", &c)]).unwrap();
        let back = read_csv(&path).unwrap();
        assert_eq!(back.column("P").unwrap(), &p);
        assert!(verify_csv(&path, Some("abc")).unwrap().ok());
        assert!(!verify_csv(&path, Some("xyz")).unwrap().ok());
        let tampered = fs::read_to_string(&path)
            .unwrap()
            .replace("# total: 0.2", "# total: 0.3");
        fs::write(&path, tampered).unwrap();
        assert!(!verify_csv(&path, None).unwrap().ok());
    }

    #[test]
    fn log_plot_never_draws_below_floor() {
        let x: Vec<f64> = (0..50).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|&t| 10f64.powf(-40.0 + t)).collect();
        let plot = LinePlot {
            title: "P".into(),
            x_label: "t".into(),
            y_label: "P".into(),
            log_floor: Some(1e-30),
            series: vec![Series::new("P", &x, &y)],
            markers: vec![],
        };
        let svg = plot.to_svg();
        let bottom = HEIGHT - MARGIN_B;
        for seg in svg.split(['M', 'L']).skip(1) {
            if let Some(yv) = seg
                .split([',', ' ', '"'])
                .nth(1)
                .and_then(|s| s.parse::<f64>().ok())
            {
                assert!(yv <= bottom + 1e-9);
            }
        }
        assert!(svg.contains("1e-30"));
    }

    #[test]
    fn marching_squares_circle() {
        let x: Vec<f64> = (0..41).map(|i| -2.0 + 0.1 * i as f64).collect();
        let v: Vec<Vec<f64>> = x
            .iter()
            .map(|&b| x.iter().map(|&a| (a * a + b * b).sqrt()).collect())
            .collect();
        let segs = contour_segments(&x, &x, &v, 1.0);
        assert!(!segs.is_empty());
        for s in segs {
            for p in s {
                assert!(((p.0 * p.0 + p.1 * p.1).sqrt() - 1.0).abs() < 0.01);
            }
        }
    }
}
