//! Rendering and writing of run outputs.
//!
//! Subcommands collect every file in memory; [`Outputs::write_all`] is the
//! only writer and removes what it wrote if any write fails.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use helson::spectra::Histogram;
use helson::SemicircleRef;
use serde::Serialize;

#[derive(Default)]
pub struct Outputs {
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub fn add(&mut self, name: impl Into<String>, bytes: impl Into<Vec<u8>>) {
        self.files.push((name.into(), bytes.into()));
    }

    pub fn add_json<T: Serialize>(&mut self, name: &str, value: &T) {
        let mut s = serde_json::to_string_pretty(value).expect("serializable output");
        s.push('\n');
        self.add(name, s);
    }

    pub fn names(&self) -> Vec<String> {
        self.files.iter().map(|(n, _)| n.clone()).collect()
    }

    /// Writes every file into `dir`, each through a temporary name and a
    /// rename. On failure, files already written are removed.
    pub fn write_all(&self, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            let tmp = dir.join(format!(".{name}.partial"));
            let result = (|| {
                let mut f = std::fs::File::create(&tmp)?;
                f.write_all(bytes)?;
                f.sync_all()?;
                std::fs::rename(&tmp, &path)
            })();
            if let Err(e) = result {
                let _ = std::fs::remove_file(&tmp);
                for p in &written {
                    let _ = std::fs::remove_file(p);
                }
                return Err(e);
            }
            written.push(path);
        }
        Ok(written)
    }
}

/// Seventeen significant digits.
pub fn float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        String::new()
    }
}

/// A CSV table with a header row and `,` separators.
pub struct Csv {
    out: String,
    width: usize,
}

impl Csv {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        let mut out = String::new();
        let cols: Vec<&str> = header.iter().map(|h| h.as_ref()).collect();
        out.push_str(&cols.join(","));
        out.push('\n');
        Csv { out, width: cols.len() }
    }

    pub fn row<S: AsRef<str>>(&mut self, cells: &[S]) {
        debug_assert_eq!(cells.len(), self.width);
        let cells: Vec<&str> = cells.iter().map(|c| c.as_ref()).collect();
        self.out.push_str(&cells.join(","));
        self.out.push('\n');
    }

    pub fn finish(self) -> String {
        self.out
    }
}

pub const SVG_WIDTH: f64 = 800.0;
pub const SVG_HEIGHT: f64 = 500.0;
pub const CURVE_POINTS: usize = 512;

/// Histogram bars, a frame and the semicircle density as one polyline.
///
/// The document holds exactly `bins + 1` `rect` elements and one `polyline`.
pub fn histogram_svg(h: &Histogram, title: &str) -> String {
    let (margin_l, margin_r, margin_t, margin_b) = (60.0, 20.0, 40.0, 40.0);
    let plot_w = SVG_WIDTH - margin_l - margin_r;
    let plot_h = SVG_HEIGHT - margin_t - margin_b;
    let sc = SemicircleRef;
    let curve_max = sc.density(0.0);
    let bar_max = h.density.iter().cloned().fold(0.0, f64::max);
    let y_max = 1.1 * curve_max.max(bar_max);
    let sx = |x: f64| margin_l + (x - h.lo) / (h.hi - h.lo) * plot_w;
    let sy = |y: f64| margin_t + plot_h - y / y_max * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{hgt}" viewBox="0 0 {w} {hgt}">"#,
        w = SVG_WIDTH,
        hgt = SVG_HEIGHT
    );
    let _ = writeln!(s, "<title>{}</title>", escape(title));
    let _ = writeln!(
        s,
        r##"<rect x="{margin_l}" y="{margin_t}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#333333"/>"##
    );
    let w = h.width();
    for (i, &d) in h.density.iter().enumerate() {
        let x0 = sx(h.lo + i as f64 * w);
        let x1 = sx(h.lo + (i + 1) as f64 * w);
        let y = sy(d);
        let _ = writeln!(
            s,
            r##"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="#8fb3d9" stroke="#ffffff" stroke-width="0.5"/>"##,
            x0,
            y,
            x1 - x0,
            margin_t + plot_h - y
        );
    }
    let mut pts = Vec::with_capacity(CURVE_POINTS);
    for j in 0..CURVE_POINTS {
        let x = h.lo + (h.hi - h.lo) * j as f64 / (CURVE_POINTS - 1) as f64;
        pts.push(format!("{:.3},{:.3}", sx(x), sy(sc.density(x))));
    }
    let _ = writeln!(
        s,
        r##"<polyline fill="none" stroke="#c0392b" stroke-width="2" points="{}"/>"##,
        pts.join(" ")
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        SVG_WIDTH / 2.0,
        margin_t - 15.0,
        escape(title)
    );
    for (x, label) in [(h.lo, h.lo), ((h.lo + h.hi) / 2.0, (h.lo + h.hi) / 2.0), (h.hi, h.hi)] {
        let _ = writeln!(
            s,
            r#"<text x="{:.3}" y="{:.3}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#,
            sx(x),
            SVG_HEIGHT - margin_b + 18.0,
            label
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
