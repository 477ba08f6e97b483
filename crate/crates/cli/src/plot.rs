//! Minimal static SVG rendering.  The CSV files are the data contract;
//! these plots are a reading aid only.

use std::fmt::Write as _;
use std::path::Path;

use membec::{Error, Result};

const W: f64 = 720.0;
const H: f64 = 480.0;
const ML: f64 = 70.0;
const MR: f64 = 20.0;
const MT: f64 = 40.0;
const MB: f64 = 55.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

fn finite_bounds(it: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in it.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo > hi {
        return None;
    }
    if lo == hi {
        lo -= 0.5;
        hi += 0.5;
    }
    Some((lo, hi))
}

fn write_svg(path: &Path, body: &str) -> Result<()> {
    let svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"13\">\n\
         <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n{body}</svg>\n"
    );
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)
            .map_err(|e| Error::Config(format!("cannot create `{}`: {e}", dir.display())))?;
    }
    std::fs::write(path, svg)
        .map_err(|e| Error::Config(format!("cannot write `{}`: {e}", path.display())))
}

fn axes(title: &str, x_label: &str, y_label: &str, xr: (f64, f64), yr: (f64, f64)) -> String {
    let mut s = String::new();
    let _ = write!(
        s,
        "<rect x=\"{ML}\" y=\"{MT}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
        W - ML - MR,
        H - MT - MB
    );
    let _ = write!(
        s,
        "<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
        W / 2.0,
        title
    );
    let _ = write!(
        s,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
        W / 2.0,
        H - 12.0,
        x_label
    );
    let _ = write!(
        s,
        "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>\n",
        H / 2.0,
        H / 2.0,
        y_label
    );
    for (t, v) in [(0.0, xr.0), (0.5, 0.5 * (xr.0 + xr.1)), (1.0, xr.1)] {
        let x = ML + t * (W - ML - MR);
        let _ = write!(
            s,
            "<text x=\"{x}\" y=\"{}\" text-anchor=\"middle\" font-size=\"11\">{v:.4}</text>\n",
            H - MB + 16.0
        );
    }
    for (t, v) in [(0.0, yr.0), (0.5, 0.5 * (yr.0 + yr.1)), (1.0, yr.1)] {
        let y = H - MB - t * (H - MT - MB);
        let _ = write!(
            s,
            "<text x=\"{}\" y=\"{y}\" text-anchor=\"end\" font-size=\"11\">{v:.4}</text>\n",
            ML - 6.0
        );
    }
    s
}

/// Polyline plot of one or more `(label, points)` series.
pub fn line_plot(
    path: &Path,
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[(String, Vec<(f64, f64)>)],
) -> Result<()> {
    let xr = finite_bounds(series.iter().flat_map(|s| s.1.iter().map(|p| p.0)))
        .unwrap_or((0.0, 1.0));
    let yr = finite_bounds(series.iter().flat_map(|s| s.1.iter().map(|p| p.1)))
        .unwrap_or((0.0, 1.0));
    let sx = |x: f64| ML + (x - xr.0) / (xr.1 - xr.0) * (W - ML - MR);
    let sy = |y: f64| H - MB - (y - yr.0) / (yr.1 - yr.0) * (H - MT - MB);

    let mut body = axes(title, x_label, y_label, xr, yr);
    for (i, (label, pts)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut d = String::new();
        let mut pen_up = true;
        for &(x, y) in pts {
            if !x.is_finite() || !y.is_finite() {
                pen_up = true;
                continue;
            }
            let cmd = if pen_up { 'M' } else { 'L' };
            let _ = write!(d, "{cmd}{:.2} {:.2} ", sx(x), sy(y));
            pen_up = false;
        }
        let _ = write!(
            body,
            "<path d=\"{d}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.6\"/>\n"
        );
        let ly = MT + 16.0 + 16.0 * i as f64;
        let _ = write!(
            body,
            "<line x1=\"{}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"2\"/>\n\
             <text x=\"{}\" y=\"{}\" font-size=\"12\">{label}</text>\n",
            ML + 8.0,
            ML + 32.0,
            ML + 38.0,
            ly + 4.0
        );
    }
    write_svg(path, &body)
}

/// Cell-colored surface of `values[iy][ix]` (NaN cells grey).
pub fn heatmap(
    path: &Path,
    title: &str,
    x_label: &str,
    y_label: &str,
    x: &[f64],
    y: &[f64],
    values: &[Vec<f64>],
) -> Result<()> {
    let xr = finite_bounds(x.iter().copied()).unwrap_or((0.0, 1.0));
    let yr = finite_bounds(y.iter().copied()).unwrap_or((0.0, 1.0));
    let vr = finite_bounds(values.iter().flat_map(|row| row.iter().copied())).unwrap_or((0.0, 1.0));
    let mut body = axes(title, x_label, y_label, xr, yr);
    let cw = (W - ML - MR) / x.len() as f64;
    let ch = (H - MT - MB) / y.len() as f64;
    for (iy, row) in values.iter().enumerate() {
        for (ix, &v) in row.iter().enumerate() {
            let color = if v.is_finite() {
                let t = ((v - vr.0) / (vr.1 - vr.0)).clamp(0.0, 1.0);
                let r = (255.0 * t) as u8;
                let b = (255.0 * (1.0 - t)) as u8;
                let g = (80.0 + 80.0 * (1.0 - (2.0 * t - 1.0).abs())) as u8;
                format!("#{r:02x}{g:02x}{b:02x}")
            } else {
                "#bbbbbb".to_string()
            };
            let px = ML + ix as f64 * cw;
            let py = H - MB - (iy + 1) as f64 * ch;
            let _ = write!(
                body,
                "<rect x=\"{px:.2}\" y=\"{py:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{color}\"/>\n",
                cw + 0.5,
                ch + 0.5
            );
        }
    }
    write_svg(path, &body)
}
