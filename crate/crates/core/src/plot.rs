//! Standalone SVG scatter plots with per-component covariance ellipses.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const PALETTE: [&str; 6] = ["#1170AA", "#55AD89", "#EF6F6A", "#D3A333", "#5FEFE8", "#11F444"];

const WIDTH: f64 = 480.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 56.0;
const TICKS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipseSpec {
    pub center: [f64; 2],
    /// Row-major 2×2 covariance.
    pub cov: [[f64; 2]; 2],
    pub level: f64,
    pub points: usize,
}

impl EllipseSpec {
    pub fn new(center: [f64; 2], cov: [[f64; 2]; 2]) -> Self {
        Self {
            center,
            cov,
            level: 0.95,
            points: 100,
        }
    }
}

/// χ² quantile with two degrees of freedom.
pub fn chi2_2dof_quantile(level: f64) -> f64 {
    -2.0 * (1.0 - level).ln()
}

/// `center + sqrt(q) · L · (cos θ, sin θ)` for `points` evenly spaced angles,
/// where `L` is the Cholesky factor of `cov`.
pub fn ellipse_points(spec: &EllipseSpec) -> Result<Vec<[f64; 2]>> {
    if !(spec.level > 0.0 && spec.level < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "ellipse level must lie in (0, 1), got {}",
            spec.level
        )));
    }
    if spec.points == 0 {
        return Err(Error::InvalidParameter("ellipse needs at least one point".into()));
    }
    let c = spec.cov;
    if (c[0][1] - c[1][0]).abs() > 1e-12 * (1.0 + c[0][1].abs()) {
        return Err(Error::NotPositiveDefinite("ellipse covariance is not symmetric".into()));
    }
    let l = Matrix2::new(c[0][0], c[0][1], c[1][0], c[1][1])
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("ellipse covariance".into()))?
        .l();
    let r = chi2_2dof_quantile(spec.level).sqrt();
    Ok((0..spec.points)
        .map(|j| {
            let t = std::f64::consts::TAU * j as f64 / spec.points as f64;
            let p = l * Vector2::new(t.cos(), t.sin()) * r;
            [spec.center[0] + p[0], spec.center[1] + p[1]]
        })
        .collect())
}

/// Inputs of one scatter figure.
#[derive(Debug, Clone)]
pub struct ScatterPlot<'a> {
    /// `N × 2`.
    pub data: &'a DMatrix<f64>,
    pub labels: &'a [usize],
    /// `2 × K` component means.
    pub means: &'a DMatrix<f64>,
    /// One 2×2 covariance per component; `None` skips that ellipse.
    pub covs: &'a [Option<DMatrix<f64>>],
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub level: f64,
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn fit(points: impl Iterator<Item = [f64; 2]>) -> Self {
        let mut f = Frame {
            x0: f64::INFINITY,
            x1: f64::NEG_INFINITY,
            y0: f64::INFINITY,
            y1: f64::NEG_INFINITY,
        };
        for [x, y] in points {
            f.x0 = f.x0.min(x);
            f.x1 = f.x1.max(x);
            f.y0 = f.y0.min(y);
            f.y1 = f.y1.max(y);
        }
        if !f.x0.is_finite() {
            return Frame {
                x0: 0.0,
                x1: 1.0,
                y0: 0.0,
                y1: 1.0,
            };
        }
        let pad = |lo: f64, hi: f64| {
            let span = if hi > lo { hi - lo } else { 1.0 };
            (lo - 0.05 * span, hi + 0.05 * span)
        };
        let (x0, x1) = pad(f.x0, f.x1);
        let (y0, y1) = pad(f.y0, f.y1);
        Frame { x0, x1, y0, y1 }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn color(label: usize) -> &'static str {
    PALETTE[label % PALETTE.len()]
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn render_scatter_svg(plot: &ScatterPlot<'_>) -> Result<String> {
    let n = plot.data.nrows();
    if plot.data.ncols() != 2 {
        return Err(Error::DimensionMismatch {
            context: "plot columns",
            expected: 2,
            found: plot.data.ncols(),
        });
    }
    if plot.labels.len() != n {
        return Err(Error::DimensionMismatch {
            context: "plot labels",
            expected: n,
            found: plot.labels.len(),
        });
    }
    let k = plot.means.ncols();
    if k > 0 && plot.means.nrows() != 2 {
        return Err(Error::DimensionMismatch {
            context: "plot mean rows",
            expected: 2,
            found: plot.means.nrows(),
        });
    }
    if plot.covs.len() != k {
        return Err(Error::DimensionMismatch {
            context: "plot covariances",
            expected: k,
            found: plot.covs.len(),
        });
    }

    let mut ellipses = Vec::new();
    for (c, cov) in plot.covs.iter().enumerate() {
        if let Some(cov) = cov {
            let spec = EllipseSpec {
                level: plot.level,
                ..EllipseSpec::new(
                    [plot.means[(0, c)], plot.means[(1, c)]],
                    [[cov[(0, 0)], cov[(0, 1)]], [cov[(1, 0)], cov[(1, 1)]]],
                )
            };
            ellipses.push((c, ellipse_points(&spec)?));
        }
    }

    let points = (0..n).map(|i| [plot.data[(i, 0)], plot.data[(i, 1)]]);
    let centers = (0..k).map(|c| [plot.means[(0, c)], plot.means[(1, c)]]);
    let outline = ellipses.iter().flat_map(|(_, pts)| pts.iter().copied());
    let frame = Frame::fit(points.clone().chain(centers.clone()).chain(outline));

    let mut s = String::new();
    let w = &mut s;
    let _ = writeln!(w, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(w, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let (l, r, t, b) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(
        w,
        r##"<rect x="{l:.3}" y="{t:.3}" width="{:.3}" height="{:.3}" fill="none" stroke="#444444"/>"##,
        r - l,
        b - t
    );
    let _ = writeln!(w, r##"<g font-family="sans-serif" font-size="11" fill="#222222">"##);
    for i in 0..TICKS {
        let f = i as f64 / (TICKS - 1) as f64;
        let xv = frame.x0 + f * (frame.x1 - frame.x0);
        let yv = frame.y0 + f * (frame.y1 - frame.y0);
        let (xp, yp) = (frame.px(xv), frame.py(yv));
        let _ = writeln!(w, r##"<line x1="{xp:.3}" y1="{b:.3}" x2="{xp:.3}" y2="{:.3}" stroke="#444444"/>"##, b + 4.0);
        let _ = writeln!(w, r#"<text x="{xp:.3}" y="{:.3}" text-anchor="middle">{xv:.3}</text>"#, b + 16.0);
        let _ = writeln!(w, r##"<line x1="{:.3}" y1="{yp:.3}" x2="{l:.3}" y2="{yp:.3}" stroke="#444444"/>"##, l - 4.0);
        let _ = writeln!(w, r#"<text x="{:.3}" y="{:.3}" text-anchor="end">{yv:.3}</text>"#, l - 6.0, yp + 4.0);
    }
    let _ = writeln!(
        w,
        r#"<text x="{:.3}" y="{:.3}" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 14.0,
        escape(plot.x_label)
    );
    let _ = writeln!(
        w,
        r#"<text x="16" y="{:.3}" text-anchor="middle" transform="rotate(-90 16 {:.3})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(plot.y_label)
    );
    let _ = writeln!(w, "</g>");

    let _ = writeln!(w, r#"<g stroke="none" fill-opacity="0.25">"#);
    for (c, pts) in &ellipses {
        let path: Vec<String> = pts
            .iter()
            .map(|p| format!("{:.3},{:.3}", frame.px(p[0]), frame.py(p[1])))
            .collect();
        let _ = writeln!(w, r#"<polygon fill="{}" points="{}"/>"#, color(*c), path.join(" "));
    }
    let _ = writeln!(w, "</g>");

    let _ = writeln!(w, r#"<g stroke="none">"#);
    for (i, [x, y]) in points.enumerate() {
        let _ = writeln!(
            w,
            r#"<circle cx="{:.3}" cy="{:.3}" r="2" fill="{}"/>"#,
            frame.px(x),
            frame.py(y),
            color(plot.labels[i])
        );
    }
    let _ = writeln!(w, "</g>");

    let _ = writeln!(w, r#"<g stroke="black" stroke-width="1.2" fill="none">"#);
    for [x, y] in centers {
        let (cx, cy, h) = (frame.px(x), frame.py(y), 4.0);
        let _ = writeln!(
            w,
            r#"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}"/>"#,
            cx - h,
            cy - h,
            2.0 * h,
            2.0 * h
        );
        let _ = writeln!(
            w,
            r#"<path d="M{:.3},{:.3} L{:.3},{:.3} M{:.3},{:.3} L{:.3},{:.3}"/>"#,
            cx - h,
            cy - h,
            cx + h,
            cy + h,
            cx - h,
            cy + h,
            cx + h,
            cy - h
        );
    }
    let _ = writeln!(w, "</g>");
    let _ = writeln!(w, "</svg>");
    Ok(s)
}

pub fn emit_scatter_svg(plot: &ScatterPlot<'_>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let svg = render_scatter_svg(plot)?;
    std::fs::write(path, svg).map_err(|e| Error::io(path, e))
}

/// Per-class sample means (`2 × k`) and covariances of `N × 2` data.
/// Classes with fewer than three points or a singular covariance get no
/// ellipse; empty classes sit at the origin.
pub fn class_moments(data: &DMatrix<f64>, labels: &[usize], k: usize) -> (DMatrix<f64>, Vec<Option<DMatrix<f64>>>) {
    let mut means = DMatrix::zeros(2, k);
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        means[(0, l)] += data[(i, 0)];
        means[(1, l)] += data[(i, 1)];
    }
    for c in 0..k {
        if counts[c] > 0 {
            means[(0, c)] /= counts[c] as f64;
            means[(1, c)] /= counts[c] as f64;
        }
    }
    let mut scatter = vec![DMatrix::<f64>::zeros(2, 2); k];
    for (i, &l) in labels.iter().enumerate() {
        let d = [data[(i, 0)] - means[(0, l)], data[(i, 1)] - means[(1, l)]];
        for a in 0..2 {
            for b in 0..2 {
                scatter[l][(a, b)] += d[a] * d[b];
            }
        }
    }
    let covs = scatter
        .into_iter()
        .zip(&counts)
        .map(|(s, &n)| {
            let cov = s / (n.max(2) - 1) as f64;
            (n >= 3 && cov.clone().cholesky().is_some()).then_some(cov)
        })
        .collect();
    (means, covs)
}
