use std::fmt::Write as _;

use nalgebra::DMatrix;

pub struct Series<'a> {
    pub label: &'a str,
    pub color: &'a str,
    /// One point per column.
    pub points: &'a DMatrix<f64>,
}

const SIZE: f64 = 640.0;
const MARGIN: f64 = 40.0;

/// Scatter plot of coordinates `dims` of each series, drawn in order.
pub fn scatter_svg(series: &[Series<'_>], dims: (usize, usize)) -> String {
    let (mut lo_x, mut hi_x, mut lo_y, mut hi_y) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for s in series {
        for c in s.points.column_iter() {
            let (x, y) = (c[dims.0], c[dims.1]);
            if x.is_finite() && y.is_finite() {
                lo_x = lo_x.min(x);
                hi_x = hi_x.max(x);
                lo_y = lo_y.min(y);
                hi_y = hi_y.max(y);
            }
        }
    }
    if lo_x > hi_x {
        (lo_x, hi_x, lo_y, hi_y) = (0.0, 1.0, 0.0, 1.0);
    }
    let span_x = (hi_x - lo_x).max(1e-12);
    let span_y = (hi_y - lo_y).max(1e-12);
    let inner = SIZE - 2.0 * MARGIN;
    let px = |x: f64| MARGIN + (x - lo_x) / span_x * inner;
    let py = |y: f64| SIZE - MARGIN - (y - lo_y) / span_y * inner;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for s in series {
        let _ = writeln!(svg, r#"<g fill="{}" fill-opacity="0.8">"#, s.color);
        for c in s.points.column_iter() {
            let (x, y) = (c[dims.0], c[dims.1]);
            if x.is_finite() && y.is_finite() {
                let _ = writeln!(
                    svg,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="3"/>"#,
                    px(x),
                    py(y)
                );
            }
        }
        let _ = writeln!(svg, "</g>");
    }
    for (i, s) in series.iter().enumerate() {
        let y = 18.0 + 16.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<circle cx="12" cy="{y}" r="4" fill="{}"/><text x="22" y="{}" font-size="12" font-family="sans-serif">{}</text>"#,
            s.color,
            y + 4.0,
            s.label
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Tiles square images (columns of `images`, values in [0,1]) into a
/// binary PGM with `cols` tiles per row.
pub fn image_grid_pgm(images: &DMatrix<f64>, side: usize, cols: usize) -> Vec<u8> {
    let count = images.ncols();
    let cols = cols.max(1);
    let rows = count.div_ceil(cols).max(1);
    let (w, h) = (cols * side, rows * side);
    let mut pixels = vec![0u8; w * h];
    for (t, img) in images.column_iter().enumerate() {
        let (tr, tc) = (t / cols, t % cols);
        for r in 0..side {
            for c in 0..side {
                // IDX images are stored row-major.
                let v = img[r * side + c];
                let v = if v.is_finite() {
                    v.clamp(0.0, 1.0)
                } else {
                    0.0
                };
                pixels[(tr * side + r) * w + tc * side + c] = (v * 255.0).round() as u8;
            }
        }
    }
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    out.extend(pixels);
    out
}

/// `Some(s)` when `d = s²` with `s ≥ 2`.
pub fn square_side(d: usize) -> Option<usize> {
    let s = (d as f64).sqrt().round() as usize;
    (s >= 2 && s * s == d).then_some(s)
}
