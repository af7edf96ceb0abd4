//! Self-contained SVG heatmaps and line plots.

use std::fmt::Write;

/// Colour of cells whose value is NaN or infinite.
pub const SENTINEL_COLOR: &str = "#ff00ff";

const LOW: [f64; 3] = [16.0, 16.0, 48.0];
const HIGH: [f64; 3] = [255.0, 236.0, 140.0];

/// Ramp colour for `t` in [0, 1]. Every channel rises with `t`, so brightness
/// is monotone in the value.
pub fn ramp_color(t: f64) -> [u8; 3] {
    let t = if t.is_finite() {
        t.clamp(0.0, 1.0)
    } else {
        0.0
    };
    let mut out = [0u8; 3];
    for (o, (lo, hi)) in out.iter_mut().zip(LOW.iter().zip(HIGH)) {
        *o = (lo + t * (hi - lo)).round() as u8;
    }
    out
}

/// Relative luminance of an 8-bit sRGB triple (Rec. 709 weights).
pub fn luminance(c: [u8; 3]) -> f64 {
    0.2126 * c[0] as f64 + 0.7152 * c[1] as f64 + 0.0722 * c[2] as f64
}

fn hex(c: [u8; 3]) -> String {
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        "NaN".to_string()
    }
}

/// A 2-D metric slice; `values[iy * x_values.len() + ix]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Surface {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x_values: Vec<f64>,
    pub y_values: Vec<f64>,
    pub values: Vec<f64>,
}

impl Surface {
    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.x_values.len() + ix]
    }

    /// Finite (min, max), or None when no cell is finite.
    pub fn range(&self) -> Option<(f64, f64)> {
        let finite = self.values.iter().copied().filter(|v| v.is_finite());
        finite.fold(None, |acc, v| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })
    }

    /// Fill colour of a cell under this surface's ramp.
    pub fn cell_color(&self, v: f64) -> String {
        if !v.is_finite() {
            return SENTINEL_COLOR.to_string();
        }
        let (lo, hi) = self.range().expect("a finite value exists");
        let t = if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };
        hex(ramp_color(t))
    }
}

const CELL: f64 = 22.0;
const LEFT: f64 = 70.0;
const TOP: f64 = 40.0;

/// Heatmap with ticks at grid values, per-cell tooltips and a legend.
pub fn emit_heatmap_svg(s: &Surface) -> String {
    assert_eq!(
        s.values.len(),
        s.x_values.len() * s.y_values.len(),
        "surface shape"
    );
    let nx = s.x_values.len();
    let ny = s.y_values.len();
    let plot_w = nx as f64 * CELL;
    let plot_h = ny as f64 * CELL;
    let legend_x = LEFT + plot_w + 30.0;
    let width = legend_x + 110.0;
    let height = TOP + plot_h + 60.0;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="10">"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{LEFT}" y="20" font-size="13">{}</text>"#,
        esc(&s.title)
    );
    // Row 0 of y_values is drawn at the bottom.
    for iy in 0..ny {
        for ix in 0..nx {
            let v = s.get(ix, iy);
            let x = LEFT + ix as f64 * CELL;
            let y = TOP + (ny - 1 - iy) as f64 * CELL;
            let _ = writeln!(
                out,
                r#"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="{}"><title>{}={}, {}={}: {}</title></rect>"#,
                s.cell_color(v),
                esc(&s.x_label),
                num(s.x_values[ix]),
                esc(&s.y_label),
                num(s.y_values[iy]),
                num(v)
            );
        }
    }
    for (ix, xv) in s.x_values.iter().enumerate() {
        let x = LEFT + (ix as f64 + 0.5) * CELL;
        let y = TOP + plot_h + 12.0;
        let _ = writeln!(
            out,
            r#"<text x="{x}" y="{y}" text-anchor="middle">{}</text>"#,
            num(*xv)
        );
    }
    for (iy, yv) in s.y_values.iter().enumerate() {
        let y = TOP + (ny - 1 - iy) as f64 * CELL + CELL * 0.5 + 3.0;
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{y}" text-anchor="end">{}</text>"#,
            LEFT - 4.0,
            num(*yv)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        LEFT + plot_w / 2.0,
        TOP + plot_h + 30.0,
        esc(&s.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0,
        esc(&s.y_label)
    );
    emit_legend(&mut out, s, legend_x, plot_h.max(CELL * 4.0));
    out.push_str("</svg>\n");
    out
}

fn emit_legend(out: &mut String, s: &Surface, x: f64, h: f64) {
    let _ = writeln!(
        out,
        r#"<defs><linearGradient id="ramp" x1="0" y1="1" x2="0" y2="0"><stop offset="0" stop-color="{}"/><stop offset="1" stop-color="{}"/></linearGradient></defs>"#,
        hex(ramp_color(0.0)),
        hex(ramp_color(1.0))
    );
    let (lo, hi) = s.range().unwrap_or((f64::NAN, f64::NAN));
    if lo == hi {
        let _ = writeln!(
            out,
            r#"<rect x="{x}" y="{TOP}" width="16" height="{h}" fill="{}"/>"#,
            hex(ramp_color(0.5))
        );
    } else {
        let _ = writeln!(
            out,
            r#"<rect x="{x}" y="{TOP}" width="16" height="{h}" fill="url(#ramp)"/>"#
        );
    }
    let tx = x + 20.0;
    let _ = writeln!(
        out,
        r#"<text x="{tx}" y="{}" class="legend-max">max {}</text>"#,
        TOP + 8.0,
        num(hi)
    );
    let _ = writeln!(
        out,
        r#"<text x="{tx}" y="{}" class="legend-min">min {}</text>"#,
        TOP + h,
        num(lo)
    );
    let _ = writeln!(
        out,
        r#"<rect x="{x}" y="{}" width="10" height="10" fill="{SENTINEL_COLOR}"/><text x="{}" y="{}">non-finite</text>"#,
        TOP + h + 10.0,
        x + 14.0,
        TOP + h + 19.0
    );
}

/// A named polyline for [`emit_curve_svg`].
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// Line plot of several series on shared axes; non-finite points break lines.
pub fn emit_curve_svg(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let (w, h) = (420.0, 300.0);
    let (left, top) = (60.0, 36.0);
    let pts = series
        .iter()
        .flat_map(|s| s.points.iter())
        .filter(|p| p.0.is_finite() && p.1.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 == y0 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * w;
    let sy = |y: f64| top + h - (y - y0) / (y1 - y0) * h;
    let legend_x = left + w + 20.0;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{}" height="{}" font-family="sans-serif" font-size="10">"#,
        legend_x + 90.0,
        top + h + 50.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{left}" y="20" font-size="13">{}</text>"#,
        esc(title)
    );
    let _ = writeln!(
        out,
        r##"<rect x="{left}" y="{top}" width="{w}" height="{h}" fill="none" stroke="#444"/>"##
    );
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let xv = x0 + f * (x1 - x0);
        let yv = y0 + f * (y1 - y0);
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            sx(xv),
            top + h + 14.0,
            short(xv)
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            left - 4.0,
            sy(yv) + 3.0,
            short(yv)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        left + w / 2.0,
        top + h + 32.0,
        esc(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="14" y="{0}" text-anchor="middle" transform="rotate(-90 14 {0})">{1}</text>"#,
        top + h / 2.0,
        esc(y_label)
    );
    let n = series.len().max(1);
    for (i, s) in series.iter().enumerate() {
        let color = hex(ramp_color(if n > 1 {
            i as f64 / (n - 1) as f64
        } else {
            0.0
        })
        .map(|c| c.saturating_sub(16)));
        let mut d = String::new();
        let mut pen_down = false;
        for &(x, y) in &s.points {
            if x.is_finite() && y.is_finite() {
                let _ = write!(
                    d,
                    "{}{:.2},{:.2} ",
                    if pen_down { "L" } else { "M" },
                    sx(x),
                    sy(y)
                );
                pen_down = true;
            } else {
                pen_down = false;
            }
        }
        let _ = writeln!(
            out,
            r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.5"><title>{}</title></path>"#,
            d.trim_end(),
            esc(&s.label)
        );
        let ly = top + 10.0 + i as f64 * 14.0;
        let _ = writeln!(
            out,
            r#"<line x1="{legend_x}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            legend_x + 16.0,
            legend_x + 20.0,
            ly + 3.0,
            esc(&s.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn short(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn surface(nx: usize, ny: usize, values: Vec<f64>) -> Surface {
        Surface {
            title: "t".into(),
            x_label: "L".into(),
            y_label: "W".into(),
            x_values: (0..nx).map(|i| i as f64).collect(),
            y_values: (0..ny).map(|i| i as f64).collect(),
            values,
        }
    }

    fn fills(svg: &str) -> Vec<String> {
        svg.lines()
            .filter(|l| l.starts_with("<rect") && l.contains("<title>"))
            .map(|l| l.split("fill=\"").nth(1).unwrap()[..7].to_string())
            .collect()
    }

    fn parse_hex(h: &str) -> [u8; 3] {
        let v = |i: usize| u8::from_str_radix(&h[i..i + 2], 16).unwrap();
        [v(1), v(3), v(5)]
    }

    #[test]
    fn single_cell_legend_min_equals_max() {
        let svg = emit_heatmap_svg(&surface(1, 1, vec![0.7]));
        assert_eq!(fills(&svg).len(), 1);
        assert!(svg.contains("max 0.7") && svg.contains("min 0.7"));
    }

    #[test]
    fn constant_surface_is_uniform() {
        let svg = emit_heatmap_svg(&surface(3, 2, vec![2.0; 6]));
        let f = fills(&svg);
        assert!(f.iter().all(|c| c == &f[0]));
        assert!(svg.contains("max 2"));
    }

    #[test]
    fn brightness_increases_with_value() {
        let s = surface(2, 2, vec![0.0, 1.0, 2.0, 3.0]);
        let lum: Vec<f64> = s
            .values
            .iter()
            .map(|&v| luminance(parse_hex(&s.cell_color(v))))
            .collect();
        assert!(lum.windows(2).all(|w| w[1] > w[0]), "{lum:?}");
        assert_eq!(fills(&emit_heatmap_svg(&s)).len(), 4);
    }

    #[test]
    fn non_finite_cells_use_sentinel() {
        let svg = emit_heatmap_svg(&surface(2, 1, vec![1.0, f64::NAN]));
        let f = fills(&svg);
        assert_eq!(f.len(), 2);
        assert_eq!(f[1], SENTINEL_COLOR);
        assert!(svg.contains(": NaN</title>"));
    }

    #[test]
    fn curve_plot_lists_series() {
        let svg = emit_curve_svg(
            "c",
            "x",
            "y",
            &[
                Series {
                    label: "a".into(),
                    points: vec![(0.0, 0.0), (1.0, 1.0)],
                },
                Series {
                    label: "b".into(),
                    points: vec![(0.0, 1.0), (f64::NAN, 0.0), (1.0, 0.0)],
                },
            ],
        );
        assert_eq!(svg.matches("<path").count(), 2);
        assert!(!svg.contains("href"));
    }
}
