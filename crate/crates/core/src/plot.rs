//! Standalone SVG line charts of one or more arcs.

use std::fmt::Write;

use crate::arcs::EmotionArc;

const PALETTE: [&str; 8] = [
    "#d4a017", "#2e8b57", "#1f77b4", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    /// `(x, y)` pairs; `None` breaks the line.
    pub points: Vec<(f64, Option<f64>)>,
}

impl Series {
    pub fn from_arc(label: impl Into<String>, arc: &EmotionArc) -> Self {
        Series {
            label: label.into(),
            points: arc
                .points()
                .iter()
                .map(|p| (p.position as f64, p.value))
                .collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlotOptions {
    pub width: u32,
    pub height: u32,
    pub title: Option<String>,
    pub x_label: String,
    pub y_label: String,
}

impl Default for PlotOptions {
    fn default() -> Self {
        PlotOptions {
            width: 900,
            height: 400,
            title: None,
            x_label: "position".into(),
            y_label: "score".into(),
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Round tick values covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    if !(hi > lo) {
        return vec![lo];
    }
    let raw = (hi - lo) / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let mut v = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while v <= hi + step * 1e-9 {
        out.push(if v.abs() < step * 1e-9 { 0.0 } else { v });
        v += step;
    }
    out
}

/// Renders the series as an SVG document.
pub fn render_svg(series: &[Series], opts: &PlotOptions) -> String {
    let (w, h) = (opts.width as f64, opts.height as f64);
    let (ml, mr, mt, mb) = (60.0, 20.0, if opts.title.is_some() { 36.0 } else { 16.0 }, 48.0);
    let (pw, ph) = ((w - ml - mr).max(1.0), (h - mt - mb).max(1.0));

    let present = series
        .iter()
        .flat_map(|s| s.points.iter().filter_map(|&(x, y)| y.map(|y| (x, y))));
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (x, y) in present {
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
        y0 -= 0.5;
        y1 += 0.5;
    }
    let sx = |x: f64| ml + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| mt + ph - (y - y0) / (y1 - y0) * ph;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    if let Some(t) = &opts.title {
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            w / 2.0,
            escape(t)
        );
    }
    // axes
    let _ = writeln!(
        svg,
        r#"<path d="M{ml},{mt} V{} H{}" fill="none" stroke="black"/>"#,
        mt + ph,
        ml + pw
    );
    for t in ticks(y0, y1, 5) {
        let y = sy(t);
        let _ = writeln!(
            svg,
            r##"<path d="M{},{y:.2} H{}" stroke="#ddd"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"##,
            ml,
            ml + pw,
            ml - 6.0,
            y + 4.0,
            fmt_tick(t)
        );
    }
    for t in ticks(x0, x1, 8) {
        let x = sx(t);
        let _ = writeln!(
            svg,
            r#"<path d="M{x:.2},{} v5" stroke="black"/><text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#,
            mt + ph,
            mt + ph + 18.0,
            fmt_tick(t)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        ml + pw / 2.0,
        h - 10.0,
        escape(&opts.x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        mt + ph / 2.0,
        mt + ph / 2.0,
        escape(&opts.y_label)
    );

    // at most ~4 samples per horizontal pixel
    let budget = (pw as usize * 4).max(2);
    for (i, s) in series.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let stride = s.points.len().div_ceil(budget).max(1);
        let mut d = String::new();
        let mut pen_down = false;
        for (j, &(x, y)) in s.points.iter().enumerate() {
            match y {
                Some(y) if j % stride == 0 || j + 1 == s.points.len() => {
                    let _ = write!(d, "{}{:.2},{:.2} ", if pen_down { "L" } else { "M" }, sx(x), sy(y));
                    pen_down = true;
                }
                Some(_) => {}
                None => pen_down = false,
            }
        }
        let _ = writeln!(
            svg,
            r#"<path d="{}" fill="none" stroke="{colour}" stroke-width="1.5"/>"#,
            d.trim_end()
        );
        let ly = mt + 8.0 + 16.0 * i as f64;
        let lx = ml + pw - 150.0;
        let _ = writeln!(
            svg,
            r#"<path d="M{lx:.2},{ly:.2} h20" stroke="{colour}" stroke-width="3"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 26.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn fmt_tick(v: f64) -> String {
    if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arcs::BinSpec;

    #[test]
    fn one_path_per_series_with_legend() {
        let bin = BinSpec::rolling(1).unwrap();
        let gold = EmotionArc::from_values(vec![Some(0.0), Some(1.0), Some(0.5)], bin);
        let pred = EmotionArc::from_values(vec![Some(0.2), None, Some(0.4)], bin);
        let svg = render_svg(
            &[Series::from_arc("gold", &gold), Series::from_arc("predicted <lexo>", &pred)],
            &PlotOptions {
                title: Some("valence".into()),
                ..PlotOptions::default()
            },
        );
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("stroke-width=\"1.5\"").count(), 2);
        assert!(svg.contains("predicted &lt;lexo&gt;"));
        // the missing point splits the second line into two moves
        let second = svg.lines().filter(|l| l.contains("stroke-width=\"1.5\"")).nth(1).unwrap();
        assert_eq!(second.matches('M').count(), 2);
    }

    #[test]
    fn empty_and_flat_series_render() {
        let svg = render_svg(&[], &PlotOptions::default());
        assert!(svg.contains("</svg>"));
        let flat = Series {
            label: "flat".into(),
            points: vec![(0.0, Some(1.0)), (1.0, Some(1.0))],
        };
        assert!(!render_svg(&[flat], &PlotOptions::default()).contains("NaN"));
    }

    #[test]
    fn tick_values_are_round() {
        assert_eq!(ticks(0.0, 10.0, 5), vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0]);
        assert_eq!(ticks(-1.0, 1.0, 4), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
    }
}
