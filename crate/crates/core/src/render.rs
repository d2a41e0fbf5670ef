//! Static SVG rendering of a normalized contour.

use std::fmt::Write;

use crate::model::{BinScoreTimeline, ImportantPartAnnotation};

#[derive(Debug, Clone)]
pub struct SvgOptions {
    pub width: f64,
    pub height: f64,
    pub annotation: Option<ImportantPartAnnotation>,
    /// Adds a check or cross mark in the top-right corner.
    pub matched: Option<bool>,
    pub title: Option<String>,
}

impl Default for SvgOptions {
    fn default() -> Self {
        Self {
            width: 800.0,
            height: 160.0,
            annotation: None,
            matched: None,
            title: None,
        }
    }
}

const PAD_X: f64 = 10.0;
const PAD_TOP: f64 = 22.0;
const PAD_BOTTOM: f64 = 18.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Yellow filled contour of `normalized` with an optional green band over
/// the annotated part.
pub fn render_svg(t: &BinScoreTimeline, opts: &SvgOptions) -> String {
    let n = t.normalized.len().max(1) as f64;
    let plot_w = opts.width - 2.0 * PAD_X;
    let plot_h = opts.height - PAD_TOP - PAD_BOTTOM;
    let base_y = PAD_TOP + plot_h;
    let x_of = |s: f64| PAD_X + s / n * plot_w;
    let y_of = |v: f64| base_y - v.clamp(0.0, 1.0) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = opts.width,
        h = opts.height
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);

    if let Some(a) = opts.annotation {
        let x0 = x_of(f64::from(a.start_s));
        let x1 = x_of(f64::from(a.end_s));
        let _ = writeln!(
            svg,
            r##"<rect class="annotation" x="{x0:.2}" y="{PAD_TOP:.2}" width="{:.2}" height="{plot_h:.2}" fill="#9fdc9f" fill-opacity="0.6"/>"##,
            x1 - x0
        );
    }

    let mut path = format!("M{:.2},{:.2}", x_of(0.0), base_y);
    let mut line = String::new();
    for (i, &v) in t.normalized.iter().enumerate() {
        let (xa, xb, y) = (x_of(i as f64), x_of(i as f64 + 1.0), y_of(v));
        let _ = write!(path, " L{xa:.2},{y:.2} L{xb:.2},{y:.2}");
        let cmd = if i == 0 { 'M' } else { 'L' };
        let _ = write!(line, "{cmd}{xa:.2},{y:.2} L{xb:.2},{y:.2} ");
    }
    let _ = write!(path, " L{:.2},{:.2} Z", x_of(n), base_y);
    let _ = writeln!(
        svg,
        r##"<path class="contour" d="{path}" fill="#f6c915" stroke="none"/>"##
    );
    if !line.is_empty() {
        let _ = writeln!(
            svg,
            r##"<path class="contour-line" d="{}" fill="none" stroke="#b38f00" stroke-width="1"/>"##,
            line.trim_end()
        );
    }
    let _ = writeln!(
        svg,
        r##"<line x1="{:.2}" y1="{base_y:.2}" x2="{:.2}" y2="{base_y:.2}" stroke="#555" stroke-width="1"/>"##,
        x_of(0.0),
        x_of(n)
    );

    // minute ticks
    let minutes = (n / 60.0).floor() as u32;
    for m in 0..=minutes {
        let x = x_of(f64::from(m) * 60.0);
        let _ = writeln!(
            svg,
            r##"<text x="{x:.2}" y="{:.2}" font-size="10" font-family="sans-serif" fill="#555" text-anchor="middle">{m}:00</text>"##,
            base_y + 13.0
        );
    }

    let title = opts.title.clone().unwrap_or_else(|| t.video_id.clone());
    let _ = writeln!(
        svg,
        r##"<text x="{PAD_X:.2}" y="15" font-size="12" font-family="sans-serif" fill="#222">{} (computed {})</text>"##,
        escape(&title),
        t.computed_at
    );
    if let Some(ok) = opts.matched {
        let (mark, color) = if ok { ("\u{2713}", "#2a9d2a") } else { ("\u{2717}", "#cc2222") };
        let _ = writeln!(
            svg,
            r##"<text class="match" x="{:.2}" y="16" font-size="16" font-family="sans-serif" fill="{color}" text-anchor="end">{mark}</text>"##,
            opts.width - PAD_X
        );
    }
    svg.push_str("</svg>\n");
    svg
}
