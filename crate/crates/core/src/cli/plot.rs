//! Minimal deterministic SVG line charts.

use std::fmt::Write;

use crate::format;

const WIDTH: f64 = 480.0;
const HEIGHT: f64 = 360.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

pub struct Chart<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    /// Dashed y = x reference line (ROC plots).
    pub diagonal: bool,
}

fn coord(v: f64) -> String {
    format!("{v:.2}")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Expands a degenerate range so that it can be scaled.
fn widen((lo, hi): (f64, f64)) -> (f64, f64) {
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

impl Chart<'_> {
    /// Polyline over `points` (drawn in the given order) with point markers,
    /// axes, five ticks per axis, and labels.
    pub fn render(&self, points: &[(f64, f64)]) -> String {
        let (x0, x1) = widen(self.x_range);
        let (y0, y1) = widen(self.y_range);
        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| TOP + ph - (y - y0) / (y1 - y0) * ph;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            coord(WIDTH / 2.0),
            escape(self.title)
        );
        let (bx, by) = (coord(LEFT), coord(TOP + ph));
        let _ = writeln!(
            s,
            r#"<path d="M{bx} {} L{bx} {by} L{} {by}" fill="none" stroke="black"/>"#,
            coord(TOP),
            coord(LEFT + pw)
        );
        for i in 0..=4 {
            let t = i as f64 / 4.0;
            let xv = x0 + t * (x1 - x0);
            let yv = y0 + t * (y1 - y0);
            let (px, py) = (coord(sx(xv)), coord(sy(yv)));
            let _ = writeln!(
                s,
                r#"<line x1="{px}" y1="{by}" x2="{px}" y2="{}" stroke="black"/><text x="{px}" y="{}" text-anchor="middle">{}</text>"#,
                coord(TOP + ph + 5.0),
                coord(TOP + ph + 19.0),
                format::real(xv)
            );
            let _ = writeln!(
                s,
                r#"<line x1="{}" y1="{py}" x2="{bx}" y2="{py}" stroke="black"/><text x="{}" y="{}" text-anchor="end">{}</text>"#,
                coord(LEFT - 5.0),
                coord(LEFT - 8.0),
                coord(sy(yv) + 4.0),
                format::real(yv)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            coord(LEFT + pw / 2.0),
            coord(HEIGHT - 10.0),
            escape(self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="16" y="{cy}" text-anchor="middle" transform="rotate(-90 16 {cy})">{}</text>"#,
            escape(self.y_label),
            cy = coord(TOP + ph / 2.0)
        );
        if self.diagonal {
            let _ = writeln!(
                s,
                r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="gray" stroke-dasharray="4 4"/>"#,
                coord(sx(x0)),
                coord(sy(y0)),
                coord(sx(x1)),
                coord(sy(y1))
            );
        }
        let pts: Vec<String> = points
            .iter()
            .map(|&(x, y)| format!("{},{}", coord(sx(x)), coord(sy(y))))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="2"/>"#,
            pts.join(" ")
        );
        for &(x, y) in points {
            let _ = writeln!(
                s,
                r#"<circle cx="{}" cy="{}" r="3" fill="steelblue"/>"#,
                coord(sx(x)),
                coord(sy(y))
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_is_deterministic_and_well_formed() {
        let c = Chart {
            title: "a < b",
            x_label: "cp",
            y_label: "accuracy",
            x_range: (0.0, 0.2),
            y_range: (0.0, 1.0),
            diagonal: false,
        };
        let pts = [(0.0, 0.7), (0.1, 0.8), (0.2, 0.75)];
        let a = c.render(&pts);
        assert_eq!(a, c.render(&pts));
        assert!(a.starts_with("<svg") && a.ends_with("</svg>\n"));
        assert!(a.contains("a &lt; b"));
        assert_eq!(a.matches("<circle").count(), 3);
        let flat = Chart { x_range: (1.0, 1.0), ..c };
        assert!(!flat.render(&[(1.0, 0.5)]).contains("NaN"));
    }
}
