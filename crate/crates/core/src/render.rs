//! Static pictures of a configuration: plain text and SVG.

use std::fmt::Write;

use crate::geometry::{Color, Configuration, Point};

fn glyph(c: Color) -> char {
    match c {
        Color::A => 'o',
        Color::B => '#',
    }
}

/// Text grid, top row first. `o` is a robot with color A, `#` one with
/// color B and `.` an empty cell. Row labels are y values, the bottom line
/// labels x values modulo 10.
pub fn ascii(config: &Configuration) -> String {
    let lo = config.min_corner();
    let hi = config.max_corner();
    let label_w = lo.y.to_string().len().max(hi.y.to_string().len());
    let mut out = String::new();
    for y in (lo.y..=hi.y).rev() {
        let _ = write!(out, "{y:>label_w$} |");
        for x in lo.x..=hi.x {
            let cell = config.occupant(Point::new(x, y)).map_or('.', |id| glyph(config.robot(id).color));
            out.push(cell);
        }
        out.push('\n');
    }
    let _ = writeln!(out, "{:>label_w$} +{}", "", "-".repeat((hi.x - lo.x + 1) as usize));
    let digits: String = (lo.x..=hi.x).map(|x| char::from(b'0' + x.rem_euclid(10) as u8)).collect();
    let _ = writeln!(out, "{:>label_w$}  {digits}", "");
    let _ = writeln!(out, "{:>label_w$}  x from {} to {}", "", lo.x, hi.x);
    out
}

const CELL: i64 = 24;
const MARGIN: i64 = 32;

/// SVG drawing: grid lines, axis labels, hollow circles for color A and
/// filled circles for color B.
pub fn svg(config: &Configuration, title: &str) -> String {
    let lo = config.min_corner();
    let hi = config.max_corner();
    let (cols, rows) = (hi.x - lo.x + 1, hi.y - lo.y + 1);
    let (w, h) = (cols * CELL + 2 * MARGIN, rows * CELL + 2 * MARGIN);
    let cx = |x: i64| MARGIN + (x - lo.x) * CELL + CELL / 2;
    let cy = |y: i64| MARGIN + (hi.y - y) * CELL + CELL / 2;
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, "<title>{}</title>", escape(title));
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r##"<g stroke="#ddd" stroke-width="1">"##);
    for x in lo.x..=hi.x {
        let _ = writeln!(s, r#"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}"/>"#, cx(x), cy(hi.y), cy(lo.y));
    }
    for y in lo.y..=hi.y {
        let _ = writeln!(s, r#"<line x1="{1}" y1="{0}" x2="{2}" y2="{0}"/>"#, cy(y), cx(lo.x), cx(hi.x));
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r#"<g font-family="monospace" font-size="10" fill="black" text-anchor="middle">"#);
    for x in lo.x..=hi.x {
        let _ = writeln!(s, r#"<text x="{}" y="{}">{x}</text>"#, cx(x), h - MARGIN / 3);
    }
    for y in lo.y..=hi.y {
        let _ = writeln!(s, r#"<text x="{}" y="{}">{y}</text>"#, MARGIN / 2, cy(y) + 3);
    }
    let _ = writeln!(s, "</g>");
    for r in config.robots() {
        let (fill, class) = match r.color {
            Color::A => ("white", "robot-a"),
            Color::B => ("black", "robot-b"),
        };
        let _ = writeln!(
            s,
            r#"<circle class="{class}" cx="{}" cy="{}" r="{}" fill="{fill}" stroke="black" stroke-width="2"/>"#,
            cx(r.pos.x),
            cy(r.pos.y),
            CELL / 3
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
