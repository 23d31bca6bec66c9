//! SVG drawing of a finite bridge: the graph of y ↦ b(y) with its holes shaded
//! as horizontal bands on the value axis.

use std::fmt::Write;

use super::FiniteBridge;

const SIZE: f64 = 400.0;
const MARGIN: f64 = 40.0;

fn px(y: f64) -> f64 {
    MARGIN + y * SIZE
}

fn py(v: f64) -> f64 {
    MARGIN + (1.0 - v) * SIZE
}

/// Deterministic SVG document for `b`.
pub fn render_svg(b: &FiniteBridge) -> String {
    let total = SIZE + 2.0 * MARGIN;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{total:.0}" height="{total:.0}" viewBox="0 0 {total:.0} {total:.0}">"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{total:.0}" height="{total:.0}" fill="white"/>"#
    );
    for h in b.holes() {
        let _ = writeln!(
            s,
            r##"<rect class="hole" x="{:.6}" y="{:.6}" width="{:.6}" height="{:.6}" fill="#c8d8f0" fill-opacity="0.6"/>"##,
            px(0.0),
            py(h.hi),
            SIZE,
            h.size * SIZE
        );
    }
    let _ = writeln!(
        s,
        r#"<rect class="frame" x="{:.6}" y="{:.6}" width="{SIZE:.6}" height="{SIZE:.6}" fill="none" stroke="black" stroke-width="1"/>"#,
        px(0.0),
        py(1.0)
    );
    // continuous pieces between consecutive jump locations
    let mut start = 0.0;
    let mut knots: Vec<f64> = b.jumps().iter().map(|j| j.location).collect();
    knots.push(1.0);
    for &end in &knots {
        if end > start {
            let _ = writeln!(
                s,
                r#"<line class="graph" x1="{:.6}" y1="{:.6}" x2="{:.6}" y2="{:.6}" stroke="black" stroke-width="2"/>"#,
                px(start),
                py(b.evaluate(start)),
                px(end),
                py(b.evaluate_left(end))
            );
        }
        start = end;
    }
    for j in b.jumps() {
        let _ = writeln!(
            s,
            r#"<line class="jump" x1="{x:.6}" y1="{:.6}" x2="{x:.6}" y2="{:.6}" stroke="black" stroke-width="1" stroke-dasharray="4 3"/>"#,
            py(b.evaluate_left(j.location)),
            py(b.evaluate(j.location)),
            x = px(j.location)
        );
        let _ = writeln!(
            s,
            r#"<circle class="atom" cx="{:.6}" cy="{:.6}" r="3" fill="black"/>"#,
            px(j.location),
            py(b.evaluate(j.location))
        );
    }
    s.push_str("</svg>\n");
    s
}
