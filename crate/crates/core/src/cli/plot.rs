//! Static SVG step plot of a reconstruction with its one-sigma band.

use std::fmt::Write as _;

use crate::wavelet::Reconstruction;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 48.0;

/// Render `recon` over `[0, duration_us)`. Optional markers are drawn as
/// vertical ticks at the given bins.
pub fn render_svg(recon: &Reconstruction, duration_us: f64, title: &str, markers: &[usize]) -> String {
    let n = recon.len();
    let lo = recon
        .points()
        .iter()
        .zip(recon.sigmas())
        .map(|(v, s)| v - s)
        .fold(0.0f64, f64::min);
    let hi = recon
        .points()
        .iter()
        .zip(recon.sigmas())
        .map(|(v, s)| v + s)
        .fold(0.0f64, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let (lo, hi) = (lo - 0.05 * span, hi + 0.05 * span);

    let x = |k: f64| MARGIN + (WIDTH - 2.0 * MARGIN) * k / n as f64;
    let y = |v: f64| HEIGHT - MARGIN - (HEIGHT - 2.0 * MARGIN) * (v - lo) / (hi - lo);

    let mut band_top = String::new();
    let mut band_bottom = Vec::new();
    let mut line = String::new();
    for (k, (&v, &s)) in recon.points().iter().zip(recon.sigmas()).enumerate() {
        let (x0, x1) = (x(k as f64), x(k as f64 + 1.0));
        let _ = write!(band_top, "{x0:.2},{:.2} {x1:.2},{:.2} ", y(v + s), y(v + s));
        band_bottom.push(format!("{x1:.2},{:.2} {x0:.2},{:.2}", y(v - s), y(v - s)));
        let cmd = if k == 0 { 'M' } else { 'L' };
        let _ = write!(line, "{cmd}{x0:.2},{:.2} L{x1:.2},{:.2} ", y(v), y(v));
    }
    band_bottom.reverse();

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<polygon points="{}{}" fill="steelblue" fill-opacity="0.25" stroke="none"/>"#,
        band_top,
        band_bottom.join(" ")
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{MARGIN}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="gray" stroke-dasharray="4 3"/>"#,
        y(0.0),
        WIDTH - MARGIN,
        y(0.0)
    );
    let _ = writeln!(
        svg,
        r#"<path d="{}" fill="none" stroke="steelblue" stroke-width="1.5"/>"#,
        line.trim_end()
    );
    for &bin in markers {
        let xm = x(bin as f64 + 0.5);
        let _ = writeln!(
            svg,
            r#"<line x1="{xm:.2}" y1="{MARGIN}" x2="{xm:.2}" y2="{:.2}" stroke="firebrick" stroke-width="1"/>"#,
            HEIGHT - MARGIN
        );
    }
    let _ = writeln!(
        svg,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    let _ = writeln!(svg, r#"<text x="{MARGIN}" y="{:.2}">{}</text>"#, MARGIN - 16.0, escape(title));
    let _ = writeln!(
        svg,
        r#"<text x="{MARGIN}" y="{:.2}">0</text><text x="{:.2}" y="{:.2}" text-anchor="end">{duration_us} us</text>"#,
        HEIGHT - MARGIN + 16.0,
        WIDTH - MARGIN,
        HEIGHT - MARGIN + 16.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{hi:.3e}</text><text x="{:.2}" y="{:.2}" text-anchor="end">{lo:.3e}</text>"#,
        MARGIN - 4.0,
        MARGIN + 4.0,
        MARGIN - 4.0,
        HEIGHT - MARGIN
    );
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
