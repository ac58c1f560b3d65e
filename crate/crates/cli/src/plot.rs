//! Static SVG of the group-slope posterior density with the HPDI shaded.

use std::fmt::Write as _;

use hbnum::inference::{Hpdi, Kde};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;
pub const CURVE_POINTS: usize = 512;

pub struct DensityCurve {
    pub x: Vec<f64>,
    pub density: Vec<f64>,
}

impl DensityCurve {
    pub fn from_kde(kde: &Kde) -> Self {
        let x = kde.grid(CURVE_POINTS);
        let density = x.iter().map(|&v| kde.density(v)).collect();
        Self { x, density }
    }

    pub fn to_csv(&self, hpdi: &Hpdi) -> String {
        let mut out = String::from("x,density,in_hpdi\n");
        for (x, d) in self.x.iter().zip(&self.density) {
            let _ = writeln!(out, "{},{},{}", x, d, hpdi.contains(*x));
        }
        out
    }
}

fn nice_step(range: f64, target_ticks: f64) -> f64 {
    let raw = range / target_ticks;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let nice = if norm < 1.5 {
        1.0
    } else if norm < 3.0 {
        2.0
    } else if norm < 7.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn ticks(lo: f64, hi: f64, target: f64) -> Vec<f64> {
    let step = nice_step(hi - lo, target);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * step {
        out.push(if t.abs() < 1e-12 * step { 0.0 } else { t });
        t += step;
    }
    out
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

/// Renders the curve, shading the part inside `hpdi`, with a dashed line
/// at `mode` and optional rug marks (e.g. per-subject classical slopes).
pub fn render_svg(
    curve: &DensityCurve,
    hpdi: &Hpdi,
    mode: f64,
    rug: &[f64],
    title: &str,
) -> String {
    let (x_lo, x_hi) = (curve.x[0], curve.x[curve.x.len() - 1]);
    let (x_lo, x_hi) = rug
        .iter()
        .fold((x_lo, x_hi), |(lo, hi), &r| (lo.min(r), hi.max(r)));
    let y_hi = curve.density.iter().cloned().fold(0.0, f64::max) * 1.08;
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x_lo) / (x_hi - x_lo) * pw;
    let sy = |y: f64| TOP + ph - y / y_hi * ph;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        title
    );

    // shaded HPDI region
    let inside: Vec<(f64, f64)> = curve
        .x
        .iter()
        .zip(&curve.density)
        .filter(|(x, _)| hpdi.contains(**x))
        .map(|(&x, &d)| (x, d))
        .collect();
    if let (Some(first), Some(last)) = (inside.first(), inside.last()) {
        let mut pts = format!("{:.2},{:.2}", sx(first.0), sy(0.0));
        for &(x, d) in &inside {
            let _ = write!(pts, " {:.2},{:.2}", sx(x), sy(d));
        }
        let _ = write!(pts, " {:.2},{:.2}", sx(last.0), sy(0.0));
        let _ = writeln!(
            svg,
            r##"<polygon points="{pts}" fill="#9ecae1" stroke="none"/>"##
        );
    }

    let mut path = String::new();
    for (k, (&x, &d)) in curve.x.iter().zip(&curve.density).enumerate() {
        let _ = write!(
            path,
            "{}{:.2},{:.2}",
            if k == 0 { "M" } else { " L" },
            sx(x),
            sy(d)
        );
    }
    let _ = writeln!(
        svg,
        r##"<path d="{path}" fill="none" stroke="#08519c" stroke-width="2"/>"##
    );
    let _ = writeln!(
        svg,
        r##"<line x1="{0:.2}" y1="{1:.2}" x2="{0:.2}" y2="{2:.2}" stroke="#333" stroke-dasharray="4 3"/>"##,
        sx(mode),
        sy(0.0),
        TOP
    );
    for &r in rug {
        let _ = writeln!(
            svg,
            r##"<line x1="{0:.2}" y1="{1:.2}" x2="{0:.2}" y2="{2:.2}" stroke="#d95f02"/>"##,
            sx(r),
            sy(0.0),
            sy(0.0) - 8.0
        );
    }

    // axes
    let _ = writeln!(
        svg,
        r#"<line x1="{LEFT}" y1="{0:.2}" x2="{1:.2}" y2="{0:.2}" stroke="black"/>"#,
        sy(0.0),
        LEFT + pw
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{:.2}" stroke="black"/>"#,
        sy(0.0)
    );
    for t in ticks(x_lo, x_hi, 8.0) {
        let _ = writeln!(
            svg,
            r#"<line x1="{0:.2}" y1="{1:.2}" x2="{0:.2}" y2="{2:.2}" stroke="black"/><text x="{0:.2}" y="{3:.2}" text-anchor="middle">{4}</text>"#,
            sx(t),
            sy(0.0),
            sy(0.0) + 5.0,
            sy(0.0) + 19.0,
            fmt_tick(t)
        );
    }
    for t in ticks(0.0, y_hi, 5.0) {
        let _ = writeln!(
            svg,
            r#"<line x1="{LEFT}" y1="{0:.2}" x2="{1:.2}" y2="{0:.2}" stroke="black"/><text x="{2:.2}" y="{3:.2}" text-anchor="end">{4}</text>"#,
            sy(t),
            LEFT - 5.0,
            LEFT - 8.0,
            sy(t) + 4.0,
            fmt_tick(t)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">group-level slope b</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        svg,
        r#"<text transform="translate(16 {:.1}) rotate(-90)" text-anchor="middle">density</text>"#,
        TOP + ph / 2.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{:.0}% HPDI [{}, {}], mode {}</text>"#,
        WIDTH - RIGHT,
        TOP + 14.0,
        hpdi.mass * 100.0,
        fmt_tick(hpdi.lower),
        fmt_tick(hpdi.upper),
        fmt_tick(mode)
    );
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tick_positions_are_round() {
        assert_eq!(
            ticks(-17.3, -3.1, 8.0),
            vec![-16.0, -14.0, -12.0, -10.0, -8.0, -6.0, -4.0]
        );
        assert_eq!(fmt_tick(0.05), "0.05");
        assert_eq!(fmt_tick(-10.0), "-10");
    }

    #[test]
    fn svg_has_curve_and_shading() {
        let samples: Vec<f64> = (0..200)
            .map(|i| -10.0 + (i as f64 * 0.37).sin() * 3.0)
            .collect();
        let kde = Kde::new(&samples).unwrap();
        let curve = DensityCurve::from_kde(&kde);
        let h = Hpdi {
            lower: -12.0,
            upper: -8.0,
            mass: 0.95,
        };
        let svg = render_svg(&curve, &h, kde.mode(), &[-9.0], "posterior");
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("<polygon") && svg.contains("<path"));
        let csv = curve.to_csv(&h);
        assert_eq!(csv.lines().count(), CURVE_POINTS + 1);
    }
}
