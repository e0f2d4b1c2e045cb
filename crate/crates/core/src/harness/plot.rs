//! Minimal SVG line charts with error bars.

use std::fmt::Write as _;

/// One plotted series: `(x, y, error)` points joined by a polyline.
#[derive(Clone, Debug)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64, f64)>,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 60.0;
const COLOURS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Chart with a logarithmic x axis when `log_x` and all x are positive.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series], log_x: bool) -> String {
    let pts = series.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y, e) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y - e);
        y1 = y1.max(y + e);
    }
    let log_x = log_x && x0 > 0.0;
    let tx = |x: f64| if log_x { x.ln() } else { x };
    let (mut a, mut b) = (tx(x0), tx(x1));
    if !(b > a) {
        a -= 0.5;
        b += 0.5;
    }
    if !(y1 > y0) {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let pad = 0.05 * (y1 - y0);
    let (y0, y1) = (y0 - pad, y1 + pad);
    let px = |x: f64| MARGIN + (tx(x) - a) / (b - a) * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut out = String::new();
    let w = &mut out;
    writeln!(w, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#).unwrap();
    writeln!(w, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(w, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, WIDTH / 2.0, escape(title)).unwrap();
    let (left, right, top, bottom) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    writeln!(w, r#"<path d="M{left},{top} L{left},{bottom} L{right},{bottom}" stroke="black" fill="none"/>"#).unwrap();
    for k in 0..=4 {
        let y = y0 + (y1 - y0) * k as f64 / 4.0;
        writeln!(w, r#"<text x="{}" y="{}" text-anchor="end">{y:.3}</text>"#, left - 6.0, py(y) + 4.0).unwrap();
    }
    let mut xs: Vec<f64> = series.iter().flat_map(|s| s.points.iter().map(|p| p.0)).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    for x in xs {
        writeln!(w, r#"<text x="{}" y="{}" text-anchor="middle">{x}</text>"#, px(x), bottom + 18.0).unwrap();
    }
    writeln!(w, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, WIDTH / 2.0, HEIGHT - 16.0, escape(x_label)).unwrap();
    writeln!(
        w,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    )
    .unwrap();
    for (k, s) in series.iter().enumerate() {
        let colour = COLOURS[k % COLOURS.len()];
        let path: Vec<String> = s.points.iter().map(|&(x, y, _)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        writeln!(w, r#"<polyline points="{}" stroke="{colour}" fill="none" stroke-width="2"/>"#, path.join(" ")).unwrap();
        for &(x, y, e) in &s.points {
            writeln!(w, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{colour}"/>"#, px(x), py(y)).unwrap();
            if e > 0.0 {
                writeln!(
                    w,
                    r#"<line x1="{0:.2}" y1="{1:.2}" x2="{0:.2}" y2="{2:.2}" stroke="{colour}"/>"#,
                    px(x),
                    py(y - e),
                    py(y + e)
                )
                .unwrap();
            }
        }
        writeln!(
            w,
            r#"<text x="{}" y="{}" fill="{colour}">{}</text>"#,
            right - 150.0,
            top + 16.0 * (k as f64 + 1.0),
            escape(&s.name)
        )
        .unwrap();
    }
    out.push_str("</svg>\n");
    out
}
