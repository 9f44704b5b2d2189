//! Minimal deterministic SVG charts (bars and lines); no timestamps or
//! random ids, so identical inputs give byte-identical files.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 110.0;

fn header(title: &str) -> String {
    let mut s = String::new();
    let _ = write!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\">\n\
         <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"24\" font-size=\"16\" text-anchor=\"middle\">{}</text>\n",
        WIDTH / 2.0,
        escape(title)
    );
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn y_axis(s: &mut String, max_value: f64) {
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    for i in 0..=5 {
        let v = max_value * i as f64 / 5.0;
        let y = MARGIN_TOP + plot_h * (1.0 - i as f64 / 5.0);
        let _ = write!(
            s,
            "<line x1=\"{MARGIN_LEFT}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" \
             stroke=\"#ddd\"/>\n\
             <text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"end\">{v:.1}</text>\n",
            WIDTH - MARGIN_RIGHT,
            MARGIN_LEFT - 6.0,
            y + 4.0,
        );
    }
}

/// Vertical bar chart with labels under each bar.
pub fn bar_chart(title: &str, bars: &[(String, f64)]) -> String {
    let mut s = header(title);
    let max_value = bars.iter().map(|(_, v)| *v).fold(0.0_f64, f64::max).max(1e-9) * 1.05;
    y_axis(&mut s, max_value);
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let slot = plot_w / bars.len().max(1) as f64;
    let bar_w = slot * 0.7;
    for (i, (label, value)) in bars.iter().enumerate() {
        let x = MARGIN_LEFT + slot * i as f64 + (slot - bar_w) / 2.0;
        let h = plot_h * (value / max_value).clamp(0.0, 1.0);
        let y = MARGIN_TOP + plot_h - h;
        let cx = x + bar_w / 2.0;
        let _ = write!(
            s,
            "<rect x=\"{x:.1}\" y=\"{y:.1}\" width=\"{bar_w:.1}\" height=\"{h:.1}\" \
             fill=\"#4878a8\"/>\n\
             <text x=\"{cx:.1}\" y=\"{:.1}\" font-size=\"10\" text-anchor=\"middle\">{:.2}</text>\n\
             <text x=\"{cx:.1}\" y=\"{:.1}\" font-size=\"10\" text-anchor=\"end\" \
             transform=\"rotate(-45 {cx:.1} {:.1})\">{}</text>\n",
            y - 4.0,
            value,
            MARGIN_TOP + plot_h + 14.0,
            MARGIN_TOP + plot_h + 14.0,
            escape(label),
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Line chart over (x, y) points with an optional horizontal reference
/// line (e.g. the clean-mAP baseline).
pub fn line_chart(
    title: &str,
    points: &[(f64, f64)],
    x_label: &str,
    reference: Option<(f64, &str)>,
) -> String {
    let mut s = header(title);
    let max_value = points
        .iter()
        .map(|(_, y)| *y)
        .chain(reference.map(|(v, _)| v))
        .fold(0.0_f64, f64::max)
        .max(1e-9)
        * 1.05;
    y_axis(&mut s, max_value);
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let (x_min, x_max) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (x, _)| (lo.min(*x), hi.max(*x)));
    let span = (x_max - x_min).max(1e-9);
    let to_xy = |x: f64, y: f64| -> (f64, f64) {
        (
            MARGIN_LEFT + plot_w * (x - x_min) / span,
            MARGIN_TOP + plot_h * (1.0 - (y / max_value).clamp(0.0, 1.0)),
        )
    };

    if let Some((value, label)) = reference {
        let (_, y) = to_xy(x_min, value);
        let _ = write!(
            s,
            "<line x1=\"{MARGIN_LEFT}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" \
             stroke=\"#b04848\" stroke-dasharray=\"6 3\"/>\n\
             <text x=\"{:.1}\" y=\"{:.1}\" font-size=\"10\" fill=\"#b04848\" \
             text-anchor=\"end\">{}</text>\n",
            WIDTH - MARGIN_RIGHT,
            WIDTH - MARGIN_RIGHT - 4.0,
            y - 5.0,
            escape(label),
        );
    }

    let mut path = String::new();
    for (i, (x, y)) in points.iter().enumerate() {
        let (px, py) = to_xy(*x, *y);
        let _ = write!(path, "{}{px:.1},{py:.1} ", if i == 0 { "M" } else { "L" });
    }
    let _ = write!(s, "<path d=\"{}\" fill=\"none\" stroke=\"#4878a8\" stroke-width=\"2\"/>\n", path.trim());
    for (x, y) in points {
        let (px, py) = to_xy(*x, *y);
        let _ = write!(
            s,
            "<circle cx=\"{px:.1}\" cy=\"{py:.1}\" r=\"3\" fill=\"#4878a8\"/>\n\
             <text x=\"{px:.1}\" y=\"{:.1}\" font-size=\"10\" text-anchor=\"middle\">{x:.1}</text>\n",
            MARGIN_TOP + plot_h + 16.0,
        );
    }
    let _ = write!(
        s,
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n",
        MARGIN_LEFT + plot_w / 2.0,
        MARGIN_TOP + plot_h + 40.0,
        escape(x_label),
    );
    s.push_str("</svg>\n");
    s
}
