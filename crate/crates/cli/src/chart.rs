//! Minimal SVG charts: latency vs throughput, one polyline per protocol,
//! log-scale latency axis, repetition spread as min/max whiskers. Diagnostic
//! output, so everything is drawn directly without a plotting dependency.

use std::fmt::Write;

pub struct ChartPoint {
    /// Mean delivered throughput across repetitions.
    pub x: f64,
    /// Mean latency across repetitions.
    pub y: f64,
    pub y_lo: f64,
    pub y_hi: f64,
}

pub struct Series {
    pub label: String,
    pub points: Vec<ChartPoint>,
}

const WIDTH: f64 = 820.0;
const HEIGHT: f64 = 540.0;
const MARGIN_L: f64 = 76.0;
const MARGIN_R: f64 = 24.0;
const MARGIN_T: f64 = 46.0;
const MARGIN_B: f64 = 62.0;
const PALETTE: [&str; 6] = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let s = format!("{v:.4}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

pub fn latency_throughput_svg(title: &str, series: &[Series]) -> String {
    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;

    let xs: Vec<f64> = series.iter().flat_map(|s| s.points.iter().map(|p| p.x)).collect();
    let ys: Vec<f64> = series
        .iter()
        .flat_map(|s| s.points.iter().flat_map(|p| [p.y_lo, p.y_hi]))
        .collect();

    let mut svg = String::new();
    let _ = write!(
        svg,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">
<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>
<text x="{:.1}" y="26" text-anchor="middle" font-size="16">{}</text>
"##,
        WIDTH / 2.0,
        esc(title)
    );

    if xs.is_empty() {
        let _ = write!(
            svg,
            r##"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="14" fill="#777">no delivered packets</text>
</svg>
"##,
            WIDTH / 2.0,
            HEIGHT / 2.0
        );
        return svg;
    }

    let x_max = xs.iter().copied().fold(0.0f64, f64::max).max(1e-9) * 1.05;
    // Latencies are at least one cycle; pad the log range to whole decades.
    let y_min = ys.iter().copied().fold(f64::INFINITY, f64::min).max(0.1);
    let y_max = ys.iter().copied().fold(0.0f64, f64::max).max(y_min * 1.01);
    let dec_lo = y_min.log10().floor() as i32;
    let mut dec_hi = y_max.log10().ceil() as i32;
    if dec_hi == dec_lo {
        dec_hi += 1;
    }

    let sx = |x: f64| MARGIN_L + x / x_max * plot_w;
    let sy = |y: f64| {
        let t = (y.max(0.1).log10() - dec_lo as f64) / (dec_hi - dec_lo) as f64;
        MARGIN_T + plot_h - t * plot_h
    };

    // Gridlines and ticks: decades on y, six even divisions on x.
    for dec in dec_lo..=dec_hi {
        let y = sy(10f64.powi(dec));
        let _ = write!(
            svg,
            r##"<line x1="{MARGIN_L}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd" stroke-dasharray="3,3"/>
<text x="{:.1}" y="{:.1}" text-anchor="end" font-size="12">{}</text>
"##,
            MARGIN_L + plot_w,
            MARGIN_L - 8.0,
            y + 4.0,
            fmt_tick(10f64.powi(dec))
        );
    }
    for i in 0..=6 {
        let xv = x_max * i as f64 / 6.0;
        let x = sx(xv);
        let _ = write!(
            svg,
            r##"<line x1="{x:.1}" y1="{MARGIN_T}" x2="{x:.1}" y2="{:.1}" stroke="#eee"/>
<text x="{x:.1}" y="{:.1}" text-anchor="middle" font-size="12">{}</text>
"##,
            MARGIN_T + plot_h,
            MARGIN_T + plot_h + 18.0,
            fmt_tick(xv)
        );
    }
    let _ = write!(
        svg,
        r##"<line x1="{MARGIN_L}" y1="{MARGIN_T}" x2="{MARGIN_L}" y2="{0:.1}" stroke="black"/>
<line x1="{MARGIN_L}" y1="{0:.1}" x2="{1:.1}" y2="{0:.1}" stroke="black"/>
<text x="{2:.1}" y="{3:.1}" text-anchor="middle" font-size="13">throughput (packets/cycle)</text>
<text x="20" y="{4:.1}" text-anchor="middle" font-size="13" transform="rotate(-90 20 {4:.1})">mean latency (cycles)</text>
"##,
        MARGIN_T + plot_h,
        MARGIN_L + plot_w,
        MARGIN_L + plot_w / 2.0,
        HEIGHT - 16.0,
        MARGIN_T + plot_h / 2.0
    );

    for (si, s) in series.iter().enumerate() {
        let color = PALETTE[si % PALETTE.len()];
        if !s.points.is_empty() {
            let path: Vec<String> = s
                .points
                .iter()
                .map(|p| format!("{:.1},{:.1}", sx(p.x), sy(p.y)))
                .collect();
            let _ = write!(
                svg,
                r##"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.8"/>
"##,
                path.join(" ")
            );
        }
        for p in &s.points {
            let (x, ylo, yhi) = (sx(p.x), sy(p.y_lo), sy(p.y_hi));
            if p.y_hi > p.y_lo {
                let _ = write!(
                    svg,
                    r##"<line x1="{x:.1}" y1="{ylo:.1}" x2="{x:.1}" y2="{yhi:.1}" stroke="{color}"/>
<line x1="{0:.1}" y1="{ylo:.1}" x2="{1:.1}" y2="{ylo:.1}" stroke="{color}"/>
<line x1="{0:.1}" y1="{yhi:.1}" x2="{1:.1}" y2="{yhi:.1}" stroke="{color}"/>
"##,
                    x - 4.0,
                    x + 4.0
                );
            }
            let _ = write!(
                svg,
                r##"<circle cx="{x:.1}" cy="{:.1}" r="3.2" fill="{color}"/>
"##,
                sy(p.y)
            );
        }
        let ly = MARGIN_T + 14.0 + si as f64 * 18.0;
        let _ = write!(
            svg,
            r##"<line x1="{0:.1}" y1="{ly:.1}" x2="{1:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/>
<text x="{2:.1}" y="{3:.1}" font-size="12">{4}</text>
"##,
            MARGIN_L + plot_w - 150.0,
            MARGIN_L + plot_w - 126.0,
            MARGIN_L + plot_w - 120.0,
            ly + 4.0,
            esc(&s.label)
        );
    }

    svg.push_str("</svg>\n");
    svg
}
