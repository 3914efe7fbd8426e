//! Standalone SVG figures. Output depends only on the data: coordinates are
//! written with fixed precision and nothing is timestamped.

use std::fmt::{self, Write};

use logistic_rds::analytic::{LAMBDA_C2, LAMBDA_C3, LAMBDA_C4};
use logistic_rds::experiments::BifurcationDataset;
use logistic_rds::Histogram;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const TICKS: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct Marker {
    pub x: f64,
    pub label: String,
    pub color: &'static str,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Style {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub markers: Vec<Marker>,
}

pub enum Plot<'a> {
    Histogram(&'a Histogram),
    Bifurcation(&'a BifurcationDataset),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmptyData(pub &'static str);

impl fmt::Display for EmptyData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "nothing to plot: {}", self.0)
    }
}

impl std::error::Error for EmptyData {}

/// Vertical lines at the first three period-doubling parameters.
pub fn bifurcation_markers() -> Vec<Marker> {
    [
        (LAMBDA_C2, "λ_c2"),
        (LAMBDA_C4, "λ_c4"),
        (LAMBDA_C3, "λ_c3"),
    ]
    .into_iter()
    .map(|(x, label)| Marker {
        x,
        label: label.to_string(),
        color: "#2a9d8f",
    })
    .collect()
}

pub fn render_svg(plot: Plot<'_>, style: &Style) -> Result<String, EmptyData> {
    match plot {
        Plot::Histogram(h) => histogram_svg(h, style),
        Plot::Bifurcation(d) => bifurcation_svg(d, style),
    }
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn tick_decimals(span: f64) -> usize {
    let step = span / TICKS as f64;
    (-(step.log10().floor()) as i64 + 1).clamp(0, 6) as usize
}

fn open(out: &mut String, frame: &Frame, style: &Style) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        out,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(&style.title)
    );
    let (x0, y0) = (frame.px(frame.x.0), frame.py(frame.y.0));
    let (x1, y1) = (frame.px(frame.x.1), frame.py(frame.y.1));
    let _ = writeln!(
        out,
        r#"<path d="M{x0:.2} {y1:.2}V{y0:.2}H{x1:.2}" fill="none" stroke="black"/>"#
    );
    let (dx, dy) = (
        tick_decimals(frame.x.1 - frame.x.0),
        tick_decimals(frame.y.1 - frame.y.0),
    );
    for i in 0..=TICKS {
        let t = i as f64 / TICKS as f64;
        let xv = frame.x.0 + t * (frame.x.1 - frame.x.0);
        let px = frame.px(xv);
        let _ = writeln!(
            out,
            r#"<path d="M{px:.2} {y0:.2}v5" stroke="black"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{xv:.dx$}</text>"#,
            y0 + 18.0
        );
        let yv = frame.y.0 + t * (frame.y.1 - frame.y.0);
        let py = frame.py(yv);
        let _ = writeln!(
            out,
            r#"<path d="M{x0:.2} {py:.2}h-5" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{yv:.dy$}</text>"#,
            x0 - 8.0,
            py + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 10.0,
        escape(&style.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(&style.y_label)
    );
}

fn close(out: &mut String, frame: &Frame, style: &Style) {
    for (i, m) in style.markers.iter().enumerate() {
        if !(frame.x.0..=frame.x.1).contains(&m.x) {
            continue;
        }
        let px = frame.px(m.x);
        let _ = writeln!(
            out,
            r#"<path d="M{px:.2} {:.2}V{:.2}" stroke="{}" stroke-dasharray="4 3"/>"#,
            frame.py(frame.y.0),
            frame.py(frame.y.1),
            m.color
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" fill="{}">{}</text>"#,
            px + 3.0,
            TOP + 12.0 + 14.0 * i as f64,
            m.color,
            escape(&m.label)
        );
    }
    out.push_str("</svg>\n");
}

/// Step plot of the bin densities, zoomed to the occupied bins and markers.
pub fn histogram_svg(h: &Histogram, style: &Style) -> Result<String, EmptyData> {
    if h.total() == 0 {
        return Err(EmptyData("histogram has no samples"));
    }
    let occupied: Vec<usize> = (0..h.bins()).filter(|&i| h.counts()[i] > 0).collect();
    let (first, last) = (occupied[0], *occupied.last().unwrap());
    let pad = 2;
    let lo_bin = first.saturating_sub(pad);
    let hi_bin = (last + pad).min(h.bins() - 1);
    let mut x = (h.bin(lo_bin).0, h.bin(hi_bin).1);
    for m in &style.markers {
        x = (x.0.min(m.x), x.1.max(m.x));
    }
    let top = (lo_bin..=hi_bin).map(|i| h.density(i)).fold(0.0, f64::max);
    let frame = Frame {
        x,
        y: (0.0, top * 1.05),
    };
    let mut out = String::new();
    open(&mut out, &frame, style);
    let mut d = format!("M{:.2} {:.2}", frame.px(h.bin(lo_bin).0), frame.py(0.0));
    for i in lo_bin..=hi_bin {
        let (_, b) = h.bin(i);
        let y = frame.py(h.density(i));
        let _ = write!(d, "V{y:.2}H{:.2}", frame.px(b));
        if i == hi_bin {
            let _ = write!(d, "V{:.2}", frame.py(0.0));
        }
    }
    let _ = writeln!(out, r##"<path d="{d}" fill="none" stroke="#264653"/>"##);
    close(&mut out, &frame, style);
    Ok(out)
}

/// One dot per terminal state.
pub fn bifurcation_svg(data: &BifurcationDataset, style: &Style) -> Result<String, EmptyData> {
    if data.rows.iter().all(|r| r.terminal_states.is_empty()) {
        return Err(EmptyData("bifurcation dataset has no terminal states"));
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for r in &data.rows {
        lo = lo.min(r.parameter);
        hi = hi.max(r.parameter);
    }
    if hi - lo < 1e-9 {
        lo -= 0.5;
        hi += 0.5;
    }
    let frame = Frame {
        x: (lo, hi),
        y: (0.0, 1.0),
    };
    let mut out = String::new();
    open(&mut out, &frame, style);
    let mut d = String::new();
    for r in &data.rows {
        let px = frame.px(r.parameter);
        for &x in &r.terminal_states {
            let _ = write!(d, "M{px:.2} {:.2}h0", frame.py(x));
        }
    }
    let _ = writeln!(
        out,
        r#"<path d="{d}" stroke="black" stroke-width="0.8" stroke-linecap="square"/>"#
    );
    close(&mut out, &frame, style);
    Ok(out)
}
