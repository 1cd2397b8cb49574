//! Static SVG step plots: shaded band rectangles with the point estimate
//! drawn on top.

use std::fmt::Write;

use qeband_core::{DFBand, IntervalBand, MonotoneStepFn};

const W: f64 = 640.0;
const H: f64 = 400.0;
const M: f64 = 48.0;

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        M + (x - self.x0) / (self.x1 - self.x0) * (W - 2.0 * M)
    }

    fn py(&self, y: f64) -> f64 {
        let y = y.clamp(self.y0, self.y1);
        H - M - (y - self.y0) / (self.y1 - self.y0) * (H - 2.0 * M)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn open(title: &str, f: &Frame, xlabel: &str, ylabel: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="13">{}</text>"#, W / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<path d="M{M} {M} V{} H{}" fill="none" stroke="black"/>"#,
        H - M,
        W - M
    );
    for k in 0..=4 {
        let t = k as f64 / 4.0;
        let xv = f.x0 + t * (f.x1 - f.x0);
        let yv = f.y0 + t * (f.y1 - f.y0);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#, f.px(xv), H - M + 16.0, tick(xv));
        let _ = writeln!(s, r#"<text x="{}" y="{:.1}" text-anchor="end">{}</text>"#, M - 6.0, f.py(yv) + 4.0, tick(yv));
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 10.0, escape(xlabel));
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(ylabel)
    );
    s
}

fn tick(v: f64) -> String {
    let s = format!("{v:.2}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Right ends of the steps: the next point, and one average spacing past
/// the last point.
fn step_ends(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let pad = if n > 1 { (x[n - 1] - x[0]) / (n - 1) as f64 } else { 1.0 };
    (0..n).map(|i| if i + 1 < n { x[i + 1] } else { x[i] + pad }).collect()
}

/// DF-band of one group with its estimate.
pub fn df_band_svg(title: &str, estimate: &MonotoneStepFn, band: &DFBand) -> String {
    let x = band.grid().points();
    let ends = step_ends(x);
    let f = Frame {
        x0: x[0],
        x1: ends[ends.len() - 1],
        y0: 0.0,
        y1: 1.0,
    };
    let mut s = open(title, &f, "y", "F(y)");
    for i in 0..x.len() {
        let (l, u) = (band.lower().values()[i], band.upper().values()[i]);
        let _ = writeln!(
            s,
            r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#9ecae1" fill-opacity="0.6"/>"##,
            f.px(x[i]),
            f.py(u),
            f.px(ends[i]) - f.px(x[i]),
            f.py(l) - f.py(u)
        );
    }
    let mut d = String::new();
    for i in 0..x.len() {
        let v = f.py(estimate.values()[i]);
        if i == 0 {
            let _ = write!(d, "M{:.2} {:.2} ", f.px(x[0]), v);
        } else {
            let _ = write!(d, "V{v:.2} ");
        }
        let _ = write!(d, "H{:.2} ", f.px(ends[i]));
    }
    let _ = writeln!(s, r##"<path d="{}" fill="none" stroke="#08519c" stroke-width="1.5"/>"##, d.trim_end());
    s.push_str("</svg>\n");
    s
}

/// Quantile or quantile-effect band over the probability grid. Infinite
/// interval ends are drawn at the plot edge.
pub fn interval_band_svg(title: &str, ylabel: &str, band: &IntervalBand) -> String {
    let a = band.prob_grid().indices();
    let finite = band.lo().iter().chain(band.hi()).copied().filter(|v| v.is_finite());
    let (mut y0, mut y1) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !y0.is_finite() {
        (y0, y1) = (0.0, 1.0);
    }
    y0 = y0.min(0.0);
    if y1 - y0 < 1e-12 {
        y1 = y0 + 1.0;
    }
    let pad = 0.05 * (y1 - y0);
    let f = Frame {
        x0: 0.0,
        x1: 1.0,
        y0: y0 - pad,
        y1: y1 + pad,
    };
    let mut s = open(title, &f, "a", ylabel);
    let ends = step_ends(a);
    for i in 0..a.len() {
        let (top, bottom) = (f.py(band.hi()[i]), f.py(band.lo()[i]));
        let _ = writeln!(
            s,
            r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#fdae6b" fill-opacity="0.6" stroke="#e6550d" stroke-width="0.3"/>"##,
            f.px(a[i]),
            top,
            (f.px(ends[i].min(1.0)) - f.px(a[i])).max(0.5),
            (bottom - top).max(0.5)
        );
    }
    if f.y0 < 0.0 && f.y1 > 0.0 {
        let _ = writeln!(
            s,
            r#"<line x1="{M}" x2="{}" y1="{:.2}" y2="{:.2}" stroke="gray" stroke-dasharray="4 3"/>"#,
            W - M,
            f.py(0.0),
            f.py(0.0)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// File-name-safe form of a label.
pub fn slug(label: &str) -> String {
    let s: String = label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    if s.is_empty() {
        "_".into()
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use qeband_core::{Grid, ProbGrid};

    #[test]
    fn renders_well_formed_documents() {
        let g = Grid::integers(0, 2).unwrap();
        let f = MonotoneStepFn::new(g.clone(), vec![0.2, 0.6, 1.0]).unwrap();
        let band = DFBand::new(
            MonotoneStepFn::new(g.clone(), vec![0.1, 0.5, 1.0]).unwrap(),
            MonotoneStepFn::new(g, vec![0.3, 0.7, 1.0]).unwrap(),
            0.9,
        )
        .unwrap();
        let s = df_band_svg("a<b", &f, &band);
        assert!(s.starts_with("<svg") && s.ends_with("</svg>\n"));
        assert_eq!(s.matches("<rect").count(), 4);
        assert!(s.contains("a&lt;b"));

        let q = IntervalBand::new(ProbGrid::new(vec![0.25, 0.75]).unwrap(), vec![-1.0, 0.0], vec![1.0, f64::INFINITY], None)
            .unwrap();
        let s = interval_band_svg("qe", "d", &q);
        assert!(!s.contains("NaN") && !s.contains("inf"));
        assert_eq!(slug("W|B"), "W_B");
    }
}
