//! Minimal SVG emission for phase diagrams: a colored cell grid on log-log
//! axes with decade ticks and a regime legend. The CSV is the source of
//! truth; this is presentation only.

use crate::analysis::PhasePoint;
use crate::params::Regime;

/// Fixed 16-color palette (first entries assigned to regimes in label order).
const PALETTE: [&str; 16] = [
    "#4477aa", "#ee6677", "#228833", "#ccbb44", "#66ccee", "#aa3377", "#bbbbbb", "#222255",
    "#225555", "#225522", "#666633", "#663333", "#555555", "#e07020", "#20a0a0", "#101010",
];

fn regime_color(r: Regime) -> &'static str {
    let idx = match r {
        Regime::Branching => 0,
        Regime::TruncatedBranching => 1,
        Regime::TwoScaleBranching => 2,
        Regime::Laminate => 3,
        Regime::Uniform => 4,
        Regime::SingleLaminateFloor => 5,
        Regime::Constant => 6,
    };
    PALETTE[idx]
}

pub fn phase_diagram_svg(points: &[PhasePoint], nx: usize, ny: usize) -> String {
    let (w, h) = (820.0, 640.0);
    let (ml, mr, mt, mb) = (70.0, 170.0, 20.0, 50.0);
    let (pw, ph) = (w - ml - mr, h - mt - mb);
    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n"
    ));
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    if points.is_empty() {
        out.push_str("</svg>\n");
        return out;
    }
    let lmu: Vec<f64> = points.iter().map(|p| p.mu.ln()).collect();
    let leh: Vec<f64> = points.iter().map(|p| p.eps_hat.ln()).collect();
    let (mu0, mu1) = (
        lmu.iter().cloned().fold(f64::INFINITY, f64::min),
        lmu.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    );
    let (eh0, eh1) = (
        leh.iter().cloned().fold(f64::INFINITY, f64::min),
        leh.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    );
    let spanx = (mu1 - mu0).max(1e-12);
    let spany = (eh1 - eh0).max(1e-12);
    let cw = pw / nx as f64;
    let ch = ph / ny as f64;
    for p in points {
        let fx = (p.mu.ln() - mu0) / spanx;
        let fy = (p.eps_hat.ln() - eh0) / spany;
        let x = ml + fx * (pw - cw);
        let y = mt + (1.0 - fy) * (ph - ch);
        out.push_str(&format!(
            "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"/>\n",
            cw + 0.5,
            ch + 0.5,
            regime_color(p.regime)
        ));
    }
    // Axes and decade labels.
    out.push_str(&format!(
        "<rect x=\"{ml}\" y=\"{mt}\" width=\"{pw}\" height=\"{ph}\" fill=\"none\" stroke=\"black\"/>\n"
    ));
    let ln10 = std::f64::consts::LN_10;
    let mut d = (mu0 / ln10).ceil() as i64;
    while (d as f64) * ln10 <= mu1 + 1e-9 {
        let fx = ((d as f64) * ln10 - mu0) / spanx;
        let x = ml + fx * (pw - cw) + cw / 2.0;
        out.push_str(&format!(
            "<text x=\"{x:.1}\" y=\"{:.1}\" font-size=\"12\" text-anchor=\"middle\">1e{d}</text>\n",
            mt + ph + 18.0
        ));
        d += 1;
    }
    let mut d = (eh0 / ln10).ceil() as i64;
    while (d as f64) * ln10 <= eh1 + 1e-9 {
        let fy = ((d as f64) * ln10 - eh0) / spany;
        let y = mt + (1.0 - fy) * (ph - ch) + ch / 2.0;
        out.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{y:.1}\" font-size=\"12\" text-anchor=\"end\">1e{d}</text>\n",
            ml - 6.0
        ));
        d += 1;
    }
    out.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"13\" text-anchor=\"middle\">mu</text>\n",
        ml + pw / 2.0,
        mt + ph + 38.0
    ));
    out.push_str(&format!(
        "<text x=\"16\" y=\"{:.1}\" font-size=\"13\" transform=\"rotate(-90 16 {:.1})\">eps_hat</text>\n",
        mt + ph / 2.0,
        mt + ph / 2.0
    ));
    // Legend: regimes present, in order of first appearance.
    let mut seen: Vec<Regime> = Vec::new();
    for p in points {
        if !seen.contains(&p.regime) {
            seen.push(p.regime);
        }
    }
    for (i, r) in seen.iter().enumerate() {
        let y = mt + 12.0 + i as f64 * 22.0;
        out.push_str(&format!(
            "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"14\" height=\"14\" fill=\"{}\"/>\n",
            ml + pw + 12.0,
            y,
            regime_color(*r)
        ));
        out.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\">{}</text>\n",
            ml + pw + 32.0,
            y + 11.0,
            r.label()
        ));
    }
    out.push_str("</svg>\n");
    out
}
