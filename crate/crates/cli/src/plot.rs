//! Minimal SVG figures: histograms, a PCI-ordered heatmap and a scatter.

use std::fmt::Write;

use nalgebra::DMatrix;

const W: f64 = 640.0;
const H: f64 = 420.0;
const PAD: f64 = 50.0;
const MAX_BINS: usize = 30;
/// Heatmap resolution cap; larger matrices are block-averaged.
const MAX_CELLS: usize = 200;

fn header(title: &str) -> String {
    let mut s = String::new();
    let _ = write!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n\
         <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">{}</text>\n",
        W / 2.0,
        escape(title)
    );
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn axis_labels(s: &mut String, x_label: &str, y_label: &str, x_range: (f64, f64), y_range: (f64, f64)) {
    let _ = write!(
        s,
        "<line x1=\"{PAD}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <line x1=\"{PAD}\" y1=\"{PAD}\" x2=\"{PAD}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <text x=\"{cx}\" y=\"{ly}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">{xl}</text>\n\
         <text x=\"14\" y=\"{cy}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 14 {cy})\">{yl}</text>\n\
         <text x=\"{PAD}\" y=\"{ty}\" font-family=\"sans-serif\" font-size=\"10\">{x0:.3}</text>\n\
         <text x=\"{r}\" y=\"{ty}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">{x1:.3}</text>\n\
         <text x=\"{yx}\" y=\"{b}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">{y0:.3}</text>\n\
         <text x=\"{yx}\" y=\"{t}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">{y1:.3}</text>\n",
        b = H - PAD,
        r = W - PAD,
        t = PAD + 10.0,
        cx = W / 2.0,
        cy = H / 2.0,
        ly = H - 12.0,
        ty = H - PAD + 14.0,
        yx = PAD - 4.0,
        xl = escape(x_label),
        yl = escape(y_label),
        x0 = x_range.0,
        x1 = x_range.1,
        y0 = y_range.0,
        y1 = y_range.1,
    );
}

/// Drawn when there is nothing to plot.
pub fn placeholder(title: &str, message: &str) -> String {
    let mut s = header(title);
    let _ = writeln!(
        s,
        "<text class=\"placeholder\" x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\" fill=\"grey\">{}</text>\n</svg>",
        W / 2.0,
        H / 2.0,
        escape(message)
    );
    s
}

/// Equal-width histogram with one bar per bin; the bin count is the number
/// of values, capped at 30.
pub fn histogram(title: &str, x_label: &str, values: &[f64]) -> String {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.is_empty() {
        return placeholder(title, "no data");
    }
    let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let bins = finite.len().min(MAX_BINS);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts = vec![0usize; bins];
    for v in &finite {
        let b = (((v - lo) / width).floor() as usize).min(bins - 1);
        counts[b] += 1;
    }
    let top = *counts.iter().max().unwrap() as f64;
    let mut s = header(title);
    axis_labels(&mut s, x_label, "count", (lo, if hi > lo { hi } else { lo + 1.0 }), (0.0, top));
    let plot_w = W - 2.0 * PAD;
    let plot_h = H - 2.0 * PAD - 10.0;
    let bar_w = plot_w / bins as f64;
    for (i, c) in counts.iter().enumerate() {
        let h = plot_h * *c as f64 / top;
        let _ = writeln!(
            s,
            "<rect class=\"bar\" x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"steelblue\" stroke=\"white\"/>",
            PAD + i as f64 * bar_w,
            H - PAD - h,
            bar_w,
            h
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Proximity heatmap with rows and columns sorted by ascending PCI.
pub fn heatmap(title: &str, phi: &DMatrix<f64>, pci: &[f64]) -> String {
    let n = phi.nrows();
    if n == 0 {
        return placeholder(title, "empty network");
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| pci[a].total_cmp(&pci[b]));
    let cells = n.min(MAX_CELLS);
    let mut grid = vec![vec![(0.0f64, 0usize); cells]; cells];
    for (ri, &i) in order.iter().enumerate() {
        let gi = ri * cells / n;
        for (rj, &j) in order.iter().enumerate() {
            let cell = &mut grid[gi][rj * cells / n];
            cell.0 += phi[(i, j)];
            cell.1 += 1;
        }
    }
    let side = (H - 2.0 * PAD).min(W - 2.0 * PAD);
    let step = side / cells as f64;
    let x0 = (W - side) / 2.0;
    let mut s = header(title);
    for (gi, row) in grid.iter().enumerate() {
        for (gj, (sum, count)) in row.iter().enumerate() {
            let v = (sum / (*count).max(1) as f64).clamp(0.0, 1.0);
            // dark for zero proximity, bright yellow for one
            let r = (255.0 * v.sqrt()) as u8;
            let g = (230.0 * v) as u8;
            let b = (80.0 * (1.0 - v)) as u8;
            let _ = writeln!(
                s,
                "<rect x=\"{:.3}\" y=\"{:.3}\" width=\"{:.3}\" height=\"{:.3}\" fill=\"#{r:02x}{g:02x}{b:02x}\"/>",
                x0 + gj as f64 * step,
                PAD + gi as f64 * step,
                step + 0.05,
                step + 0.05
            );
        }
    }
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">products ordered by PCI</text>\n</svg>",
        W / 2.0,
        H - 16.0
    );
    s
}

/// Labelled scatter with the x = y reference line.
pub fn scatter(title: &str, x_label: &str, y_label: &str, points: &[(String, f64, f64)]) -> String {
    let pts: Vec<&(String, f64, f64)> = points.iter().filter(|p| p.1.is_finite() && p.2.is_finite()).collect();
    if pts.is_empty() {
        return placeholder(title, "no data");
    }
    let lo = pts.iter().flat_map(|p| [p.1, p.2]).fold(f64::INFINITY, f64::min);
    let hi = pts.iter().flat_map(|p| [p.1, p.2]).fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let px = |v: f64| PAD + (v - lo) / span * (W - 2.0 * PAD);
    let py = |v: f64| H - PAD - (v - lo) / span * (H - 2.0 * PAD - 10.0);
    let mut s = header(title);
    axis_labels(&mut s, x_label, y_label, (lo, lo + span), (lo, lo + span));
    let _ = writeln!(
        s,
        "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\" stroke-dasharray=\"4 3\"/>",
        px(lo),
        py(lo),
        px(lo + span),
        py(lo + span)
    );
    for (code, x, y) in pts {
        let _ = writeln!(
            s,
            "<circle class=\"point\" cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"darkorange\" fill-opacity=\"0.7\"><title>{}</title></circle>",
            px(*x),
            py(*y),
            escape(code)
        );
    }
    s.push_str("</svg>\n");
    s
}
