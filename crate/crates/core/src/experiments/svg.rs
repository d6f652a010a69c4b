//! Minimal hand-written SVG plots.

use std::fmt::Write as _;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn confusion_heatmap(names: &[String], confusion: &[Vec<usize>]) -> String {
    let k = names.len();
    let cell = 36.0;
    let left = 120.0;
    let top = 30.0;
    let size = left + cell * k as f64 + 20.0;
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{size}\" height=\"{}\" font-family=\"sans-serif\" font-size=\"11\">\n",
        top + cell * k as f64 + 110.0
    );
    for (i, row) in confusion.iter().enumerate() {
        let n: usize = row.iter().sum();
        for (j, &c) in row.iter().enumerate() {
            let f = if n == 0 { 0.0 } else { c as f64 / n as f64 };
            let (x, y) = (left + j as f64 * cell, top + i as f64 * cell);
            let _ = writeln!(
                s,
                "<rect x=\"{x}\" y=\"{y}\" width=\"{cell}\" height=\"{cell}\" fill=\"#08306b\" fill-opacity=\"{f:.3}\" stroke=\"#ccc\"/>"
            );
            let colour = if f > 0.5 { "#fff" } else { "#000" };
            let _ = writeln!(
                s,
                "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" fill=\"{colour}\">{c}</text>",
                x + cell / 2.0,
                y + cell / 2.0 + 4.0
            );
        }
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>",
            left - 6.0,
            top + i as f64 * cell + cell / 2.0 + 4.0,
            escape(&names[i])
        );
    }
    for (j, name) in names.iter().enumerate() {
        let x = left + j as f64 * cell + cell / 2.0;
        let y = top + cell * k as f64 + 8.0;
        let _ = writeln!(
            s,
            "<text x=\"{x}\" y=\"{y}\" transform=\"rotate(60 {x} {y})\">{}</text>",
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// One polyline per series over a shared x axis; y in [0, 1].
pub fn line_plot(title: &str, x_label: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    let (w, h, m) = (480.0, 320.0, 50.0);
    let xs = series.iter().flat_map(|(_, p)| p.iter().map(|q| q.0));
    let (lo, hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let px = |x: f64| m + (x - lo) / span * (w - 2.0 * m);
    let py = |y: f64| h - m - y.clamp(0.0, 1.0) * (h - 2.0 * m);
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" font-family=\"sans-serif\" font-size=\"11\">\n\
         <text x=\"{}\" y=\"20\" text-anchor=\"middle\">{}</text>\n\
         <line x1=\"{m}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#000\"/>\n\
         <line x1=\"{m}\" y1=\"{m}\" x2=\"{m}\" y2=\"{}\" stroke=\"#000\"/>\n\
         <text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
        w / 2.0,
        escape(title),
        h - m,
        w - m,
        h - m,
        h - m,
        w / 2.0,
        h - 15.0,
        escape(x_label)
    );
    for (i, (name, pts)) in series.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.1},{:.1}", px(x), py(y))).collect();
        let _ = writeln!(s, "<polyline fill=\"none\" stroke=\"{colour}\" stroke-width=\"2\" points=\"{}\"/>", coords.join(" "));
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" fill=\"{colour}\">{}</text>",
            w - m + 4.0,
            m + 14.0 * i as f64,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Grouped bars, one group per label, values in [0, 1].
pub fn bar_chart(title: &str, labels: &[String], groups: &[(String, Vec<f64>)]) -> String {
    let (w, h, m) = (560.0, 320.0, 50.0);
    let slot = (w - 2.0 * m) / labels.len().max(1) as f64;
    let bar = slot * 0.8 / groups.len().max(1) as f64;
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" font-family=\"sans-serif\" font-size=\"11\">\n\
         <text x=\"{}\" y=\"20\" text-anchor=\"middle\">{}</text>\n\
         <line x1=\"{m}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#000\"/>\n",
        w / 2.0,
        escape(title),
        h - m,
        w - m,
        h - m
    );
    for (li, label) in labels.iter().enumerate() {
        for (gi, (_, vals)) in groups.iter().enumerate() {
            let v = vals.get(li).copied().unwrap_or(0.0).clamp(0.0, 1.0);
            let bh = v * (h - 2.0 * m);
            let x = m + li as f64 * slot + slot * 0.1 + gi as f64 * bar;
            let _ = writeln!(
                s,
                "<rect x=\"{x:.1}\" y=\"{:.1}\" width=\"{bar:.1}\" height=\"{bh:.1}\" fill=\"{}\"/>",
                h - m - bh,
                PALETTE[gi % PALETTE.len()]
            );
        }
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
            m + (li as f64 + 0.5) * slot,
            h - m + 16.0,
            escape(label)
        );
    }
    for (gi, (name, _)) in groups.iter().enumerate() {
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" fill=\"{}\">{}</text>",
            m,
            36.0 + 14.0 * gi as f64,
            PALETTE[gi % PALETTE.len()],
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plots_are_closed_svg() {
        let names = vec!["a<b".to_string(), "c".to_string()];
        for svg in [
            confusion_heatmap(&names, &[vec![1, 0], vec![0, 0]]),
            line_plot("t", "x", &[("s".into(), vec![(0.0, 0.1), (1.0, 0.9)])]),
            bar_chart("t", &names, &[("g".into(), vec![0.5, 0.7])]),
        ] {
            assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
            assert!(!svg.contains("a<b"));
        }
    }
}
