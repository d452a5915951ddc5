//! SVG and plaintext renderings of an F1-vs-k curve and the ROC polyline.

use std::fmt::Write as _;

use crate::eval::{auc, roc_points, MetricsPoint};

const PANEL: f64 = 320.0;
const MARGIN: f64 = 40.0;

fn polyline(points: &[(f64, f64)], x0: f64, colour: &str) -> String {
    let coords: Vec<String> = points
        .iter()
        .map(|&(x, y)| format!("{:.2},{:.2}", x0 + x * PANEL, MARGIN + (1.0 - y) * PANEL))
        .collect();
    format!(
        "<polyline fill=\"none\" stroke=\"{colour}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
        coords.join(" ")
    )
}

fn frame(out: &mut String, x0: f64, title: &str, x_label: &str, y_label: &str) {
    let _ = writeln!(
        out,
        "<rect x=\"{x0}\" y=\"{MARGIN}\" width=\"{PANEL}\" height=\"{PANEL}\" fill=\"none\" stroke=\"#444\"/>"
    );
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"14\">{title}</text>",
        x0 + PANEL / 2.0,
        MARGIN - 12.0
    );
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"11\">{x_label}</text>",
        x0 + PANEL / 2.0,
        MARGIN + PANEL + 24.0
    );
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" font-size=\"11\" transform=\"rotate(-90 {} {})\" text-anchor=\"middle\">{y_label}</text>",
        x0 - 12.0,
        MARGIN + PANEL / 2.0,
        x0 - 12.0,
        MARGIN + PANEL / 2.0
    );
}

/// Two panels: F1 against k (k scaled to the largest cut) and the ROC curve with its diagonal.
pub fn render_svg(metrics: &[MetricsPoint]) -> String {
    let width = 3.0 * MARGIN + 2.0 * PANEL;
    let height = 2.0 * MARGIN + PANEL + 10.0;
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n"
    );
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");

    let max_k = metrics.iter().map(|m| m.k).max().unwrap_or(0).max(1) as f64;
    frame(
        &mut out,
        MARGIN,
        &format!("F1 at k (max k = {max_k})"),
        "k",
        "F1",
    );
    let f1: Vec<(f64, f64)> = metrics.iter().map(|m| (m.k as f64 / max_k, m.f1)).collect();
    out.push_str(&polyline(&f1, MARGIN, "#1f77b4"));

    let right = 2.0 * MARGIN + PANEL;
    let roc = roc_points(metrics);
    frame(
        &mut out,
        right,
        &format!("ROC (AUC = {:.4})", auc(&roc)),
        "FPR",
        "TPR",
    );
    out.push_str(&polyline(&[(0.0, 0.0), (1.0, 1.0)], right, "#bbb"));
    out.push_str(&polyline(&roc, right, "#d62728"));
    out.push_str("</svg>\n");
    out
}

fn grid_plot(points: &[(f64, f64)], cols: usize, rows: usize) -> Vec<String> {
    let mut grid = vec![vec![' '; cols]; rows];
    for &(x, y) in points {
        let c = ((x.clamp(0.0, 1.0) * (cols - 1) as f64).round()) as usize;
        let r = (((1.0 - y.clamp(0.0, 1.0)) * (rows - 1) as f64).round()) as usize;
        grid[r][c] = '*';
    }
    grid.into_iter()
        .enumerate()
        .map(|(i, row)| {
            let axis = if i == 0 {
                "1.0 |"
            } else if i == rows - 1 {
                "0.0 |"
            } else {
                "    |"
            };
            format!("{axis}{}", row.into_iter().collect::<String>().trim_end())
        })
        .collect()
}

/// Table of every cut followed by coarse character plots of both curves.
pub fn render_text(metrics: &[MetricsPoint]) -> String {
    let mut out = String::new();
    let roc = roc_points(metrics);
    let _ = writeln!(
        out,
        "{:>6} {:>6} {:>6} {:>9} {:>9} {:>9} {:>9}",
        "k", "tp", "fp", "precision", "recall", "f1", "fpr"
    );
    for m in metrics {
        let _ = writeln!(
            out,
            "{:>6} {:>6} {:>6} {:>9.4} {:>9.4} {:>9.4} {:>9.4}",
            m.k, m.tp, m.fp, m.precision, m.recall, m.f1, m.fpr
        );
    }
    if let Some(best) = metrics
        .iter()
        .max_by(|a, b| a.f1.total_cmp(&b.f1).then(b.k.cmp(&a.k)))
    {
        let _ = writeln!(out, "\nbest f1 {:.4} at k = {}", best.f1, best.k);
    }
    let _ = writeln!(out, "roc auc {:.4}", auc(&roc));

    let max_k = metrics.iter().map(|m| m.k).max().unwrap_or(0).max(1) as f64;
    let f1: Vec<(f64, f64)> = metrics.iter().map(|m| (m.k as f64 / max_k, m.f1)).collect();
    let _ = writeln!(out, "\nF1 vs k (0 .. {max_k})");
    for line in grid_plot(&f1, 60, 15) {
        let _ = writeln!(out, "{line}");
    }
    let _ = writeln!(out, "    +{}", "-".repeat(60));
    let _ = writeln!(out, "\nROC (fpr 0 .. 1)");
    for line in grid_plot(&roc, 60, 15) {
        let _ = writeln!(out, "{line}");
    }
    let _ = writeln!(out, "    +{}", "-".repeat(60));
    out
}
