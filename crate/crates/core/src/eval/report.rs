use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::pr::PRPoint;

/// Dataset-level scores of one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub method: String,
    pub ods: f64,
    pub ods_threshold: f64,
    pub ois: f64,
    pub ap: f64,
    pub image_ids: Vec<String>,
    pub per_image_best_f: Vec<f64>,
    /// Counts pooled over all images at each grid threshold.
    pub curve: Vec<PRPoint>,
}

pub fn pr_csv(curve: &[PRPoint]) -> String {
    let mut s = String::from("threshold,tp_pred,fp,tp_gt,fn,precision,recall\n");
    for p in curve {
        let _ = writeln!(
            s,
            "{:.6},{},{},{},{},{:.6},{:.6}",
            p.threshold, p.tp_pred, p.fp, p.tp_gt, p.fn_, p.precision, p.recall
        );
    }
    s
}

pub fn per_image_csv(summary: &EvalSummary) -> String {
    let mut s = String::from("image,best_f\n");
    for (id, f) in summary.image_ids.iter().zip(&summary.per_image_best_f) {
        let _ = writeln!(s, "{id},{f:.6}");
    }
    s
}

pub fn summary_csv(rows: &[EvalSummary]) -> String {
    let mut s = String::from("Method,ODS,OIS,AP,ODS_threshold\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{:.4},{:.4},{:.4},{:.4}",
            r.method, r.ods, r.ois, r.ap, r.ods_threshold
        );
    }
    s
}

/// Fixed-width text table with Method, ODS, OIS and AP columns.
pub fn summary_table(rows: &[EvalSummary]) -> String {
    let width = rows.iter().map(|r| r.method.len()).max().unwrap_or(0).max(6);
    let mut s = format!("{:<width$}  {:>6}  {:>6}  {:>6}\n", "Method", "ODS", "OIS", "AP");
    let _ = writeln!(s, "{}", "-".repeat(width + 24));
    for r in rows {
        let _ = writeln!(s, "{:<width$}  {:>6.4}  {:>6.4}  {:>6.4}", r.method, r.ods, r.ois, r.ap);
    }
    s
}

const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// Precision-recall plot with one polyline per method.
pub fn pr_svg(rows: &[EvalSummary]) -> String {
    let (size, margin) = (420.0, 50.0);
    let plot = size - 2.0 * margin;
    let px = |r: f64| margin + r * plot;
    let py = |p: f64| size - margin - p * plot;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{h}" font-family="sans-serif" font-size="12">"#,
        h = size + 20.0 * rows.len() as f64
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{margin}" y="{margin}" width="{plot}" height="{plot}" fill="none" stroke="black"/>"#
    );
    for i in 0..=10 {
        let v = i as f64 / 10.0;
        let _ = writeln!(
            s,
            r##"<line x1="{x:.1}" y1="{y0:.1}" x2="{x:.1}" y2="{y1:.1}" stroke="#ddd"/><line x1="{y0x:.1}" y1="{y:.1}" x2="{y1x:.1}" y2="{y:.1}" stroke="#ddd"/>"##,
            x = px(v),
            y0 = py(0.0),
            y1 = py(1.0),
            y = py(v),
            y0x = px(0.0),
            y1x = px(1.0)
        );
        if i % 2 == 0 {
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{v:.1}</text><text x="{:.1}" y="{:.1}" text-anchor="end">{v:.1}</text>"#,
                px(v),
                py(0.0) + 16.0,
                px(0.0) - 6.0,
                py(v) + 4.0
            );
        }
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">Recall</text>"#,
        px(0.5),
        size - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.1}" text-anchor="middle" transform="rotate(-90 14 {:.1})">Precision</text>"#,
        py(0.5),
        py(0.5)
    );
    for (k, r) in rows.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let mut pts: Vec<(f64, f64)> = r.curve.iter().map(|p| (p.recall, p.precision)).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            path.join(" ")
        );
        let ly = size + 20.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{m}" y1="{y:.1}" x2="{m2}" y2="{y:.1}" stroke="{color}" stroke-width="3"/><text x="{tx}" y="{ty:.1}">{} (ODS {:.3})</text>"#,
            xml_escape(&r.method),
            r.ods,
            m = margin,
            m2 = margin + 20.0,
            y = ly - 4.0,
            tx = margin + 26.0,
            ty = ly
        );
    }
    s.push_str("</svg>\n");
    s
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn summary(name: &str) -> EvalSummary {
        EvalSummary {
            method: name.into(),
            ods: 0.5,
            ods_threshold: 0.3,
            ois: 0.6,
            ap: 0.4,
            image_ids: vec!["a".into()],
            per_image_best_f: vec![0.6],
            curve: vec![PRPoint::from_counts(0.3, 1, 1, 1, 1)],
        }
    }

    #[test]
    fn table_has_one_row_per_method_in_order() {
        let t = summary_table(&[summary("Sobel"), summary("Canny")]);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0].starts_with("Method") && lines[2].starts_with("Sobel") && lines[3].starts_with("Canny"));
        assert!(summary_csv(&[summary("x")]).contains("x,0.5000,0.6000,0.4000"));
    }

    #[test]
    fn csv_and_svg() {
        let c = pr_csv(&summary("x").curve);
        assert_eq!(c.lines().nth(1).unwrap(), "0.300000,1,1,1,1,0.500000,0.500000");
        let svg = pr_svg(&[summary("a<b")]);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("a&lt;b") && svg.contains("<polyline"));
    }
}
