//! Consolidated table and SVG plots over a run directory.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use resid_core::model::{CvReport, EvalReport, MetricSet};

use crate::fail::Failure;
use crate::run_dir::RunDir;

const PALETTE: [&str; 4] = ["#4e79a7", "#f28e2b", "#59a14f", "#e15759"];

struct Entry {
    encoder: String,
    mean: MetricSet,
    std: Option<MetricSet>,
    confusion: Vec<Vec<u64>>,
}

fn read(p: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(p).map_err(|e| Failure::data(format!("{}: {e}", p.display())))
}

/// `(stem suffix, path)` for files named `<prefix>-<suffix>.<ext>`, sorted.
fn matching(dir: &Path, prefix: &str, ext: &str) -> Result<Vec<(String, PathBuf)>, Failure> {
    let rd = std::fs::read_dir(dir).map_err(|e| Failure::data(format!("{}: {e}", dir.display())))?;
    let mut out = Vec::new();
    for entry in rd {
        let p = entry.map_err(|e| Failure::data(e.to_string()))?.path();
        let Some(name) = p.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        if let Some(rest) = name.strip_prefix(&format!("{prefix}-")) {
            if let Some(enc) = rest.strip_suffix(&format!(".{ext}")) {
                out.push((enc.to_string(), p.clone()));
            }
        }
    }
    out.sort();
    Ok(out)
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn svg_open(w: f64, h: f64) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\" font-size=\"11\">\n\
         <rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n"
    )
}

/// Grouped bars: one group per encoder, one bar per metric, std whiskers.
fn metrics_svg(entries: &[Entry]) -> String {
    let (left, top, plot_h, group_w) = (50.0, 30.0, 200.0, 120.0);
    let w = left + group_w * entries.len() as f64 + 20.0;
    let h = top + plot_h + 60.0;
    let y = |v: f64| top + plot_h * (1.0 - v.clamp(0.0, 1.0));
    let mut s = svg_open(w, h);
    writeln!(s, "<text x=\"{left}\" y=\"18\">metric by encoder</text>").unwrap();
    for k in 0..=4 {
        let v = k as f64 / 4.0;
        writeln!(
            s,
            "<line x1=\"{left}\" x2=\"{}\" y1=\"{:.1}\" y2=\"{:.1}\" stroke=\"#ddd\"/><text x=\"8\" y=\"{:.1}\">{v:.2}</text>",
            w - 20.0,
            y(v),
            y(v),
            y(v) + 4.0
        )
        .unwrap();
    }
    let bar = 22.0;
    for (g, e) in entries.iter().enumerate() {
        let x0 = left + group_w * g as f64 + 10.0;
        for (m, v) in e.mean.values().iter().enumerate() {
            let x = x0 + bar * m as f64;
            writeln!(
                s,
                "<rect x=\"{x:.1}\" y=\"{:.1}\" width=\"{}\" height=\"{:.1}\" fill=\"{}\"><title>{} {v:.4}</title></rect>",
                y(*v),
                bar - 2.0,
                y(0.0) - y(*v),
                PALETTE[m],
                MetricSet::NAMES[m]
            )
            .unwrap();
            if let Some(sd) = e.std {
                let d = sd.values()[m];
                let cx = x + (bar - 2.0) / 2.0;
                writeln!(
                    s,
                    "<line x1=\"{cx:.1}\" x2=\"{cx:.1}\" y1=\"{:.1}\" y2=\"{:.1}\" stroke=\"black\"/>",
                    y(v + d),
                    y(v - d)
                )
                .unwrap();
            }
        }
        writeln!(s, "<text x=\"{x0:.1}\" y=\"{:.1}\">{}</text>", y(0.0) + 16.0, esc(&e.encoder)).unwrap();
    }
    for (m, name) in MetricSet::NAMES.iter().enumerate() {
        let x = left + 80.0 * m as f64;
        writeln!(
            s,
            "<rect x=\"{x}\" y=\"{:.1}\" width=\"10\" height=\"10\" fill=\"{}\"/><text x=\"{}\" y=\"{:.1}\">{name}</text>",
            h - 22.0,
            PALETTE[m],
            x + 14.0,
            h - 13.0
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}

/// Heat grid of row-normalized counts; raw counts are printed in cells.
fn confusion_svg(title: &str, confusion: &[Vec<u64>]) -> String {
    let n = confusion.len();
    let cell = 40.0;
    let (left, top) = (60.0, 50.0);
    let w = left + cell * n as f64 + 20.0;
    let h = top + cell * n as f64 + 20.0;
    let mut s = svg_open(w, h);
    writeln!(s, "<text x=\"10\" y=\"18\">{} (rows: true, columns: predicted)</text>", esc(title)).unwrap();
    for (i, row) in confusion.iter().enumerate() {
        let total: u64 = row.iter().sum();
        writeln!(s, "<text x=\"10\" y=\"{:.1}\">{i}</text>", top + cell * (i as f64 + 0.6)).unwrap();
        for (j, &c) in row.iter().enumerate() {
            let frac = if total > 0 { c as f64 / total as f64 } else { 0.0 };
            // white to blue
            let shade = (255.0 * (1.0 - 0.8 * frac)).round() as u8;
            writeln!(
                s,
                "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"{cell}\" height=\"{cell}\" fill=\"rgb({shade},{shade},255)\" stroke=\"#888\"/><text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{c}</text>",
                left + cell * j as f64,
                top + cell * i as f64,
                left + cell * (j as f64 + 0.5),
                top + cell * (i as f64 + 0.6)
            )
            .unwrap();
        }
    }
    for j in 0..n {
        writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{j}</text>",
            left + cell * (j as f64 + 0.5),
            top - 6.0
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}

/// Loss curves; `series` is `(label, [(epoch, loss)])`.
fn curves_svg(series: &[(String, Vec<(f64, f64)>)]) -> String {
    let (left, top, pw, ph) = (60.0, 30.0, 400.0, 220.0);
    let w = left + pw + 160.0;
    let h = top + ph + 40.0;
    let pts = series.iter().flat_map(|(_, v)| v.iter().copied());
    let (mut xmax, mut ymax) = (1.0f64, 0.0f64);
    for (x, y) in pts {
        xmax = xmax.max(x);
        if y.is_finite() {
            ymax = ymax.max(y);
        }
    }
    if ymax <= 0.0 {
        ymax = 1.0;
    }
    let px = |x: f64| left + pw * x / xmax;
    let py = |y: f64| top + ph * (1.0 - y / ymax);
    let mut s = svg_open(w, h);
    writeln!(s, "<text x=\"{left}\" y=\"18\">loss by epoch</text>").unwrap();
    writeln!(
        s,
        "<rect x=\"{left}\" y=\"{top}\" width=\"{pw}\" height=\"{ph}\" fill=\"none\" stroke=\"#888\"/>\
         <text x=\"8\" y=\"{:.1}\">{ymax:.3}</text><text x=\"8\" y=\"{:.1}\">0</text>\
         <text x=\"{:.1}\" y=\"{:.1}\">{xmax}</text>",
        top + 4.0,
        top + ph,
        left + pw - 10.0,
        top + ph + 16.0
    )
    .unwrap();
    for (k, (label, v)) in series.iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        let dash = if label.ends_with("valid") { " stroke-dasharray=\"4 3\"" } else { "" };
        let path: Vec<String> = v
            .iter()
            .filter(|(_, y)| y.is_finite())
            .map(|&(x, y)| format!("{:.1},{:.1}", px(x), py(y)))
            .collect();
        writeln!(
            s,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{colour}\"{dash}/>\
             <text x=\"{:.1}\" y=\"{:.1}\" fill=\"{colour}\">{}</text>",
            path.join(" "),
            left + pw + 10.0,
            top + 14.0 * (k as f64 + 1.0),
            esc(label)
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}

fn metric_cells(m: &MetricSet) -> String {
    m.values().iter().map(|v| format!("{v:.6}")).collect::<Vec<_>>().join(",")
}

pub fn report(dir: &Path) -> Result<(), Failure> {
    if !dir.is_dir() {
        return Err(Failure::data(format!("{}: not a run directory", dir.display())));
    }
    let cvs = matching(dir, "cv", "json")?;
    let evals = matching(dir, "eval", "json")?;
    if cvs.is_empty() && evals.is_empty() {
        return Err(Failure::data(format!(
            "{}: no cross-validation or evaluation results to report",
            dir.display()
        )));
    }

    let mut table = String::from("source,encoder,fold,accuracy,precision,recall,f1,events\n");
    let mut entries = Vec::new();
    for (enc, p) in &cvs {
        let rep: CvReport = serde_json::from_str(&read(p)?)
            .map_err(|e| Failure::data(format!("{}: {e}", p.display())))?;
        let n = rep.folds.first().map_or(0, |f| f.report.confusion.len());
        let mut confusion = vec![vec![0u64; n]; n];
        for f in &rep.folds {
            writeln!(
                table,
                "cv,{enc},{},{},{}",
                f.fold,
                metric_cells(&f.report.metrics),
                f.report.total
            )
            .unwrap();
            for (acc, row) in confusion.iter_mut().zip(&f.report.confusion) {
                for (a, v) in acc.iter_mut().zip(row) {
                    *a += v;
                }
            }
        }
        writeln!(table, "cv,{enc},mean,{},", metric_cells(&rep.aggregate.mean)).unwrap();
        writeln!(table, "cv,{enc},std,{},", metric_cells(&rep.aggregate.std)).unwrap();
        entries.push(Entry {
            encoder: enc.clone(),
            mean: rep.aggregate.mean,
            std: Some(rep.aggregate.std),
            confusion,
        });
    }
    for (enc, p) in &evals {
        let rep: EvalReport = serde_json::from_str(&read(p)?)
            .map_err(|e| Failure::data(format!("{}: {e}", p.display())))?;
        writeln!(table, "holdout,{enc},,{},{}", metric_cells(&rep.metrics), rep.total).unwrap();
        // cross-validation results take precedence in the plots
        if !cvs.iter().any(|(c, _)| c == enc) {
            entries.push(Entry {
                encoder: enc.clone(),
                mean: rep.metrics,
                std: None,
                confusion: rep.confusion,
            });
        }
    }

    let mut out = RunDir::create(dir)?;
    out.write("report.csv", table)?;
    out.write("metrics.svg", metrics_svg(&entries))?;
    for e in &entries {
        out.write(
            &format!("confusion-{}.svg", e.encoder),
            confusion_svg(&e.encoder, &e.confusion),
        )?;
    }
    let mut series = Vec::new();
    for (enc, p) in matching(dir, "curve", "csv")? {
        let text = read(&p)?;
        let mut tr = Vec::new();
        let mut va = Vec::new();
        for line in text.lines().skip(1) {
            let f: Vec<f64> = line.split(',').filter_map(|x| x.parse().ok()).collect();
            if let [e, t, v] = f[..] {
                tr.push((e, t));
                va.push((e, v));
            }
        }
        series.push((format!("{enc} train"), tr));
        series.push((format!("{enc} valid"), va));
    }
    if !series.is_empty() {
        out.write("curves.svg", curves_svg(&series))?;
    }
    println!("report for {} encoder(s) in {}", entries.len(), dir.display());
    out.finish()
}
