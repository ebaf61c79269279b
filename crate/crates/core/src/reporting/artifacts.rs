//! CSV and SVG outputs of the analyses.
//!
//! Every number is written in shortest round-trip decimal form, so the
//! same logs always produce byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::reporting::analysis::{best_so_far, high_performer_counts, pca_top_configs, Projection};
use crate::reporting::runlog::RunLog;
use crate::space::HpSpace;

pub const TRAJECTORY_CSV: &str = "trajectory.csv";
pub const COUNTS_CSV: &str = "high_performers.csv";
pub const PCA_CSV: &str = "pca.csv";
pub const PCA_VARIANCE_CSV: &str = "pca_variance.csv";
pub const PLOT_SVG: &str = "best_so_far.svg";

#[derive(Debug, Clone)]
pub struct ArtifactOptions {
    /// Quantile defining a high performer.
    pub quantile: f64,
    /// Share of top configurations fed to the PCA.
    pub top_fraction: f64,
    pub hp_space: HpSpace,
}

impl Default for ArtifactOptions {
    fn default() -> Self {
        Self {
            quantile: 0.99,
            top_fraction: 0.01,
            hp_space: HpSpace::default(),
        }
    }
}

/// Writes trajectory, high-performer, PCA and plot files for named logs into
/// `out_dir`, returning the paths written.
pub fn emit_artifacts(logs: &[(String, &RunLog)], out_dir: &Path, opts: &ArtifactOptions) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    let mut put = |name: &str, body: String| -> Result<()> {
        let path = out_dir.join(name);
        fs::write(&path, body)?;
        written.push(path);
        Ok(())
    };

    let trajectories: Vec<(String, Vec<(f64, f64)>)> =
        logs.iter().map(|(name, log)| (name.clone(), best_so_far(&log.records))).collect();

    let mut csv = String::from("log,finish_time,objective,best_objective\n");
    for (name, log) in logs {
        let mut ok = log.ok_records();
        ok.sort_by(|a, b| a.finish_time.total_cmp(&b.finish_time));
        let mut best = f64::NEG_INFINITY;
        for r in ok {
            best = best.max(r.objective);
            let _ = writeln!(csv, "{name},{},{},{best}", r.finish_time, r.objective);
        }
    }
    put(TRAJECTORY_CSV, csv)?;

    let mut csv = String::from("log,finish_time,count,threshold\n");
    let record_slices: Vec<&[_]> = logs.iter().map(|(_, l)| l.records.as_slice()).collect();
    if let Ok(counts) = high_performer_counts(&record_slices, opts.quantile) {
        for ((name, _), curve) in logs.iter().zip(&counts.curves) {
            for (t, c) in curve {
                let _ = writeln!(csv, "{name},{t},{c},{}", counts.threshold);
            }
        }
    }
    put(COUNTS_CSV, csv)?;

    let mut points = String::from("log,space,job_id,objective,pc1,pc2\n");
    let mut variance = String::from("log,space,component,ratio\n");
    for (name, log) in logs {
        let Ok(pca) = pca_top_configs(&log.records, opts.top_fraction, &opts.hp_space) else {
            continue;
        };
        let mut emit = |space: &str, proj: &Projection| {
            for ((id, obj), p) in pca.job_ids.iter().zip(&pca.objectives).zip(&proj.points) {
                let _ = writeln!(points, "{name},{space},{id},{obj},{},{}", p[0], p[1]);
            }
            for (k, r) in proj.variance_ratio.iter().enumerate() {
                let _ = writeln!(variance, "{name},{space},{},{r}", k + 1);
            }
        };
        emit("arch", &pca.arch);
        emit("hp", &pca.hp);
    }
    put(PCA_CSV, points)?;
    put(PCA_VARIANCE_CSV, variance)?;

    put(PLOT_SVG, step_plot_svg(&trajectories))?;
    Ok(written)
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// Standalone SVG of best-so-far step curves.
pub fn step_plot_svg(series: &[(String, Vec<(f64, f64)>)]) -> String {
    let (w, h, margin) = (640.0, 400.0, 50.0);
    let all = series.iter().flat_map(|(_, s)| s.iter());
    let (mut t_max, mut y_min, mut y_max) = (0.0f64, f64::INFINITY, f64::NEG_INFINITY);
    for &(t, y) in all {
        t_max = t_max.max(t);
        y_min = y_min.min(y);
        y_max = y_max.max(y);
    }
    if !y_min.is_finite() {
        (y_min, y_max) = (0.0, 1.0);
    }
    if y_max - y_min < 1e-9 {
        y_min -= 0.05;
        y_max += 0.05;
    }
    let t_max = if t_max > 0.0 { t_max } else { 1.0 };
    let x_of = |t: f64| margin + t / t_max * (w - 2.0 * margin);
    let y_of = |y: f64| h - margin - (y - y_min) / (y_max - y_min) * (h - 2.0 * margin);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<path d="M{m} {m} V{b} H{r}" fill="none" stroke="black"/>"#,
        m = margin,
        b = h - margin,
        r = w - margin
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">time (s)</text>"#,
        w / 2.0,
        h - 15.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="15" y="{}" font-size="12" transform="rotate(-90 15 {})" text-anchor="middle">best objective</text>"#,
        h / 2.0,
        h / 2.0
    );
    for (label, y) in [(y_min, y_min), (y_max, y_max)] {
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-size="10" text-anchor="end">{:.4}</text>"#,
            margin - 4.0,
            y_of(y) + 3.0,
            label
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-size="10" text-anchor="end">{:.1}</text>"#,
        w - margin,
        h - margin + 14.0,
        t_max
    );
    for (i, (name, points)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if !points.is_empty() {
            let mut d = String::new();
            let mut prev: Option<f64> = None;
            for &(t, y) in points {
                match prev {
                    None => {
                        let _ = write!(d, "M{:.2} {:.2}", x_of(t), y_of(y));
                    }
                    Some(py) => {
                        let _ = write!(d, " H{:.2}", x_of(t));
                        if py != y {
                            let _ = write!(d, " V{:.2}", y_of(y));
                        }
                    }
                }
                prev = Some(y);
            }
            let _ = write!(d, " H{:.2}", x_of(t_max));
            let _ = writeln!(svg, r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="1.5"/>"#);
        }
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-size="11" fill="{color}">{}</text>"#,
            margin + 8.0,
            margin + 14.0 * (i as f64 + 1.0),
            xml_escape(name)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
