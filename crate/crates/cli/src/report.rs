use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use smkl::data_io::{write_labels, write_matrix};
use smkl::{Error, Result};

use crate::runner::{fit_point, run_grid, Experiment, PointResult};
use crate::spec::ExperimentSpec;

pub const SWEEP_COLUMNS: [&str; 16] = [
    "method", "kernel", "fraction", "alpha", "beta", "gamma", "acc", "acc_std", "nmi", "nmi_std",
    "iterations", "converged", "runs", "status", "best", "error",
];

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

/// Long-format table, one row per parameter point.
pub fn sweep_table(results: &[PointResult], best: &[usize]) -> Result<String> {
    if results.is_empty() {
        return Err(Error::InvalidData("no results to tabulate".into()));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::InvalidData(format!("csv: {e}"));
    w.write_record(SWEEP_COLUMNS).map_err(csv_err)?;
    for (i, r) in results.iter().enumerate() {
        let p = &r.point;
        let mut row = vec![
            p.method.to_string(),
            r.kernel_label.clone(),
            opt(p.fraction),
            p.alpha.to_string(),
            opt(p.beta),
            p.gamma.to_string(),
        ];
        match &r.outcome {
            Ok(m) => row.extend([
                format!("{:.6}", m.acc.mean),
                format!("{:.6}", m.acc.std),
                format!("{:.6}", m.nmi.mean),
                format!("{:.6}", m.nmi.std),
                format!("{:.2}", m.iterations.mean),
                (m.converged == m.runs).to_string(),
                m.runs.to_string(),
                "ok".to_string(),
            ]),
            Err(f) => row.extend(
                ["NA", "NA", "NA", "NA", "NA", "NA", "0"]
                    .map(String::from)
                    .into_iter()
                    .chain([format!("failed:{}", f.kind)]),
            ),
        }
        row.push(u8::from(best.contains(&i)).to_string());
        row.push(r.outcome.as_ref().err().map_or(String::new(), |f| f.message.clone()));
        w.write_record(&row).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidData(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::InvalidData(e.to_string()))
}

pub fn emit_sweep_table(path: impl AsRef<Path>, results: &[PointResult], best: &[usize]) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, sweep_table(results, best)?).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn result_line(r: &PointResult, marker: &str) -> String {
    let p = &r.point;
    let head = format!(
        "{marker}{:<5} {:<16} {:>8} {:>10} {:>10} {:>10}",
        p.method.to_string(),
        r.kernel_label,
        opt(p.fraction),
        p.alpha,
        opt(p.beta),
        p.gamma
    );
    match &r.outcome {
        Ok(m) if m.runs > 1 => format!(
            "{head}  acc {:.4} ± {:.4}  nmi {:.4} ± {:.4}  iter {:.1}  converged {}/{}",
            m.acc.mean, m.acc.std, m.nmi.mean, m.nmi.std, m.iterations.mean, m.converged, m.runs
        ),
        Ok(m) => format!(
            "{head}  acc {:.4}  nmi {:.4}  iter {:.0}  converged {}",
            m.acc.mean,
            m.nmi.mean,
            m.iterations.mean,
            m.converged == m.runs
        ),
        Err(f) => format!("{head}  FAILED ({}): {}", f.kind, f.message),
    }
}

/// The report without its timestamp line.
pub fn report_body(spec: &ExperimentSpec, exp: &Experiment) -> String {
    let mut out = String::new();
    let prepared = &exp.prepared;
    out.push_str("[experiment]\n");
    out.push_str(&spec.describe());
    let axes = spec.sweep.axes();
    let _ = writeln!(
        out,
        "sweep_axes={}",
        if axes.is_empty() { "none".to_string() } else { axes.join(",") }
    );
    out.push_str("\n[data]\n");
    let _ = writeln!(out, "samples={}", prepared.data.nrows());
    let _ = writeln!(out, "features={}", prepared.data.ncols());
    let _ = writeln!(out, "classes={}", prepared.truth.num_classes());
    let _ = writeln!(out, "clusters={}", prepared.clusters);
    let _ = writeln!(out, "kernels={}", prepared.bank.len());
    for (i, k) in prepared.bank.kernels().iter().enumerate() {
        let _ = writeln!(out, "  {i:>2} {}", k.kind());
    }
    out.push_str("\n[results]\n");
    let _ = writeln!(
        out,
        " {:<5} {:<16} {:>8} {:>10} {:>10} {:>10}  metrics",
        "meth", "kernel", "fraction", "alpha", "beta", "gamma"
    );
    for (i, r) in exp.results.iter().enumerate() {
        let marker = if exp.best.contains(&i) { "*" } else { " " };
        out.push_str(&result_line(r, marker));
        out.push('\n');
    }
    out.push_str("\n[best]\n");
    for &b in &exp.best {
        out.push_str(&result_line(&exp.results[b], ""));
        out.push('\n');
    }
    let failed = exp.failures();
    let _ = writeln!(out, "\n[summary]\npoints={}\nfailed={failed}", exp.results.len());
    out
}

pub fn timestamp_line() -> String {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("# smkl experiment report, generated at unix time {secs}\n")
}

/// Files written by [`run_experiment`].
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub out_dir: PathBuf,
    pub points: usize,
    pub failed: usize,
}

/// Loads inputs, runs the grid, and writes `report.txt`, `report.csv`,
/// `labels.txt` and, when requested, `S.csv` and `K.csv` for the best point.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<RunOutput> {
    let exp = run_grid(spec)?;
    let dir = &spec.out_dir;
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.clone(),
        source: e,
    })?;
    let report_path = dir.join("report.txt");
    let text = timestamp_line() + &report_body(spec, &exp);
    fs::write(&report_path, text).map_err(|e| Error::Io {
        path: report_path,
        source: e,
    })?;
    emit_sweep_table(dir.join("report.csv"), &exp.results, &exp.best)?;

    if let Some(b) = exp.overall_best() {
        let r = &exp.results[b];
        if let Ok(m) = &r.outcome {
            write_labels(dir.join("labels.txt"), &m.labels)?;
        }
        if spec.save_matrices {
            let (fit, _) = fit_point(spec, &exp.prepared, &r.point, 0)?;
            write_matrix(dir.join("S.csv"), fit.s(), ',')?;
            write_matrix(dir.join("K.csv"), &fit.k, ',')?;
        }
    }
    Ok(RunOutput {
        out_dir: dir.clone(),
        points: exp.results.len(),
        failed: exp.failures(),
    })
}
