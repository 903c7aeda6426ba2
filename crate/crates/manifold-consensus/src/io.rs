//! Artifact serialization: full-precision float formatting, trajectory CSV,
//! matrix CSV, and atomic file writes.

use crate::algorithms::Trajectory;
use nalgebra::DMatrix;
use std::io::Write;
use std::path::Path;

/// Format a float with 17 significant digits in the C `%.17g` style: enough
/// digits to round-trip any f64 exactly, trailing zeros stripped, scientific
/// notation outside [1e-4, 1e17).
pub fn g17(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{:.16e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponential format");
    let exp: i32 = exp.parse().expect("exponent parses");
    if !(-4..17).contains(&exp) {
        let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
        format!("{mantissa}e{exp:+03}")
    } else {
        let decimals = (16 - exp).max(0) as usize;
        let fixed = format!("{:.*}", decimals, x);
        if fixed.contains('.') {
            fixed
                .trim_end_matches('0')
                .trim_end_matches('.')
                .to_string()
        } else {
            fixed
        }
    }
}

fn g17_opt(x: Option<f64>) -> String {
    match x {
        Some(v) => g17(v),
        None => "nan".to_string(),
    }
}

pub const TRAJECTORY_HEADER: &str =
    "iter,objective,euclid_err,manifold_err,finf_err,normalized_err,rgrad_norm,mean_drift";

/// Render a trajectory as CSV with a fixed header row. Missing
/// manifold-relative fields (outside-tube iterates) appear as `nan`.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::with_capacity(64 * (traj.records.len() + 1));
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for r in &traj.records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.iter,
            g17(r.objective),
            g17(r.euclid_err),
            g17_opt(r.manifold_err),
            g17_opt(r.finf_err),
            g17_opt(r.normalized_err),
            g17(r.rgrad_norm),
            g17_opt(r.mean_drift),
        ));
    }
    out
}

/// Row-major CSV of a dense matrix at full precision.
pub fn matrix_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| g17(m[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Write via a temporary file in the same directory plus rename, so readers
/// never observe a torn artifact.
pub fn atomic_write(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir)?;
    let file_name = path
        .file_name()
        .map(|n| n.to_string_lossy().to_string())
        .unwrap_or_else(|| "artifact".to_string());
    let tmp = dir.join(format!(".{}.tmp-{}", file_name, std::process::id()));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)
}
