//! File-level commands shared by the binary and the tests.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use unitroot::simkit::{generate_smith_model, simulate_var, SmithSpec};
use unitroot::Mat;

use crate::analysis::{analyze, Options};
use crate::error::{exit, CliError};
use crate::model::ModelFile;

pub fn write_output(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::io(path, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Builds `E(z) diag((1 - z)^d_i) F(z)` and returns it as a model file.
pub fn generate(
    degrees: &[usize],
    seed: u64,
    unimodular_degree: usize,
) -> Result<ModelFile, CliError> {
    let spec = SmithSpec {
        unimodular_degree,
        ..SmithSpec::new(degrees.to_vec(), seed)
    };
    let (p, _) = generate_smith_model(&spec)?;
    Ok(ModelFile::from_polynomial(&p))
}

/// Simulates the VAR with `Sigma = sigma^2 I` and returns CSV with a header.
pub fn simulate_csv(
    model: &ModelFile,
    t_len: usize,
    seed: u64,
    sigma: f64,
) -> Result<String, CliError> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(CliError::Usage(
            "--sigma must be finite and non-negative".into(),
        ));
    }
    let p = model.polynomial()?;
    let n = p.dim();
    let traj = simulate_var(&p, t_len, &(Mat::identity(n, n) * (sigma * sigma)), seed)?;
    let mut s = String::new();
    let header: Vec<String> = (1..=n).map(|i| format!("y{i}")).collect();
    let _ = writeln!(s, "t,{}", header.join(","));
    for (t, row) in traj.values.row_iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|x| format!("{x:.16e}")).collect();
        let _ = writeln!(s, "{},{}", t + 1, cells.join(","));
    }
    Ok(s)
}

/// Outcome of one model in batch mode.
#[derive(Debug)]
pub struct BatchItem {
    pub model: PathBuf,
    pub report: Option<PathBuf>,
    pub code: i32,
    pub message: String,
}

fn is_model_file(p: &Path) -> bool {
    let name = p.file_name().and_then(|s| s.to_str()).unwrap_or("");
    name.ends_with(".json") && !name.ends_with(".report.json")
}

/// Analyzes every `*.json` model in `dir` concurrently, writing
/// `<stem>.report.json` into `out_dir`. Items come back sorted by path.
pub fn batch(dir: &Path, out_dir: &Path, opts: &Options) -> Result<Vec<BatchItem>, CliError> {
    let mut models: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && is_model_file(p))
        .collect();
    models.sort();
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    Ok(models
        .par_iter()
        .map(|path| {
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("model");
            let target = out_dir.join(format!("{stem}.report.json"));
            let result = ModelFile::read(path)
                .and_then(|m| analyze(&m, opts))
                .and_then(|r| {
                    write_output(Some(&target), &r.to_json())?;
                    Ok(r)
                });
            match result {
                Ok(r) => BatchItem {
                    model: path.clone(),
                    report: Some(target),
                    code: r.exit_code(),
                    message: r.summary.clone(),
                },
                Err(e) => BatchItem {
                    model: path.clone(),
                    report: None,
                    code: e.exit_code(),
                    message: e.to_string(),
                },
            }
        })
        .collect())
}

/// Worst exit code: unsupported order over verification failure over error.
pub fn combined_exit(codes: impl IntoIterator<Item = i32>) -> i32 {
    codes.into_iter().fold(exit::OK, i32::max)
}
