//! Deterministic seeding, the worker pool, and CSV/metadata output.
//!
//! Every random quantity in an experiment is drawn from a stream derived as
//! `hash(master seed, stream index)`, so results are bit-identical for a
//! given (config, seed) regardless of the worker count.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use sha2::{Digest, Sha256};

use crate::{Error, Result};

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Derives an independent seed for the given stream index.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    splitmix64(master ^ splitmix64(stream))
}

/// A ChaCha stream for one (master, stream) pair.
pub fn rng_for(master: u64, stream: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(derive_seed(master, stream))
}

/// Maps `f` over `0..count` with up to `workers` threads; the output order
/// is the index order, so results do not depend on scheduling.
pub fn parallel_indexed_map<T, F>(count: usize, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
{
    let workers = workers.max(1).min(count.max(1));
    if workers <= 1 {
        return (0..count).map(&f).collect();
    }
    let slots: Vec<Mutex<Option<Result<T>>>> = (0..count).map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for worker in 0..workers {
            let f = &f;
            let slots = &slots;
            scope.spawn(move || {
                let mut index = worker;
                while index < count {
                    let value = f(index);
                    *slots[index].lock().expect("result slot") = Some(value);
                    index += workers;
                }
            });
        }
    });
    slots
        .into_iter()
        .map(|slot| slot.into_inner().expect("result slot").expect("worker filled slot"))
        .collect()
}

/// Shortest round-trip decimal form of a float; deterministic per bit
/// pattern.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v}")
    }
}

/// Writes a CSV file with a header row.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        if row.len() != header.len() {
            return Err(Error::Numerical(format!(
                "csv row with {} fields under a {}-field header",
                row.len(),
                header.len()
            )));
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}

/// Writes the metadata sidecar: config hash, seed and a revision
/// placeholder. Deterministic, so re-runs are bit-identical.
pub fn write_metadata(path: &Path, config_json: &str, seed: u64) -> Result<()> {
    let digest = Sha256::digest(config_json.as_bytes());
    let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    let meta = serde_json::json!({
        "config_sha256": hex,
        "git_revision": serde_json::Value::Null,
        "seed": seed,
    });
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, serde_json::to_string_pretty(&meta)?)?;
    Ok(())
}

/// Files produced by one experiment run.
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
    pub rows: usize,
}

/// RMSE and its standard error from per-circuit squared errors.
pub fn rmse_stats(squared_errors: &[f64]) -> (f64, f64) {
    let m = squared_errors.len() as f64;
    let mean = squared_errors.iter().sum::<f64>() / m;
    let var = squared_errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (m - 1.0).max(1.0);
    let se_mean = (var / m).sqrt();
    let rmse = mean.max(0.0).sqrt();
    let se = if rmse > 0.0 { se_mean / (2.0 * rmse) } else { 0.0 };
    (rmse, se)
}

/// `sqrt(mean(a)/mean(b))` with a delta-method standard error that accounts
/// for the covariance of the per-circuit squared errors.
pub fn rmse_ratio_stats(a_sq: &[f64], b_sq: &[f64]) -> (f64, f64) {
    let m = a_sq.len() as f64;
    let la = a_sq.iter().sum::<f64>() / m;
    let lb = b_sq.iter().sum::<f64>() / m;
    if la <= 0.0 || lb <= 0.0 {
        return (f64::NAN, f64::NAN);
    }
    let var_a = a_sq.iter().map(|e| (e - la).powi(2)).sum::<f64>() / (m - 1.0).max(1.0);
    let var_b = b_sq.iter().map(|e| (e - lb).powi(2)).sum::<f64>() / (m - 1.0).max(1.0);
    let cov = a_sq
        .iter()
        .zip(b_sq)
        .map(|(a, b)| (a - la) * (b - lb))
        .sum::<f64>()
        / (m - 1.0).max(1.0);
    let ratio = (la / lb).sqrt();
    let var_log = 0.25 * (var_a / (la * la) + var_b / (lb * lb) - 2.0 * cov / (la * lb)) / m;
    (ratio, ratio * var_log.max(0.0).sqrt())
}
