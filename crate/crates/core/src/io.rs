//! Artifact files: CSV tables, JSON reports, checksummed samples, manifests.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a file
//! read back reproduces the exact bits that were written.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::distributions::{Atom, AtomicDistribution, EmpiricalSample};
use crate::error::{Error, Result};
use crate::lst::LstGrid;
use crate::moments::MomentVector;
use crate::response::ResponseFunction;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    Ok(sha256_hex(&fs::read(path)?))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<String> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, bytes)?;
    Ok(sha256_hex(bytes))
}

/// Write a numeric table; returns the file's sha256.
pub fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> Result<String>
where
    I: IntoIterator<Item = Vec<f64>>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    write_bytes(path, &bytes)
}

/// Read a numeric table, checking the header. Errors name the offending line.
pub fn read_csv(path: &Path, header: &[&str]) -> Result<Vec<Vec<f64>>> {
    let text =
        fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let found: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if found != header {
        return Err(Error::Parse(format!(
            "{}: expected header {}, found {}",
            path.display(),
            header.join(","),
            found.join(",")
        )));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::Parse(format!("{} line {line}: {e}", path.display())))?;
        if rec.len() != header.len() {
            return Err(Error::Parse(format!(
                "{} line {line}: expected {} fields",
                path.display(),
                header.len()
            )));
        }
        let row = rec
            .iter()
            .map(|f| {
                f.parse::<f64>().map_err(|_| {
                    Error::Parse(format!(
                        "{} line {line}: '{f}' is not a number",
                        path.display()
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_json(path: &Path, value: &Value) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_bytes(path, s.as_bytes())
}

pub fn read_json(path: &Path) -> Result<Value> {
    let text =
        fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

/// `location,weight`.
pub fn write_atoms(path: &Path, rho: &AtomicDistribution) -> Result<String> {
    write_csv(
        path,
        &["location", "weight"],
        rho.atoms().iter().map(|a| vec![a.location, a.weight]),
    )
}

pub fn read_atoms(path: &Path) -> Result<AtomicDistribution> {
    let rows = read_csv(path, &["location", "weight"])?;
    for (i, r) in rows.iter().enumerate() {
        if !(r[0] > 0.0 && r[0].is_finite()) || !(r[1] > 0.0 && r[1].is_finite()) {
            return Err(Error::Parse(format!(
                "{} line {}: location and weight must be positive, got {},{}",
                path.display(),
                i + 2,
                r[0],
                r[1]
            )));
        }
    }
    AtomicDistribution::new(rows.iter().map(|r| Atom::new(r[0], r[1])).collect())
}

/// `value,duration`.
pub fn write_response(path: &Path, h: &ResponseFunction) -> Result<String> {
    write_csv(
        path,
        &["value", "duration"],
        h.steps().iter().map(|s| vec![s.value, s.duration]),
    )
}

/// `s,psi,phi`.
pub fn write_grid(path: &Path, grid: &LstGrid) -> Result<String> {
    let rows = grid
        .s_points()
        .iter()
        .zip(grid.psi())
        .map(|(&s, &p)| vec![s, p, (-p).exp()]);
    write_csv(path, &["s", "psi", "phi"], rows)
}

/// `order,value` plus a sidecar `{m, max_order, marginal_flag}`; returns
/// both paths with their hashes.
pub fn write_moments(path: &Path, mv: &MomentVector) -> Result<Vec<(PathBuf, String)>> {
    let rows = mv
        .moments
        .iter()
        .enumerate()
        .map(|(n, &v)| vec![n as f64, v]);
    let h = write_csv(path, &["order", "value"], rows)?;
    let side = sidecar_path(path);
    let meta = serde_json::json!({ "m": mv.mean, "max_order": mv.max_order, "marginal_flag": mv.marginal() });
    let hs = write_json(&side, &meta)?;
    Ok(vec![(path.to_path_buf(), h), (side, hs)])
}

/// `x,cdf`.
pub fn write_cdf(path: &Path, x: &[f64], cdf: &[f64]) -> Result<String> {
    write_csv(
        path,
        &["x", "cdf"],
        x.iter().zip(cdf).map(|(&x, &c)| vec![x, c]),
    )
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSidecar {
    pub seed: u64,
    pub provenance: String,
    pub n: usize,
    pub sha256: String,
}

/// Single-column `value` CSV plus a sidecar recording seed, provenance and
/// the CSV's sha256.
pub fn write_sample(path: &Path, sample: &EmpiricalSample) -> Result<Vec<(PathBuf, String)>> {
    let h = write_csv(path, &["value"], sample.values().iter().map(|&v| vec![v]))?;
    let side = SampleSidecar {
        seed: sample.seed,
        provenance: sample.provenance.clone(),
        n: sample.len(),
        sha256: h.clone(),
    };
    let sp = sidecar_path(path);
    let hs = write_json(&sp, &serde_json::to_value(&side)?)?;
    Ok(vec![(path.to_path_buf(), h), (sp, hs)])
}

/// Read a sample, refusing it when the CSV no longer matches its sidecar.
pub fn read_sample(path: &Path) -> Result<EmpiricalSample> {
    let side: SampleSidecar = serde_json::from_value(read_json(&sidecar_path(path))?)?;
    let actual = sha256_file(path)?;
    if actual != side.sha256 {
        return Err(Error::Checksum {
            path: path.display().to_string(),
            expected: side.sha256,
            actual,
        });
    }
    let values: Vec<f64> = read_csv(path, &["value"])?
        .into_iter()
        .map(|r| r[0])
        .collect();
    if values.len() != side.n {
        return Err(Error::Parse(format!(
            "{}: sidecar says {} rows, found {}",
            path.display(),
            side.n,
            values.len()
        )));
    }
    EmpiricalSample::new(values, side.seed, side.provenance)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
}

/// Write `manifest.json` in `dir` listing `entries` by path relative to `dir`,
/// sorted.
pub fn write_manifest(dir: &Path, entries: &[(PathBuf, String)]) -> Result<PathBuf> {
    let mut list: Vec<ManifestEntry> = entries
        .iter()
        .map(|(p, h)| ManifestEntry {
            path: p
                .strip_prefix(dir)
                .unwrap_or(p)
                .to_string_lossy()
                .replace('\\', "/"),
            sha256: h.clone(),
        })
        .collect();
    list.sort_by(|a, b| a.path.cmp(&b.path));
    list.dedup();
    let path = dir.join("manifest.json");
    write_json(&path, &serde_json::to_value(&list)?)?;
    Ok(path)
}

pub fn read_manifest(dir: &Path) -> Result<Vec<ManifestEntry>> {
    Ok(serde_json::from_value(read_json(
        &dir.join("manifest.json"),
    )?)?)
}

/// Recompute every hash in a manifest; the first mismatch is an error.
pub fn verify_manifest(dir: &Path) -> Result<()> {
    for e in read_manifest(dir)? {
        let actual = sha256_file(&dir.join(&e.path))?;
        if actual != e.sha256 {
            return Err(Error::Checksum {
                path: e.path,
                expected: e.sha256,
                actual,
            });
        }
    }
    Ok(())
}
