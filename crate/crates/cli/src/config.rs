//! Run configuration: flat `key=value` lines with dotted section prefixes.
//!
//! Precedence is built-in defaults, then the config file, then command-line
//! overrides. Setting any `rho.*` source on the command line discards the
//! file's source so the two never conflict.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use perpetuity_core::io::sha256_file;
use perpetuity_core::{
    quantize_family, AtomicDistribution, Family, GridSpec, McConfig, QuantizeSource, RDeltaConfig,
    SolverConfig,
};

use crate::CliError;

/// Every accepted key with its default (`""` means unset).
pub const KEYS: &[(&str, &str)] = &[
    ("rho.atoms", ""),
    ("rho.family", ""),
    ("rho.n", "512"),
    ("rho.csv", ""),
    ("mean", "1"),
    ("response.lambda", "1"),
    ("solver.s_min", "0.001"),
    ("solver.s_max", "1000"),
    ("solver.points", "512"),
    ("solver.tol", "1e-13"),
    ("solver.max_iter", "100000"),
    ("mc.n", "200000"),
    ("mc.iterations", "40"),
    ("mc.seed", ""),
    ("mc.chunk_size", "16384"),
    ("metric.delta", "1.5"),
    ("metric.q", "1.5"),
    ("metric.s_lo", "0.0001"),
    ("metric.s_hi", "10000"),
    ("metric.points", "2048"),
    ("metric.theta1", ""),
    ("metric.theta2", ""),
    ("moments.order", "6"),
    ("levy.n", "200000"),
    ("levy.probes", "0.5,1,2,4"),
    ("verify.sample", ""),
    ("verify.pairs", "20"),
    ("verify.steutel_tol", "0.01"),
    ("verify.contraction_slack", "0.05"),
    ("verify.negative_control", "false"),
    ("solve.method", "lst"),
    ("output.dir", "perpetuity-out"),
];

const RHO_SOURCES: [&str; 3] = ["rho.atoms", "rho.family", "rho.csv"];

/// Effective key/value map, in canonical (sorted) order.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

fn known(key: &str) -> bool {
    KEYS.iter().any(|(k, _)| *k == key)
}

fn parse_line(line: &str, origin: &str) -> Result<Option<(String, String)>, CliError> {
    let t = line.trim();
    if t.is_empty() || t.starts_with('#') {
        return Ok(None);
    }
    let (k, v) = t
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("{origin}: expected key=value, got '{t}'")))?;
    let (k, v) = (k.trim(), v.trim());
    if !known(k) {
        return Err(CliError::Config(format!("{origin}: unknown key '{k}'")));
    }
    Ok(Some((k.to_string(), v.to_string())))
}

impl Settings {
    pub fn load(file: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        let mut values: BTreeMap<String, String> = KEYS
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        if let Some(path) = file {
            let text = fs::read_to_string(path).map_err(|e| {
                CliError::Config(format!("cannot read config {}: {e}", path.display()))
            })?;
            for (i, line) in text.lines().enumerate() {
                if let Some((k, v)) =
                    parse_line(line, &format!("{} line {}", path.display(), i + 1))?
                {
                    values.insert(k, v);
                }
            }
        }
        let mut parsed = Vec::new();
        for (i, o) in overrides.iter().enumerate() {
            if let Some(kv) = parse_line(o, &format!("override {}", i + 1))? {
                parsed.push(kv);
            }
        }
        if parsed
            .iter()
            .any(|(k, _)| RHO_SOURCES.contains(&k.as_str()))
        {
            for k in RHO_SOURCES {
                values.insert(k.to_string(), String::new());
            }
        }
        values.extend(parsed);
        Ok(Self { values })
    }

    pub fn raw(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or("")
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<T, CliError> {
        let v = self.raw(key);
        v.parse()
            .map_err(|_| CliError::Config(format!("field {key}: cannot parse '{v}'")))
    }

    fn positive(&self, key: &str) -> Result<f64, CliError> {
        let v: f64 = self.get(key)?;
        if !(v > 0.0 && v.is_finite()) {
            return Err(CliError::Config(format!(
                "field {key}: {v} must be positive"
            )));
        }
        Ok(v)
    }

    fn count(&self, key: &str) -> Result<usize, CliError> {
        let v: usize = self.get(key)?;
        if v == 0 {
            return Err(CliError::Config(format!("field {key}: must be at least 1")));
        }
        Ok(v)
    }

    fn list(&self, key: &str) -> Result<Vec<f64>, CliError> {
        self.raw(key)
            .split(',')
            .map(|p| {
                p.trim().parse::<f64>().map_err(|_| {
                    CliError::Config(format!("field {key}: cannot parse '{}'", p.trim()))
                })
            })
            .collect()
    }

    fn atoms(&self, key: &str) -> Result<AtomicDistribution, CliError> {
        let mut pairs = Vec::new();
        for part in self.raw(key).split(',') {
            let (x, w) = part.split_once(':').ok_or_else(|| {
                CliError::Config(format!(
                    "field {key}: expected location:weight, got '{part}'"
                ))
            })?;
            let x: f64 = x
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("field {key}: bad location '{x}'")))?;
            let w: f64 = w
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("field {key}: bad weight '{w}'")))?;
            pairs.push((x, w));
        }
        AtomicDistribution::from_pairs(&pairs)
            .map_err(|e| CliError::Config(format!("field {key}: {e}")))
    }

    pub fn mean(&self) -> Result<f64, CliError> {
        self.positive("mean")
    }

    pub fn lambda(&self) -> Result<f64, CliError> {
        self.positive("response.lambda")
    }

    pub fn rho(&self) -> Result<AtomicDistribution, CliError> {
        let set: Vec<&str> = RHO_SOURCES
            .iter()
            .copied()
            .filter(|k| !self.raw(k).is_empty())
            .collect();
        match set.as_slice() {
            ["rho.atoms"] => self.atoms("rho.atoms"),
            ["rho.family"] => {
                let family: Family = self
                    .raw("rho.family")
                    .parse()
                    .map_err(|e| CliError::Config(format!("field rho.family: {e}")))?;
                let n = self.count("rho.n")?;
                let source = match family {
                    Family::Uniform01 => QuantizeSource::Uniform01,
                };
                quantize_family(&source, n)
                    .map_err(|e| CliError::Config(format!("field rho.n: {e}")))
            }
            ["rho.csv"] => perpetuity_core::io::read_atoms(Path::new(self.raw("rho.csv")))
                .map_err(|e| CliError::Config(format!("field rho.csv: {e}"))),
            [] => Err(CliError::Config(
                "no multiplier law: set one of rho.atoms, rho.family, rho.csv".into(),
            )),
            many => Err(CliError::Config(format!(
                "conflicting multiplier law sources: {}",
                many.join(", ")
            ))),
        }
    }

    pub fn solver(&self) -> Result<SolverConfig, CliError> {
        let points: usize = self.get("solver.points")?;
        Ok(SolverConfig {
            grid: GridSpec {
                s_min: self.positive("solver.s_min")?,
                s_max: self.positive("solver.s_max")?,
                points,
            },
            tol: self.positive("solver.tol")?,
            max_iter: self.count("solver.max_iter")?,
        })
    }

    /// Monte Carlo settings; the seed is mandatory.
    pub fn mc(&self) -> Result<McConfig, CliError> {
        if self.raw("mc.seed").is_empty() {
            return Err(CliError::Config(
                "field mc.seed: required for commands that sample".into(),
            ));
        }
        Ok(McConfig {
            n_samples: self.count("mc.n")?,
            n_transform_iterations: self.count("mc.iterations")?,
            master_seed: self.get("mc.seed")?,
            chunk_size: self.count("mc.chunk_size")?,
        })
    }

    pub fn metric(&self) -> Result<RDeltaConfig, CliError> {
        Ok(RDeltaConfig {
            delta: self.get("metric.delta")?,
            s_lo: self.positive("metric.s_lo")?,
            s_hi: self.positive("metric.s_hi")?,
            quad_points: self.count("metric.points")?,
        })
    }

    pub fn q(&self) -> Result<f64, CliError> {
        self.get("metric.q")
    }

    /// Trial laws for `metric`: configured atoms, or `delta_m` against
    /// `{(m/2, 1/2), (3m/2, 1/2)}`.
    pub fn thetas(&self, m: f64) -> Result<(AtomicDistribution, AtomicDistribution), CliError> {
        let t1 = if self.raw("metric.theta1").is_empty() {
            AtomicDistribution::point_mass(m).map_err(|e| CliError::Config(e.to_string()))?
        } else {
            self.atoms("metric.theta1")?
        };
        let t2 = if self.raw("metric.theta2").is_empty() {
            AtomicDistribution::from_pairs(&[(0.5 * m, 0.5), (1.5 * m, 0.5)])
                .map_err(|e| CliError::Config(e.to_string()))?
        } else {
            self.atoms("metric.theta2")?
        };
        Ok((t1, t2))
    }

    pub fn moment_order(&self) -> Result<u32, CliError> {
        self.get("moments.order")
    }

    pub fn levy_n(&self) -> Result<usize, CliError> {
        self.count("levy.n")
    }

    pub fn probes(&self) -> Result<Vec<f64>, CliError> {
        self.list("levy.probes")
    }

    pub fn verify_sample(&self) -> Option<PathBuf> {
        let v = self.raw("verify.sample");
        (!v.is_empty()).then(|| PathBuf::from(v))
    }

    pub fn pairs(&self) -> Result<usize, CliError> {
        self.count("verify.pairs")
    }

    pub fn steutel_tol(&self) -> Result<f64, CliError> {
        self.positive("verify.steutel_tol")
    }

    pub fn contraction_slack(&self) -> Result<f64, CliError> {
        self.get("verify.contraction_slack")
    }

    pub fn negative_control(&self) -> Result<bool, CliError> {
        self.get("verify.negative_control")
    }

    pub fn method(&self) -> Result<Method, CliError> {
        match self.raw("solve.method") {
            "lst" => Ok(Method::Lst),
            "mc" => Ok(Method::Mc),
            "both" => Ok(Method::Both),
            other => Err(CliError::Config(format!(
                "field solve.method: unknown method '{other}'"
            ))),
        }
    }

    /// Canonical text of the effective configuration; referenced files
    /// contribute their content hash.
    pub fn canonical(&self, command: &str) -> String {
        let mut s = format!("command={command}\n");
        for (k, v) in &self.values {
            if k == "output.dir" {
                continue;
            }
            s.push_str(&format!("{k}={v}\n"));
            if (k == "rho.csv" || k == "verify.sample") && !v.is_empty() {
                let h = sha256_file(Path::new(v)).unwrap_or_else(|_| "missing".into());
                s.push_str(&format!("{k}.sha256={h}\n"));
            }
        }
        s
    }

    /// `<output.dir>/<command>-<first 16 hex of the canonical hash>`.
    pub fn run_dir(&self, command: &str) -> PathBuf {
        let h = perpetuity_core::io::sha256_hex(self.canonical(command).as_bytes());
        Path::new(self.raw("output.dir")).join(format!("{command}-{}", &h[..16]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Lst,
    Mc,
    Both,
}
