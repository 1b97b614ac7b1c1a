use std::fs;
use std::path::PathBuf;

use serde_json::{json, Map, Value};

use perpetuity_core::io::{self, write_json};
use perpetuity_core::levy::levy_total_mass;
use perpetuity_core::metrics::{random_law_with_mean, ShotNoiseImage};
use perpetuity_core::moments::perpetuity_defect;
use perpetuity_core::seeds::derive_seed;
use perpetuity_core::{
    contraction_ratio, cross_oracle, eta_moments, levy_from_solution, mc_fixed_point,
    perpetuity_residual, r_delta, response_from_rho, sb_moments, solve as lst_solve,
    steutel_residual, AtomicDistribution, EmpiricalCdf, EmpiricalSample, GridSpec, MultiplierLaw,
    SolverConfig,
};

use crate::config::{Method, Settings};
use crate::CliError;

/// Output directory plus the hashes of everything written to it.
struct Run {
    dir: PathBuf,
    entries: Vec<(PathBuf, String)>,
}

impl Run {
    fn new(s: &Settings, command: &str) -> Result<Self, CliError> {
        let dir = s.run_dir(command);
        fs::create_dir_all(&dir).map_err(perpetuity_core::Error::from)?;
        let mut run = Self {
            dir,
            entries: Vec::new(),
        };
        let cfg = run.dir.join("config.txt");
        fs::write(&cfg, s.canonical(command)).map_err(perpetuity_core::Error::from)?;
        let h = io::sha256_file(&cfg)?;
        run.entries.push((cfg, h));
        Ok(run)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn json(&mut self, name: &str, v: &Value) -> Result<(), CliError> {
        let p = self.path(name);
        let h = write_json(&p, v)?;
        self.entries.push((p, h));
        Ok(())
    }

    fn file(&mut self, name: &str, h: String) {
        self.entries.push((self.path(name), h));
    }

    fn finish(self, code: u8) -> Result<u8, CliError> {
        io::write_manifest(&self.dir, &self.entries)?;
        println!("{}", self.dir.display());
        Ok(code)
    }
}

/// Writes a gate report and returns exit code 2 when no non-zero solution exists.
fn gate(rho: &AtomicDistribution, run: &mut Run) -> Result<Option<u8>, CliError> {
    let (ok, e) = perpetuity_core::diagnostics::existence_gate(rho);
    if ok {
        return Ok(None);
    }
    eprintln!("no non-zero solution: E log A = {e} is not negative");
    run.json("report.json", &json!({ "exists": false, "e_log_a": e }))?;
    Ok(Some(2))
}

fn moments_json(rho: &AtomicDistribution, m: f64, order: u32) -> Result<Value, CliError> {
    let mv = eta_moments(rho, m, order)?;
    Ok(json!({
        "values": mv.moments,
        "max_order": mv.max_order,
        "stop": mv.stop,
        "log_convex": mv.is_log_convex(1e-12),
    }))
}

pub fn diagnose(s: &Settings) -> Result<u8, CliError> {
    let rho = s.rho()?;
    let mut run = Run::new(s, "diagnose")?;
    let report = perpetuity_core::diagnose(&rho);
    run.json("report.json", &report.to_json())?;
    let table = report.to_table();
    let p = run.path("diagnostics.txt");
    fs::write(&p, &table).map_err(perpetuity_core::Error::from)?;
    run.file("diagnostics.txt", io::sha256_hex(table.as_bytes()));
    eprint!("{table}");
    run.finish(if report.exists { 0 } else { 2 })
}

pub fn response(s: &Settings) -> Result<u8, CliError> {
    let rho = s.rho()?;
    let lambda = s.lambda()?;
    let mut run = Run::new(s, "response")?;
    let h = response_from_rho(&rho, lambda)?;
    let hh = io::write_response(&run.path("response.csv"), &h)?;
    run.file("response.csv", hh);
    let curve = io::write_csv(
        &run.path("curve.csv"),
        &["u", "h"],
        h.curve_points().into_iter().map(|(u, v)| vec![u, v]),
    )?;
    run.file("curve.csv", curve);
    run.json(
        "report.json",
        &json!({
            "lambda": lambda,
            "steps": h.steps().len(),
            "support_end": h.support_end(),
            "lambda_int_h": h.power_integral(1.0),
            "lambda_int_h_log_h": h.entropy_integral(),
            "e_log_a": rho.log_moment(),
        }),
    )?;
    run.finish(0)
}

pub fn solve(s: &Settings) -> Result<u8, CliError> {
    let rho = s.rho()?;
    let m = s.mean()?;
    let method = s.method()?;
    let solver = s.solver()?;
    let order = s.moment_order()?;
    let mc = if method == Method::Lst {
        None
    } else {
        Some(s.mc()?)
    };
    let mut run = Run::new(s, "solve")?;
    if let Some(code) = gate(&rho, &mut run)? {
        return run.finish(code);
    }
    let mut report = Map::new();
    report.insert("method".into(), json!(s.raw("solve.method")));
    report.insert("mean".into(), json!(m));
    report.insert("moments".into(), moments_json(&rho, m, order)?);
    let mut code = 0;
    let mut grid = None;
    if method != Method::Mc {
        let g = lst_solve(&rho, m, &solver)?;
        let h = io::write_grid(&run.path("grid.csv"), &g)?;
        run.file("grid.csv", h);
        let s0 = g.s_points()[0];
        report.insert(
            "lst".into(),
            json!({
                "converged": g.converged,
                "iterations": g.iterations,
                "residual": g.residual,
                "extrapolated": g.extrapolated,
                "atom_at_zero": g.atom_at_zero,
                "midpoint_defect": g.midpoint_defect(&rho),
                "mean_from_grid": g.psi()[0] / s0,
            }),
        );
        if !g.converged {
            eprintln!(
                "solver stopped after {} iterations with residual {}",
                g.iterations, g.residual
            );
            code = 3;
        }
        grid = Some(g);
    }
    if let Some(mc) = mc {
        let sample = mc_fixed_point(&rho, m, &mc)?;
        run.entries
            .extend(io::write_sample(&run.path("sample.csv"), &sample)?);
        let n = sample.len() as f64;
        let zeros = sample.values().iter().filter(|&&v| v < 1e-9 * m).count() as f64 / n;
        report.insert(
            "mc".into(),
            json!({
                "n": sample.len(),
                "iterations": mc.n_transform_iterations,
                "seed": mc.master_seed,
                "chunk_size": mc.chunk_size,
                "mean": sample.mean(),
                "second_moment": sample.moment(2.0),
                "zero_fraction": zeros,
                "zero_fraction_se": (zeros * (1.0 - zeros) / n).sqrt(),
            }),
        );
        if let Some(g) = &grid {
            let coarse = lst_solve(
                &rho,
                m,
                &SolverConfig {
                    grid: GridSpec {
                        points: (solver.grid.points / 2).max(16),
                        ..solver.grid
                    },
                    ..solver
                },
            )?;
            let x = cross_oracle(&sample, g, &coarse);
            report.insert(
                "cross".into(),
                json!({ "sup_distance": x.sup_distance, "worst_ratio": x.worst_ratio, "pass": x.pass }),
            );
            let rows = (0..x.s.len())
                .map(|i| vec![x.s[i], x.lst[i], x.mc[i], x.mc_se[i], x.grid_error[i]]);
            let h = io::write_csv(
                &run.path("cross.csv"),
                &["s", "lst", "mc", "mc_se", "grid_error"],
                rows,
            )?;
            run.file("cross.csv", h);
        }
    }
    run.json("report.json", &Value::Object(report))?;
    run.finish(code)
}

pub fn moments(s: &Settings) -> Result<u8, CliError> {
    let rho = s.rho()?;
    let m = s.mean()?;
    let order = s.moment_order()?;
    let mut run = Run::new(s, "moments")?;
    if let Some(code) = gate(&rho, &mut run)? {
        return run.finish(code);
    }
    let mv = eta_moments(&rho, m, order)?;
    run.entries
        .extend(io::write_moments(&run.path("moments.csv"), &mv)?);
    let mut report = json!({
        "m": m,
        "max_order": mv.max_order,
        "stop": mv.stop,
        "moments": mv.moments,
        "log_convex": mv.is_log_convex(1e-12),
    });
    if mv.max_order >= 1 {
        let sb = sb_moments(&mv)?;
        run.entries
            .extend(io::write_moments(&run.path("sb_moments.csv"), &sb)?);
        report["sb_moments"] = json!(sb.moments);
        report["perpetuity_defect"] = json!(perpetuity_defect(&rho, &mv)?);
    }
    run.json("report.json", &report)?;
    run.finish(0)
}

pub fn levy(s: &Settings) -> Result<u8, CliError> {
    let rho = s.rho()?;
    let m = s.mean()?;
    let mc = s.mc()?;
    let n = s.levy_n()?;
    let probes = s.probes()?;
    let mut run = Run::new(s, "levy")?;
    if let Some(code) = gate(&rho, &mut run)? {
        return run.finish(code);
    }
    let mu = mc_fixed_point(&rho, m, &mc)?;
    let est = levy_from_solution(
        &rho,
        &mu,
        derive_seed(mc.master_seed, "levy", 0, 0),
        n,
        mc.chunk_size,
    )?;
    let h = io::write_cdf(&run.path("levy.csv"), &est.grid_x, &est.cdf)?;
    run.file("levy.csv", h);
    let st = steutel_residual(&EmpiricalCdf::new(&mu), &est, &probes)?;
    run.json(
        "steutel.json",
        &serde_json::to_value(&st).map_err(perpetuity_core::Error::from)?,
    )?;
    let m2 = eta_moments(&rho, m, 2)
        .ok()
        .filter(|v| v.max_order >= 2)
        .map(|v| v.moments[2]);
    run.json(
        "report.json",
        &json!({
            "total_mass": est.total_mass.map_or(json!("infinite"), |t| json!(t)),
            "total_mass_exact": levy_total_mass(&rho),
            "scale": est.scale,
            "mean": est.mean(),
            "mean_expected": m2.map(|m2| rho.mean() * m2 / m),
            "cdf_near_zero": est.cdf_at(1e-6 * m),
            "steutel_residual": st.residual,
            "n": n,
        }),
    )?;
    run.finish(0)
}

fn check(name: &str, pass: bool, value: f64, threshold: f64) -> Value {
    json!({ "name": name, "pass": pass, "value": value, "threshold": threshold })
}

pub fn verify(s: &Settings) -> Result<u8, CliError> {
    let rho = s.rho()?;
    let m = s.mean()?;
    let mc = s.mc()?;
    let negative = s.negative_control()?;
    let metric = s.metric()?;
    let q = s.q()?;
    let pairs = s.pairs()?;
    let steutel_tol = s.steutel_tol()?;
    let slack = s.contraction_slack()?;
    let probes = s.probes()?;
    let n_levy = s.levy_n()?;
    let mu: EmpiricalSample = match s.verify_sample() {
        Some(p) => io::read_sample(&p)?,
        None => {
            let (ok, _) = perpetuity_core::diagnostics::existence_gate(&rho);
            if ok {
                mc_fixed_point(&rho, m, &mc)?
            } else {
                EmpiricalSample::constant(m, 1)?
            }
        }
    };
    let mut run = Run::new(s, "verify")?;
    if let Some(code) = gate(&rho, &mut run)? {
        return run.finish(code);
    }
    let mut checks = Vec::new();

    let law = if negative {
        AtomicDistribution::point_mass(1.0)?
    } else {
        rho.clone()
    };
    let p = perpetuity_residual(
        &mu,
        &law,
        derive_seed(mc.master_seed, "verify_perpetuity", 0, 0),
        mc.chunk_size,
    )?;
    checks.push(check(
        "perpetuity_ks",
        p.ks_stat < 1.5 * p.critical_1pct,
        p.ks_stat,
        1.5 * p.critical_1pct,
    ));

    let est = levy_from_solution(
        &rho,
        &mu,
        derive_seed(mc.master_seed, "verify_levy", 0, 0),
        n_levy,
        mc.chunk_size,
    )?;
    let st = steutel_residual(&EmpiricalCdf::new(&mu), &est, &probes)?;
    checks.push(check(
        "steutel_residual",
        st.residual < steutel_tol,
        st.residual,
        steutel_tol,
    ));

    let g = rho.mellin(q - 1.0);
    if g < 1.0 {
        let cfg = perpetuity_core::RDeltaConfig { delta: q, ..metric };
        let mut worst: f64 = 0.0;
        for i in 0..pairs as u64 {
            let t1 = random_law_with_mean(mc.master_seed, 2 * i, m);
            let t2 = random_law_with_mean(mc.master_seed, 2 * i + 1, m);
            let r = contraction_ratio(&rho, &t1, &t2, q, &cfg, None)?;
            worst = worst.max(r.ratio);
        }
        checks.push(check(
            "contraction_max_ratio",
            worst <= g + slack,
            worst,
            g + slack,
        ));
    }
    let all_pass = checks.iter().all(|c| c["pass"] == json!(true));
    run.json(
        "verify.json",
        &json!({
            "negative_control": negative,
            "checks": checks,
            "all_pass": all_pass,
            "perpetuity": p,
            "steutel": st,
            "sample_n": mu.len(),
        }),
    )?;
    run.finish(if all_pass { 0 } else { 4 })
}

pub fn metric(s: &Settings) -> Result<u8, CliError> {
    let rho = s.rho()?;
    let m = s.mean()?;
    let q = s.q()?;
    let cfg = s.metric()?;
    let (t1, t2) = s.thetas(m)?;
    let mc = if s.raw("mc.seed").is_empty() {
        None
    } else {
        Some(s.mc()?)
    };
    let mut run = Run::new(s, "metric")?;
    if let Some(code) = gate(&rho, &mut run)? {
        return run.finish(code);
    }
    let g = rho.mellin(q - 1.0);
    if !(g < 1.0) {
        eprintln!("E A^(q-1) = {g} is not below 1; no contraction in r_q");
        run.json(
            "report.json",
            &json!({ "q": q, "bound_g": g, "contraction": false }),
        )?;
        return run.finish(2);
    }
    let r = contraction_ratio(&rho, &t1, &t2, q, &cfg, mc.as_ref())?;
    let mut v = serde_json::to_value(&r).map_err(perpetuity_core::Error::from)?;
    v["bound_is_derived"] = json!(true);
    let d = r_delta(
        &ShotNoiseImage {
            rho: &rho,
            theta: &t1,
        },
        &t1,
        &perpetuity_core::RDeltaConfig { delta: q, ..cfg },
    )?;
    v["r_theta1_to_image"] = json!(d.value);
    run.json("report.json", &v)?;
    run.finish(0)
}
