use perpetuity_core::io::{read_sample, verify_manifest, write_grid, write_manifest, write_sample};
use perpetuity_core::montecarlo::mc_fixed_point_observed;
use perpetuity_core::{
    eta_moments, mc_fixed_point, quantize_family, r_delta, solve, AtomicDistribution,
    EmpiricalSample, Error, McConfig, MultiplierLaw, QuantizeSource, RDeltaConfig, SolverConfig,
};

fn half() -> AtomicDistribution {
    AtomicDistribution::point_mass(0.5).unwrap()
}

#[test]
fn monte_carlo_moments_match_recursion() {
    let rho = AtomicDistribution::from_pairs(&[(0.3, 0.5), (0.8, 0.5)]).unwrap();
    let m = 2.0;
    let exact = eta_moments(&rho, m, 4).unwrap();
    let s = mc_fixed_point(
        &rho,
        m,
        &McConfig {
            n_samples: 100_000,
            ..McConfig::new(41)
        },
    )
    .unwrap();
    let n = s.len() as f64;
    for k in 2..=4 {
        let p = k as f64;
        let se = s.std_of(|x| x.powf(p)) / n.sqrt();
        let z = (s.moment(p) - exact.moments[k]) / se;
        assert!(z.abs() < 4.0, "order {k}: z = {z}");
    }
}

#[test]
fn iteration_distances_decay_geometrically() {
    let rho = quantize_family(&QuantizeSource::Uniform01, 512).unwrap();
    let q = 1.5;
    let g = rho.mellin(q - 1.0);
    let cfg = McConfig {
        n_samples: 4_000,
        n_transform_iterations: 4,
        ..McConfig::new(9)
    };
    let mut iterates = vec![EmpiricalSample::constant(1.0, cfg.n_samples).unwrap()];
    mc_fixed_point_observed(&rho, 1.0, &cfg, |_, s| iterates.push(s.clone())).unwrap();
    let metric = RDeltaConfig {
        delta: q,
        quad_points: 1024,
        ..RDeltaConfig::default()
    };
    let d: Vec<f64> = iterates
        .windows(2)
        .map(|w| r_delta(&w[0], &w[1], &metric).unwrap().value)
        .collect();
    // the Monte Carlo floor is reached after a few steps; check the early decay
    for w in d.windows(2).take(2) {
        assert!(w[1] <= (g + 0.05) * w[0], "{d:?}");
    }
}

#[test]
fn artifacts_round_trip_and_detect_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let s = mc_fixed_point(
        &half(),
        1.0,
        &McConfig {
            n_samples: 2_000,
            n_transform_iterations: 5,
            ..McConfig::new(3)
        },
    )
    .unwrap();
    let path = dir.path().join("sample.csv");
    let mut entries = write_sample(&path, &s).unwrap();
    let grid = solve(&half(), 1.0, &SolverConfig::default()).unwrap();
    let gpath = dir.path().join("grid.csv");
    entries.push((gpath.clone(), write_grid(&gpath, &grid).unwrap()));
    write_manifest(dir.path(), &entries).unwrap();
    verify_manifest(dir.path()).unwrap();

    let back = read_sample(&path).unwrap();
    assert_eq!(back.values(), s.values());

    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines.remove(1);
    lines.reverse();
    std::fs::write(&path, lines.join("\n")).unwrap();
    assert!(matches!(read_sample(&path), Err(Error::Checksum { .. })));
    assert!(verify_manifest(dir.path()).is_err());
}

#[test]
fn solver_and_sampler_refuse_without_solution() {
    let boundary = AtomicDistribution::from_pairs(&[(0.5, 0.5), (2.0, 0.5)]).unwrap();
    assert!(matches!(
        solve(&boundary, 1.0, &SolverConfig::default()),
        Err(Error::ExistenceGate { .. })
    ));
    assert!(matches!(
        mc_fixed_point(&boundary, 1.0, &McConfig::new(1)),
        Err(Error::ExistenceGate { .. })
    ));
}
