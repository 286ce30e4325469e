use crate::config::ExperimentConfig;
use crate::{ConfigError, Outcome, RunError, Table};
use evh::evolve::{
    check_causality, check_causality_with, fine_scale_sweep, heat_problem, solve_with,
    temperature_error, DenseSystem, Direction, EvolutionProblem, HeatSetup, TimeGrid,
};
use evh::homog::{
    check_g_convergence, coarse_probes, heat_limit_system, homogenize_nullsplit, homogenize_p2,
    probed_inverse_limit, DiagonalOperator, HomogOptions, PeriodicField, DEFAULT_HEAT_PROBES,
};
use evh::json::sig6;
use evh::law::{
    certify as certify_law, matrix_from_doc, sample_positivity, MaterialLaw, MatrixDoc,
};
use evh::linalg::{c64, CMat, C64};
use evh::models::{
    self, build_thermopiezo_law, count_operator, kappa_by_id, preset_counterexample_compactness,
    preset_counterexample_positivity, preset_counterexample_range, scalar_pulse_problem, Condition,
    CountSetup, Preset, ThermopiezoBlocks,
};
use serde_json::json;
use std::path::Path;
use std::sync::Arc;

fn core<E: Into<evh::Error>>(e: E) -> RunError {
    RunError::Core(e.into())
}

fn need<T: Copy>(v: Option<T>, field: &str) -> Result<T, RunError> {
    v.ok_or_else(|| ConfigError::invalid(field, "required for this experiment").into())
}

fn to_value<T: serde::Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("serializable result")
}

fn read(path: &Path) -> Result<String, RunError> {
    std::fs::read_to_string(path).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))
}

fn load_law(path: &Path) -> Result<MaterialLaw, RunError> {
    MaterialLaw::from_json(&read(path)?).map_err(core)
}

fn load_matrix(path: &Path) -> Result<CMat, RunError> {
    let doc: MatrixDoc = serde_json::from_str(&read(path)?)
        .map_err(|e| ConfigError::invalid("operator", format!("{}: {e}", path.display())))?;
    let rows = doc.len();
    let cols = doc.first().map_or(0, Vec::len);
    matrix_from_doc(&doc, rows, cols).map_err(core)
}

fn options(cfg: &ExperimentConfig) -> HomogOptions {
    HomogOptions {
        ns: None,
        probe_tol: cfg.tolerances.probe_tol,
        rank_tol: cfg.tolerances.rank_tol,
        compat_tol: cfg.tolerances.compat_tol,
    }
}

fn complex_row(name: &str, v: C64) -> Vec<String> {
    vec![name.into(), sig6(v.re), sig6(v.im)]
}

/// Law sequence from files or a preset; the preset `periodic` also yields `A`
/// and its split.
fn sequence(cfg: &ExperimentConfig) -> Result<(Vec<MaterialLaw>, Option<(CMat, usize)>), RunError> {
    if let Some(paths) = &cfg.laws {
        let laws = paths
            .iter()
            .map(|p| load_law(p))
            .collect::<Result<_, _>>()?;
        return Ok((laws, None));
    }
    match cfg.preset.as_deref() {
        Some("periodic") => {
            let sizes = [2, 1, 2, 1];
            let (laws, a) =
                models::periodic_coupled_sequence(sizes, 8, cfg.rng_seed).map_err(core)?;
            Ok((laws, Some((a, sizes[0] + sizes[1]))))
        }
        Some(id @ ("positivity" | "range")) => match models::preset(id).map_err(core)? {
            Preset::Positivity(l) | Preset::Range(l) => Ok((l, None)),
            _ => unreachable!("catalog ids"),
        },
        _ => Err(ConfigError::invalid(
            "laws",
            "give law files or preset = periodic | positivity | range",
        )
        .into()),
    }
}

pub fn certify(cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
    let (law, c, d) = match (&cfg.law, cfg.preset.as_deref()) {
        (Some(p), _) => (load_law(p)?, need(cfg.c, "c")?, need(cfg.d, "d")?),
        (None, Some("tpz")) => {
            let t = build_thermopiezo_law(&ThermopiezoBlocks::identity(), Condition::I)
                .map_err(core)?;
            let (c, d) = (t.certificate.c, t.certificate.d);
            (t.law, cfg.c.unwrap_or(c), cfg.d.unwrap_or(d))
        }
        _ => return Err(ConfigError::invalid("law", "give a law file or preset = tpz").into()),
    };
    let cert = certify_law(&law, c, d).map_err(core)?;
    let samples = cfg.tolerances.positivity_samples;
    let check = sample_positivity(&law, &cert, samples, cfg.rng_seed);
    let mut table = Table::new("certificate", &["quantity", "value"]);
    for (k, v) in [
        ("c", cert.c),
        ("d", cert.d),
        ("eps", cert.eps),
        ("sup_bound", cert.sup_bound),
        ("nu1", cert.nu1),
        ("delta_hat", cert.delta_hat),
        ("r", cert.r),
        ("c_out", cert.c_out),
        ("nu_min", cert.nu_min()),
        ("default_nu", cert.default_nu()),
        ("min_margin", check.min_margin),
    ] {
        table.push(vec![k.into(), sig6(v)]);
    }
    if !check.passed {
        return Err(RunError::Check(format!(
            "Re z^-1 M(z) below c/3 at z = {:?} (margin {:e})",
            check.witness, check.min_margin
        )));
    }
    Ok(Outcome {
        result: json!({
            "certificate": to_value(&cert),
            "nu_min": cert.nu_min(),
            "default_nu": cert.default_nu(),
            "positivity": { "passed": check.passed, "min_margin": check.min_margin, "samples": samples },
        }),
        tables: vec![table],
    })
}

pub fn homogenize_ode(cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
    let (laws, _) = sequence(cfg)?;
    let lim = evh::homog::homogenize_ode(&laws, &options(cfg)).map_err(core)?;
    let mut table = Table::new("residuals", &["index", "residual"]);
    for (i, r) in lim.residuals.iter().enumerate() {
        table.push(vec![i.to_string(), sig6(*r)]);
    }
    Ok(Outcome {
        result: to_value(&lim),
        tables: vec![table],
    })
}

pub fn homogenize_pde(cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
    let (laws, generated) = sequence(cfg)?;
    let (a, split) = match generated {
        Some((a, split)) => (a, Some(split)),
        None => {
            let path = cfg
                .operator
                .as_ref()
                .ok_or_else(|| ConfigError::invalid("operator", "required with law files"))?;
            (load_matrix(path)?, cfg.split)
        }
    };
    let opts = options(cfg);
    let res = match split {
        Some(s) => homogenize_p2(&laws, &a, s, &opts),
        None => homogenize_nullsplit(&laws, &a, &opts),
    }
    .map_err(core)?;
    let mut table = Table::new("diagnostics", &["n", "eta_index", "probe_residual"]);
    for row in &res.diagnostics {
        table.push(vec![
            row.n.to_string(),
            row.eta_index.to_string(),
            sig6(row.probe_residual),
        ]);
    }
    Ok(Outcome {
        result: to_value(&res),
        tables: vec![table],
    })
}

pub fn heat_sweep(cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
    let kappa = kappa_by_id(cfg.kappa.as_deref().unwrap_or("two_phase_1_2")).map_err(core)?;
    let ladder = cfg
        .ladder_values()?
        .unwrap_or_else(|| vec![4, 8, 16, 32, 64]);
    let grid = cfg.grid.unwrap_or(1024);
    let sys = heat_limit_system(
        &kappa,
        grid,
        &ladder,
        cfg.probes.unwrap_or(DEFAULT_HEAT_PROBES),
    )
    .map_err(core)?;
    let mut setup = HeatSetup {
        cells: grid,
        ..Default::default()
    };
    if let Some(nu) = cfg.nu {
        setup.nu = nu;
    }
    if let Some(s) = cfg.samples {
        setup.grid = TimeGrid::new(setup.grid.t0, setup.grid.t1, s).map_err(core)?;
    }
    let errors: Option<Vec<f64>> = if cfg.solve.unwrap_or(true) {
        let hom = PeriodicField::constant(sys.k_eff).map_err(core)?;
        let reference = solve_with(
            &heat_problem(&hom, 1, &setup).map_err(core)?,
            &Default::default(),
        )
        .map_err(core)?;
        let runs = fine_scale_sweep(&kappa, &ladder, &setup).map_err(core)?;
        Some(
            runs.iter()
                .map(|r| temperature_error(r, &reference, &setup))
                .collect(),
        )
    } else {
        None
    };
    let decay = sys.correction_decay();
    let mut table = Table::new(
        "heat_levels",
        &[
            "n",
            "k_n",
            "q_block",
            "correction_norm",
            "correction_decay",
            "eta_defect",
            "temperature_error",
        ],
    );
    for (i, l) in sys.levels.iter().enumerate() {
        table.push(vec![
            l.n.to_string(),
            sig6(l.k_n),
            sig6(l.q_block),
            sig6(l.correction_norm),
            i.checked_sub(1).map(|j| sig6(decay[j])).unwrap_or_default(),
            sig6(l.eta_defect),
            errors.as_ref().map(|e| sig6(e[i])).unwrap_or_default(),
        ]);
    }
    let mut summary = Table::new("heat_summary", &["quantity", "value"]);
    summary.push(vec!["k_eff".into(), sig6(sys.k_eff)]);
    summary.push(vec!["harmonic_mean".into(), sig6(sys.harmonic)]);
    summary.push(vec!["rate".into(), sig6(sys.rate)]);
    let monotone = errors.as_ref().map(|e| e.windows(2).all(|w| w[1] < w[0]));
    Ok(Outcome {
        result: json!({
            "system": to_value(&sys),
            "k_eff": sys.k_eff,
            "harmonic_mean": sys.harmonic,
            "correction_decay": decay,
            "temperature_errors": errors,
            "errors_monotone": monotone,
            "setup": to_value(&setup),
        }),
        tables: vec![table, summary],
    })
}

pub fn counterexample(cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
    match cfg.preset.as_deref().unwrap_or("count_ai") {
        "count_ai" => count(cfg),
        "positivity" => positivity(cfg),
        "range" => range(cfg),
        other => Err(ConfigError::invalid(
            "preset",
            format!("{other:?} is not a counterexample preset"),
        )
        .into()),
    }
}

fn count(cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
    let grid = cfg.grid.unwrap_or(512);
    let n = cfg.n.unwrap_or(64);
    let probes = coarse_probes(grid, cfg.probes.unwrap_or(8)).map_err(core)?;
    let op = count_operator(grid, n).map_err(core)?;
    let eff = probed_inverse_limit(&op, &probes)
        .ok_or_else(|| RunError::Check("singular probe matrix".into()))?;
    let m = eff.nrows();
    let exact = c64(18.0 / 13.0, 14.0 / 13.0);
    let mean: C64 = (0..m).map(|i| eff[(i, i)]).sum::<C64>() / c64(m as f64, 0.0);
    let diag_err = (0..m)
        .map(|i| (eff[(i, i)] - exact).norm())
        .fold(0.0, f64::max);
    let off_diag = (0..m)
        .flat_map(|i| (0..m).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| eff[(i, j)].norm())
        .fold(0.0, f64::max);

    let ladder = match cfg.ladder_values()? {
        Some(l) => l,
        None => [n / 4, n / 2, n].into_iter().filter(|&k| k > 0).collect(),
    };
    let ops = ladder
        .iter()
        .map(|&k| count_operator(grid, k))
        .collect::<Result<Vec<_>, _>>()
        .map_err(core)?;
    let rhs: Vec<CMat> = (0..m.min(3))
        .map(|k| probes.columns(k, 1).into_owned())
        .collect();
    let naive = check_g_convergence(
        &ops,
        &DiagonalOperator(vec![c64(1.5, 1.0); grid]),
        &rhs,
        &probes,
    );
    let good = check_g_convergence(&ops, &DiagonalOperator(vec![exact; grid]), &rhs, &probes);

    let setup = CountSetup::default();
    let p = preset_counterexample_compactness(n, grid, &setup).map_err(core)?;
    let rep = solve_with(&p, &Default::default()).map_err(core)?;
    let j = setup.grid.samples / 2;
    let u_mean: C64 = (0..grid).map(|i| rep.u[(i, j)]).sum::<C64>() / c64(grid as f64, 0.0);
    let steady = u_mean / p.forcing[(0, j)];

    let mut table = Table::new("count", &["quantity", "re", "im"]);
    table.push(complex_row("effective", mean));
    table.push(complex_row("exact", exact));
    table.push(complex_row("arithmetic_mean", c64(1.5, 1.0)));
    table.push(complex_row("steady_response", steady));
    table.push(complex_row("inverse_average", c64(9.0 / 20.0, -7.0 / 20.0)));
    let mut g = Table::new(
        "gconv",
        &["candidate", "max_residual", "max_coefficient_gap"],
    );
    g.push(vec![
        "arithmetic_mean".into(),
        sig6(naive.max_residual),
        sig6(naive.max_coefficient_gap),
    ]);
    g.push(vec![
        "harmonic".into(),
        sig6(good.max_residual),
        sig6(good.max_coefficient_gap),
    ]);
    Ok(Outcome {
        result: json!({
            "grid": grid,
            "n": n,
            "effective": [mean.re, mean.im],
            "exact": [exact.re, exact.im],
            "max_diagonal_error": diag_err,
            "max_off_diagonal": off_diag,
            "steady_response": [steady.re, steady.im],
            "g_convergence": { "ladder": ladder, "arithmetic_mean": to_value(&naive), "harmonic": to_value(&good) },
        }),
        tables: vec![table, g],
    })
}

fn positivity(cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
    let ns = cfg.ladder_values()?.unwrap_or_else(|| (1..=8).collect());
    let nu = cfg.nu.unwrap_or(2.5);
    let samples = cfg.samples.unwrap_or(401);
    let mut table = Table::new("positivity", &["n", "norm_ratio", "c_prime"]);
    let mut rows = Vec::new();
    for &n in &ns {
        let law = preset_counterexample_positivity(n).map_err(core)?;
        let rep = solve_with(
            &scalar_pulse_problem(&law, &[c64(1.0, 0.0)], nu, samples).map_err(core)?,
            &Default::default(),
        )
        .map_err(core)?;
        let ratio = rep.weighted_norm_u / rep.weighted_norm_f;
        let c_prime = law
            .check_zero_order(1e-12)
            .map_err(core)?
            .c_prime
            .unwrap_or(f64::NAN);
        table.push(vec![n.to_string(), sig6(ratio), sig6(c_prime)]);
        rows.push(json!({ "n": n, "norm_ratio": ratio, "c_prime": c_prime }));
    }
    Ok(Outcome {
        result: json!({ "nu": nu, "levels": rows }),
        tables: vec![table],
    })
}

fn range(cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
    let dim = cfg.grid.unwrap_or(8);
    let ns = cfg.ladder_values()?.unwrap_or_else(|| (1..=dim).collect());
    let nu = cfg.nu.unwrap_or(2.5);
    let samples = cfg.samples.unwrap_or(401);
    let profile: Vec<C64> = (0..dim).map(|i| c64(1.0 + i as f64, 0.5)).collect();
    let mut table = Table::new(
        "range",
        &["n", "max_probe_residual", "moved_component_ratio"],
    );
    let mut rows = Vec::new();
    for &n in &ns {
        let law = preset_counterexample_range(dim, n).map_err(core)?;
        let p = scalar_pulse_problem(&law, &profile, nu, samples).map_err(core)?;
        let rep = solve_with(&p, &Default::default()).map_err(core)?;
        let row = |x: &CMat, m: usize| x.rows(m, 1).into_owned();
        let wn = |x: &CMat| p.grid.weighted_norm(x, nu, f64::INFINITY);
        let residual = (0..n - 1)
            .map(|m| wn(&(row(&rep.u, m) - row(&p.forcing, m))) / wn(&row(&p.forcing, m)))
            .fold(0.0, f64::max);
        let moved = wn(&row(&rep.u, n - 1)) / wn(&row(&p.forcing, n - 1));
        table.push(vec![n.to_string(), sig6(residual), sig6(moved)]);
        rows.push(
            json!({ "n": n, "max_probe_residual": residual, "moved_component_ratio": moved }),
        );
    }
    Ok(Outcome {
        result: json!({ "dim": dim, "nu": nu, "illustration": true, "levels": rows }),
        tables: vec![table],
    })
}

pub fn causality(cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
    let (p, at) = match (&cfg.law, cfg.preset.as_deref().unwrap_or("random")) {
        (Some(path), _) => {
            let law = load_law(path)?;
            let a = match &cfg.operator {
                Some(op) => load_matrix(op)?,
                None => evh::linalg::zeros(law.rows(), law.rows()),
            };
            let cert = match (cfg.c, cfg.d) {
                (Some(c), Some(d)) => Some(certify_law(&law, c, d).map_err(core)?),
                _ => None,
            };
            let nu = match (cfg.nu, &cert) {
                (Some(nu), _) => nu,
                (None, Some(c)) => c.default_nu(),
                (None, None) => {
                    return Err(
                        ConfigError::invalid("nu", "give nu or the constants c and d").into(),
                    )
                }
            };
            let grid = TimeGrid::new(-4.0, 14.0, cfg.samples.unwrap_or(1801)).map_err(core)?;
            let profile = vec![c64(1.0, 0.0); law.rows()];
            let f = EvolutionProblem::separable_forcing(&grid, &profile, |t| {
                (-(t - 4.0) * (t - 4.0)).exp()
            });
            let sys = DenseSystem::new(a, law).map_err(core)?;
            let p = EvolutionProblem::new(Arc::new(sys), grid, nu, f, cert).map_err(core)?;
            (p, cfg.at.unwrap_or(4.0))
        }
        (None, "random") => {
            let rp = models::random_certified_problem(cfg.grid.unwrap_or(4), cfg.rng_seed)
                .map_err(core)?;
            (rp.problem, cfg.at.unwrap_or(rp.center))
        }
        (None, "heat1d") => {
            let kappa =
                kappa_by_id(cfg.kappa.as_deref().unwrap_or("two_phase_1_2")).map_err(core)?;
            let setup = HeatSetup {
                cells: cfg.grid.unwrap_or(1024),
                ..Default::default()
            };
            let p = heat_problem(&kappa, cfg.n.unwrap_or(4), &setup).map_err(core)?;
            (p, cfg.at.unwrap_or(setup.pulse_center))
        }
        (None, "count_ai") => {
            let setup = CountSetup::default();
            let p = preset_counterexample_compactness(
                cfg.n.unwrap_or(64),
                cfg.grid.unwrap_or(512),
                &setup,
            )
            .map_err(core)?;
            (p, cfg.at.unwrap_or(6.0))
        }
        (None, other) => {
            return Err(ConfigError::invalid(
                "preset",
                format!("{other:?}: use random, heat1d, count_ai or a law"),
            )
            .into())
        }
    };
    let causal = check_causality(&p, at).map_err(core)?;
    let anti = check_causality_with(&p, at, Direction::AntiCausal).map_err(core)?;
    let mut table = Table::new("causality", &["direction", "residual"]);
    table.push(vec!["causal".into(), sig6(causal)]);
    table.push(vec!["anti_causal".into(), sig6(anti)]);
    if causal > cfg.tolerances.causality {
        return Err(RunError::Check(format!(
            "causality residual {causal:e} above {:e}",
            cfg.tolerances.causality
        )));
    }
    Ok(Outcome {
        result: json!({
            "at": at,
            "nu": p.nu,
            "dim": p.system.dim(),
            "samples": p.grid.samples,
            "causal_residual": causal,
            "anti_causal_residual": anti,
        }),
        tables: vec![table],
    })
}
