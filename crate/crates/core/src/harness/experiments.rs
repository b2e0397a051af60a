//! The experiment runners behind the CLI: each consumes a validated config,
//! sweeps the family grid, and writes CSV results with a metadata sidecar.

use std::path::PathBuf;
use std::sync::Arc;

use rand::Rng;

use crate::circuit::{
    bind_near_one_fc, bind_random_clifford, bind_random_unitary, build_frame, Circuit,
    CircuitFrame, FrameElement,
};
use crate::density::{self, MAX_DENSITY_QUBITS};
use crate::harness::config::{ExperimentConfig, ExperimentKind, WeightingMode};
use crate::harness::runner::{
    derive_seed, fmt_f64, parallel_indexed_map, rmse_ratio_stats, rmse_stats, rng_for,
    write_csv, write_metadata, RunSummary,
};
use crate::ics::{
    self, default_burn_in, default_proposal, estimate_phenomenological, weighted_moments,
    SlotPattern,
};
use crate::mitigation::{
    self, optimize_pec_lambda, pec_training_stats, train_vd_pemi, MitigationFormula,
};
use crate::noise::{self, NoiseModel};
use crate::pauli::Pauli;
use crate::stabilizer;
use crate::{Error, Result};

/// Runs the configured experiment and writes its output files.
pub fn run_experiment(config: &ExperimentConfig, workers: usize) -> Result<RunSummary> {
    config.validate()?;
    match config.experiment {
        ExperimentKind::EpsilonHistogram => run_epsilon_histogram(config, workers),
        ExperimentKind::ScalingSweep => run_scaling_sweep(config, workers),
        ExperimentKind::GateDependentSweep => run_gate_dependent_sweep(config, workers),
        ExperimentKind::FormulaComparison => run_formula_comparison(config, workers),
        ExperimentKind::ErrorPropagation => run_error_propagation(config, workers),
        ExperimentKind::Feasibility => run_feasibility(config, workers),
        ExperimentKind::FcDependence => run_fc_dependence(config, workers),
    }
}

fn output_paths(config: &ExperimentConfig) -> (PathBuf, PathBuf) {
    let name = config.experiment.name();
    (
        config.output_path.join(format!("{name}.csv")),
        config.output_path.join(format!("{name}.meta.json")),
    )
}

fn finish(
    config: &ExperimentConfig,
    header: &[&str],
    rows: Vec<Vec<String>>,
    extra_files: Vec<PathBuf>,
) -> Result<RunSummary> {
    let (csv_path, meta_path) = output_paths(config);
    let row_count = rows.len();
    write_csv(&csv_path, header, &rows)?;
    write_metadata(&meta_path, &config.to_json(), config.seed)?;
    let mut files = vec![csv_path, meta_path];
    files.extend(extra_files);
    Ok(RunSummary { files, rows: row_count })
}

fn point_seed(config: &ExperimentConfig, point: usize) -> u64 {
    derive_seed(config.seed, point as u64)
}

/// Noisy expectation through the cheapest exact route: the stabilizer
/// engine for Clifford circuits under Pauli-compatible models, the density
/// simulator otherwise.
pub fn expectation_auto(circuit: &Circuit, model: &NoiseModel) -> Result<f64> {
    density::noisy_expectation(circuit, model)
}

struct EsTrainingData {
    samples: Vec<ics::EsSample>,
    f: Vec<f64>,
    weights: Vec<f64>,
}

fn draw_training_set(
    frame: &Arc<CircuitFrame>,
    count: usize,
    seed: u64,
) -> Result<EsTrainingData> {
    let mut rng = rng_for(seed, 0);
    let samples = ics::sample_nonuniform(frame, count, &mut rng)?;
    let f = samples.iter().map(|s| f64::from(s.f)).collect();
    let weights = samples.iter().map(|s| s.weight_factor).collect();
    Ok(EsTrainingData { samples, f, weights })
}

// --- epsilon histogram (f^2-weighted effective-rate distribution) ---------

fn run_epsilon_histogram(config: &ExperimentConfig, workers: usize) -> Result<RunSummary> {
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut binned_rows: Vec<Vec<String>> = Vec::new();
    for (point, (n, count)) in config.family.points().into_iter().enumerate() {
        if n > MAX_DENSITY_QUBITS {
            eprintln!("warning: skipping grid point n = {n} beyond the density cap");
            continue;
        }
        let seed = point_seed(config, point);
        let frame = Arc::new(build_frame(&config.family.family(n, count, derive_seed(seed, 0)))?);
        let samples = weighted_unitary_rates(
            &frame,
            &config.noise,
            config.n_test,
            config.weighting,
            derive_seed(seed, 1),
            workers,
        )?;
        let rates: Vec<f64> = samples.iter().map(|s| s.0).collect();
        let weights: Vec<f64> = samples.iter().map(|s| s.1).collect();
        for &(rate, weight) in &samples {
            rows.push(vec![
                "sample".into(),
                n.to_string(),
                count.to_string(),
                fmt_f64(rate),
                fmt_f64(weight),
            ]);
        }
        let moments = weighted_moments(&rates, Some(&weights))?;
        rows.push(vec![
            "mean".into(),
            n.to_string(),
            count.to_string(),
            fmt_f64(moments.mean),
            fmt_f64(weights.iter().sum()),
        ]);
        rows.push(vec![
            "std".into(),
            n.to_string(),
            count.to_string(),
            fmt_f64(moments.sd),
            fmt_f64(weights.iter().sum()),
        ]);

        // Uniform bins over the observed range.
        let lo = rates.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = rates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let width = ((hi - lo) / config.bins as f64).max(f64::MIN_POSITIVE);
        let mut bin_weight = vec![0.0f64; config.bins];
        let mut bin_count = vec![0usize; config.bins];
        for &(rate, weight) in &samples {
            let bin = (((rate - lo) / width) as usize).min(config.bins - 1);
            bin_weight[bin] += weight;
            bin_count[bin] += 1;
        }
        for bin in 0..config.bins {
            binned_rows.push(vec![
                n.to_string(),
                count.to_string(),
                fmt_f64(lo + bin as f64 * width),
                fmt_f64(lo + (bin + 1) as f64 * width),
                fmt_f64(bin_weight[bin]),
                bin_count[bin].to_string(),
            ]);
        }
    }
    let binned_path = config
        .output_path
        .join(format!("{}_binned.csv", config.experiment.name()));
    write_csv(
        &binned_path,
        &["n", "N", "bin_lo", "bin_hi", "weight", "count"],
        &binned_rows,
    )?;
    finish(
        config,
        &["record", "n", "N", "eps_c", "weight"],
        rows,
        vec![binned_path],
    )
}

/// Draws random unitary circuits with the `f^2` weighting realised either
/// by rejection or by carrying the weight, and returns their effective
/// depolarising rates `1 - y/f`.
fn weighted_unitary_rates(
    frame: &Arc<CircuitFrame>,
    model: &NoiseModel,
    target: usize,
    weighting: WeightingMode,
    seed: u64,
    workers: usize,
) -> Result<Vec<(f64, f64)>> {
    let circuit_of = |index: usize| -> (Circuit, f64, f64) {
        let mut rng = rng_for(seed, index as u64);
        let circuit = bind_random_unitary(frame, &mut rng);
        let f = density::ideal_unitary_expectation(&circuit).expect("statevector evaluation");
        let u: f64 = rng.random();
        (circuit, f, u)
    };
    let rate_of = |circuit: &Circuit, f: f64| -> Result<f64> {
        let state = density::run(circuit, model)?;
        let y = state.expectation(circuit.observable())?;
        Ok(1.0 - y / f)
    };
    match weighting {
        WeightingMode::Rejection => {
            let mut accepted: Vec<(Circuit, f64)> = Vec::with_capacity(target);
            let max_attempts = target.saturating_mul(20_000).max(100_000);
            let batch = 512;
            let mut next = 0usize;
            while accepted.len() < target && next < max_attempts {
                let upper = (next + batch).min(max_attempts);
                let drawn = parallel_indexed_map(upper - next, workers, |k| {
                    let (circuit, f, u) = circuit_of(next + k);
                    Ok((circuit, f, u))
                })?;
                for (circuit, f, u) in drawn {
                    if u < f * f && accepted.len() < target {
                        accepted.push((circuit, f));
                    }
                }
                next = upper;
            }
            if accepted.len() < target {
                return Err(Error::Numerical(format!(
                    "rejection sampling accepted only {} of {target} circuits",
                    accepted.len()
                )));
            }
            parallel_indexed_map(accepted.len(), workers, |i| {
                let (circuit, f) = &accepted[i];
                Ok((rate_of(circuit, *f)?, 1.0))
            })
        }
        WeightingMode::Reweighted => {
            let raw = parallel_indexed_map(target, workers, |i| {
                let (circuit, f, _) = circuit_of(i);
                if f.abs() < 1e-9 {
                    return Ok(None);
                }
                Ok(Some((rate_of(&circuit, f)?, f * f)))
            })?;
            Ok(raw.into_iter().flatten().collect())
        }
    }
}

// --- scaling sweep (RMSE before/after optimised rescaling) ----------------

fn run_scaling_sweep(config: &ExperimentConfig, workers: usize) -> Result<RunSummary> {
    let header = [
        "n",
        "N",
        "epsilon",
        "total_rate",
        "eta_hat",
        "eps0",
        "delta",
        "sqrt_l",
        "sqrt_l_se",
        "sqrt_lp",
        "sqrt_lp_se",
        "ratio",
        "ratio_se",
    ];
    let mut rows = Vec::new();
    for (point, (n, count)) in config.family.points().into_iter().enumerate() {
        if n > MAX_DENSITY_QUBITS {
            eprintln!("warning: skipping grid point n = {n} beyond the density cap");
            continue;
        }
        let seed = point_seed(config, point);
        let frame = Arc::new(build_frame(&config.family.family(n, count, derive_seed(seed, 0)))?);

        // Per-point error rate from the total-budget protocol.
        let model = if config.sample_rate_per_point {
            let mut rng = rng_for(seed, 1);
            let epsilon = noise::sample_total_error_rate(count, &mut rng)?;
            match &config.noise {
                NoiseModel::GateDepolarising { .. } => NoiseModel::gate_depolarising(epsilon),
                NoiseModel::Composite { .. } => NoiseModel::Composite {
                    params: noise::sample_composite_params(epsilon, &mut rng)?,
                    r: 1.0,
                },
                other => other.clone(),
            }
        } else {
            config.noise.clone()
        };
        let epsilon = match &model {
            NoiseModel::GateDepolarising { epsilon, r } => epsilon * r,
            NoiseModel::DepolDephase { eps_d, eps_z, r } => (16.0 * eps_d / 15.0 + eps_z) * r,
            NoiseModel::GlobalDepolarising { epsilon, r } => epsilon * r,
            NoiseModel::GateDependent { epsilon, r } => epsilon * r,
            NoiseModel::Composite { params, r } => (params.eps_d * 9.0) * r,
        };

        let train = draw_training_set(&frame, config.n_train, derive_seed(seed, 2))?;
        let y_train = parallel_indexed_map(train.samples.len(), workers, |i| {
            expectation_auto(&train.samples[i].circuit, &model)
        })?;
        let data: Vec<(f64, f64)> =
            train.f.iter().copied().zip(y_train.iter().copied()).collect();
        let est = estimate_phenomenological(&data, Some(&train.weights))?;
        let formula = MitigationFormula::PemiOptimal { eps0: est.epsilon0, delta: est.delta };

        let test_seed = derive_seed(seed, 3);
        let evaluated = parallel_indexed_map(config.n_test, workers, |i| {
            let mut rng = rng_for(test_seed, i as u64);
            let circuit = bind_random_unitary(&frame, &mut rng);
            let f = density::ideal_unitary_expectation(&circuit)?;
            let state = density::run(&circuit, &model)?;
            let y = state.expectation(circuit.observable())?;
            Ok((f, y))
        })?;
        let raw_sq: Vec<f64> = evaluated.iter().map(|&(f, y)| (y - f).powi(2)).collect();
        let mit_sq: Vec<f64> = evaluated
            .iter()
            .map(|&(f, y)| Ok((formula.apply(&[y])? - f).powi(2)))
            .collect::<Result<_>>()?;
        let (sqrt_l, sqrt_l_se) = rmse_stats(&raw_sq);
        let (sqrt_lp, sqrt_lp_se) = rmse_stats(&mit_sq);
        let (ratio, ratio_se) = rmse_ratio_stats(&raw_sq, &mit_sq);
        rows.push(vec![
            n.to_string(),
            count.to_string(),
            fmt_f64(epsilon),
            fmt_f64(epsilon * count as f64),
            fmt_f64(est.eta.unwrap_or(f64::NAN)),
            fmt_f64(est.epsilon0),
            fmt_f64(est.delta),
            fmt_f64(sqrt_l),
            fmt_f64(sqrt_l_se),
            fmt_f64(sqrt_lp),
            fmt_f64(sqrt_lp_se),
            fmt_f64(ratio),
            fmt_f64(ratio_se),
        ]);
    }
    finish(config, &header, rows, vec![])
}

// --- gate-dependent sweep (eps0 and delta under slot-dependent noise) -----

fn run_gate_dependent_sweep(config: &ExperimentConfig, workers: usize) -> Result<RunSummary> {
    let header = ["n", "N", "eps0", "delta", "se_eps0", "se_delta", "samples"];
    let mut rows = Vec::new();
    for (point, (n, count)) in config.family.points().into_iter().enumerate() {
        if n > MAX_DENSITY_QUBITS {
            eprintln!("warning: skipping grid point n = {n} beyond the density cap");
            continue;
        }
        let seed = point_seed(config, point);
        let frame = Arc::new(build_frame(&config.family.family(n, count, derive_seed(seed, 0)))?);
        let samples = weighted_unitary_rates(
            &frame,
            &config.noise,
            config.n_test,
            config.weighting,
            derive_seed(seed, 1),
            workers,
        )?;
        let rates: Vec<f64> = samples.iter().map(|s| s.0).collect();
        let weights: Vec<f64> = samples.iter().map(|s| s.1).collect();
        let moments = weighted_moments(&rates, Some(&weights))?;
        rows.push(vec![
            n.to_string(),
            count.to_string(),
            fmt_f64(moments.mean),
            fmt_f64(moments.sd),
            fmt_f64(moments.se_mean),
            fmt_f64(moments.se_sd),
            rates.len().to_string(),
        ]);
    }
    finish(config, &header, rows, vec![])
}

// --- formula comparison (raw / EE / PEC / PEMI / distillation) ------------

fn run_formula_comparison(config: &ExperimentConfig, workers: usize) -> Result<RunSummary> {
    let header = ["n", "N", "method", "rmse", "rmse_se", "param"];
    let include_vd = config.include_vd.unwrap_or(true);
    let (eps_d, eps_z) = match &config.noise {
        NoiseModel::DepolDephase { eps_d, eps_z, r } => (eps_d * r, eps_z * r),
        NoiseModel::GateDepolarising { epsilon, r } => (epsilon * r, 0.0),
        _ => {
            return Err(Error::Config(
                "formula comparison requires the depolarising-plus-dephasing model".into(),
            ))
        }
    };
    // The imperfectly amplified companion doubles the total error rate but
    // puts the whole increase into the depolarising component.
    let base = NoiseModel::depol_dephase(eps_d, eps_z);
    let amplified = NoiseModel::depol_dephase(2.0 * eps_d + 15.0 / 16.0 * eps_z, eps_z);
    let lambda_imperfect = -16.0 * eps_d / (15.0 - 16.0 * eps_d);

    let mut rows = Vec::new();
    for (point, (n, count)) in config.family.points().into_iter().enumerate() {
        if n > MAX_DENSITY_QUBITS {
            eprintln!("warning: skipping grid point n = {n} beyond the density cap");
            continue;
        }
        let seed = point_seed(config, point);
        let frame = Arc::new(build_frame(&config.family.family(n, count, derive_seed(seed, 0)))?);

        let train = draw_training_set(&frame, config.n_train, derive_seed(seed, 1))?;
        let trained = parallel_indexed_map(train.samples.len(), workers, |i| {
            let circuit = &train.samples[i].circuit;
            let y1 = expectation_auto(circuit, &base)?;
            let y2 = expectation_auto(circuit, &amplified)?;
            let stats = pec_training_stats(circuit, &base)?;
            Ok((y1, y2, stats))
        })?;
        let data1: Vec<(f64, f64)> =
            train.f.iter().copied().zip(trained.iter().map(|t| t.0)).collect();
        let data2: Vec<(f64, f64)> =
            train.f.iter().copied().zip(trained.iter().map(|t| t.1)).collect();
        let est1 = estimate_phenomenological(&data1, Some(&train.weights))?;
        let est2 = estimate_phenomenological(&data2, Some(&train.weights))?;
        let lambda_ee = mitigation::optimal_lambda_from_rates(est1.epsilon0, est2.epsilon0)?;
        let pec_stats: Vec<_> = trained.into_iter().map(|t| t.2).collect();
        let lambda_opt =
            optimize_pec_lambda(&pec_stats, Some(&train.weights), -0.2, 0.0, 1e-6)?;
        let eps0_vd = if include_vd {
            let vd_train = parallel_indexed_map(train.samples.len(), workers, |i| {
                mitigation::virtual_distillation(&train.samples[i].circuit, &base)
            })?;
            let pairs: Vec<(f64, f64)> =
                train.f.iter().copied().zip(vd_train.iter().copied()).collect();
            Some(train_vd_pemi(&pairs, Some(&train.weights))?)
        } else {
            None
        };

        let test_seed = derive_seed(seed, 2);
        let evaluated = parallel_indexed_map(config.n_test, workers, |i| {
            let mut rng = rng_for(test_seed, i as u64);
            let circuit = bind_random_unitary(&frame, &mut rng);
            let f = density::ideal_unitary_expectation(&circuit)?;
            let state1 = density::run(&circuit, &base)?;
            let y1 = state1.expectation(circuit.observable())?;
            let vd_pair = if include_vd {
                Some(state1.purity_pair(circuit.observable())?)
            } else {
                None
            };
            let y2 = density::run(&circuit, &amplified)?.expectation(circuit.observable())?;
            let y_pec_imp = mitigation::pec_mitigate(&circuit, &base, lambda_imperfect)?;
            let y_pec_opt = mitigation::pec_mitigate(&circuit, &base, lambda_opt)?;
            Ok((f, y1, y2, y_pec_imp, y_pec_opt, vd_pair))
        })?;

        type Evaluated = (f64, f64, f64, f64, f64, Option<(f64, f64)>);
        let mut methods: Vec<(&str, Vec<f64>, f64)> = Vec::new();
        let collect = |pick: &dyn Fn(&Evaluated) -> Result<f64>| -> Result<Vec<f64>> {
            evaluated
                .iter()
                .map(|entry| Ok((pick(entry)? - entry.0).powi(2)))
                .collect()
        };
        methods.push(("raw", collect(&|e| Ok(e.1))?, f64::NAN));
        methods.push((
            "ee_imperfect",
            collect(&|e| Ok(mitigation::extrapolate_linear(e.1, e.2, 2.0)))?,
            2.0,
        ));
        methods.push((
            "ee_optimized",
            collect(&|e| Ok(mitigation::extrapolate_linear(e.1, e.2, lambda_ee)))?,
            lambda_ee,
        ));
        let pemi = MitigationFormula::PemiBasic { eps0: est1.epsilon0 };
        methods.push(("pemi_basic", collect(&|e| pemi.apply(&[e.1]))?, est1.epsilon0));
        methods.push(("pec_imperfect", collect(&|e| Ok(e.3))?, lambda_imperfect));
        methods.push(("pec_optimized", collect(&|e| Ok(e.4))?, lambda_opt));
        if let Some(eps0_prime) = eps0_vd {
            let vd = MitigationFormula::VirtualDistillation;
            let vdp = MitigationFormula::VdPemi { eps0_prime };
            methods.push((
                "vd",
                collect(&|e| {
                    let (num, den) = e.5.expect("distillation pair");
                    vd.apply(&[num, den])
                })?,
                f64::NAN,
            ));
            methods.push((
                "vd_pemi",
                collect(&|e| {
                    let (num, den) = e.5.expect("distillation pair");
                    vdp.apply(&[num, den])
                })?,
                eps0_prime,
            ));
        }
        for (name, squared, param) in methods {
            let (rmse, rmse_se) = rmse_stats(&squared);
            rows.push(vec![
                n.to_string(),
                count.to_string(),
                name.to_string(),
                fmt_f64(rmse),
                fmt_f64(rmse_se),
                if param.is_nan() { String::new() } else { fmt_f64(param) },
            ]);
        }
    }
    finish(config, &header, rows, vec![])
}

// --- error propagation (convergence to the uniform Pauli mix) -------------

fn run_error_propagation(config: &ExperimentConfig, workers: usize) -> Result<RunSummary> {
    let header = ["n", "N", "d_i", "d_x", "d_y", "d_z", "circuits"];
    let mut rows = Vec::new();
    for (point, (n, count)) in config.family.points().into_iter().enumerate() {
        let seed = point_seed(config, point);
        let frame = Arc::new(build_frame(&config.family.family(n, count, derive_seed(seed, 0)))?);
        let gate_positions: Vec<(usize, usize, usize)> = frame
            .elements()
            .iter()
            .enumerate()
            .filter_map(|(i, e)| match e {
                FrameElement::TwoQubit(g) => {
                    let (a, b) = g.qubits();
                    Some((i, a, b.expect("two-qubit gate")))
                }
                _ => None,
            })
            .collect();
        let circuit_seed = derive_seed(seed, 1);
        let per_circuit = parallel_indexed_map(config.n_test, workers, |i| {
            let mut rng = rng_for(circuit_seed, i as u64);
            let circuit = bind_random_clifford(&frame, &mut rng);
            let mut counts = [0usize; 4];
            for &(element, a, b) in &gate_positions {
                let sigma = crate::pauli::PauliString::embed(
                    n,
                    &[a, b],
                    &[Pauli::X, Pauli::X],
                    false,
                )?;
                let propagated = stabilizer::propagate_error(&circuit, element + 1, &sigma)?;
                let idx = match propagated.single_factor(0) {
                    Pauli::I => 0,
                    Pauli::X => 1,
                    Pauli::Y => 2,
                    Pauli::Z => 3,
                };
                counts[idx] += 1;
            }
            let total = gate_positions.len() as f64;
            Ok([
                (counts[0] as f64 / total - 0.25).abs(),
                (counts[1] as f64 / total - 0.25).abs(),
                (counts[2] as f64 / total - 0.25).abs(),
                (counts[3] as f64 / total - 0.25).abs(),
            ])
        })?;
        let m = per_circuit.len() as f64;
        let mut d = [0.0f64; 4];
        for c in &per_circuit {
            for (acc, v) in d.iter_mut().zip(c) {
                *acc += v;
            }
        }
        for acc in &mut d {
            *acc /= m;
        }
        rows.push(vec![
            n.to_string(),
            count.to_string(),
            fmt_f64(d[0]),
            fmt_f64(d[1]),
            fmt_f64(d[2]),
            fmt_f64(d[3]),
            per_circuit.len().to_string(),
        ]);
    }
    finish(config, &header, rows, vec![])
}

// --- feasibility (Clifford-trained vs unitary-trained rescale) ------------

fn run_feasibility(config: &ExperimentConfig, workers: usize) -> Result<RunSummary> {
    let header = [
        "n",
        "N",
        "lambda_u",
        "lambda_c_nonuniform",
        "lambda_c_uniform",
        "ratio_nonuniform",
        "ratio_uniform",
        "mse_lambda_u",
    ];
    let mut rows = Vec::new();
    for (point, (n, count)) in config.family.points().into_iter().enumerate() {
        if n > MAX_DENSITY_QUBITS {
            eprintln!("warning: skipping grid point n = {n} beyond the density cap");
            continue;
        }
        let seed = point_seed(config, point);
        let frame = Arc::new(build_frame(&config.family.family(n, count, derive_seed(seed, 0)))?);
        let model = &config.noise;

        // Clifford-trained rescale from the non-uniform sampler.
        let train = draw_training_set(&frame, config.n_train, derive_seed(seed, 1))?;
        let y_nu = parallel_indexed_map(train.samples.len(), workers, |i| {
            expectation_auto(&train.samples[i].circuit, model)
        })?;
        let data_nu: Vec<(f64, f64)> =
            train.f.iter().copied().zip(y_nu.iter().copied()).collect();
        let est_nu = estimate_phenomenological(&data_nu, Some(&train.weights))?;
        let lambda_c_nu = rescale_of(&est_nu);

        // Clifford-trained rescale from the uniform (Metropolis) sampler.
        let free = frame.slot_count() - frame.n();
        let m_slots = config.resample_slots.unwrap_or_else(|| (free / 8).clamp(1, free));
        let proposal = default_proposal(&frame, m_slots)?;
        let mut chain_rng = rng_for(seed, 2);
        let initial = SlotPattern::random(&frame, &mut chain_rng);
        let chain = ics::sample_uniform(
            &frame,
            config.n_train,
            &proposal,
            &initial,
            default_burn_in(&frame),
            &mut chain_rng,
        )?;
        let y_u = parallel_indexed_map(chain.samples.len(), workers, |i| {
            expectation_auto(&chain.samples[i].circuit, model)
        })?;
        let data_u: Vec<(f64, f64)> = chain
            .samples
            .iter()
            .map(|s| f64::from(s.f))
            .zip(y_u.iter().copied())
            .collect();
        let est_u = estimate_phenomenological(&data_u, None)?;
        let lambda_c_u = rescale_of(&est_u);

        // Unitary-trained rescale: least squares over a training set.
        let lam_train_seed = derive_seed(seed, 3);
        let lam_data = parallel_indexed_map(config.n_train, workers, |i| {
            let mut rng = rng_for(lam_train_seed, i as u64);
            let circuit = bind_random_unitary(&frame, &mut rng);
            let f = density::ideal_unitary_expectation(&circuit)?;
            let y = density::run(&circuit, model)?.expectation(circuit.observable())?;
            Ok((f, y))
        })?;
        let num: f64 = lam_data.iter().map(|&(f, y)| f * y).sum();
        let den: f64 = lam_data.iter().map(|&(_, y)| y * y).sum();
        if den <= 0.0 {
            return Err(Error::Numerical("degenerate unitary training set".into()));
        }
        let lambda_u = num / den;

        // Fresh test set for the MSE ratios.
        let test_seed = derive_seed(seed, 4);
        let test = parallel_indexed_map(config.n_test, workers, |i| {
            let mut rng = rng_for(test_seed, i as u64);
            let circuit = bind_random_unitary(&frame, &mut rng);
            let f = density::ideal_unitary_expectation(&circuit)?;
            let y = density::run(&circuit, model)?.expectation(circuit.observable())?;
            Ok((f, y))
        })?;
        let mse_at = |lambda: f64| -> f64 {
            test.iter().map(|&(f, y)| (lambda * y - f).powi(2)).sum::<f64>() / test.len() as f64
        };
        let base = mse_at(lambda_u);
        rows.push(vec![
            n.to_string(),
            count.to_string(),
            fmt_f64(lambda_u),
            fmt_f64(lambda_c_nu),
            fmt_f64(lambda_c_u),
            fmt_f64(mse_at(lambda_c_nu) / base),
            fmt_f64(mse_at(lambda_c_u) / base),
            fmt_f64(base),
        ]);
    }
    finish(config, &header, rows, vec![])
}

fn rescale_of(est: &ics::PhenomenologicalEstimate) -> f64 {
    let one = 1.0 - est.epsilon0;
    one / (one * one + est.delta * est.delta)
}

// --- dependence on the error-free expectation ------------------------------

fn run_fc_dependence(config: &ExperimentConfig, workers: usize) -> Result<RunSummary> {
    let header = [
        "record",
        "n",
        "N",
        "abs_f",
        "err_before",
        "err_after",
        "ratio",
    ];
    let default_scales = vec![0.0, 0.05, 0.1, 0.2, 0.4, 0.8, 1.6, std::f64::consts::PI];
    let scales = config.rotation_scales.clone().unwrap_or(default_scales);
    let mut rows = Vec::new();
    for (point, (n, count)) in config.family.points().into_iter().enumerate() {
        if n > MAX_DENSITY_QUBITS {
            eprintln!("warning: skipping grid point n = {n} beyond the density cap");
            continue;
        }
        let seed = point_seed(config, point);
        let frame = Arc::new(build_frame(&config.family.family(n, count, derive_seed(seed, 0)))?);
        let model = &config.noise;

        let train = draw_training_set(&frame, config.n_train, derive_seed(seed, 1))?;
        let y_train = parallel_indexed_map(train.samples.len(), workers, |i| {
            expectation_auto(&train.samples[i].circuit, model)
        })?;
        let data: Vec<(f64, f64)> =
            train.f.iter().copied().zip(y_train.iter().copied()).collect();
        let est = estimate_phenomenological(&data, Some(&train.weights))?;
        let formula = MitigationFormula::PemiOptimal { eps0: est.epsilon0, delta: est.delta };

        // Reference ratio from the error-sensitive Clifford set itself.
        let w_total: f64 = train.weights.iter().sum();
        let es_before: f64 = data
            .iter()
            .zip(&train.weights)
            .map(|(&(f, y), w)| w * (y - f).abs())
            .sum::<f64>()
            / w_total;
        let es_after: f64 = data
            .iter()
            .zip(&train.weights)
            .map(|(&(f, y), w)| Ok(w * (formula.apply(&[y])? - f).abs()))
            .sum::<Result<f64>>()?
            / w_total;
        rows.push(vec![
            "es_reference".into(),
            n.to_string(),
            count.to_string(),
            "1".into(),
            fmt_f64(es_before),
            fmt_f64(es_after),
            fmt_f64(if es_after > 1e-12 { es_before / es_after } else { f64::NAN }),
        ]);

        // Near-one-|f| unitary circuits across the rotation-scale grid.
        let per_scale = (config.n_test / scales.len()).max(10);
        let mut entries: Vec<(f64, f64, f64)> = Vec::new(); // (|f|, |y-f|, |y'-f|)
        for (scale_idx, &scale) in scales.iter().enumerate() {
            let gen_seed = derive_seed(seed, 100 + scale_idx as u64);
            let batch = parallel_indexed_map(per_scale, workers, |i| {
                let mut rng = rng_for(gen_seed, i as u64);
                let circuit = bind_near_one_fc(&frame, scale, &mut rng)?;
                let f = density::ideal_unitary_expectation(&circuit)?;
                let y = density::run(&circuit, model)?.expectation(circuit.observable())?;
                let y_mit = formula.apply(&[y])?;
                Ok((f.abs(), (y - f).abs(), (y_mit - f).abs()))
            })?;
            entries.extend(batch);
        }
        entries.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite |f|"));
        for chunk in entries.chunks(10) {
            if chunk.len() < 10 {
                continue;
            }
            let m = chunk.len() as f64;
            let abs_f = chunk.iter().map(|e| e.0).sum::<f64>() / m;
            let before = chunk.iter().map(|e| e.1).sum::<f64>() / m;
            let after = chunk.iter().map(|e| e.2).sum::<f64>() / m;
            rows.push(vec![
                "bin".into(),
                n.to_string(),
                count.to_string(),
                fmt_f64(abs_f),
                fmt_f64(before),
                fmt_f64(after),
                fmt_f64(if after > 1e-12 { before / after } else { f64::NAN }),
            ]);
        }
    }
    finish(config, &header, rows, vec![])
}
