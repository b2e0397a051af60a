//! Simulation-backed checks of the mitigation formulas: the closed-form
//! RMSE expressions, the covariance-matrix identity, the residual-bias
//! bounds, and the optimised-parameter improvements.

use qem_ics::circuit::{bind_random_unitary, build_frame, FamilyKind, FrameFamily};
use qem_ics::density;
use qem_ics::harness::expectation_auto;
use qem_ics::ics::{self, estimate_phenomenological, mse};
use qem_ics::mitigation::{
    estimate_covariance, extrapolate_linear, extrapolation_rmse_prediction, golden_section_min,
    optimal_lambda_from_rates, optimize_pec_lambda, pec_mitigate, pec_training_stats,
    theorem1_bound, MitigationFormula,
};
use qem_ics::noise::NoiseModel;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use std::sync::Arc;

struct TestBed {
    base: NoiseModel,
    doubled: NoiseModel,
    train: Vec<ics::EsSample>,
    weights: Vec<f64>,
    /// (f, y1, y2) per test circuit.
    test: Vec<(f64, f64, f64)>,
}

fn build_bed(seed: u64, eps: f64, gates: usize, train_count: usize, test_count: usize) -> TestBed {
    let frame = Arc::new(
        build_frame(&FrameFamily::new(FamilyKind::AllToAll, 4, gates, seed)).unwrap(),
    );
    let base = NoiseModel::gate_depolarising(eps);
    let doubled = base.amplified(2.0);
    let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0xABCD);
    let train = ics::sample_nonuniform(&frame, train_count, &mut rng).unwrap();
    let weights: Vec<f64> = train.iter().map(|s| s.weight_factor).collect();
    let test: Vec<(f64, f64, f64)> = (0..test_count)
        .map(|_| {
            let circuit = bind_random_unitary(&frame, &mut rng);
            let f = density::ideal_unitary_expectation(&circuit).unwrap();
            let y1 = density::run(&circuit, &base)
                .unwrap()
                .expectation(circuit.observable())
                .unwrap();
            let y2 = density::run(&circuit, &doubled)
                .unwrap()
                .expectation(circuit.observable())
                .unwrap();
            (f, y1, y2)
        })
        .collect();
    TestBed { base, doubled, train, weights, test }
}

fn training_rates(bed: &TestBed) -> Vec<Vec<f64>> {
    bed.train
        .iter()
        .map(|s| {
            let f = f64::from(s.f);
            let y1 = expectation_auto(&s.circuit, &bed.base).unwrap();
            let y2 = expectation_auto(&s.circuit, &bed.doubled).unwrap();
            vec![1.0 - y1 * f, 1.0 - y2 * f]
        })
        .collect()
}

#[test]
fn rmse_identity_reproduces_measured_extrapolation_error() {
    // sqrt(eta [(E·L - 1)^2 + L^T K L]) against the directly measured RMSE
    // of the lambda-extrapolation on unitary circuits, within 3 SE.
    let bed = build_bed(2024, 2e-3, 30, 1500, 400);
    let rates = training_rates(&bed);
    let est = estimate_covariance(&rates, Some(&bed.weights), None).unwrap();

    for lambda in [1.0, 1.6, 2.0] {
        let predicted =
            extrapolation_rmse_prediction(&est, &[lambda, 1.0 - lambda]).unwrap();
        let squared: Vec<f64> = bed
            .test
            .iter()
            .map(|&(f, y1, y2)| (extrapolate_linear(y1, y2, lambda) - f).powi(2))
            .collect();
        let m = squared.len() as f64;
        let mean = squared.iter().sum::<f64>() / m;
        let var = squared.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (m - 1.0);
        let se_mean = (var / m).sqrt();
        let measured = mean.sqrt();
        let se = se_mean / (2.0 * measured);
        assert!(
            (predicted - measured).abs() < 3.0 * se + 0.1 * measured,
            "lambda {lambda}: predicted {predicted}, measured {measured} (se {se})"
        );
    }
}

#[test]
fn theorem_bounds_dominate_min_over_lambda() {
    // Empirical min-over-lambda extrapolation RMSE <= bound1 <= bound2.
    for seed in [11u64, 22, 33] {
        let bed = build_bed(seed, 1.5e-3, 24, 1000, 200);
        let rates = training_rates(&bed);
        let est = estimate_covariance(&rates, Some(&bed.weights), None).unwrap();
        let (bound1, bound2) = theorem1_bound(&est).unwrap();
        assert!(bound1 <= bound2 + 1e-15);

        let rmse_at = |lambda: f64| {
            let squared: Vec<f64> = bed
                .test
                .iter()
                .map(|&(f, y1, y2)| (extrapolate_linear(y1, y2, lambda) - f).powi(2))
                .collect();
            (squared.iter().sum::<f64>() / squared.len() as f64).sqrt()
        };
        let best = golden_section_min(rmse_at, -1.0, 4.0, 1e-6);
        let min_rmse = rmse_at(best);
        assert!(
            min_rmse <= bound1 + 1e-12,
            "seed {seed}: min RMSE {min_rmse} vs bound1 {bound1}"
        );
    }
}

#[test]
fn pemi_optimal_beats_basic_and_matches_closed_form_rmse() {
    let bed = build_bed(77, 4e-3, 40, 2000, 500);
    let data: Vec<(f64, f64)> = bed
        .train
        .iter()
        .map(|s| (f64::from(s.f), expectation_auto(&s.circuit, &bed.base).unwrap()))
        .collect();
    let est = estimate_phenomenological(&data, Some(&bed.weights)).unwrap();

    let basic = MitigationFormula::PemiBasic { eps0: est.epsilon0 };
    let optimal = MitigationFormula::PemiOptimal { eps0: est.epsilon0, delta: est.delta };
    let f: Vec<f64> = bed.test.iter().map(|t| t.0).collect();
    let y_basic: Vec<f64> =
        bed.test.iter().map(|t| basic.apply(&[t.1]).unwrap()).collect();
    let y_opt: Vec<f64> =
        bed.test.iter().map(|t| optimal.apply(&[t.1]).unwrap()).collect();

    // The basic-vs-optimal gap is quartic in delta, so on a finite test set
    // it hides below sampling noise; require no significant violation of
    // the paired difference instead of a strict inequality.
    let paired: Vec<f64> = bed
        .test
        .iter()
        .zip(y_basic.iter().zip(&y_opt))
        .map(|(t, (b, o))| (b - t.0).powi(2) - (o - t.0).powi(2))
        .collect();
    let m = paired.len() as f64;
    let mean_d = paired.iter().sum::<f64>() / m;
    let var_d = paired.iter().map(|d| (d - mean_d).powi(2)).sum::<f64>() / (m - 1.0);
    let se_d = (var_d / m).sqrt();
    assert!(
        mean_d > -3.0 * se_d,
        "optimal rescale significantly worse than basic: paired mean {mean_d}, se {se_d}"
    );

    // On the population predicted by the phenomenological model the
    // monotonicity is exact for any estimate.
    for (eps0, delta) in [(0.01, 0.0), (0.1, 0.02), (0.3, 0.1), (0.6, 0.4)] {
        let predicted_mse = |lambda: f64| {
            (lambda * (1.0 - eps0) - 1.0).powi(2) + lambda * lambda * delta * delta
        };
        let lam_basic = 1.0 / (1.0 - eps0);
        let lam_opt = (1.0 - eps0) / ((1.0 - eps0).powi(2) + delta * delta);
        assert!(predicted_mse(lam_opt) <= predicted_mse(lam_basic) + 1e-15);
    }
    let l_opt = mse(&f, &y_opt, None).unwrap();

    // Closed form: RMSE after optimal rescaling is
    // sqrt(eta) Delta / sqrt((1-eps0)^2 + Delta^2).
    let eta = est.eta.unwrap();
    let predicted =
        eta.sqrt() * est.delta / ((1.0 - est.epsilon0).powi(2) + est.delta.powi(2)).sqrt();
    let measured = l_opt.sqrt();
    assert!(
        (predicted - measured).abs() < 0.2 * measured,
        "predicted {predicted} vs measured {measured}"
    );
}

#[test]
fn optimised_extrapolation_improves_on_imperfect_amplification() {
    // Imperfectly amplified pair: the amplified model doubles the total
    // rate but keeps the dephasing fixed. The rate-trained lambda must beat
    // the canonical lambda = 2 extrapolation.
    let eps_d = 1e-3;
    let eps_z = 2.5e-4;
    let base = NoiseModel::depol_dephase(eps_d, eps_z);
    let amplified = NoiseModel::depol_dephase(2.0 * eps_d + 15.0 / 16.0 * eps_z, eps_z);
    let frame = Arc::new(
        build_frame(&FrameFamily::new(FamilyKind::AllToAll, 4, 30, 4321)).unwrap(),
    );
    let mut rng = ChaCha12Rng::seed_from_u64(4242);
    let train = ics::sample_nonuniform(&frame, 1500, &mut rng).unwrap();
    let weights: Vec<f64> = train.iter().map(|s| s.weight_factor).collect();
    let data1: Vec<(f64, f64)> = train
        .iter()
        .map(|s| (f64::from(s.f), expectation_auto(&s.circuit, &base).unwrap()))
        .collect();
    let data2: Vec<(f64, f64)> = train
        .iter()
        .map(|s| (f64::from(s.f), expectation_auto(&s.circuit, &amplified).unwrap()))
        .collect();
    let est1 = estimate_phenomenological(&data1, Some(&weights)).unwrap();
    let est2 = estimate_phenomenological(&data2, Some(&weights)).unwrap();
    let lambda = optimal_lambda_from_rates(est1.epsilon0, est2.epsilon0).unwrap();
    assert!(lambda.is_finite());

    let mut sq_canonical = Vec::new();
    let mut sq_optimised = Vec::new();
    let mut sq_raw = Vec::new();
    for _ in 0..300 {
        let circuit = bind_random_unitary(&frame, &mut rng);
        let f = density::ideal_unitary_expectation(&circuit).unwrap();
        let y1 = density::run(&circuit, &base)
            .unwrap()
            .expectation(circuit.observable())
            .unwrap();
        let y2 = density::run(&circuit, &amplified)
            .unwrap()
            .expectation(circuit.observable())
            .unwrap();
        sq_raw.push((y1 - f).powi(2));
        sq_canonical.push((extrapolate_linear(y1, y2, 2.0) - f).powi(2));
        sq_optimised.push((extrapolate_linear(y1, y2, lambda) - f).powi(2));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    assert!(mean(&sq_optimised) < mean(&sq_canonical));
    assert!(mean(&sq_canonical) < mean(&sq_raw));
}

#[test]
fn optimised_pec_lambda_matches_closed_form_and_reduces_error() {
    // Inverse map trained on ICS data: the optimum sits near
    // -16 eps_d/(15-16 eps_d) - 2 eps_z, and the optimised run beats the
    // depolarising-only guess over a test set.
    let eps_d = 1.2e-3;
    let eps_z = 3e-4;
    let base = NoiseModel::depol_dephase(eps_d, eps_z);
    let frame = Arc::new(
        build_frame(&FrameFamily::new(FamilyKind::AllToAll, 4, 20, 999)).unwrap(),
    );
    let mut rng = ChaCha12Rng::seed_from_u64(314);
    let train = ics::sample_nonuniform(&frame, 1500, &mut rng).unwrap();
    let weights: Vec<f64> = train.iter().map(|s| s.weight_factor).collect();
    let stats: Vec<_> = train
        .iter()
        .map(|s| pec_training_stats(&s.circuit, &base).unwrap())
        .collect();
    let lambda_opt = optimize_pec_lambda(&stats, Some(&weights), -0.2, 0.0, 1e-6).unwrap();
    let lambda_imp = -16.0 * eps_d / (15.0 - 16.0 * eps_d);
    let closed = lambda_imp - 2.0 * eps_z;
    assert!(
        (lambda_opt - closed).abs() < 0.3 * (closed - lambda_imp).abs(),
        "optimised {lambda_opt} vs closed form {closed} (imperfect {lambda_imp})"
    );

    let mut sq_imp = Vec::new();
    let mut sq_opt = Vec::new();
    for _ in 0..200 {
        let circuit = bind_random_unitary(&frame, &mut rng);
        let f = density::ideal_unitary_expectation(&circuit).unwrap();
        let y_imp = pec_mitigate(&circuit, &base, lambda_imp).unwrap();
        let y_opt = pec_mitigate(&circuit, &base, lambda_opt).unwrap();
        sq_imp.push((y_imp - f).powi(2));
        sq_opt.push((y_opt - f).powi(2));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    assert!(
        mean(&sq_opt) < mean(&sq_imp),
        "optimised {} vs imperfect {}",
        mean(&sq_opt),
        mean(&sq_imp)
    );
}

#[test]
fn global_depolarising_suite_is_bias_free() {
    // Exactly known rates: PEC, trained extrapolation and basic rescaling
    // all have zero bias to 1e-9.
    let eps = 1e-3;
    let gates = 20;
    let model = NoiseModel::global_depolarising(eps);
    let doubled = model.amplified(2.0);
    let frame = Arc::new(
        build_frame(&FrameFamily::new(FamilyKind::AllToAll, 4, gates, 2718)).unwrap(),
    );
    let mut rng = ChaCha12Rng::seed_from_u64(6);
    for _ in 0..5 {
        let circuit = bind_random_unitary(&frame, &mut rng);
        let f = density::ideal_unitary_expectation(&circuit).unwrap();
        let q = circuit.observable();
        let y1 = density::run(&circuit, &model).unwrap().expectation(q).unwrap();
        let y2 = density::run(&circuit, &doubled).unwrap().expectation(q).unwrap();

        // Basic rescale with the exact rate.
        let eps_t = 1.0 - (1.0 - eps).powi(gates as i32);
        assert!((y1 / (1.0 - eps_t) - f).abs() < 1e-9);

        // Trained extrapolation with the closed-form optimal parameter.
        let lambda = (1.0 - (1.0 - 2.0 * eps).powi(gates as i32))
            / ((1.0 - eps).powi(gates as i32) - (1.0 - 2.0 * eps).powi(gates as i32));
        assert!((extrapolate_linear(y1, y2, lambda) - f).abs() < 1e-9);

        // Exact quasi-probability rescale.
        assert!(
            (qem_ics::mitigation::pec_global_closed_form(y1, eps, gates).unwrap() - f).abs()
                < 1e-9
        );
    }
}
