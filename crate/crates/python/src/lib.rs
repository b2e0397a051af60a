//! Python bindings for the importance-Clifford-sampling simulation library:
//! frames, circuits, noise models, the samplers, the phenomenological
//! estimators, mitigation formulas and the experiment runner.

use std::sync::Arc;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use qem_ics::circuit::{self, CircuitFrame, FamilyKind, FrameFamily, TwoQubitKind};
use qem_ics::density;
use qem_ics::harness::{self, ExperimentConfig};
use qem_ics::ics::{self, SlotPattern};
use qem_ics::mitigation::{self, MitigationFormula};
use qem_ics::noise::{self, NoiseModel};
use qem_ics::stabilizer;
use qem_ics::Error;

fn to_py_err(err: Error) -> PyErr {
    match err {
        Error::Config(_)
        | Error::Parse(_)
        | Error::Json(_)
        | Error::InvalidParameter(_)
        | Error::OutOfRange(_)
        | Error::DimensionMismatch(_) => PyValueError::new_err(err.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

trait IntoPyResult<T> {
    fn into_py(self) -> PyResult<T>;
}

impl<T> IntoPyResult<T> for Result<T, Error> {
    fn into_py(self) -> PyResult<T> {
        self.map_err(to_py_err)
    }
}

fn parse_family_kind(kind: &str) -> PyResult<FamilyKind> {
    match kind {
        "periodic_cycling" => Ok(FamilyKind::PeriodicCycling),
        "linear_network" => Ok(FamilyKind::LinearNetwork),
        "all_to_all" => Ok(FamilyKind::AllToAll),
        other => Err(PyValueError::new_err(format!("unknown family kind {other:?}"))),
    }
}

/// A circuit frame: the fixed two-qubit Clifford pattern, slot positions
/// and observable.
#[pyclass(name = "Frame", skip_from_py_object)]
#[derive(Clone)]
struct PyFrame {
    inner: Arc<CircuitFrame>,
}

#[pymethods]
impl PyFrame {
    /// Builds a frame of one of the three families
    /// (periodic_cycling | linear_network | all_to_all).
    #[staticmethod]
    #[pyo3(signature = (kind, n, two_qubit_count, seed, gate = "cz", open_chain = false))]
    fn build(
        kind: &str,
        n: usize,
        two_qubit_count: usize,
        seed: u64,
        gate: &str,
        open_chain: bool,
    ) -> PyResult<Self> {
        let family = FrameFamily {
            kind: parse_family_kind(kind)?,
            n,
            two_qubit_count,
            seed,
            gate: match gate {
                "cz" => TwoQubitKind::Cz,
                "cnot" => TwoQubitKind::Cnot,
                other => {
                    return Err(PyValueError::new_err(format!("unknown gate kind {other:?}")))
                }
            },
            open_chain,
        };
        Ok(Self { inner: Arc::new(circuit::build_frame(&family).into_py()?) })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self { inner: Arc::new(CircuitFrame::from_json(text).into_py()?) })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn slot_count(&self) -> usize {
        self.inner.slot_count()
    }

    #[getter]
    fn two_qubit_count(&self) -> usize {
        self.inner.two_qubit_count()
    }

    #[getter]
    fn observable(&self) -> String {
        self.inner.observable().to_string()
    }

    fn __repr__(&self) -> String {
        format!(
            "Frame(n={}, two_qubit_count={}, slots={}, observable='{}')",
            self.inner.n(),
            self.inner.two_qubit_count(),
            self.inner.slot_count(),
            self.inner.observable()
        )
    }
}

/// A frame with every slot bound to a gate.
#[pyclass(name = "Circuit", skip_from_py_object)]
#[derive(Clone)]
struct PyCircuit {
    inner: circuit::Circuit,
}

#[pymethods]
impl PyCircuit {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self { inner: circuit::Circuit::from_json(text).into_py()? })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn is_clifford(&self) -> bool {
        self.inner.is_clifford()
    }

    /// Noiseless expectation of the frame observable: exact stabilizer
    /// value for Clifford circuits, state-vector value otherwise.
    fn ideal_expectation(&self) -> PyResult<f64> {
        if self.inner.is_clifford() {
            Ok(f64::from(stabilizer::ideal_expectation(&self.inner).into_py()?))
        } else {
            density::ideal_unitary_expectation(&self.inner).into_py()
        }
    }

    /// The signed effective observable (Clifford circuits only).
    fn effective_observable(&self) -> PyResult<String> {
        Ok(stabilizer::effective_observable(&self.inner).into_py()?.to_string())
    }

    /// Number of non-identity factors of the effective observable.
    fn weight(&self) -> PyResult<usize> {
        stabilizer::circuit_weight(&self.inner).into_py()
    }

    fn __repr__(&self) -> String {
        format!(
            "Circuit(n={}, slots={}, clifford={})",
            self.inner.n(),
            self.inner.slots().len(),
            self.inner.is_clifford()
        )
    }
}

/// A per-gate noise model with amplification factor r.
#[pyclass(name = "NoiseModel", skip_from_py_object)]
#[derive(Clone)]
struct PyNoiseModel {
    inner: NoiseModel,
}

#[pymethods]
impl PyNoiseModel {
    #[staticmethod]
    fn gate_depolarising(epsilon: f64) -> Self {
        Self { inner: NoiseModel::gate_depolarising(epsilon) }
    }

    #[staticmethod]
    fn global_depolarising(epsilon: f64) -> Self {
        Self { inner: NoiseModel::global_depolarising(epsilon) }
    }

    #[staticmethod]
    fn depol_dephase(eps_d: f64, eps_z: f64) -> Self {
        Self { inner: NoiseModel::depol_dephase(eps_d, eps_z) }
    }

    #[staticmethod]
    fn gate_dependent(epsilon: f64) -> Self {
        Self { inner: NoiseModel::GateDependent { epsilon, r: 1.0 } }
    }

    /// A composite model with parameters drawn from the total budget.
    #[staticmethod]
    fn composite_sampled(epsilon: f64, seed: u64) -> PyResult<Self> {
        let mut rng = harness::rng_for(seed, 0);
        let params = noise::sample_composite_params(epsilon, &mut rng).into_py()?;
        Ok(Self { inner: NoiseModel::Composite { params, r: 1.0 } })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self { inner: NoiseModel::from_json(text).into_py()? })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    /// The same model with every rate scaled by `factor`.
    fn amplified(&self, factor: f64) -> Self {
        Self { inner: self.inner.amplified(factor) }
    }

    fn __repr__(&self) -> String {
        format!("NoiseModel({})", self.inner.to_json())
    }
}

/// Estimates of the global-depolarising-with-fluctuation model.
#[pyclass(name = "Estimate")]
struct PyEstimate {
    inner: ics::PhenomenologicalEstimate,
}

#[pymethods]
impl PyEstimate {
    #[getter]
    fn epsilon0(&self) -> f64 {
        self.inner.epsilon0
    }

    #[getter]
    fn delta(&self) -> f64 {
        self.inner.delta
    }

    #[getter]
    fn eta(&self) -> Option<f64> {
        self.inner.eta
    }

    #[getter]
    fn sample_count(&self) -> usize {
        self.inner.sample_count
    }

    #[getter]
    fn se_epsilon0(&self) -> f64 {
        self.inner.se_epsilon0
    }

    #[getter]
    fn se_delta(&self) -> f64 {
        self.inner.se_delta
    }

    fn __repr__(&self) -> String {
        format!(
            "Estimate(epsilon0={:.6}, delta={:.6}, eta={:?}, samples={})",
            self.inner.epsilon0, self.inner.delta, self.inner.eta, self.inner.sample_count
        )
    }
}

/// A mitigation formula with its variational parameters.
#[pyclass(name = "Formula", skip_from_py_object)]
#[derive(Clone)]
struct PyFormula {
    inner: MitigationFormula,
}

#[pymethods]
impl PyFormula {
    #[staticmethod]
    fn pemi_basic(eps0: f64) -> Self {
        Self { inner: MitigationFormula::PemiBasic { eps0 } }
    }

    #[staticmethod]
    fn pemi_optimal(eps0: f64, delta: f64) -> Self {
        Self { inner: MitigationFormula::PemiOptimal { eps0, delta } }
    }

    #[staticmethod]
    fn linear_extrapolation(lam: f64) -> Self {
        Self { inner: MitigationFormula::LinearExtrapolation { lambda: lam } }
    }

    #[staticmethod]
    fn richardson(r_list: Vec<f64>) -> PyResult<Self> {
        Ok(Self { inner: MitigationFormula::richardson(r_list).into_py()? })
    }

    #[staticmethod]
    fn pec_inverse(lam: f64) -> Self {
        Self { inner: MitigationFormula::PecInverse { lambda: lam } }
    }

    #[staticmethod]
    fn virtual_distillation() -> Self {
        Self { inner: MitigationFormula::VirtualDistillation }
    }

    #[staticmethod]
    fn vd_pemi(eps0_prime: f64) -> Self {
        Self { inner: MitigationFormula::VdPemi { eps0_prime } }
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self { inner: MitigationFormula::from_json(text).into_py()? })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    /// Number of measured values the formula consumes.
    #[getter]
    fn input_arity(&self) -> usize {
        self.inner.input_arity()
    }

    /// Maps the raw measured values to the mitigated estimate.
    fn apply(&self, ys: Vec<f64>) -> PyResult<f64> {
        self.inner.apply(&ys).into_py()
    }

    fn __repr__(&self) -> String {
        format!("Formula({})", self.inner.to_json())
    }
}

fn sample_tuple(sample: ics::EsSample) -> (PyCircuit, usize, i8, f64) {
    (
        PyCircuit { inner: sample.circuit },
        sample.weight,
        sample.f,
        sample.weight_factor,
    )
}

/// Non-uniform importance Clifford sampling: `count` error-sensitive
/// circuits, each drawn with probability proportional to `3^w`. Returns
/// (circuit, w, f, weight_factor) tuples.
#[pyfunction]
fn sample_nonuniform(
    frame: &PyFrame,
    count: usize,
    seed: u64,
) -> PyResult<Vec<(PyCircuit, usize, i8, f64)>> {
    let mut rng = harness::rng_for(seed, 0);
    let samples = ics::sample_nonuniform(&frame.inner, count, &mut rng).into_py()?;
    Ok(samples.into_iter().map(sample_tuple).collect())
}

/// Uniform importance Clifford sampling via Metropolis-Hastings. Returns
/// (circuit, w, f, weight_factor) tuples, one per chain step.
#[pyfunction]
#[pyo3(signature = (frame, count, seed, resample_slots = None, burn_in = None))]
fn sample_uniform(
    frame: &PyFrame,
    count: usize,
    seed: u64,
    resample_slots: Option<usize>,
    burn_in: Option<usize>,
) -> PyResult<Vec<(PyCircuit, usize, i8, f64)>> {
    let mut rng = harness::rng_for(seed, 0);
    let free = frame.inner.slot_count() - frame.inner.n();
    let m = resample_slots.unwrap_or_else(|| (free / 8).clamp(1, free.max(1)));
    let proposal = ics::default_proposal(&frame.inner, m).into_py()?;
    let initial = SlotPattern::random(&frame.inner, &mut rng);
    let burn_in = burn_in.unwrap_or_else(|| ics::default_burn_in(&frame.inner));
    let out =
        ics::sample_uniform(&frame.inner, count, &proposal, &initial, burn_in, &mut rng)
            .into_py()?;
    Ok(out.samples.into_iter().map(sample_tuple).collect())
}

/// One error-sensitive circuit for a uniformly drawn slot pattern.
#[pyfunction]
fn es_circuit(frame: &PyFrame, seed: u64) -> PyResult<PyCircuit> {
    let mut rng = harness::rng_for(seed, 0);
    let pattern = SlotPattern::random(&frame.inner, &mut rng);
    Ok(PyCircuit { inner: ics::es_circuit(&frame.inner, &pattern, &mut rng).into_py()? })
}

/// Binds every slot to an independent Haar-random single-qubit unitary.
#[pyfunction]
fn bind_random_unitary(frame: &PyFrame, seed: u64) -> PyCircuit {
    let mut rng = harness::rng_for(seed, 0);
    PyCircuit { inner: circuit::bind_random_unitary(&frame.inner, &mut rng) }
}

/// Binds every slot to an independent uniform single-qubit Clifford.
#[pyfunction]
fn bind_random_clifford(frame: &PyFrame, seed: u64) -> PyCircuit {
    let mut rng = harness::rng_for(seed, 0);
    PyCircuit { inner: circuit::bind_random_clifford(&frame.inner, &mut rng) }
}

/// An error-sensitive circuit with every slot gate perturbed by a random
/// rotation of the given scale; at scale 0 the ideal expectation is ±1.
#[pyfunction]
fn bind_near_one_fc(frame: &PyFrame, rotation_scale: f64, seed: u64) -> PyResult<PyCircuit> {
    let mut rng = harness::rng_for(seed, 0);
    Ok(PyCircuit {
        inner: circuit::bind_near_one_fc(&frame.inner, rotation_scale, &mut rng).into_py()?,
    })
}

/// Noisy expectation of the frame observable: the stabilizer engine for
/// Clifford circuits under Pauli-compatible models, the density-matrix
/// simulator otherwise.
#[pyfunction]
fn noisy_expectation(circuit: &PyCircuit, model: &PyNoiseModel) -> PyResult<f64> {
    harness::expectation_auto(&circuit.inner, &model.inner).into_py()
}

/// Second-order virtual distillation `Tr(Q rho^2)/Tr(rho^2)`.
#[pyfunction]
fn virtual_distillation(circuit: &PyCircuit, model: &PyNoiseModel) -> PyResult<f64> {
    mitigation::virtual_distillation(&circuit.inner, &model.inner).into_py()
}

/// Deterministic probabilistic error cancellation with inverse-map
/// parameter `lam` applied after every noisy two-qubit gate.
#[pyfunction]
fn pec_mitigate(circuit: &PyCircuit, model: &PyNoiseModel, lam: f64) -> PyResult<f64> {
    mitigation::pec_mitigate(&circuit.inner, &model.inner, lam).into_py()
}

/// Estimates (epsilon0, delta) from error-sensitive (f, y) pairs, with
/// optional importance weights `3^{-w}`.
#[pyfunction]
#[pyo3(signature = (data, weights = None))]
fn estimate_phenomenological(
    data: Vec<(f64, f64)>,
    weights: Option<Vec<f64>>,
) -> PyResult<PyEstimate> {
    let est = ics::estimate_phenomenological(&data, weights.as_deref()).into_py()?;
    Ok(PyEstimate { inner: est })
}

/// Mean squared error `<(y - f)^2>`, optionally importance-weighted.
#[pyfunction]
#[pyo3(signature = (f, y, weights = None))]
fn mse(f: Vec<f64>, y: Vec<f64>, weights: Option<Vec<f64>>) -> PyResult<f64> {
    ics::mse(&f, &y, weights.as_deref()).into_py()
}

/// The two residual-bias bounds of the optimised extrapolation, from
/// per-circuit rate vectors.
#[pyfunction]
#[pyo3(signature = (rates, weights = None, eta = None))]
fn theorem1_bound(
    rates: Vec<Vec<f64>>,
    weights: Option<Vec<f64>>,
    eta: Option<f64>,
) -> PyResult<(f64, f64)> {
    let est = mitigation::estimate_covariance(&rates, weights.as_deref(), eta).into_py()?;
    mitigation::theorem1_bound(&est).into_py()
}

/// Richardson coefficients for the given amplification factors.
#[pyfunction]
fn richardson_coefficients(r_list: Vec<f64>) -> PyResult<Vec<f64>> {
    mitigation::richardson_coefficients(&r_list).into_py()
}

/// Per-gate rate from the total-budget protocol: 10^eta / N with eta
/// uniform in [-2.5, -0.5].
#[pyfunction]
fn sample_total_error_rate(two_qubit_count: usize, seed: u64) -> PyResult<f64> {
    let mut rng = harness::rng_for(seed, 0);
    noise::sample_total_error_rate(two_qubit_count, &mut rng).into_py()
}

/// Ordinary least squares power-law fit on log-log data; returns
/// (exponent, prefactor, r_squared).
#[pyfunction]
fn fit_power_law(points: Vec<(f64, f64)>) -> PyResult<(f64, f64, f64)> {
    let fit = harness::fit_power_law(&points).into_py()?;
    Ok((fit.exponent, fit.prefactor, fit.r_squared))
}

/// Runs an experiment from a JSON config string and returns the written
/// file paths.
#[pyfunction]
#[pyo3(signature = (config_json, workers = 1))]
fn run_experiment(config_json: &str, workers: usize) -> PyResult<Vec<String>> {
    let config = ExperimentConfig::from_json(config_json).into_py()?;
    let summary = harness::run_experiment(&config, workers).into_py()?;
    Ok(summary.files.iter().map(|p| p.display().to_string()).collect())
}

#[pymodule]
fn qem_ics_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyFrame>()?;
    m.add_class::<PyCircuit>()?;
    m.add_class::<PyNoiseModel>()?;
    m.add_class::<PyEstimate>()?;
    m.add_class::<PyFormula>()?;
    m.add_function(wrap_pyfunction!(sample_nonuniform, m)?)?;
    m.add_function(wrap_pyfunction!(sample_uniform, m)?)?;
    m.add_function(wrap_pyfunction!(es_circuit, m)?)?;
    m.add_function(wrap_pyfunction!(bind_random_unitary, m)?)?;
    m.add_function(wrap_pyfunction!(bind_random_clifford, m)?)?;
    m.add_function(wrap_pyfunction!(bind_near_one_fc, m)?)?;
    m.add_function(wrap_pyfunction!(noisy_expectation, m)?)?;
    m.add_function(wrap_pyfunction!(virtual_distillation, m)?)?;
    m.add_function(wrap_pyfunction!(pec_mitigate, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_phenomenological, m)?)?;
    m.add_function(wrap_pyfunction!(mse, m)?)?;
    m.add_function(wrap_pyfunction!(theorem1_bound, m)?)?;
    m.add_function(wrap_pyfunction!(richardson_coefficients, m)?)?;
    m.add_function(wrap_pyfunction!(sample_total_error_rate, m)?)?;
    m.add_function(wrap_pyfunction!(fit_power_law, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
