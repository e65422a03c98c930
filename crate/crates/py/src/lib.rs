use metastab::eval::with_big_stack;
use metastab::harness::experiment::run_bound;
use metastab::harness::{self, parse_config, ExperimentConfig, Format, HarnessError};
use metastab::moduli::{validate_norm_lemma, validate_omega_contract, validate_psi_two_point, Modulus, Role};
use metastab::num::fmt_q;
use metastab::spaces::Space;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn value_err(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn harness_err(e: HarnessError) -> PyErr {
    match e {
        HarnessError::Config(c) => value_err(c),
        HarnessError::Eval(e) => PyRuntimeError::new_err(e.to_string()),
    }
}

/// A parsed experiment. Built lazily on a large-stack worker for each call.
#[pyclass(unsendable, module = "metastab_py")]
struct Experiment {
    config: ExperimentConfig,
}

#[pymethods]
impl Experiment {
    /// Parses a single-experiment JSON (or TOML with `toml=True`) document.
    #[staticmethod]
    #[pyo3(signature = (text, toml = false))]
    fn parse(text: &str, toml: bool) -> PyResult<Self> {
        let mut cfgs = parse_config(text, toml).map_err(value_err)?;
        if cfgs.len() != 1 {
            return Err(PyValueError::new_err(format!("expected one experiment, found {}", cfgs.len())));
        }
        let config = cfgs.remove(0);
        config.build("").map_err(value_err)?;
        Ok(Experiment { config })
    }

    #[getter]
    fn name(&self) -> PyResult<String> {
        Ok(self.config.build("").map_err(value_err)?.name)
    }

    /// Term `n` of the sequence, as exact rational strings.
    fn point(&self, n: u64) -> PyResult<Vec<String>> {
        let c = self.config.clone();
        with_big_stack(move || {
            let e = c.build("").map_err(|e| e.to_string())?;
            e.seq.point_u64(n).map(|p| p.0.iter().map(fmt_q).collect()).map_err(|e| e.to_string())
        })
        .map_err(PyRuntimeError::new_err)
    }

    /// Least N with every pair in [N, N + g(N)] ε-close, or None within the horizon.
    fn least_n(&self) -> PyResult<Option<u64>> {
        let c = self.config.clone();
        with_big_stack(move || {
            let e = c.build("").map_err(|e| e.to_string())?;
            let (eps, g) = match (&e.eps, &e.g) {
                (Some(eps), Some(g)) => (eps.clone(), g.natfn(&e.seq)),
                _ => return Err("epsilon and g are required".to_string()),
            };
            harness::verify_metastability(e.seq.as_ref(), &eps, &g, e.horizon).map_err(|e| e.to_string())
        })
        .map_err(PyRuntimeError::new_err)
    }

    /// Bound evaluation: `(theta, applications, stage)`; theta is `FUEL_EXCEEDED` on exhaustion.
    fn bound(&self) -> PyResult<(String, u64, String)> {
        let c = self.config.clone();
        with_big_stack(move || {
            let e = c.build("").map_err(HarnessError::Config)?;
            match run_bound(&e) {
                Ok(Some(t)) => Ok((t.theta, t.applications, t.stage)),
                Ok(None) => Err(HarnessError::Eval(metastab::eval::EvalError::Domain("bound needs a resolvent schema".into()))),
                Err(HarnessError::Eval(metastab::eval::EvalError::FuelExceeded { applications, stage, .. })) => {
                    Ok((harness::FUEL_EXCEEDED.to_string(), applications, stage))
                }
                Err(e) => Err(e),
            }
        })
        .map_err(harness_err)
    }

    /// Full experiment report as a JSON string.
    fn run(&self) -> PyResult<String> {
        let c = self.config.clone();
        let bytes = with_big_stack(move || {
            let e = c.build("")?;
            let r = harness::run_experiment(&e)?;
            harness::export_report(&r, Format::Json).map_err(|m| HarnessError::Eval(metastab::eval::EvalError::Domain(m)))
        })
        .map_err(harness_err)?;
        String::from_utf8(bytes).map_err(value_err)
    }

    fn __repr__(&self) -> String {
        format!("Experiment({:?})", self.name().unwrap_or_default())
    }
}

/// Runs seeded ε-limsup batches; returns `(passed, failed)`.
#[pyfunction]
#[pyo3(signature = (seed = 0, contract = 200, soundness = 100))]
pub fn limsup_batch(seed: u64, contract: usize, soundness: usize) -> PyResult<(usize, usize)> {
    let b = harness::limsup_batch(seed, contract, soundness).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok((b.passed, b.failed))
}

/// Violation counts for the ψ, ω and norm-lemma checks on the Hilbert box of dimension `dim`.
#[pyfunction]
#[pyo3(signature = (dim = 2, samples = 1000, seed = 0))]
pub fn check_moduli(dim: usize, samples: usize, seed: u64) -> PyResult<Vec<(String, usize, usize)>> {
    let sp = Space::hilbert_box(dim);
    let eta = Modulus::preset("hilbert-eta", Role::Convexity).map_err(value_err)?;
    let tau = Modulus::preset("identity-tau", Role::Smoothness).map_err(value_err)?;
    Ok([
        ("psi", validate_psi_two_point(&sp, sp.b, &eta, samples, seed)),
        ("omega", validate_omega_contract(&sp, sp.b, &tau, samples, seed)),
        ("norm-lemma", validate_norm_lemma(&sp, sp.b, samples, seed)),
    ]
    .into_iter()
    .map(|(k, r)| (k.to_string(), r.checked, r.violations.len()))
    .collect())
}

#[pymodule]
fn metastab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Experiment>()?;
    m.add_function(wrap_pyfunction!(limsup_batch, m)?)?;
    m.add_function(wrap_pyfunction!(check_moduli, m)?)?;
    m.add("FUEL_EXCEEDED", harness::FUEL_EXCEEDED)?;
    Ok(())
}
