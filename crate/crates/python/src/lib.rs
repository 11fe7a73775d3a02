//! Python bindings. Nested results (reports, cycles, sweeps) are returned as
//! plain dicts built from their JSON form; configuration objects are accepted
//! as JSON strings with the same schema as the CLI config sections.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use hiddenosc::describing;
use hiddenosc::dynamics::{integrate, ConvergenceCriterion, IntegratorConfig, TerminalStatus};
use hiddenosc::models::{self, Model as CoreModel};
use hiddenosc::oscillation::{self, CycleSearch, OmegaLimitOptions, PoincareSection};
use hiddenosc::verify::{self, ProbeConfig, TheoremVariant};

fn err(e: hiddenosc::Error) -> PyErr {
    match e {
        hiddenosc::Error::InvalidParameter { .. } | hiddenosc::Error::DimensionMismatch { .. } => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn parse<T: serde::de::DeserializeOwned + Default>(json: Option<&str>) -> PyResult<T> {
    match json {
        None => Ok(T::default()),
        Some(s) => serde_json::from_str(s).map_err(|e| PyValueError::new_err(e.to_string())),
    }
}

fn to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

#[pyclass(module = "hiddenosc_py", frozen, from_py_object)]
#[derive(Clone)]
pub struct KeldyshParams {
    inner: models::KeldyshParams,
}

#[pymethods]
impl KeldyshParams {
    #[new]
    #[pyo3(signature = (friction, mu, inertia = 1.0, stiffness = 1.0, damper = 1.0))]
    fn new(friction: f64, mu: f64, inertia: f64, stiffness: f64, damper: f64) -> PyResult<Self> {
        let inner = models::KeldyshParams {
            inertia,
            stiffness,
            friction,
            damper,
            mu,
        };
        inner.validate().map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn inertia(&self) -> f64 {
        self.inner.inertia
    }
    #[getter]
    fn stiffness(&self) -> f64 {
        self.inner.stiffness
    }
    #[getter]
    fn friction(&self) -> f64 {
        self.inner.friction
    }
    #[getter]
    fn damper(&self) -> f64 {
        self.inner.damper
    }
    #[getter]
    fn mu(&self) -> f64 {
        self.inner.mu
    }

    /// `(certified, margin, bound)`.
    fn stability_margin(&self) -> PyResult<(bool, f64, f64)> {
        let m = verify::keldysh_stability_margin(&self.inner).map_err(err)?;
        Ok((m.certified_globally_stable, m.margin, m.bound))
    }

    fn hb_predict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &describing::hb_predict(&self.inner).map_err(err)?)
    }

    #[pyo3(signature = (search = None, integrator = None))]
    fn hb_vs_simulation<'py>(
        &self,
        py: Python<'py>,
        search: Option<&str>,
        integrator: Option<&str>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let search: CycleSearch = parse(search)?;
        let cfg: IntegratorConfig = parse(integrator)?;
        let inner = self.inner;
        let cmp = py
            .detach(|| describing::hb_vs_simulation(&inner, &PoincareSection::keldysh(), &search, &cfg))
            .map_err(err)?;
        to_py(py, &cmp)
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!(
            "KeldyshParams(friction={}, mu={}, inertia={}, stiffness={}, damper={})",
            p.friction, p.mu, p.inertia, p.stiffness, p.damper
        )
    }
}

#[pyclass(module = "hiddenosc_py", frozen)]
pub struct Trajectory {
    inner: hiddenosc::dynamics::Trajectory,
    labels: Vec<String>,
    csv: String,
}

#[pymethods]
impl Trajectory {
    #[getter]
    fn times(&self) -> Vec<f64> {
        self.inner.samples.iter().map(|s| s.t).collect()
    }
    #[getter]
    fn states(&self) -> Vec<Vec<f64>> {
        self.inner.samples.iter().map(|s| s.x.clone()).collect()
    }
    #[getter]
    fn modes(&self) -> Vec<&'static str> {
        self.inner.samples.iter().map(|s| s.mode.as_str()).collect()
    }
    #[getter]
    fn labels(&self) -> Vec<String> {
        self.labels.clone()
    }
    #[getter]
    fn status(&self) -> &'static str {
        match self.inner.status {
            TerminalStatus::HorizonReached => "horizon_reached",
            TerminalStatus::Converged => "converged",
            TerminalStatus::Diverged => "diverged",
            TerminalStatus::IntegratorFailure => "integrator_failure",
        }
    }
    fn events<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.events)
    }
    fn to_csv(&self) -> String {
        self.csv.clone()
    }
    fn __len__(&self) -> usize {
        self.inner.samples.len()
    }
}

/// A system together with its stationary set and certificate.
#[pyclass(module = "hiddenosc_py", frozen)]
pub struct Model {
    inner: CoreModel,
}

#[pymethods]
impl Model {
    #[staticmethod]
    fn keldysh(params: &KeldyshParams) -> PyResult<Self> {
        Ok(Self {
            inner: models::build_keldysh(&params.inner).map_err(err)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (tau1 = 1.0, tau2 = 1.0, k_vco = 1.0, omega_free = 0.5))]
    fn pll(tau1: f64, tau2: f64, k_vco: f64, omega_free: f64) -> PyResult<Self> {
        let p = models::PllParams {
            tau1,
            tau2,
            k_vco,
            omega_free,
        };
        Ok(Self {
            inner: models::build_pll(&p).map_err(err)?,
        })
    }

    #[staticmethod]
    fn bk_example() -> Self {
        Self {
            inner: models::build_bk_example(),
        }
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }
    #[getter]
    fn dim(&self) -> usize {
        self.inner.system.dim()
    }
    #[getter]
    fn labels(&self) -> Vec<String> {
        self.inner.labels.clone()
    }

    fn stationary<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.stationary)
    }

    /// Right-hand side at `x` (the active branch, or the Filippov field when sliding).
    fn field(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        if x.len() != self.inner.system.dim() {
            return Err(PyValueError::new_err("state dimension mismatch"));
        }
        Ok(self.inner.system.eval(&x))
    }

    fn certificate_value(&self, x: Vec<f64>) -> PyResult<f64> {
        let c = self
            .inner
            .certificate
            .as_ref()
            .ok_or_else(|| PyValueError::new_err("model has no certificate"))?;
        Ok(c.value(&x))
    }

    #[pyo3(signature = (x0, integrator = None, stop_at_rest = true))]
    fn simulate(&self, py: Python<'_>, x0: Vec<f64>, integrator: Option<&str>, stop_at_rest: bool) -> PyResult<Trajectory> {
        let cfg: IntegratorConfig = parse(integrator)?;
        let m = &self.inner;
        let inner = py
            .detach(|| {
                let stop = ConvergenceCriterion::new(&m.stationary);
                integrate(&m.system, &x0, &cfg, stop_at_rest.then_some(&stop))
            })
            .map_err(err)?;
        let csv = hiddenosc::io::trajectory_csv_string(&inner, &m.labels, m.certificate.as_ref()).map_err(err)?;
        Ok(Trajectory {
            inner,
            labels: m.labels.clone(),
            csv,
        })
    }

    /// Check the theorem hypotheses matching the model; returns the report dict.
    #[pyo3(signature = (probe = None, starts = None, integrator = None))]
    fn verify<'py>(
        &self,
        py: Python<'py>,
        probe: Option<&str>,
        starts: Option<Vec<Vec<f64>>>,
        integrator: Option<&str>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let probe: ProbeConfig = parse(probe)?;
        let cfg: IntegratorConfig = parse(integrator)?;
        let m = &self.inner;
        let cert = m
            .certificate
            .as_ref()
            .ok_or_else(|| PyValueError::new_err("model has no certificate"))?;
        let starts = starts.unwrap_or_else(|| {
            if m.system.dim() == 2 {
                verify::start_grid(&probe.box_lo, &probe.box_hi, 10)
            } else {
                Vec::new()
            }
        });
        let report = py
            .detach(|| match cert.variant {
                TheoremVariant::BarbashinKrasovsky => verify::check_barbashin_krasovsky(&m.system, cert, &probe),
                variant => {
                    let trs = verify::simulate_starts(&m.system, &m.stationary, &starts, &cfg)?;
                    if variant == TheoremVariant::LeonovCylindrical {
                        verify::check_leonov_cylindrical(&m.system, cert, &m.stationary, &trs, &probe)
                    } else {
                        verify::check_gelig_leonov(&m.system, cert, &m.stationary, &trs, &probe)
                    }
                }
            })
            .map_err(err)?;
        to_py(py, &report)
    }

    /// Cycles on `section` (JSON; the Keldysh half-line by default),
    /// classified with probes of radius `epsilon` when given.
    #[pyo3(signature = (section = None, search = None, integrator = None, epsilon = None, n_dirs = 16))]
    fn find_cycles<'py>(
        &self,
        py: Python<'py>,
        section: Option<&str>,
        search: Option<&str>,
        integrator: Option<&str>,
        epsilon: Option<f64>,
        n_dirs: usize,
    ) -> PyResult<Bound<'py, PyAny>> {
        let section = match section {
            Some(s) => serde_json::from_str(s).map_err(|e| PyValueError::new_err(e.to_string()))?,
            None => PoincareSection::keldysh(),
        };
        let search: CycleSearch = parse(search)?;
        let cfg: IntegratorConfig = parse(integrator)?;
        let m = &self.inner;
        let cycles = py
            .detach(|| -> hiddenosc::Result<_> {
                let mut cycles = oscillation::find_cycles(&m.system, &section, &m.stationary, &search, &cfg)?;
                if let Some(eps) = epsilon {
                    let opts = OmegaLimitOptions::default();
                    let classes = (0..cycles.len())
                        .map(|i| {
                            oscillation::classify_cycle(&m.system, &cycles, i, &m.stationary, eps, n_dirs, &cfg, &opts)
                                .map(|o| o.classification)
                        })
                        .collect::<hiddenosc::Result<Vec<_>>>()?;
                    for (c, k) in cycles.iter_mut().zip(classes) {
                        c.classification = k;
                    }
                }
                Ok(cycles)
            })
            .map_err(err)?;
        to_py(py, &cycles)
    }

    fn __repr__(&self) -> String {
        format!("Model({})", self.inner.name)
    }
}

#[pyfunction]
fn keldysh_threshold(friction: f64, damper: f64) -> PyResult<f64> {
    describing::keldysh_threshold(friction, damper).map_err(err)
}

#[pyfunction]
fn describing_gain(friction: f64, damper: f64, amplitude: f64) -> PyResult<f64> {
    describing::describing_gain(friction, damper, amplitude).map_err(err)
}

/// Sweep over `axes` (JSON list of `{param, min, max, points}`); returns the
/// result dict and the CSV text.
#[pyfunction]
#[pyo3(signature = (base, axes, options = None, integrator = None))]
fn sweep_keldysh<'py>(
    py: Python<'py>,
    base: &KeldyshParams,
    axes: &str,
    options: Option<&str>,
    integrator: Option<&str>,
) -> PyResult<(Bound<'py, PyAny>, String)> {
    let axes: Vec<hiddenosc::sweep::SweepAxis> =
        serde_json::from_str(axes).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let opts: hiddenosc::sweep::SweepOptions = parse(options)?;
    let cfg: IntegratorConfig = parse(integrator)?;
    let b = base.inner;
    let result = py.detach(|| hiddenosc::sweep::sweep_keldysh(&b, &axes, &opts, &cfg)).map_err(err)?;
    let csv = result.to_csv().map_err(err)?;
    Ok((to_py(py, &result)?, csv))
}

#[pymodule]
fn hiddenosc_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<KeldyshParams>()?;
    m.add_class::<Model>()?;
    m.add_class::<Trajectory>()?;
    m.add_function(wrap_pyfunction!(keldysh_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(describing_gain, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_keldysh, m)?)?;
    let defaults = PyDict::new(m.py());
    defaults.set_item("integrator", serde_json::to_string(&IntegratorConfig::default()).unwrap())?;
    defaults.set_item("cycle_search", serde_json::to_string(&CycleSearch::default()).unwrap())?;
    defaults.set_item("probe", serde_json::to_string(&ProbeConfig::default()).unwrap())?;
    m.add("DEFAULTS", defaults)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
