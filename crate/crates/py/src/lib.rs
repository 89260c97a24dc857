//! Python bindings: curves, maps, the energy, the solver and the analysis
//! helpers, exposed as the `distmin` module.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use distmin_core::analysis::{self, Bump, NecessaryCondition, Which};
use distmin_core::functional::{self, EnergyReport, Mode};
use distmin_core::tensor::{self as core_tensor, Metric, SymTensor};
use distmin_core::{io, optimizer, Error};

fn py_err(e: Error) -> PyErr {
    if e.is_regime() {
        PyRuntimeError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn parse_mode(s: &str) -> PyResult<Mode> {
    s.parse().map_err(py_err)
}

#[pyclass(name = "Curve", frozen)]
struct PyCurve(distmin_core::Curve);

#[pymethods]
impl PyCurve {
    #[new]
    #[pyo3(signature = (points, base_index=0, strict=false))]
    fn new(points: Vec<(f64, f64)>, base_index: usize, strict: bool) -> PyResult<Self> {
        let pts = points.into_iter().map(|(x, y)| [x, y]).collect();
        let c = if strict {
            distmin_core::Curve::new_strict(pts, base_index)
        } else {
            distmin_core::Curve::new(pts, base_index)
        };
        c.map(PyCurve).map_err(py_err)
    }

    /// Reads a CSV or JSON curve file.
    #[staticmethod]
    #[pyo3(signature = (path, strict=false))]
    fn load(path: std::path::PathBuf, strict: bool) -> PyResult<Self> {
        io::read_curve(&path, strict).map(PyCurve).map_err(py_err)
    }

    #[getter]
    fn points(&self) -> Vec<(f64, f64)> {
        self.0.points().iter().map(|p| (p[0], p[1])).collect()
    }

    #[getter]
    fn base_index(&self) -> usize {
        self.0.base_index()
    }

    fn arc_length(&self) -> f64 {
        self.0.arc_length()
    }

    /// "positive" (counterclockwise) or "negative".
    fn orientation(&self) -> PyResult<&'static str> {
        Ok(match self.0.orientation().map_err(py_err)? {
            distmin_core::Orientation::Positive => "positive",
            distmin_core::Orientation::Negative => "negative",
        })
    }

    fn parametrize(&self, m: usize) -> PyResult<PyArcLengthParam> {
        distmin_core::parametrize(&self.0, m)
            .map(PyArcLengthParam)
            .map_err(py_err)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

#[pyclass(name = "ArcLengthParam", frozen)]
struct PyArcLengthParam(distmin_core::ArcLengthParam);

#[pymethods]
impl PyArcLengthParam {
    #[getter]
    fn length(&self) -> f64 {
        self.0.length()
    }

    #[getter]
    fn grid_size(&self) -> usize {
        self.0.grid_size()
    }

    #[getter]
    fn samples(&self) -> Vec<(f64, f64)> {
        self.0.samples().iter().map(|p| (p[0], p[1])).collect()
    }

    #[getter]
    fn tangents(&self) -> Vec<(f64, f64)> {
        self.0.tangents().iter().map(|p| (p[0], p[1])).collect()
    }

    fn point_at(&self, s: f64) -> (f64, f64) {
        let p = self.0.point_at(s);
        (p[0], p[1])
    }
}

#[pyclass(name = "Reparametrization", frozen, from_py_object)]
#[derive(Clone)]
struct PyReparametrization(functional::Reparametrization);

fn report_dict<'py>(py: Python<'py>, r: &EnergyReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("psi", r.psi)?;
    d.set_item("phi", r.phi)?;
    d.set_item("el_residual_sup", r.el_residual_sup)?;
    d.set_item("min_udot_sq", r.min_udot_sq)?;
    d.set_item("second_variation_ok", r.second_variation_ok)?;
    d.set_item("orientation", r.orientation.as_str())?;
    Ok(d)
}

#[pymethods]
impl PyReparametrization {
    #[new]
    fn new(l_m: f64, l_n: f64, mode: &str, values: Vec<f64>) -> PyResult<Self> {
        functional::Reparametrization::new(l_m, l_n, parse_mode(mode)?, values)
            .map(PyReparametrization)
            .map_err(py_err)
    }

    /// `v` (preserve) or `w` (reverse) sampled on `m` intervals.
    #[staticmethod]
    fn linear(l_m: f64, l_n: f64, mode: &str, m: usize) -> PyResult<Self> {
        optimizer::initialize(l_m, l_n, parse_mode(mode)?, m, optimizer::InitKind::Linear)
            .map(PyReparametrization)
            .map_err(py_err)
    }

    #[staticmethod]
    fn random(l_m: f64, l_n: f64, mode: &str, m: usize, seed: u64) -> PyResult<Self> {
        optimizer::initialize(
            l_m,
            l_n,
            parse_mode(mode)?,
            m,
            optimizer::InitKind::RandomMonotone { seed },
        )
        .map(PyReparametrization)
        .map_err(py_err)
    }

    #[staticmethod]
    fn from_csv(text: &str) -> PyResult<Self> {
        io::parse_map_csv(text).map(PyReparametrization).map_err(py_err)
    }

    fn to_csv(&self) -> String {
        io::map_to_csv(&self.0)
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.0.values().to_vec()
    }

    #[getter]
    fn mode(&self) -> &'static str {
        self.0.mode().as_str()
    }

    #[getter]
    fn source_length(&self) -> f64 {
        self.0.source_length()
    }

    #[getter]
    fn target_length(&self) -> f64 {
        self.0.target_length()
    }

    #[getter]
    fn intervals(&self) -> usize {
        self.0.intervals()
    }

    fn abscissae(&self) -> Vec<f64> {
        self.0.abscissae()
    }

    fn psi(&self) -> PyResult<f64> {
        functional::psi(&self.0).map_err(py_err)
    }

    /// Gradient with respect to the interior values.
    fn psi_gradient(&self) -> PyResult<Vec<f64>> {
        functional::psi_gradient(&self.0).map_err(py_err)
    }

    fn el_residual(&self) -> Vec<f64> {
        functional::el_residual(&self.0)
    }

    fn energy_report<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        report_dict(py, &functional::energy_report(&self.0).map_err(py_err)?)
    }

    fn reflected(&self) -> Self {
        PyReparametrization(self.0.reflected())
    }

    fn __len__(&self) -> usize {
        self.0.values().len()
    }
}

#[pyclass(name = "SolveResult", frozen)]
struct PySolveResult(optimizer::SolveResult);

#[pymethods]
impl PySolveResult {
    #[getter]
    fn map(&self) -> PyReparametrization {
        PyReparametrization(self.0.map().clone())
    }

    #[getter]
    fn converged(&self) -> bool {
        self.0.converged
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.0.iterations
    }

    #[getter]
    fn projected_gradient_sup(&self) -> f64 {
        self.0.projected_gradient_sup
    }

    #[getter]
    fn floor_active(&self) -> usize {
        self.0.floor_active
    }

    #[getter]
    fn diagnostic(&self) -> Option<String> {
        self.0.diagnostic.clone()
    }

    #[getter]
    fn report<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        report_dict(py, &self.0.report)
    }
}

#[pyfunction]
#[pyo3(signature = (l_m, l_n, mode="preserve", grid=1024, seed=0, max_iters=100_000, init=None))]
fn minimize(
    py: Python<'_>,
    l_m: f64,
    l_n: f64,
    mode: &str,
    grid: usize,
    seed: u64,
    max_iters: usize,
    init: Option<PyReparametrization>,
) -> PyResult<PySolveResult> {
    let mode = parse_mode(mode)?;
    let cfg = optimizer::SolverConfig {
        grid_size: grid,
        seed,
        max_iters,
        ..Default::default()
    };
    let init = init.map(|u| u.0);
    py.detach(|| optimizer::minimize_psi(l_m, l_n, mode, &cfg, init.as_ref()))
        .map(PySolveResult)
        .map_err(py_err)
}

#[pyfunction]
fn phi_curves(m_curve: &PyArcLengthParam, n_curve: &PyArcLengthParam, u: &PyReparametrization) -> PyResult<f64> {
    functional::phi_curves(&m_curve.0, &n_curve.0, &u.0).map_err(py_err)
}

/// `(v, w, phi_min)`; raises RuntimeError when `l_n < l_m`.
#[pyfunction]
fn analytic_minimizers(l_m: f64, l_n: f64, m: usize) -> PyResult<(PyReparametrization, PyReparametrization, f64)> {
    let a = analysis::analytic_minimizers(l_m, l_n, m).map_err(py_err)?;
    Ok((PyReparametrization(a.v), PyReparametrization(a.w), a.phi_min))
}

#[pyfunction]
fn phi_min(l_m: f64, l_n: f64) -> f64 {
    analysis::phi_min(l_m, l_n)
}

#[pyfunction]
fn diagnose<'py>(py: Python<'py>, l_m: f64, l_n: f64) -> PyResult<Bound<'py, PyDict>> {
    let d = analysis::diagnose(l_m, l_n).map_err(py_err)?;
    let out = PyDict::new(py);
    out.set_item("ratio", d.ratio)?;
    out.set_item("regime", d.regime.as_str())?;
    out.set_item("phi_min", d.phi_min)?;
    out.set_item("second_variation_threshold", d.second_variation_threshold)?;
    out.set_item("nonexistence_bound", d.nonexistence_bound)?;
    Ok(out)
}

#[pyfunction]
#[pyo3(signature = (u, tol=1e-9))]
fn necessary_condition<'py>(py: Python<'py>, u: &PyReparametrization, tol: f64) -> PyResult<Bound<'py, PyDict>> {
    let out = PyDict::new(py);
    match analysis::necessary_condition_check(&u.0, tol) {
        NecessaryCondition::Pass { min_udot_sq } => {
            out.set_item("status", "pass")?;
            out.set_item("min_udot_sq", min_udot_sq)?;
        }
        NecessaryCondition::Fail { min_udot_sq, location } => {
            out.set_item("status", "fail")?;
            out.set_item("min_udot_sq", min_udot_sq)?;
            out.set_item("location", location)?;
        }
    }
    Ok(out)
}

/// Images of the samples of `m_curve` under `h1` or `h2`.
#[pyfunction]
#[pyo3(signature = (m_curve, n_curve, which="h1"))]
fn compose_minimizer(m_curve: &PyArcLengthParam, n_curve: &PyArcLengthParam, which: &str) -> PyResult<Vec<(f64, f64)>> {
    let which = match which {
        "h1" => Which::H1,
        "h2" => Which::H2,
        other => return Err(PyValueError::new_err(format!("unknown minimizer {other:?}, expected h1 or h2"))),
    };
    let pts = analysis::compose_minimizer(&m_curve.0, &n_curve.0, which).map_err(py_err)?;
    Ok(pts.into_iter().map(|p| (p[0], p[1])).collect())
}

/// `[(k, width, psi), ...]` for the zig-zag minimizing sequence.
#[pyfunction]
#[pyo3(signature = (l_m, l_n, k_max, m=8192))]
fn zigzag_sequence(l_m: f64, l_n: f64, k_max: usize, m: usize) -> PyResult<Vec<(usize, f64, f64)>> {
    let seq = analysis::zigzag_sequence(l_m, l_n, k_max, m).map_err(py_err)?;
    Ok(seq.into_iter().map(|s| (s.k, s.width, s.energy)).collect())
}

/// Second variation of `u` along the probe `ε ρ(t/ε) ζ(t)`, together with
/// the flow-based finite-difference estimate at step `delta`.
#[pyfunction]
#[pyo3(signature = (u, center, radius, eps, delta=1e-3))]
fn second_variation_probe(u: &PyReparametrization, center: f64, radius: f64, eps: f64, delta: f64) -> PyResult<(f64, f64)> {
    let probe =
        analysis::probe_field(eps, Bump { center, radius }, u.0.source_length(), u.0.intervals()).map_err(py_err)?;
    let value = analysis::second_variation_1d(&u.0, probe.jet()).map_err(py_err)?;
    let udot = analysis::slope_interpolant(&u.0);
    let check = probe.flow_second_difference(&udot, delta).map_err(py_err)?;
    Ok((value, check))
}

#[pyfunction]
fn g_contract(b1: Vec<Vec<f64>>, b2: Vec<Vec<f64>>, g: Vec<Vec<f64>>) -> PyResult<f64> {
    let b1 = SymTensor::from_rows(&b1).map_err(py_err)?;
    let b2 = SymTensor::from_rows(&b2).map_err(py_err)?;
    let g = Metric::from_rows(&g).map_err(py_err)?;
    core_tensor::g_contract(&b1, &b2, &g).map_err(py_err)
}

#[pyfunction]
fn strain(pullback: Vec<Vec<f64>>, g: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    let b = SymTensor::from_rows(&pullback).map_err(py_err)?;
    let g = Metric::from_rows(&g).map_err(py_err)?;
    core_tensor::strain(&b, &g).map(|s| s.to_rows()).map_err(py_err)
}

#[pymodule]
fn distmin(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCurve>()?;
    m.add_class::<PyArcLengthParam>()?;
    m.add_class::<PyReparametrization>()?;
    m.add_class::<PySolveResult>()?;
    m.add_function(wrap_pyfunction!(minimize, m)?)?;
    m.add_function(wrap_pyfunction!(phi_curves, m)?)?;
    m.add_function(wrap_pyfunction!(analytic_minimizers, m)?)?;
    m.add_function(wrap_pyfunction!(phi_min, m)?)?;
    m.add_function(wrap_pyfunction!(diagnose, m)?)?;
    m.add_function(wrap_pyfunction!(necessary_condition, m)?)?;
    m.add_function(wrap_pyfunction!(compose_minimizer, m)?)?;
    m.add_function(wrap_pyfunction!(zigzag_sequence, m)?)?;
    m.add_function(wrap_pyfunction!(second_variation_probe, m)?)?;
    m.add_function(wrap_pyfunction!(g_contract, m)?)?;
    m.add_function(wrap_pyfunction!(strain, m)?)?;
    Ok(())
}
