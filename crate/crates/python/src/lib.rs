//! Python bindings: model parameters, dynamical and stationary QFI,
//! exceptional-point search, power-law fits and the dense oracle.

use ixy_core as core;
use ixy_core::analysis::{PhaseGrid, EP_BRACKET, EP_TOLERANCE};
use ixy_core::metrology::default_stationary_step;
use ixy_core::oracle::{default_dense_step, ExchangeSign};
use ixy_core::{AnisotropyMode, ModeRange, ThetaKind};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: core::Error) -> PyErr {
    match e {
        core::Error::Domain(_) | core::Error::SizeGuard { .. } => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn theta_kind(s: &str) -> PyResult<ThetaKind> {
    match s {
        "field" | "h" => Ok(ThetaKind::Field),
        "anisotropy" | "gamma" => Ok(ThetaKind::Anisotropy),
        _ => Err(PyValueError::new_err(format!(
            "theta must be 'h' or 'gamma', got {s:?}"
        ))),
    }
}

fn anisotropy_mode(s: &str) -> PyResult<AnisotropyMode> {
    match s {
        "non-hermitian" => Ok(AnisotropyMode::NonHermitian),
        "hermitian" => Ok(AnisotropyMode::Hermitian),
        _ => Err(PyValueError::new_err(format!(
            "anisotropy must be 'non-hermitian' or 'hermitian', got {s:?}"
        ))),
    }
}

fn mode_range(s: &str) -> PyResult<ModeRange> {
    match s {
        "full" => Ok(ModeRange::Full),
        "paper-reduced" => Ok(ModeRange::PaperReduced),
        _ => Err(PyValueError::new_err(format!(
            "mode_range must be 'full' or 'paper-reduced', got {s:?}"
        ))),
    }
}

fn phase_grid(s: &str) -> PyResult<PhaseGrid> {
    match s {
        "continuum" => Ok(PhaseGrid::Continuum),
        "modes" => Ok(PhaseGrid::Modes),
        _ => Err(PyValueError::new_err(format!(
            "grid must be 'continuum' or 'modes', got {s:?}"
        ))),
    }
}

/// Parameters of the chain. `anisotropy` is `'non-hermitian'` or `'hermitian'`.
#[pyclass(name = "ModelParams", frozen)]
struct PyModelParams {
    inner: core::ModelParams,
}

#[pymethods]
impl PyModelParams {
    #[new]
    #[pyo3(signature = (n, z, alpha, gamma, h, anisotropy = "non-hermitian", mode_range = "full"))]
    fn new(n: usize, z: usize, alpha: f64, gamma: f64, h: f64, anisotropy: &str, mode_range: &str) -> PyResult<Self> {
        let inner = core::ModelParams::new(n, z, alpha, gamma, h)
            .map_err(to_py)?
            .with_anisotropy(anisotropy_mode(anisotropy)?)
            .with_mode_range(self::mode_range(mode_range)?);
        Ok(Self { inner })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n
    }

    #[getter]
    fn z(&self) -> usize {
        self.inner.z
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.gamma
    }

    #[getter]
    fn h(&self) -> f64 {
        self.inner.h
    }

    #[getter]
    fn anisotropy(&self) -> &'static str {
        match self.inner.anisotropy {
            AnisotropyMode::NonHermitian => "non-hermitian",
            AnisotropyMode::Hermitian => "hermitian",
        }
    }

    /// Copy with some fields replaced.
    #[pyo3(signature = (*, n = None, z = None, h = None, gamma = None, anisotropy = None))]
    fn replace(
        &self,
        n: Option<usize>,
        z: Option<usize>,
        h: Option<f64>,
        gamma: Option<f64>,
        anisotropy: Option<&str>,
    ) -> PyResult<Self> {
        let mut p = self.inner;
        p.n = n.unwrap_or(p.n);
        p.z = z.unwrap_or(p.z);
        p.h = h.unwrap_or(p.h);
        p.gamma = gamma.unwrap_or(p.gamma);
        if let Some(a) = anisotropy {
            p.anisotropy = anisotropy_mode(a)?;
        }
        p.validate().map_err(to_py)?;
        Ok(Self { inner: p })
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!(
            "ModelParams(n={}, z={}, alpha={}, gamma={}, h={}, anisotropy='{}')",
            p.n,
            p.z,
            p.alpha,
            p.gamma,
            p.h,
            self.anisotropy()
        )
    }
}

/// Result of a least-squares fit of `log10 y` against `log10 x`.
#[pyclass(name = "PowerFit", frozen, get_all)]
struct PyPowerFit {
    slope: f64,
    intercept: f64,
    r_squared: f64,
    slope_stderr: f64,
    window: (f64, f64),
    n_points: usize,
    dropped: usize,
}

impl From<core::PowerFit> for PyPowerFit {
    fn from(f: core::PowerFit) -> Self {
        Self {
            slope: f.slope,
            intercept: f.intercept,
            r_squared: f.r_squared,
            slope_stderr: f.slope_stderr,
            window: f.window,
            n_points: f.n_points,
            dropped: f.dropped,
        }
    }
}

#[pymethods]
impl PyPowerFit {
    fn __repr__(&self) -> String {
        format!(
            "PowerFit(slope={}, r_squared={}, n_points={})",
            self.slope, self.r_squared, self.n_points
        )
    }
}

#[pyclass(name = "ExceptionalPoint", frozen, get_all)]
struct PyExceptionalPoint {
    h_e: f64,
    bracket: (f64, f64),
    tolerance: f64,
    iterations: usize,
}

#[pymethods]
impl PyExceptionalPoint {
    fn __repr__(&self) -> String {
        format!("ExceptionalPoint(h_e={}, iterations={})", self.h_e, self.iterations)
    }
}

#[pyclass(name = "StationaryQfi", frozen, get_all)]
struct PyStationaryQfi {
    value: f64,
    fd_step: f64,
    min_step: f64,
    shortened_modes: usize,
    straddled_modes: usize,
    exceptional_modes: usize,
}

#[pymethods]
impl PyStationaryQfi {
    fn __repr__(&self) -> String {
        format!(
            "StationaryQfi(value={}, straddled_modes={})",
            self.value, self.straddled_modes
        )
    }
}

/// Dynamical QFI of the evolved, normalized state at time `t`.
#[pyfunction]
#[pyo3(signature = (params, t, theta = "h"))]
fn dynamical_qfi(params: &PyModelParams, t: f64, theta: &str) -> PyResult<f64> {
    Ok(core::dynamical_qfi(&params.inner, t, theta_kind(theta)?)
        .map_err(to_py)?
        .value)
}

/// Dynamical QFI on a list of times.
#[pyfunction]
#[pyo3(signature = (params, times, theta = "h"))]
fn qfi_curve(py: Python<'_>, params: &PyModelParams, times: Vec<f64>, theta: &str) -> PyResult<Vec<f64>> {
    let kind = theta_kind(theta)?;
    let p = params.inner;
    let samples = py
        .detach(|| core::DynamicalSensor::new(&p).and_then(|s| s.curve(&times, kind)))
        .map_err(to_py)?;
    Ok(samples.into_iter().map(|s| s.value).collect())
}

/// Per-mode QFI contributions at time `t`, indexed by `p - 1`.
#[pyfunction]
#[pyo3(signature = (params, t, theta = "h"))]
fn mode_qfis(params: &PyModelParams, t: f64, theta: &str) -> PyResult<Vec<f64>> {
    let kind = theta_kind(theta)?;
    core::DynamicalSensor::new(&params.inner)
        .and_then(|s| s.mode_qfis(t, kind))
        .map_err(to_py)
}

/// Stationary-probe QFI; `fd_step=None` uses `1e-6 max(1, |theta|)`.
#[pyfunction]
#[pyo3(signature = (params, theta = "h", fd_step = None))]
fn stationary_qfi(params: &PyModelParams, theta: &str, fd_step: Option<f64>) -> PyResult<PyStationaryQfi> {
    let kind = theta_kind(theta)?;
    let step = fd_step.unwrap_or_else(|| default_stationary_step(params.inner.theta(kind)));
    let s = core::stationary_qfi(&params.inner, kind, step).map_err(to_py)?;
    Ok(PyStationaryQfi {
        value: s.sample.value,
        fd_step: s.fd_step,
        min_step: s.min_step,
        shortened_modes: s.shortened_modes,
        straddled_modes: s.straddled_modes,
        exceptional_modes: s.exceptional_modes,
    })
}

/// `(p, phi, eps_sq)` for every mode block.
#[pyfunction]
fn dispersion(params: &PyModelParams) -> Vec<(usize, f64, f64)> {
    core::build_blocks(&params.inner)
        .iter()
        .map(|b| (b.p, b.phi, b.eps_sq))
        .collect()
}

/// `'broken'` or `'unbroken'` for the chain's discrete modes.
#[pyfunction]
fn classify_phase(params: &PyModelParams) -> PyResult<&'static str> {
    let c = core::classify_phase(&core::build_blocks(&params.inner)).map_err(to_py)?;
    Ok(match c.label {
        core::Phase::Broken => "broken",
        core::Phase::Unbroken => "unbroken",
    })
}

/// Field of the broken/unbroken boundary; the `h` of `params` is ignored.
#[pyfunction]
#[pyo3(signature = (params, bracket = EP_BRACKET, tol = EP_TOLERANCE, grid = "continuum"))]
fn find_exceptional_point(
    params: &PyModelParams,
    bracket: (f64, f64),
    tol: f64,
    grid: &str,
) -> PyResult<PyExceptionalPoint> {
    let ep = core::find_exceptional_point(&params.inner, bracket, tol, phase_grid(grid)?).map_err(to_py)?;
    Ok(PyExceptionalPoint {
        h_e: ep.h_e,
        bracket: ep.bracket,
        tolerance: ep.tolerance,
        iterations: ep.iterations,
    })
}

/// Power-law fit of `ys` against `xs` over points with `x` inside `window`.
#[pyfunction]
#[pyo3(signature = (xs, ys, window = None))]
fn fit_power_law(xs: Vec<f64>, ys: Vec<f64>, window: Option<(f64, f64)>) -> PyResult<PyPowerFit> {
    if xs.len() != ys.len() {
        return Err(PyValueError::new_err("xs and ys differ in length"));
    }
    let window = window.unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
    let points: Vec<(f64, f64)> = xs.into_iter().zip(ys).collect();
    Ok(core::fit_power_law_xy(&points, window).map_err(to_py)?.into())
}

/// Time-averaged ratio of non-Hermitian to Hermitian QFI over `[t0, t1]`.
#[pyfunction]
#[pyo3(signature = (params, t0, t1, n_grid = 801, theta = "h"))]
fn qfi_ratio_time_avg(params: &PyModelParams, t0: f64, t1: f64, n_grid: usize, theta: &str) -> PyResult<f64> {
    let r = core::qfi_ratio_time_avg(&params.inner, theta_kind(theta)?, t0, t1, n_grid).map_err(to_py)?;
    Ok(r.mean_ratio)
}

/// QFI from the dense `2^N` evolution (`N <= 12`).
#[pyfunction]
#[pyo3(signature = (params, t, theta = "h", fd_step = None))]
fn dense_evolve_qfi(params: &PyModelParams, t: f64, theta: &str, fd_step: Option<f64>) -> PyResult<f64> {
    let kind = theta_kind(theta)?;
    let step = fd_step.unwrap_or_else(|| default_dense_step(params.inner.theta(kind)));
    let q = core::dense_evolve_qfi(&params.inner, t, kind, step, ExchangeSign::Negated).map_err(to_py)?;
    Ok(q.value)
}

#[pyfunction]
fn critical_field_pi(alpha: f64, z: usize) -> PyResult<f64> {
    core::critical_field_pi(alpha, z).map_err(to_py)
}

#[pyfunction]
fn critical_field_zero() -> f64 {
    core::critical_field_zero()
}

#[pymodule]
fn ixy(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModelParams>()?;
    m.add_class::<PyPowerFit>()?;
    m.add_class::<PyExceptionalPoint>()?;
    m.add_class::<PyStationaryQfi>()?;
    m.add_function(wrap_pyfunction!(dynamical_qfi, m)?)?;
    m.add_function(wrap_pyfunction!(qfi_curve, m)?)?;
    m.add_function(wrap_pyfunction!(mode_qfis, m)?)?;
    m.add_function(wrap_pyfunction!(stationary_qfi, m)?)?;
    m.add_function(wrap_pyfunction!(dispersion, m)?)?;
    m.add_function(wrap_pyfunction!(classify_phase, m)?)?;
    m.add_function(wrap_pyfunction!(find_exceptional_point, m)?)?;
    m.add_function(wrap_pyfunction!(fit_power_law, m)?)?;
    m.add_function(wrap_pyfunction!(qfi_ratio_time_avg, m)?)?;
    m.add_function(wrap_pyfunction!(dense_evolve_qfi, m)?)?;
    m.add_function(wrap_pyfunction!(critical_field_pi, m)?)?;
    m.add_function(wrap_pyfunction!(critical_field_zero, m)?)?;
    Ok(())
}
