//! Python bindings: the vortex profile, weights, Green's kernels, spectral
//! density limits, the |k| = 1 closed form, the spectrum of L_k, single-mode
//! evolution and the configuration-driven pipeline.

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use std::sync::Arc;
use vortexlab::config::RunConfig;
use vortexlab::evolution::{evolve as evolve_mode, timestep_oracle, ThetaField};
use vortexlab::greens::{self, GreenKernel};
use vortexlab::oracle::K1Oracle;
use vortexlab::sdf::{jump_check, pv_residual, DataSource, EpsSchedule, InitialData, SdfSolver, PV_EXCLUSION};
use vortexlab::spectrum::{assemble_lk, lap_coercivity, spectrum_report};
use vortexlab::{norms, pipeline, Grid, ProfileKind, VortexProfile};

fn err(e: vortexlab::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn grid(v_min: f64, v_max: f64, h: f64) -> PyResult<Grid> {
    Grid::new(v_min, v_max, h).map_err(err)
}

fn parse_kind(kind: &str) -> PyResult<ProfileKind> {
    match kind {
        "algebraic" => Ok(ProfileKind::Algebraic),
        "gaussian" => Ok(ProfileKind::Gaussian),
        _ => Err(PyValueError::new_err(format!("unknown profile kind `{kind}`"))),
    }
}

/// Gaussian data, or linear interpolation of (v, f) samples on a uniform grid.
fn data_source(center: f64, width: f64, amplitude: f64, samples: Option<(Vec<f64>, Vec<f64>)>) -> PyResult<DataSource> {
    match samples {
        None => Ok(DataSource::gaussian(center, width, amplitude)),
        Some((vs, fs)) => {
            if vs.len() != fs.len() || vs.len() < 2 {
                return Err(PyValueError::new_err("samples need two equal-length lists of at least two values"));
            }
            let h = (vs[vs.len() - 1] - vs[0]) / (vs.len() - 1) as f64;
            let g = grid(vs[0], vs[vs.len() - 1], h)?;
            if g.n != fs.len() {
                return Err(PyValueError::new_err("sample v values must be uniformly spaced"));
            }
            Ok(DataSource::Samples { grid: g, values: fs })
        }
    }
}

/// Radial vortex profile Ω and the derived angular velocity b, B(v) = b(e^v).
#[pyclass(name = "Profile", frozen)]
struct PyProfile {
    inner: VortexProfile,
}

#[pymethods]
impl PyProfile {
    #[new]
    #[pyo3(signature = (kind = "algebraic"))]
    fn new(kind: &str) -> PyResult<Self> {
        Ok(PyProfile { inner: VortexProfile::new(parse_kind(kind)?) })
    }

    fn omega(&self, r: f64) -> PyResult<f64> {
        self.inner.eval_omega(r).map_err(err)
    }

    fn b(&self, r: f64) -> PyResult<f64> {
        self.inner.eval_b(r).map_err(err)
    }

    #[getter]
    fn b0(&self) -> f64 {
        self.inner.b0()
    }

    #[getter]
    fn c_star(&self) -> f64 {
        self.inner.c_star
    }

    /// (B, B′, B″, D) at v.
    fn coefficients(&self, v: f64) -> (f64, f64, f64, f64) {
        let c = self.inner.coefficients(v);
        (c.b, c.bp, c.bpp, c.d)
    }

    fn delta_b(&self, v: f64, w: f64) -> f64 {
        self.inner.delta_b(v, w)
    }

    fn __repr__(&self) -> String {
        format!("Profile({:?})", self.inner.kind())
    }
}

/// A tabulated kernel G(v_i, ρ_j).
#[pyclass(name = "GreenKernel", frozen)]
struct PyGreenKernel {
    inner: GreenKernel,
}

#[pymethods]
impl PyGreenKernel {
    #[getter]
    fn nodes(&self) -> Vec<f64> {
        self.inner.grid.nodes()
    }

    #[getter]
    fn k(&self) -> i64 {
        self.inner.k
    }

    /// Row-major rows G(v_i, ·).
    fn values(&self) -> Vec<Vec<f64>> {
        let n = self.inner.grid.n;
        self.inner.values.chunks(n).map(|r| r.to_vec()).collect()
    }

    fn column(&self, j: usize) -> PyResult<Vec<f64>> {
        if j >= self.inner.grid.n {
            return Err(PyValueError::new_err("column index out of range"));
        }
        Ok(self.inner.column(j))
    }

    fn bound_report<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let r = greens::verify_green_bound(&self.inner);
        let d = PyDict::new(py);
        d.set_item("max_ratio", r.max_ratio)?;
        d.set_item("max_ratio_at", r.max_ratio_at)?;
        d.set_item("max_derivative_ratio", r.max_derivative_ratio)?;
        d.set_item("max_derivative_ratio_at", r.max_derivative_ratio_at)?;
        d.set_item("symmetry_residual", r.symmetry_residual)?;
        d.set_item("min_value", r.min_value)?;
        Ok(d)
    }
}

#[pyfunction]
fn varpi(k_eff: f64, w_star: f64, v: f64, rho: f64) -> f64 {
    norms::varpi(k_eff, w_star, v, rho)
}

#[pyfunction]
fn overlap_d(w_star: f64, v: f64, rho: f64) -> f64 {
    norms::overlap_d(w_star, v, rho)
}

/// (μ_k, μ*_k)
#[pyfunction]
fn mu(k: i64) -> PyResult<(f64, f64)> {
    let w = norms::WaveSpec::new(k, 5).map_err(err)?;
    Ok((w.mu(), w.mu_star()))
}

#[pyfunction]
fn free_green(k: i64, v: f64, rho: f64) -> PyResult<f64> {
    greens::free_green(k, v, rho).map_err(err)
}

#[pyfunction]
fn step_green(k: i64, a: f64, a_prime: f64, v: f64, rho: f64) -> PyResult<f64> {
    greens::step_green(k, a, a_prime, v, rho).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (w, v, kind = "algebraic"))]
fn potential_vw(w: f64, v: f64, kind: &str) -> PyResult<f64> {
    greens::potential_vw(&VortexProfile::new(parse_kind(kind)?), w, v).map_err(err)
}

/// Kernel of k² − ∂² + V_w on [v_min, v_max] (default [w−12, 12], h = 1/64).
#[pyfunction]
#[pyo3(signature = (k, w, v_min = None, v_max = 12.0, h = 1.0 / 64.0, kind = "algebraic"))]
fn longrange_green(k: i64, w: f64, v_min: Option<f64>, v_max: f64, h: f64, kind: &str) -> PyResult<PyGreenKernel> {
    let g = grid(v_min.unwrap_or((w - 12.0).floor()), v_max, h)?;
    let inner = greens::longrange_green(&VortexProfile::new(parse_kind(kind)?), k, w, g).map_err(err)?;
    Ok(PyGreenKernel { inner })
}

/// Γ_k(·, w) = 2 lim Im Γ⁺_ε with trace, jump and PV diagnostics.
#[pyfunction]
#[pyo3(signature = (
    k, w, center = 0.0, width = 1.0, amplitude = 1.0, sigma = 0.0, samples = None,
    v_min = -16.0, v_max = 12.0, h = 1.0 / 64.0, eps0 = 1e-3, base = 4.0, levels = 3, kind = "algebraic"
))]
#[allow(clippy::too_many_arguments)]
fn limit_gamma<'py>(
    py: Python<'py>,
    k: i64,
    w: f64,
    center: f64,
    width: f64,
    amplitude: f64,
    sigma: f64,
    samples: Option<(Vec<f64>, Vec<f64>)>,
    v_min: f64,
    v_max: f64,
    h: f64,
    eps0: f64,
    base: f64,
    levels: usize,
    kind: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let p = VortexProfile::new(parse_kind(kind)?);
    let raw = data_source(center, width, amplitude, samples)?;
    let data = Arc::new(InitialData::build(&p, k, raw, sigma).map_err(err)?);
    let g = grid(v_min, v_max, h)?;
    let slice = SdfSolver::new(&p, data.clone(), g)
        .and_then(|s| s.limit(w, &EpsSchedule { eps0, base, levels }))
        .map_err(err)?;
    let jump = jump_check(&slice, &data);
    let d = PyDict::new(py);
    d.set_item("w", slice.w)?;
    d.set_item("nodes", g.nodes())?;
    d.set_item("gamma", slice.gamma_limit.clone())?;
    d.set_item("theta_nodes", slice.theta_grid.nodes())?;
    d.set_item("theta", slice.theta.clone())?;
    d.set_item("trace", slice.trace)?;
    d.set_item("extrapolation_order", slice.extrapolation_order)?;
    d.set_item("monotone", slice.monotone)?;
    d.set_item("jump_measured", jump.measured)?;
    d.set_item("jump_predicted", jump.predicted)?;
    d.set_item("jump_residual", jump.residual)?;
    d.set_item("pv_residual", pv_residual(&slice, &p, PV_EXCLUSION))?;
    Ok(d)
}

/// Closed-form Γ_1(v, w) for Gaussian (or sampled) data.
#[pyfunction]
#[pyo3(signature = (v, w, center = 0.0, width = 1.0, amplitude = 1.0, samples = None, kind = "algebraic"))]
fn k1_gamma(
    v: Vec<f64>,
    w: f64,
    center: f64,
    width: f64,
    amplitude: f64,
    samples: Option<(Vec<f64>, Vec<f64>)>,
    kind: &str,
) -> PyResult<Vec<f64>> {
    let f0 = data_source(center, width, amplitude, samples)?;
    Ok(K1Oracle::new(&VortexProfile::new(parse_kind(kind)?)).gamma_column(&v, w, &f0))
}

/// Eigenvalues of the symmetrized L_k and the band/zero-mode classification.
#[pyfunction]
#[pyo3(signature = (k, v_min = -12.0, v_max = 12.0, h = 1.0 / 32.0, kind = "algebraic"))]
fn spectrum<'py>(py: Python<'py>, k: i64, v_min: f64, v_max: f64, h: f64, kind: &str) -> PyResult<Bound<'py, PyDict>> {
    let p = VortexProfile::new(parse_kind(kind)?);
    let op = assemble_lk(&p, k, grid(v_min, v_max, h)?).map_err(err)?;
    let rep = spectrum_report(&op, &p).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("eigenvalues", rep.eigenvalues)?;
    d.set_item("band", rep.band)?;
    d.set_item("outliers", rep.outliers)?;
    d.set_item("symmetry_residual", rep.symmetry_residual)?;
    if let Some(z) = rep.zero_mode {
        d.set_item("zero_mode", (z.eigenvalue, z.alignment, z.residual))?;
    }
    Ok(d)
}

/// (σ_min of I + T or I + S, norm of T or S) for ε in units of e^{−2|w|}.
#[pyfunction]
#[pyo3(signature = (k, w, eps, k_star = 1, h = 1.0 / 16.0, kind = "algebraic"))]
fn lap_sigma_min(k: i64, w: f64, eps: f64, k_star: i64, h: f64, kind: &str) -> PyResult<(f64, f64)> {
    let p = VortexProfile::new(parse_kind(kind)?);
    let g = grid((w - 12.0).min(-12.0), 12.0, h)?;
    let r = lap_coercivity(&p, k, k_star, w, eps * (-2.0 * w.abs()).exp(), g, true).map_err(err)?;
    Ok((r.sigma_min, r.operator_norm))
}

/// φ and f at the given times from the representation formula, or from the
/// method-of-lines integrator when `method = "timestep"`.
#[pyfunction]
#[pyo3(signature = (
    k, times, center = 0.0, width = 1.0, amplitude = 1.0, sigma = 0.0, samples = None,
    v_min = -18.0, v_max = 12.0, h = 1.0 / 64.0, w_range = (-14.0, 8.0), method = "repr", dt = 0.1, kind = "algebraic"
))]
#[allow(clippy::too_many_arguments)]
fn evolve<'py>(
    py: Python<'py>,
    k: i64,
    times: Vec<f64>,
    center: f64,
    width: f64,
    amplitude: f64,
    sigma: f64,
    samples: Option<(Vec<f64>, Vec<f64>)>,
    v_min: f64,
    v_max: f64,
    h: f64,
    w_range: (f64, f64),
    method: &str,
    dt: f64,
    kind: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let p = VortexProfile::new(parse_kind(kind)?);
    let raw = data_source(center, width, amplitude, samples)?;
    let g = grid(v_min, v_max, h)?;
    let d = PyDict::new(py);
    d.set_item("nodes", g.nodes())?;
    match method {
        "repr" => {
            let data = Arc::new(InitialData::build(&p, k, raw, sigma).map_err(err)?);
            let field = ThetaField::compute(&p, data, g, w_range, 1, &EpsSchedule::default()).map_err(err)?;
            let evo = evolve_mode(&field, &times).map_err(err)?;
            d.set_item("times", evo.times)?;
            d.set_item("phi", evo.phi)?;
            d.set_item("f", evo.f)?;
            d.set_item("f1", evo.f1)?;
            d.set_item("f2", evo.f2)?;
        }
        "timestep" => {
            let f0: Vec<Complex64> = g.nodes().iter().map(|&v| Complex64::new(raw.eval(v), 0.0)).collect();
            let run = timestep_oracle(&p, k, &f0, g, &times, dt, true).map_err(err)?;
            d.set_item("times", run.times)?;
            d.set_item("phi", run.phi)?;
            d.set_item("f", run.f)?;
        }
        _ => return Err(PyValueError::new_err(format!("unknown method `{method}`"))),
    }
    Ok(d)
}

#[pyfunction]
fn default_config() -> PyResult<String> {
    RunConfig::default().to_toml().map_err(err)
}

/// Runs the pipeline for a TOML configuration; returns the manifest as JSON.
/// Stage failures are recorded in the manifest's `error` field.
#[pyfunction]
fn run_config(toml_text: &str) -> PyResult<String> {
    let cfg = RunConfig::from_toml(toml_text).map_err(err)?;
    let (manifest, _) = pipeline::run(&cfg);
    manifest.write(&cfg.out).map_err(err)?;
    serde_json::to_string_pretty(&manifest).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pymodule]
#[pyo3(name = "vortexlab")]
fn vortexlab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyProfile>()?;
    m.add_class::<PyGreenKernel>()?;
    m.add_function(wrap_pyfunction!(varpi, m)?)?;
    m.add_function(wrap_pyfunction!(overlap_d, m)?)?;
    m.add_function(wrap_pyfunction!(mu, m)?)?;
    m.add_function(wrap_pyfunction!(free_green, m)?)?;
    m.add_function(wrap_pyfunction!(step_green, m)?)?;
    m.add_function(wrap_pyfunction!(potential_vw, m)?)?;
    m.add_function(wrap_pyfunction!(longrange_green, m)?)?;
    m.add_function(wrap_pyfunction!(limit_gamma, m)?)?;
    m.add_function(wrap_pyfunction!(k1_gamma, m)?)?;
    m.add_function(wrap_pyfunction!(spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(lap_sigma_min, m)?)?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add_function(wrap_pyfunction!(default_config, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    Ok(())
}
