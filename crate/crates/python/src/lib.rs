use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use fqlsni::controllers::{ActionSets, ChannelController, ControllerKind, FixedSni, FuzzyQlSni};
use fqlsni::fb_lin::{linearize as fl_linearize, VirtualInput};
use fqlsni::fql::FqlHyperParams;
use fqlsni::fuzzy::RuleBase;
use fqlsni::harness::run::{self, SweepParam};
use fqlsni::harness::{metrics, ScenarioConfig};
use fqlsni::ni_core::{dc_gain_stability, default_frequency_grid, sni_frequency_condition, GainBounds, SniGains};
use fqlsni::plant::{self, ControlMoments, Disturbance, QuadParams, QuadState};
use fqlsni::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Diverged { .. } | Error::Singularity { .. } | Error::Io(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn kind_from_str(kind: &str) -> PyResult<ControllerKind> {
    kind.parse().map_err(to_py)
}

/// Scenario configuration; build from TOML or one of the presets.
#[pyclass(name = "ScenarioConfig", module = "fqlsni_py", skip_from_py_object)]
#[derive(Clone)]
struct PyScenarioConfig {
    inner: ScenarioConfig,
}

#[pymethods]
impl PyScenarioConfig {
    #[staticmethod]
    fn nominal() -> Self {
        Self {
            inner: ScenarioConfig::nominal(),
        }
    }

    #[staticmethod]
    fn disturbed() -> Self {
        Self {
            inner: ScenarioConfig::disturbed(),
        }
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: ScenarioConfig::from_toml(text).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: ScenarioConfig::load(&path).map_err(to_py)?,
        })
    }

    fn to_toml(&self) -> PyResult<String> {
        self.inner.to_toml().map_err(to_py)
    }

    /// Copy with every channel on `kind` ("pid", "sni", "fuzzy-sni", "fuzzy-ql-sni").
    fn with_controller(&self, kind: &str) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.clone().with_controller(kind_from_str(kind)?),
        })
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.run.seed
    }

    #[setter]
    fn set_seed(&mut self, seed: u64) {
        self.inner.run.seed = seed;
    }

    #[getter]
    fn duration(&self) -> f64 {
        self.inner.run.duration
    }

    #[setter]
    fn set_duration(&mut self, duration: f64) -> PyResult<()> {
        let mut c = self.inner.clone();
        c.run.duration = duration;
        c.validate().map_err(to_py)?;
        self.inner = c;
        Ok(())
    }

    #[getter]
    fn output_dir(&self) -> Option<PathBuf> {
        self.inner.run.output_dir.clone()
    }

    #[setter]
    fn set_output_dir(&mut self, dir: Option<PathBuf>) {
        self.inner.run.output_dir = dir;
    }

    fn __repr__(&self) -> String {
        format!(
            "ScenarioConfig(duration={}, dt={}, seed={})",
            self.inner.run.duration, self.inner.run.dt, self.inner.run.seed
        )
    }
}

fn metrics_dict<'py>(py: Python<'py>, m: &run::RunMetrics) -> PyResult<Bound<'py, PyDict>> {
    let out = PyDict::new(py);
    for c in &m.channels {
        let d = PyDict::new(py);
        d.set_item("controller", c.kind.name())?;
        d.set_item("rmse", c.rmse)?;
        d.set_item("so", c.so)?;
        d.set_item("settle_time", c.settle.time)?;
        d.set_item("settled", c.settle.settled)?;
        d.set_item("returns", c.returns)?;
        out.set_item(c.channel.name(), d)?;
    }
    if let Some(f) = &m.files {
        out.set_item("trajectory_csv", &f.trajectory)?;
        out.set_item("metrics_csv", &f.metrics)?;
        out.set_item("qtables_csv", &f.qtables)?;
    }
    Ok(out)
}

/// Run a scenario; returns per-channel metrics keyed by channel name.
#[pyfunction]
fn run_scenario<'py>(py: Python<'py>, config: &PyScenarioConfig) -> PyResult<Bound<'py, PyDict>> {
    let cfg = config.inner.clone();
    let m = py.detach(move || run::run_scenario(&cfg)).map_err(to_py)?;
    metrics_dict(py, &m)
}

/// Run a scenario in memory; returns the logged signals as lists.
///
/// Keys: time, and per channel `ref_*`, `out_*`, `err_*`, `v_*`, `gamma_*`,
/// `tau_*`, `reward_*`; plus `u1`..`u4`, `wind_x`.. and `error` (None or the abort reason).
#[pyfunction]
fn simulate<'py>(py: Python<'py>, config: &PyScenarioConfig) -> PyResult<Bound<'py, PyDict>> {
    let cfg = config.inner.clone();
    let outcome = py.detach(move || run::simulate(&cfg));
    let s = &outcome.log.samples;
    let out = PyDict::new(py);
    out.set_item("time", s.iter().map(|r| r.time).collect::<Vec<_>>())?;
    let names = ["roll", "pitch", "yaw", "z"];
    for (i, n) in names.iter().enumerate() {
        out.set_item(format!("ref_{n}"), s.iter().map(|r| r.reference[i]).collect::<Vec<_>>())?;
        out.set_item(format!("out_{n}"), s.iter().map(|r| r.output[i]).collect::<Vec<_>>())?;
        out.set_item(format!("err_{n}"), s.iter().map(|r| r.error[i]).collect::<Vec<_>>())?;
        out.set_item(format!("v_{n}"), s.iter().map(|r| r.v[i]).collect::<Vec<_>>())?;
        out.set_item(format!("gamma_{n}"), s.iter().map(|r| r.gamma[i]).collect::<Vec<_>>())?;
        out.set_item(format!("tau_{n}"), s.iter().map(|r| r.tau[i]).collect::<Vec<_>>())?;
        out.set_item(format!("reward_{n}"), s.iter().map(|r| r.reward[i]).collect::<Vec<_>>())?;
        out.set_item(format!("u{}", i + 1), s.iter().map(|r| r.u[i]).collect::<Vec<_>>())?;
    }
    for (i, n) in ["wind_x", "wind_y", "wind_z"].iter().enumerate() {
        out.set_item(*n, s.iter().map(|r| r.wind[i]).collect::<Vec<_>>())?;
    }
    out.set_item("error", outcome.error.map(|e| e.to_string()))?;
    Ok(out)
}

/// Mean RMSE per channel for each value of `param` ("eta", "sigma", "explore_duration").
///
/// Returns a list of (value, [rmse_roll, rmse_pitch, rmse_yaw, rmse_z], diverged).
#[pyfunction]
#[pyo3(signature = (config, param, values, seeds=None))]
fn sweep(
    py: Python<'_>,
    config: &PyScenarioConfig,
    param: &str,
    values: Vec<f64>,
    seeds: Option<Vec<u64>>,
) -> PyResult<Vec<(f64, [f64; 4], usize)>> {
    let param: SweepParam = param.parse().map_err(to_py)?;
    let cfg = config.inner.clone();
    let seeds = seeds.unwrap_or_else(|| vec![cfg.run.seed]);
    let rows = py.detach(move || run::sweep(&cfg, param, &values, &seeds)).map_err(to_py)?;
    Ok(rows.into_iter().map(|r| (r.value, r.rmse, r.diverged)).collect())
}

/// True when two runs of the scenario produce byte-identical outputs.
#[pyfunction]
fn replay(py: Python<'_>, config: &PyScenarioConfig) -> PyResult<bool> {
    let cfg = config.inner.clone();
    Ok(py.detach(move || run::replay(&cfg)).map_err(to_py)?.identical)
}

/// (frequency condition holds, DC-gain condition holds) for one gain set.
#[pyfunction]
fn check_sni(gamma: f64, tau: f64, beta: f64) -> PyResult<(bool, bool)> {
    let g = SniGains { gamma, tau, beta };
    g.validate().map_err(to_py)?;
    let freq = sni_frequency_condition(&g, &default_frequency_grid()).map_err(to_py)?;
    Ok((freq, dc_gain_stability(gamma, beta)))
}

#[pyfunction]
fn rmse(errors: Vec<f64>) -> f64 {
    metrics::rmse(&errors)
}

#[pyfunction]
fn steady_offset(errors: Vec<f64>) -> PyResult<f64> {
    metrics::steady_offset(&errors).map_err(to_py)
}

/// (settle time [s], settled) for a band around zero error.
#[pyfunction]
fn settle_time(errors: Vec<f64>, band: f64, dt: f64) -> (f64, bool) {
    let s = metrics::settle_time(&errors, band, dt);
    (s.time, s.settled)
}

#[pyfunction]
fn reward(e_next: f64, e_curr: f64) -> f64 {
    fqlsni::fql::reward(e_next, e_curr)
}

/// Reference airframe constants as a dict.
#[pyfunction]
fn plant_params(py: Python<'_>) -> PyResult<Bound<'_, PyDict>> {
    let p = QuadParams::table();
    let d = PyDict::new(py);
    for (k, v) in [
        ("m", p.m),
        ("ix", p.ix),
        ("iy", p.iy),
        ("iz", p.iz),
        ("jr", p.jr),
        ("km", p.km),
        ("kf", p.kf),
        ("l", p.l),
        ("g", p.g),
    ] {
        d.set_item(k, v)?;
    }
    Ok(d)
}

/// One RK4 step of the reference airframe.
///
/// `state` is [x, y, z, roll, pitch, yaw, vx, vy, vz, p, q, r]; `u` is [U1, U2, U3, U4].
#[pyfunction]
#[pyo3(signature = (state, u, dt=0.01))]
fn plant_step(state: [f64; 12], u: [f64; 4], dt: f64) -> PyResult<[f64; 12]> {
    let s = QuadState::from_array(state, 0.0);
    let u = ControlMoments::new(u[0], u[1], u[2], u[3]);
    let next = plant::step(&s, &u, &QuadParams::table(), &Disturbance::NONE, dt).map_err(to_py)?;
    Ok(next.to_array())
}

/// Control moments that make (z, roll, pitch, yaw) accelerations equal `v`.
#[pyfunction]
#[pyo3(signature = (v, state, omega_r=0.0))]
fn linearize(v: [f64; 4], state: [f64; 12], omega_r: f64) -> PyResult<[f64; 4]> {
    let s = QuadState::from_array(state, omega_r);
    let u = fl_linearize(&VirtualInput::new(v[0], v[1], v[2], v[3]), &s, &QuadParams::table()).map_err(to_py)?;
    Ok(u.to_array())
}

/// Single-channel SNI controller, fixed or adapted by fuzzy Q-learning.
#[pyclass(name = "SniController", module = "fqlsni_py")]
struct PySniController {
    inner: ChannelController,
}

#[pymethods]
impl PySniController {
    /// `learning=True` adapts (gamma, tau) online; beta always follows gamma + 1.
    #[new]
    #[pyo3(signature = (gamma=5.0, tau=0.1, learning=false, seed=42, eta=0.1, sigma=0.7))]
    fn new(gamma: f64, tau: f64, learning: bool, seed: u64, eta: f64, sigma: f64) -> PyResult<Self> {
        let gains = SniGains::with_unit_margin(gamma, tau);
        let inner = if learning {
            let hp = FqlHyperParams {
                eta,
                sigma,
                seed,
                ..FqlHyperParams::default()
            };
            ChannelController::FuzzyQlSni(Box::new(
                FuzzyQlSni::new(
                    gains,
                    RuleBase::default(),
                    &ActionSets::default(),
                    hp,
                    GainBounds::default(),
                    0,
                )
                .map_err(to_py)?,
            ))
        } else {
            ChannelController::Sni(FixedSni::new(gains).map_err(to_py)?)
        };
        Ok(Self { inner })
    }

    /// Virtual input for tracking error `e` at time `t`.
    #[pyo3(signature = (e, t, dt=0.01))]
    fn step(&mut self, e: f64, t: f64, dt: f64) -> PyResult<f64> {
        self.inner.step(e, t, dt).map_err(to_py)
    }

    /// Current (gamma, tau, beta).
    #[getter]
    fn gains(&self) -> (f64, f64, f64) {
        let g = self.inner.sni_gains().unwrap_or_default();
        (g.gamma, g.tau, g.beta)
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.kind().name()
    }
}

#[pymodule]
fn fqlsni_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyScenarioConfig>()?;
    m.add_class::<PySniController>()?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(replay, m)?)?;
    m.add_function(wrap_pyfunction!(check_sni, m)?)?;
    m.add_function(wrap_pyfunction!(rmse, m)?)?;
    m.add_function(wrap_pyfunction!(steady_offset, m)?)?;
    m.add_function(wrap_pyfunction!(settle_time, m)?)?;
    m.add_function(wrap_pyfunction!(reward, m)?)?;
    m.add_function(wrap_pyfunction!(plant_params, m)?)?;
    m.add_function(wrap_pyfunction!(plant_step, m)?)?;
    m.add_function(wrap_pyfunction!(linearize, m)?)?;
    Ok(())
}
