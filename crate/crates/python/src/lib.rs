//! Python bindings for the deformed XXZ chain simulator.
//!
//! ```python
//! import curvedchain_py as cc
//!
//! v = cc.profile("horizon", 80)
//! fronts = cc.light_cone(v, origin=40.0, t_max=2.0)
//! files = cc.simulate(cc.preset_config("fig2b"))
//! print(files["geodesics.csv"])
//! ```

use std::collections::BTreeMap;

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use curvedchain::circuit::{build_quench_circuit, ChainSpec, CircuitOptions};
use curvedchain::config::ExperimentConfig;
use curvedchain::experiments::{self, RunOptions, PRESETS};
use curvedchain::lattice::{DeformationProfile, Geodesics, DEFAULT_FRONT_SPEED};
use curvedchain::Error;

create_exception!(curvedchain_py, CapabilityError, PyException, "Request exceeds what the chosen backend can do.");

fn to_py(e: Error) -> PyErr {
    match e.exit_code() {
        2 => PyValueError::new_err(e.to_string()),
        3 => CapabilityError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn build_profile(kind: &str, n_sites: usize, j_star: Option<f64>) -> Result<DeformationProfile, Error> {
    match kind {
        "uniform" => DeformationProfile::uniform(n_sites),
        "horizon" => DeformationProfile::horizon(n_sites, j_star.unwrap_or(n_sites as f64 / 7.0)),
        other => Err(Error::InvalidArgument(format!(
            "profile kind must be `uniform` or `horizon`, got `{other}`"
        ))),
    }
}

/// Bond values v_1..v_{N-1} of a named profile; j_star defaults to N/7.
#[pyfunction]
#[pyo3(signature = (kind, n_sites, j_star=None))]
fn profile(kind: &str, n_sites: usize, j_star: Option<f64>) -> PyResult<Vec<f64>> {
    Ok(build_profile(kind, n_sites, j_star).map_err(to_py)?.bond_values().to_vec())
}

/// Zeros of the interpolated profile given by its bond values.
#[pyfunction]
fn horizons(bond_values: Vec<f64>) -> PyResult<Vec<f64>> {
    Ok(DeformationProfile::custom(bond_values).map_err(to_py)?.horizons())
}

/// `(t, left, right)` light-cone fronts from `origin` on `[0, t_max]`.
#[pyfunction]
#[pyo3(signature = (bond_values, origin, t_max, n_samples=101, front_speed=DEFAULT_FRONT_SPEED))]
fn light_cone(
    bond_values: Vec<f64>,
    origin: f64,
    t_max: f64,
    n_samples: usize,
    front_speed: f64,
) -> PyResult<Vec<(f64, f64, f64)>> {
    let profile = DeformationProfile::custom(bond_values).map_err(to_py)?;
    let curve = Geodesics::new(&profile)
        .with_front_speed(front_speed)
        .light_cone(origin, t_max, n_samples)
        .map_err(to_py)?;
    Ok(curve.samples.iter().map(|s| (s.time, s.left_front, s.right_front)).collect())
}

/// OpenQASM 2.0 text of a quench circuit on a custom profile.
#[pyfunction]
#[pyo3(signature = (bond_values, delta, flips, steps, dt=0.1, coupling=1.0, xy_optimize=true))]
fn quench_qasm(
    bond_values: Vec<f64>,
    delta: f64,
    flips: Vec<usize>,
    steps: usize,
    dt: f64,
    coupling: f64,
    xy_optimize: bool,
) -> PyResult<String> {
    let profile = DeformationProfile::custom(bond_values).map_err(to_py)?;
    let spec = ChainSpec::new(profile, delta).with_dt(dt).with_coupling(coupling);
    let circuit = build_quench_circuit(&spec, &flips, steps, CircuitOptions { xy_optimize }).map_err(to_py)?;
    Ok(circuit.to_openqasm())
}

#[pyfunction]
fn presets() -> Vec<&'static str> {
    PRESETS.to_vec()
}

/// TOML config of a named preset.
#[pyfunction]
fn preset_config(name: &str) -> PyResult<String> {
    Ok(experiments::preset(name).map_err(to_py)?.to_toml())
}

/// Runs a TOML config and returns the result bundle as `{relative path: text}`.
/// Delta sweeps place each run under `<label>/`.
#[pyfunction]
#[pyo3(signature = (config_toml, workers=None, incremental=false))]
fn simulate(py: Python<'_>, config_toml: &str, workers: Option<usize>, incremental: bool) -> PyResult<BTreeMap<String, String>> {
    let config = ExperimentConfig::from_toml(config_toml).map_err(to_py)?;
    let options = RunOptions {
        workers,
        incremental,
        ..RunOptions::default()
    };
    let bundles = py
        .detach(|| experiments::run(&config, &options))
        .map_err(to_py)?;
    let single = bundles.len() == 1;
    let mut files = BTreeMap::new();
    for (k, b) in bundles.iter().enumerate() {
        let prefix = match &b.label {
            _ if single => String::new(),
            Some(l) => format!("{l}/"),
            None => format!("run_{k}/"),
        };
        files.extend(b.files().into_iter().map(|(p, t)| (format!("{prefix}{p}"), t)));
    }
    Ok(files)
}

#[pymodule]
fn curvedchain_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("CapabilityError", m.py().get_type::<CapabilityError>())?;
    m.add_function(wrap_pyfunction!(profile, m)?)?;
    m.add_function(wrap_pyfunction!(horizons, m)?)?;
    m.add_function(wrap_pyfunction!(light_cone, m)?)?;
    m.add_function(wrap_pyfunction!(quench_qasm, m)?)?;
    m.add_function(wrap_pyfunction!(presets, m)?)?;
    m.add_function(wrap_pyfunction!(preset_config, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    Ok(())
}
