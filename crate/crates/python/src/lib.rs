//! Python bindings. Bandit ids are 1-based on this side, exact rationals
//! are passed as `"p/q"` strings.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde_json::Value;

use cmab_core::analysis::{lower_bound_m, pseudo_regret};
use cmab_core::blocks::build_isb as core_build_isb;
use cmab_core::env::BanditProblem;
use cmab_core::lp::{solve_primal as core_solve_primal, ProblemInstance};
use cmab_core::policy::{self, Bisection, PolicyConfig};
use cmab_core::rational::{display, to_f64};

fn py_err(e: cmab_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn problem(instance_json: &str) -> PyResult<BanditProblem> {
    BanditProblem::from_json(instance_json).map_err(py_err)
}

fn to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_pyobject(py)?.into_any(),
            None => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(to_py(py, item)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, item) in map {
                dict.set_item(k, to_py(py, item)?)?;
            }
            dict.into_any()
        }
    })
}

/// Solves the activation LP. Arguments are decimal or `p/q` strings.
#[pyfunction]
fn solve_primal<'py>(
    py: Python<'py>,
    costs: Vec<Vec<String>>,
    rates: Vec<String>,
    means: Vec<String>,
) -> PyResult<Bound<'py, PyDict>> {
    let costs: Vec<Vec<&str>> = costs.iter().map(|r| r.iter().map(String::as_str).collect()).collect();
    let rows: Vec<&[&str]> = costs.iter().map(Vec::as_slice).collect();
    let rates: Vec<&str> = rates.iter().map(String::as_str).collect();
    let means: Vec<&str> = means.iter().map(String::as_str).collect();
    let inst = ProblemInstance::from_strs(&rows, &rates, &means).map_err(py_err)?;
    let sol = core_solve_primal(&inst).map_err(py_err)?;
    let out = PyDict::new(py);
    out.set_item("z_star", display(&sol.z_star))?;
    out.set_item("basis", sol.basis.bandits().iter().map(|a| a + 1).collect::<Vec<_>>())?;
    out.set_item("x", sol.x.iter().map(display).collect::<Vec<_>>())?;
    out.set_item("dual", sol.dual.iter().map(display).collect::<Vec<_>>())?;
    out.set_item("reduced_costs", sol.reduced_costs.iter().map(display).collect::<Vec<_>>())?;
    out.set_item("unique", sol.unique)?;
    Ok(out)
}

/// Lower bound report of an instance given as JSON text.
#[pyfunction]
fn lower_bound<'py>(py: Python<'py>, instance_json: &str) -> PyResult<Bound<'py, PyAny>> {
    let report = lower_bound_m(&problem(instance_json)?, Bisection::default()).map_err(py_err)?;
    to_py(py, &report.to_json())
}

/// Activation order of the initial sampling block (1-based ids).
#[pyfunction]
#[pyo3(signature = (instance_json, n0 = 1))]
fn build_isb(instance_json: &str, n0: u64) -> PyResult<Vec<usize>> {
    let isb = core_build_isb(&problem(instance_json)?.instance, n0).map_err(py_err)?;
    Ok(isb.activations.iter().map(|a| a + 1).collect())
}

/// Simulates one run and returns its final counts, slack and regret.
#[pyfunction]
#[pyo3(signature = (instance_json, horizon, seed, n0 = 1))]
fn run_policy<'py>(
    py: Python<'py>,
    instance_json: &str,
    horizon: u64,
    seed: u64,
    n0: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let prob = problem(instance_json)?;
    let cfg = PolicyConfig { n0, ..PolicyConfig::default() };
    let stats = py
        .detach(|| policy::run_policy(&prob, &cfg, horizon, seed, &[]))
        .map_err(py_err)?;
    let regret = pseudo_regret(&prob.instance, &stats.counts).map_err(py_err)?;
    let out = PyDict::new(py);
    out.set_item("counts", stats.counts.clone())?;
    out.set_item("slack", stats.slack.iter().map(display).collect::<Vec<_>>())?;
    out.set_item("regret", to_f64(&regret))?;
    out.set_item("blocks_completed", stats.blocks_completed)?;
    out.set_item("counting_violations", stats.counting_violations)?;
    out.set_item("reward_total", stats.reward_total)?;
    Ok(out)
}

/// KL-UCB value of empirical frequencies `p` on support `r`.
#[pyfunction]
fn kl_ucb(p: Vec<f64>, r: Vec<f64>, radius: f64) -> f64 {
    policy::kl::kl_ucb(&p, &r, radius, Bisection::default())
}

/// Least KL divergence from `p` to a distribution on `r` with mean `m`.
#[pyfunction]
fn kinf(p: Vec<f64>, r: Vec<f64>, m: f64) -> f64 {
    policy::kl::kinf(&p, &r, m, Bisection::default())
}

#[pyfunction]
fn normal_unknown_inflation(mean: f64, sd: f64, s: u64, t: u64) -> PyResult<f64> {
    policy::normal_unknown_inflation(mean, sd, s, t).map_err(py_err)
}

#[pymodule]
fn cmab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(solve_primal, m)?)?;
    m.add_function(wrap_pyfunction!(lower_bound, m)?)?;
    m.add_function(wrap_pyfunction!(build_isb, m)?)?;
    m.add_function(wrap_pyfunction!(run_policy, m)?)?;
    m.add_function(wrap_pyfunction!(kl_ucb, m)?)?;
    m.add_function(wrap_pyfunction!(kinf, m)?)?;
    m.add_function(wrap_pyfunction!(normal_unknown_inflation, m)?)?;
    Ok(())
}
