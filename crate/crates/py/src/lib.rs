use std::collections::BTreeMap;

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

use leviflat_core::defcomplex::exactness_witness_check;
use leviflat_core::foliation_dgla::frobenius_report;
use leviflat_core::leafcx::{h_structure, LeafPoint, StructureKind, DEFAULT_ORDER};
use leviflat_core::report::{run as run_suites, RunConfig};
use leviflat_core::scenarios::{self, BUILTINS};
use leviflat_core::suites::catalogue;
use leviflat_core::symfield::{Chart, Expr, ScalarField};
use leviflat_core::Error;

create_exception!(leviflat, LeviflatError, PyException);
create_exception!(leviflat, SingularError, LeviflatError);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Singular(_) => SingularError::new_err(e.to_string()),
        Error::Config(_) | Error::Parse { .. } | Error::Dimension(_) => PyValueError::new_err(e.to_string()),
        _ => LeviflatError::new_err(e.to_string()),
    }
}

fn parse_on(chart: &std::sync::Arc<Chart>, text: &str) -> PyResult<Expr> {
    ScalarField::parse(chart, text).map(ScalarField::into_expr).map_err(to_py)
}

/// A built-in scenario or one loaded from a TOML file.
#[pyclass(frozen, module = "leviflat")]
struct Scenario {
    inner: scenarios::Scenario,
}

#[pymethods]
impl Scenario {
    #[new]
    fn new(spec: &str) -> PyResult<Self> {
        Ok(Scenario { inner: scenarios::resolve(spec).map_err(to_py)? })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.chart().dim()
    }

    #[getter]
    fn coordinates(&self) -> Vec<String> {
        self.inner.chart().names().to_vec()
    }

    /// "levi_flat", "almost_complex" or "unchecked".
    #[getter]
    fn kind(&self) -> &'static str {
        match self.inner.structure.kind() {
            StructureKind::LeviFlat => "levi_flat",
            StructureKind::AlmostComplex => "almost_complex",
            StructureKind::Unchecked => "unchecked",
        }
    }

    #[getter]
    fn leaf_complex_dim(&self) -> usize {
        self.inner.structure.leaf_complex_dim()
    }

    #[getter]
    fn expectations(&self) -> Vec<&'static str> {
        self.inner.expectations.iter().map(|e| e.id()).collect()
    }

    /// Maximal relative residuals of the Frobenius conditions (iii), (iv), (v).
    fn frobenius(&self, points: Vec<Vec<f64>>) -> PyResult<[f64; 3]> {
        let r = frobenius_report(self.inner.couple()).map_err(to_py)?.residuals(&points).map_err(to_py)?;
        Ok([r[0].max_rel, r[1].max_rel, r[2].max_rel])
    }

    /// `H(E_k)` in chart coordinates, one row per frame vector.
    fn h(&self, point: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
        let lp = LeafPoint::new(&self.inner.structure, &point, DEFAULT_ORDER).map_err(to_py)?;
        Ok(h_structure(&lp).vals.iter().map(|v| v.values()).collect())
    }

    /// Residuals `(H − ℶ̄U, H of the shifted couple)` for a witness given by
    /// frame coefficients written as expressions.
    fn exactness(&self, witness: Vec<String>, points: Vec<Vec<f64>>) -> PyResult<(f64, f64)> {
        let chart = self.inner.chart();
        let u = witness.iter().map(|w| parse_on(chart, w)).collect::<PyResult<Vec<_>>>()?;
        let r = exactness_witness_check(&self.inner.structure, &u, &points).map_err(to_py)?;
        Ok((r.witness.max_rel, r.rederived.max_rel))
    }

    fn __repr__(&self) -> String {
        format!("Scenario({:?}, dim={}, kind={})", self.inner.name, self.dim(), self.kind())
    }
}

/// Evaluates an expression over the named coordinates.
#[pyfunction]
fn evaluate(expr: &str, coordinates: Vec<String>, point: Vec<f64>) -> PyResult<f64> {
    let n = coordinates.len();
    let chart = Chart::new(coordinates, vec![false; n]).map_err(to_py)?;
    parse_on(&chart, expr)?.eval(&point).map_err(to_py)
}

/// The exact partial derivative, printed back as an expression.
#[pyfunction]
fn differentiate(expr: &str, coordinates: Vec<String>, wrt: &str) -> PyResult<String> {
    let n = coordinates.len();
    let chart = Chart::new(coordinates, vec![false; n]).map_err(to_py)?;
    let i = chart.index_of(wrt).ok_or_else(|| PyValueError::new_err(format!("unknown coordinate '{wrt}'")))?;
    Ok(parse_on(&chart, expr)?.diff(i).with_names(chart.names()).to_string())
}

#[pyfunction]
fn builtins() -> Vec<&'static str> {
    BUILTINS.to_vec()
}

/// `(id, suite, formula)` for every identity.
#[pyfunction]
fn identities() -> Vec<(&'static str, &'static str, &'static str)> {
    catalogue().iter().map(|i| (i.id, i.suite, i.anchor)).collect()
}

/// Runs identity suites and returns the JSON report.
#[pyfunction]
#[pyo3(signature = (scenario, suite = "all", seed = 42, points = 20, tol = None, jobs = None))]
fn run(
    py: Python<'_>,
    scenario: &str,
    suite: &str,
    seed: u64,
    points: usize,
    tol: Option<BTreeMap<String, f64>>,
    jobs: Option<usize>,
) -> PyResult<String> {
    let sc = scenarios::resolve(scenario).map_err(to_py)?;
    let cfg = RunConfig {
        scenario: scenario.to_string(),
        suite: suite.to_string(),
        seed,
        points,
        tol: tol.unwrap_or_default(),
        jobs,
    };
    let report = py.detach(|| run_suites(&sc, &cfg)).map_err(to_py)?;
    Ok(report.to_json())
}

#[pymodule]
fn leviflat(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Scenario>()?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(differentiate, m)?)?;
    m.add_function(wrap_pyfunction!(builtins, m)?)?;
    m.add_function(wrap_pyfunction!(identities, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add("LeviflatError", m.py().get_type::<LeviflatError>())?;
    m.add("SingularError", m.py().get_type::<SingularError>())?;
    Ok(())
}
