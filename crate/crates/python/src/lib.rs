//! Python bindings. Reports cross the boundary as JSON strings in the same
//! shape the command-line tool prints.

use num_bigint::{BigInt, BigUint};
use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use dioph_adiabatic::adiabatic::{gap_scan as core_gap_scan, Schedule};
use dioph_adiabatic::cli::default_cutoff;
use dioph_adiabatic::decision::{
    build_regularized_hp, decide_existence, finiteness_sweep, omega_bit_report, OmegaFamily,
    OracleCheck, RegulatorFamily, SimulationOptions,
};
use dioph_adiabatic::fock::{
    build_hi, build_hp, hp_exact_diagonal, CoherentParams, TruncatedFockSpace,
};
use dioph_adiabatic::oracle::{self, SearchBox};
use dioph_adiabatic::polynomial::{DiophantinePolynomial, LatticePoint};

fn py_err(e: dioph_adiabatic::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_json<T: serde::Serialize>(v: &T) -> PyResult<String> {
    serde_json::to_string_pretty(v).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn coords(points: Vec<LatticePoint>) -> Vec<Vec<BigUint>> {
    points.into_iter().map(|p| p.coords().to_vec()).collect()
}

#[pyclass(name = "Polynomial", module = "dioph_adiabatic", frozen, eq, hash, skip_from_py_object)]
#[derive(Clone, PartialEq, Eq, Hash)]
struct PyPolynomial {
    inner: DiophantinePolynomial,
}

#[pymethods]
impl PyPolynomial {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        text.parse().map(|inner| Self { inner }).map_err(py_err)
    }

    #[getter]
    fn num_vars(&self) -> usize {
        self.inner.num_vars()
    }

    #[getter]
    fn total_degree(&self) -> u64 {
        self.inner.total_degree()
    }

    /// `(coefficient, exponents)` pairs in canonical order.
    fn terms(&self) -> Vec<(BigInt, Vec<u32>)> {
        self.inner
            .terms()
            .iter()
            .map(|t| (t.coeff.clone(), t.monomial.exponents().to_vec()))
            .collect()
    }

    fn evaluate(&self, point: Vec<BigUint>) -> PyResult<BigInt> {
        self.inner.evaluate(&LatticePoint::new(point)).map_err(py_err)
    }

    fn shift(&self, var: usize, amount: u64) -> PyResult<Self> {
        self.inner.shift(var, amount).map(|inner| Self { inner }).map_err(py_err)
    }

    fn square(&self) -> PyResult<Self> {
        self.inner.square().map(|inner| Self { inner }).map_err(py_err)
    }

    fn __add__(&self, other: &Self) -> PyResult<Self> {
        self.inner.add(&other.inner).map(|inner| Self { inner }).map_err(py_err)
    }

    fn __sub__(&self, other: &Self) -> PyResult<Self> {
        self.inner.sub(&other.inner).map(|inner| Self { inner }).map_err(py_err)
    }

    fn __mul__(&self, other: &Self) -> PyResult<Self> {
        self.inner.mul(&other.inner).map(|inner| Self { inner }).map_err(py_err)
    }

    fn __neg__(&self) -> Self {
        Self {
            inner: self.inner.neg(),
        }
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Polynomial({:?})", self.inner.to_canonical_text())
    }
}

#[pyclass(name = "FockSpace", module = "dioph_adiabatic", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyFockSpace {
    inner: TruncatedFockSpace,
}

#[pymethods]
impl PyFockSpace {
    #[new]
    fn new(cutoffs: Vec<u32>) -> PyResult<Self> {
        TruncatedFockSpace::new(cutoffs).map(|inner| Self { inner }).map_err(py_err)
    }

    #[getter]
    fn cutoffs(&self) -> Vec<u32> {
        self.inner.cutoffs().to_vec()
    }

    #[getter]
    fn modes(&self) -> usize {
        self.inner.modes()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn occupation(&self, index: usize) -> PyResult<Vec<u32>> {
        if index >= self.inner.dim() {
            return Err(PyValueError::new_err(format!("index {index} out of range")));
        }
        Ok(self.inner.occupation(index))
    }

    fn index_of(&self, occupation: Vec<u32>) -> PyResult<usize> {
        self.inner.index_of(&occupation).map_err(py_err)
    }

    fn __len__(&self) -> usize {
        self.inner.dim()
    }

    fn __repr__(&self) -> String {
        format!("FockSpace({:?})", self.inner.cutoffs())
    }
}

fn space_for(p: &DiophantinePolynomial, cutoffs: Option<Vec<u32>>) -> PyResult<TruncatedFockSpace> {
    let cutoffs = cutoffs.unwrap_or_else(|| vec![default_cutoff(p.num_vars()); p.num_vars()]);
    TruncatedFockSpace::new(cutoffs).map_err(py_err)
}

fn params_for(modes: usize, alpha: Option<Vec<Complex64>>) -> CoherentParams {
    match alpha {
        Some(a) if a.len() == 1 => CoherentParams::uniform(modes, a[0]),
        Some(a) => CoherentParams::new(a),
        None => CoherentParams::uniform(modes, Complex64::new(1.0, 0.0)),
    }
}

fn options(modes: usize, alpha: Option<Vec<Complex64>>, oracle: bool) -> SimulationOptions {
    SimulationOptions {
        alphas: Some(params_for(modes, alpha)),
        oracle: if oracle {
            OracleCheck::Truncation
        } else {
            OracleCheck::Skip
        },
    }
}

/// Exact diagonal of `P(n)²` in basis order.
#[pyfunction]
#[pyo3(signature = (poly, cutoffs))]
fn hp_diagonal(poly: &PyPolynomial, cutoffs: Vec<u32>) -> PyResult<Vec<BigUint>> {
    let space = TruncatedFockSpace::new(cutoffs).map_err(py_err)?;
    hp_exact_diagonal(&poly.inner, &space).map_err(py_err)
}

/// All solutions in the inclusive box `0..=bounds[i]`, lexicographic.
#[pyfunction]
fn find_solutions(poly: &PyPolynomial, bounds: Vec<u64>) -> PyResult<Vec<Vec<BigUint>>> {
    let bx = SearchBox::new(bounds).map_err(py_err)?;
    oracle::find_solutions(&poly.inner, &bx).map(coords).map_err(py_err)
}

/// `(min P², argmins)` over the inclusive box.
#[pyfunction]
fn min_of_square(poly: &PyPolynomial, bounds: Vec<u64>) -> PyResult<(BigUint, Vec<Vec<BigUint>>)> {
    let bx = SearchBox::new(bounds).map_err(py_err)?;
    let m = oracle::min_of_square(&poly.inner, &bx).map_err(py_err)?;
    Ok((m.value, coords(m.argmins)))
}

#[pyfunction]
#[pyo3(signature = (poly, cutoffs=None, *, total_time=100.0, steps=10_000, shots=1000, seed=0, alpha=None, oracle=true))]
#[allow(clippy::too_many_arguments)]
fn solve(
    poly: &PyPolynomial,
    cutoffs: Option<Vec<u32>>,
    total_time: f64,
    steps: usize,
    shots: u64,
    seed: u64,
    alpha: Option<Vec<Complex64>>,
    oracle: bool,
) -> PyResult<String> {
    let space = space_for(&poly.inner, cutoffs)?;
    let schedule = Schedule::new(total_time, steps).map_err(py_err)?;
    let opts = options(space.modes(), alpha, oracle);
    let report = decide_existence(&poly.inner, &space, &schedule, shots, seed, &opts).map_err(py_err)?;
    to_json(&report)
}

#[pyfunction]
#[pyo3(signature = (poly, var=0, l_max=10, cutoffs=None, *, total_time=100.0, steps=10_000, shots=1000, seed=0, alpha=None, oracle=true))]
#[allow(clippy::too_many_arguments)]
fn finiteness(
    poly: &PyPolynomial,
    var: usize,
    l_max: u64,
    cutoffs: Option<Vec<u32>>,
    total_time: f64,
    steps: usize,
    shots: u64,
    seed: u64,
    alpha: Option<Vec<Complex64>>,
    oracle: bool,
) -> PyResult<String> {
    let space = space_for(&poly.inner, cutoffs)?;
    let schedule = Schedule::new(total_time, steps).map_err(py_err)?;
    let opts = options(space.modes(), alpha, oracle);
    let report = finiteness_sweep(&poly.inner, var, l_max, &space, &schedule, shots, seed, &opts)
        .map_err(py_err)?;
    to_json(&report)
}

#[pyfunction]
#[pyo3(signature = (poly, cutoffs=None, grid=21, alpha=None))]
fn gap_scan(
    poly: &PyPolynomial,
    cutoffs: Option<Vec<u32>>,
    grid: usize,
    alpha: Option<Vec<Complex64>>,
) -> PyResult<String> {
    let space = space_for(&poly.inner, cutoffs)?;
    let hi = build_hi(&params_for(space.modes(), alpha), &space).map_err(py_err)?;
    let hp = build_hp(&poly.inner, &space).map_err(py_err)?;
    to_json(&core_gap_scan(&hi, &hp, grid).map_err(py_err)?)
}

/// Minimum of the regularized diagonal and its certified tail bound.
#[pyfunction]
#[pyo3(signature = (poly, var=0, s=1.0, i_max=30, cutoffs=None))]
fn regularized_minimum(
    poly: &PyPolynomial,
    var: usize,
    s: f64,
    i_max: u32,
    cutoffs: Option<Vec<u32>>,
) -> PyResult<(f64, f64)> {
    let space = space_for(&poly.inner, cutoffs)?;
    let rf = RegulatorFamily::new(s, i_max).map_err(py_err)?;
    let h = build_regularized_hp(&poly.inner, var, &rf, &space).map_err(py_err)?;
    Ok((h.min_energy, h.tail_bound))
}

#[pyfunction]
#[pyo3(signature = (family, k=0, n_max=3, bounds=None))]
fn omega_census(family: &str, k: u64, n_max: u64, bounds: Option<Vec<u64>>) -> PyResult<String> {
    let family: OmegaFamily = family.parse().map_err(py_err)?;
    let bounds = bounds.unwrap_or_else(|| vec![default_cutoff(family.unknowns()) as u64; family.unknowns()]);
    let bx = SearchBox::new(bounds).map_err(py_err)?;
    to_json(&omega_bit_report(&family, k, n_max, &bx).map_err(py_err)?)
}

/// Runs the command-line tool in-process: `(exit_code, stdout, stderr)`.
#[pyfunction]
fn run_cli(py: Python<'_>, args: Vec<String>) -> (i32, String, String) {
    py.detach(|| {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv = std::iter::once("dioph-adiabatic".to_string()).chain(args);
        let code = dioph_adiabatic::cli::run(argv, &mut out, &mut err);
        (
            code,
            String::from_utf8_lossy(&out).into_owned(),
            String::from_utf8_lossy(&err).into_owned(),
        )
    })
}

#[pymodule(name = "dioph_adiabatic")]
fn python_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyPolynomial>()?;
    m.add_class::<PyFockSpace>()?;
    m.add_function(wrap_pyfunction!(hp_diagonal, m)?)?;
    m.add_function(wrap_pyfunction!(find_solutions, m)?)?;
    m.add_function(wrap_pyfunction!(min_of_square, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(finiteness, m)?)?;
    m.add_function(wrap_pyfunction!(gap_scan, m)?)?;
    m.add_function(wrap_pyfunction!(regularized_minimum, m)?)?;
    m.add_function(wrap_pyfunction!(omega_census, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    Ok(())
}
