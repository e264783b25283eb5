//! Python bindings for `anfold`. Reports come back as JSON strings.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use anfold::boundary::{self, BoundaryFunction};
use anfold::folding::{self, FoldedBoundary};
use anfold::geometry::Mat;
use anfold::lattice::Lattice;
use anfold::oracle;
use anfold::relunet::{self, Decoder};

fn err(e: anfold::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn json<T: serde::Serialize>(v: &T) -> PyResult<String> {
    serde_json::to_string(v).map_err(|e| err(e.into()))
}

#[pyclass(name = "Lattice", module = "anfold_py", frozen)]
struct PyLattice {
    inner: Lattice,
}

#[pymethods]
impl PyLattice {
    /// The root lattice `A_n` with Gram matrix `J + I`.
    #[staticmethod]
    fn an(n: usize) -> PyResult<Self> {
        Ok(PyLattice { inner: Lattice::an(n).map_err(err)? })
    }

    #[staticmethod]
    fn from_gram(gram: Vec<Vec<f64>>) -> PyResult<Self> {
        let g = Mat::from_rows(&gram).map_err(err)?;
        Ok(PyLattice { inner: Lattice::from_gram(&g).map_err(err)? })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    fn generator(&self) -> Vec<Vec<f64>> {
        self.inner.generator().to_rows()
    }

    fn gram(&self) -> Vec<Vec<f64>> {
        self.inner.gram().to_rows()
    }

    fn is_an(&self) -> bool {
        self.inner.is_an()
    }

    fn point(&self, z: Vec<i64>) -> PyResult<Vec<f64>> {
        if z.len() != self.inner.n() {
            return Err(err(anfold::Error::DimensionMismatch { expected: self.inner.n(), found: z.len() }));
        }
        Ok(self.inner.point(&z))
    }

    fn coords(&self, y: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.coords(&y).map_err(err)
    }

    /// `(y − k·G, k)` with the first entry in the fundamental parallelotope.
    fn reduce(&self, y: Vec<f64>) -> PyResult<(Vec<f64>, Vec<i64>)> {
        self.inner.reduce_to_parallelotope(&y).map_err(err)
    }

    fn relevant_vector_count(&self) -> PyResult<usize> {
        Ok(self.inner.relevant_vectors().map_err(err)?.count())
    }

    fn to_json(&self) -> PyResult<String> {
        json(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!("Lattice(n={})", self.inner.n())
    }
}

/// Brute-force closest point: `(z, dist2, tie)`.
#[pyfunction]
#[pyo3(signature = (lattice, y, margin=None))]
fn cvp(lattice: &PyLattice, y: Vec<f64>, margin: Option<i64>) -> PyResult<(Vec<i64>, f64, bool)> {
    let m = margin.unwrap_or_else(|| oracle::default_margin(lattice.inner.n()));
    let r = oracle::cvp_bruteforce(&lattice.inner, &y, m).map_err(err)?;
    Ok((r.z, r.dist2, r.tie))
}

#[pyfunction]
#[pyo3(signature = (lattice, samples, seed=1))]
fn verify_vr(lattice: &PyLattice, samples: u64, seed: u64) -> PyResult<String> {
    json(&oracle::verify_vr(&lattice.inner, samples, seed).map_err(err)?)
}

#[pyclass(name = "BoundaryFunction", module = "anfold_py", frozen)]
struct PyBoundary {
    inner: BoundaryFunction,
}

#[pymethods]
impl PyBoundary {
    #[new]
    #[pyo3(signature = (lattice, axis=0))]
    fn new(lattice: &PyLattice, axis: usize) -> PyResult<Self> {
        Ok(PyBoundary { inner: BoundaryFunction::build(&lattice.inner, axis).map_err(err)? })
    }

    fn piece_count(&self) -> usize {
        self.inner.piece_count()
    }

    fn group_sizes(&self) -> Vec<usize> {
        self.inner.groups.iter().map(Vec::len).collect()
    }

    fn distinct_functions(&self) -> usize {
        self.inner.distinct_functions()
    }

    /// `f(ỹ)` for `ỹ` of length `n − 1` in the boundary's frame.
    fn evaluate(&self, yt: Vec<f64>) -> PyResult<f64> {
        if yt.len() + 1 != self.inner.n {
            return Err(err(anfold::Error::DimensionMismatch { expected: self.inner.n - 1, found: yt.len() }));
        }
        Ok(self.inner.evaluate(&yt))
    }

    /// Decoded bit for a point of `P(B)` in the lattice frame.
    fn bit(&self, y: Vec<f64>) -> PyResult<u8> {
        if y.len() != self.inner.n {
            return Err(err(anfold::Error::DimensionMismatch { expected: self.inner.n, found: y.len() }));
        }
        Ok(self.inner.hld_bit(&y))
    }

    fn to_json(&self) -> PyResult<String> {
        json(&self.inner)
    }
}

#[pyclass(name = "FoldedBoundary", module = "anfold_py", frozen)]
struct PyFolded {
    inner: FoldedBoundary,
}

#[pymethods]
impl PyFolded {
    #[new]
    fn new(lattice: &PyLattice) -> PyResult<Self> {
        Ok(PyFolded { inner: FoldedBoundary::build(&lattice.inner).map_err(err)? })
    }

    fn piece_count(&self) -> usize {
        self.inner.piece_count()
    }

    fn fold(&self, yt: Vec<f64>) -> PyResult<Vec<f64>> {
        if yt.len() + 1 != self.inner.fold.n {
            return Err(err(anfold::Error::DimensionMismatch { expected: self.inner.fold.n - 1, found: yt.len() }));
        }
        Ok(self.inner.fold.apply(&yt))
    }

    /// `f_{D′}(F(ỹ))`
    fn evaluate(&self, yt: Vec<f64>) -> PyResult<f64> {
        let folded = self.fold(yt)?;
        Ok(self.inner.evaluate_folded(&folded))
    }
}

#[pyclass(name = "Decoder", module = "anfold_py", frozen)]
struct PyDecoder {
    inner: Decoder,
    lattice: Lattice,
}

#[pymethods]
impl PyDecoder {
    #[new]
    fn new(lattice: &PyLattice) -> PyResult<Self> {
        let inner = relunet::build_full_decoder(&lattice.inner).map_err(err)?;
        Ok(PyDecoder { inner, lattice: lattice.inner.clone() })
    }

    fn decode(&self, y: Vec<f64>) -> PyResult<Vec<i64>> {
        self.inner.decode(&self.lattice, &y).map_err(err)
    }

    /// `(depth, width, params)` of the nets side by side.
    fn stats(&self) -> (usize, usize, usize) {
        let s = self.inner.stats();
        (s.depth, s.max_width, s.parameter_count)
    }

    /// Raw output `s` of one bit network; the bit is `s > 0`.
    fn bit_output(&self, axis: usize, y: Vec<f64>) -> PyResult<f64> {
        let net = self
            .inner
            .nets
            .get(axis)
            .ok_or_else(|| err(anfold::Error::AxisOutOfRange { axis, n: self.inner.n() }))?;
        Ok(net.forward(&y).map_err(err)?[0])
    }

    fn network_json(&self, axis: usize) -> PyResult<String> {
        let net = self
            .inner
            .nets
            .get(axis)
            .ok_or_else(|| err(anfold::Error::AxisOutOfRange { axis, n: self.inner.n() }))?;
        json(net)
    }
}

#[pyfunction]
fn count_pieces_formula(n: usize) -> u128 {
    boundary::count_pieces_formula(n)
}

#[pyfunction]
fn shallow_bound_formula(n: usize) -> u128 {
    boundary::shallow_bound_formula(n)
}

#[pyfunction]
#[pyo3(signature = (n, samples, seed=1))]
fn piece_count_report(n: usize, samples: u64, seed: u64) -> PyResult<String> {
    json(&boundary::piece_count_report(n, samples, seed).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (n, samples, seed=1))]
fn fold_check(n: usize, samples: u64, seed: u64) -> PyResult<String> {
    json(&folding::fold_check(n, samples, seed).map_err(err)?)
}

#[pyfunction]
fn scaling_table(ns: Vec<usize>) -> PyResult<String> {
    json(&relunet::scaling_table(&ns).map_err(err)?)
}

#[pymodule]
fn anfold_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyLattice>()?;
    m.add_class::<PyBoundary>()?;
    m.add_class::<PyFolded>()?;
    m.add_class::<PyDecoder>()?;
    m.add_function(wrap_pyfunction!(cvp, m)?)?;
    m.add_function(wrap_pyfunction!(verify_vr, m)?)?;
    m.add_function(wrap_pyfunction!(count_pieces_formula, m)?)?;
    m.add_function(wrap_pyfunction!(shallow_bound_formula, m)?)?;
    m.add_function(wrap_pyfunction!(piece_count_report, m)?)?;
    m.add_function(wrap_pyfunction!(fold_check, m)?)?;
    m.add_function(wrap_pyfunction!(scaling_table, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
