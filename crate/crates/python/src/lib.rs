use gapsense::datasets::{self, Dataset};
use gapsense::{monte_carlo, Error, Method};
use pyo3::exceptions::{PyKeyError, PyOSError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::UnknownDataset { .. } | Error::DatasetKind { .. } => PyKeyError::new_err(e.to_string()),
        Error::Io(_) | Error::Read { .. } => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn sample(values: Vec<f64>) -> PyResult<gapsense::Sample> {
    gapsense::Sample::new(values, "python").map_err(to_py)
}

/// Weber constant and the IIR threshold it maps to.
#[pyclass(module = "gapsense_py", frozen)]
struct Sensitivity {
    inner: gapsense::Sensitivity,
}

#[pymethods]
impl Sensitivity {
    #[new]
    #[pyo3(signature = (c=None, K=None))]
    #[allow(non_snake_case)]
    fn new(c: Option<f64>, K: Option<f64>) -> PyResult<Self> {
        let inner = match (c, K) {
            (Some(_), Some(_)) => return Err(PyValueError::new_err("give c or K, not both")),
            (Some(c), None) => gapsense::Sensitivity::from_threshold(c),
            (None, Some(k)) => gapsense::Sensitivity::from_weber(k),
            (None, None) => Ok(gapsense::Sensitivity::default()),
        }
        .map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn threshold_c(&self) -> f64 {
        self.inner.threshold_c
    }

    #[getter]
    fn weber_k(&self) -> f64 {
        self.inner.weber_k
    }

    fn __repr__(&self) -> String {
        format!("Sensitivity(c={}, K={})", self.inner.threshold_c, self.inner.weber_k)
    }
}

#[pyclass(module = "gapsense_py", frozen)]
struct Detection {
    inner: gapsense::Detection,
}

#[pymethods]
impl Detection {
    #[getter]
    fn method(&self) -> &'static str {
        self.inner.method.name()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n
    }

    #[getter]
    fn outliers(&self) -> Vec<f64> {
        self.inner.outlier_values.clone()
    }

    #[getter]
    fn outlier_indices(&self) -> Vec<usize> {
        self.inner.outlier_indices.clone()
    }

    #[getter]
    fn normal_interval(&self) -> (f64, f64) {
        self.inner.normal_interval
    }

    #[getter]
    fn degenerate(&self) -> bool {
        self.inner.degenerate
    }

    /// Scored candidates as dicts, empty for the baseline rules.
    #[getter]
    fn trace<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, pyo3::types::PyDict>>> {
        self.inner
            .trace
            .iter()
            .map(|r| {
                let d = pyo3::types::PyDict::new(py);
                d.set_item("index", r.index)?;
                d.set_item("side", r.side.to_string())?;
                d.set_item("candidate", r.candidate)?;
                d.set_item("gap", r.gap)?;
                d.set_item("max_prev", r.max_prev)?;
                d.set_item("iir", r.iir)?;
                d.set_item("accepted", r.accepted)?;
                Ok(d)
            })
            .collect()
    }

    fn to_json(&self) -> PyResult<String> {
        gapsense::io::to_json(&self.inner).map_err(to_py)
    }

    fn __len__(&self) -> usize {
        self.inner.outlier_count()
    }

    fn __repr__(&self) -> String {
        format!(
            "Detection(method={:?}, outliers={:?}, normal_interval={:?})",
            self.inner.method.name(),
            self.inner.outlier_values,
            self.inner.normal_interval
        )
    }
}

fn method_for(name: &str, sens: gapsense::Sensitivity, k: f64, whisker: f64) -> PyResult<Method> {
    Ok(match name {
        "iir" => Method::two_sided(sens),
        "iir_high" => Method::high_side(sens),
        "mean_sigma" => Method::MeanSigma { k },
        "boxplot" => Method::Boxplot { whisker },
        "mad" => Method::Mad {
            k,
            b: gapsense::baseline::MAD_CONSISTENCY,
        },
        "chauvenet" => Method::Chauvenet {},
        other => return Err(PyValueError::new_err(format!("unknown method `{other}`"))),
    })
}

/// Runs one detector. `method` is iir, iir_high, mean_sigma, boxplot, mad
/// or chauvenet.
#[pyfunction]
#[pyo3(signature = (values, method="iir", sensitivity=None, k=3.0, whisker=1.5))]
fn detect(
    values: Vec<f64>,
    method: &str,
    sensitivity: Option<PyRef<'_, Sensitivity>>,
    k: f64,
    whisker: f64,
) -> PyResult<Detection> {
    let sens = sensitivity.map(|s| s.inner).unwrap_or_default();
    let m = method_for(method, sens, k, whisker)?;
    let inner = m.detect(&sample(values)?).map_err(to_py)?;
    Ok(Detection { inner })
}

/// Raw gaps of the sorted values, the gaps divided by the range, and the
/// range.
#[pyfunction]
fn gap_series(values: Vec<f64>) -> PyResult<(Vec<f64>, Vec<f64>, f64)> {
    let g = gapsense::gap_series(&sample(values)?).map_err(to_py)?;
    Ok((g.gaps, g.normalized, g.range))
}

#[pyfunction]
fn iir_closed_form(gap: f64, max_prev: f64, n: usize, range: f64) -> PyResult<f64> {
    gapsense::iir_closed_form(gap, max_prev, n, range).map_err(to_py)
}

#[pyfunction]
fn weber_to_threshold(k: f64) -> PyResult<f64> {
    gapsense::weber_to_threshold(k).map_err(to_py)
}

#[pyfunction]
fn threshold_to_weber(c: f64) -> PyResult<f64> {
    gapsense::threshold_to_weber(c).map_err(to_py)
}

#[pyfunction]
fn tukey_hinges(values: Vec<f64>) -> PyResult<(f64, f64)> {
    gapsense::tukey_hinges(&sample(values)?).map_err(to_py)
}

#[pyfunction]
fn normal_tail(z: f64) -> PyResult<f64> {
    gapsense::normal_tail(z).map_err(to_py)
}

/// Built-in univariate data as a list, or 2-D data as a list of pairs.
#[pyfunction]
fn builtin_dataset(py: Python<'_>, name: &str) -> PyResult<Py<PyAny>> {
    Ok(match datasets::builtin_dataset(name).map_err(to_py)? {
        Dataset::Univariate(s) => s.values().to_vec().into_pyobject(py)?.into_any().unbind(),
        Dataset::Points(p) => p.points().to_vec().into_pyobject(py)?.into_any().unbind(),
    })
}

#[pyfunction]
fn dataset_names() -> Vec<&'static str> {
    datasets::NAMES.to_vec()
}

/// Resonance clustering. Returns `(labels, silent_ids)`; labels are
/// 1-based cluster numbers or None.
#[pyfunction]
#[pyo3(signature = (points, sensitivity=None, min_partners=gapsense::DEFAULT_MIN_PARTNERS))]
fn cluster(
    points: Vec<Vec<f64>>,
    sensitivity: Option<PyRef<'_, Sensitivity>>,
    min_partners: usize,
) -> PyResult<(Vec<Option<usize>>, Vec<usize>)> {
    let sens = sensitivity.map(|s| s.inner).unwrap_or_default();
    let p = gapsense::PointSet::new(points).map_err(to_py)?;
    let part = gapsense::cluster_points(&p, gapsense::Metric::Euclidean, sens, min_partners).map_err(to_py)?;
    Ok((part.labels, part.silent_ids))
}

type CurveRow = (f64, String, f64, f64, Option<f64>);

/// Contamination sweep for the default methods. Rows are
/// `(x, method, detected_pct, stderr, recall_pct)`.
#[pyfunction]
#[pyo3(signature = (contaminant_mean, fractions, reps=100, seed=0))]
fn breakdown_curve(
    contaminant_mean: f64,
    fractions: Vec<f64>,
    reps: usize,
    seed: u64,
) -> PyResult<Vec<CurveRow>> {
    let (base, _) = monte_carlo::contamination_sweep(contaminant_mean, reps, seed);
    let curve = monte_carlo::breakdown_curve(&base, &fractions, &monte_carlo::default_methods()).map_err(to_py)?;
    Ok(curve
        .into_iter()
        .map(|p| (p.x, p.method, p.detected_pct, p.stderr, p.recall_pct))
        .collect())
}

#[pymodule]
fn gapsense_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Sensitivity>()?;
    m.add_class::<Detection>()?;
    m.add("DEFAULT_THRESHOLD", gapsense::DEFAULT_THRESHOLD)?;
    m.add_function(wrap_pyfunction!(detect, m)?)?;
    m.add_function(wrap_pyfunction!(gap_series, m)?)?;
    m.add_function(wrap_pyfunction!(iir_closed_form, m)?)?;
    m.add_function(wrap_pyfunction!(weber_to_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(threshold_to_weber, m)?)?;
    m.add_function(wrap_pyfunction!(tukey_hinges, m)?)?;
    m.add_function(wrap_pyfunction!(normal_tail, m)?)?;
    m.add_function(wrap_pyfunction!(builtin_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(dataset_names, m)?)?;
    m.add_function(wrap_pyfunction!(cluster, m)?)?;
    m.add_function(wrap_pyfunction!(breakdown_curve, m)?)?;
    Ok(())
}
