//! Python bindings. Matrices cross the boundary as lists of rows.

use fedflip_core::dataset::{self, ClientShard, LabeledDataset, SynthSpec, LESION_CLASS_WEIGHTS};
use fedflip_core::experiment::DEFAULT_SYNTH_SPREAD;
use fedflip_core::{adversary, federation, metrics, nn, AttackSpec, Error, ErrorCategory};
use ndarray::Array2;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn py_err(e: Error) -> PyErr {
    match e.category() {
        ErrorCategory::Config | ErrorCategory::Data => PyValueError::new_err(e.to_string()),
        ErrorCategory::Runtime => PyRuntimeError::new_err(e.to_string()),
    }
}

fn to_array(rows: Vec<Vec<f64>>) -> PyResult<Array2<f64>> {
    let width = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != width) {
        return Err(PyValueError::new_err("all rows must have the same length"));
    }
    let n = rows.len();
    Array2::from_shape_vec((n, width), rows.into_iter().flatten().collect())
        .map_err(|e| PyValueError::new_err(e.to_string()))
}

fn to_rows(a: &Array2<f64>) -> Vec<Vec<f64>> {
    a.outer_iter().map(|r| r.to_vec()).collect()
}

/// Labeled feature matrix with the seven lesion classes.
#[pyclass(name = "Dataset", module = "fedflip", from_py_object)]
#[derive(Clone)]
struct PyDataset(LabeledDataset);

#[pymethods]
impl PyDataset {
    #[new]
    fn new(features: Vec<Vec<f64>>, labels: Vec<usize>) -> PyResult<Self> {
        LabeledDataset::lesions(to_array(features)?, labels)
            .map(Self)
            .map_err(py_err)
    }

    #[staticmethod]
    fn load_csv(path: std::path::PathBuf) -> PyResult<Self> {
        dataset::load_csv(&path).map(Self).map_err(py_err)
    }

    /// Synthetic clusters; `class_weights` defaults to the lesion imbalance.
    #[staticmethod]
    #[pyo3(signature = (n_samples, seed, cluster_spread = DEFAULT_SYNTH_SPREAD, class_weights = None))]
    fn synth(
        n_samples: usize,
        seed: u64,
        cluster_spread: f64,
        class_weights: Option<Vec<f64>>,
    ) -> PyResult<Self> {
        let weights = class_weights.unwrap_or_else(|| LESION_CLASS_WEIGHTS.to_vec());
        let spec = SynthSpec::new(n_samples, weights, cluster_spread).map_err(py_err)?;
        dataset::synth_dataset(&spec, seed)
            .map(Self)
            .map_err(py_err)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    #[getter]
    fn num_features(&self) -> usize {
        self.0.num_features()
    }

    #[getter]
    fn labels(&self) -> Vec<usize> {
        self.0.labels().to_vec()
    }

    #[getter]
    fn class_names(&self) -> Vec<String> {
        self.0.class_names().to_vec()
    }

    fn features(&self) -> Vec<Vec<f64>> {
        to_rows(self.0.features())
    }

    fn class_counts(&self) -> Vec<usize> {
        self.0.class_counts()
    }

    fn save_csv(&self, path: std::path::PathBuf) -> PyResult<()> {
        self.0.save_csv(&path).map_err(py_err)
    }

    /// Returns `(train, test)`.
    fn split(&self, test_fraction: f64, seed: u64) -> PyResult<(Self, Self)> {
        let (train, test) =
            dataset::train_test_split(&self.0, test_fraction, seed).map_err(py_err)?;
        Ok((Self(train), Self(test)))
    }

    /// IID shards; list position is the client id.
    fn partition(&self, n_clients: usize, seed: u64) -> PyResult<Vec<Self>> {
        let shards = dataset::partition_iid(&self.0, n_clients, seed).map_err(py_err)?;
        Ok(shards.into_iter().map(|s| Self(s.data)).collect())
    }

    /// Returns the poisoned copy and the sorted flipped row indices.
    fn flip_labels(&self, flip_percent: f64, seed: u64) -> PyResult<(Self, Vec<usize>)> {
        let c = self.0.num_classes();
        let (data, flipped) =
            adversary::flip_dataset(&self.0, flip_percent, seed, c).map_err(py_err)?;
        Ok((Self(data), flipped))
    }
}

/// Training hyperparameters; defaults are the lesion experiment settings.
#[pyclass(
    name = "HyperParams",
    module = "fedflip",
    get_all,
    set_all,
    from_py_object
)]
#[derive(Clone)]
struct PyHyperParams {
    learning_rate: f64,
    momentum: f64,
    batch_size: usize,
    comm_rounds: usize,
    n_clients: usize,
    local_epochs: usize,
    hidden_dims: Vec<usize>,
}

#[pymethods]
impl PyHyperParams {
    #[new]
    #[pyo3(signature = (learning_rate = 0.01, momentum = 0.9, batch_size = 32, comm_rounds = 100, n_clients = 10, local_epochs = 1, hidden_dims = vec![200, 200, 200]))]
    fn new(
        learning_rate: f64,
        momentum: f64,
        batch_size: usize,
        comm_rounds: usize,
        n_clients: usize,
        local_epochs: usize,
        hidden_dims: Vec<usize>,
    ) -> Self {
        Self {
            learning_rate,
            momentum,
            batch_size,
            comm_rounds,
            n_clients,
            local_epochs,
            hidden_dims,
        }
    }
}

impl PyHyperParams {
    fn to_core(&self, data: &LabeledDataset) -> federation::HyperParams {
        federation::HyperParams {
            learning_rate: self.learning_rate,
            momentum: self.momentum,
            batch_size: self.batch_size,
            comm_rounds: self.comm_rounds,
            n_clients: self.n_clients,
            local_epochs: self.local_epochs,
            num_classes: data.num_classes(),
            input_dim: data.num_features(),
            hidden_dims: self.hidden_dims.clone(),
        }
    }
}

/// MLP parameters.
#[pyclass(name = "Model", module = "fedflip", from_py_object)]
#[derive(Clone)]
struct PyModel(nn::ModelParams);

#[pymethods]
impl PyModel {
    /// Glorot-uniform weights, zero biases.
    #[staticmethod]
    #[pyo3(signature = (seed, input_dim = 784, hidden_dims = vec![200, 200, 200], num_classes = 7))]
    fn init(
        seed: u64,
        input_dim: usize,
        hidden_dims: Vec<usize>,
        num_classes: usize,
    ) -> PyResult<Self> {
        let config = nn::MlpConfig::new(input_dim, hidden_dims, num_classes).map_err(py_err)?;
        Ok(Self(nn::init_params(&config, seed)))
    }

    #[getter]
    fn num_parameters(&self) -> usize {
        self.0.num_parameters()
    }

    fn flatten(&self) -> Vec<f64> {
        self.0.flatten()
    }

    /// Class probabilities, one row per input row.
    fn forward(&self, features: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        Ok(to_rows(
            &nn::forward(&self.0, to_array(features)?.view()).map_err(py_err)?,
        ))
    }

    fn predict(&self, features: Vec<Vec<f64>>) -> PyResult<Vec<usize>> {
        nn::predict(&self.0, to_array(features)?.view()).map_err(py_err)
    }

    /// Mean cross-entropy on `data`.
    fn loss(&self, data: &PyDataset) -> PyResult<f64> {
        let probs = nn::forward(&self.0, data.0.features().view()).map_err(py_err)?;
        nn::loss(probs.view(), data.0.labels()).map_err(py_err)
    }
}

#[pyclass(name = "RunResult", module = "fedflip", get_all)]
struct PyRunResult {
    model: PyModel,
    /// `(round, loss, accuracy)` for rounds 0..=R.
    history: Vec<(usize, f64, f64)>,
    final_accuracy: f64,
    report: String,
}

impl From<federation::RunResult> for PyRunResult {
    fn from(r: federation::RunResult) -> Self {
        let history = std::iter::once(&r.initial)
            .chain(&r.history)
            .map(|h| (h.round, h.global_loss, h.global_accuracy))
            .collect();
        Self {
            final_accuracy: r.final_accuracy(),
            report: metrics::format_report(&r.report),
            model: PyModel(r.final_params),
            history,
        }
    }
}

/// FedAvg over `shards` (list position = client id), optionally with one
/// label-flipping client.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (shards, test, hyper, seed, flip_percent = None, malicious_client = 0, attack_seed = 0))]
fn run_federated(
    py: Python<'_>,
    shards: Vec<PyDataset>,
    test: &PyDataset,
    hyper: &PyHyperParams,
    seed: u64,
    flip_percent: Option<f64>,
    malicious_client: usize,
    attack_seed: u64,
) -> PyResult<PyRunResult> {
    let mut hp = hyper.to_core(&test.0);
    hp.n_clients = shards.len();
    let shards = shards
        .into_iter()
        .enumerate()
        .map(|(i, d)| ClientShard::new(i, d.0))
        .collect::<Result<Vec<_>, _>>()
        .map_err(py_err)?;
    let attack = flip_percent
        .map(|p| AttackSpec::new(malicious_client, p, attack_seed))
        .transpose()
        .map_err(py_err)?;
    let test = test.0.clone();
    py.detach(|| federation::run_federated(&shards, &test, &hp, attack.as_ref(), seed))
        .map(Into::into)
        .map_err(py_err)
}

/// Centralized baseline with batches of `batch_size × n_clients`.
#[pyfunction]
#[pyo3(signature = (train, test, hyper, seed, flip_percent = None, attack_seed = 0))]
fn run_centralized(
    py: Python<'_>,
    train: &PyDataset,
    test: &PyDataset,
    hyper: &PyHyperParams,
    seed: u64,
    flip_percent: Option<f64>,
    attack_seed: u64,
) -> PyResult<PyRunResult> {
    let hp = hyper.to_core(&test.0);
    let attack = flip_percent
        .map(|p| AttackSpec::new(0, p, attack_seed))
        .transpose()
        .map_err(py_err)?;
    let (train, test) = (train.0.clone(), test.0.clone());
    py.detach(|| federation::run_centralized(&train, &test, &hp, attack.as_ref(), seed))
        .map(Into::into)
        .map_err(py_err)
}

/// Weighted coordinate-wise mean of models.
#[pyfunction]
fn fed_average(models: Vec<PyModel>, weights: Vec<f64>) -> PyResult<PyModel> {
    let locals: Vec<nn::ModelParams> = models.into_iter().map(|m| m.0).collect();
    federation::fed_average(&locals, &weights)
        .map(PyModel)
        .map_err(py_err)
}

#[pyfunction]
fn confusion_matrix(
    preds: Vec<usize>,
    labels: Vec<usize>,
    num_classes: usize,
) -> PyResult<Vec<Vec<u64>>> {
    Ok(metrics::confusion(&preds, &labels, num_classes)
        .map_err(py_err)?
        .counts()
        .to_vec())
}

/// Text classification report; classes are named by index unless given.
#[pyfunction]
#[pyo3(signature = (preds, labels, num_classes, class_names = None))]
fn classification_report(
    preds: Vec<usize>,
    labels: Vec<usize>,
    num_classes: usize,
    class_names: Option<Vec<String>>,
) -> PyResult<String> {
    let cm = metrics::confusion(&preds, &labels, num_classes).map_err(py_err)?;
    let names = class_names.unwrap_or_else(|| metrics::index_names(num_classes));
    Ok(metrics::format_report(
        &metrics::report(&cm, &names).map_err(py_err)?,
    ))
}

#[pymodule]
fn fedflip(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDataset>()?;
    m.add_class::<PyHyperParams>()?;
    m.add_class::<PyModel>()?;
    m.add_class::<PyRunResult>()?;
    m.add_function(wrap_pyfunction!(run_federated, m)?)?;
    m.add_function(wrap_pyfunction!(run_centralized, m)?)?;
    m.add_function(wrap_pyfunction!(fed_average, m)?)?;
    m.add_function(wrap_pyfunction!(confusion_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(classification_report, m)?)?;
    Ok(())
}
