//! FedAvg orchestration and the matched centralized baseline.
//!
//! Each communication round broadcasts the global parameters, lets every
//! client run `local_epochs` of momentum SGD on its own shard (velocity starts
//! at zero every round), and replaces the global model by the shard-size
//! weighted mean of the returned parameters.
//!
//! Client training within a round runs on the current rayon pool. Seeds are a
//! pure function of `(seed, round, client_id)` and aggregation always walks
//! clients in ascending id order, so results do not depend on the pool size.

use ndarray::Zip;
use rayon::prelude::*;

use crate::adversary::{self, AttackSpec};
use crate::dataset::{self, ClientShard, LabeledDataset};
use crate::error::{Error, Result};
use crate::metrics::{self, ClassificationReport};
use crate::nn::{self, MlpConfig, ModelParams, OptimizerState};
use crate::rng::{self, STREAM_EPOCH, STREAM_INIT};

/// Training hyperparameters. Defaults are the 10-client, 100-round setup with
/// SGD(lr = 0.01, momentum = 0.9) and batches of 32.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperParams {
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub comm_rounds: usize,
    pub n_clients: usize,
    pub local_epochs: usize,
    pub num_classes: usize,
    pub input_dim: usize,
    pub hidden_dims: Vec<usize>,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            momentum: 0.9,
            batch_size: 32,
            comm_rounds: 100,
            n_clients: 10,
            local_epochs: 1,
            num_classes: 7,
            input_dim: 784,
            hidden_dims: vec![200, 200, 200],
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("batch_size", self.batch_size),
            ("comm_rounds", self.comm_rounds),
            ("num_clients", self.n_clients),
            ("local_epochs", self.local_epochs),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::InvalidConfig(format!("{name} must be >= 1")));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "learning_rate must be finite and >= 0, got {}",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidConfig(format!(
                "momentum must lie in [0, 1), got {}",
                self.momentum
            )));
        }
        self.mlp_config().map(|_| ())
    }

    pub fn mlp_config(&self) -> Result<MlpConfig> {
        MlpConfig::new(self.input_dim, self.hidden_dims.clone(), self.num_classes)
    }
}

/// Global-model evaluation after one communication round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundRecord {
    pub round: usize,
    pub global_loss: f64,
    pub global_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub final_params: ModelParams,
    /// Evaluation of the freshly initialized model (round 0).
    pub initial: RoundRecord,
    /// One record per round, rounds `1..=comm_rounds`.
    pub history: Vec<RoundRecord>,
    pub report: ClassificationReport,
}

impl RunResult {
    pub fn final_accuracy(&self) -> f64 {
        self.report.accuracy
    }
}

/// Parameters of one client after local training, tagged for aggregation.
#[derive(Debug, Clone)]
pub struct ClientUpdate {
    pub client_id: usize,
    pub params: ModelParams,
    pub weight: f64,
}

/// Runs `local_epochs` epochs of mini-batch momentum SGD on `shard`, starting
/// from `global` with zero velocity.
pub fn local_train(
    global: &ModelParams,
    shard: &ClientShard,
    hp: &HyperParams,
    round_seed: u64,
) -> Result<ModelParams> {
    let mut params = global.clone();
    let mut state = OptimizerState::new(&params, hp.learning_rate, hp.momentum)?;
    for epoch in 0..hp.local_epochs {
        let epoch_seed = rng::derive_seed(round_seed, &[STREAM_EPOCH, epoch as u64]);
        for batch in dataset::batches(shard, hp.batch_size, epoch_seed)? {
            let (_, grads) = nn::backward(&params, &batch)?;
            state.step(&mut params, &grads)?;
        }
    }
    Ok(params)
}

/// Weighted coordinate-wise mean of `locals`, weights normalized to sum 1.
///
/// Evaluated as `θ₀ + Σᵢ wᵢ(θᵢ − θ₀)` in the given order and clamped to the
/// coordinate-wise range of the inputs, so identical inputs come back
/// unchanged and the result never leaves their convex hull.
pub fn fed_average(locals: &[ModelParams], weights: &[f64]) -> Result<ModelParams> {
    let first = locals.first().ok_or(Error::NoModels)?;
    if weights.len() != locals.len() {
        return Err(Error::ShapeMismatch {
            context: "aggregation weights",
            expected: locals.len(),
            actual: weights.len(),
        });
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::InvalidConfig(
            "aggregation weights must be finite and >= 0".into(),
        ));
    }
    for m in &locals[1..] {
        first.check_shape("aggregated models", m.layers())?;
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::ZeroTotalWeight);
    }

    let mut out = first.clone();
    for (li, layer) in out.layers_mut().iter_mut().enumerate() {
        for (i, m) in locals.iter().enumerate().skip(1) {
            let c = weights[i] / total;
            let src = &m.layers()[li];
            let base = &first.layers()[li];
            Zip::from(&mut layer.weights)
                .and(&src.weights)
                .and(&base.weights)
                .for_each(|o, &x, &b| *o += c * (x - b));
            Zip::from(&mut layer.biases)
                .and(&src.biases)
                .and(&base.biases)
                .for_each(|o, &x, &b| *o += c * (x - b));
        }
        if locals.len() > 1 {
            let clamp = |o: &mut f64, idx: &dyn Fn(&ModelParams) -> f64| {
                let (lo, hi) = locals
                    .iter()
                    .map(idx)
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                        (lo.min(v), hi.max(v))
                    });
                *o = o.clamp(lo, hi);
            };
            for (pos, o) in layer.weights.indexed_iter_mut() {
                clamp(o, &|m| m.layers()[li].weights[pos]);
            }
            for (pos, o) in layer.biases.indexed_iter_mut() {
                clamp(o, &|m| m.layers()[li].biases[pos]);
            }
        }
    }
    Ok(out)
}

/// [`fed_average`] over updates sorted by ascending client id, so the result
/// does not depend on arrival order.
pub fn aggregate(updates: &[ClientUpdate]) -> Result<ModelParams> {
    let mut order: Vec<&ClientUpdate> = updates.iter().collect();
    order.sort_by_key(|u| u.client_id);
    let locals: Vec<ModelParams> = order.iter().map(|u| u.params.clone()).collect();
    let weights: Vec<f64> = order.iter().map(|u| u.weight).collect();
    fed_average(&locals, &weights)
}

/// Loss and accuracy of `params` on `data`.
pub fn evaluate(params: &ModelParams, data: &LabeledDataset, round: usize) -> Result<RoundRecord> {
    let probs = nn::forward(params, data.features().view())?;
    let global_loss = nn::loss(probs.view(), data.labels())?;
    let preds = nn::argmax_rows(probs.view());
    let correct = preds
        .iter()
        .zip(data.labels())
        .filter(|(p, t)| p == t)
        .count();
    Ok(RoundRecord {
        round,
        global_loss,
        global_accuracy: correct as f64 / data.len() as f64,
    })
}

fn final_report(params: &ModelParams, test: &LabeledDataset) -> Result<ClassificationReport> {
    let preds = nn::predict(params, test.features().view())?;
    let cm = metrics::confusion(&preds, test.labels(), test.num_classes())?;
    metrics::report(&cm, test.class_names())
}

fn check_data(hp: &HyperParams, data: &LabeledDataset, what: &str) -> Result<()> {
    if data.num_features() != hp.input_dim {
        return Err(Error::InvalidData(format!(
            "{what} has {} features but the model expects {}",
            data.num_features(),
            hp.input_dim
        )));
    }
    if data.num_classes() != hp.num_classes {
        return Err(Error::InvalidData(format!(
            "{what} has {} classes but the model expects {}",
            data.num_classes(),
            hp.num_classes
        )));
    }
    if data.is_empty() {
        return Err(Error::InvalidData(format!("{what} is empty")));
    }
    Ok(())
}

/// Initial global parameters for a run seeded with `seed`.
pub fn initial_params(hp: &HyperParams, seed: u64) -> Result<ModelParams> {
    Ok(nn::init_params(
        &hp.mlp_config()?,
        rng::derive_seed(seed, &[STREAM_INIT]),
    ))
}

/// Full FedAvg run over `train_shards` for `hp.comm_rounds` rounds. With an
/// attack, the malicious client's shard is flipped once before round 1.
pub fn run_federated(
    train_shards: &[ClientShard],
    test: &LabeledDataset,
    hp: &HyperParams,
    attack: Option<&AttackSpec>,
    seed: u64,
) -> Result<RunResult> {
    hp.validate()?;
    if train_shards.len() != hp.n_clients {
        return Err(Error::InvalidConfig(format!(
            "{} shards supplied for {} clients",
            train_shards.len(),
            hp.n_clients
        )));
    }
    check_data(hp, test, "test set")?;
    for s in train_shards {
        check_data(hp, &s.data, &format!("shard of client {}", s.client_id))?;
    }

    let shards: Vec<ClientShard> = match attack {
        None => train_shards.to_vec(),
        Some(spec) => {
            spec.validate(hp.n_clients)?;
            if !train_shards
                .iter()
                .any(|s| s.client_id == spec.malicious_client)
            {
                return Err(Error::NoSuchClient {
                    client: spec.malicious_client,
                    clients: hp.n_clients,
                });
            }
            train_shards
                .iter()
                .map(|s| {
                    if s.client_id == spec.malicious_client {
                        adversary::flip_labels(s, spec, hp.num_classes).map(|(p, _)| p)
                    } else {
                        Ok(s.clone())
                    }
                })
                .collect::<Result<_>>()?
        }
    };

    let mut global = initial_params(hp, seed)?;
    let initial = evaluate(&global, test, 0)?;
    let mut history = Vec::with_capacity(hp.comm_rounds);
    for round in 1..=hp.comm_rounds {
        let updates = shards
            .par_iter()
            .map(|s| {
                let seed = rng::round_seed(seed, round, s.client_id);
                Ok(ClientUpdate {
                    client_id: s.client_id,
                    params: local_train(&global, s, hp, seed)?,
                    weight: s.len() as f64,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        global = aggregate(&updates)?;
        history.push(evaluate(&global, test, round)?);
    }
    let report = final_report(&global, test)?;
    Ok(RunResult {
        final_params: global,
        initial,
        history,
        report,
    })
}

/// Centralized SGD on the pooled training set with batches of
/// `batch_size × n_clients`, one epoch per round, so each step sees as many
/// rows as one federated round. With an attack, `flip_percent` of the whole
/// training set is relabelled.
pub fn run_centralized(
    train: &LabeledDataset,
    test: &LabeledDataset,
    hp: &HyperParams,
    attack: Option<&AttackSpec>,
    seed: u64,
) -> Result<RunResult> {
    hp.validate()?;
    check_data(hp, train, "training set")?;
    check_data(hp, test, "test set")?;
    let central = centralized_hyperparams(hp);

    let data = match attack {
        None => train.clone(),
        Some(spec) => {
            adversary::flip_dataset(train, spec.flip_percent, spec.seed, hp.num_classes)?.0
        }
    };
    let shard = ClientShard::new(0, data)?;

    let mut global = initial_params(hp, seed)?;
    let initial = evaluate(&global, test, 0)?;
    let mut history = Vec::with_capacity(hp.comm_rounds);
    for round in 1..=hp.comm_rounds {
        global = local_train(&global, &shard, &central, rng::round_seed(seed, round, 0))?;
        history.push(evaluate(&global, test, round)?);
    }
    let report = final_report(&global, test)?;
    Ok(RunResult {
        final_params: global,
        initial,
        history,
        report,
    })
}

/// Hyperparameters of the centralized baseline: one client, batch size
/// scaled by the client count.
pub fn centralized_hyperparams(hp: &HyperParams) -> HyperParams {
    HyperParams {
        batch_size: hp.batch_size * hp.n_clients,
        n_clients: 1,
        ..hp.clone()
    }
}
