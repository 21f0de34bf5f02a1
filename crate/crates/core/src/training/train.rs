//! Minibatch ADAM training with early stopping, and best-of-k runs.

use super::eval::{evaluate, select_supervised, Metric};
use super::loss::batch_loss;
use super::TrainConfig;
use crate::autodiff::{Adam, Graph, ParamStore};
use crate::error::{Error, Result};
use crate::models::{Example, Model};
use crate::seed::{child_rng, derive};
use log::{debug, info};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Batches per length-sorted window when forming minibatches.
const BUCKET_WINDOW: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_metric: f64,
    /// Seconds since the run started.
    pub wall_time: f64,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub seed: u64,
    /// Parameters from the best validation epoch.
    pub model: Model,
    pub best_epoch: usize,
    pub best_val: Metric,
    pub log: Vec<EpochRecord>,
}

#[derive(Debug, Clone)]
pub struct MultiRun {
    pub runs: Vec<RunResult>,
    /// Index of the run with the best validation metric.
    pub best: usize,
}

impl MultiRun {
    pub fn best_run(&self) -> &RunResult {
        &self.runs[self.best]
    }

    pub fn val_metrics(&self) -> Vec<f64> {
        self.runs.iter().map(|r| r.best_val.value()).collect()
    }
}

/// Shuffled minibatches; rows are sorted by sentence count inside windows
/// of [`BUCKET_WINDOW`] batches to limit padding.
pub fn minibatches<R: Rng + ?Sized>(lens: &[usize], batch_size: usize, rng: &mut R) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..lens.len()).collect();
    idx.shuffle(rng);
    let mut batches = Vec::new();
    for window in idx.chunks_mut(batch_size * BUCKET_WINDOW) {
        window.sort_by_key(|&i| lens[i]);
        batches.extend(window.chunks(batch_size).map(<[usize]>::to_vec));
    }
    batches.shuffle(rng);
    batches
}

/// Adds `l2 · w` to the gradient of every decayed parameter.
fn add_weight_decay(store: &ParamStore, grads: &mut [(crate::autodiff::ParamId, crate::autodiff::Tensor)], l2: f64) {
    if l2 == 0.0 {
        return;
    }
    for (id, g) in grads.iter_mut() {
        let p = store.get(*id);
        if p.decay {
            for (gv, w) in g.data.iter_mut().zip(&p.value.data) {
                *gv += l2 * w;
            }
        }
    }
}

/// One training run. `on_epoch` sees every log record as it is produced.
pub fn train(
    config: &TrainConfig,
    train_set: &[Example],
    val_set: &[Example],
    seed: u64,
    on_epoch: &mut dyn FnMut(&EpochRecord),
) -> Result<RunResult> {
    config.validate()?;
    if train_set.is_empty() || val_set.is_empty() {
        return Err(Error::Contract("empty training or validation set".into()));
    }
    let mut model = Model::new(config.model_config(), derive(seed, &[0]))?;
    let supervised = if config.supervised() {
        let targets: Vec<_> = train_set.iter().map(|e| e.target).collect();
        let keep = select_supervised(&targets, config.supervision, derive(seed, &[1]))?;
        for (k, e) in keep.iter().zip(train_set) {
            if *k && e.visual.is_none() {
                return Err(Error::Contract("visual supervision requested but samples carry no visuals".into()));
            }
        }
        keep
    } else {
        vec![false; train_set.len()]
    };
    let lens: Vec<usize> = train_set.iter().map(|e| e.sentences.len()).collect();
    let mut adam = Adam::new(&model.store, config.lr);
    let start = Instant::now();
    let mut best = (Metric::Accuracy(f64::NAN), 0usize, model.store.clone());
    let mut log = Vec::new();
    for epoch in 1..=config.max_epochs {
        let mut rng = child_rng(seed, &[2, epoch as u64]);
        let batches = minibatches(&lens, config.batch_size, &mut rng);
        let mut loss_sum = 0.0;
        for (bi, rows) in batches.iter().enumerate() {
            let batch: Vec<&Example> = rows.iter().map(|&i| &train_set[i]).collect();
            let sup: Vec<bool> = rows.iter().map(|&i| supervised[i]).collect();
            let mut g = Graph::new(true, derive(seed, &[3, epoch as u64, bi as u64]));
            let f = model.forward(&mut g, &batch)?;
            let loss = batch_loss(&mut g, &f, &batch, &sup, config.lambda_vi)?;
            let lv = g.value(loss).item() + config.l2 * model.store.half_sq_norm();
            if !lv.is_finite() {
                return Err(Error::Diverged(format!("epoch {epoch} batch {bi}: loss {lv}")));
            }
            loss_sum += lv * rows.len() as f64;
            let mut grads = g.backward(loss)?.into_params();
            add_weight_decay(&model.store, &mut grads, config.l2);
            adam.step(&mut model.store, &grads)?;
            if let Some((_, p)) = model.store.iter().find(|(_, p)| p.value.data.iter().any(|v| !v.is_finite())) {
                return Err(Error::Diverged(format!("epoch {epoch} batch {bi}: non-finite values in {}", p.name)));
            }
        }
        let val = evaluate(&model, val_set, config.batch_size.max(64))?;
        let rec = EpochRecord {
            epoch,
            train_loss: loss_sum / train_set.len() as f64,
            val_metric: val.value(),
            wall_time: start.elapsed().as_secs_f64(),
        };
        debug!("epoch {epoch}: loss {:.5} val {} {:.4}", rec.train_loss, val.name(), rec.val_metric);
        on_epoch(&rec);
        log.push(rec);
        if epoch == 1 || val.better_than(best.0) {
            best = (val, epoch, model.store.clone());
        } else if epoch - best.1 >= config.patience {
            break;
        }
    }
    let (best_val, best_epoch, store) = best;
    info!("run {seed:#x}: best {} {:.4} at epoch {best_epoch}", best_val.name(), best_val.value());
    model.store = store;
    Ok(RunResult { seed, model, best_epoch, best_val, log })
}

/// Seed of run `k` of a multi-run job.
pub fn run_seed(config: &TrainConfig, k: usize) -> u64 {
    derive(config.seed, &[k as u64])
}

/// `config.runs` independent runs in parallel; returns all of them and the
/// index of the best by validation. `on_epoch` receives the run index with
/// each record.
pub fn multi_run(
    config: &TrainConfig,
    train_set: &[Example],
    val_set: &[Example],
    on_epoch: &(dyn Fn(usize, &EpochRecord) + Sync),
) -> Result<MultiRun> {
    let runs: Vec<RunResult> = (0..config.runs)
        .into_par_iter()
        .map(|k| train(config, train_set, val_set, run_seed(config, k), &mut |e| on_epoch(k, e)))
        .collect::<Result<_>>()?;
    let best = (0..runs.len()).fold(0, |b, i| if runs[i].best_val.better_than(runs[b].best_val) { i } else { b });
    Ok(MultiRun { runs, best })
}
