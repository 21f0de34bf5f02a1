//! Accuracy and rmse over a split, and partial visual supervision.

use crate::error::{Error, Result};
use crate::models::{Example, Model, Target};
use crate::seed::child_rng;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "metric", content = "value")]
pub enum Metric {
    /// Percentage of correct answers.
    Accuracy(f64),
    Rmse(f64),
}

impl Metric {
    pub fn value(self) -> f64 {
        match self {
            Metric::Accuracy(v) | Metric::Rmse(v) => v,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::Accuracy(_) => "accuracy",
            Metric::Rmse(_) => "rmse",
        }
    }

    /// Strictly better: higher accuracy or lower rmse.
    pub fn better_than(self, other: Metric) -> bool {
        match (self, other) {
            (Metric::Accuracy(a), Metric::Accuracy(b)) => a > b,
            (Metric::Rmse(a), Metric::Rmse(b)) => a < b,
            _ => false,
        }
    }
}

/// Index of the largest entry (first on ties).
pub fn argmax(row: &[f64]) -> usize {
    row.iter().enumerate().fold(0, |best, (i, &v)| if v > row[best] { i } else { best })
}

/// Metric of raw model outputs against targets.
pub fn score(outputs: &[Vec<f64>], targets: &[Target]) -> Result<Metric> {
    if outputs.len() != targets.len() || targets.is_empty() {
        return Err(Error::Contract(format!("{} outputs for {} targets", outputs.len(), targets.len())));
    }
    match targets[0] {
        Target::Class(_) => {
            let mut correct = 0usize;
            for (o, t) in outputs.iter().zip(targets) {
                let Target::Class(c) = *t else {
                    return Err(Error::Contract("mixed targets".into()));
                };
                correct += usize::from(argmax(o) == c);
            }
            Ok(Metric::Accuracy(100.0 * correct as f64 / targets.len() as f64))
        }
        Target::Value(_) => {
            let mut se = 0.0;
            for (o, t) in outputs.iter().zip(targets) {
                let Target::Value(v) = *t else {
                    return Err(Error::Contract("mixed targets".into()));
                };
                se += (o[0] - v).powi(2);
            }
            Ok(Metric::Rmse((se / targets.len() as f64).sqrt()))
        }
    }
}

/// Evaluation-mode outputs for every example, sharded across threads.
pub fn predict_all(model: &Model, examples: &[Example], batch_size: usize) -> Result<Vec<Vec<f64>>> {
    let chunks: Vec<Vec<Vec<f64>>> = examples
        .par_chunks(batch_size.max(1))
        .map(|c| model.predict(&c.iter().collect::<Vec<_>>()))
        .collect::<Result<_>>()?;
    Ok(chunks.into_iter().flatten().collect())
}

pub fn evaluate(model: &Model, examples: &[Example], batch_size: usize) -> Result<Metric> {
    let outputs = predict_all(model, examples, batch_size)?;
    score(&outputs, &examples.iter().map(|e| e.target).collect::<Vec<_>>())
}

fn stratum(t: Target) -> i64 {
    match t {
        Target::Class(c) => c as i64,
        Target::Value(v) => v.round() as i64,
    }
}

/// Chooses `⌈φ·n⌉` rows to keep visual ground truth, allocated across
/// answer classes by largest remainder and drawn uniformly within each.
pub fn select_supervised(targets: &[Target], phi: f64, seed: u64) -> Result<Vec<bool>> {
    if !(0.0..=1.0).contains(&phi) {
        return Err(Error::Contract(format!("supervision fraction {phi} outside [0, 1]")));
    }
    let n = targets.len();
    let total = ((phi * n as f64) - 1e-9).ceil().max(0.0) as usize;
    let mut groups: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (i, &t) in targets.iter().enumerate() {
        groups.entry(stratum(t)).or_default().push(i);
    }
    let mut quota: Vec<(i64, usize, f64)> = groups
        .iter()
        .map(|(&k, v)| {
            let exact = total as f64 * v.len() as f64 / n.max(1) as f64;
            (k, exact.floor() as usize, exact - exact.floor())
        })
        .collect();
    let mut left = total - quota.iter().map(|q| q.1).sum::<usize>();
    let mut order: Vec<usize> = (0..quota.len()).collect();
    order.sort_by(|&a, &b| quota[b].2.total_cmp(&quota[a].2).then(a.cmp(&b)));
    for &i in order.iter().cycle().take(order.len() * 2) {
        if left == 0 {
            break;
        }
        if quota[i].1 < groups[&quota[i].0].len() {
            quota[i].1 += 1;
            left -= 1;
        }
    }
    let mut keep = vec![false; n];
    for (k, q, _) in quota {
        let mut members = groups[&k].clone();
        members.shuffle(&mut child_rng(seed, &[k as u64]));
        for &i in members.iter().take(q) {
            keep[i] = true;
        }
    }
    Ok(keep)
}
