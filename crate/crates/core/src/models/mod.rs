//! DSMN, its DMN+ reduction, and the LSTM baselines, all over batches of
//! [`Example`]s.

mod example;
mod lstm;
mod memory;

pub use example::{floorplan_example, shape_example, Example, Sentences, Target, Task, Vocab, SHAPE_INPUT_SCALE};
pub use lstm::{Lstm1, Lstm2};
pub use memory::MemoryNet;

use crate::autodiff::{Graph, ParamStore, Tensor, Var};
use crate::error::{Error, Result};
use crate::layers::mask_column;
use crate::seed::child_rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Architecture {
    Dsmn,
    DmnPlus,
    Lstm1,
    Lstm2,
}

impl Architecture {
    pub fn name(self) -> &'static str {
        match self {
            Architecture::Dsmn => "dsmn",
            Architecture::DmnPlus => "dmnplus",
            Architecture::Lstm1 => "lstm1",
            Architecture::Lstm2 => "lstm2",
        }
    }
}

/// Which parts of the final memory feed the answer layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerFeature {
    /// `[En_f(M_T); m_T; q]`
    Full,
    /// `[m_T; q]`
    TagQuestion,
    /// `[En_f(M_T); q]`
    MemoryQuestion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub task: Task,
    pub arch: Architecture,
    /// Embedding size `d`.
    pub dim: usize,
    pub hops: usize,
    /// Side of the square visual representations and memory.
    pub res: usize,
    pub dropout: f64,
    /// Word vocabulary size (FloorPlanQA).
    pub vocab: usize,
    pub answer: AnswerFeature,
}

impl ModelConfig {
    pub fn new(task: Task, arch: Architecture) -> ModelConfig {
        ModelConfig {
            task,
            arch,
            dim: 32,
            hops: 3,
            res: 32,
            dropout: 0.1,
            vocab: Vocab::floorplan().len(),
            answer: if arch == Architecture::Dsmn { AnswerFeature::Full } else { AnswerFeature::TagQuestion },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.hops == 0 {
            return bad("hops must be at least 1".into());
        }
        if self.res == 0 || self.res % 4 != 0 {
            return bad(format!("resolution {} is not a positive multiple of 4", self.res));
        }
        if self.dim < 8 {
            return bad(format!("embedding size {} is below 8", self.dim));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout {} outside [0, 1)", self.dropout));
        }
        if self.task == Task::FloorPlan && self.vocab == 0 {
            return bad("empty vocabulary".into());
        }
        if self.arch != Architecture::Dsmn && self.answer != AnswerFeature::TagQuestion {
            return bad(format!("{} answers from [m; q] only", self.arch.name()));
        }
        Ok(())
    }
}

/// Outputs of one forward pass over a batch.
#[derive(Debug, Clone)]
pub struct Forward {
    /// `[B, 4]` logits or `[B, 1]` regression values.
    pub output: Var,
    /// `S_1..S_N`, each `[B, R·R]` (empty without a visual module).
    pub visuals: Vec<Var>,
    /// Per hop, `[B, N]` attention gates over sentences.
    pub gates: Vec<Var>,
    /// `M_1..M_T`, each `[B, R·R]` (empty without a spatial memory).
    pub memories: Vec<Var>,
    /// Sentence count per row; `N` is the maximum.
    pub lens: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Network {
    Memory(MemoryNet),
    Lstm1(Lstm1),
    Lstm2(Lstm2),
}

/// A network description plus its parameters.
#[derive(Debug, Clone)]
pub struct Model {
    pub config: ModelConfig,
    pub net: Network,
    pub store: ParamStore,
}

impl Model {
    pub fn new(config: ModelConfig, seed: u64) -> Result<Model> {
        config.validate()?;
        let mut store = ParamStore::new();
        let mut rng = child_rng(seed, &[]);
        let net = match config.arch {
            Architecture::Dsmn | Architecture::DmnPlus => Network::Memory(MemoryNet::new(&config, &mut store, &mut rng)?),
            Architecture::Lstm1 => Network::Lstm1(Lstm1::new(&config, &mut store, &mut rng)?),
            Architecture::Lstm2 => Network::Lstm2(Lstm2::new(&config, &mut store, &mut rng)?),
        };
        Ok(Model { config, net, store })
    }

    /// Forward pass with an explicit parameter store (for probing).
    pub fn forward_with(&self, g: &mut Graph, store: &ParamStore, batch: &[&Example]) -> Result<Forward> {
        check_batch(&self.config, batch)?;
        match &self.net {
            Network::Memory(m) => m.forward(&self.config, g, store, batch),
            Network::Lstm1(m) => m.forward(&self.config, g, store, batch),
            Network::Lstm2(m) => m.forward(&self.config, g, store, batch),
        }
    }

    pub fn forward(&self, g: &mut Graph, batch: &[&Example]) -> Result<Forward> {
        self.forward_with(g, &self.store, batch)
    }

    /// Evaluation-mode outputs, one row per example.
    pub fn predict(&self, batch: &[&Example]) -> Result<Vec<Vec<f64>>> {
        let mut g = Graph::new(false, 0);
        let f = self.forward(&mut g, batch)?;
        let out = g.value(f.output);
        Ok(out.data.chunks(out.cols()).map(<[f64]>::to_vec).collect())
    }
}

fn check_batch(c: &ModelConfig, batch: &[&Example]) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::Contract("empty batch".into()));
    }
    for e in batch {
        if e.sentences.is_empty() {
            return Err(Error::Contract("description without sentences".into()));
        }
        match (&e.sentences, c.task) {
            (Sentences::Words(_), Task::FloorPlan) => {
                if e.question.is_empty() {
                    return Err(Error::Contract("empty question".into()));
                }
            }
            (Sentences::Vectors(_), Task::Shapes) => {}
            _ => return Err(Error::Contract(format!("example does not match task {:?}", c.task))),
        }
    }
    Ok(())
}

/// Sentence counts, their maximum and the per-step masks.
pub(crate) fn sentence_masks(g: &mut Graph, batch: &[&Example]) -> (Vec<usize>, Vec<Option<Var>>) {
    let lens: Vec<usize> = batch.iter().map(|e| e.sentences.len()).collect();
    let masks = step_masks(g, &lens);
    (lens, masks)
}

/// `[B, 5]` rows of sentence `t` (zeros past the end).
pub(crate) fn vectors_at(g: &mut Graph, batch: &[&Example], t: usize) -> Var {
    let mut data = Vec::with_capacity(batch.len() * 5);
    for e in batch {
        match &e.sentences {
            Sentences::Vectors(v) => data.extend_from_slice(v.get(t).unwrap_or(&[0.0; 5])),
            Sentences::Words(_) => data.extend_from_slice(&[0.0; 5]),
        }
    }
    g.constant(Tensor { shape: vec![batch.len(), 5], data })
}

/// Token lists of sentence `t` per row (empty past the end).
pub(crate) fn words_at(batch: &[&Example], t: usize) -> Vec<Vec<usize>> {
    batch
        .iter()
        .map(|e| match &e.sentences {
            Sentences::Words(w) => w.get(t).cloned().unwrap_or_default(),
            Sentences::Vectors(_) => Vec::new(),
        })
        .collect()
}

/// Per-step `[B, 1]` masks for sequences of the given lengths.
pub(crate) fn step_masks(g: &mut Graph, lens: &[usize]) -> Vec<Option<Var>> {
    let n = lens.iter().copied().max().unwrap_or(0);
    (0..n).map(|t| mask_column(g, &lens.iter().map(|&l| t < l).collect::<Vec<_>>())).collect()
}
