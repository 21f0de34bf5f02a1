//! Training configuration with per-model defaults.

use crate::error::{Error, Result};
use crate::models::{AnswerFeature, Architecture, ModelConfig, Task, Vocab};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Dsmn,
    /// DSMN trained with intermediate visual supervision.
    DsmnStar,
    DmnPlus,
    Lstm1,
    Lstm2,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [ModelKind::Dsmn, ModelKind::DsmnStar, ModelKind::DmnPlus, ModelKind::Lstm1, ModelKind::Lstm2];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Dsmn => "dsmn",
            ModelKind::DsmnStar => "dsmn_star",
            ModelKind::DmnPlus => "dmnplus",
            ModelKind::Lstm1 => "lstm1",
            ModelKind::Lstm2 => "lstm2",
        }
    }

    pub fn parse(s: &str) -> Option<ModelKind> {
        ModelKind::ALL.into_iter().find(|m| m.name() == s)
    }

    pub fn architecture(self) -> Architecture {
        match self {
            ModelKind::Dsmn | ModelKind::DsmnStar => Architecture::Dsmn,
            ModelKind::DmnPlus => Architecture::DmnPlus,
            ModelKind::Lstm1 => Architecture::Lstm1,
            ModelKind::Lstm2 => Architecture::Lstm2,
        }
    }

    /// Tuned embedding size and l2 weight per dataset.
    pub fn tuned(self, task: Task) -> (usize, f64) {
        match (task, self) {
            (Task::FloorPlan, ModelKind::Lstm1) => (128, 1e-4),
            (Task::FloorPlan, ModelKind::Lstm2) => (512, 1e-5),
            (Task::FloorPlan, ModelKind::DmnPlus) => (64, 1e-3),
            (Task::FloorPlan, ModelKind::Dsmn) => (32, 1e-3),
            (Task::FloorPlan, ModelKind::DsmnStar) => (32, 1e-4),
            (Task::Shapes, ModelKind::Lstm1) => (2048, 1e-2),
            (Task::Shapes, ModelKind::Lstm2) => (512, 1e-1),
            (Task::Shapes, ModelKind::DmnPlus) => (128, 1e-1),
            (Task::Shapes, ModelKind::Dsmn) => (32, 1e-1),
            (Task::Shapes, ModelKind::DsmnStar) => (64, 1e-2),
        }
    }
}

pub fn parse_task(s: &str) -> Option<Task> {
    match s {
        "floorplan" | "floorplanqa" => Some(Task::FloorPlan),
        "shapes" | "shapeintersection" => Some(Task::Shapes),
        _ => None,
    }
}

pub fn task_name(t: Task) -> &'static str {
    match t {
        Task::FloorPlan => "floorplan",
        Task::Shapes => "shapes",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub task: Task,
    pub model: ModelKind,
    pub dim: usize,
    pub hops: usize,
    pub res: usize,
    pub dropout: f64,
    pub answer: AnswerFeature,
    /// Weight of the visual loss for supervised samples.
    pub lambda_vi: f64,
    /// Fraction of training samples that keep visual ground truth.
    pub supervision: f64,
    pub lr: f64,
    pub l2: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub runs: usize,
    pub seed: u64,
    pub batch_size: usize,
}

/// Keys accepted by [`TrainConfig::set`].
pub const CONFIG_KEYS: [&str; 16] = [
    "task", "model", "dim", "hops", "res", "dropout", "answer", "lambda_vi", "supervision", "lr", "l2", "max_epochs",
    "patience", "runs", "seed", "batch_size",
];

impl TrainConfig {
    pub fn new(task: Task, model: ModelKind) -> TrainConfig {
        let (dim, l2) = model.tuned(task);
        TrainConfig {
            task,
            model,
            dim,
            hops: 3,
            res: 32,
            dropout: 0.1,
            answer: if model.architecture() == Architecture::Dsmn { AnswerFeature::Full } else { AnswerFeature::TagQuestion },
            lambda_vi: 0.5,
            supervision: if model == ModelKind::DsmnStar { 1.0 } else { 0.0 },
            lr: 1e-3,
            l2,
            max_epochs: match task {
                Task::FloorPlan => 1600,
                Task::Shapes => 800,
            },
            patience: 80,
            runs: 10,
            seed: 0,
            batch_size: 32,
        }
    }

    pub fn model_config(&self) -> ModelConfig {
        ModelConfig {
            task: self.task,
            arch: self.model.architecture(),
            dim: self.dim,
            hops: self.hops,
            res: self.res,
            dropout: self.dropout,
            vocab: Vocab::floorplan().len(),
            answer: self.answer,
        }
    }

    /// Whether training uses visual ground truth at all.
    pub fn supervised(&self) -> bool {
        self.model == ModelKind::DsmnStar && self.supervision > 0.0 && self.lambda_vi > 0.0
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(0.0..=1.0).contains(&self.lambda_vi) {
            return bad(format!("lambda_vi {} outside [0, 1]", self.lambda_vi));
        }
        if !(0.0..=1.0).contains(&self.supervision) {
            return bad(format!("supervision {} outside [0, 1]", self.supervision));
        }
        if self.model == ModelKind::DsmnStar && self.supervision == 0.0 {
            return bad("dsmn_star needs supervision > 0".into());
        }
        if self.model != ModelKind::DsmnStar && self.supervision > 0.0 {
            return bad(format!("{} takes no visual supervision", self.model.name()));
        }
        if self.patience > self.max_epochs {
            return bad(format!("patience {} exceeds max_epochs {}", self.patience, self.max_epochs));
        }
        if self.max_epochs == 0 || self.runs == 0 || self.batch_size == 0 {
            return bad("max_epochs, runs and batch_size must be positive".into());
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) || !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return bad(format!("lr {} / l2 {} out of range", self.lr, self.l2));
        }
        self.model_config().validate()
    }

    /// Sets one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse().map_err(|_| Error::Config(format!("bad value `{v}` for {key}")))
        }
        match key {
            "task" => self.task = parse_task(value).ok_or_else(|| Error::Config(format!("unknown task `{value}`")))?,
            "model" => self.model = ModelKind::parse(value).ok_or_else(|| Error::Config(format!("unknown model `{value}`")))?,
            "dim" => self.dim = num(key, value)?,
            "hops" => self.hops = num(key, value)?,
            "res" => self.res = num(key, value)?,
            "dropout" => self.dropout = num(key, value)?,
            "answer" => {
                self.answer = match value {
                    "full" => AnswerFeature::Full,
                    "tag_question" => AnswerFeature::TagQuestion,
                    "memory_question" => AnswerFeature::MemoryQuestion,
                    _ => return Err(Error::Config(format!("unknown answer feature `{value}`"))),
                }
            }
            "lambda_vi" => self.lambda_vi = num(key, value)?,
            "supervision" => self.supervision = num(key, value)?,
            "lr" => self.lr = num(key, value)?,
            "l2" => self.l2 = num(key, value)?,
            "max_epochs" => self.max_epochs = num(key, value)?,
            "patience" => self.patience = num(key, value)?,
            "runs" => self.runs = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "batch_size" => self.batch_size = num(key, value)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`; valid keys: {}", CONFIG_KEYS.join(", ")))),
        }
        Ok(())
    }

    /// Every key with its text form, in [`CONFIG_KEYS`] order.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let answer = match self.answer {
            AnswerFeature::Full => "full",
            AnswerFeature::TagQuestion => "tag_question",
            AnswerFeature::MemoryQuestion => "memory_question",
        };
        let values = [
            task_name(self.task).to_string(),
            self.model.name().to_string(),
            self.dim.to_string(),
            self.hops.to_string(),
            self.res.to_string(),
            self.dropout.to_string(),
            answer.to_string(),
            self.lambda_vi.to_string(),
            self.supervision.to_string(),
            self.lr.to_string(),
            self.l2.to_string(),
            self.max_epochs.to_string(),
            self.patience.to_string(),
            self.runs.to_string(),
            self.seed.to_string(),
            self.batch_size.to_string(),
        ];
        CONFIG_KEYS.iter().map(|k| k.to_string()).zip(values).collect()
    }

    /// Builds a config from `key=value` pairs. `task` and `model` pick the
    /// defaults; the remaining pairs override them in order.
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<TrainConfig> {
        let pairs: Vec<_> = pairs.into_iter().collect();
        let find = |k: &str| pairs.iter().rev().find(|(key, _)| *key == k).map(|(_, v)| *v);
        let task = find("task").map_or(Ok(Task::FloorPlan), |v| parse_task(v).ok_or_else(|| Error::Config(format!("unknown task `{v}`"))))?;
        let model = find("model")
            .map_or(Ok(ModelKind::DsmnStar), |v| ModelKind::parse(v).ok_or_else(|| Error::Config(format!("unknown model `{v}`"))))?;
        let mut c = TrainConfig::new(task, model);
        for (k, v) in pairs {
            if k != "task" && k != "model" {
                c.set(k, v)?;
            }
        }
        c.validate()?;
        Ok(c)
    }
}
