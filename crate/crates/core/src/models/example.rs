//! Model-ready samples: token ids or shape vectors, targets and optional
//! ground-truth visual channels.

use crate::error::{Error, Result};
use crate::floorplan::text::{word_vocabulary, words};
use crate::floorplan::FloorPlanSample;
use crate::shapes::ShapeSample;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Shape vectors live on a 0..10 grid; inputs are scaled to roughly unit range.
pub const SHAPE_INPUT_SCALE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    FloorPlan,
    Shapes,
}

impl Task {
    /// Width of the model output: class logits or one regression value.
    pub fn outputs(self) -> usize {
        match self {
            Task::FloorPlan => 4,
            Task::Shapes => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Sentences {
    Words(Vec<Vec<usize>>),
    Vectors(Vec<[f64; 5]>),
}

impl Sentences {
    pub fn len(&self) -> usize {
        match self {
            Sentences::Words(w) => w.len(),
            Sentences::Vectors(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Target {
    Class(usize),
    Value(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub sentences: Sentences,
    /// Question word ids; empty for ShapeIntersection.
    pub question: Vec<usize>,
    pub target: Target,
    /// One `R·R` channel per sentence when visual supervision is available.
    pub visual: Option<Vec<Vec<f64>>>,
}

/// Word ↔ id table over the FloorPlanQA word vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocab {
    pub words: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocab {
    pub fn new(words: Vec<String>) -> Vocab {
        let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        Vocab { words, index }
    }

    pub fn floorplan() -> Vocab {
        Vocab::new(word_vocabulary())
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn encode(&self, text: &str) -> Result<Vec<usize>> {
        words(text)
            .into_iter()
            .map(|w| self.index.get(&w).copied().ok_or(Error::UnknownToken(w)))
            .collect()
    }
}

fn channels(c: Vec<crate::geometry::Canvas>) -> Vec<Vec<f64>> {
    c.into_iter().map(|c| c.data.into_iter().map(f64::from).collect()).collect()
}

/// `visual_res` attaches ground-truth channels at that resolution.
pub fn floorplan_example(s: &FloorPlanSample, vocab: &Vocab, visual_res: Option<usize>) -> Result<Example> {
    let sentences = s.sentences().iter().map(|t| vocab.encode(t)).collect::<Result<_>>()?;
    Ok(Example {
        sentences: Sentences::Words(sentences),
        question: vocab.encode(&s.question_text())?,
        target: Target::Class(s.answer.index()),
        visual: visual_res.map(|r| s.visual(r).map(channels)).transpose()?,
    })
}

pub fn shape_example(s: &ShapeSample, visual_res: Option<usize>) -> Example {
    let vectors = s.vectors().into_iter().map(|v| v.map(|x| x * SHAPE_INPUT_SCALE)).collect();
    Example {
        sentences: Sentences::Vectors(vectors),
        question: Vec::new(),
        target: Target::Value(s.answer as f64),
        visual: visual_res.map(|r| channels(s.visual(r))),
    }
}
