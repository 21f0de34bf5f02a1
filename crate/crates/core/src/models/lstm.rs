//! LSTM baselines: a flat sequence model and a two-level hierarchy.

use super::{sentence_masks, step_masks, vectors_at, Example, Forward, ModelConfig, Sentences, Task};
use crate::autodiff::{Graph, ParamStore, Tensor, Var};
use crate::error::Result;
use crate::layers::{Embedding, FcStack, Linear, LstmCell};
use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub enum TokenInput {
    /// Word embedding look-up.
    Words(Embedding),
    /// Each real number projected by FC layers.
    Numbers(FcStack),
}

/// Description and question flattened into one sequence, read by an LSTM.
#[derive(Debug, Clone, PartialEq)]
pub struct Lstm1 {
    pub input: TokenInput,
    pub lstm: LstmCell,
    pub out: Linear,
}

impl Lstm1 {
    pub fn new<R: Rng + ?Sized>(c: &ModelConfig, s: &mut ParamStore, rng: &mut R) -> Result<Lstm1> {
        let d = c.dim;
        let input = match c.task {
            Task::FloorPlan => TokenInput::Words(Embedding::new(s, "embed", c.vocab, d, rng)?),
            Task::Shapes => TokenInput::Numbers(FcStack::new(s, "input.fc", &[1, d, d], rng)?),
        };
        Ok(Lstm1 {
            input,
            lstm: LstmCell::new(s, "lstm", d, d, rng)?,
            out: Linear::new(s, "answer.fc", d, c.task.outputs(), rng)?,
        })
    }

    pub fn forward(&self, c: &ModelConfig, g: &mut Graph, s: &ParamStore, batch: &[&Example]) -> Result<Forward> {
        let lens = batch.iter().map(|e| e.sentences.len()).collect();
        let xs: Vec<Var>;
        let seq_lens: Vec<usize>;
        match &self.input {
            TokenInput::Words(embed) => {
                let seqs: Vec<Vec<usize>> = batch
                    .iter()
                    .map(|e| match &e.sentences {
                        Sentences::Words(w) => w.iter().flatten().chain(&e.question).copied().collect(),
                        Sentences::Vectors(_) => e.question.clone(),
                    })
                    .collect();
                seq_lens = seqs.iter().map(Vec::len).collect();
                let n = seq_lens.iter().copied().max().unwrap_or(0);
                xs = (0..n)
                    .map(|t| {
                        let ids: Vec<Option<usize>> = seqs.iter().map(|q| q.get(t).copied()).collect();
                        embed.lookup(g, s, &ids)
                    })
                    .collect::<Result<_>>()?;
            }
            TokenInput::Numbers(fc) => {
                let seqs: Vec<Vec<f64>> = batch
                    .iter()
                    .map(|e| match &e.sentences {
                        Sentences::Vectors(v) => v.iter().flatten().copied().collect(),
                        Sentences::Words(_) => Vec::new(),
                    })
                    .collect();
                seq_lens = seqs.iter().map(Vec::len).collect();
                let n = seq_lens.iter().copied().max().unwrap_or(0);
                xs = (0..n)
                    .map(|t| {
                        let data = seqs.iter().map(|q| q.get(t).copied().unwrap_or(0.0)).collect();
                        let x = g.constant(Tensor { shape: vec![batch.len(), 1], data });
                        fc.forward(g, s, x)
                    })
                    .collect::<Result<_>>()?;
            }
        }
        let masks = step_masks(g, &seq_lens);
        let h = self.lstm.run(g, s, &xs, &masks)?;
        let h = g.dropout(h, c.dropout)?;
        let output = self.out.forward(g, s, h)?;
        Ok(Forward { output, visuals: Vec::new(), gates: Vec::new(), memories: Vec::new(), lens })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SentenceInput {
    /// Word embeddings read by a sentence-level LSTM.
    Words(Embedding, LstmCell),
    /// Shape vectors through FC layers.
    Vectors(FcStack),
}

/// Sentence embeddings (question appended as a final sentence) read by a
/// second LSTM.
#[derive(Debug, Clone, PartialEq)]
pub struct Lstm2 {
    pub input: SentenceInput,
    pub lstm: LstmCell,
    pub out: Linear,
}

impl Lstm2 {
    pub fn new<R: Rng + ?Sized>(c: &ModelConfig, s: &mut ParamStore, rng: &mut R) -> Result<Lstm2> {
        let d = c.dim;
        let input = match c.task {
            Task::FloorPlan => SentenceInput::Words(
                Embedding::new(s, "embed", c.vocab, d, rng)?,
                LstmCell::new(s, "sentence.lstm", d, d, rng)?,
            ),
            Task::Shapes => SentenceInput::Vectors(FcStack::new(s, "input.fc", &[5, d, d], rng)?),
        };
        Ok(Lstm2 {
            input,
            lstm: LstmCell::new(s, "lstm", d, d, rng)?,
            out: Linear::new(s, "answer.fc", d, c.task.outputs(), rng)?,
        })
    }

    fn embed_words(embed: &Embedding, cell: &LstmCell, g: &mut Graph, s: &ParamStore, rows: &[Vec<usize>]) -> Result<Var> {
        let lens: Vec<usize> = rows.iter().map(Vec::len).collect();
        let masks = step_masks(g, &lens);
        let xs = (0..masks.len())
            .map(|t| {
                let ids: Vec<Option<usize>> = rows.iter().map(|r| r.get(t).copied()).collect();
                embed.lookup(g, s, &ids)
            })
            .collect::<Result<Vec<_>>>()?;
        if xs.is_empty() {
            return Ok(g.constant(Tensor::zeros(&[rows.len(), cell.hidden])));
        }
        cell.run(g, s, &xs, &masks)
    }

    pub fn forward(&self, c: &ModelConfig, g: &mut Graph, s: &ParamStore, batch: &[&Example]) -> Result<Forward> {
        let (lens, _) = sentence_masks(g, batch);
        let n = lens.iter().copied().max().unwrap_or(0);
        let mut xs = Vec::with_capacity(n + 1);
        let seq_lens: Vec<usize>;
        match &self.input {
            SentenceInput::Words(embed, cell) => {
                // Each row's question goes right after its last sentence.
                for t in 0..=n {
                    let rows: Vec<Vec<usize>> = batch
                        .iter()
                        .zip(&lens)
                        .map(|(e, &l)| match (&e.sentences, t.cmp(&l)) {
                            (Sentences::Words(w), std::cmp::Ordering::Less) => w[t].clone(),
                            (_, std::cmp::Ordering::Equal) => e.question.clone(),
                            _ => Vec::new(),
                        })
                        .collect();
                    xs.push(Self::embed_words(embed, cell, g, s, &rows)?);
                }
                seq_lens = lens.iter().map(|l| l + 1).collect();
            }
            SentenceInput::Vectors(fc) => {
                for t in 0..n {
                    let v = vectors_at(g, batch, t);
                    xs.push(fc.forward(g, s, v)?);
                }
                seq_lens = lens.clone();
            }
        }
        let masks = step_masks(g, &seq_lens);
        let h = self.lstm.run(g, s, &xs, &masks)?;
        let h = g.dropout(h, c.dropout)?;
        let output = self.out.forward(g, s, h)?;
        Ok(Forward { output, visuals: Vec::new(), gates: Vec::new(), memories: Vec::new(), lens })
    }
}
