//! FloorPlanQA: house layouts described in templated English, with
//! relative-direction questions.

pub mod answer;
pub mod layout;
pub mod text;
pub mod visual;

pub use answer::{compute_answer, Answer};
pub use layout::{realize_geometry, sample_layout, GeometricLayout, LayoutTree};
pub use text::{generate_description, generate_question, Described, Frame, Question, Subject, Target};

use crate::error::{Error, Result};
use crate::geometry::Canvas;
use crate::seed::{child_rng, derive};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

/// Bumped whenever generation changes for a fixed seed.
pub const GENERATOR_VERSION: u32 = 1;

/// Samples per split in the full benchmark.
pub const SPLIT_SIZE: usize = 12_800;

const CHUNK: usize = 1024;
const CANDIDATE_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloorPlanSample {
    pub layout: LayoutTree,
    pub description: Vec<Described>,
    pub question: Question,
    pub answer: Answer,
}

impl FloorPlanSample {
    pub fn sentences(&self) -> Vec<String> {
        self.description.iter().map(|d| d.sentence.render()).collect()
    }

    pub fn question_text(&self) -> String {
        self.question.render()
    }

    /// One channel per sentence, rendered from the stored layout.
    pub fn visual(&self, res: usize) -> Result<Vec<Canvas>> {
        let g = realize_geometry(&self.layout)?;
        let subjects: Vec<Subject> = self.description.iter().map(|d| d.subject).collect();
        visual::render_visual(&g, &subjects, res)
    }
}

/// One unbalanced sample. Layouts whose question lands on a 45° tie are
/// redrawn.
pub fn generate_sample<R: Rng + ?Sized>(rng: &mut R) -> Result<FloorPlanSample> {
    for _ in 0..CANDIDATE_ATTEMPTS {
        let layout = sample_layout(rng)?;
        let g = realize_geometry(&layout)?;
        let description = generate_description(&layout, rng);
        let question = generate_question(&layout, rng);
        match compute_answer(&g, question.frame, question.target) {
            Ok(answer) => {
                return Ok(FloorPlanSample {
                    layout,
                    description,
                    question,
                    answer,
                })
            }
            Err(Error::Ambiguous(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::Generation("every candidate was ambiguous".into()))
}

/// Exactly `n / 4` samples per answer. Candidate `i` is drawn from its own
/// child stream of `seed` and accepted in index order while its class quota
/// is open, so the result does not depend on thread count.
pub fn generate_dataset(n: usize, seed: u64) -> Result<Vec<FloorPlanSample>> {
    if n % 4 != 0 {
        return Err(Error::Contract(format!("{n} samples cannot split into 4 equal classes")));
    }
    let quota = n / 4;
    let budget = 64 * n + 4096;
    let mut counts = [0usize; 4];
    let mut out = Vec::with_capacity(n);
    let mut next = 0;
    while out.len() < n {
        if next >= budget {
            return Err(Error::Generation(format!(
                "answer quotas unfilled after {budget} candidates: {counts:?}"
            )));
        }
        let hi = (next + CHUNK).min(budget);
        let batch: Vec<Result<FloorPlanSample>> = (next..hi)
            .into_par_iter()
            .map(|i| generate_sample(&mut child_rng(seed, &[i as u64])))
            .collect();
        for c in batch {
            let c = c?;
            let k = c.answer.index();
            if counts[k] < quota {
                counts[k] += 1;
                out.push(c);
                if out.len() == n {
                    break;
                }
            }
        }
        next = hi;
    }
    Ok(out)
}

/// Train, validation and test splits of `n` samples each, drawn from
/// independent child seeds.
pub fn generate_splits(n: usize, seed: u64) -> Result<[Vec<FloorPlanSample>; 3]> {
    Ok([
        generate_dataset(n, derive(seed, &[0]))?,
        generate_dataset(n, derive(seed, &[1]))?,
        generate_dataset(n, derive(seed, &[2]))?,
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub samples: usize,
    pub vocabulary: usize,
    pub unique_sentences: usize,
    pub unique_descriptions: usize,
    pub unique_questions: usize,
    pub unique_pairs: usize,
    pub avg_words_per_sentence: f64,
    pub avg_sentences_per_description: f64,
    pub answer_counts: [usize; 4],
}

pub fn dataset_stats(samples: &[FloorPlanSample]) -> DatasetStats {
    let mut vocab = HashSet::new();
    let mut sentences = HashSet::new();
    let mut descriptions = HashSet::new();
    let mut questions = HashSet::new();
    let mut pairs = HashSet::new();
    let (mut n_sent, mut n_words) = (0usize, 0usize);
    let mut answer_counts = [0; 4];
    for s in samples {
        let text = s.sentences();
        let q = s.question_text();
        for t in text.iter().chain(std::iter::once(&q)) {
            vocab.extend(text::words(t));
        }
        for t in &text {
            n_words += text::word_count(t);
            sentences.insert(t.clone());
        }
        n_sent += text.len();
        let joined = text.join(" ");
        pairs.insert((joined.clone(), q.clone()));
        descriptions.insert(joined);
        questions.insert(q);
        answer_counts[s.answer.index()] += 1;
    }
    DatasetStats {
        samples: samples.len(),
        vocabulary: vocab.len(),
        unique_sentences: sentences.len(),
        unique_descriptions: descriptions.len(),
        unique_questions: questions.len(),
        unique_pairs: pairs.len(),
        avg_words_per_sentence: n_words as f64 / n_sent.max(1) as f64,
        avg_sentences_per_description: n_sent as f64 / samples.len().max(1) as f64,
        answer_counts,
    }
}
