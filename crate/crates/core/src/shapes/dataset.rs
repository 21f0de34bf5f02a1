//! Answer-balanced ShapeIntersection datasets.
//!
//! Raw scenes have intersection counts that grow with the number of shapes,
//! so the count would be predictable from the composition alone. Generation
//! is therefore stratified: a calibration pass finds the compositions that
//! can reach every count in `0..=K`, and each of those strata receives the
//! same quota for every count. Every stratum then has the same conditional
//! answer distribution as the whole dataset.

use super::scene::{sample_scene_with, Composition};
use crate::error::{Error, Result};
use crate::geometry::{count_intersections, rasterize, Canvas, Scene};
use crate::seed::{child_rng, derive};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

pub const QUESTION: &str = "How many points of intersection are there among these shapes?";

pub const GENERATOR_VERSION: u32 = 1;

/// Seed of the shared calibration pass, so every split sees the same support.
pub const CALIBRATION_SEED: u64 = 0x5eed_ca11;
pub const CALIBRATION_PROPOSALS: usize = 400;
/// A count is reachable for a stratum once it has been seen this often.
pub const MIN_HITS: usize = 2;
/// Eligible strata must cover at least this share of the composition prior.
pub const MIN_STRATUM_MASS: f64 = 0.25;

/// Proposals allowed per accepted sample in a stratum before giving up.
const PROPOSALS_PER_SAMPLE: usize = 2000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeSample {
    pub scene: Scene,
    pub answer: usize,
}

impl ShapeSample {
    /// One 5-vector per shape, in scene order.
    pub fn vectors(&self) -> Vec<[f64; 5]> {
        describe_scene(&self.scene)
    }

    /// One boundary channel per shape, in scene order.
    pub fn visual(&self, res: usize) -> Vec<Canvas> {
        self.scene.shapes.iter().map(|s| rasterize(s, res)).collect()
    }
}

pub fn describe_scene(sc: &Scene) -> Vec<[f64; 5]> {
    sc.shapes.iter().map(|s| s.encode()).collect()
}

/// Outcome of the calibration pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub seed: u64,
    pub proposals: usize,
    pub min_hits: usize,
    pub min_mass: f64,
    /// Largest supported answer.
    pub k: usize,
    /// Compositions that reach every count in `0..=k`.
    pub strata: Vec<Composition>,
}

impl Calibration {
    pub fn run(seed: u64, proposals: usize, min_hits: usize, min_mass: f64) -> Result<Calibration> {
        let comps = Composition::all();
        // reach[s] = largest r such that every count 0..=r was seen min_hits times.
        let reach: Vec<Option<usize>> = comps
            .par_iter()
            .enumerate()
            .map(|(i, &c)| -> Result<Option<usize>> {
                let mut rng = child_rng(seed, &[i as u64]);
                let mut hist = Vec::<usize>::new();
                for _ in 0..proposals {
                    let k = count_intersections(&sample_scene_with(&mut rng, c)?)?;
                    if hist.len() <= k {
                        hist.resize(k + 1, 0);
                    }
                    hist[k] += 1;
                }
                let first_gap = hist.iter().position(|&h| h < min_hits).unwrap_or(hist.len());
                Ok(first_gap.checked_sub(1))
            })
            .collect::<Result<_>>()?;
        let need = (min_mass * comps.len() as f64).ceil() as usize;
        let k = (0..)
            .take_while(|&k| reach.iter().filter(|r| r.is_some_and(|r| r >= k)).count() >= need)
            .last()
            .ok_or_else(|| Error::Generation("no composition reaches 0 intersections".into()))?;
        let strata = comps
            .iter()
            .zip(&reach)
            .filter(|(_, r)| r.is_some_and(|r| r >= k))
            .map(|(c, _)| *c)
            .collect();
        Ok(Calibration {
            seed,
            proposals,
            min_hits,
            min_mass,
            k,
            strata,
        })
    }

    /// The calibration shared by all generated datasets (computed once).
    pub fn standard() -> Result<&'static Calibration> {
        static CAL: OnceLock<Calibration> = OnceLock::new();
        if let Some(c) = CAL.get() {
            return Ok(c);
        }
        let c = Calibration::run(
            CALIBRATION_SEED,
            CALIBRATION_PROPOSALS,
            MIN_HITS,
            MIN_STRATUM_MASS,
        )?;
        Ok(CAL.get_or_init(|| c))
    }

    /// Samples per (stratum, answer) cell for a dataset of `n`. The remainder
    /// goes one sample per cell, rotating through strata so answer totals
    /// differ by at most one.
    pub fn quotas(&self, n: usize) -> Vec<Vec<usize>> {
        let (s, a) = (self.strata.len(), self.k + 1);
        let cells = s * a;
        let mut q = vec![vec![n / cells; a]; s];
        for j in 0..n % cells {
            let ans = j % a;
            q[(j / a + ans) % s][ans] += 1;
        }
        q
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeHeader {
    pub seed: u64,
    pub n: usize,
    pub version: u32,
    pub calibration: Calibration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeDataset {
    pub header: ShapeHeader,
    pub samples: Vec<ShapeSample>,
}

impl ShapeDataset {
    pub fn k(&self) -> usize {
        self.header.calibration.k
    }
}

/// Generates `n` samples with the standard calibration.
pub fn generate_dataset(n: usize, seed: u64) -> Result<ShapeDataset> {
    generate_with(n, seed, Calibration::standard()?)
}

pub fn generate_with(n: usize, seed: u64, cal: &Calibration) -> Result<ShapeDataset> {
    if n == 0 {
        return Err(Error::Contract("dataset must have at least one sample".into()));
    }
    let quotas = cal.quotas(n);
    let per_stratum: Vec<Vec<ShapeSample>> = cal
        .strata
        .par_iter()
        .zip(quotas.par_iter())
        .enumerate()
        .map(|(i, (&comp, quota))| fill_stratum(seed, i, comp, quota))
        .collect::<Result<_>>()?;
    let mut samples: Vec<ShapeSample> = per_stratum.into_iter().flatten().collect();
    samples.shuffle(&mut child_rng(seed, &[u64::MAX]));
    Ok(ShapeDataset {
        header: ShapeHeader {
            seed,
            n,
            version: GENERATOR_VERSION,
            calibration: cal.clone(),
        },
        samples,
    })
}

fn fill_stratum(seed: u64, i: usize, comp: Composition, quota: &[usize]) -> Result<Vec<ShapeSample>> {
    let mut rng = child_rng(seed, &[i as u64]);
    let mut left = quota.to_vec();
    let total: usize = quota.iter().sum();
    let mut out = Vec::with_capacity(total);
    let budget = PROPOSALS_PER_SAMPLE * total.max(1) + 10_000;
    for _ in 0..budget {
        if out.len() == total {
            return Ok(out);
        }
        let scene = sample_scene_with(&mut rng, comp)?;
        let answer = count_intersections(&scene)?;
        if let Some(l) = left.get_mut(answer).filter(|l| **l > 0) {
            *l -= 1;
            out.push(ShapeSample { scene, answer });
        }
    }
    if out.len() == total {
        return Ok(out);
    }
    Err(Error::Generation(format!(
        "stratum {comp:?} left quotas {left:?} after {budget} proposals"
    )))
}

/// Train, validation and test splits of `n` samples each.
pub fn generate_splits(n: usize, seed: u64) -> Result<[ShapeDataset; 3]> {
    Ok([
        generate_dataset(n, derive(seed, &[0]))?,
        generate_dataset(n, derive(seed, &[1]))?,
        generate_dataset(n, derive(seed, &[2]))?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{oracle::brute_force_count, Shape};
    use crate::shapes::sample_scene;
    use std::collections::HashMap;

    #[test]
    fn single_rectangle_vector() {
        let sc = Scene::new(vec![Shape::rect(2.0, 3.0, 1.0, 1.0).unwrap()]).unwrap();
        assert_eq!(describe_scene(&sc), vec![[3.0, 2.0, 3.0, 1.0, 1.0]]);
    }

    #[test]
    fn describe_preserves_order_and_round_trips() {
        let mut rng = child_rng(4, &[]);
        let sc = sample_scene(&mut rng).unwrap();
        let mut rev = sc.shapes.clone();
        rev.reverse();
        let mut v = describe_scene(&Scene::new(rev).unwrap());
        v.reverse();
        assert_eq!(v, describe_scene(&sc));
        let back: Vec<Shape> = v.iter().map(|x| Shape::decode(x).unwrap()).collect();
        assert_eq!(Scene::new(back).unwrap(), sc);
    }

    #[test]
    fn quotas_are_balanced() {
        let cal = Calibration {
            seed: 0,
            proposals: 0,
            min_hits: 0,
            min_mass: 0.0,
            k: 3,
            strata: Composition::all()[..5].to_vec(),
        };
        for n in [1, 7, 20, 23, 1001] {
            let q = cal.quotas(n);
            let total: usize = q.iter().flatten().sum();
            assert_eq!(total, n);
            let per_answer: Vec<usize> = (0..4).map(|a| q.iter().map(|r| r[a]).sum()).collect();
            let (lo, hi) = (per_answer.iter().min().unwrap(), per_answer.iter().max().unwrap());
            assert!(hi - lo <= 1, "{n}: {per_answer:?}");
        }
    }

    #[test]
    fn small_dataset_is_uniform_and_correct() {
        let d = generate_dataset(600, 3).unwrap();
        let k = d.k();
        assert!(k >= 4, "calibrated support too small: {k}");
        let mut hist = vec![0usize; k + 1];
        for s in &d.samples {
            hist[s.answer] += 1;
            assert_eq!(count_intersections(&s.scene).unwrap(), s.answer);
            let (a, b, c) = s.scene.composition();
            assert!(a <= 6 && b <= 3 && c <= 3);
            assert_eq!(s.visual(16).len(), s.scene.len());
        }
        let (lo, hi) = (*hist.iter().min().unwrap(), *hist.iter().max().unwrap());
        assert!(hi - lo <= 1, "{hist:?}");
        assert_eq!(generate_dataset(600, 3).unwrap(), d);
    }

    #[test]
    fn stored_answers_match_sampling_oracle() {
        let d = generate_dataset(200, 5).unwrap();
        for s in d.samples.iter().take(40) {
            assert_eq!(brute_force_count(&s.scene, 1e-3), s.answer);
        }
    }

    #[test]
    fn strata_share_the_answer_mean() {
        let d = generate_dataset(4000, 6).unwrap();
        let n = d.samples.len() as f64;
        let mean = d.samples.iter().map(|s| s.answer as f64).sum::<f64>() / n;
        let var = d
            .samples
            .iter()
            .map(|s| (s.answer as f64 - mean).powi(2))
            .sum::<f64>()
            / n;
        let mut by: HashMap<(usize, usize, usize), Vec<f64>> = HashMap::new();
        for s in &d.samples {
            by.entry(s.scene.composition()).or_default().push(s.answer as f64);
        }
        for (c, v) in by {
            if v.len() >= 100 {
                let m = v.iter().sum::<f64>() / v.len() as f64;
                assert!((m - mean).abs() <= 0.1 * var.sqrt(), "{c:?}: {m} vs {mean}");
            }
        }
    }
}
