//! Dataset directories.
//!
//! A directory holds `header.json` plus, per split, `{split}.jsonl` (one
//! JSON record per line) and `{split}.visual.bin`, a tensor container with
//! one f32 entry of shape `[channels, R, R]` per record, named by the
//! record's `visual_ref`.

use super::container::{decode, ContainerWriter, DType, Entry};
use super::{sha256_hex, write_atomic};
use crate::error::{Error, Result};
use crate::floorplan::{self, Answer, FloorPlanSample};
use crate::geometry::Canvas;
use crate::models::{Example, Sentences, Target, Task, Vocab, SHAPE_INPUT_SCALE};
use crate::seed::derive;
use crate::shapes::{self, Calibration, ShapeSample};
use crate::training::{parse_task, task_name};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

pub const HEADER_FILE: &str = "header.json";
pub const SPLITS: [&str; 3] = ["train", "val", "test"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    /// `floorplan` or `shapes`.
    pub kind: String,
    pub generator_version: u32,
    pub seed: u64,
    /// Side of the visual channels.
    pub res: usize,
    pub splits: BTreeMap<String, usize>,
    /// Largest answer (shapes only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<Calibration>,
    /// SHA-256 of every data file, by file name.
    pub files: BTreeMap<String, String>,
}

impl DatasetHeader {
    pub fn task(&self) -> Result<Task> {
        parse_task(&self.kind).ok_or_else(|| Error::Config(format!("unknown dataset kind `{}`", self.kind)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloorPlanRecord {
    pub id: String,
    pub sentences: Vec<String>,
    pub question: String,
    pub answer: String,
    pub visual_ref: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeRecord {
    pub id: String,
    pub vectors: Vec<[f64; 5]>,
    pub answer: usize,
    pub visual_ref: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Record {
    FloorPlan(FloorPlanRecord),
    Shapes(ShapeRecord),
}

impl Record {
    pub fn id(&self) -> &str {
        match self {
            Record::FloorPlan(r) => &r.id,
            Record::Shapes(r) => &r.id,
        }
    }

    pub fn visual_ref(&self) -> &str {
        match self {
            Record::FloorPlan(r) => &r.visual_ref,
            Record::Shapes(r) => &r.visual_ref,
        }
    }

    /// Sentence texts; shapes render their 5-vectors.
    pub fn sentence_texts(&self) -> Vec<String> {
        match self {
            Record::FloorPlan(r) => r.sentences.clone(),
            Record::Shapes(r) => r.vectors.iter().map(|v| format!("{v:?}")).collect(),
        }
    }

    pub fn to_example(&self, vocab: &Vocab, visual: Option<Vec<Vec<f64>>>) -> Result<Example> {
        Ok(match self {
            Record::FloorPlan(r) => Example {
                sentences: Sentences::Words(r.sentences.iter().map(|s| vocab.encode(s)).collect::<Result<_>>()?),
                question: vocab.encode(&r.question)?,
                target: Target::Class(
                    Answer::parse(&r.answer).ok_or_else(|| Error::Config(format!("{}: unknown answer `{}`", r.id, r.answer)))?.index(),
                ),
                visual,
            },
            Record::Shapes(r) => Example {
                sentences: Sentences::Vectors(r.vectors.iter().map(|v| v.map(|x| x * SHAPE_INPUT_SCALE)).collect()),
                question: Vec::new(),
                target: Target::Value(r.answer as f64),
                visual,
            },
        })
    }
}

fn floorplan_record(id: String, s: &FloorPlanSample) -> Record {
    Record::FloorPlan(FloorPlanRecord {
        visual_ref: id.clone(),
        id,
        sentences: s.sentences(),
        question: s.question_text(),
        answer: s.answer.name().to_string(),
    })
}

fn shape_record(id: String, s: &ShapeSample) -> Record {
    Record::Shapes(ShapeRecord { visual_ref: id.clone(), id, vectors: s.vectors(), answer: s.answer })
}

fn visual_entry(name: &str, channels: Vec<Canvas>, res: usize) -> Result<Entry> {
    let n = channels.len();
    let data = channels.into_iter().flat_map(|c| c.data).map(f64::from).collect();
    Entry::new(name, DType::F32, vec![n, res, res], data)
}

/// Generates `n` samples split evenly into train/val/test under `dir`.
/// Refuses to touch a directory that already holds a dataset.
pub fn generate_dataset_dir(dir: &Path, task: Task, n: usize, seed: u64, res: usize) -> Result<DatasetHeader> {
    if n == 0 || n % 3 != 0 {
        return Err(Error::Config(format!("n = {n} does not split into three equal non-empty splits")));
    }
    let per = n / 3;
    if task == Task::FloorPlan && per % 4 != 0 {
        return Err(Error::Config(format!("{per} samples per split do not divide into 4 equal answer classes")));
    }
    if res < 4 || res % 4 != 0 {
        return Err(Error::Config(format!("visual resolution {res} is not a positive multiple of 4")));
    }
    if dir.join(HEADER_FILE).exists() {
        return Err(Error::Config(format!("{} already holds a dataset", dir.display())));
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut header = DatasetHeader {
        kind: task_name(task).to_string(),
        generator_version: match task {
            Task::FloorPlan => floorplan::GENERATOR_VERSION,
            Task::Shapes => shapes::GENERATOR_VERSION,
        },
        seed,
        res,
        splits: BTreeMap::new(),
        k: None,
        calibration: None,
        files: BTreeMap::new(),
    };
    for (i, split) in SPLITS.iter().enumerate() {
        let split_seed = derive(seed, &[i as u64]);
        let id = |j: usize| format!("{split}-{j:06}");
        let (records, entries): (Vec<Record>, Vec<Entry>) = match task {
            Task::FloorPlan => {
                let samples = floorplan::generate_dataset(per, split_seed)?;
                samples
                    .par_iter()
                    .enumerate()
                    .map(|(j, s)| Ok((floorplan_record(id(j), s), visual_entry(&id(j), s.visual(res)?, res)?)))
                    .collect::<Result<Vec<_>>>()?
                    .into_iter()
                    .unzip()
            }
            Task::Shapes => {
                let data = shapes::generate_dataset(per, split_seed)?;
                header.k = Some(data.k());
                header.calibration = Some(data.header.calibration.clone());
                data.samples
                    .par_iter()
                    .enumerate()
                    .map(|(j, s)| Ok((shape_record(id(j), s), visual_entry(&id(j), s.visual(res), res)?)))
                    .collect::<Result<Vec<_>>>()?
                    .into_iter()
                    .unzip()
            }
        };
        let mut jsonl = String::new();
        for r in &records {
            let line = match r {
                Record::FloorPlan(r) => serde_json::to_string(r)?,
                Record::Shapes(r) => serde_json::to_string(r)?,
            };
            jsonl.push_str(&line);
            jsonl.push('\n');
        }
        let mut w = ContainerWriter::new();
        entries.iter().for_each(|e| w.push(e));
        let bin = w.finish();
        for (name, bytes) in [(format!("{split}.jsonl"), jsonl.as_bytes()), (format!("{split}.visual.bin"), bin.as_slice())] {
            write_atomic(&dir.join(&name), bytes)?;
            header.files.insert(name, sha256_hex(bytes));
        }
        header.splits.insert(split.to_string(), per);
    }
    write_atomic(&dir.join(HEADER_FILE), serde_json::to_string_pretty(&header)?.as_bytes())?;
    Ok(header)
}

/// One loaded split.
#[derive(Debug, Clone)]
pub struct Split {
    pub header: DatasetHeader,
    pub task: Task,
    pub records: Vec<Record>,
    pub examples: Vec<Example>,
}

fn read_checked(dir: &Path, header: &DatasetHeader, name: &str) -> Result<Vec<u8>> {
    let path = dir.join(name);
    let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
    let want = header.files.get(name).ok_or_else(|| Error::format(dir.join(HEADER_FILE), format!("no hash for {name}")))?;
    if sha256_hex(&bytes) != *want {
        return Err(Error::Integrity(format!("{} does not match the hash in its header", path.display())));
    }
    Ok(bytes)
}

pub fn read_header(dir: &Path) -> Result<DatasetHeader> {
    let path = dir.join(HEADER_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::format(&path, e.to_string()))
}

/// Loads `split` from `dir`, verifying file hashes. With `with_visuals`
/// every example carries its ground-truth channels.
pub fn load_split(dir: &Path, split: &str, with_visuals: bool) -> Result<Split> {
    if !SPLITS.contains(&split) {
        return Err(Error::Config(format!("unknown split `{split}`; expected one of {}", SPLITS.join(", "))));
    }
    let header = read_header(dir)?;
    let task = header.task()?;
    let name = format!("{split}.jsonl");
    let text = read_checked(dir, &header, &name)?;
    let text = std::str::from_utf8(&text).map_err(|_| Error::format(dir.join(&name), "not UTF-8"))?;
    let records = text
        .lines()
        .enumerate()
        .map(|(i, line)| {
            let bad = |e: serde_json::Error| Error::format(dir.join(&name), format!("line {}: {e}", i + 1));
            Ok(match task {
                Task::FloorPlan => Record::FloorPlan(serde_json::from_str(line).map_err(bad)?),
                Task::Shapes => Record::Shapes(serde_json::from_str(line).map_err(bad)?),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut visuals: BTreeMap<String, Vec<Vec<f64>>> = BTreeMap::new();
    if with_visuals {
        let name = format!("{split}.visual.bin");
        let path = dir.join(&name);
        for e in decode(&read_checked(dir, &header, &name)?, &path)? {
            if e.shape.len() != 3 || e.shape[1] != header.res || e.shape[2] != header.res {
                return Err(Error::format(&path, format!("entry `{}` has shape {:?}", e.name, e.shape)));
            }
            let channels = e.data.chunks(header.res * header.res).map(<[f64]>::to_vec).collect();
            visuals.insert(e.name, channels);
        }
    }
    let vocab = Vocab::floorplan();
    let examples = records
        .iter()
        .map(|r| {
            let v = if with_visuals {
                let v = visuals
                    .remove(r.visual_ref())
                    .ok_or_else(|| Error::format(dir.join(format!("{split}.visual.bin")), format!("no entry `{}`", r.visual_ref())))?;
                Some(v)
            } else {
                None
            };
            r.to_example(&vocab, v)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Split { header, task, records, examples })
}
