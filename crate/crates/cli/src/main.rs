//! `dsmn`: generate datasets, train, evaluate, visualize and inspect.

use clap::{Parser, Subcommand};
use dsmn::autodiff::Graph;
use dsmn::geometry::Canvas;
use dsmn::io::{self, DatasetHeader, Record, RunSummary};
use dsmn::models::Task;
use dsmn::training::{self, evaluate, multi_run, parse_task, run_seed, EpochRecord, TrainConfig, CONFIG_KEYS};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Mutex;

/// Relative dataset paths resolve against this directory when it is set.
const DATA_ROOT_VAR: &str = "DSMN_DATA_ROOT";

#[derive(Parser)]
#[command(name = "dsmn", version, about = "Geometric-reasoning QA datasets and spatial memory networks")]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write train/val/test splits, visual sidecars and a header.
    Generate {
        /// floorplan or shapes.
        kind: String,
        /// Output directory.
        out: PathBuf,
        /// Total samples over the three splits.
        #[arg(short, long, default_value_t = 38_400)]
        n: usize,
        #[arg(short, long, default_value_t = 0)]
        seed: u64,
        /// Side of the visual channels.
        #[arg(short, long, default_value_t = 32)]
        res: usize,
    },
    /// Train a best-of-k model; writes logs, checkpoint and manifest.
    Train {
        /// Dataset directory.
        data: PathBuf,
        /// Output directory for the checkpoint.
        out: PathBuf,
        /// Config file of `key=value` lines.
        #[arg(short, long)]
        config: Option<PathBuf>,
        /// Train on the first N training samples only.
        #[arg(long)]
        limit: Option<usize>,
        /// `key=value` overrides, applied after the config file.
        overrides: Vec<String>,
    },
    /// Evaluate a checkpoint on a split.
    Eval {
        checkpoint: PathBuf,
        data: PathBuf,
        #[arg(long, default_value = "test")]
        split: String,
    },
    /// Dump gates, generated images, memories and ground truth for one sample.
    Visualize {
        checkpoint: PathBuf,
        data: PathBuf,
        /// Record id, e.g. `test-000012`.
        sample: String,
        out: PathBuf,
    },
    /// Summarize a dataset directory, checkpoint directory or tensor container.
    Inspect { path: PathBuf },
}

/// Failure with its exit status: 1 usage, 2 data, 3 runtime.
struct Failure {
    code: u8,
    msg: String,
}

impl From<dsmn::Error> for Failure {
    fn from(e: dsmn::Error) -> Failure {
        use dsmn::Error as E;
        let code = match e {
            E::Config(_) => 1,
            E::Io { .. } | E::Format { .. } | E::Integrity(_) | E::UnknownToken(_) | E::Json(_) | E::Decode(_) => 2,
            _ => 3,
        };
        Failure { code, msg: e.to_string() }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure { code: 1, msg: msg.into() }
}

fn data_err(msg: impl Into<String>) -> Failure {
    Failure { code: 2, msg: msg.into() }
}

type Outcome<T = ()> = Result<T, Failure>;

fn data_path(p: &Path) -> PathBuf {
    match std::env::var_os(DATA_ROOT_VAR) {
        Some(root) if p.is_relative() => Path::new(&root).join(p),
        _ => p.to_path_buf(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match cli.command {
        Command::Generate { kind, out, n, seed, res } => generate(&kind, &data_path(&out), n, seed, res),
        Command::Train { data, out, config, limit, overrides } => train(&data_path(&data), &out, config.as_deref(), limit, &overrides),
        Command::Eval { checkpoint, data, split } => eval(&checkpoint, &data_path(&data), &split),
        Command::Visualize { checkpoint, data, sample, out } => visualize(&checkpoint, &data_path(&data), &sample, &out),
        Command::Inspect { path } => inspect(&path),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

fn generate(kind: &str, out: &Path, n: usize, seed: u64, res: usize) -> Outcome {
    let task = parse_task(kind).ok_or_else(|| usage(format!("unknown dataset kind `{kind}`; expected floorplan or shapes")))?;
    let h = io::generate_dataset_dir(out, task, n, seed, res)?;
    println!("wrote {} ({} per split) to {}", h.kind, n / 3, out.display());
    if let Some(k) = h.k {
        println!("K = {k}");
    }
    Ok(())
}

/// `key=value` pairs from a config file: blank lines and `#` comments skip.
fn read_config(path: &Path) -> Outcome<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path).map_err(|e| data_err(format!("{}: {e}", path.display())))?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(split_pair)
        .collect()
}

fn split_pair(s: &str) -> Outcome<(String, String)> {
    let (k, v) = s.split_once('=').ok_or_else(|| usage(format!("expected key=value, got `{s}`; valid keys: {}", CONFIG_KEYS.join(", "))))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

fn train(data: &Path, out: &Path, config: Option<&Path>, limit: Option<usize>, overrides: &[String]) -> Outcome {
    let header = io::read_header(data)?;
    let mut pairs = match config {
        Some(p) => read_config(p)?,
        None => Vec::new(),
    };
    for o in overrides {
        pairs.push(split_pair(o)?);
    }
    if !pairs.iter().any(|(k, _)| k == "task") {
        pairs.insert(0, ("task".into(), header.kind.clone()));
    }
    if !pairs.iter().any(|(k, _)| k == "res") {
        pairs.push(("res".into(), header.res.to_string()));
    }
    let config = TrainConfig::from_pairs(pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())))?;
    check_task(&header, config.task)?;
    let visuals = config.supervised();
    if visuals && config.res != header.res {
        return Err(usage(format!("res={} but the dataset's visual channels are {}", config.res, header.res)));
    }
    let mut tr = io::load_split(data, "train", visuals)?;
    if let Some(n) = limit {
        tr.examples.truncate(n);
    }
    let va = io::load_split(data, "val", false)?;
    let te = io::load_split(data, "test", false)?;
    std::fs::create_dir_all(out).map_err(|e| data_err(format!("{}: {e}", out.display())))?;
    let logs: Vec<String> = (0..config.runs).map(|k| format!("run{k}.log.jsonl")).collect();
    let files = logs
        .iter()
        .map(|name| {
            let p = out.join(name);
            std::fs::File::create(&p).map(Mutex::new).map_err(|e| data_err(format!("{}: {e}", p.display())))
        })
        .collect::<Outcome<Vec<_>>>()?;
    let on_epoch = |k: usize, e: &EpochRecord| {
        let line = serde_json::to_string(e).expect("records serialize");
        let mut f = files[k].lock().expect("log lock");
        let _ = writeln!(f, "{line}");
    };
    let result = multi_run(&config, &tr.examples, &va.examples, &on_epoch)?;
    let best = result.best_run();
    let test = evaluate(&best.model, &te.examples, 64)?;
    let summary = RunSummary {
        metric: best.best_val.name().to_string(),
        run_seeds: (0..config.runs).map(|k| run_seed(&config, k)).collect(),
        val_per_run: result.val_metrics(),
        best_epoch_per_run: result.runs.iter().map(|r| r.best_epoch).collect(),
        best_run: result.best,
        val: best.best_val.value(),
        test: Some(test.value()),
    };
    io::save_checkpoint(out, &config, &best.model, summary, header.files.clone(), logs)?;
    println!("val {}: {:.4}", best.best_val.name(), best.best_val.value());
    println!("test {}: {:.4}", test.name(), test.value());
    Ok(())
}

fn check_task(header: &DatasetHeader, task: Task) -> Outcome {
    if header.task()? != task {
        return Err(usage(format!("config is for {} but the dataset is {}", training::task_name(task), header.kind)));
    }
    Ok(())
}

fn eval(checkpoint: &Path, data: &Path, split: &str) -> Outcome {
    let ck = io::load_checkpoint(checkpoint)?;
    let split_data = io::load_split(data, split, false)?;
    check_task(&split_data.header, ck.config.task)?;
    let m = evaluate(&ck.model, &split_data.examples, 64)?;
    println!("{}: {:.4}", m.name(), m.value());
    let record = serde_json::json!({
        "split": split,
        "metric": m.name(),
        "value": m.value(),
        "samples": split_data.examples.len(),
        "model": ck.config.model.name(),
        "config_hash": ck.manifest.config_hash,
    });
    println!("{record}");
    Ok(())
}

/// Shade for a gate value in `[0, 1]`: darker (denser) for larger values.
fn shade(v: f64) -> char {
    const RAMP: &[u8] = b" .:-=+*#%@";
    RAMP[((v.clamp(0.0, 1.0) * (RAMP.len() - 1) as f64).round()) as usize] as char
}

fn image(data: &[f64], res: usize) -> Canvas {
    Canvas::from_data(res, res, data.iter().map(|&v| v as f32).collect())
}

fn side_by_side(a: &Canvas, b: &Canvas) -> Canvas {
    let (h, w) = (a.height, a.width + 1 + b.width);
    let mut c = Canvas::new(h, w);
    for r in 0..h {
        for x in 0..a.width {
            c.set(r, x, a.get(r, x));
        }
        c.set(r, a.width, 1.0);
        for x in 0..b.width {
            c.set(r, a.width + 1 + x, b.get(r, x));
        }
    }
    c
}

fn write_file(path: &Path, bytes: &[u8]) -> Outcome {
    io::write_atomic(path, bytes).map_err(Failure::from)
}

fn visualize(checkpoint: &Path, data: &Path, sample: &str, out: &Path) -> Outcome {
    let ck = io::load_checkpoint(checkpoint)?;
    let split = sample.split_once('-').map(|(s, _)| s).unwrap_or_default();
    if !io::SPLITS.contains(&split) {
        return Err(data_err(format!("unknown sample id `{sample}`")));
    }
    let d = io::load_split(data, split, true)?;
    check_task(&d.header, ck.config.task)?;
    let idx = d.records.iter().position(|r| r.id() == sample).ok_or_else(|| data_err(format!("unknown sample id `{sample}`")))?;
    let (record, example) = (&d.records[idx], &d.examples[idx]);
    let mut g = Graph::new(false, 0);
    let f = ck.model.forward(&mut g, &[example])?;
    std::fs::create_dir_all(out).map_err(|e| data_err(format!("{}: {e}", out.display())))?;
    let texts = record.sentence_texts();
    let n = texts.len();

    let mut table = String::new();
    let mut long = String::from("sentence\thop\tgate\n");
    let _ = writeln!(table, "# gate per sentence and hop; shade ramp \" .:-=+*#%@\" runs from 0 (light) to 1 (dark)");
    let _ = writeln!(table, "{:<6} {}", "hop", (1..=n).map(|i| format!("{i:>7}")).collect::<String>());
    for (t, &gate) in f.gates.iter().enumerate() {
        let row = &g.value(gate).data[..n];
        let _ = writeln!(
            table,
            "{:<6} {}   {}",
            t + 1,
            row.iter().map(|v| format!("{v:>7.4}")).collect::<String>(),
            row.iter().map(|&v| shade(v)).collect::<String>()
        );
        for (i, v) in row.iter().enumerate() {
            let _ = writeln!(long, "{}\t{}\t{v:.6}", i + 1, t + 1);
        }
    }
    let _ = writeln!(table);
    for (i, s) in texts.iter().enumerate() {
        let _ = writeln!(table, "{:>3}. {s}", i + 1);
    }
    write_file(&out.join("gates.txt"), table.as_bytes())?;
    write_file(&out.join("gates.tsv"), long.as_bytes())?;

    let res = ck.config.res;
    let truth = example.visual.as_ref().filter(|v| v.first().is_some_and(|c| c.len() == res * res));
    for (i, &s) in f.visuals.iter().enumerate() {
        let gen = image(&g.value(s).data, res);
        write_file(&out.join(format!("s{:02}.pgm", i + 1)), &gen.to_pgm())?;
        if let Some(tv) = truth {
            let t = image(&tv[i], res);
            write_file(&out.join(format!("truth{:02}.pgm", i + 1)), &t.to_pgm())?;
            write_file(&out.join(format!("pair{:02}.pgm", i + 1)), &side_by_side(&gen, &t).to_pgm())?;
        }
    }
    for (t, &m) in f.memories.iter().enumerate() {
        write_file(&out.join(format!("memory{}.pgm", t + 1)), &image(&g.value(m).data, res).to_pgm())?;
    }
    let output = &g.value(f.output).data;
    match example.target {
        dsmn::models::Target::Class(c) => {
            let p = g.softmax(f.output, None)?;
            let probs = &g.value(p).data;
            let names = ["left", "right", "front", "back"];
            println!("answer {} (truth {})", names[training::argmax(probs)], names[c]);
        }
        dsmn::models::Target::Value(v) => println!("answer {:.3} (truth {v})", output[0]),
    }
    print!("{table}");
    println!("wrote {} images to {}", f.visuals.len() * if truth.is_some() { 3 } else { 1 } + f.memories.len(), out.display());
    Ok(())
}

fn inspect(path: &Path) -> Outcome {
    if path.join(io::HEADER_FILE).exists() {
        let h = io::read_header(path)?;
        println!("dataset {} (generator v{}, seed {}, visual {}x{})", h.kind, h.generator_version, h.seed, h.res, h.res);
        for (s, n) in &h.splits {
            println!("  {s}: {n} samples");
        }
        if let Some(k) = h.k {
            println!("  answers 0..={k}");
        }
        let tr = io::load_split(path, "train", false)?;
        let mut hist: BTreeMap<String, usize> = BTreeMap::new();
        let mut sentences = 0;
        for r in &tr.records {
            let a = match r {
                Record::FloorPlan(r) => r.answer.clone(),
                Record::Shapes(r) => r.answer.to_string(),
            };
            *hist.entry(a).or_default() += 1;
            sentences += r.sentence_texts().len();
        }
        println!("  train answers: {hist:?}");
        println!("  sentences per description: {:.2}", sentences as f64 / tr.records.len().max(1) as f64);
    } else if path.join(io::MANIFEST_FILE).exists() {
        let ck = io::load_checkpoint(path)?;
        let m = &ck.manifest;
        println!("checkpoint {} on {} (code {})", ck.config.model.name(), training::task_name(ck.config.task), m.code_version);
        println!("  config hash {}", m.config_hash);
        for (k, v) in ck.config.to_pairs() {
            println!("  {k} = {v}");
        }
        println!("  {} parameter tensors, {} values", m.params.len(), ck.model.store.count());
        let s = &m.summary;
        println!("  best run {} of {}: val {} {:.4}", s.best_run, s.val_per_run.len(), s.metric, s.val);
        println!("  val per run: {:?}", s.val_per_run);
        if let Some(t) = s.test {
            println!("  test {} {t:.4}", s.metric);
        }
    } else if path.is_file() {
        let entries = io::read_container(path)?;
        println!("tensor container, {} entries", entries.len());
        for e in entries.iter().take(20) {
            println!("  {} {:?} {:?}", e.name, e.dtype, e.shape);
        }
        if entries.len() > 20 {
            println!("  ...");
        }
    } else {
        return Err(data_err(format!("{}: not a dataset, checkpoint or tensor container", path.display())));
    }
    Ok(())
}
