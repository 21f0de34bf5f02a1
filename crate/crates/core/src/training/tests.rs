use super::*;
use crate::autodiff::Graph;
use crate::floorplan::generate_sample;
use crate::models::{floorplan_example, shape_example, Example, Target, Task, Vocab};
use crate::seed::child_rng;
use crate::shapes::{sample_scene, ShapeSample};
use crate::geometry::count_intersections;
use rand::Rng;

fn floorplan_examples(n: usize, seed: u64, res: Option<usize>) -> Vec<Example> {
    let vocab = Vocab::floorplan();
    let mut rng = child_rng(seed, &[]);
    (0..n)
        .map(|_| floorplan_example(&generate_sample(&mut rng).unwrap(), &vocab, res).unwrap())
        .collect()
}

fn shape_examples(n: usize, seed: u64, res: Option<usize>) -> Vec<Example> {
    let mut rng = child_rng(seed, &[]);
    (0..n)
        .map(|_| {
            let scene = sample_scene(&mut rng).unwrap();
            let answer = count_intersections(&scene).unwrap();
            shape_example(&ShapeSample { scene, answer }, res)
        })
        .collect()
}

fn tiny(task: Task, model: ModelKind) -> TrainConfig {
    TrainConfig {
        dim: 8,
        res: 8,
        max_epochs: 4,
        patience: 2,
        runs: 2,
        seed: 5,
        batch_size: 8,
        ..TrainConfig::new(task, model)
    }
}

#[test]
fn answer_loss_examples() {
    assert_eq!(class_cross_entropy(&[0.0, 1.0, 0.0, 0.0], 1).unwrap(), 0.0);
    assert!((class_cross_entropy(&[0.25; 4], 2).unwrap() - 4f64.ln()).abs() < 1e-15);
    assert!(class_cross_entropy(&[0.25; 4], 4).is_err());
    assert_eq!(squared_error(3.5, 3.5), 0.0);
    assert_eq!(squared_error(1.0, 4.0), 9.0);
}

#[test]
fn visual_loss_examples() {
    let truth = vec![vec![1.0, 0.0, 1.0, 1.0], vec![0.0, 0.0, 1.0, 0.0]];
    assert_eq!(visual_loss(&truth, &truth).unwrap(), 0.0);
    let zero = vec![vec![0.0; 4]; 2];
    assert_eq!(visual_loss(&zero, &truth).unwrap(), 4.0 / 8.0);
    assert!(visual_loss(&zero[..1], &truth).is_err());
    assert!(visual_loss(&[vec![0.0; 3]], &truth[..1]).is_err());
}

#[test]
fn permuted_channels_raise_visual_loss() {
    let ex = floorplan_examples(20, 3, Some(16));
    let mut raised = 0;
    let mut total = 0;
    for e in &ex {
        let v = e.visual.as_ref().unwrap();
        let mut p = v.clone();
        p.rotate_left(1);
        if p == *v {
            continue;
        }
        total += 1;
        if visual_loss(&p, v).unwrap() > 0.0 {
            raised += 1;
        }
    }
    assert!(total > 10);
    assert_eq!(raised, total);
}

#[test]
fn combined_loss_examples() {
    assert_eq!(combined_loss(2.0, 4.0, 0.0).unwrap(), 4.0);
    assert_eq!(combined_loss(2.0, 4.0, 1.0).unwrap(), 2.0);
    assert_eq!(combined_loss(2.0, 4.0, 0.5).unwrap(), 3.0);
    assert!(combined_loss(2.0, 4.0, 1.5).is_err());
    assert!(combined_loss(2.0, 4.0, -0.1).is_err());
}

#[test]
fn combined_loss_is_monotone() {
    let mut rng = child_rng(11, &[]);
    for _ in 0..1000 {
        let (a, b, l) = (rng.gen_range(0.0..5.0), rng.gen_range(0.0..5.0), rng.gen_range(0.0..=1.0));
        let d = rng.gen_range(0.0..1.0);
        let base = combined_loss(a, b, l).unwrap();
        assert!(combined_loss(a + d, b, l).unwrap() >= base);
        assert!(combined_loss(a, b + d, l).unwrap() >= base);
    }
}

#[test]
fn batch_loss_matches_value_level_losses() {
    let ex = floorplan_examples(4, 7, Some(8));
    let config = tiny(Task::FloorPlan, ModelKind::DsmnStar);
    let model = crate::models::Model::new(config.model_config(), 1).unwrap();
    let batch: Vec<&Example> = ex.iter().collect();
    let sup = [true, false, true, false];
    let lambda = 0.3;
    let mut g = Graph::new(false, 0);
    let f = model.forward(&mut g, &batch).unwrap();
    let loss = batch_loss(&mut g, &f, &batch, &sup, lambda).unwrap();
    let got = g.value(loss).item();
    let probs = g.softmax(f.output, None).unwrap();
    let probs = g.value(probs).clone();
    let mut want = 0.0;
    for (r, e) in ex.iter().enumerate() {
        let Target::Class(c) = e.target else { unreachable!() };
        let l_wo = class_cross_entropy(&probs.data[r * 4..r * 4 + 4], c).unwrap();
        want += if sup[r] {
            let n = e.sentences.len();
            let generated: Vec<Vec<f64>> = (0..n)
                .map(|t| {
                    let s = g.value(f.visuals[t]);
                    s.data[r * s.cols()..(r + 1) * s.cols()].to_vec()
                })
                .collect();
            let l_vi = visual_loss(&generated, e.visual.as_ref().unwrap()).unwrap();
            combined_loss(l_vi, l_wo, lambda).unwrap()
        } else {
            l_wo
        };
    }
    want /= 4.0;
    assert!((got - want).abs() < 1e-12, "{got} vs {want}");
}

#[test]
fn regression_batch_loss_is_mean_squared_error() {
    let ex = shape_examples(3, 2, None);
    let config = tiny(Task::Shapes, ModelKind::Dsmn);
    let model = crate::models::Model::new(config.model_config(), 1).unwrap();
    let batch: Vec<&Example> = ex.iter().collect();
    let mut g = Graph::new(false, 0);
    let f = model.forward(&mut g, &batch).unwrap();
    let loss = batch_loss(&mut g, &f, &batch, &[false; 3], 0.5).unwrap();
    let out = g.value(f.output).data.clone();
    let want: f64 = ex
        .iter()
        .zip(&out)
        .map(|(e, p)| match e.target {
            Target::Value(v) => squared_error(*p, v),
            Target::Class(_) => unreachable!(),
        })
        .sum::<f64>()
        / 3.0;
    assert!((g.value(loss).item() - want).abs() < 1e-12);
}

#[test]
fn partial_supervision_counts() {
    let targets: Vec<Target> = (0..12_800).map(|i| Target::Class(i % 4)).collect();
    let keep = select_supervised(&targets, 0.01, 1).unwrap();
    assert_eq!(keep.iter().filter(|&&k| k).count(), 128);
    for c in 0..4 {
        assert_eq!((0..12_800).filter(|&i| keep[i] && i % 4 == c).count(), 32);
    }
    assert!(select_supervised(&targets, 1.0, 1).unwrap().iter().all(|&k| k));
    assert!(select_supervised(&targets, 0.0, 1).unwrap().iter().all(|&k| !k));
    assert_eq!(select_supervised(&targets[..7], 0.5, 1).unwrap().iter().filter(|&&k| k).count(), 4);
    assert!(select_supervised(&targets, 1.5, 1).is_err());
}

#[test]
fn partial_supervision_is_deterministic_and_seeded() {
    let targets: Vec<Target> = (0..1000).map(|i| Target::Class((i * 7) % 4)).collect();
    let a = select_supervised(&targets, 0.1, 9).unwrap();
    assert_eq!(a, select_supervised(&targets, 0.1, 9).unwrap());
    assert_ne!(a, select_supervised(&targets, 0.1, 10).unwrap());
}

#[test]
fn partial_supervision_stratifies_regression_targets() {
    let targets: Vec<Target> = (0..900).map(|i| Target::Value((i % 9) as f64)).collect();
    let keep = select_supervised(&targets, 0.1, 4).unwrap();
    for v in 0..9 {
        assert_eq!((0..900).filter(|&i| keep[i] && i % 9 == v).count(), 10);
    }
}

#[test]
fn metrics_and_scores() {
    let outs = vec![vec![0.1, 0.7, 0.1, 0.1], vec![0.9, 0.05, 0.03, 0.02]];
    let m = score(&outs, &[Target::Class(1), Target::Class(0)]).unwrap();
    assert_eq!(m, Metric::Accuracy(100.0));
    assert_eq!(score(&outs, &[Target::Class(1), Target::Class(2)]).unwrap(), Metric::Accuracy(50.0));
    let r = score(&[vec![1.0], vec![5.0]], &[Target::Value(2.0), Target::Value(2.0)]).unwrap();
    assert!((r.value() - 5f64.sqrt()).abs() < 1e-12);
    assert_eq!(r.name(), "rmse");
    assert_eq!(m.name(), "accuracy");
    assert!(Metric::Accuracy(60.0).better_than(Metric::Accuracy(50.0)));
    assert!(!Metric::Accuracy(50.0).better_than(Metric::Accuracy(50.0)));
    assert!(Metric::Rmse(1.0).better_than(Metric::Rmse(2.0)));
    assert!(!Metric::Rmse(3.0).better_than(Metric::Rmse(2.0)));
    assert_eq!(argmax(&[0.1, 0.4, 0.4, 0.1]), 1);
}

#[test]
fn constant_mean_predictor_rmse_is_answer_std_dev() {
    let ex = shape_examples(300, 8, None);
    let values: Vec<f64> = ex
        .iter()
        .map(|e| match e.target {
            Target::Value(v) => v,
            Target::Class(_) => unreachable!(),
        })
        .collect();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64).sqrt();
    let targets: Vec<Target> = ex.iter().map(|e| e.target).collect();
    let m = score(&vec![vec![mean]; values.len()], &targets).unwrap();
    assert!((m.value() - sd).abs() < 1e-12);
}

#[test]
fn minibatches_cover_every_row_once() {
    let lens: Vec<usize> = (0..203).map(|i| 3 + i % 7).collect();
    let b = minibatches(&lens, 16, &mut child_rng(1, &[]));
    let mut all: Vec<usize> = b.iter().flatten().copied().collect();
    all.sort_unstable();
    assert_eq!(all, (0..203).collect::<Vec<_>>());
    assert!(b.iter().all(|x| x.len() <= 16));
    assert_eq!(b.iter().filter(|x| x.len() < 16).count(), 1);
}

#[test]
fn config_defaults_follow_the_protocol() {
    let c = TrainConfig::new(Task::FloorPlan, ModelKind::DsmnStar);
    assert_eq!((c.dim, c.l2, c.max_epochs, c.patience, c.runs), (32, 1e-4, 1600, 80, 10));
    let c = TrainConfig::new(Task::FloorPlan, ModelKind::Dsmn);
    assert_eq!((c.dim, c.l2), (32, 1e-3));
    assert_eq!(TrainConfig::new(Task::Shapes, ModelKind::Dsmn).max_epochs, 800);
    assert_eq!(c.lambda_vi, 0.5);
    for m in ModelKind::ALL {
        assert_eq!(ModelKind::parse(m.name()), Some(m));
        TrainConfig::new(Task::FloorPlan, m).validate().unwrap();
        TrainConfig::new(Task::Shapes, m).validate().unwrap();
    }
}

#[test]
fn config_rejects_invalid_settings() {
    let base = TrainConfig::new(Task::FloorPlan, ModelKind::DsmnStar);
    assert!(TrainConfig { supervision: 0.0, ..base.clone() }.validate().is_err());
    assert!(TrainConfig { patience: 2000, ..base.clone() }.validate().is_err());
    assert!(TrainConfig { lambda_vi: 1.2, ..base.clone() }.validate().is_err());
    assert!(TrainConfig { lr: 0.0, ..base.clone() }.validate().is_err());
    assert!(TrainConfig { supervision: 0.5, ..TrainConfig::new(Task::FloorPlan, ModelKind::Dsmn) }.validate().is_err());
    let e = TrainConfig::from_pairs([("bogus", "1")]).unwrap_err().to_string();
    assert!(e.contains("batch_size") && e.contains("lambda_vi"), "{e}");
    assert!(TrainConfig::from_pairs([("dim", "x")]).is_err());
    let c = TrainConfig::from_pairs([("model", "dsmn"), ("task", "shapes"), ("dim", "16")]).unwrap();
    assert_eq!((c.model, c.task, c.dim, c.supervision), (ModelKind::Dsmn, Task::Shapes, 16, 0.0));
}

#[test]
fn training_is_deterministic() {
    let ex = floorplan_examples(40, 1, Some(8));
    let config = tiny(Task::FloorPlan, ModelKind::DsmnStar);
    let a = train(&config, &ex[..32], &ex[32..], 3, &mut |_| {}).unwrap();
    let b = train(&config, &ex[..32], &ex[32..], 3, &mut |_| {}).unwrap();
    let strip = |r: &RunResult| r.log.iter().map(|e| (e.epoch, e.train_loss, e.val_metric)).collect::<Vec<_>>();
    assert_eq!(strip(&a), strip(&b));
    assert_eq!(a.model.store, b.model.store);
    let c = train(&config, &ex[..32], &ex[32..], 4, &mut |_| {}).unwrap();
    assert_ne!(strip(&a), strip(&c));
}

#[test]
fn early_stopping_keeps_the_best_snapshot() {
    for (task, model, ex) in [
        (Task::FloorPlan, ModelKind::Dsmn, floorplan_examples(48, 2, None)),
        (Task::Shapes, ModelKind::DmnPlus, shape_examples(48, 2, None)),
    ] {
        let config = TrainConfig { max_epochs: 12, patience: 3, lr: 3e-2, ..tiny(task, model) };
        let mut seen = Vec::new();
        let r = train(&config, &ex[..32], &ex[32..], 1, &mut |e| seen.push(e.clone())).unwrap();
        assert_eq!(seen, r.log);
        let best = seen.iter().map(|e| e.val_metric);
        let best = match r.best_val {
            Metric::Accuracy(_) => best.fold(f64::MIN, f64::max),
            Metric::Rmse(_) => best.fold(f64::MAX, f64::min),
        };
        assert_eq!(r.best_val.value(), best);
        assert_eq!(r.log[r.best_epoch - 1].val_metric, best);
        assert_eq!(evaluate(&r.model, &ex[32..], 7).unwrap().value(), best);
        let last = r.log.last().unwrap().epoch;
        assert!(last == config.max_epochs || last - r.best_epoch == config.patience);
    }
}

#[test]
fn multi_run_reports_every_run() {
    let ex = shape_examples(30, 6, None);
    let config = TrainConfig { runs: 3, ..tiny(Task::Shapes, ModelKind::Lstm2) };
    let m = multi_run(&config, &ex[..20], &ex[20..], &|_, _| {}).unwrap();
    assert_eq!(m.val_metrics().len(), 3);
    let best = m.best_run().best_val.value();
    assert!(m.val_metrics().iter().all(|&v| v >= best));
    let single = TrainConfig { runs: 1, ..config.clone() };
    let one = multi_run(&single, &ex[..20], &ex[20..], &|_, _| {}).unwrap();
    let direct = train(&single, &ex[..20], &ex[20..], crate::seed::derive(single.seed, &[0]), &mut |_| {}).unwrap();
    assert_eq!(one.best_run().model.store, direct.model.store);
}

#[test]
fn divergence_is_reported() {
    let ex = shape_examples(20, 6, None);
    let config = TrainConfig { lr: 1e200, ..tiny(Task::Shapes, ModelKind::Dsmn) };
    match train(&config, &ex[..12], &ex[12..], 1, &mut |_| {}) {
        Err(crate::Error::Diverged(_)) => {}
        other => panic!("expected divergence, got {:?}", other.map(|r| r.log)),
    }
}

#[test]
fn dsmn_star_without_visuals_is_rejected() {
    let ex = floorplan_examples(20, 6, None);
    let config = tiny(Task::FloorPlan, ModelKind::DsmnStar);
    assert!(matches!(train(&config, &ex[..12], &ex[12..], 1, &mut |_| {}), Err(crate::Error::Contract(_))));
}

#[test]
fn small_dsmn_star_overfits() {
    let ex = floorplan_examples(16, 12, Some(8));
    let config = TrainConfig { max_epochs: 150, patience: 150, lr: 1e-2, l2: 0.0, dropout: 0.0, dim: 16, ..tiny(Task::FloorPlan, ModelKind::DsmnStar) };
    let r = train(&config, &ex, &ex, 2, &mut |_| {}).unwrap();
    assert_eq!(r.best_val, Metric::Accuracy(100.0), "{:?}", r.log.last());
}
