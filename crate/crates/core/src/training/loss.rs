//! Answer, visual and combined losses, on plain values and on the graph.

use crate::autodiff::{Graph, Tensor, Var};
use crate::error::{Error, Result};
use crate::models::{Example, Forward, Target};

/// `−ln p_class` for a probability vector.
pub fn class_cross_entropy(probs: &[f64], class: usize) -> Result<f64> {
    let p = probs.get(class).ok_or_else(|| Error::Contract(format!("class {class} of {}", probs.len())))?;
    Ok(-p.ln())
}

pub fn squared_error(prediction: f64, truth: f64) -> f64 {
    (prediction - truth).powi(2)
}

/// Mean squared error over all channels and pixels, channels matched in order.
pub fn visual_loss(generated: &[Vec<f64>], truth: &[Vec<f64>]) -> Result<f64> {
    if generated.len() != truth.len() {
        return Err(Error::Contract(format!("{} generated channels for {} ground-truth channels", generated.len(), truth.len())));
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for (a, b) in generated.iter().zip(truth) {
        if a.len() != b.len() {
            return Err(Error::Contract(format!("channel of {} pixels against {}", a.len(), b.len())));
        }
        sum += a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>();
        count += a.len();
    }
    Ok(if count == 0 { 0.0 } else { sum / count as f64 })
}

/// `λ·L_vi + (1 − λ)·L_wo`.
pub fn combined_loss(l_vi: f64, l_wo: f64, lambda: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::Contract(format!("lambda_vi {lambda} outside [0, 1]")));
    }
    Ok(lambda * l_vi + (1.0 - lambda) * l_wo)
}

/// Mean over the batch of each row's loss. Rows flagged in `supervised`
/// combine their visual and answer losses with weight `lambda`; the others
/// contribute the answer loss alone.
pub fn batch_loss(g: &mut Graph, f: &Forward, batch: &[&Example], supervised: &[bool], lambda: f64) -> Result<Var> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::Contract(format!("lambda_vi {lambda} outside [0, 1]")));
    }
    let b = batch.len();
    let answer_w: Vec<f64> = supervised.iter().map(|&s| if s { 1.0 - lambda } else { 1.0 }).collect();
    let mut total = match batch[0].target {
        Target::Class(_) => {
            let classes = batch
                .iter()
                .map(|e| match e.target {
                    Target::Class(c) => Ok(c),
                    Target::Value(_) => Err(Error::Contract("mixed targets in batch".into())),
                })
                .collect::<Result<Vec<_>>>()?;
            g.cross_entropy(f.output, &classes, Some(&answer_w))?
        }
        Target::Value(_) => {
            let values = batch
                .iter()
                .map(|e| match e.target {
                    Target::Value(v) => Ok(v),
                    Target::Class(_) => Err(Error::Contract("mixed targets in batch".into())),
                })
                .collect::<Result<Vec<_>>>()?;
            let t = g.constant(Tensor { shape: vec![b, 1], data: values });
            let d = g.sub(f.output, t)?;
            let sq = g.mul(d, d)?;
            let w = g.constant(Tensor { shape: vec![b, 1], data: answer_w.iter().map(|w| w / b as f64).collect() });
            let wsq = g.mul_col(sq, w)?;
            g.sum(wsq)
        }
    };
    if lambda == 0.0 || !supervised.iter().any(|&s| s) {
        return Ok(total);
    }
    for (t, &s) in f.visuals.iter().enumerate() {
        let pixels = g.value(s).cols();
        let mut truth = vec![0.0; b * pixels];
        let mut w = vec![0.0; b];
        for (r, e) in batch.iter().enumerate() {
            let n = e.sentences.len();
            if !supervised[r] || t >= n {
                continue;
            }
            let channels = e.visual.as_ref().ok_or_else(|| Error::Contract("supervised row without visuals".into()))?;
            let c = channels.get(t).ok_or_else(|| Error::Contract(format!("{} channels for {n} sentences", channels.len())))?;
            if c.len() != pixels {
                return Err(Error::Contract(format!("channel of {} pixels against {pixels}", c.len())));
            }
            truth[r * pixels..(r + 1) * pixels].copy_from_slice(c);
            w[r] = lambda / (n * pixels * b) as f64;
        }
        if w.iter().all(|&x| x == 0.0) {
            continue;
        }
        let tv = g.constant(Tensor { shape: vec![b, pixels], data: truth });
        let d = g.sub(s, tv)?;
        let sq = g.mul(d, d)?;
        let wc = g.constant(Tensor { shape: vec![b, 1], data: w });
        let wsq = g.mul_col(sq, wc)?;
        let l = g.sum(wsq);
        total = g.add(total, l)?;
    }
    Ok(total)
}
