//! DSMN and, with the image path absent, DMN+.

use super::{sentence_masks, vectors_at, words_at, AnswerFeature, Architecture, Example, Forward, ModelConfig, Task};
use crate::autodiff::{Graph, ParamId, ParamStore, Tensor, Var};
use crate::error::Result;
use crate::layers::{AttGru, BiGru, ConvDecoder, ConvEncoder, Embedding, FcStack, GruCell, Linear};
use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub enum SentenceEncoder {
    /// Position-encoded word embeddings.
    Pe,
    /// Two FC layers with relu between, over shape 5-vectors.
    Fc(FcStack),
}

/// Attention over previous sentences plus the encoder-decoder producing
/// `S_t = De_s([s_t; En_s(Σ a_i S_i)])`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VisualModule {
    pub w: ParamId,
    pub b: ParamId,
    pub en: ConvEncoder,
    pub de: ConvDecoder,
}

/// Image-path parameters of one hop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopImage {
    /// Gate weights on `[En_p1(|M − S_i|); En_p2(M ∘ S_i)]`.
    pub gate_w: ParamId,
    pub en_p1: ConvEncoder,
    pub en_p2: ConvEncoder,
    pub en_c: ConvEncoder,
    /// Tag-update weights on `En_c(C)`.
    pub mem_w: ParamId,
    pub en_m: ConvEncoder,
    pub de_m: ConvDecoder,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hop {
    /// Gate weights on `[|m − s_i|; m ∘ s_i; |q − s_i|; q ∘ s_i]`.
    pub gate_w: ParamId,
    pub gate_b: ParamId,
    pub attgru: AttGru,
    /// `W_m [m; q; c] + b_m`.
    pub mem: Linear,
    pub image: Option<HopImage>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnswerImage {
    pub en_f: ConvEncoder,
    pub w: ParamId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemoryNet {
    pub embed: Option<Embedding>,
    pub encoder: SentenceEncoder,
    pub bigru: BiGru,
    pub question: Option<GruCell>,
    pub visual: Option<VisualModule>,
    pub hops: Vec<Hop>,
    /// Answer FC over the vector part of `f`.
    pub answer: Linear,
    pub answer_image: Option<AnswerImage>,
}

impl MemoryNet {
    pub fn new<R: Rng + ?Sized>(c: &ModelConfig, s: &mut ParamStore, rng: &mut R) -> Result<MemoryNet> {
        let d = c.dim;
        let image = c.arch == Architecture::Dsmn;
        let (embed, encoder, question) = match c.task {
            Task::FloorPlan => {
                let e = Embedding::new(s, "embed", c.vocab, d, rng)?;
                let q = GruCell::new(s, "question.gru", d, d, rng)?;
                (Some(e), SentenceEncoder::Pe, Some(q))
            }
            Task::Shapes => (None, SentenceEncoder::Fc(FcStack::new(s, "input.fc", &[5, d, d], rng)?), None),
        };
        let bigru = BiGru::new(s, "input.bigru", d, d, rng)?;
        let visual = if image {
            Some(VisualModule {
                w: s.glorot("visual.w", &[2 * d, 1], 2 * d, 1, rng)?,
                b: s.bias("visual.b", &[1])?,
                en: ConvEncoder::new(s, "visual.en", c.res, d, rng)?,
                de: ConvDecoder::new(s, "visual.de", 2 * d, c.res, rng)?,
            })
        } else {
            None
        };
        let mut hops = Vec::with_capacity(c.hops);
        for t in 1..=c.hops {
            let p = format!("hop{t}");
            let gate_w = s.glorot(&format!("{p}.gate.w"), &[4 * d, 1], 4 * d, 1, rng)?;
            let gate_b = s.bias(&format!("{p}.gate.b"), &[1])?;
            let attgru = AttGru::new(s, &format!("{p}.attgru"), d, d, rng)?;
            let mem = Linear::new(s, &format!("{p}.mem"), 3 * d, d, rng)?;
            let image = if image {
                Some(HopImage {
                    gate_w: s.glorot(&format!("{p}.gate.w_img"), &[2 * d, 1], 2 * d, 1, rng)?,
                    en_p1: ConvEncoder::new(s, &format!("{p}.en_p1"), c.res, d, rng)?,
                    en_p2: ConvEncoder::new(s, &format!("{p}.en_p2"), c.res, d, rng)?,
                    en_c: ConvEncoder::new(s, &format!("{p}.en_c"), c.res, d, rng)?,
                    mem_w: s.glorot(&format!("{p}.mem.w_img"), &[d, d], 4 * d, d, rng)?,
                    en_m: ConvEncoder::new(s, &format!("{p}.en_m"), c.res, d, rng)?,
                    de_m: ConvDecoder::new(s, &format!("{p}.de_m"), 2 * d, c.res, rng)?,
                })
            } else {
                None
            };
            hops.push(Hop { gate_w, gate_b, attgru, mem, image });
        }
        let (text_in, use_image) = match c.answer {
            AnswerFeature::Full => (2 * d, image),
            AnswerFeature::TagQuestion => (2 * d, false),
            AnswerFeature::MemoryQuestion => (d, image),
        };
        let out = c.task.outputs();
        let fan_in = text_in + if use_image { d } else { 0 };
        let answer = Linear::new(s, "answer.fc", text_in, out, rng)?;
        let answer_image = if use_image {
            Some(AnswerImage {
                en_f: ConvEncoder::new(s, "answer.en_f", c.res, d, rng)?,
                w: s.glorot("answer.w_img", &[d, out], fan_in, out, rng)?,
            })
        } else {
            None
        };
        Ok(MemoryNet { embed, encoder, bigru, question, visual, hops, answer, answer_image })
    }

    pub fn forward(&self, c: &ModelConfig, g: &mut Graph, s: &ParamStore, batch: &[&Example]) -> Result<Forward> {
        let b = batch.len();
        let d = c.dim;
        let (lens, masks) = sentence_masks(g, batch);
        let n = masks.len();

        // Input module.
        let mut raw = Vec::with_capacity(n);
        for t in 0..n {
            raw.push(match &self.encoder {
                SentenceEncoder::Pe => self.embed.expect("floorplan embedding").pe_encode(g, s, &words_at(batch, t))?,
                SentenceEncoder::Fc(fc) => {
                    let x = vectors_at(g, batch, t);
                    fc.forward(g, s, x)?
                }
            });
        }
        let sent = self
            .bigru
            .run(g, s, &raw, &masks)?
            .into_iter()
            .map(|x| g.dropout(x, c.dropout))
            .collect::<Result<Vec<_>>>()?;

        // Question module.
        let zero_d = g.constant(Tensor::zeros(&[b, d]));
        let q = match (&self.question, self.embed) {
            (Some(gru), Some(embed)) => {
                let qlens: Vec<usize> = batch.iter().map(|e| e.question.len()).collect();
                let qmasks = super::step_masks(g, &qlens);
                let mut xs = Vec::with_capacity(qmasks.len());
                for t in 0..qmasks.len() {
                    let ids: Vec<Option<usize>> = batch.iter().map(|e| e.question.get(t).copied()).collect();
                    xs.push(embed.lookup(g, s, &ids)?);
                }
                *gru.run(g, s, &xs, &qmasks, false)?.last().expect("non-empty question")
            }
            _ => zero_d,
        };

        // Visual representation module.
        let rr = c.res * c.res;
        let zero_img = g.constant(Tensor::zeros(&[b, rr]));
        let visuals = self.visual_forward(g, s, &sent, c.res)?;

        // Spatial memory module.
        let valid: Vec<bool> = lens.iter().flat_map(|&l| (0..n).map(move |i| i < l)).collect();
        let mut m = zero_d;
        let mut mem_img = zero_img;
        let mut gates = Vec::with_capacity(self.hops.len());
        let mut memories = Vec::new();
        for hop in &self.hops {
            let gw = g.param(s, hop.gate_w);
            let gb = g.param(s, hop.gate_b);
            let mut logits = Vec::with_capacity(n);
            for i in 0..n {
                let si = sent[i];
                let d1 = g.sub(m, si)?;
                let a1 = g.abs(d1);
                let m1 = g.mul(m, si)?;
                let d2 = g.sub(q, si)?;
                let a2 = g.abs(d2);
                let m2 = g.mul(q, si)?;
                let p = g.concat(&[a1, m1, a2, m2])?;
                let mut l = g.matmul(p, gw)?;
                if let Some(img) = &hop.image {
                    let diff = g.sub(mem_img, visuals[i])?;
                    let ad = g.abs(diff);
                    let e1 = img.en_p1.forward(g, s, ad)?;
                    let prod = g.mul(mem_img, visuals[i])?;
                    let e2 = img.en_p2.forward(g, s, prod)?;
                    let pi = g.concat(&[e1, e2])?;
                    let wi = g.param(s, img.gate_w);
                    let li = g.matmul(pi, wi)?;
                    l = g.add(l, li)?;
                }
                logits.push(g.add_row(l, gb)?);
            }
            let logits = g.concat(&logits)?;
            let gate = g.softmax(logits, Some(&valid))?;
            let cols = (0..n).map(|i| g.slice_cols(gate, i, i + 1)).collect::<Result<Vec<_>>>()?;
            let ctx = hop.attgru.run(g, s, &sent, &cols)?;
            let x = g.concat(&[m, q, ctx])?;
            let mut pre = hop.mem.forward(g, s, x)?;
            if let Some(img) = &hop.image {
                let mut c2 = zero_img;
                for i in 0..n {
                    let term = g.mul_col(visuals[i], cols[i])?;
                    c2 = g.add(c2, term)?;
                }
                let ec = img.en_c.forward(g, s, c2)?;
                let wi = g.param(s, img.mem_w);
                let ci = g.matmul(ec, wi)?;
                pre = g.add(pre, ci)?;
            }
            m = g.relu(pre);
            if let Some(img) = &hop.image {
                let em = img.en_m.forward(g, s, mem_img)?;
                let x = g.concat(&[m, em])?;
                mem_img = img.de_m.forward(g, s, x)?;
                memories.push(mem_img);
            }
            gates.push(gate);
        }

        // Answer module.
        let text = match c.answer {
            AnswerFeature::MemoryQuestion => q,
            _ => g.concat(&[m, q])?,
        };
        let text = g.dropout(text, c.dropout)?;
        let mut output = self.answer.forward(g, s, text)?;
        if let Some(a) = &self.answer_image {
            let ef = a.en_f.forward(g, s, mem_img)?;
            let ef = g.dropout(ef, c.dropout)?;
            let w = g.param(s, a.w);
            let o = g.matmul(ef, w)?;
            output = g.add(output, o)?;
        }
        Ok(Forward { output, visuals, gates, memories, lens })
    }

    /// `S_1..S_n` from sentence embeddings `[B, d]`; empty without a visual
    /// module. `S_t` reads only `s_1..s_t`.
    pub fn visual_forward(&self, g: &mut Graph, s: &ParamStore, sent: &[Var], res: usize) -> Result<Vec<Var>> {
        let Some(v) = &self.visual else {
            return Ok(Vec::new());
        };
        let Some(&first) = sent.first() else {
            return Ok(Vec::new());
        };
        let (b, d) = (g.value(first).rows(), g.value(first).cols());
        let zero_d = g.constant(Tensor::zeros(&[b, d]));
        let zero_img = g.constant(Tensor::zeros(&[b, res * res]));
        let w = g.param(s, v.w);
        let bias = g.param(s, v.b);
        let mut visuals: Vec<Var> = Vec::with_capacity(sent.len());
        for (t, &st) in sent.iter().enumerate() {
            let mut logits = Vec::with_capacity(t + 1);
            for i in 0..=t {
                let si = if i == 0 { zero_d } else { sent[i - 1] };
                let diff = g.sub(si, st)?;
                let a = g.abs(diff);
                let m = g.mul(si, st)?;
                let z = g.concat(&[a, m])?;
                let l = g.matmul(z, w)?;
                logits.push(g.add_row(l, bias)?);
            }
            let logits = g.concat(&logits)?;
            let att = g.softmax(logits, None)?;
            // S_0 is blank, so the null sentence adds nothing to the sum.
            let mut gathered = zero_img;
            for i in 1..=t {
                let ai = g.slice_cols(att, i, i + 1)?;
                let term = g.mul_col(visuals[i - 1], ai)?;
                gathered = g.add(gathered, term)?;
            }
            let e = v.en.forward(g, s, gathered)?;
            let x = g.concat(&[st, e])?;
            visuals.push(v.de.forward(g, s, x)?);
        }
        Ok(visuals)
    }
}
