use super::*;
use crate::autodiff::{grad_check_params, pe_weight, Graph, ParamStore, Tensor};
use crate::error::Error;
use crate::seed::child_rng;
use rand::Rng;

/// Balances truncation (h²) against rounding (ε·|f|/h) for deep chains.
const H: f64 = 1e-5;
const TOL: f64 = 1e-5;
const AMP: f64 = 2.0;

fn rand_tensor(shape: &[usize], seed: u64) -> Tensor {
    let mut rng = child_rng(seed, &[1]);
    let n = shape.iter().product();
    Tensor::new(shape, (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

fn project(g: &mut Graph, y: Var, seed: u64) -> crate::Result<Var> {
    let shape = g.value(y).shape.clone();
    let w = g.constant(rand_tensor(&shape, seed ^ 0xabc));
    let p = g.mul(y, w)?;
    Ok(g.sum(p))
}

/// Biases are zero at init; give them values so their gradients matter.
fn jitter_biases(store: &mut ParamStore, seed: u64) {
    let mut rng = child_rng(seed, &[2]);
    for p in store.iter_mut() {
        if !p.decay {
            p.value.data.iter_mut().for_each(|v| *v = rng.gen_range(-0.5..0.5));
        }
    }
}

/// Scales weights up so gradients of deep chains stay well above the
/// finite-difference rounding floor.
fn amplify(store: &mut ParamStore, k: f64) {
    for p in store.iter_mut() {
        if p.decay {
            p.value.data.iter_mut().for_each(|v| *v *= k);
        }
    }
}

fn zero_all(store: &mut ParamStore) {
    for p in store.iter_mut() {
        p.value.data.iter_mut().for_each(|v| *v = 0.0);
    }
}

/// Runs the parameter check; smooth graphs must report no kinks.
fn check(store: &ParamStore, seed: u64, smooth: bool, f: impl Fn(&mut Graph, &ParamStore) -> crate::Result<Var>) -> usize {
    let mut rng = child_rng(seed, &[3]);
    let r = grad_check_params(store, &f, H, 12, &mut rng).unwrap();
    assert!(r.max_rel_err < TOL, "seed {seed}: {r:?}");
    assert!(!smooth || r.kinks == 0, "seed {seed}: {r:?}");
    assert!(r.unresolved_gap < 4.0, "seed {seed}: {r:?}");
    r.checked
}

fn inputs(g: &mut Graph, n: usize, b: usize, d: usize, seed: u64) -> Vec<Var> {
    (0..n).map(|i| g.constant(rand_tensor(&[b, d], seed * 31 + i as u64))).collect()
}

#[test]
fn pe_single_word_weights_by_position() {
    let mut store = ParamStore::new();
    let emb = Embedding::new(&mut store, "emb", 5, 6, &mut child_rng(1, &[])).unwrap();
    let mut g = Graph::new(false, 0);
    let y = emb.pe_encode(&mut g, &store, &[vec![3]]).unwrap();
    let w = &store.get(emb.table).value.data[18..24];
    for (k, (&got, &wk)) in g.value(y).data.iter().zip(w).enumerate() {
        let expect = (k + 1) as f64 / 6.0 * wk;
        assert!((got - expect).abs() < 1e-15, "k={k}");
        assert!((pe_weight(1, 1, k + 1, 6) - (k + 1) as f64 / 6.0).abs() < 1e-15);
    }
}

#[test]
fn pe_of_zero_embeddings_is_zero_and_order_matters() {
    let mut store = ParamStore::new();
    let emb = Embedding::new(&mut store, "emb", 5, 6, &mut child_rng(2, &[])).unwrap();
    let mut g = Graph::new(false, 0);
    let y = emb.pe_encode(&mut g, &store, &[vec![0, 1, 2], vec![2, 1, 0]]).unwrap();
    let v = g.value(y);
    assert!(v.data[..6].iter().zip(&v.data[6..]).any(|(a, b)| (a - b).abs() > 1e-6));
    zero_all(&mut store);
    let mut g = Graph::new(false, 0);
    let y = emb.pe_encode(&mut g, &store, &[vec![0, 1, 2]]).unwrap();
    assert!(g.value(y).data.iter().all(|&v| v == 0.0));
}

#[test]
fn lookup_rows_and_padding() {
    let mut store = ParamStore::new();
    let emb = Embedding::new(&mut store, "emb", 4, 3, &mut child_rng(3, &[])).unwrap();
    let mut g = Graph::new(false, 0);
    let y = emb.lookup(&mut g, &store, &[Some(2), None]).unwrap();
    assert_eq!(&g.value(y).data[..3], &store.get(emb.table).value.data[6..9]);
    assert_eq!(&g.value(y).data[3..], &[0.0; 3]);
    assert!(matches!(emb.lookup(&mut g, &store, &[Some(4)]), Err(Error::UnknownToken(_))));
}

#[test]
fn bigru_single_step_is_sum_of_directions() {
    let mut store = ParamStore::new();
    let bi = BiGru::new(&mut store, "bi", 4, 5, &mut child_rng(4, &[])).unwrap();
    jitter_biases(&mut store, 4);
    let mut g = Graph::new(false, 0);
    let x = inputs(&mut g, 1, 2, 4, 4);
    let out = bi.run(&mut g, &store, &x, &[]).unwrap();
    let z = g.constant(Tensor::zeros(&[2, 5]));
    let f = bi.fwd.step(&mut g, &store, x[0], z).unwrap();
    let b = bi.bwd.step(&mut g, &store, x[0], z).unwrap();
    let sum = g.add(f, b).unwrap();
    assert_eq!(out.len(), 1);
    assert_eq!(g.value(out[0]).shape, vec![2, 5]);
    assert_eq!(g.value(out[0]).data, g.value(sum).data);
}

#[test]
fn bigru_with_zero_weights_outputs_zero() {
    let mut store = ParamStore::new();
    let bi = BiGru::new(&mut store, "bi", 4, 5, &mut child_rng(5, &[])).unwrap();
    zero_all(&mut store);
    let mut g = Graph::new(false, 0);
    let x = inputs(&mut g, 3, 2, 4, 5);
    for s in bi.run(&mut g, &store, &x, &[]).unwrap() {
        assert!(g.value(s).data.iter().all(|&v| v == 0.0));
    }
}

#[test]
fn bigru_gradients_reach_both_directions() {
    let mut store = ParamStore::new();
    let bi = BiGru::new(&mut store, "bi", 3, 4, &mut child_rng(6, &[])).unwrap();
    let mut g = Graph::new(false, 0);
    let x = inputs(&mut g, 3, 2, 3, 6);
    let out = bi.run(&mut g, &store, &x, &[]).unwrap();
    let last = project(&mut g, out[1], 6).unwrap();
    let grads = g.backward(last).unwrap();
    for (id, t) in grads.params() {
        assert!(t.max_abs() > 0.0, "{}", store.get(*id).name);
    }
}

#[test]
fn padded_rows_match_unpadded_runs() {
    let mut store = ParamStore::new();
    let bi = BiGru::new(&mut store, "bi", 3, 4, &mut child_rng(7, &[])).unwrap();
    jitter_biases(&mut store, 7);
    let lens = [4usize, 2];
    let full = rand_tensor(&[4, 2, 3], 7);
    let mut g = Graph::new(false, 0);
    let xs: Vec<Var> = (0..4).map(|t| g.constant(Tensor::new(&[2, 3], full.data[t * 6..t * 6 + 6].to_vec()).unwrap())).collect();
    let masks: Vec<Option<Var>> = (0..4).map(|t| mask_column(&mut g, &lens.map(|l| t < l))).collect();
    let out = bi.run(&mut g, &store, &xs, &masks).unwrap();
    for (row, &len) in lens.iter().enumerate() {
        let mut g1 = Graph::new(false, 0);
        let xs1: Vec<Var> = (0..len)
            .map(|t| g1.constant(Tensor::row(full.data[t * 6 + row * 3..t * 6 + row * 3 + 3].to_vec())))
            .collect();
        let out1 = bi.run(&mut g1, &store, &xs1, &[]).unwrap();
        for t in 0..len {
            let a = &g.value(out[t]).data[row * 4..row * 4 + 4];
            let b = &g1.value(out1[t]).data;
            assert!(a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-14), "row {row} step {t}");
        }
    }
}

fn gates(g: &mut Graph, vals: &[f64], b: usize) -> Vec<Var> {
    vals.iter().map(|&v| g.constant(Tensor::full(&[b, 1], v))).collect()
}

#[test]
fn attgru_closed_gates_give_zero() {
    let mut store = ParamStore::new();
    let att = AttGru::new(&mut store, "att", 3, 4, &mut child_rng(8, &[])).unwrap();
    jitter_biases(&mut store, 8);
    let mut g = Graph::new(false, 0);
    let x = inputs(&mut g, 3, 2, 3, 8);
    let gs = gates(&mut g, &[0.0; 3], 2);
    let h = att.run(&mut g, &store, &x, &gs).unwrap();
    assert!(g.value(h).data.iter().all(|&v| v == 0.0));
}

#[test]
fn attgru_single_open_gate_gives_candidate() {
    let mut store = ParamStore::new();
    let att = AttGru::new(&mut store, "att", 3, 4, &mut child_rng(9, &[])).unwrap();
    jitter_biases(&mut store, 9);
    let mut g = Graph::new(false, 0);
    let x = inputs(&mut g, 3, 2, 3, 9);
    let gs = gates(&mut g, &[0.0, 1.0, 0.0], 2);
    let h = att.run(&mut g, &store, &x, &gs).unwrap();
    let z = g.constant(Tensor::zeros(&[2, 4]));
    let c = att.candidate.forward(&mut g, &store, x[1], z).unwrap();
    assert_eq!(g.value(h).data, g.value(c).data);
}

#[test]
fn attgru_open_gates_chain_candidates() {
    let mut store = ParamStore::new();
    let att = AttGru::new(&mut store, "att", 3, 4, &mut child_rng(10, &[])).unwrap();
    let mut g = Graph::new(false, 0);
    let x = inputs(&mut g, 3, 1, 3, 10);
    let gs = gates(&mut g, &[1.0; 3], 1);
    let h = att.run(&mut g, &store, &x, &gs).unwrap();
    let mut r = g.constant(Tensor::zeros(&[1, 4]));
    for &xi in &x {
        r = att.candidate.forward(&mut g, &store, xi, r).unwrap();
    }
    assert_eq!(g.value(h).data, g.value(r).data);
}

#[test]
fn attgru_uniform_gates_differ_from_gru() {
    let mut store = ParamStore::new();
    let gru = GruCell::new(&mut store, "gru", 3, 4, &mut child_rng(11, &[])).unwrap();
    jitter_biases(&mut store, 11);
    let att = AttGru { candidate: gru.candidate };
    let mut g = Graph::new(false, 0);
    let x = inputs(&mut g, 3, 1, 3, 11);
    let gs = gates(&mut g, &[1.0 / 3.0; 3], 1);
    let a = att.run(&mut g, &store, &x, &gs).unwrap();
    let b = *gru.run(&mut g, &store, &x, &[], false).unwrap().last().unwrap();
    assert!(g.value(a).data.iter().zip(&g.value(b).data).any(|(p, q)| (p - q).abs() > 1e-6));
}

#[test]
fn attgru_rejects_gates_outside_unit_interval() {
    let mut store = ParamStore::new();
    let att = AttGru::new(&mut store, "att", 3, 4, &mut child_rng(12, &[])).unwrap();
    let mut g = Graph::new(false, 0);
    let x = inputs(&mut g, 2, 1, 3, 12);
    for bad in [[0.5, 1.5], [-0.1, 0.0]] {
        let gs = gates(&mut g, &bad, 1);
        assert!(matches!(att.run(&mut g, &store, &x, &gs), Err(Error::Contract(_))));
    }
    let gs = gates(&mut g, &[1.0], 1);
    assert!(matches!(att.run(&mut g, &store, &x, &gs), Err(Error::Contract(_))));
}

#[test]
fn lstm_with_open_forget_and_closed_input_keeps_cell() {
    let mut g = Graph::new(false, 0);
    let c = g.constant(rand_tensor(&[2, 4], 13));
    let one = g.constant(Tensor::full(&[2, 4], 1.0));
    let zero = g.constant(Tensor::zeros(&[2, 4]));
    let o = g.constant(rand_tensor(&[2, 4], 14).map(|v| 0.5 + 0.5 * v));
    let cand = g.constant(rand_tensor(&[2, 4], 15));
    let (h, c2) = LstmCell::combine(&mut g, zero, one, o, cand, c).unwrap();
    assert_eq!(g.value(c2).data, g.value(c).data);
    let expect: Vec<f64> = g.value(c).data.iter().zip(&g.value(o).data).map(|(c, o)| o * c.tanh()).collect();
    assert_eq!(g.value(h).data, expect);
}

#[test]
fn fc_stack_of_zero_is_zero() {
    let mut store = ParamStore::new();
    let fc = FcStack::new(&mut store, "fc", &[5, 7, 3], &mut child_rng(16, &[])).unwrap();
    let mut g = Graph::new(false, 0);
    let x = g.constant(Tensor::zeros(&[2, 5]));
    let y = fc.forward(&mut g, &store, x).unwrap();
    assert_eq!(g.value(y).shape, vec![2, 3]);
    assert!(g.value(y).data.iter().all(|&v| v == 0.0));
}

#[test]
fn decoder_of_encoder_keeps_image_shape() {
    for res in [4, 8, 16, 32] {
        let mut store = ParamStore::new();
        let mut rng = child_rng(17, &[res as u64]);
        let en = ConvEncoder::new(&mut store, "en", res, 6, &mut rng).unwrap();
        let de = ConvDecoder::new(&mut store, "de", 6, res, &mut rng).unwrap();
        let mut g = Graph::new(false, 0);
        let x = g.constant(rand_tensor(&[3, res * res], 17));
        let e = en.forward(&mut g, &store, x).unwrap();
        assert_eq!(g.value(e).shape, vec![3, 6]);
        let y = de.forward(&mut g, &store, e).unwrap();
        assert_eq!(g.value(y).shape, vec![3, res * res]);
    }
    let mut store = ParamStore::new();
    assert!(matches!(ConvEncoder::new(&mut store, "en", 10, 6, &mut child_rng(0, &[])), Err(Error::Contract(_))));
}

#[test]
fn zero_decoder_outputs_zero_image() {
    let mut store = ParamStore::new();
    let de = ConvDecoder::new(&mut store, "de", 5, 8, &mut child_rng(18, &[])).unwrap();
    zero_all(&mut store);
    let mut g = Graph::new(false, 0);
    let x = g.constant(rand_tensor(&[2, 5], 18));
    let y = de.forward(&mut g, &store, x).unwrap();
    assert!(g.value(y).data.iter().all(|&v| v == 0.0));
}

#[test]
fn recurrent_layers_pass_grad_check() {
    for seed in 0..10 {
        let mut store = ParamStore::new();
        let mut rng = child_rng(seed, &[100]);
        let bi = BiGru::new(&mut store, "bi", 3, 4, &mut rng).unwrap();
        let att = AttGru::new(&mut store, "att", 4, 4, &mut rng).unwrap();
        let lstm = LstmCell::new(&mut store, "lstm", 4, 3, &mut rng).unwrap();
        jitter_biases(&mut store, seed);
        amplify(&mut store, AMP);
        check(&store, seed, true, |g, s| {
            let x = inputs(g, 3, 2, 3, seed);
            let masks = [None, None, mask_column(g, &[true, false])];
            let out = bi.run(g, s, &x, &masks)?;
            let gv = [0.2, 0.5, 0.3].map(|v| g.constant(Tensor::full(&[2, 1], v)));
            let h = att.run(g, s, &out, &gv)?;
            let l = lstm.run(g, s, &out, &masks)?;
            let a = project(g, h, seed)?;
            let b = project(g, l, seed + 1)?;
            g.add(a, b)
        });
    }
}

#[test]
fn feedforward_layers_pass_grad_check() {
    for seed in 0..10 {
        let mut store = ParamStore::new();
        let mut rng = child_rng(seed, &[200]);
        let emb = Embedding::new(&mut store, "emb", 6, 5, &mut rng).unwrap();
        let fc = FcStack::new(&mut store, "fc", &[5, 6, 4], &mut rng).unwrap();
        let en = ConvEncoder::new(&mut store, "en", 8, 4, &mut rng).unwrap();
        let de = ConvDecoder::new(&mut store, "de", 4, 8, &mut rng).unwrap();
        jitter_biases(&mut store, seed);
        amplify(&mut store, AMP);
        check(&store, seed, false, |g, s| {
            let sv = emb.pe_encode(g, s, &[vec![0, 3, 5], vec![2]])?;
            let v = fc.forward(g, s, sv)?;
            let img = de.forward(g, s, v)?;
            let e = en.forward(g, s, img)?;
            project(g, e, seed)
        });
    }
}
