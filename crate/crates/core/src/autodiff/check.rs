//! Finite-difference gradient checking.

use super::graph::{Graph, Var};
use super::params::ParamStore;
use super::Tensor;
use crate::error::{Error, Result};
use rand::seq::index::sample;
use rand::Rng;

/// Tolerance of the kink test, relative to the objective's magnitude.
const KINK_TOL: f64 = 1e-12;

fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-8)
}

fn eval(f: &impl Fn(&mut Graph, Var) -> Result<Var>, x: &Tensor) -> Result<f64> {
    let mut g = Graph::new(false, 0);
    let v = g.input(x.clone());
    let out = f(&mut g, v)?;
    Ok(g.value(out).item())
}

/// Largest relative error between backward() and central differences over
/// every coordinate of `x`.
pub fn grad_check(f: impl Fn(&mut Graph, Var) -> Result<Var>, x: &Tensor, h: f64) -> Result<f64> {
    if !(1e-7..=1e-4).contains(&h) {
        return Err(Error::Contract(format!("step {h} outside [1e-7, 1e-4]")));
    }
    let mut g = Graph::new(false, 0);
    let v = g.input(x.clone());
    let out = f(&mut g, v)?;
    let analytic = g.backward(out)?.of(v).cloned().expect("input leaf has a gradient");
    let mut worst = 0.0f64;
    let mut xp = x.clone();
    for i in 0..x.len() {
        xp.data[i] = x.data[i] + h;
        let fp = eval(&f, &xp)?;
        xp.data[i] = x.data[i] - h;
        let fm = eval(&f, &xp)?;
        xp.data[i] = x.data[i];
        worst = worst.max(rel_err(analytic.data[i], (fp - fm) / (2.0 * h)));
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub max_rel_err: f64,
    pub checked: usize,
    /// Coordinates whose probe interval straddles a kink (relu, abs), so
    /// central differences do not estimate the derivative there.
    pub kinks: usize,
    /// Coordinates whose gradient is too small for central differences to
    /// resolve to [`RESOLUTION`] given the rounding noise of `f`.
    pub unresolved: usize,
    /// Largest `|analytic − numeric|` over unresolved coordinates, in units
    /// of the rounding noise.
    pub unresolved_gap: f64,
    pub worst: String,
}

/// Relative accuracy a coordinate's finite difference must be able to reach
/// for the coordinate to be checked.
pub const RESOLUTION: f64 = 1e-4;

/// Checks parameter gradients of `f` (evaluated without dropout) on up to
/// `per_param` random coordinates of each parameter.
pub fn grad_check_params<R: Rng + ?Sized>(
    store: &ParamStore,
    f: impl Fn(&mut Graph, &ParamStore) -> Result<Var>,
    h: f64,
    per_param: usize,
    rng: &mut R,
) -> Result<CheckReport> {
    let mut g = Graph::new(false, 0);
    let out = f(&mut g, store)?;
    let f0 = g.value(out).item();
    let grads = g.backward(out)?;
    let mut report = CheckReport {
        max_rel_err: 0.0,
        checked: 0,
        kinks: 0,
        unresolved: 0,
        unresolved_gap: 0.0,
        worst: String::new(),
    };
    // Rounding noise of a central difference of f.
    let noise = f64::EPSILON * (1.0 + f0.abs()) / h;
    let mut probe = store.clone();
    let value = |s: &ParamStore| -> Result<f64> {
        let mut g = Graph::new(false, 0);
        let o = f(&mut g, s)?;
        Ok(g.value(o).item())
    };
    for (id, dw) in grads.params() {
        let n = dw.len();
        let name = store.get(*id).name.clone();
        for i in sample(rng, n, per_param.min(n)) {
            let x = store.get(*id).value.data[i];
            let mut at = |dx: f64| -> Result<f64> {
                probe.get_mut(*id).value.data[i] = x + dx;
                value(&probe)
            };
            let (fp, fm, fp2, fm2) = (at(h)?, at(-h)?, at(2.0 * h)?, at(-2.0 * h)?);
            probe.get_mut(*id).value.data[i] = x;
            // On a smooth path both combinations vanish to O(h³); a slope jump
            // inside [x − 2h, x + 2h] leaves one of them at O(jump · h).
            let odd = (fp2 - fm2) - 2.0 * (fp - fm);
            let even = (fp2 + fm2 - 2.0 * f0) - 4.0 * (fp + fm - 2.0 * f0);
            if odd.abs().max(even.abs()) > KINK_TOL * (1.0 + f0.abs()) {
                report.kinks += 1;
                continue;
            }
            let (a, n) = (dw.data[i], (fp - fm) / (2.0 * h));
            if a.abs().max(n.abs()) * RESOLUTION < noise {
                report.unresolved += 1;
                report.unresolved_gap = report.unresolved_gap.max((a - n).abs() / noise);
                continue;
            }
            report.checked += 1;
            let e = rel_err(a, n);
            if e > report.max_rel_err {
                report.max_rel_err = e;
                report.worst = format!("{name}[{i}]: analytic {a} numeric {n}");
            }
        }
    }
    Ok(report)
}
