//! Corana-style adaptive simulated annealing over a box.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnnealOptions {
    /// Sweeps between step-length adjustments.
    pub ns: usize,
    /// Step adjustments per temperature.
    pub nt: usize,
    /// Cooling ratio.
    pub rt: f64,
    /// Step-length adjustment strength.
    pub c: f64,
    /// Termination: the last `neps` temperature-end values and the optimum agree within `eps`.
    pub eps: f64,
    pub neps: usize,
    pub max_evals: usize,
    /// Fixed initial temperature; otherwise the sample std of f over `init_samples` points.
    pub initial_temperature: Option<f64>,
    pub init_samples: usize,
}

impl Default for AnnealOptions {
    fn default() -> Self {
        Self {
            ns: 20,
            nt: 5,
            rt: 0.85,
            c: 2.0,
            eps: 1e-8,
            neps: 4,
            max_evals: 400_000,
            initial_temperature: None,
            init_samples: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemperatureSummary {
    pub temperature: f64,
    pub acceptance: f64,
    pub f_best: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnealResult {
    pub x_best: Vec<f64>,
    pub f_best: f64,
    pub f_initial: f64,
    pub evals: usize,
    pub initial_temperature: f64,
    pub trace: Vec<TemperatureSummary>,
    pub converged: bool,
}

/// Minimizes `f` over `lb ≤ x ≤ ub` starting from `x0`. Infinite values are
/// treated as infeasible and never accepted.
pub fn anneal<F, R>(mut f: F, lb: &[f64], ub: &[f64], x0: &[f64], opts: &AnnealOptions, rng: &mut R) -> Result<AnnealResult>
where
    F: FnMut(&[f64]) -> f64,
    R: Rng,
{
    let n = lb.len();
    assert!(ub.len() == n && x0.len() == n && n > 0);
    if lb.iter().zip(ub).any(|(l, u)| !(l < u)) {
        return Err(Error::InvalidParameter("annealing box must have lb < ub".into()));
    }
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let random_point = |rng: &mut R| -> Vec<f64> { (0..n).map(|h| lb[h] + rng.random::<f64>() * (ub[h] - lb[h])).collect() };

    let mut x = x0.to_vec();
    for h in 0..n {
        x[h] = x[h].clamp(lb[h], ub[h]);
    }
    let mut fx = eval(&x, &mut evals);
    let f_initial = fx;

    let mut samples = Vec::with_capacity(opts.init_samples);
    let mut best_sample: Option<(Vec<f64>, f64)> = None;
    for _ in 0..opts.init_samples {
        let p = random_point(rng);
        let v = eval(&p, &mut evals);
        if v.is_finite() {
            samples.push(v);
            if best_sample.as_ref().is_none_or(|(_, b)| v < *b) {
                best_sample = Some((p, v));
            }
        }
    }
    if !fx.is_finite() {
        match best_sample {
            Some((p, v)) => {
                x = p;
                fx = v;
            }
            None => return Err(Error::NoFeasiblePoint(opts.init_samples + 1)),
        }
    }
    let t0 = match opts.initial_temperature {
        Some(t) => t,
        None if samples.len() >= 2 => {
            let m = samples.iter().sum::<f64>() / samples.len() as f64;
            let var = samples.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (samples.len() - 1) as f64;
            if var > 0.0 {
                var.sqrt()
            } else {
                1.0
            }
        }
        None => 1.0,
    };

    let mut x_best = x.clone();
    let mut f_best = fx;
    let mut vm: Vec<f64> = (0..n).map(|h| 0.5 * (ub[h] - lb[h])).collect();
    let mut temp = t0;
    let mut fstar = vec![f64::INFINITY; opts.neps.max(1)];
    let mut trace = Vec::new();
    let mut converged = false;

    'outer: loop {
        let mut accepted_total = 0usize;
        let mut trials_total = 0usize;
        for _ in 0..opts.nt {
            let mut nacp = vec![0usize; n];
            for _ in 0..opts.ns {
                for h in 0..n {
                    if evals >= opts.max_evals {
                        break 'outer;
                    }
                    let mut xp = x.clone();
                    let step = vm[h] * (2.0 * rng.random::<f64>() - 1.0);
                    xp[h] = x[h] + step;
                    if xp[h] < lb[h] || xp[h] > ub[h] {
                        xp[h] = lb[h] + rng.random::<f64>() * (ub[h] - lb[h]);
                    }
                    let fp = eval(&xp, &mut evals);
                    trials_total += 1;
                    let accept = if fp <= fx {
                        true
                    } else if fp.is_finite() {
                        rng.random::<f64>() < ((fx - fp) / temp).exp()
                    } else {
                        false
                    };
                    if accept {
                        x = xp;
                        fx = fp;
                        nacp[h] += 1;
                        accepted_total += 1;
                        if fx < f_best {
                            f_best = fx;
                            x_best = x.clone();
                        }
                    }
                }
            }
            for h in 0..n {
                let ratio = nacp[h] as f64 / opts.ns as f64;
                if ratio > 0.6 {
                    vm[h] *= 1.0 + opts.c * (ratio - 0.6) / 0.4;
                } else if ratio < 0.4 {
                    vm[h] /= 1.0 + opts.c * (0.4 - ratio) / 0.4;
                }
                vm[h] = vm[h].min(ub[h] - lb[h]);
            }
        }
        trace.push(TemperatureSummary {
            temperature: temp,
            acceptance: accepted_total as f64 / trials_total.max(1) as f64,
            f_best,
        });
        fstar.rotate_right(1);
        fstar[0] = fx;
        if (fx - f_best).abs() <= opts.eps && fstar.iter().all(|&v| (v - fx).abs() <= opts.eps) {
            converged = true;
            break;
        }
        temp *= opts.rt;
        x = x_best.clone();
        fx = f_best;
    }

    Ok(AnnealResult {
        x_best,
        f_best,
        f_initial,
        evals,
        initial_temperature: t0,
        trace,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn finds_quadratic_minimum() {
        let f = |x: &[f64]| (x[0] - 1.3).powi(2) + 3.0 * (x[1] + 0.7).powi(2);
        let r = anneal(f, &[-5.0, -5.0], &[5.0, 5.0], &[4.0, 4.0], &AnnealOptions::default(), &mut stream(1, "annealer")).unwrap();
        assert!(r.converged);
        assert!((r.x_best[0] - 1.3).abs() < 1e-3 && (r.x_best[1] + 0.7).abs() < 1e-3, "{:?}", r.x_best);
        assert!(r.f_best <= r.f_initial);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let f = |x: &[f64]| (x[0] * x[0] - 2.0).abs() + (x[1] - x[0]).powi(2);
        let o = AnnealOptions::default();
        let a = anneal(f, &[0.0, 0.0], &[3.0, 3.0], &[0.1, 0.1], &o, &mut stream(5, "annealer")).unwrap();
        let b = anneal(f, &[0.0, 0.0], &[3.0, 3.0], &[0.1, 0.1], &o, &mut stream(5, "annealer")).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn best_so_far_is_monotone_and_feasible() {
        let f = |x: &[f64]| if x[0] + x[1] > 1.0 { f64::INFINITY } else { (x[0] - 0.8).powi(2) + x[1].powi(2) };
        let r = anneal(f, &[0.0, 0.0], &[1.0, 1.0], &[0.0, 0.0], &AnnealOptions::default(), &mut stream(2, "annealer")).unwrap();
        assert!(r.trace.windows(2).all(|w| w[1].f_best <= w[0].f_best));
        assert!(r.x_best[0] + r.x_best[1] <= 1.0);
    }

    #[test]
    fn reports_infeasible_problem() {
        let f = |_: &[f64]| f64::INFINITY;
        let err = anneal(f, &[0.0], &[1.0], &[0.5], &AnnealOptions::default(), &mut stream(2, "annealer")).unwrap_err();
        assert!(matches!(err, Error::NoFeasiblePoint(_)));
    }
}
