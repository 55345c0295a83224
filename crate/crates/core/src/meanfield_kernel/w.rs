//! The relaxation function
//!
//! W(α,β,t) = π^{-1/2} Σ_n Γ((n+1)/2)/n! (−αt)^n (2/(βt))^{n/2+1} J_{n/2+1}(βt).
//!
//! The series is summed with compensated accumulation when its terms stay
//! small. For large αt the terms grow to e^{O(αt)} before cancelling, so W
//! is instead taken from the equivalent integral
//!
//! W = (4/π) ∫_0^{π/2} cos²θ φ(αt cosθ) cos(βt sinθ) dθ,  φ(u) = (1 − e^{−u})/u,
//!
//! by Gauss-Legendre quadrature with a refinement check.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_4, PI};
use std::rc::Rc;

use super::bessel::scaled_bessel_half_orders;
use super::gauss::gauss_legendre;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WOptions {
    /// Series stops after three consecutive terms below `rel_stop · |sum|`.
    pub rel_stop: f64,
    pub max_terms: usize,
    /// Largest tolerated ratio of the biggest series term to |W| before the
    /// quadrature route is used instead.
    pub max_cancellation: f64,
    pub quad_rel_tol: f64,
    pub quad_abs_tol: f64,
    pub max_nodes: usize,
}

impl Default for WOptions {
    fn default() -> Self {
        Self {
            rel_stop: 1e-14,
            max_terms: 400,
            max_cancellation: 1e3,
            quad_rel_tol: 1e-12,
            quad_abs_tol: 1e-15,
            max_nodes: 16384,
        }
    }
}

/// Outcome of summing the series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesSum {
    pub value: f64,
    pub terms: usize,
    pub max_term: f64,
    pub last_term: f64,
    pub converged: bool,
}

/// Neumaier-compensated sum, effectively double-double accumulation.
#[derive(Debug, Default, Clone, Copy)]
struct Compensated {
    sum: f64,
    comp: f64,
}

impl Compensated {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

fn check_args(alpha: f64, beta: f64, t: f64) -> Result<()> {
    if !(alpha.is_finite() && beta.is_finite() && t.is_finite()) {
        return Err(Error::InvalidParameter("W arguments must be finite".into()));
    }
    if beta <= 0.0 {
        return Err(Error::InvalidParameter(format!("W requires beta > 0, got {beta}")));
    }
    if t < 0.0 {
        return Err(Error::InvalidParameter(format!("W requires t >= 0, got {t}")));
    }
    Ok(())
}

/// Direct series summation. Never falls back; reports its own diagnostics.
pub fn w_series(alpha: f64, beta: f64, t: f64, opts: &WOptions) -> Result<SeriesSum> {
    check_args(alpha, beta, t)?;
    if t == 0.0 {
        return Ok(SeriesSum {
            value: 1.0,
            terms: 1,
            max_term: 1.0,
            last_term: 0.0,
            converged: true,
        });
    }
    let x = beta * t;
    let at = alpha * t;
    let max_order = opts.max_terms / 2 + 2;
    let jh = scaled_bessel_half_orders(x, max_order);

    // c_n = Γ((n+1)/2) (−αt)^n / (√π n! Γ(n/2+2)),  c_n = c_{n−2} (αt)² / (n(n+2))
    let mut c_even = 1.0;
    let mut c_odd = -4.0 * at / (3.0 * PI);
    let mut acc = Compensated::default();
    let mut max_term: f64 = 0.0;
    let mut small_run = 0;
    let mut last = 0.0;
    for n in 0..opts.max_terms {
        let cn = if n % 2 == 0 {
            if n >= 2 {
                c_even *= at * at / ((n * (n + 2)) as f64);
            }
            c_even
        } else {
            if n >= 3 {
                c_odd *= at * at / ((n * (n + 2)) as f64);
            }
            c_odd
        };
        // order n/2 + 1 sits at index n + 2
        let term = cn * jh[n + 2];
        acc.add(term);
        max_term = max_term.max(term.abs());
        last = term;
        // Terms only shrink for good once the coefficients decrease.
        let coef_decreasing = at * at < ((n + 1) * (n + 3)) as f64;
        if coef_decreasing && term.abs() < opts.rel_stop * acc.value().abs() && cn.abs() < opts.rel_stop * acc.value().abs() {
            small_run += 1;
            if small_run >= 3 {
                return Ok(SeriesSum {
                    value: acc.value(),
                    terms: n + 1,
                    max_term,
                    last_term: last,
                    converged: true,
                });
            }
        } else {
            small_run = 0;
        }
    }
    Ok(SeriesSum {
        value: acc.value(),
        terms: opts.max_terms,
        max_term,
        last_term: last,
        converged: false,
    })
}

#[inline]
fn phi(u: f64) -> f64 {
    if u.abs() < 1e-300 {
        1.0
    } else {
        -(-u).exp_m1() / u
    }
}

type Nodes = Rc<(Vec<f64>, Vec<f64>)>;

thread_local! {
    static NODE_CACHE: RefCell<HashMap<usize, Nodes>> = RefCell::new(HashMap::new());
}

/// Angles and weights on [0, π/2], memoised per thread. The node count is
/// rounded up to a multiple of 32 to bound the cache.
fn quad_nodes(n: usize) -> Nodes {
    let n = n.div_ceil(32) * 32;
    NODE_CACHE.with(|cache| {
        cache
            .borrow_mut()
            .entry(n)
            .or_insert_with(|| {
                let (x, w) = gauss_legendre(n);
                let th: Vec<f64> = x.iter().map(|&xi| FRAC_PI_4 * (xi + 1.0)).collect();
                // fold (4/π)·(π/4) and cos²θ into the weights
                let wt: Vec<f64> = w.iter().zip(&th).map(|(&wi, &t)| wi * t.cos().powi(2)).collect();
                Rc::new((th, wt))
            })
            .clone()
    })
}

fn w_quad_n(alpha: f64, beta: f64, t: f64, n: usize) -> f64 {
    let nodes = quad_nodes(n);
    let (th, wt) = (&nodes.0[..], &nodes.1[..]);
    let mut acc = Compensated::default();
    for (&a, &w) in th.iter().zip(wt) {
        acc.add(w * phi(alpha * t * a.cos()) * (beta * t * a.sin()).cos());
    }
    acc.value()
}

/// Starting node count. About (α+β)t/4 nodes already resolve the integrand
/// to rounding level for α ≥ 0; twice that is used. Growing integrands
/// (α < 0) start much finer.
fn base_nodes(alpha: f64, beta: f64, t: f64) -> usize {
    if alpha >= 0.0 {
        32 + (0.5 * (alpha + beta) * t).ceil() as usize
    } else {
        48 + 2 * ((alpha.abs() + beta) * t).ceil() as usize
    }
}

/// Quadrature of the integral form with successive node doubling.
pub fn w_quadrature(alpha: f64, beta: f64, t: f64, opts: &WOptions) -> Result<f64> {
    check_args(alpha, beta, t)?;
    let mut n = base_nodes(alpha, beta, t);
    let mut prev = w_quad_n(alpha, beta, t, n);
    loop {
        let n2 = 2 * n;
        if n2 > opts.max_nodes {
            return Err(Error::WSeries {
                alpha,
                beta,
                t,
                reason: "quadrature refinement did not settle".into(),
                terms: n,
                partial: prev,
                last: f64::NAN,
            });
        }
        let cur = w_quad_n(alpha, beta, t, n2);
        if (cur - prev).abs() <= opts.quad_abs_tol + opts.quad_rel_tol * cur.abs() {
            return Ok(cur);
        }
        prev = cur;
        n = n2;
    }
}

/// W(α, β, t) to near double precision.
pub fn eval_w(alpha: f64, beta: f64, t: f64) -> Result<f64> {
    eval_w_with(alpha, beta, t, &WOptions::default())
}

pub fn eval_w_with(alpha: f64, beta: f64, t: f64, opts: &WOptions) -> Result<f64> {
    let s = w_series(alpha, beta, t, opts)?;
    let cancellation = s.max_term / s.value.abs().max(1e-300);
    if s.converged && cancellation <= opts.max_cancellation {
        return Ok(s.value);
    }
    w_quadrature(alpha, beta, t, opts).map_err(|e| match e {
        Error::WSeries { reason, .. } => Error::WSeries {
            alpha,
            beta,
            t,
            reason: format!(
                "series {} (cancellation {cancellation:.2e}); {reason}",
                if s.converged { "lost precision" } else { "hit the term budget" }
            ),
            terms: s.terms,
            partial: s.value,
            last: s.last_term,
        },
        other => other,
    })
}

/// W on the uniform grid t_m = m·dt, m = 0..n_steps, by quadrature with the
/// per-node factors advanced multiplicatively. A second node set 3/2 times
/// larger bounds the discretization error.
pub fn tabulate_w(alpha: f64, beta: f64, dt: f64, n_steps: usize) -> Result<Vec<f64>> {
    tabulate_w_with(alpha, beta, dt, n_steps, &WOptions::default())
}

pub fn tabulate_w_with(alpha: f64, beta: f64, dt: f64, n_steps: usize, opts: &WOptions) -> Result<Vec<f64>> {
    let t_max = dt * n_steps as f64;
    check_args(alpha, beta, t_max)?;
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter("tabulation step must be positive".into()));
    }
    let mut n = base_nodes(alpha, beta, t_max);
    loop {
        let a = tabulate_n(alpha, beta, dt, n_steps, n);
        let n2 = n + n / 2;
        let b = tabulate_n(alpha, beta, dt, n_steps, n2);
        let ok = a
            .iter()
            .zip(&b)
            .all(|(x, y)| (x - y).abs() <= opts.quad_abs_tol.max(1e-14) + 1e-11 * y.abs());
        if ok {
            return Ok(b);
        }
        if 2 * n > opts.max_nodes {
            let m = a
                .iter()
                .zip(&b)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            return Err(Error::WSeries {
                alpha,
                beta,
                t: t_max,
                reason: format!("tabulation refinement did not settle (max change {m:.2e})"),
                terms: n2,
                partial: b[n_steps],
                last: f64::NAN,
            });
        }
        n *= 2;
    }
}

fn tabulate_n(alpha: f64, beta: f64, dt: f64, n_steps: usize, n: usize) -> Vec<f64> {
    let nodes = quad_nodes(n);
    let (th, wt) = (&nodes.0[..], &nodes.1[..]);
    let mut out = vec![0.0; n_steps + 1];
    out[0] = wt.iter().sum::<f64>();
    let inv_m: Vec<f64> = (0..=n_steps).map(|m| if m == 0 { 0.0 } else { 1.0 / m as f64 }).collect();
    // Periodically re-seed the recurrences from direct evaluation.
    const RESEED: usize = 64;
    for (&a, &w) in th.iter().zip(wt) {
        let (ca, sa) = (a.cos(), a.sin());
        let decay_step = (-alpha * dt * ca).exp();
        let (rs, rc) = (beta * dt * sa).sin_cos();
        let (mut dec, mut cr, mut ci) = (1.0, 1.0, 0.0);
        let u_step = alpha * dt * ca;
        let inv_u_step = if u_step != 0.0 { 1.0 / u_step } else { 0.0 };
        for (m, o) in out.iter_mut().enumerate().skip(1) {
            if m % RESEED == 0 {
                let tm = m as f64 * dt;
                dec = (-alpha * tm * ca).exp();
                let (s, c) = (beta * tm * sa).sin_cos();
                cr = c;
                ci = s;
            } else {
                dec *= decay_step;
                let nr = cr * rc - ci * rs;
                ci = cr * rs + ci * rc;
                cr = nr;
            }
            // u is tiny for angles near π/2
            let u = u_step * m as f64;
            let ph = if u.abs() < 1e-3 { phi(u) } else { (1.0 - dec) * inv_u_step * inv_m[m] };
            *o += w * ph * cr;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meanfield_kernel::bessel::bessel_j1;

    #[test]
    fn unity_at_origin() {
        for &a in &[0.0, 0.7, 3.0] {
            for &b in &[0.1, 1.5, 3.0] {
                assert_eq!(eval_w(a, b, 0.0).unwrap(), 1.0);
            }
        }
    }

    #[test]
    fn alpha_zero_closed_form() {
        for &b in &[0.5, 1.0, 2.0] {
            for &t in &[0.1, 3.0, 17.0, 30.0] {
                let x = b * t;
                let want = 2.0 * bessel_j1(x) / x;
                assert!((eval_w(0.0, b, t).unwrap() - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn series_and_quadrature_agree_where_both_work() {
        let o = WOptions::default();
        for &(a, b, t) in &[(0.5, 0.5, 3.0), (1.2, 1.7, 2.0), (0.3, 2.0, 8.0)] {
            let s = w_series(a, b, t, &o).unwrap();
            assert!(s.converged);
            let q = w_quadrature(a, b, t, &o).unwrap();
            assert!((s.value - q).abs() < 1e-12, "{a} {b} {t}: {} vs {q}", s.value);
        }
    }

    #[test]
    fn tabulation_matches_pointwise() {
        let tab = tabulate_w(1.4111, 1.4259, 0.05, 600).unwrap();
        for m in [0usize, 1, 37, 200, 599, 600] {
            let t = m as f64 * 0.05;
            let p = eval_w(1.4111, 1.4259, t).unwrap();
            assert!((tab[m] - p).abs() < 1e-12, "m={m}: {} vs {p}", tab[m]);
        }
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let o = WOptions {
            max_terms: 10,
            ..WOptions::default()
        };
        let s = w_series(1.4, 1.4, 30.0, &o).unwrap();
        assert!(!s.converged);
        let tight = WOptions {
            max_terms: 10,
            max_nodes: 64,
            ..WOptions::default()
        };
        match eval_w_with(1.4, 1.4, 30.0, &tight) {
            Err(Error::WSeries { terms, .. }) => assert_eq!(terms, 10),
            other => panic!("expected a W failure, got {other:?}"),
        }
    }
}
