//! Rational-transform kernel model
//!
//! K̃⁽¹⁾(z) = K⁽¹⁾(0) z(z+β) / (z³+μz²+νz+γ),  K̃⁽⁰⁾(z) = K⁽⁰⁾(0) z(z+α) / (z³+μz²+νz+γ),
//!
//! its constraint validator and the exponential-sum time-domain forms.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::C64;

/// Bound on the kernel variables X_k.
pub const X_BOUND: f64 = 200.0;

/// Model coefficients. z and β, μ^(1), ν^(1/2), γ^(1/3) are in ns⁻¹.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmeParams {
    pub beta_s: f64,
    pub mu: f64,
    pub nu: f64,
    pub gamma: f64,
    /// K⁽¹⁾(0) in GHz².
    pub k1_0: f64,
    /// Sign of K⁽⁰⁾(0) = ±√K⁽¹⁾(0); positive by default.
    #[serde(default = "positive")]
    pub k0_positive: bool,
}

fn positive() -> bool {
    true
}

impl SmeParams {
    pub fn new(beta_s: f64, mu: f64, nu: f64, gamma: f64, k1_0: f64) -> Self {
        Self {
            beta_s,
            mu,
            nu,
            gamma,
            k1_0,
            k0_positive: true,
        }
    }

    pub fn lambda(&self) -> f64 {
        self.beta_s - self.mu
    }

    pub fn alpha_s(&self) -> f64 {
        self.beta_s + self.lambda() / 4.0
    }

    pub fn k0_0(&self) -> f64 {
        let r = self.k1_0.max(0.0).sqrt();
        if self.k0_positive {
            r
        } else {
            -r
        }
    }

    pub fn v0(&self) -> f64 {
        self.nu - self.mu * self.beta_s + self.beta_s * self.beta_s
    }

    /// V(t) = (V0 − γ/β) e^{−βt} + γ/β.
    pub fn v(&self, t: f64) -> f64 {
        let g = self.gamma / self.beta_s;
        (self.v0() - g) * (-self.beta_s * t).exp() + g
    }

    /// Δ(t) = −V′(t) = β (V0 − γ/β) e^{−βt}.
    pub fn delta(&self, t: f64) -> f64 {
        self.beta_s * (self.v0() - self.gamma / self.beta_s) * (-self.beta_s * t).exp()
    }

    /// R(t) = (α−β) K⁽⁰⁾(0)/K⁽¹⁾(0) e^{−βt}.
    pub fn r(&self, t: f64) -> f64 {
        if self.k1_0 == 0.0 {
            return 0.0;
        }
        (self.alpha_s() - self.beta_s) * self.k0_0() / self.k1_0 * (-self.beta_s * t).exp()
    }

    /// K̃⁽¹⁾(z).
    pub fn k1_laplace(&self, z: C64) -> C64 {
        self.k1_0 * z * (z + self.beta_s) / self.denominator(z)
    }

    /// K̃⁽⁰⁾(z).
    pub fn k0_laplace(&self, z: C64) -> C64 {
        self.k0_0() * z * (z + self.alpha_s()) / self.denominator(z)
    }

    fn denominator(&self, z: C64) -> C64 {
        ((z + self.mu) * z + self.nu) * z + self.gamma
    }
}

/// β = X₁, μ = β + X₂ + 2√X₃, ν = X₃ + μβ − β², γ = X₄.
pub fn sme_from_x(x: [f64; 4], k1_0: f64) -> Result<SmeParams> {
    if let Some((i, v)) = x.iter().enumerate().find(|(_, v)| !(**v >= 0.0) || !v.is_finite()) {
        return Err(Error::InvalidParameter(format!("X{} = {v} must be finite and non-negative", i + 1)));
    }
    let beta = x[0];
    let mu = beta + x[1] + 2.0 * x[2].sqrt();
    let nu = x[2] + mu * beta - beta * beta;
    Ok(SmeParams::new(beta, mu, nu, x[3], k1_0))
}

/// Inverse of [`sme_from_x`] for parameters in its image.
pub fn x_from_sme(p: &SmeParams) -> [f64; 4] {
    let x3 = p.v0();
    [p.beta_s, p.mu - p.beta_s - 2.0 * x3.max(0.0).sqrt(), x3, p.gamma]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintEntry {
    pub name: String,
    pub value: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub entries: Vec<ConstraintEntry>,
}

impl ConstraintReport {
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.satisfied)
    }

    pub fn failures(&self) -> Vec<&ConstraintEntry> {
        self.entries.iter().filter(|e| !e.satisfied).collect()
    }

    /// `name: value: pass|fail` lines.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for e in &self.entries {
            s.push_str(&format!(
                "{}: {:.10e}: {}\n",
                e.name,
                e.value,
                if e.satisfied { "pass" } else { "fail" }
            ));
        }
        s
    }

    fn push(&mut self, name: &str, value: f64, satisfied: bool) {
        self.entries.push(ConstraintEntry {
            name: name.into(),
            value,
            satisfied,
        });
    }
}

/// Evaluates every positivity and equilibration condition of the model.
/// Each entry's value is the quantity that must be positive (or the slack).
pub fn validate_constraints(p: &SmeParams) -> ConstraintReport {
    let mut r = ConstraintReport { entries: Vec::new() };
    let lam = p.lambda();
    let alpha = p.alpha_s();
    r.push("beta_positive", p.beta_s, p.beta_s > 0.0);
    r.push("gamma_positive", p.gamma, p.gamma > 0.0);
    r.push("v0_positive", p.v0(), p.v0() > 0.0);
    r.push("r_monotone_3beta_gt_mu", 3.0 * p.beta_s - p.mu, 3.0 * p.beta_s > p.mu);
    r.push("k1_0_positive", p.k1_0, p.k1_0 > 0.0);
    let k0_gap = p.k0_0().abs() - p.k1_0.max(0.0).sqrt();
    r.push("k0_0_equals_sqrt_k1_0", k0_gap, k0_gap == 0.0 && p.k1_0 >= 0.0);
    r.push("alpha_le_beta", p.beta_s - alpha, p.beta_s >= alpha);
    r.push("alpha_ge_beta_plus_half_lambda", alpha - (p.beta_s + lam / 2.0), alpha >= p.beta_s + lam / 2.0);
    r.push("lambda_negative", lam, lam < 0.0);
    let slack = lam * lam / 4.0 - p.v0();
    r.push("lambda_sq_quarter_ge_v0", slack, slack >= 0.0);
    // R(t) is a single decaying exponential, so its sign never changes.
    r.push("r_sign_constant", p.r(0.0), true);
    r
}

/// Roots of z³ + μz² + νz + γ from the companion matrix, Newton-polished,
/// sorted by real then imaginary part. Complex pairs are made exactly conjugate.
pub fn cubic_roots(mu: f64, nu: f64, gamma: f64) -> Result<[C64; 3]> {
    if !(mu.is_finite() && nu.is_finite() && gamma.is_finite()) {
        return Err(Error::InvalidParameter("cubic coefficients must be finite".into()));
    }
    let comp = Matrix3::new(-mu, -nu, -gamma, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0);
    let ev = comp.complex_eigenvalues();
    let p = |z: C64| ((z + mu) * z + nu) * z + gamma;
    let dp = |z: C64| (3.0 * z + 2.0 * mu) * z + nu;
    let mut roots = [ev[0], ev[1], ev[2]];
    for z in roots.iter_mut() {
        for _ in 0..3 {
            let d = dp(*z);
            if d.norm() == 0.0 {
                break;
            }
            let step = p(*z) / d;
            let next = *z - step;
            if p(next).norm() < p(*z).norm() {
                *z = next;
            } else {
                break;
            }
        }
    }
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    // Enforce exact conjugate symmetry of a complex pair.
    for i in 0..3 {
        for j in (i + 1)..3 {
            let (a, b) = (roots[i], roots[j]);
            if a.im != 0.0 && (a - b.conj()).norm() < 1e-6 * a.norm().max(1.0) {
                let re = 0.5 * (a.re + b.re);
                let im = 0.5 * (a.im.abs() + b.im.abs());
                roots[i] = C64::new(re, -im);
                roots[j] = C64::new(re, im);
            }
        }
    }
    // A vanishing discriminant flags a double root that rounding has split by ~√ε.
    let disc_terms = [
        18.0 * mu * nu * gamma,
        -4.0 * mu.powi(3) * gamma,
        mu * mu * nu * nu,
        -4.0 * nu.powi(3),
        -27.0 * gamma * gamma,
    ];
    let disc: f64 = disc_terms.iter().sum();
    let disc_scale: f64 = disc_terms.iter().map(|x| x.abs()).sum();
    if disc.abs() <= 1e-14 * disc_scale {
        let sep = (0..3)
            .flat_map(|i| ((i + 1)..3).map(move |j| (i, j)))
            .map(|(i, j)| (roots[i] - roots[j]).norm())
            .fold(f64::INFINITY, f64::min);
        return Err(Error::RepeatedRoots(sep));
    }
    for i in 0..3 {
        for j in (i + 1)..3 {
            let sep = (roots[i] - roots[j]).norm();
            if sep <= 1e-8 * roots[i].norm().max(1.0) {
                return Err(Error::RepeatedRoots(sep));
            }
        }
    }
    Ok(roots)
}

/// Exponential-sum representation of both kernels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmeKernel {
    pub params: SmeParams,
    pub roots: [C64; 3],
    /// K⁽¹⁾(t) = Re Σ a_k e^{z_k t}
    pub a: [C64; 3],
    /// K⁽⁰⁾(t) = Re Σ b_k e^{z_k t}
    pub b: [C64; 3],
}

pub fn expsum_weights(p: &SmeParams) -> Result<SmeKernel> {
    let roots = cubic_roots(p.mu, p.nu, p.gamma)?;
    let mut a = [C64::new(0.0, 0.0); 3];
    let mut b = [C64::new(0.0, 0.0); 3];
    let k0 = p.k0_0();
    let alpha = p.alpha_s();
    for k in 0..3 {
        let z = roots[k];
        let mut den = C64::new(1.0, 0.0);
        for (j, &zj) in roots.iter().enumerate() {
            if j != k {
                den *= z - zj;
            }
        }
        a[k] = p.k1_0 * z * (z + p.beta_s) / den;
        b[k] = k0 * z * (z + alpha) / den;
    }
    Ok(SmeKernel {
        params: *p,
        roots,
        a,
        b,
    })
}

impl SmeKernel {
    pub fn new(p: &SmeParams) -> Result<Self> {
        expsum_weights(p)
    }

    fn sum(w: &[C64; 3], roots: &[C64; 3], t: f64) -> C64 {
        w.iter().zip(roots).map(|(&wk, &z)| wk * (z * t).exp()).sum()
    }

    /// Real part and imaginary residue of the K⁽¹⁾ exponential sum.
    pub fn k1_complex(&self, t: f64) -> C64 {
        Self::sum(&self.a, &self.roots, t)
    }

    pub fn k0_complex(&self, t: f64) -> C64 {
        Self::sum(&self.b, &self.roots, t)
    }
}

pub fn eval_k1_sme(k: &SmeKernel, t: f64) -> f64 {
    if t == 0.0 {
        return k.params.k1_0;
    }
    k.k1_complex(t).re
}

pub fn eval_k0_sme(k: &SmeKernel, t: f64) -> f64 {
    if t == 0.0 {
        return k.params.k0_0();
    }
    k.k0_complex(t).re
}

/// κ = K⁽¹⁾(0) β / γ.
pub fn kappa(p: &SmeParams) -> Result<f64> {
    if p.gamma == 0.0 {
        return Err(Error::InvalidParameter("kappa undefined for gamma = 0".into()));
    }
    Ok(p.k1_0 * p.beta_s / p.gamma)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityReport {
    pub v_min: f64,
    pub v_nonnegative: bool,
    pub delta_min: f64,
    pub delta_nonnegative: bool,
}

impl MonotonicityReport {
    pub fn to_text(&self) -> String {
        format!(
            "v_nonnegative: {:.10e}: {}\ndelta_nonnegative: {:.10e}: {}\n",
            self.v_min,
            if self.v_nonnegative { "pass" } else { "fail" },
            self.delta_min,
            if self.delta_nonnegative { "pass" } else { "fail" }
        )
    }
}

/// Checks V(t) ≥ 0 and Δ(t) = −V′(t) ≥ 0 on `times`.
pub fn complete_monotonicity_check(p: &SmeParams, times: &[f64]) -> MonotonicityReport {
    let v_min = times.iter().map(|&t| p.v(t)).fold(f64::INFINITY, f64::min);
    let delta_min = times.iter().map(|&t| p.delta(t)).fold(f64::INFINITY, f64::min);
    MonotonicityReport {
        v_min,
        v_nonnegative: v_min >= 0.0,
        delta_min,
        delta_nonnegative: delta_min >= 0.0,
    }
}

/// (K⁽⁰⁾, K⁽¹⁾, V, R) on t_m = m·dt.
pub fn tabulate_sme(k: &SmeKernel, dt: f64, n_steps: usize) -> Vec<[f64; 5]> {
    (0..=n_steps)
        .map(|m| {
            let t = m as f64 * dt;
            [t, eval_k0_sme(k, t), eval_k1_sme(k, t), k.params.v(t), k.params.r(t)]
        })
        .collect()
}
