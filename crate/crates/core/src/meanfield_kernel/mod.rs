//! Mean-field memory functions K⁽⁰⁾(t), K⁽¹⁾(t).

pub mod bessel;
pub mod gauss;
pub mod w;

use serde::{Deserialize, Serialize};

use crate::bath_thermo::BathMoments;
use crate::error::{Error, Result};
use crate::operator::HermitianOperator;
pub use w::{eval_w, tabulate_w, w_quadrature, w_series, SeriesSum, WOptions};

/// Complete-basis means ⟨[X,[Y,·]]⟩ for X, Y ∈ {H, S}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoubleCommutatorMeans {
    pub hh: f64,
    /// ⟨[S,[H,·]]⟩
    pub sh: f64,
    /// ⟨[H,[S,·]]⟩
    pub hs: f64,
    pub ss: f64,
}

/// (2/N²)(N Tr{XY} − Tr{X} Tr{Y}).
pub fn double_commutator_mean(x: &HermitianOperator, y: &HermitianOperator) -> f64 {
    let n = x.dim() as f64;
    2.0 / (n * n) * (n * x.trace_product(y) - x.trace() * y.trace())
}

pub fn double_commutator_means(h: &HermitianOperator, s: &HermitianOperator) -> DoubleCommutatorMeans {
    DoubleCommutatorMeans {
        hh: double_commutator_mean(h, h),
        sh: double_commutator_mean(s, h),
        hs: double_commutator_mean(h, s),
        ss: double_commutator_mean(s, s),
    }
}

/// One mean-field channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub i_hat: f64,
    pub aa: f64,
    pub aa_dag: f64,
    pub mf_alpha: f64,
    pub mf_beta: f64,
}

impl Channel {
    fn from_parts(k: usize, i_hat: f64, aa: f64, aa_dag: f64) -> Result<Self> {
        let prod = i_hat * aa_dag;
        if !(prod > 0.0) {
            return Err(Error::ChannelNormalizer { channel: k, value: prod });
        }
        // Ratios to Î keep the sign of (α, β) independent of the sign of Î;
        // for Î > 0 this is (AA† ∓ AA)/√(Î AA†).
        let (a, ad) = (aa / i_hat, aa_dag / i_hat);
        let r = ad.sqrt();
        Ok(Self {
            i_hat,
            aa,
            aa_dag,
            mf_alpha: (ad - a) / r,
            mf_beta: (ad + a) / r,
        })
    }

    /// W decays only when β > |α|.
    pub fn decays(&self) -> bool {
        self.mf_beta > 0.0 && self.mf_beta >= self.mf_alpha.abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub channels: [Channel; 3],
}

/// Assembles the three channels from the double-commutator means and bath moments.
pub fn channel_params(dc: &DoubleCommutatorMeans, m: &BathMoments) -> Result<ChannelParams> {
    let (hh, sh, hs, ss) = (dc.hh, dc.sh, dc.hs, dc.ss);
    let (bb, cb) = (m.bbar, m.cal_bbar);
    let (cb2, cb3, cb4) = (m.cal_b2, m.cal_b3, m.cal_b4);
    let (b2, b3) = (m.b2bar, m.b3bar);
    let [t0, t1, t2, t3] = m.tr_b;
    let (lb, l2, bl2) = (m.lambda_bar, m.tr_lambda2, m.tr_b_lambda2);
    let kubo = m.kubo_combo;
    let sym = sh + hs;

    let aa1 = hh * (bb - cb)
        + sh * (b2 - cb2 - cb * (bb - cb))
        + hs * (b2 - bb * cb)
        + ss * (b3 - b2 * cb - bb * cb2 + cb * cb * bb);
    let aad1 = hh * (bb - cb - lb * (t1 - t0 * cb))
        + sym * (b2 - cb * bb - lb * (t2 - t1 * cb))
        + ss * (b3 - b2 * cb - lb * (t3 - t2 * cb));

    let aa2 = hs * (cb2 - cb * cb) + ss * (cb3 - 2.0 * cb2 * cb + cb * cb * cb);
    let aad2 = hh * l2 * (t0 * cb - t1)
        + sym * (cb2 - cb * cb - l2 * (t2 - t1 * cb))
        + ss * (cb3 - cb2 * cb - l2 * (t3 - t2 * cb));

    let aa3 = hh * (cb2 - cb * cb)
        + sh * (cb3 - 2.0 * cb2 * cb + cb * cb * cb)
        + hs * (cb3 - cb * cb2)
        + ss * (cb4 - cb3 * cb - cb2 * cb2 + cb * cb * cb2)
        + kubo;
    let aad3 = hh * (cb2 - cb * cb - bl2 * (t1 - t0 * cb))
        + sym * (cb3 - cb2 * cb - bl2 * (t2 - t1 * cb))
        + ss * (cb4 - cb3 * cb - bl2 * (t3 - t2 * cb))
        + kubo;

    Ok(ChannelParams {
        channels: [
            Channel::from_parts(1, bb, aa1, aad1)?,
            Channel::from_parts(2, cb, aa2, aad2)?,
            Channel::from_parts(3, cb2, aa3, aad3)?,
        ],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanFieldKernel {
    pub channels: ChannelParams,
    pub bbar: f64,
    pub cal_bbar: f64,
    pub cal_b2: f64,
}

impl MeanFieldKernel {
    pub fn new(dc: &DoubleCommutatorMeans, m: &BathMoments) -> Result<Self> {
        Ok(Self {
            channels: channel_params(dc, m)?,
            bbar: m.bbar,
            cal_bbar: m.cal_bbar,
            cal_b2: m.cal_b2,
        })
    }

    /// K⁽¹⁾(0) = 𝓑² − 𝓑̄².
    pub fn k1_at_zero(&self) -> f64 {
        self.cal_b2 - self.cal_bbar * self.cal_bbar
    }

    fn ch(&self, k: usize) -> &Channel {
        &self.channels.channels[k - 1]
    }
}

pub fn eval_k1_mf(k: &MeanFieldKernel, t: f64) -> Result<f64> {
    let (c2, c3) = (k.ch(2), k.ch(3));
    Ok(k.cal_b2 * eval_w(c3.mf_alpha, c3.mf_beta, t)?
        - k.cal_bbar * k.cal_bbar * eval_w(c2.mf_alpha, c2.mf_beta, t)?)
}

pub fn eval_k0_mf(k: &MeanFieldKernel, t: f64) -> Result<f64> {
    let (c1, c2) = (k.ch(1), k.ch(2));
    Ok(k.bbar * eval_w(c1.mf_alpha, c1.mf_beta, t)? - k.cal_bbar * eval_w(c2.mf_alpha, c2.mf_beta, t)?)
}

/// (K⁽⁰⁾, K⁽¹⁾) on t_m = m·dt, m = 0..=n_steps.
pub fn tabulate_mf(k: &MeanFieldKernel, dt: f64, n_steps: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let [c1, c2, c3] = k.channels.channels;
    let w1 = tabulate_w(c1.mf_alpha, c1.mf_beta, dt, n_steps)?;
    let w2 = tabulate_w(c2.mf_alpha, c2.mf_beta, dt, n_steps)?;
    let w3 = tabulate_w(c3.mf_alpha, c3.mf_beta, dt, n_steps)?;
    let k0 = w1.iter().zip(&w2).map(|(a, b)| k.bbar * a - k.cal_bbar * b).collect();
    let cb2 = k.cal_bbar * k.cal_bbar;
    let k1 = w3.iter().zip(&w2).map(|(a, b)| k.cal_b2 * a - cb2 * b).collect();
    Ok((k0, k1))
}

/// K⁽¹⁾ only; skips channel 1.
pub fn tabulate_k1_mf(k: &MeanFieldKernel, dt: f64, n_steps: usize) -> Result<Vec<f64>> {
    let [_, c2, c3] = k.channels.channels;
    let w2 = tabulate_w(c2.mf_alpha, c2.mf_beta, dt, n_steps)?;
    let w3 = tabulate_w(c3.mf_alpha, c3.mf_beta, dt, n_steps)?;
    let cb2 = k.cal_bbar * k.cal_bbar;
    Ok(w3.iter().zip(&w2).map(|(a, b)| k.cal_b2 * a - cb2 * b).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin_model::{build_spin1_ops, build_system_hamiltonian, SystemParams};

    fn table3_kernel() -> MeanFieldKernel {
        let ch = |a: f64, b: f64| Channel {
            i_hat: 1.0,
            aa: 0.0,
            aa_dag: 0.0,
            mf_alpha: a,
            mf_beta: b,
        };
        MeanFieldKernel {
            channels: ChannelParams {
                channels: [ch(1.4111, 1.4259), ch(1.3935, 1.3951), ch(1.1953, 1.7843)],
            },
            bbar: 9.3513e-2,
            cal_bbar: 9.3276e-2,
            cal_b2: 9.8692e-3,
        }
    }

    #[test]
    fn nv_closed_forms() {
        let p = SystemParams::default();
        let dc = double_commutator_means(&build_system_hamiltonian(&p), &build_spin1_ops().sx);
        assert!((dc.ss - 4.0 / 3.0).abs() < 1e-14);
        assert!((dc.hs - 4.0 * p.h_x / 3.0).abs() < 1e-14);
        assert_eq!(dc.hs, dc.sh);
        let hh = (p.d + p.e).powi(2) / 3.0 + 4.0 * p.h_x * p.h_x / 3.0 + (p.d - 3.0 * p.e).powi(2) / 9.0;
        assert!((dc.hh - hh).abs() < 1e-12);
    }

    #[test]
    fn table3_values_at_origin() {
        let k = table3_kernel();
        let k1 = eval_k1_mf(&k, 0.0).unwrap();
        assert!((k1 - k.k1_at_zero()).abs() < 1e-15);
        assert!((k1 - 1.1689e-3).abs() < 1e-6);
        let k0 = eval_k0_mf(&k, 0.0).unwrap();
        assert!((k0 - 2.37e-4).abs() < 1e-15);
    }

    #[test]
    fn table3_kernel_decays_by_thirty() {
        let k = table3_kernel();
        assert!(eval_k1_mf(&k, 30.0).unwrap().abs() < 0.02 * k.k1_at_zero());
    }

    #[test]
    fn identical_channels_cancel() {
        let mut k = table3_kernel();
        k.channels.channels[2] = k.channels.channels[1];
        k.cal_b2 = k.cal_bbar * k.cal_bbar;
        for t in [0.0, 1.0, 12.5, 30.0] {
            assert!(eval_k1_mf(&k, t).unwrap().abs() < 1e-18);
        }
    }

    #[test]
    fn tabulation_matches_pointwise_kernel() {
        let k = table3_kernel();
        let (k0, k1) = tabulate_mf(&k, 0.05, 600).unwrap();
        for m in [0usize, 10, 300, 600] {
            let t = 0.05 * m as f64;
            assert!((k1[m] - eval_k1_mf(&k, t).unwrap()).abs() < 1e-14);
            assert!((k0[m] - eval_k0_mf(&k, t).unwrap()).abs() < 1e-14);
        }
    }

    #[test]
    fn symmetric_channel_has_equal_alpha_beta() {
        let c = Channel::from_parts(1, 0.3, 0.0, 0.7).unwrap();
        assert_eq!(c.mf_alpha, c.mf_beta);
        assert!(matches!(Channel::from_parts(2, -0.1, 0.0, 1.0), Err(Error::ChannelNormalizer { channel: 2, .. })));
        let pos = Channel::from_parts(1, 0.3, 0.05, 0.7).unwrap();
        let neg = Channel::from_parts(1, -0.3, -0.05, -0.7).unwrap();
        assert!((pos.mf_alpha - (0.7 - 0.05) / (0.3f64 * 0.7).sqrt()).abs() < 1e-15);
        assert_eq!((pos.mf_alpha, pos.mf_beta), (neg.mf_alpha, neg.mf_beta));
    }
}
