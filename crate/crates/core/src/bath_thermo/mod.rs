//! Truncated bath eigenbasis, thermal state, Λ weights and bath moments.

pub mod davidson;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{c, eigh_real_sorted, CMatrix, HermitianOperator, C64};
use crate::spin_model::BathOperators;
use davidson::{davidson, DavidsonOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EigenOptions {
    /// Largest bath dimension solved densely; larger ones use Davidson.
    pub dense_limit: usize,
    /// Davidson residual tolerance relative to the largest diagonal magnitude.
    pub rel_tol: f64,
    pub max_iter: usize,
    /// Relative gap below which the level at the cutoff counts as degenerate.
    pub degeneracy_tol: f64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            dense_limit: 1 << 10,
            rel_tol: 1e-9,
            max_iter: 500,
            degeneracy_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncatedBath {
    pub n_b: usize,
    /// Ascending.
    pub evals: Vec<f64>,
    pub b_trunc: HermitianOperatorData,
    /// Solver used and its final residual.
    pub solver: String,
    pub max_residual: f64,
}

/// Serializable row-major complex matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HermitianOperatorData {
    pub dim: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl HermitianOperatorData {
    pub fn from_operator(op: &HermitianOperator) -> Self {
        let n = op.dim();
        let m = op.matrix();
        let mut re = Vec::with_capacity(n * n);
        let mut im = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                re.push(m[(i, j)].re);
                im.push(m[(i, j)].im);
            }
        }
        Self { dim: n, re, im }
    }

    pub fn to_operator(&self) -> Result<HermitianOperator> {
        let n = self.dim;
        if self.re.len() != n * n || self.im.len() != n * n {
            return Err(Error::Artifact("operator data has the wrong length".into()));
        }
        let m = CMatrix::from_fn(n, n, |i, j| c(self.re[i * n + j], self.im[i * n + j]));
        HermitianOperator::new(m)
    }
}

impl TruncatedBath {
    pub fn new(evals: Vec<f64>, b_trunc: &HermitianOperator) -> Result<Self> {
        if evals.len() != b_trunc.dim() {
            return Err(Error::InvalidParameter("eigenvalue count does not match B dimension".into()));
        }
        if evals.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidParameter("eigenvalues must be ascending".into()));
        }
        Ok(Self {
            n_b: evals.len(),
            evals,
            b_trunc: HermitianOperatorData::from_operator(b_trunc),
            solver: "given".into(),
            max_residual: 0.0,
        })
    }

    pub fn b(&self) -> HermitianOperator {
        self.b_trunc.to_operator().expect("stored B is Hermitian")
    }
}

struct Eigenpairs {
    values: Vec<f64>,
    vectors: Vec<Vec<f64>>,
    solver: &'static str,
    residual: f64,
}

fn lowest_eigenpairs(
    h: &crate::pauli::CompiledPauliSum,
    count: usize,
    opts: &EigenOptions,
) -> Result<Eigenpairs> {
    let dim = h.dim();
    if dim <= opts.dense_limit {
        let (vals, vecs) = eigh_real_sorted(&h.to_dense_real());
        let vectors = (0..count).map(|i| vecs.column(i).iter().copied().collect()).collect();
        return Ok(Eigenpairs {
            values: vals[..count].to_vec(),
            vectors,
            solver: "dense",
            residual: 0.0,
        });
    }
    let diag = h.diagonal_real();
    let scale = diag.iter().fold(0.0f64, |m, d| m.max(d.abs())).max(f64::MIN_POSITIVE);
    let dopts = DavidsonOptions {
        tol: opts.rel_tol * scale,
        max_iter: opts.max_iter,
        ..Default::default()
    };
    let res = davidson(|v, out| h.apply_real(v, out), &diag, count, &dopts)?;
    Ok(Eigenpairs {
        values: res.values,
        vectors: res.vectors,
        solver: "davidson",
        residual: res.max_residual,
    })
}

/// Lowest `n_b` eigenpairs of H_B with B projected into them. The cutoff grows
/// to cover a degenerate multiplet straddling it.
pub fn truncate_bath(ops: &BathOperators, n_b: usize, opts: &EigenOptions) -> Result<TruncatedBath> {
    let dim = ops.h_b.dim();
    if n_b == 0 || n_b > dim {
        return Err(Error::InvalidParameter(format!("n_B = {n_b} outside 1..={dim}")));
    }
    // The per-spin I_x eigenbasis makes the Zeeman term diagonal and keeps H_B real.
    let h = ops.h_b.hadamard_rotated().compile();
    let b = ops.b.hadamard_rotated().compile();
    if !h.is_real() {
        return Err(Error::InvalidParameter("bath Hamiltonian must be real in the product basis".into()));
    }
    let mut want = (n_b + (n_b / 4).max(4)).min(dim);
    let (pairs, n_eff) = loop {
        let pairs = lowest_eigenpairs(&h, want, opts)?;
        let scale = pairs
            .values
            .iter()
            .fold(0.0f64, |m, e| m.max(e.abs()))
            .max(f64::MIN_POSITIVE);
        let mut n_eff = n_b;
        while n_eff < pairs.values.len()
            && pairs.values[n_eff] - pairs.values[n_eff - 1] <= opts.degeneracy_tol * scale
        {
            n_eff += 1;
        }
        if n_eff < pairs.values.len() || want == dim {
            break (pairs, n_eff);
        }
        want = (2 * want).min(dim);
    };

    let mut bm = CMatrix::zeros(n_eff, n_eff);
    let mut vc = vec![C64::new(0.0, 0.0); dim];
    let mut w = vec![C64::new(0.0, 0.0); dim];
    for j in 0..n_eff {
        for (z, &x) in vc.iter_mut().zip(&pairs.vectors[j]) {
            *z = c(x, 0.0);
        }
        b.apply(&vc, &mut w);
        for i in 0..n_eff {
            let mut s = C64::new(0.0, 0.0);
            for (&x, &y) in pairs.vectors[i].iter().zip(&w) {
                s += x * y;
            }
            bm[(i, j)] = s;
        }
    }
    let b_trunc = HermitianOperator::symmetrized(&bm);
    Ok(TruncatedBath {
        n_b: n_eff,
        evals: pairs.values[..n_eff].to_vec(),
        b_trunc: HermitianOperatorData::from_operator(&b_trunc),
        solver: pairs.solver.into(),
        max_residual: pairs.residual,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermalState {
    pub weights: Vec<f64>,
}

pub fn thermal_state(tb: &TruncatedBath, kbt: f64) -> Result<ThermalState> {
    if kbt.is_nan() || kbt <= 0.0 {
        return Err(Error::InvalidParameter("kBT must be positive".into()));
    }
    let e0 = tb.evals[0];
    let raw: Vec<f64> = tb.evals.iter().map(|&e| (-(e - e0) / kbt).exp()).collect();
    let z: f64 = raw.iter().sum();
    Ok(ThermalState {
        weights: raw.iter().map(|w| w / z).collect(),
    })
}

/// Λ = ρ_B (1 + Σ_j η_j (H_B^j − ⟨H_B^j⟩)), diagonal in the bath eigenbasis.
pub fn build_lambda(tb: &TruncatedBath, rho_b: &ThermalState, eta: &[f64]) -> Vec<f64> {
    let p = &rho_b.weights;
    let n = tb.n_b;
    let mut corr = vec![0.0; n];
    let mut pow = vec![1.0; n];
    for &eta_j in eta {
        for (x, &e) in pow.iter_mut().zip(&tb.evals) {
            *x *= e;
        }
        let mean: f64 = pow.iter().zip(p).map(|(x, w)| x * w).sum();
        for (cv, &x) in corr.iter_mut().zip(&pow) {
            *cv += eta_j * (x - mean);
        }
    }
    p.iter().zip(&corr).map(|(&w, &cv)| w * (1.0 + cv)).collect()
}

/// Bath traces in the truncated eigenbasis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct BathMoments {
    /// Tr{B ρ_B}
    pub bbar: f64,
    /// Tr{B Λ}
    pub cal_bbar: f64,
    pub cal_b2: f64,
    pub cal_b3: f64,
    pub cal_b4: f64,
    /// Tr{B² ρ_B}, Tr{B³ ρ_B}
    pub b2bar: f64,
    pub b3bar: f64,
    /// Unweighted Tr{B^m}, m = 0..3
    pub tr_b: [f64; 4],
    /// Tr{Λ ρ_B}
    pub lambda_bar: f64,
    pub tr_lambda2: f64,
    pub tr_b_lambda2: f64,
    /// Tr{B H_B² B Λ}, Tr{H_B B H_B B Λ}, Tr{H_B² B² Λ}
    pub kubo3: [f64; 3],
    /// Σ λ_i |B_ij|² (e_i − e_j)², the shift-invariant combination of `kubo3`.
    pub kubo_combo: f64,
}

pub fn bath_moments(tb: &TruncatedBath, rho_b: &ThermalState, lambda: &[f64]) -> BathMoments {
    let b = tb.b();
    let bm = b.matrix();
    let n = tb.n_b;
    let p = &rho_b.weights;
    let b2 = bm * bm;
    let b3 = &b2 * bm;
    let b4 = &b3 * bm;
    let diag = |m: &CMatrix, w: &[f64]| -> f64 { (0..n).map(|i| m[(i, i)].re * w[i]).sum() };
    let ones = vec![1.0; n];
    let e = &tb.evals;
    let mut kubo3 = [0.0; 3];
    let mut combo = 0.0;
    for i in 0..n {
        let mut k = [0.0; 3];
        let mut cmb = 0.0;
        for j in 0..n {
            let a2 = bm[(i, j)].norm_sqr();
            k[0] += a2 * e[j] * e[j];
            k[1] += a2 * e[i] * e[j];
            k[2] += a2 * e[i] * e[i];
            let de = e[i] - e[j];
            cmb += a2 * de * de;
        }
        for (acc, v) in kubo3.iter_mut().zip(k) {
            *acc += lambda[i] * v;
        }
        combo += lambda[i] * cmb;
    }
    BathMoments {
        bbar: diag(bm, p),
        cal_bbar: diag(bm, lambda),
        cal_b2: diag(&b2, lambda),
        cal_b3: diag(&b3, lambda),
        cal_b4: diag(&b4, lambda),
        b2bar: diag(&b2, p),
        b3bar: diag(&b3, p),
        tr_b: [n as f64, diag(bm, &ones), diag(&b2, &ones), diag(&b3, &ones)],
        lambda_bar: lambda.iter().zip(p).map(|(l, w)| l * w).sum(),
        tr_lambda2: lambda.iter().map(|l| l * l).sum(),
        tr_b_lambda2: (0..n).map(|i| lambda[i] * lambda[i] * bm[(i, i)].re).sum(),
        kubo3,
        kubo_combo: combo,
    }
}

impl BathMoments {
    /// Key-value report lines in a fixed order.
    pub fn report_lines(&self) -> Vec<(String, f64)> {
        let mut v = vec![
            ("Bbar".to_string(), self.bbar),
            ("calBbar".into(), self.cal_bbar),
            ("calB2".into(), self.cal_b2),
            ("calB3".into(), self.cal_b3),
            ("calB4".into(), self.cal_b4),
            ("B2bar".into(), self.b2bar),
            ("B3bar".into(), self.b3bar),
        ];
        for (m, t) in self.tr_b.iter().enumerate() {
            v.push((format!("TrB_B{m}"), *t));
        }
        v.push(("LambdaBar".into(), self.lambda_bar));
        v.push(("TrLambda2".into(), self.tr_lambda2));
        v.push(("TrBLambda2".into(), self.tr_b_lambda2));
        v.push(("Kubo3_BHHBL".into(), self.kubo3[0]));
        v.push(("Kubo3_HBHBL".into(), self.kubo3[1]));
        v.push(("Kubo3_HHBBL".into(), self.kubo3[2]));
        v.push(("Kubo_combination".into(), self.kubo_combo));
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin_model::{SpinBathModel, SystemParams};

    fn model(n: usize, positions: Vec<[i32; 3]>) -> SpinBathModel {
        let p = SystemParams {
            n_spins: n,
            ..SystemParams::default()
        };
        SpinBathModel::from_positions(&p, positions).unwrap()
    }

    #[test]
    fn single_spin_zeeman_levels() {
        let m = model(1, vec![[0, 1, 1]]);
        let tb = truncate_bath(&m.bath, 2, &EigenOptions::default()).unwrap();
        let h = m.params.h_x0;
        assert!((tb.evals[0] + h / 2.0).abs() < 1e-16);
        assert!((tb.evals[1] - h / 2.0).abs() < 1e-16);
    }

    #[test]
    fn full_truncation_preserves_trace_of_b() {
        let m = model(3, vec![[1, 0, 0], [0, 2, 1], [1, 1, -2]]);
        let tb = truncate_bath(&m.bath, 8, &EigenOptions::default()).unwrap();
        let full = HermitianOperator::new(m.bath.b.to_dense()).unwrap();
        assert!((tb.b().trace() - full.trace()).abs() < 1e-14);
        assert_eq!(tb.n_b, 8);
    }

    #[test]
    fn thermal_limits_and_normalization() {
        let tb = TruncatedBath::new(vec![-1.0, 0.0, 0.5], &HermitianOperator::identity(3)).unwrap();
        let hot = thermal_state(&tb, 1e12).unwrap();
        assert!(hot.weights.iter().all(|w| (w - 1.0 / 3.0).abs() < 1e-11));
        let cold = thermal_state(&tb, 1e-4).unwrap();
        assert_eq!(cold.weights, vec![1.0, 0.0, 0.0]);
        let mid = thermal_state(&tb, 0.7).unwrap();
        assert!((mid.weights.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn lambda_reduces_to_rho_and_sums_to_one() {
        let tb = TruncatedBath::new(vec![-0.01, -0.004, 0.002, 0.009], &HermitianOperator::identity(4)).unwrap();
        let rho = thermal_state(&tb, 0.005).unwrap();
        assert_eq!(build_lambda(&tb, &rho, &[0.0; 10]), rho.weights);
        let l = build_lambda(&tb, &rho, &[120.0, -3000.0, 5.0e4]);
        assert!((l.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_coupling_moments() {
        let tb = TruncatedBath::new(vec![-0.01, -0.004, 0.002], &HermitianOperator::identity(3)).unwrap();
        let rho = thermal_state(&tb, 0.005).unwrap();
        let l = build_lambda(&tb, &rho, &[40.0, -900.0]);
        let m = bath_moments(&tb, &rho, &l);
        for v in [m.cal_bbar, m.cal_b2, m.cal_b3, m.cal_b4] {
            assert!((v - 1.0).abs() < 1e-12);
        }
        assert_eq!(m.kubo_combo, 0.0);
    }

    #[test]
    fn eta_zero_moments_coincide() {
        let m = model(3, vec![[1, 0, 0], [0, 2, 1], [1, 1, -2]]);
        let tb = truncate_bath(&m.bath, 6, &EigenOptions::default()).unwrap();
        let rho = thermal_state(&tb, 3e-4).unwrap();
        let l = build_lambda(&tb, &rho, &[0.0; 10]);
        let mm = bath_moments(&tb, &rho, &l);
        assert_eq!(mm.bbar, mm.cal_bbar);
        assert_eq!(mm.b2bar, mm.cal_b2);
    }

    #[test]
    fn davidson_agrees_with_dense_on_ten_spins() {
        let p = SystemParams {
            n_spins: 10,
            ..SystemParams::default()
        };
        let mut rng = crate::rng::stream(11, "lattice");
        let m = SpinBathModel::build(&p, &mut rng).unwrap();
        let dense = truncate_bath(&m.bath, 12, &EigenOptions::default()).unwrap();
        let iter = truncate_bath(
            &m.bath,
            12,
            &EigenOptions {
                dense_limit: 16,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(iter.solver, "davidson");
        assert_eq!(dense.n_b, iter.n_b);
        for (a, b) in dense.evals.iter().zip(&iter.evals) {
            assert!((a - b).abs() < 1e-13, "{a} vs {b}");
        }
        // B_trunc is basis-phase dependent; compare gauge-invariant traces.
        let (bd, bi) = (dense.b(), iter.b());
        assert!((bd.trace() - bi.trace()).abs() < 1e-9);
        assert!((bd.trace_product(&bd) - bi.trace_product(&bi)).abs() < 1e-9);
    }
}
