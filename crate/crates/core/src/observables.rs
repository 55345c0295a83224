//! Diagnostics of reduced trajectories and comparison metrics.

use serde::{Deserialize, Serialize};

use crate::dynamics::{eigh3, min_eigenvalue3, Mat3, Trajectory};
use crate::error::{Error, Result};
use crate::operator::{c, C64};
use crate::spin_model::build_spin1_ops;

#[derive(Debug, Clone, PartialEq)]
pub struct ObservableSeries {
    pub times: Vec<f64>,
    pub sx: Vec<f64>,
    pub sy: Vec<f64>,
    pub sz: Vec<f64>,
    pub purity: Vec<f64>,
    /// Populations of the H + 𝓑̄S eigenstates, ascending energy.
    pub rho_diag: Vec<[f64; 3]>,
    /// Rotating-frame coherences σ₁₂, σ₁₃, σ₂₃ in the same eigenbasis.
    pub sigma_offdiag: Vec<[C64; 3]>,
    pub min_eig: Vec<f64>,
}

/// Column names of [`ObservableSeries::columns`], in order.
pub const OBSERVABLE_COLUMNS: [&str; 15] = [
    "t", "Sx", "Sy", "Sz", "purity", "rho11", "rho22", "rho33", "re_sigma12", "im_sigma12", "re_sigma13", "im_sigma13",
    "re_sigma23", "im_sigma23", "min_eig",
];

impl ObservableSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// One row per time, columns as in [`OBSERVABLE_COLUMNS`].
    pub fn rows(&self) -> Vec<[f64; 15]> {
        (0..self.len())
            .map(|j| {
                let d = self.rho_diag[j];
                let o = self.sigma_offdiag[j];
                [
                    self.times[j],
                    self.sx[j],
                    self.sy[j],
                    self.sz[j],
                    self.purity[j],
                    d[0],
                    d[1],
                    d[2],
                    o[0].re,
                    o[0].im,
                    o[1].re,
                    o[1].im,
                    o[2].re,
                    o[2].im,
                    self.min_eig[j],
                ]
            })
            .collect()
    }

    /// Named real series (everything except `t`).
    pub fn named_series(&self) -> Vec<(&'static str, Vec<f64>)> {
        let rows = self.rows();
        (1..15).map(|k| (OBSERVABLE_COLUMNS[k], rows.iter().map(|r| r[k]).collect())).collect()
    }

    pub fn from_rows(rows: &[[f64; 15]]) -> Self {
        Self {
            times: rows.iter().map(|r| r[0]).collect(),
            sx: rows.iter().map(|r| r[1]).collect(),
            sy: rows.iter().map(|r| r[2]).collect(),
            sz: rows.iter().map(|r| r[3]).collect(),
            purity: rows.iter().map(|r| r[4]).collect(),
            rho_diag: rows.iter().map(|r| [r[5], r[6], r[7]]).collect(),
            sigma_offdiag: rows.iter().map(|r| [c(r[8], r[9]), c(r[10], r[11]), c(r[12], r[13])]).collect(),
            min_eig: rows.iter().map(|r| r[14]).collect(),
        }
    }
}

/// Mean spins, purity, eigenbasis populations, rotating-frame coherences
/// σ(t) = e^{i(H+𝓑̄S)t} ρ(t) e^{−i(H+𝓑̄S)t} and the smallest eigenvalue.
pub fn compute_observables(traj: &Trajectory, h: &Mat3, s: &Mat3, cal_bbar: f64) -> ObservableSeries {
    let ops = build_spin1_ops();
    let to3 = |m: &crate::operator::HermitianOperator| Mat3::from_fn(|i, j| m.matrix()[(i, j)]);
    let (sx, sy, sz) = (to3(&ops.sx), to3(&ops.sy), to3(&ops.sz));
    let (vals, u) = eigh3(&(h + s * c(cal_bbar, 0.0)));
    let ud = u.adjoint();
    let n = traj.times.len();
    let mut out = ObservableSeries {
        times: traj.times.clone(),
        sx: Vec::with_capacity(n),
        sy: Vec::with_capacity(n),
        sz: Vec::with_capacity(n),
        purity: Vec::with_capacity(n),
        rho_diag: Vec::with_capacity(n),
        sigma_offdiag: Vec::with_capacity(n),
        min_eig: Vec::with_capacity(n),
    };
    for (&t, rho) in traj.times.iter().zip(&traj.states) {
        out.sx.push((sx * rho).trace().re);
        out.sy.push((sy * rho).trace().re);
        out.sz.push((sz * rho).trace().re);
        out.purity.push((rho * rho).trace().re);
        let re = ud * rho * u;
        out.rho_diag.push([re[(0, 0)].re, re[(1, 1)].re, re[(2, 2)].re]);
        let rot = |a: usize, b: usize| re[(a, b)] * C64::from_polar(1.0, (vals[a] - vals[b]) * t);
        out.sigma_offdiag.push([rot(0, 1), rot(0, 2), rot(1, 2)]);
        out.min_eig.push(min_eigenvalue3(rho));
    }
    out
}

/// Full rotating-frame matrix σ(t) in the lab basis.
pub fn rotating_frame(rho: &Mat3, h: &Mat3, s: &Mat3, cal_bbar: f64, t: f64) -> Mat3 {
    if t == 0.0 {
        return *rho;
    }
    let (vals, u) = eigh3(&(h + s * c(cal_bbar, 0.0)));
    let ph = Mat3::from_diagonal(&nalgebra::Vector3::from_fn(|i, _| C64::from_polar(1.0, vals[i] * t)));
    let v = u * ph * u.adjoint();
    v * rho * v.adjoint()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesComparison {
    pub name: String,
    pub max_abs: f64,
    /// max|b − a| / max|a| over the whole grid.
    pub rel_error: f64,
    /// |mean(b) − mean(a)| / |mean(a)| over the last tenth of the grid.
    pub long_time_rel: f64,
    pub long_time_a: f64,
    pub long_time_b: f64,
    /// Shift (time units) maximising the cross-correlation of b against a.
    pub lag: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub n_points: usize,
    pub window_start: f64,
    pub series: Vec<SeriesComparison>,
}

impl ComparisonReport {
    pub fn get(&self, name: &str) -> Option<&SeriesComparison> {
        self.series.iter().find(|s| s.name == name)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("points: {}\nlong_time_window_start: {:.6e}\n", self.n_points, self.window_start);
        out.push_str("series max_abs rel_error long_time_rel long_time_a long_time_b lag\n");
        for s in &self.series {
            out.push_str(&format!(
                "{} {:.6e} {:.6e} {:.6e} {:.6e} {:.6e} {:.6e}\n",
                s.name, s.max_abs, s.rel_error, s.long_time_rel, s.long_time_a, s.long_time_b, s.lag
            ));
        }
        out
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        num / den
    }
}

/// Lag (in samples, sub-sample by parabolic refinement) of the peak of the
/// Pearson correlation of b shifted by k against a over their overlap,
/// searched over |k| ≤ max_lag. Ties go to the smallest |k|.
pub fn cross_correlation_lag(a: &[f64], b: &[f64], max_lag: usize) -> f64 {
    let n = a.len().min(b.len());
    if n < 3 {
        return 0.0;
    }
    let max_lag = max_lag.min(n / 2) as isize;
    let corr = |k: isize| -> f64 {
        let (i0, i1) = ((-k).max(0) as usize, (n as isize - k.max(0)) as usize);
        let x = &a[i0..i1];
        let y = &b[(i0 as isize + k) as usize..(i1 as isize + k) as usize];
        let m = x.len() as f64;
        let (mx, my) = (x.iter().sum::<f64>() / m, y.iter().sum::<f64>() / m);
        let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
        for (p, q) in x.iter().zip(y) {
            let (dp, dq) = (p - mx, q - my);
            sxy += dp * dq;
            sxx += dp * dp;
            syy += dq * dq;
        }
        if sxx == 0.0 || syy == 0.0 {
            0.0
        } else {
            sxy / (sxx * syy).sqrt()
        }
    };
    let vals: Vec<f64> = (-max_lag..=max_lag).map(corr).collect();
    let ml = max_lag as usize;
    let imax = (0..vals.len())
        .max_by(|&i, &j| vals[i].total_cmp(&vals[j]).then(i.abs_diff(ml).cmp(&j.abs_diff(ml)).reverse()))
        .unwrap_or(ml);
    let mut k = imax as f64 - max_lag as f64;
    if imax > 0 && imax + 1 < vals.len() {
        let (y0, y1, y2) = (vals[imax - 1], vals[imax], vals[imax + 1]);
        let den = y0 - 2.0 * y1 + y2;
        if den < 0.0 {
            k += 0.5 * (y0 - y2) / den;
        }
    }
    k
}

/// Per-series errors of `b` against the reference `a`.
pub fn compare(a: &ObservableSeries, b: &ObservableSeries) -> Result<ComparisonReport> {
    if a.times != b.times {
        return Err(Error::GridMismatch(format!("{} vs {} points or differing times", a.len(), b.len())));
    }
    let n = a.len();
    if n == 0 {
        return Err(Error::GridMismatch("empty series".into()));
    }
    let w0 = n - n.div_ceil(10);
    let dt = if n > 1 { a.times[1] - a.times[0] } else { 0.0 };
    let max_lag = 64.min(n / 4);
    let series = a
        .named_series()
        .into_iter()
        .zip(b.named_series())
        .map(|((name, x), (_, y))| {
            let max_abs = x.iter().zip(&y).map(|(p, q)| (q - p).abs()).fold(0.0, f64::max);
            let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let la = x[w0..].iter().sum::<f64>() / (n - w0) as f64;
            let lb = y[w0..].iter().sum::<f64>() / (n - w0) as f64;
            SeriesComparison {
                name: name.to_string(),
                max_abs,
                rel_error: ratio(max_abs, scale),
                long_time_rel: ratio((lb - la).abs(), la.abs()),
                long_time_a: la,
                long_time_b: lb,
                lag: cross_correlation_lag(&x, &y, max_lag) * dt,
            }
        })
        .collect();
    Ok(ComparisonReport {
        n_points: n,
        window_start: a.times[w0],
        series,
    })
}
