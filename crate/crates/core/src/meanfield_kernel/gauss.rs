//! Gauss-Legendre nodes and weights.

/// Nodes and weights on [−1, 1], nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { z } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = nf * (z * p - pm1) / (z * z - 1.0);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        for n in [1usize, 2, 5, 16, 97, 400] {
            let (x, w) = gauss_legendre(n);
            let total: f64 = w.iter().sum();
            assert!((total - 2.0).abs() < 1e-13, "n={n}");
            let deg = (2 * n - 1).min(20);
            let poly: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(deg as i32 - (deg as i32 % 2))).sum();
            let p = (deg - deg % 2) as f64;
            assert!((poly - 2.0 / (p + 1.0)).abs() < 1e-13, "n={n}");
        }
    }

    #[test]
    fn integrates_oscillatory_function() {
        let (x, w) = gauss_legendre(64);
        let v: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * (10.0 * xi).cos()).sum();
        assert!((v - 2.0 * 10f64.sin() / 10.0).abs() < 1e-14);
    }
}
