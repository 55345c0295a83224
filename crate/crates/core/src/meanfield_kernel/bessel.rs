//! Scaled Bessel functions Ĵ_ν(x) = (2/x)^ν Γ(ν+1) J_ν(x) for integer and
//! half-integer orders by Miller backward recurrence.
//!
//! Ĵ_ν(0) = 1 and |Ĵ_ν| ≤ 1 for ν ≥ −1/2. The recurrence is
//! Ĵ_{ν−1} = Ĵ_ν − (x²/4) Ĵ_{ν+1} / (ν(ν+1)).

/// Ĵ_{k/2} for k = 0..=2·max_order, i.e. orders 0, 1/2, 1, 3/2, … .
///
/// Integer orders are normalised with J_0 + 2 Σ J_{2k} = 1; half-integer
/// orders against Ĵ_{1/2} = sin x / x and Ĵ_{−1/2} = cos x.
pub fn scaled_bessel_half_orders(x: f64, max_order: usize) -> Vec<f64> {
    let n = 2 * max_order + 1;
    if x == 0.0 {
        return vec![1.0; n];
    }
    let q = 0.25 * x * x;
    let top = max_order + x.abs().ceil() as usize + 40;
    let mut out = vec![0.0; n];

    // Integer chain, orders top+1 down to 0.
    {
        let mut hi = 1.0 - q / (top as f64 + 2.0);
        let mut mid = 1.0 - q / (top as f64 + 1.0);
        let mut vals = vec![0.0; top + 1];
        vals[top] = mid;
        for m in (1..=top).rev() {
            let nu = m as f64;
            let lo = mid - q * hi / (nu * (nu + 1.0));
            vals[m - 1] = lo;
            hi = mid;
            mid = lo;
            // Keep magnitudes in range for very large x.
            if mid.abs() > 1e250 {
                for v in vals[m - 1..].iter_mut() {
                    *v *= 1e-250;
                }
                hi *= 1e-250;
                mid *= 1e-250;
            }
        }
        // J_{2k} = Ĵ_{2k} (x/2)^{2k} / (2k)!
        let mut sum = vals[0];
        let mut w = 1.0;
        let mut k = 1;
        while 2 * k <= top {
            let kf = (2 * k) as f64;
            w *= q / (kf * (kf - 1.0));
            sum += 2.0 * w * vals[2 * k];
            k += 1;
        }
        let s = 1.0 / sum;
        for m in 0..=max_order {
            out[2 * m] = vals[m] * s;
        }
    }

    // Half-integer chain: orders top+1/2 down to −1/2.
    {
        let mut hi = 1.0 - q / (top as f64 + 2.5);
        let mut mid = 1.0 - q / (top as f64 + 1.5);
        // vals[m] holds order m − 1/2.
        let mut vals = vec![0.0; top + 2];
        vals[top + 1] = mid;
        for m in (1..=top + 1).rev() {
            let nu = m as f64 - 0.5;
            let lo = mid - q * hi / (nu * (nu + 1.0));
            vals[m - 1] = lo;
            hi = mid;
            mid = lo;
            if mid.abs() > 1e250 {
                for v in vals[m - 1..].iter_mut() {
                    *v *= 1e-250;
                }
                hi *= 1e-250;
                mid *= 1e-250;
            }
        }
        let (a, b) = (vals[1], vals[0]);
        let (ta, tb) = (x.sin() / x, x.cos());
        let s = (a * ta + b * tb) / (a * a + b * b);
        for m in 0..max_order {
            out[2 * m + 1] = vals[m + 1] * s;
        }
    }
    out
}

/// J_1(x) from the scaled chain.
pub fn bessel_j1(x: f64) -> f64 {
    let v = scaled_bessel_half_orders(x, 1);
    0.5 * x * v[2]
}
