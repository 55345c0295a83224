//! Sparse sums of spin-1/2 Pauli strings on `n` sites.
//!
//! Basis index bit `j` holds site `j` (1 means spin down), so the dense
//! Kronecker order is site `n-1` first.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use std::collections::BTreeMap;

use crate::operator::CMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    X,
    Y,
    Z,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PauliTerm {
    pub coef: C64,
    pub ops: Vec<(usize, Pauli)>,
}

/// Σ coef · σ_{a1}^{(j1)} σ_{a2}^{(j2)} ⋯ with distinct sites per term.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliSum {
    n_sites: usize,
    terms: Vec<PauliTerm>,
}

struct FlipGroup {
    x_mask: usize,
    /// (coefficient including i^{#Y}, mask of sites contributing a (-1)^bit sign)
    parts: Vec<(C64, usize)>,
}

/// Matrix-free form: a precomputed diagonal plus bit-flip groups.
pub struct CompiledPauliSum {
    dim: usize,
    diag: Vec<C64>,
    flips: Vec<FlipGroup>,
    real: bool,
}

impl PauliSum {
    pub fn new(n_sites: usize) -> Self {
        assert!(n_sites < usize::BITS as usize - 1, "too many sites");
        Self {
            n_sites,
            terms: Vec::new(),
        }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        1usize << self.n_sites
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    pub fn push(&mut self, coef: C64, ops: &[(usize, Pauli)]) {
        debug_assert!(ops.iter().all(|&(s, _)| s < self.n_sites));
        if coef == C64::new(0.0, 0.0) {
            return;
        }
        self.terms.push(PauliTerm {
            coef,
            ops: ops.to_vec(),
        });
    }

    /// Conjugation by a Hadamard on every site: X ↔ Z, Y → −Y.
    pub fn hadamard_rotated(&self) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let mut coef = t.coef;
                let ops = t
                    .ops
                    .iter()
                    .map(|&(s, p)| {
                        let q = match p {
                            Pauli::X => Pauli::Z,
                            Pauli::Z => Pauli::X,
                            Pauli::Y => {
                                coef = -coef;
                                Pauli::Y
                            }
                        };
                        (s, q)
                    })
                    .collect();
                PauliTerm { coef, ops }
            })
            .collect();
        Self {
            n_sites: self.n_sites,
            terms,
        }
    }

    pub fn compile(&self) -> CompiledPauliSum {
        let dim = self.dim();
        let mut groups: BTreeMap<usize, Vec<(C64, usize)>> = BTreeMap::new();
        for t in &self.terms {
            let mut x_mask = 0usize;
            let mut sign_mask = 0usize;
            let mut phase = C64::new(1.0, 0.0);
            for &(s, p) in &t.ops {
                let bit = 1usize << s;
                match p {
                    Pauli::X => x_mask |= bit,
                    Pauli::Y => {
                        x_mask |= bit;
                        sign_mask |= bit;
                        phase *= C64::new(0.0, 1.0);
                    }
                    Pauli::Z => sign_mask |= bit,
                }
            }
            groups.entry(x_mask).or_default().push((t.coef * phase, sign_mask));
        }
        let mut diag = vec![C64::new(0.0, 0.0); dim];
        let mut flips = Vec::new();
        for (x_mask, parts) in groups {
            if x_mask == 0 {
                for (s, d) in diag.iter_mut().enumerate() {
                    for &(cf, sm) in &parts {
                        *d += sign(s & sm) * cf;
                    }
                }
            } else {
                flips.push(FlipGroup { x_mask, parts });
            }
        }
        let real = diag.iter().all(|z| z.im == 0.0)
            && flips
                .iter()
                .all(|g| g.parts.iter().all(|(cf, _)| cf.im == 0.0));
        CompiledPauliSum {
            dim,
            diag,
            flips,
            real,
        }
    }

    /// Dense assembly for small systems.
    pub fn to_dense(&self) -> CMatrix {
        let comp = self.compile();
        let dim = self.dim();
        let mut m = CMatrix::zeros(dim, dim);
        for s in 0..dim {
            m[(s, s)] += comp.diag[s];
            for g in &comp.flips {
                let mut cf = C64::new(0.0, 0.0);
                for &(a, sm) in &g.parts {
                    cf += sign(s & sm) * a;
                }
                m[(s ^ g.x_mask, s)] += cf;
            }
        }
        m
    }
}

#[inline]
fn sign(bits: usize) -> f64 {
    if bits.count_ones() & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

impl CompiledPauliSum {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// True when every matrix element is real.
    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn diagonal_real(&self) -> Vec<f64> {
        self.diag.iter().map(|z| z.re).collect()
    }

    /// out = A v (complex).
    pub fn apply(&self, v: &[C64], out: &mut [C64]) {
        assert_eq!(v.len(), self.dim);
        assert_eq!(out.len(), self.dim);
        for ((o, &d), &x) in out.iter_mut().zip(&self.diag).zip(v) {
            *o = d * x;
        }
        for g in &self.flips {
            for (s, &x) in v.iter().enumerate() {
                let mut cf = C64::new(0.0, 0.0);
                for &(a, sm) in &g.parts {
                    cf += sign(s & sm) * a;
                }
                out[s ^ g.x_mask] += cf * x;
            }
        }
    }

    /// out = A v for a real operator; panics if the operator has imaginary elements.
    pub fn apply_real(&self, v: &[f64], out: &mut [f64]) {
        assert!(self.real, "apply_real on a complex operator");
        assert_eq!(v.len(), self.dim);
        assert_eq!(out.len(), self.dim);
        for ((o, d), &x) in out.iter_mut().zip(&self.diag).zip(v) {
            *o = d.re * x;
        }
        for g in &self.flips {
            match g.parts.as_slice() {
                [(a, sm)] => {
                    let a = a.re;
                    for (s, &x) in v.iter().enumerate() {
                        out[s ^ g.x_mask] += sign(s & sm) * a * x;
                    }
                }
                [(a, sa), (b, sb)] => {
                    let (a, b) = (a.re, b.re);
                    for (s, &x) in v.iter().enumerate() {
                        out[s ^ g.x_mask] += (sign(s & sa) * a + sign(s & sb) * b) * x;
                    }
                }
                parts => {
                    for (s, &x) in v.iter().enumerate() {
                        let cf: f64 = parts.iter().map(|&(a, sm)| sign(s & sm) * a.re).sum();
                        out[s ^ g.x_mask] += cf * x;
                    }
                }
            }
        }
    }

    /// Dense real matrix; only meaningful when `is_real()`.
    pub fn to_dense_real(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for s in 0..self.dim {
            m[(s, s)] += self.diag[s].re;
            for g in &self.flips {
                let cf: f64 = g.parts.iter().map(|&(a, sm)| sign(s & sm) * a.re).sum();
                m[(s ^ g.x_mask, s)] += cf;
            }
        }
        m
    }
}

/// Dense single-site Pauli matrix.
pub fn pauli_matrix(p: Pauli) -> CMatrix {
    let z = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    match p {
        Pauli::X => CMatrix::from_row_slice(2, 2, &[z, one, one, z]),
        Pauli::Y => CMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        Pauli::Z => CMatrix::from_row_slice(2, 2, &[one, z, z, -one]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{kron, max_abs_diff};

    fn embed(n: usize, ops: &[(usize, Pauli)]) -> CMatrix {
        let mut m = CMatrix::identity(1, 1);
        for site in (0..n).rev() {
            let f = ops
                .iter()
                .find(|(s, _)| *s == site)
                .map(|&(_, p)| pauli_matrix(p))
                .unwrap_or_else(|| CMatrix::identity(2, 2));
            m = kron(&m, &f);
        }
        m
    }

    fn sample() -> PauliSum {
        let mut ps = PauliSum::new(3);
        ps.push(C64::new(0.3, 0.0), &[(0, Pauli::X)]);
        ps.push(C64::new(-0.2, 0.0), &[(1, Pauli::Y)]);
        ps.push(C64::new(0.7, 0.0), &[(2, Pauli::Z)]);
        ps.push(C64::new(0.11, 0.0), &[(0, Pauli::X), (2, Pauli::X)]);
        ps.push(C64::new(0.13, 0.0), &[(0, Pauli::Y), (2, Pauli::Y)]);
        ps.push(C64::new(0.17, 0.0), &[(1, Pauli::Z), (2, Pauli::Z)]);
        ps.push(C64::new(0.19, 0.0), &[(1, Pauli::X), (0, Pauli::Z)]);
        ps
    }

    #[test]
    fn dense_matches_kronecker_products() {
        let ps = sample();
        let mut want = CMatrix::zeros(8, 8);
        for t in ps.terms() {
            want += embed(3, &t.ops) * t.coef;
        }
        assert!(max_abs_diff(&ps.to_dense(), &want) < 1e-15);
    }

    #[test]
    fn apply_matches_dense() {
        let ps = sample();
        let dense = ps.to_dense();
        let comp = ps.compile();
        let v: Vec<C64> = (0..8).map(|k| C64::new(k as f64 * 0.1 - 0.3, (k * k) as f64 * 0.01)).collect();
        let mut out = vec![C64::new(0.0, 0.0); 8];
        comp.apply(&v, &mut out);
        let want = &dense * nalgebra::DVector::from_column_slice(&v);
        for k in 0..8 {
            assert!((out[k] - want[k]).norm() < 1e-15);
        }
    }

    #[test]
    fn hadamard_rotation_is_unitary_conjugation() {
        let ps = sample();
        let s2 = std::f64::consts::FRAC_1_SQRT_2;
        let h1 = CMatrix::from_row_slice(2, 2, &[C64::new(s2, 0.0), C64::new(s2, 0.0), C64::new(s2, 0.0), C64::new(-s2, 0.0)]);
        let hn = kron(&kron(&h1, &h1), &h1);
        let want = &hn * ps.to_dense() * &hn;
        assert!(max_abs_diff(&ps.hadamard_rotated().to_dense(), &want) < 1e-14);
    }

    #[test]
    fn real_apply_matches_complex_apply() {
        let mut ps = PauliSum::new(3);
        ps.push(C64::new(0.5, 0.0), &[(0, Pauli::Z)]);
        ps.push(C64::new(0.25, 0.0), &[(0, Pauli::X), (1, Pauli::X)]);
        ps.push(C64::new(-0.25, 0.0), &[(0, Pauli::Y), (1, Pauli::Y)]);
        ps.push(C64::new(0.1, 0.0), &[(2, Pauli::X)]);
        let comp = ps.compile();
        assert!(comp.is_real());
        let v: Vec<f64> = (0..8).map(|k| (k as f64).sin()).collect();
        let vc: Vec<C64> = v.iter().map(|&x| C64::new(x, 0.0)).collect();
        let mut a = vec![0.0; 8];
        let mut b = vec![C64::new(0.0, 0.0); 8];
        comp.apply_real(&v, &mut a);
        comp.apply(&vc, &mut b);
        for k in 0..8 {
            assert!((a[k] - b[k].re).abs() < 1e-15 && b[k].im.abs() < 1e-15);
        }
    }
}
