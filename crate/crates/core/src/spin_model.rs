//! Spin-1 system operators, the impurity lattice, dipolar couplings and the
//! bath Hamiltonian / coupling operator.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{c, CMatrix, HermitianOperator};
use crate::pauli::{Pauli, PauliSum};

/// Form of the rhombic strain term of the system Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum StrainForm {
    /// E (S_Y² − S_Z²): transverse to the S_X quantization axis.
    #[default]
    Transverse,
    /// E (S_X² − S_Y²).
    Printed,
}

/// System and bath parameters. Energies in GHz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemParams {
    pub h_x: f64,
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(rename = "E")]
    pub e: f64,
    #[serde(rename = "A_XX")]
    pub a_xx: f64,
    #[serde(rename = "A_XY")]
    pub a_xy: f64,
    #[serde(rename = "A_XZ")]
    pub a_xz: f64,
    pub h_x0: f64,
    pub beta_dd: f64,
    #[serde(rename = "kBT")]
    pub kbt: f64,
    pub n_spins: usize,
    pub lattice_radius: i32,
    pub strain: StrainForm,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            h_x: 0.194,
            d: 2.88,
            e: 0.1,
            a_xx: 0.2,
            a_xy: 0.02,
            a_xz: 0.02,
            h_x0: 1.08e-3,
            beta_dd: 4.52e-5,
            kbt: 3e-4,
            n_spins: 12,
            lattice_radius: 5,
            strain: StrainForm::Transverse,
        }
    }
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        let energies = [
            ("h_x", self.h_x),
            ("D", self.d),
            ("E", self.e),
            ("A_XX", self.a_xx),
            ("A_XY", self.a_xy),
            ("A_XZ", self.a_xz),
            ("h_x0", self.h_x0),
            ("beta_dd", self.beta_dd),
            ("kBT", self.kbt),
        ];
        for (name, v) in energies {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be finite")));
            }
        }
        if self.n_spins < 1 {
            return Err(Error::InvalidParameter("n_spins must be at least 1".into()));
        }
        if self.n_spins > 30 {
            return Err(Error::InvalidParameter("n_spins above 30 is not supported".into()));
        }
        if self.lattice_radius < 1 {
            return Err(Error::InvalidParameter("lattice_radius must be at least 1".into()));
        }
        if self.kbt <= 0.0 {
            return Err(Error::InvalidParameter("kBT must be positive".into()));
        }
        Ok(())
    }
}

/// S_X, S_Y, S_Z for spin 1.
#[derive(Debug, Clone)]
pub struct SpinOps {
    pub sx: HermitianOperator,
    pub sy: HermitianOperator,
    pub sz: HermitianOperator,
}

pub fn build_spin1_ops() -> SpinOps {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let z = c(0.0, 0.0);
    let sx = CMatrix::from_row_slice(3, 3, &[z, c(r, 0.0), z, c(r, 0.0), z, c(r, 0.0), z, c(r, 0.0), z]);
    let sy = CMatrix::from_row_slice(
        3,
        3,
        &[z, c(0.0, -r), z, c(0.0, r), z, c(0.0, -r), z, c(0.0, r), z],
    );
    let sz = CMatrix::from_row_slice(3, 3, &[c(1.0, 0.0), z, z, z, z, z, z, z, c(-1.0, 0.0)]);
    SpinOps {
        sx: HermitianOperator::new(sx).expect("S_X is Hermitian"),
        sy: HermitianOperator::new(sy).expect("S_Y is Hermitian"),
        sz: HermitianOperator::new(sz).expect("S_Z is Hermitian"),
    }
}

pub fn build_system_hamiltonian(p: &SystemParams) -> HermitianOperator {
    let s = build_spin1_ops();
    let sx2 = s.sx.mul(&s.sx);
    let sy2 = s.sy.mul(&s.sy);
    let sz2 = s.sz.mul(&s.sz);
    let strain = match p.strain {
        StrainForm::Transverse => sy2 - sz2,
        StrainForm::Printed => &sx2 - sy2,
    };
    let h = s.sx.matrix() * c(p.h_x, 0.0) + sx2 * c(p.d, 0.0) + strain * c(p.e, 0.0);
    HermitianOperator::symmetrized(&h)
}

/// All nonzero integer points with |r|² ≤ radius², in lexicographic order.
pub fn lattice_sites(radius: i32) -> Vec<[i32; 3]> {
    let r2 = radius * radius;
    let mut out = Vec::new();
    for x in -radius..=radius {
        for y in -radius..=radius {
            for z in -radius..=radius {
                let d2 = x * x + y * y + z * z;
                if d2 > 0 && d2 <= r2 {
                    out.push([x, y, z]);
                }
            }
        }
    }
    out
}

/// Draws `n_spins` distinct nonzero sites uniformly without replacement.
pub fn sample_lattice<R: Rng>(radius: i32, n_spins: usize, rng: &mut R) -> Result<Vec<[i32; 3]>> {
    let mut pool = lattice_sites(radius);
    if n_spins > pool.len() {
        return Err(Error::LatticeTooSmall {
            radius,
            available: pool.len(),
            requested: n_spins,
        });
    }
    // Partial Fisher-Yates.
    for i in 0..n_spins {
        let j = rng.random_range(i..pool.len());
        pool.swap(i, j);
    }
    pool.truncate(n_spins);
    Ok(pool)
}

/// Dipolar factors between bath spins and hyperfine factors to the central spin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Couplings {
    /// Symmetric, zero diagonal.
    pub c_jk: DMatrix<f64>,
    pub c_norm: f64,
    pub a_k: Vec<f64>,
    pub a_norm: f64,
}

pub fn compute_couplings(positions: &[[i32; 3]]) -> Result<Couplings> {
    let n = positions.len();
    let mut c_jk = DMatrix::zeros(n, n);
    let mut c2 = 0.0;
    for j in 0..n {
        for k in (j + 1)..n {
            let d = [
                (positions[j][0] - positions[k][0]) as f64,
                (positions[j][1] - positions[k][1]) as f64,
                (positions[j][2] - positions[k][2]) as f64,
            ];
            let r2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
            if r2 == 0.0 {
                return Err(Error::CoincidentSites(j, k));
            }
            let v = (1.0 - 3.0 * d[2] * d[2] / r2) / (r2 * r2.sqrt());
            c_jk[(j, k)] = v;
            c_jk[(k, j)] = v;
            c2 += v * v;
        }
    }
    let mut a_k = Vec::with_capacity(n);
    let mut a2 = 0.0;
    for (k, p) in positions.iter().enumerate() {
        let r2 = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]) as f64;
        if r2 == 0.0 {
            return Err(Error::InvalidParameter(format!("bath spin {k} sits at the origin")));
        }
        let z = p[2] as f64;
        let v = (1.0 - 3.0 * z * z / r2) / (r2 * r2.sqrt());
        a_k.push(v);
        a2 += v * v;
    }
    Ok(Couplings {
        c_jk,
        c_norm: c2.sqrt(),
        a_k,
        a_norm: a2.sqrt(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BathGeometry {
    pub positions: Vec<[i32; 3]>,
    pub couplings: Couplings,
}

impl BathGeometry {
    pub fn from_positions(positions: Vec<[i32; 3]>) -> Result<Self> {
        let couplings = compute_couplings(&positions)?;
        Ok(Self {
            positions,
            couplings,
        })
    }
}

/// Bath Hamiltonian H_B and coupling operator B as Pauli sums (I = σ/2).
#[derive(Debug, Clone)]
pub struct BathOperators {
    pub h_b: PauliSum,
    pub b: PauliSum,
}

pub fn build_bath_operators(geom: &BathGeometry, p: &SystemParams) -> BathOperators {
    let n = geom.positions.len();
    let cp = &geom.couplings;
    let mut h_b = PauliSum::new(n);
    for j in 0..n {
        h_b.push(c(0.5 * p.h_x0, 0.0), &[(j, Pauli::X)]);
    }
    if cp.c_norm > 0.0 {
        // 3 I_z I_z − I·I = (2 ZZ − XX − YY) / 4
        for j in 0..n {
            for k in (j + 1)..n {
                let g = p.beta_dd * cp.c_jk[(j, k)] / cp.c_norm / 4.0;
                if g == 0.0 {
                    continue;
                }
                h_b.push(c(2.0 * g, 0.0), &[(j, Pauli::Z), (k, Pauli::Z)]);
                h_b.push(c(-g, 0.0), &[(j, Pauli::X), (k, Pauli::X)]);
                h_b.push(c(-g, 0.0), &[(j, Pauli::Y), (k, Pauli::Y)]);
            }
        }
    }
    let mut b = PauliSum::new(n);
    if cp.a_norm > 0.0 {
        for k in 0..n {
            let w = 0.5 * cp.a_k[k] / cp.a_norm;
            b.push(c(w * p.a_xx, 0.0), &[(k, Pauli::X)]);
            b.push(c(w * p.a_xy, 0.0), &[(k, Pauli::Y)]);
            b.push(c(w * p.a_xz, 0.0), &[(k, Pauli::Z)]);
        }
    }
    BathOperators { h_b, b }
}

/// Everything needed downstream of the geometry.
#[derive(Debug, Clone)]
pub struct SpinBathModel {
    pub params: SystemParams,
    pub geometry: BathGeometry,
    pub spin: SpinOps,
    pub h_sys: HermitianOperator,
    pub bath: BathOperators,
}

impl SpinBathModel {
    pub fn build<R: Rng>(params: &SystemParams, rng: &mut R) -> Result<Self> {
        params.validate()?;
        let positions = sample_lattice(params.lattice_radius, params.n_spins, rng)?;
        Self::from_positions(params, positions)
    }

    pub fn from_positions(params: &SystemParams, positions: Vec<[i32; 3]>) -> Result<Self> {
        params.validate()?;
        let r2 = params.lattice_radius * params.lattice_radius;
        if let Some(p) = positions.iter().find(|p| p[0] * p[0] + p[1] * p[1] + p[2] * p[2] > r2) {
            return Err(Error::InvalidParameter(format!("site {p:?} lies outside the lattice radius")));
        }
        let geometry = BathGeometry::from_positions(positions)?;
        let bath = build_bath_operators(&geometry, params);
        Ok(Self {
            params: params.clone(),
            geometry,
            spin: build_spin1_ops(),
            h_sys: build_system_hamiltonian(params),
            bath,
        })
    }

    /// The system operator that couples to the bath.
    pub fn coupling_operator(&self) -> &HermitianOperator {
        &self.spin.sx
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{commutator, max_abs_diff};
    use crate::rng::stream;

    #[test]
    fn spin_algebra() {
        let s = build_spin1_ops();
        let lhs = commutator(s.sx.matrix(), s.sy.matrix());
        let rhs = s.sz.matrix() * c(0.0, 1.0);
        assert!(max_abs_diff(&lhs, &rhs) < 1e-14);
        assert!((s.sx.matrix()[(0, 1)].re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-16);
        assert!((0..3).all(|i| s.sx.matrix()[(i, i)].norm() == 0.0));
        assert!((s.sx.trace_product(&s.sx) - 2.0).abs() < 1e-14);
        assert!(s.sx.trace().abs() < 1e-16);
    }

    #[test]
    fn hamiltonian_traces() {
        let p = SystemParams::default();
        let h = build_system_hamiltonian(&p);
        assert!((h.trace() - 5.76).abs() < 1e-12);
        let want = 2.0 * (p.d * p.d + p.e * p.e + p.h_x * p.h_x);
        assert!((h.trace_product(&h) - want).abs() < 1e-12);
        let zero = SystemParams {
            h_x: 0.0,
            d: 0.0,
            e: 0.0,
            ..p
        };
        assert!(build_system_hamiltonian(&zero).matrix().iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn printed_strain_keeps_trace() {
        let p = SystemParams {
            strain: StrainForm::Printed,
            ..SystemParams::default()
        };
        assert!((build_system_hamiltonian(&p).trace() - 2.0 * p.d).abs() < 1e-12);
    }

    #[test]
    fn lattice_pool_sizes() {
        assert_eq!(lattice_sites(5).len(), 514);
        assert_eq!(lattice_sites(1).len(), 6);
        let err = sample_lattice(1, 7, &mut stream(1, "lattice")).unwrap_err();
        assert!(matches!(err, Error::LatticeTooSmall { available: 6, .. }));
    }

    #[test]
    fn sampling_is_distinct_and_reproducible() {
        let a = sample_lattice(5, 18, &mut stream(3, "lattice")).unwrap();
        let b = sample_lattice(5, 18, &mut stream(3, "lattice")).unwrap();
        assert_eq!(a, b);
        let mut s = a.clone();
        s.sort();
        s.dedup();
        assert_eq!(s.len(), 18);
        assert!(a.iter().all(|p| p != &[0, 0, 0] && p[0] * p[0] + p[1] * p[1] + p[2] * p[2] <= 25));
    }

    #[test]
    fn dipolar_factor_limits() {
        let cz = compute_couplings(&[[0, 0, 1], [0, 0, 3]]).unwrap();
        assert!((cz.c_jk[(0, 1)] + 2.0 / 8.0).abs() < 1e-15);
        let cxy = compute_couplings(&[[1, 0, 0], [1, 2, 0]]).unwrap();
        assert!((cxy.c_jk[(0, 1)] - 1.0 / 8.0).abs() < 1e-15);
        assert!(matches!(
            compute_couplings(&[[1, 0, 0], [1, 0, 0]]),
            Err(Error::CoincidentSites(0, 1))
        ));
    }

    #[test]
    fn single_spin_bath_is_zeeman_only() {
        let p = SystemParams {
            n_spins: 1,
            ..SystemParams::default()
        };
        let m = SpinBathModel::from_positions(&p, vec![[1, 2, 0]]).unwrap();
        let h = m.bath.h_b.to_dense();
        let want = crate::pauli::pauli_matrix(Pauli::X) * c(0.5 * p.h_x0, 0.0);
        assert!(max_abs_diff(&h, &want) < 1e-18);
    }

    #[test]
    fn two_spin_bath_hermitian_traceless() {
        let p = SystemParams {
            n_spins: 2,
            ..SystemParams::default()
        };
        let m = SpinBathModel::from_positions(&p, vec![[1, 0, 0], [0, 1, 2]]).unwrap();
        let h = HermitianOperator::new(m.bath.h_b.to_dense()).unwrap();
        let b = HermitianOperator::new(m.bath.b.to_dense()).unwrap();
        assert!(h.trace().abs() < 1e-18);
        assert!(b.trace().abs() < 1e-18);
    }
}
