//! Exact `Δ = 0` dynamics via the Jordan-Wigner mapping.
//!
//! The XX chain maps to free fermions with `H = Σ_ij h_ij c†_i c_j`, where
//! `h` is tridiagonal with `h_{j,j+1} = 2 J v_j`. A spin-down site is an
//! occupied mode, so `⟨σ^z_j⟩ = 1 − 2⟨n_j⟩`. Gaussian states are fully
//! described by `G_ij = ⟨c†_i c_j⟩`, which evolves as `G(t) = e^{iht} G e^{−iht}`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{check_site, Error, Result};
use crate::lattice::DeformationProfile;

#[derive(Debug, Clone, PartialEq)]
pub struct HoppingMatrix(DMatrix<f64>);

impl HoppingMatrix {
    pub fn new(profile: &DeformationProfile, coupling: f64) -> Self {
        let n = profile.n_sites();
        let mut h = DMatrix::zeros(n, n);
        for (j, v) in profile.bond_values().iter().enumerate() {
            h[(j, j + 1)] = 2.0 * coupling * v;
            h[(j + 1, j)] = 2.0 * coupling * v;
        }
        Self(h)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn n_sites(&self) -> usize {
        self.0.nrows()
    }
}

pub fn build_hopping(profile: &DeformationProfile, coupling: f64) -> HoppingMatrix {
    HoppingMatrix::new(profile, coupling)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix(DMatrix<Complex64>);

impl CorrelationMatrix {
    pub fn from_matrix(g: DMatrix<Complex64>) -> Result<Self> {
        if g.nrows() != g.ncols() {
            return Err(Error::DimensionMismatch {
                expected: g.nrows(),
                found: g.ncols(),
            });
        }
        Ok(Self(g))
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn n_sites(&self) -> usize {
        self.0.nrows()
    }

    /// Total particle number `tr G`.
    pub fn particle_number(&self) -> f64 {
        self.0.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.0 - self.0.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Occupation eigenvalues of `G`, ascending.
    pub fn occupations(&self) -> Vec<f64> {
        let herm = (&self.0 + self.0.adjoint()) * Complex64::new(0.5, 0.0);
        let mut ev: Vec<f64> = herm.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

/// Product state with occupied modes exactly at `flips`.
pub fn init_occupation(n_sites: usize, flips: &[usize]) -> Result<CorrelationMatrix> {
    let mut g = DMatrix::from_element(n_sites, n_sites, Complex64::new(0.0, 0.0));
    for &f in flips {
        check_site(f, n_sites)?;
        g[(f - 1, f - 1)] = Complex64::new(1.0, 0.0);
    }
    Ok(CorrelationMatrix(g))
}

/// One-time eigendecomposition `h = Q Λ Qᵀ` reused for every evolution time.
#[derive(Debug, Clone)]
pub struct FreeFermionPropagator {
    energies: DVector<f64>,
    modes: DMatrix<Complex64>,
}

impl FreeFermionPropagator {
    pub fn new(h: &HoppingMatrix) -> Self {
        let eig = SymmetricEigen::new(h.0.clone());
        Self {
            energies: eig.eigenvalues,
            modes: eig.eigenvectors.map(|v| Complex64::new(v, 0.0)),
        }
    }

    pub fn n_sites(&self) -> usize {
        self.energies.len()
    }

    /// Single-particle `e^{iht}`.
    pub fn single_particle(&self, t: f64) -> DMatrix<Complex64> {
        let mut scaled = self.modes.clone();
        for (k, e) in self.energies.iter().enumerate() {
            let phase = Complex64::from_polar(1.0, e * t);
            scaled.column_mut(k).iter_mut().for_each(|z| *z *= phase);
        }
        scaled * self.modes.transpose()
    }

    /// `G(t) = e^{iht} G₀ e^{−iht}`.
    pub fn evolve(&self, g0: &CorrelationMatrix, t: f64) -> Result<CorrelationMatrix> {
        if !t.is_finite() {
            return Err(Error::InvalidArgument(format!("time must be finite, got {t}")));
        }
        if g0.n_sites() != self.n_sites() {
            return Err(Error::DimensionMismatch {
                expected: self.n_sites(),
                found: g0.n_sites(),
            });
        }
        let u = self.single_particle(t);
        Ok(CorrelationMatrix(&u * &g0.0 * u.adjoint()))
    }
}

pub fn evolve_correlations(
    g0: &CorrelationMatrix,
    h: &HoppingMatrix,
    t: f64,
) -> Result<CorrelationMatrix> {
    FreeFermionPropagator::new(h).evolve(g0, t)
}

/// `M_j = 1 − 2 G_jj`.
pub fn ff_magnetization(g: &CorrelationMatrix) -> Vec<f64> {
    g.0.diagonal().iter().map(|z| 1.0 - 2.0 * z.re).collect()
}

/// Connected `⟨σ^z_i σ^z_j⟩ − M_i M_j` by Wick's theorem: `−4|G_ij|²` off the
/// diagonal and `1 − M_j²` on it.
pub fn ff_connected_zz(g: &CorrelationMatrix) -> DMatrix<f64> {
    let m = ff_magnetization(g);
    let n = g.n_sites();
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0 - m[i] * m[i]
        } else {
            -4.0 * g.0[(i, j)].norm_sqr()
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::ChainSpec;
    use crate::statevector::{exact_unitary_evolve, StateVector};

    #[test]
    fn hopping_structure() {
        let h = build_hopping(&DeformationProfile::uniform(3).unwrap(), 1.0);
        assert_eq!(h.matrix()[(0, 1)], 2.0);
        assert_eq!(h.matrix()[(1, 2)], 2.0);
        assert_eq!(h.matrix()[(0, 2)], 0.0);
        assert_eq!(h.matrix()[(1, 1)], 0.0);
        let p = DeformationProfile::horizon(80, 80.0 / 7.0).unwrap();
        let h = build_hopping(&p, 1.0);
        assert_eq!(h.matrix(), &h.matrix().transpose());
        assert!(h.matrix()[(11, 12)].abs() < 0.04);
    }

    #[test]
    fn occupations_of_product_states() {
        let neel = init_occupation(6, &[2, 4, 6]).unwrap();
        assert_eq!(ff_magnetization(&neel), vec![1.0, -1.0, 1.0, -1.0, 1.0, -1.0]);
        let c = ff_connected_zz(&neel);
        for i in 0..6 {
            for j in 0..6 {
                assert_eq!(c[(i, j)], 0.0);
            }
        }
        let empty = init_occupation(4, &[]).unwrap();
        assert_eq!(ff_magnetization(&empty), vec![1.0; 4]);
        assert_eq!(init_occupation(40, &[20, 30]).unwrap().particle_number(), 2.0);
        assert!(init_occupation(4, &[5]).is_err());
    }

    #[test]
    fn two_site_occupation_oscillates() {
        let h = build_hopping(&DeformationProfile::uniform(2).unwrap(), 1.0);
        let g0 = init_occupation(2, &[2]).unwrap();
        let g = evolve_correlations(&g0, &h, 0.0).unwrap();
        assert!((g.matrix() - g0.matrix()).iter().all(|z| z.norm() < 1e-14));
        for t in [0.2, 0.9, 1.7] {
            let g = evolve_correlations(&g0, &h, t).unwrap();
            assert!((g.matrix()[(0, 0)].re - (2.0 * t).sin().powi(2)).abs() < 1e-13);
        }
        assert!(evolve_correlations(&g0, &h, f64::NAN).is_err());
    }

    #[test]
    fn evolution_preserves_invariants() {
        let p = DeformationProfile::horizon(30, 30.0 / 7.0).unwrap();
        let prop = FreeFermionPropagator::new(&build_hopping(&p, 1.0));
        let g0 = init_occupation(30, &(2..=30).step_by(2).collect::<Vec<_>>()).unwrap();
        for t in [0.3, 1.0, 4.0] {
            let g = prop.evolve(&g0, t).unwrap();
            assert!((g.particle_number() - g0.particle_number()).abs() < 1e-10);
            assert!(g.hermiticity_error() < 1e-12);
            let occ = g.occupations();
            assert!(occ[0] > -1e-10 && occ[occ.len() - 1] < 1.0 + 1e-10);
            let c = ff_connected_zz(&g);
            assert_eq!(c, c.transpose());
        }
    }

    #[test]
    fn wick_correlator_matches_statevector() {
        let n = 8;
        let flips: Vec<usize> = (2..=n).step_by(2).collect();
        let profile = DeformationProfile::uniform(n).unwrap();
        let spec = ChainSpec::new(profile.clone(), 0.0);
        let s0 = StateVector::product(n, &flips).unwrap();
        let s = exact_unitary_evolve(&spec, &s0, 0.5).unwrap();
        let (m, zz) = s.z_moments();
        let g = evolve_correlations(
            &init_occupation(n, &flips).unwrap(),
            &build_hopping(&profile, 1.0),
            0.5,
        )
        .unwrap();
        let ff_m = ff_magnetization(&g);
        let ff_c = ff_connected_zz(&g);
        for i in 0..n {
            assert!((ff_m[i] - m[i]).abs() < 1e-10);
            for j in 0..n {
                let c = zz[(i, j)] - m[i] * m[j];
                assert!((ff_c[(i, j)] - c).abs() < 1e-10, "({i},{j})");
            }
        }
    }
}
