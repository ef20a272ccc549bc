//! Constraints of the four-field system, Dirac block algebra and the
//! restricted Hamiltonian on the constraint manifold.
//!
//! Four-field states use heights in units of `h2` (see [`CcParams`]). The
//! interface variable follows the two-layer convention
//! `eta1 = h1 - zeta`, `eta2 = h2 + zeta`; [`half_difference_from_zeta`]
//! converts to `(eta2 - eta1) / 2`, which differs by a constant and has the
//! same Jacobian.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::check_finite;
use crate::energetics::{grad_two_layer_with, CcFields, CcParams};
use crate::kinematics::{mu12_from_sigma, LayerGeometry};
use crate::{Error, Field, ModelState, Result, Spectral};

#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintResiduals {
    /// `eta1 + eta2 - h`
    pub phi1: Field,
    /// `sum_k (eta_k mu_k + eps^2/3 (eta_k^3 mu_k,x)_x) / rho_k`
    pub phi2: Field,
}

impl ConstraintResiduals {
    pub fn max_phi1(&self) -> f64 {
        self.phi1.max_abs()
    }

    pub fn max_phi2(&self) -> f64 {
        self.phi2.max_abs()
    }
}

fn layer_flux(ops: &Spectral, eta: &Field, mu: &Field, rho: f64, eps: f64) -> Field {
    let disp = ops.dx1(&(eta.powi(3) * ops.dx1(mu)));
    (eta * mu + disp * (eps * eps / 3.0)) / rho
}

pub fn constraints(ops: &Spectral, s: CcFields<'_>, p: &CcParams) -> Result<ConstraintResiduals> {
    s.check()?;
    let h = p.total_height();
    Ok(ConstraintResiduals {
        phi1: s.eta1.zip_map(s.eta2, |a, b| a + b - h),
        phi2: layer_flux(ops, s.eta1, s.mu1, p.rho1, p.eps) + layer_flux(ops, s.eta2, s.mu2, p.rho2, p.eps),
    })
}

/// Four-field state on the constraint manifold with interface `zeta` and
/// momentum shear `sigma = mu2 - mu1`.
pub fn reconstruct_constrained(ops: &Spectral, zeta: &Field, sigma: &Field, p: &CcParams) -> Result<ModelState> {
    check_finite(sigma, "sigma")?;
    let g = LayerGeometry::from_cc(ops, zeta, p)?;
    let (mu1, mu2) = mu12_from_sigma(ops, sigma, &g);
    ModelState::cc_four(g.eta1, mu1, g.eta2, mu2)
}

/// `(zeta, sigma)` of a four-field state, ignoring the constraints.
pub fn chart(s: CcFields<'_>, p: &CcParams) -> (Field, Field) {
    let shift = 0.5 * (p.h2 - p.h1);
    let zeta = s.eta2.zip_map(s.eta1, |b, a| 0.5 * (b - a) - shift);
    (zeta, s.mu2 - s.mu1)
}

/// `zeta -> (eta2 - eta1) / 2`.
pub fn half_difference_from_zeta(zeta: &Field, p: &CcParams) -> Field {
    zeta + 0.5 * (p.h2 - p.h1)
}

pub fn zeta_from_half_difference(z: &Field, p: &CcParams) -> Field {
    z - 0.5 * (p.h2 - p.h1)
}

// ---------------------------------------------------------------------------
// restricted Hamiltonian

/// Four-field Hamiltonian restricted to the constraint manifold, as a
/// functional of `(zeta, sigma)`.
pub fn restricted_hamiltonian(ops: &Spectral, zeta: &Field, sigma: &Field, p: &CcParams) -> Result<f64> {
    check_finite(sigma, "sigma")?;
    let g = LayerGeometry::from_cc(ops, zeta, p)?;
    let (r1, r2, h) = (p.rho1, p.rho2, p.total_height());
    let sx = ops.dx1(sigma);
    let s2x = ops.dx1(&(sigma * sigma));
    let mut total = 0.0;
    for i in 0..zeta.len() {
        let (n1, n2, psi) = (g.eta1[i], g.eta2[i], g.psi[i]);
        let zx = g.zeta_x[i];
        let s = sigma[i];
        let shear = n1 * n1 * n2 * n2 * (r1 * n1 + r2 * n2) / (psi * psi) * sx[i] * sx[i];
        let slope = r1 * r2 * h * h * (r2 * n1.powi(3) + r1 * n2.powi(3)) / psi.powi(4) * zx * zx * s * s;
        let cross = r1 * r2 * h * n1 * n2 * (n1 * n1 - n2 * n2) / psi.powi(3) * zx * s2x[i];
        total += n1 * n2 / psi * s * s - p.eps * p.eps / 3.0 * (shear + slope + cross)
            + p.g * (r2 - r1) * zeta[i] * zeta[i];
    }
    Ok(0.5 * ops.dx() * total)
}

/// Variational derivatives of [`restricted_hamiltonian`].
pub fn grad_restricted(ops: &Spectral, zeta: &Field, sigma: &Field, p: &CcParams) -> Result<(Field, Field)> {
    grad_two_layer_with(ops, zeta, sigma, &p.restricted_coefficients())
}

// ---------------------------------------------------------------------------
// constraint propagation

#[derive(Clone, Debug, PartialEq)]
pub struct PropagationReport {
    pub phi1: Vec<f64>,
    pub phi2: Vec<f64>,
}

impl PropagationReport {
    pub fn max_phi1(&self) -> f64 {
        self.phi1.iter().fold(0.0, |a: f64, &b| a.max(b))
    }

    pub fn max_phi2(&self) -> f64 {
        self.phi2.iter().fold(0.0, |a: f64, &b| a.max(b))
    }
}

/// Reconstructs every `(zeta, sigma)` snapshot on the constraint manifold and
/// records the sup norms of both constraint residuals.
pub fn check_constraint_propagation(
    ops: &Spectral,
    trajectory: &[(Field, Field)],
    p: &CcParams,
) -> Result<PropagationReport> {
    let mut report = PropagationReport { phi1: Vec::new(), phi2: Vec::new() };
    for (zeta, sigma) in trajectory {
        let state = reconstruct_constrained(ops, zeta, sigma, p)?;
        let c = constraints(ops, CcFields::from_slice(&state.into_components()), p)?;
        report.phi1.push(c.max_phi1());
        report.phi2.push(c.max_phi2());
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// Dirac blocks

/// Orthonormal real Fourier basis of zero-mean, Nyquist-free grid functions
/// (`n x (n - 2)`).
pub fn working_basis(n: usize) -> DMatrix<f64> {
    let m = n / 2 - 1;
    let scale = (2.0 / n as f64).sqrt();
    DMatrix::from_fn(n, 2 * m, |i, c| {
        let j = (c / 2 + 1) as f64;
        let arg = 2.0 * std::f64::consts::PI * j * i as f64 / n as f64;
        if c % 2 == 0 {
            scale * arg.cos()
        } else {
            scale * arg.sin()
        }
    })
}

fn block_diag2(q: &DMatrix<f64>) -> DMatrix<f64> {
    let (r, c) = q.shape();
    let mut out = DMatrix::zeros(2 * r, 2 * c);
    out.view_mut((0, 0), (r, c)).copy_from(q);
    out.view_mut((r, c), (r, c)).copy_from(q);
    out
}

/// The transformed four-field tensor split as `[[A, B^T], [-B, C]]` in
/// variables `(zeta, sigma | phi1, phi2)`, restricted to the working subspace.
#[derive(Clone, Debug)]
pub struct DiracBlocks {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub p34: DMatrix<f64>,
    pub p44: DMatrix<f64>,
    /// The reduced Darboux tensor `-[[0, D], [D, 0]]` on the same subspace.
    pub darboux: DMatrix<f64>,
}

/// Jacobian of `(zeta, sigma, phi1, phi2)` with respect to
/// `(eta1, mu1, eta2, mu2)` at a four-field state.
pub fn chart_jacobian(ops: &Spectral, s: CcFields<'_>, p: &CcParams) -> Result<DMatrix<f64>> {
    s.check()?;
    let n = ops.n();
    let d = ops.derivative_matrix();
    let e2 = p.eps * p.eps;
    let id = DMatrix::<f64>::identity(n, n);
    let mut j = DMatrix::zeros(4 * n, 4 * n);
    j.view_mut((0, 0), (n, n)).copy_from(&(&id * -0.5));
    j.view_mut((0, 2 * n), (n, n)).copy_from(&(&id * 0.5));
    j.view_mut((n, n), (n, n)).copy_from(&(-&id));
    j.view_mut((n, 3 * n), (n, n)).copy_from(&id);
    j.view_mut((2 * n, 0), (n, n)).copy_from(&id);
    j.view_mut((2 * n, 2 * n), (n, n)).copy_from(&id);
    for (k, eta, mu, rho) in [(0, s.eta1, s.mu1, p.rho1), (2, s.eta2, s.mu2, p.rho2)] {
        let mx = ops.dx1(mu);
        let diag = |f: &Field| DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(f));
        let d_eta = (diag(mu) + d * diag(&(eta * eta * &mx)) * e2) / rho;
        let d_mu = (diag(eta) + d * diag(&eta.powi(3)) * d * (e2 / 3.0)) / rho;
        j.view_mut((3 * n, k * n), (n, n)).copy_from(&d_eta);
        j.view_mut((3 * n, (k + 1) * n), (n, n)).copy_from(&d_mu);
    }
    Ok(j)
}

fn darboux_quad_matrix(d: &DMatrix<f64>) -> DMatrix<f64> {
    let n = d.nrows();
    let mut p = DMatrix::zeros(4 * n, 4 * n);
    for k in [0, 2] {
        p.view_mut((k * n, (k + 1) * n), (n, n)).copy_from(&(-d));
        p.view_mut(((k + 1) * n, k * n), (n, n)).copy_from(&(-d));
    }
    p
}

impl DiracBlocks {
    /// Blocks of `J P4 J^T` at a four-field state.
    pub fn assemble(ops: &Spectral, s: CcFields<'_>, p: &CcParams) -> Result<Self> {
        let n = ops.n();
        let d = ops.derivative_matrix();
        let jac = chart_jacobian(ops, s, p)?;
        let full = &jac * darboux_quad_matrix(d) * jac.transpose();
        let q = working_basis(n);
        let q2 = block_diag2(&q);
        let restrict = |r: usize, c: usize| -> DMatrix<f64> {
            let blk = full.view((r * n, c * n), (2 * n, 2 * n)).into_owned();
            q2.transpose() * blk * &q2
        };
        let a = restrict(0, 0);
        let b = restrict(0, 2).transpose();
        let c = restrict(2, 2);
        let m = q.ncols();
        let p34 = c.view((0, m), (m, m)).into_owned();
        let p44 = c.view((m, m), (m, m)).into_owned();
        let mut darboux = DMatrix::zeros(n * 2, n * 2);
        darboux.view_mut((0, n), (n, n)).copy_from(&(-d));
        darboux.view_mut((n, 0), (n, n)).copy_from(&(-d));
        let darboux = q2.transpose() * darboux * &q2;
        Ok(DiracBlocks { a, b, c, p34, p44, darboux })
    }

    pub fn subspace_dim(&self) -> usize {
        self.p34.nrows()
    }

    fn p34_inverse(&self) -> Result<DMatrix<f64>> {
        let lu = self.p34.clone().lu();
        let inv = lu.try_inverse().ok_or_else(|| Error::Solver {
            reason: "constraint block P34 is singular on the working subspace".into(),
            condition: f64::INFINITY,
        })?;
        let cond = self.p34.norm() * inv.norm();
        if !cond.is_finite() || cond > 1e12 {
            return Err(Error::Solver {
                reason: "constraint block P34 is ill-conditioned on the working subspace".into(),
                condition: cond,
            });
        }
        Ok(inv)
    }

    /// `C^{-1} = [[P34^{-T} P44 P34^{-1}, -P34^{-T}], [P34^{-1}, 0]]`.
    pub fn c_inverse(&self) -> Result<DMatrix<f64>> {
        let m = self.subspace_dim();
        let inv = self.p34_inverse()?;
        let inv_t = inv.transpose();
        let mut out = DMatrix::zeros(2 * m, 2 * m);
        out.view_mut((0, 0), (m, m)).copy_from(&(&inv_t * &self.p44 * &inv));
        out.view_mut((0, m), (m, m)).copy_from(&(-&inv_t));
        out.view_mut((m, 0), (m, m)).copy_from(&inv);
        Ok(out)
    }

    /// `C^{-1}` by dense LU of the whole block.
    pub fn c_inverse_lu(&self) -> Result<DMatrix<f64>> {
        self.c.clone().lu().try_inverse().ok_or_else(|| Error::Solver {
            reason: "constraint block C is singular".into(),
            condition: f64::INFINITY,
        })
    }

    /// `A - B^T C^{-1} B`.
    pub fn reduced(&self, c_inv: &DMatrix<f64>) -> DMatrix<f64> {
        &self.a - self.b.transpose() * c_inv * &self.b
    }

    /// Replaces the `phi1` block row of `B` (identically zero) with seeded
    /// random entries of the given size.
    pub fn with_perturbed_b(&self, seed: u64, size: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = self.clone();
        let m = self.subspace_dim();
        for i in 0..m {
            for j in 0..self.b.ncols() {
                out.b[(i, j)] = size * rng.gen_range(-1.0..1.0);
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct DiracIdentity {
    pub reduced: DMatrix<f64>,
    /// Frobenius norm of `reduced - darboux`.
    pub defect: f64,
    /// Frobenius norm of `C C^{-1} - I`.
    pub inverse_defect: f64,
    /// Frobenius norm of the difference between the closed-form and LU paths.
    pub lu_path_gap: f64,
    /// Largest entry of the `phi1` block row of `B`.
    pub phi1_row_max: f64,
}

pub fn dirac_block_identity_from(blocks: &DiracBlocks) -> Result<DiracIdentity> {
    let c_inv = blocks.c_inverse()?;
    let reduced = blocks.reduced(&c_inv);
    let m2 = c_inv.nrows();
    let inverse_defect = (&blocks.c * &c_inv - DMatrix::<f64>::identity(m2, m2)).norm();
    let lu_path_gap = (blocks.reduced(&blocks.c_inverse_lu()?) - &reduced).norm();
    let m = blocks.subspace_dim();
    let phi1_row_max = blocks.b.rows(0, m).amax();
    Ok(DiracIdentity {
        defect: (&reduced - &blocks.darboux).norm(),
        reduced,
        inverse_defect,
        lu_path_gap,
        phi1_row_max,
    })
}

/// Assembles the blocks at the constrained state over `(zeta, sigma)` and
/// evaluates the reduced tensor against the Darboux tensor.
pub fn dirac_block_identity(ops: &Spectral, zeta: &Field, sigma: &Field, p: &CcParams) -> Result<DiracIdentity> {
    let state = reconstruct_constrained(ops, zeta, sigma, p)?.into_components();
    let blocks = DiracBlocks::assemble(ops, CcFields::from_slice(&state), p)?;
    dirac_block_identity_from(&blocks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energetics::{energy_cc_four, energy_two_layer_with};
    use crate::verify::random_field;
    use crate::Grid;

    fn params(eps: f64) -> CcParams {
        CcParams { rho1: 1.0, rho2: 1.5, g: 1.0, h1: 1.5, h2: 1.0, eps }
    }

    #[test]
    fn rest_constraints_vanish() {
        let s = Spectral::new(Grid::new(32, 10.0).unwrap());
        let p = params(0.1);
        let z = Field::zeros(32);
        let st = reconstruct_constrained(&s, &z, &z, &p).unwrap().into_components();
        let c = constraints(&s, CcFields::from_slice(&st), &p).unwrap();
        assert_eq!(c.max_phi1(), 0.0);
        assert_eq!(c.max_phi2(), 0.0);
        let shifted = [&st[0] + 0.1, st[1].clone(), st[2].clone(), st[3].clone()];
        let c = constraints(&s, CcFields::from_slice(&shifted), &p).unwrap();
        assert!((&c.phi1 - &Field::constant(32, 0.1)).max_abs() < 1e-15);
    }

    #[test]
    fn chart_round_trip() {
        let s = Spectral::new(Grid::new(64, 20.0).unwrap());
        let p = params(0.1);
        let z = random_field(s.grid(), 1, 0.0, 0.2, 5);
        let sg = random_field(s.grid(), 2, 0.0, 1.0, 5);
        let st = reconstruct_constrained(&s, &z, &sg, &p).unwrap().into_components();
        let (z2, s2) = chart(CcFields::from_slice(&st), &p);
        assert!((&z2 - &z).max_abs() < 1e-15);
        assert!((&s2 - &sg).max_abs() < 1e-15);
        let hd = half_difference_from_zeta(&z, &p);
        assert!((&hd - &((&st[2] - &st[0]) * 0.5)).max_abs() < 1e-15);
        assert!((&zeta_from_half_difference(&hd, &p) - &z).max_abs() < 1e-15);
    }

    #[test]
    fn restricted_matches_two_layer_functional() {
        let s = Spectral::new(Grid::new(64, 40.0).unwrap());
        let p = params(0.2);
        let z = random_field(s.grid(), 3, 0.0, 0.2, 5);
        let sg = random_field(s.grid(), 4, 0.0, 1.0, 5);
        let a = restricted_hamiltonian(&s, &z, &sg, &p).unwrap();
        let b = energy_two_layer_with(&s, &z, &sg, &p.restricted_coefficients()).unwrap().total;
        assert!((a - b).abs() < 1e-12 * a.abs());
        let neg = restricted_hamiltonian(&s, &z, &(-&sg), &p).unwrap();
        assert_eq!(a, neg);
        let shifted = restricted_hamiltonian(&s, &z.shifted(3), &sg.shifted(3), &p).unwrap();
        assert!((a - shifted).abs() < 1e-13 * a.abs());
        let c = Field::constant(64, 0.7);
        let flat = restricted_hamiltonian(&s, &Field::zeros(64), &c, &p).unwrap();
        assert!((flat - 40.0 * 1.5 * 0.49 / (2.0 * (1.0 + 1.5 * 1.5))).abs() < 1e-12);
    }

    #[test]
    fn four_field_energy_on_manifold_is_fourth_order() {
        let s = Spectral::new(Grid::new(64, 40.0).unwrap());
        let z = random_field(s.grid(), 5, 0.0, 0.2, 4);
        let sg = random_field(s.grid(), 6, 0.0, 1.0, 4);
        let gap = |eps: f64| {
            let p = params(eps);
            let st = reconstruct_constrained(&s, &z, &sg, &p).unwrap().into_components();
            let pr = Field::constant(64, 0.3);
            let e = energy_cc_four(&s, CcFields::from_slice(&st), &pr, &p).unwrap();
            let work = 0.3 * 40.0 * p.total_height();
            assert!((e.pressure_work - work).abs() < 1e-12);
            (e.total - work - restricted_hamiltonian(&s, &z, &sg, &p).unwrap()).abs()
        };
        let r = gap(0.2) / gap(0.1);
        assert!(r > 11.0 && r < 21.0, "ratio {r}");
    }

    #[test]
    fn block_identity_small_grid() {
        let s = Spectral::new(Grid::new(32, 20.0).unwrap());
        let p = params(0.1);
        let z = random_field(s.grid(), 7, 0.0, 0.2, 4);
        let sg = random_field(s.grid(), 8, 0.0, 1.0, 4);
        let st = reconstruct_constrained(&s, &z, &sg, &p).unwrap().into_components();
        let blocks = DiracBlocks::assemble(&s, CcFields::from_slice(&st), &p).unwrap();
        assert_eq!(blocks.subspace_dim(), 30);
        assert!((&blocks.a - &blocks.darboux).norm() < 1e-12);
        let id = dirac_block_identity_from(&blocks).unwrap();
        assert_eq!(id.phi1_row_max, 0.0);
        assert!(id.defect < 1e-10, "{}", id.defect);
        assert!(id.inverse_defect < 1e-10, "{}", id.inverse_defect);
        assert!(id.lu_path_gap < 1e-8, "{}", id.lu_path_gap);
        let bad = dirac_block_identity_from(&blocks.with_perturbed_b(1, 1.0)).unwrap();
        assert!(bad.defect > 1e-2);
    }

    #[test]
    fn working_basis_is_orthonormal() {
        let q = working_basis(16);
        let g = q.transpose() * &q;
        assert!((g - DMatrix::<f64>::identity(14, 14)).norm() < 1e-13);
        let ones = DMatrix::from_element(16, 1, 1.0);
        assert!((q.transpose() * ones).norm() < 1e-13);
    }

    #[test]
    fn propagation_on_rest_trajectory() {
        let s = Spectral::new(Grid::new(32, 10.0).unwrap());
        let z = Field::zeros(32);
        let traj = vec![(z.clone(), z.clone()); 3];
        let r = check_constraint_propagation(&s, &traj, &params(0.1)).unwrap();
        assert_eq!(r.max_phi1(), 0.0);
        assert_eq!(r.max_phi2(), 0.0);
        assert_eq!(r.phi2.len(), 3);
    }
}
