//! `O(eps^2)` transforms between boundary, interface and layer-mean
//! velocities and the Hamiltonian momenta.
//!
//! Inverses are truncated expansions (identity + `O(eps^4)` on composition),
//! except [`ubar_from_m`], which solves its defining elliptic problem exactly.

use crate::domain::{check_thickness, TwoLayerCoefficients};
use crate::energetics::{CcParams, DeepWaterParams, SgnParams};
use crate::{Field, PhysicalParams, Result, ScalingRegime, Spectral};

/// Layer index; fixes the sign of interface vertical velocities.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layer {
    Upper,
    Lower,
}

impl Layer {
    /// `(-1)^(j+1)` with `j = 1` for the upper and `j = 2` for the lower layer.
    pub fn sign(self) -> f64 {
        match self {
            Layer::Upper => 1.0,
            Layer::Lower => -1.0,
        }
    }
}

/// One layer's velocity in its three representations.
#[derive(Clone, Debug, PartialEq)]
pub struct VelocityTriple {
    pub boundary: Field,
    pub interface: Field,
    pub mean: Field,
    pub layer: Layer,
}

impl VelocityTriple {
    /// Builds all three representations from the interface velocity.
    pub fn from_interface(ops: &Spectral, interface: Field, eta: &Field, eps: f64, layer: Layer) -> Self {
        VelocityTriple {
            boundary: boundary_from_interface(ops, &interface, eta, eps),
            mean: mean_from_interface(ops, &interface, eta, eps),
            interface,
            layer,
        }
    }
}

pub fn interface_from_boundary(ops: &Spectral, u0: &Field, eta: &Field, eps: f64) -> Field {
    u0 - eta * eta * &ops.dx2(u0) * (0.5 * eps * eps)
}

pub fn boundary_from_interface(ops: &Spectral, ut: &Field, eta: &Field, eps: f64) -> Field {
    ut + eta * eta * &ops.dx2(ut) * (0.5 * eps * eps)
}

/// Interface vertical velocity `(-1)^(j+1) eps (eta u_x + eps^2/3 (eta^3 u_xx)_x)`.
pub fn w_from_interface(ops: &Spectral, ut: &Field, eta: &Field, eps: f64, layer: Layer) -> Field {
    let corr = ops.dx1(&(eta.powi(3) * ops.dx2(ut)));
    (eta * &ops.dx1(ut) + corr * (eps * eps / 3.0)) * (layer.sign() * eps)
}

pub fn mean_from_interface(ops: &Spectral, ut: &Field, eta: &Field, eps: f64) -> Field {
    ut + eta * eta * &ops.dx2(ut) * (eps * eps / 3.0)
}

pub fn interface_from_mean(ops: &Spectral, ub: &Field, eta: &Field, eps: f64) -> Field {
    ub - eta * eta * &ops.dx2(ub) * (eps * eps / 3.0)
}

/// Interface geometry of a two-layer state.
#[derive(Clone, Debug)]
pub struct LayerGeometry {
    pub rho1: f64,
    pub rho2: f64,
    pub eps: f64,
    /// Nondimensional total height.
    pub h: f64,
    pub eta1: Field,
    pub eta2: Field,
    pub psi: Field,
    pub zeta_x: Field,
    pub zeta_xx: Field,
}

impl LayerGeometry {
    /// Geometry for rest thicknesses `(a1, a2)`: `eta1 = a1 - zeta`, `eta2 = a2 + zeta`.
    pub fn new(ops: &Spectral, zeta: &Field, a1: f64, a2: f64, rho1: f64, rho2: f64, eps: f64) -> Result<Self> {
        let eta1 = zeta.map(|z| a1 - z);
        let eta2 = zeta.map(|z| a2 + z);
        check_thickness(&eta1, "eta1")?;
        check_thickness(&eta2, "eta2")?;
        let psi = eta1.zip_map(&eta2, |a, b| rho1 * b + rho2 * a);
        Ok(LayerGeometry {
            rho1,
            rho2,
            eps,
            h: a1 + a2,
            eta1,
            eta2,
            psi,
            zeta_x: ops.dx1(zeta),
            zeta_xx: ops.dx2(zeta),
        })
    }

    /// Geometry in the given scaling of a physical configuration.
    pub fn from_params(ops: &Spectral, zeta: &Field, params: &PhysicalParams, regime: &ScalingRegime) -> Result<Self> {
        let c = TwoLayerCoefficients::new(params, regime);
        Self::new(ops, zeta, c.a1, c.a2, params.rho1, params.rho2, regime.epsilon)
    }

    /// Geometry in the four-field system's units.
    pub fn from_cc(ops: &Spectral, zeta: &Field, p: &CcParams) -> Result<Self> {
        Self::new(ops, zeta, p.h1, p.h2, p.rho1, p.rho2, p.eps)
    }
}

/// Upper interface velocity from the lower one, eliminating the dynamical constraint.
pub fn u1_from_u2(ops: &Spectral, u2t: &Field, g: &LayerGeometry) -> Field {
    let e2 = g.eps * g.eps;
    let (n1, n2) = (&g.eta1, &g.eta2);
    let ratio = n2 / n1;
    let u2x = ops.dx1(u2t);
    let u2xx = ops.dx2(u2t);
    let curvature = (&g.zeta_x * &g.zeta_x * 2.0 / n1 + &g.zeta_xx) * (g.h * e2 / 3.0);
    -(&ratio * u2t) - &ratio * (n2 * n2 - n1 * n1) * &u2xx * (e2 / 3.0)
        + &g.zeta_x * &u2x * (2.0 / 3.0 * e2 * g.h)
        + curvature * u2t
}

/// Momentum shear from the lower interface velocity.
pub fn sigma_from_u2(ops: &Spectral, u2t: &Field, g: &LayerGeometry) -> Field {
    let e2 = g.eps * g.eps;
    let (n1, n2, r1, r2) = (&g.eta1, &g.eta2, g.rho1, g.rho2);
    let u2x = ops.dx1(u2t);
    let u2xx = ops.dx2(u2t);
    let lead = &g.psi / n1 * u2t;
    let disp = n2 * (n2 * n2 - n1 * n1) / n1 * &u2xx * (e2 * r1 / 3.0);
    let slope = n2.map(|e| 2.0 / 3.0 * r1 * g.h - (r1 - r2) * e) * &g.zeta_x * &u2x * e2;
    let curv = (&g.zeta_x * &g.zeta_x / n1 - &g.zeta_xx) * u2t * (r1 * g.h / 3.0 * e2);
    lead + disp - slope + curv
}

/// Lower interface velocity from the momentum shear.
pub fn u2_from_sigma(ops: &Spectral, sigma: &Field, g: &LayerGeometry) -> Field {
    let e2 = g.eps * g.eps;
    let (n1, n2, psi, r1, r2) = (&g.eta1, &g.eta2, &g.psi, g.rho1, g.rho2);
    let q = n1 * sigma / psi;
    let qx = ops.dx1(&q);
    let qxx = ops.dx2(&q);
    let disp = n2 * (n2 * n2 - n1 * n1) / psi * &qxx * (e2 * r1 / 3.0);
    let slope = n1 / psi * n2.map(|e| 2.0 / 3.0 * r1 * g.h - (r1 - r2) * e) * &g.zeta_x * &qx * e2;
    let curv = n1 * n1 / (psi * psi) * (&g.zeta_x * &g.zeta_x / n1 - &g.zeta_xx) * sigma * (r1 * g.h / 3.0 * e2);
    &q - disp + slope - curv
}

/// Upper interface velocity from the momentum shear.
pub fn u1_from_sigma(ops: &Spectral, sigma: &Field, g: &LayerGeometry) -> Field {
    let e2 = g.eps * g.eps;
    let (n1, n2, psi, r1, r2) = (&g.eta1, &g.eta2, &g.psi, g.rho1, g.rho2);
    let q = n1 * sigma / psi;
    let qx = ops.dx1(&q);
    let qxx = ops.dx2(&q);
    let psi2 = psi * psi;
    let lead = -(n2 * sigma / psi);
    let disp = n2 * (n2 * n2 - n1 * n1) / psi * &qxx * (e2 * r2 / 3.0);
    let slope = (n1 / psi * (2.0 / 3.0 * r2 * g.h) + n2 * n2 / psi * (r1 - r2)) * &g.zeta_x * &qx * e2;
    let curv = ((n2 * (3.0 * r1) + n1 * (2.0 * r2)) / &psi2 * &g.zeta_x * &g.zeta_x
        + n1 * n1 * r2 / &psi2 * &g.zeta_xx)
        * sigma
        * (e2 * g.h / 3.0);
    lead - disp + slope + curv
}

/// Canonical momentum from the depth-averaged velocity.
pub fn mu_from_ubar(ops: &Spectral, ubar: &Field, eta: &Field, p: &SgnParams) -> Field {
    let corr = ops.dx1(&(eta.powi(3) * ops.dx1(ubar))) / eta;
    (ubar - corr * (p.eps * p.eps / 3.0)) * p.rho
}

/// Truncated inverse of [`mu_from_ubar`].
pub fn ubar_from_mu(ops: &Spectral, mu: &Field, eta: &Field, p: &SgnParams) -> Field {
    let v = mu / p.rho;
    let corr = ops.dx1(&(eta.powi(3) * ops.dx1(&v))) / eta;
    v + corr * (p.eps * p.eps / 3.0)
}

/// Linearization of [`ubar_from_mu`] along `(eta_t, mu_t)`.
pub fn ubar_from_mu_tangent(
    ops: &Spectral,
    mu: &Field,
    eta: &Field,
    mu_t: &Field,
    eta_t: &Field,
    p: &SgnParams,
) -> Field {
    let v = mu / p.rho;
    let vt = mu_t / p.rho;
    let vx = ops.dx1(&v);
    let vtx = ops.dx1(&vt);
    let inner = eta.powi(3) * &vx;
    let inner_t = eta * eta * eta_t * &vx * 3.0 + eta.powi(3) * vtx;
    let corr_t = ops.dx1(&inner_t) / eta - ops.dx1(&inner) * eta_t / (eta * eta);
    vt + corr_t * (p.eps * p.eps / 3.0)
}

/// Canonical momentum from the interface velocity, `rho (u - eps^2 eta eta_x u_x)`.
pub fn mu_from_interface(ops: &Spectral, ut: &Field, eta: &Field, p: &SgnParams) -> Field {
    (ut - eta * &ops.dx1(eta) * &ops.dx1(ut) * (p.eps * p.eps)) * p.rho
}

/// Lie–Poisson momentum `m = eta mu`.
pub fn m_from_mu(eta: &Field, mu: &Field) -> Field {
    eta * mu
}

/// Solves `rho (eta u - eps^2/3 (eta^3 u_x)_x) = m` for `u`.
pub fn ubar_from_m(ops: &Spectral, m: &Field, eta: &Field, p: &SgnParams) -> Result<Field> {
    check_thickness(eta, "eta")?;
    let alpha = eta * p.rho;
    let beta = eta.powi(3) * (p.rho * p.eps * p.eps / 3.0);
    ops.solve_elliptic(&alpha, &beta, m)
}

/// `m` from the depth-averaged velocity (the exact definition).
pub fn m_from_ubar(ops: &Spectral, ubar: &Field, eta: &Field, p: &SgnParams) -> Field {
    let flux = ops.dx1(&(eta.powi(3) * ops.dx1(ubar)));
    (eta * ubar - flux * (p.eps * p.eps / 3.0)) * p.rho
}

/// Deep-water momentum shear from an upper-layer velocity (interface or mean).
pub fn sigma_deepwater_from_u1(ops: &Spectral, u1: &Field, eta1: &Field, p: &DeepWaterParams) -> Field {
    let corr = ops.dx2(&(eta1 * u1));
    u1 * (-p.rho1) + corr * (p.delta / 3.0 * p.h1 * p.rho2)
}

/// Truncated inverse of [`sigma_deepwater_from_u1`].
pub fn u1_from_sigma_deepwater(ops: &Spectral, sigma: &Field, eta1: &Field, p: &DeepWaterParams) -> Field {
    let corr = ops.dx2(&(eta1 * sigma));
    sigma * (-1.0 / p.rho1) - corr * (p.delta / 3.0 * p.h1 * p.rho2 / (p.rho1 * p.rho1))
}

/// Layer momenta on the constraint manifold; `mu2 - mu1 = sigma` exactly.
pub fn mu12_from_sigma(ops: &Spectral, sigma: &Field, g: &LayerGeometry) -> (Field, Field) {
    let e2 = g.eps * g.eps;
    let (n1, n2, psi, r1, r2) = (&g.eta1, &g.eta2, &g.psi, g.rho1, g.rho2);
    let b3 = n1.powi(3) * r2 + n2.powi(3) * r1;
    let inner = b3 * ops.dx1(&(n2 * sigma / psi)) - n2.powi(3) * ops.dx1(sigma);
    let mu1 = -(n2 * sigma / psi) * r1 + ops.dx1(&inner) / psi * (e2 * r1 / 3.0);
    let mu2 = &mu1 + sigma;
    (mu1, mu2)
}
