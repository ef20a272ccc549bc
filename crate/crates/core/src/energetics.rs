//! Hamiltonian functionals, their variational derivatives, and a
//! central-difference gradient oracle.

use serde::{Deserialize, Serialize};

use crate::domain::{check_finite, check_thickness, thicknesses, TwoLayerCoefficients};
use crate::{Error, Field, PhysicalParams, Result, ScalingRegime, Spectral, VerticalScale};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct EnergyBreakdown {
    pub kinetic: f64,
    pub potential: f64,
    pub pressure_work: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    pub fn new(kinetic: f64, potential: f64, pressure_work: f64) -> Self {
        EnergyBreakdown {
            kinetic,
            potential,
            pressure_work,
            total: kinetic + potential + pressure_work,
        }
    }
}

// ---------------------------------------------------------------------------
// two-layer model

/// Two-layer state with thicknesses and derivatives precomputed.
struct TwoLayerFrame {
    eta1: Field,
    eta2: Field,
    psi: Field,
    zx: Field,
    zxx: Field,
    sx: Field,
    sxx: Field,
}

impl TwoLayerFrame {
    fn new(ops: &Spectral, zeta: &Field, sigma: &Field, c: &TwoLayerCoefficients) -> Result<Self> {
        let eta1 = zeta.map(|z| c.a1 - z);
        let eta2 = zeta.map(|z| c.a2 + z);
        check_thickness(&eta1, "eta1")?;
        check_thickness(&eta2, "eta2")?;
        check_finite(sigma, "sigma")?;
        let psi = eta1.zip_map(&eta2, |a, b| c.rho1 * b + c.rho2 * a);
        Ok(TwoLayerFrame {
            zx: ops.dx1(zeta),
            zxx: ops.dx2(zeta),
            sx: ops.dx1(sigma),
            sxx: ops.dx2(sigma),
            eta1,
            eta2,
            psi,
        })
    }
}

/// Energy of the reduced two-layer model for arbitrary prefactors.
pub fn energy_two_layer_with(
    ops: &Spectral,
    zeta: &Field,
    sigma: &Field,
    c: &TwoLayerCoefficients,
) -> Result<EnergyBreakdown> {
    let f = TwoLayerFrame::new(ops, zeta, sigma, c)?;
    let (r1, r2, h) = (c.rho1, c.rho2, c.h);
    let mut kin = 0.0;
    let mut pot = 0.0;
    for i in 0..zeta.len() {
        let (n1, n2, p) = (f.eta1[i], f.eta2[i], f.psi[i]);
        let (s, sx, zx) = (sigma[i], f.sx[i], f.zx[i]);
        let a = n1 * n1 * n2 * n2 * (r1 * n1 + r2 * n2) / (6.0 * p * p);
        let b = r1 * r2 * h * n1 * n2 * (n1 * n1 - n2 * n2) / (6.0 * p.powi(3));
        let cc = r1 * r2 * h * h * (r2 * n1.powi(3) + r1 * n2.powi(3)) / (6.0 * p.powi(4));
        kin += c.kinetic * n1 * n2 * s * s / (2.0 * p)
            - c.dispersive * (a * sx * sx + b * zx * 2.0 * s * sx + cc * zx * zx * s * s);
        pot += 0.5 * c.potential * zeta[i] * zeta[i];
    }
    Ok(EnergyBreakdown::new(ops.dx() * kin, ops.dx() * pot, 0.0))
}

/// Variational derivatives `(dH/dzeta, dH/dsigma)` for arbitrary prefactors.
pub fn grad_two_layer_with(
    ops: &Spectral,
    zeta: &Field,
    sigma: &Field,
    c: &TwoLayerCoefficients,
) -> Result<(Field, Field)> {
    let f = TwoLayerFrame::new(ops, zeta, sigma, c)?;
    let (r1, r2, h) = (c.rho1, c.rho2, c.h);
    let (kk, dd, gp) = (c.kinetic, c.dispersive, c.potential);
    let n = zeta.len();
    let mut dz = Field::zeros(n);
    let mut ds = Field::zeros(n);
    for i in 0..n {
        let (n1, n2, p) = (f.eta1[i], f.eta2[i], f.psi[i]);
        let (s, sx, sxx) = (sigma[i], f.sx[i], f.sxx[i]);
        let (zx, zxx) = (f.zx[i], f.zxx[i]);
        let (p2, p3, p4, p5) = (p * p, p.powi(3), p.powi(4), p.powi(5));
        let b3 = r1 * n2.powi(3) + r2 * n1.powi(3);
        let m = r1 * n1 + r2 * n2;
        let hh = h * h * r1 * r2;

        dz[i] = gp * zeta[i] - 0.5 * kk * (r1 * n2 * n2 - r2 * n1 * n1) / p2 * s * s
            + dd * (0.5 * (r1 - r2) * n1 * n1 * n2 * n2 / p2 * sx * sx
                + hh * n1 * n2 * (n1 - n2) / (3.0 * p3) * s * sxx
                + 2.0 * hh * b3 / (3.0 * p4) * zx * s * sx
                + hh * b3 / (3.0 * p4) * s * s * zxx
                + (0.5 * hh * (r1 * n2 * n2 - r2 * n1 * n1) / p4
                    - 2.0 * hh * (r1 - r2) * b3 / (3.0 * p5))
                    * zx
                    * zx
                    * s
                    * s);

        // 6 dA/dzeta with A = eta1^2 eta2^2 (rho1 eta1 + rho2 eta2) / (6 psi^2)
        let a_prime6 = n1 * n2 / p3
            * (2.0 * (n1 - n2) * m * p + (r2 - r1) * n1 * n2 * (p + 2.0 * m));
        ds[i] = kk * n1 * n2 / p * s
            + dd / 3.0
                * (n1 * n1 * n2 * n2 * m / p2 * sxx + a_prime6 * zx * sx
                    - hh * n1 * n2 * (n2 - n1) / p3 * zxx * s
                    - hh * n1 * n2 * ((r1 + r2) * h + r1 * n1 + r2 * n2) / p4 * zx * zx * s);
    }
    Ok((dz, ds))
}

/// Energy of the reduced two-layer model in the given scaling.
///
/// Lower-layer scaling gives the `O(eps^2)` two-layer energy with `h2` and
/// `h2^2` prefactors; upper-layer scaling gives the same structure with
/// `h1 <-> h2` and dispersion `delta h1^2 / h2`.
pub fn energy_two_layer(
    ops: &Spectral,
    zeta: &Field,
    sigma: &Field,
    params: &PhysicalParams,
    regime: &ScalingRegime,
) -> Result<EnergyBreakdown> {
    energy_two_layer_with(ops, zeta, sigma, &TwoLayerCoefficients::new(params, regime))
}

pub fn grad_two_layer(
    ops: &Spectral,
    zeta: &Field,
    sigma: &Field,
    params: &PhysicalParams,
    regime: &ScalingRegime,
) -> Result<(Field, Field)> {
    grad_two_layer_with(ops, zeta, sigma, &TwoLayerCoefficients::new(params, regime))
}

// ---------------------------------------------------------------------------
// single layer (SGN)

/// Single-layer parameters: density, gravity, rest depth and dispersion.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SgnParams {
    pub rho: f64,
    pub g: f64,
    pub depth: f64,
    pub eps: f64,
}

impl SgnParams {
    /// The lower layer of a two-fluid configuration in lower-layer scaling.
    pub fn from_physical(params: &PhysicalParams) -> Self {
        SgnParams {
            rho: params.rho2,
            g: params.g,
            depth: params.h2,
            eps: params.h2 / params.l,
        }
    }
}

pub fn energy_sgn(ops: &Spectral, eta: &Field, mu: &Field, p: &SgnParams) -> Result<EnergyBreakdown> {
    check_thickness(eta, "eta")?;
    check_finite(mu, "mu")?;
    let mx = ops.dx1(mu);
    let e2 = p.eps * p.eps;
    let h2 = p.depth * p.depth;
    let kin: f64 = (0..eta.len())
        .map(|i| (eta[i] * mu[i] * mu[i] - e2 / 3.0 * eta[i].powi(3) * mx[i] * mx[i]) / p.rho)
        .sum();
    let pot: f64 = eta.iter().map(|&e| p.g * p.rho * (e - p.depth).powi(2)).sum();
    Ok(EnergyBreakdown::new(
        0.5 * h2 * ops.dx() * kin,
        0.5 * h2 * ops.dx() * pot,
        0.0,
    ))
}

/// `(dH/deta, dH/dmu)` of the canonical single-layer Hamiltonian.
pub fn grad_sgn(ops: &Spectral, eta: &Field, mu: &Field, p: &SgnParams) -> Result<(Field, Field)> {
    check_thickness(eta, "eta")?;
    check_finite(mu, "mu")?;
    let e2 = p.eps * p.eps;
    let h2 = p.depth * p.depth;
    let mx = ops.dx1(mu);
    let flux = ops.dx1(&(eta.powi(3) * &mx));
    let d_mu = (eta * mu + flux * (e2 / 3.0)) * (h2 / p.rho);
    let mut d_eta = Field::zeros(eta.len());
    for i in 0..eta.len() {
        d_eta[i] = h2
            * (0.5 * (mu[i] * mu[i] - e2 * eta[i] * eta[i] * mx[i] * mx[i]) / p.rho
                + p.g * p.rho * (eta[i] - p.depth));
    }
    Ok((d_eta, d_mu))
}

/// Classical SGN energy in terms of the depth-averaged velocity.
pub fn energy_sgn_classic(
    ops: &Spectral,
    eta: &Field,
    ubar: &Field,
    p: &SgnParams,
) -> Result<EnergyBreakdown> {
    check_thickness(eta, "eta")?;
    check_finite(ubar, "ubar")?;
    let ux = ops.dx1(ubar);
    let e2 = p.eps * p.eps;
    let kin: f64 = (0..eta.len())
        .map(|i| eta[i] * ubar[i] * ubar[i] + e2 / 3.0 * eta[i].powi(3) * ux[i] * ux[i])
        .sum();
    let pot: f64 = eta.iter().map(|&e| p.g * (e - p.depth).powi(2)).sum();
    Ok(EnergyBreakdown::new(
        0.5 * p.rho * ops.dx() * kin,
        0.5 * p.rho * ops.dx() * pot,
        0.0,
    ))
}

// ---------------------------------------------------------------------------
// deep water

/// Parameters of the local deep-water model (upper-layer units).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeepWaterParams {
    pub rho1: f64,
    pub rho2: f64,
    pub h1: f64,
    pub g: f64,
    pub delta: f64,
}

impl DeepWaterParams {
    pub fn new(params: &PhysicalParams, regime: &ScalingRegime) -> Result<Self> {
        if regime.vertical_scale != VerticalScale::UpperLayer {
            return Err(Error::InvalidParameter {
                name: "vertical_scale",
                reason: "the deep-water model needs upper-layer scaling".into(),
            });
        }
        if params.rho1 <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "rho1",
                reason: "the deep-water model needs a positive upper density".into(),
            });
        }
        Ok(DeepWaterParams {
            rho1: params.rho1,
            rho2: params.rho2,
            h1: params.h1,
            g: params.g,
            delta: regime.delta,
        })
    }

    /// Coefficient `h1^2 rho2 / rho1^2` of the dispersive term.
    pub fn dispersion(&self) -> f64 {
        self.h1 * self.h1 * self.rho2 / (self.rho1 * self.rho1)
    }

    /// `g h1^2 (rho2 - rho1)`
    pub fn stiffness(&self) -> f64 {
        self.g * self.h1 * self.h1 * (self.rho2 - self.rho1)
    }
}

pub fn energy_deepwater(
    ops: &Spectral,
    eta1: &Field,
    sigma: &Field,
    p: &DeepWaterParams,
) -> Result<EnergyBreakdown> {
    check_thickness(eta1, "eta1")?;
    check_finite(sigma, "sigma")?;
    let q = ops.dx1(&(eta1 * sigma));
    let mut kin = 0.0;
    let mut pot = 0.0;
    for i in 0..eta1.len() {
        kin += p.h1 * eta1[i] * sigma[i] * sigma[i] / (2.0 * p.rho1)
            - p.delta * p.dispersion() / 6.0 * q[i] * q[i];
        pot += 0.5 * p.stiffness() * (1.0 - eta1[i]).powi(2);
    }
    Ok(EnergyBreakdown::new(ops.dx() * kin, ops.dx() * pot, 0.0))
}

/// `(dH/deta1, dH/dsigma)` of the deep-water Hamiltonian.
pub fn grad_deepwater(
    ops: &Spectral,
    eta1: &Field,
    sigma: &Field,
    p: &DeepWaterParams,
) -> Result<(Field, Field)> {
    check_thickness(eta1, "eta1")?;
    check_finite(sigma, "sigma")?;
    let qxx = ops.dx2(&(eta1 * sigma));
    let c = p.delta * p.dispersion() / 3.0;
    let d_eta = sigma * sigma * (p.h1 / (2.0 * p.rho1)) + sigma * &qxx * c
        - eta1.map(|e| p.stiffness() * (1.0 - e));
    let d_sigma = eta1 * sigma * (p.h1 / p.rho1) + eta1 * &qxx * c;
    Ok((d_eta, d_sigma))
}

// ---------------------------------------------------------------------------
// Camassa-Choi four-field system

/// Parameters of the four-field system; heights are in units of `h2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CcParams {
    pub rho1: f64,
    pub rho2: f64,
    pub g: f64,
    pub h1: f64,
    pub h2: f64,
    pub eps: f64,
}

impl CcParams {
    pub fn from_physical(params: &PhysicalParams) -> Result<Self> {
        if params.rho1 <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "rho1",
                reason: "the four-field system needs a positive upper density".into(),
            });
        }
        Ok(CcParams {
            rho1: params.rho1,
            rho2: params.rho2,
            g: params.g,
            h1: params.h1 / params.h2,
            h2: 1.0,
            eps: params.h2 / params.l,
        })
    }

    pub fn total_height(&self) -> f64 {
        self.h1 + self.h2
    }

    /// Two-layer prefactors matching the restricted Hamiltonian.
    pub fn restricted_coefficients(&self) -> TwoLayerCoefficients {
        TwoLayerCoefficients {
            rho1: self.rho1,
            rho2: self.rho2,
            a1: self.h1,
            a2: self.h2,
            h: self.total_height(),
            kinetic: 1.0,
            dispersive: self.eps * self.eps,
            potential: self.g * (self.rho2 - self.rho1),
        }
    }
}

/// Layer-wise view of a four-field state.
#[derive(Clone, Copy, Debug)]
pub struct CcFields<'a> {
    pub eta1: &'a Field,
    pub mu1: &'a Field,
    pub eta2: &'a Field,
    pub mu2: &'a Field,
}

impl<'a> CcFields<'a> {
    pub fn from_slice(s: &'a [Field]) -> Self {
        CcFields {
            eta1: &s[0],
            mu1: &s[1],
            eta2: &s[2],
            mu2: &s[3],
        }
    }

    pub(crate) fn check(&self) -> Result<()> {
        check_thickness(self.eta1, "eta1")?;
        check_thickness(self.eta2, "eta2")?;
        check_finite(self.mu1, "mu1")?;
        check_finite(self.mu2, "mu2")
    }
}

fn layer_kinetic(ops: &Spectral, eta: &Field, mu: &Field, rho: f64, eps: f64) -> f64 {
    let mx = ops.dx1(mu);
    let s: f64 = (0..eta.len())
        .map(|i| eta[i] * mu[i] * mu[i] - eps * eps / 3.0 * eta[i].powi(3) * mx[i] * mx[i])
        .sum();
    0.5 * ops.dx() * s / rho
}

/// Four-field Hamiltonian; the upper layer carries reversed gravity.
pub fn energy_cc_four(
    ops: &Spectral,
    s: CcFields<'_>,
    pressure: &Field,
    p: &CcParams,
) -> Result<EnergyBreakdown> {
    s.check()?;
    let kin = layer_kinetic(ops, s.eta1, s.mu1, p.rho1, p.eps)
        + layer_kinetic(ops, s.eta2, s.mu2, p.rho2, p.eps);
    let pot: f64 = (0..s.eta1.len())
        .map(|i| {
            -p.g * p.rho1 * (s.eta1[i] - p.h1).powi(2) + p.g * p.rho2 * (s.eta2[i] - p.h2).powi(2)
        })
        .sum();
    let work = ops.integrate(&((s.eta1 + s.eta2) * pressure));
    Ok(EnergyBreakdown::new(kin, 0.5 * ops.dx() * pot, work))
}

/// Gradient `(dH/deta1, dH/dmu1, dH/deta2, dH/dmu2)` of the four-field Hamiltonian.
pub fn grad_cc_four(
    ops: &Spectral,
    s: CcFields<'_>,
    pressure: &Field,
    p: &CcParams,
) -> Result<[Field; 4]> {
    s.check()?;
    let e2 = p.eps * p.eps;
    let layer = |eta: &Field, mu: &Field, rho: f64, gsign: f64, rest: f64| {
        let mx = ops.dx1(mu);
        let flux = ops.dx1(&(eta.powi(3) * &mx));
        let d_mu = (eta * mu + flux * (e2 / 3.0)) / rho;
        let mut d_eta = Field::zeros(eta.len());
        for i in 0..eta.len() {
            d_eta[i] = 0.5 * (mu[i] * mu[i] - e2 * eta[i] * eta[i] * mx[i] * mx[i]) / rho
                + gsign * p.g * rho * (eta[i] - rest)
                + pressure[i];
        }
        (d_eta, d_mu)
    };
    let (de1, dm1) = layer(s.eta1, s.mu1, p.rho1, -1.0, p.h1);
    let (de2, dm2) = layer(s.eta2, s.mu2, p.rho2, 1.0, p.h2);
    Ok([de1, dm1, de2, dm2])
}

// ---------------------------------------------------------------------------
// finite-difference oracle

/// Central-difference functional gradient with respect to one component.
///
/// Each node is perturbed by `q = 1e-5 (1 + max|f|)` and the gradient is
/// `(H+ - H-) / (2 q dx)`.
pub fn fd_gradient<F>(functional: F, state: &[Field], component: usize, dx: f64) -> Result<Field>
where
    F: Fn(&[Field]) -> Result<f64>,
{
    let q = 1e-5 * (1.0 + state[component].max_abs());
    let mut work: Vec<Field> = state.to_vec();
    let n = state[component].len();
    let mut out = Field::zeros(n);
    for i in 0..n {
        let orig = work[component][i];
        work[component][i] = orig + q;
        let hp = functional(&work)?;
        work[component][i] = orig - q;
        let hm = functional(&work)?;
        work[component][i] = orig;
        out[i] = (hp - hm) / (2.0 * q * dx);
    }
    Ok(out)
}

/// `|a - b| / |b|` in the discrete L2 norm (absolute when `b` vanishes).
pub fn relative_l2(a: &Field, b: &Field) -> f64 {
    let d = (a - b).norm();
    let s = b.norm();
    if s > 0.0 {
        d / s
    } else {
        d
    }
}

/// Convenience wrapper over [`thicknesses`] for callers holding a regime.
pub fn layer_thicknesses(
    zeta: &Field,
    params: &PhysicalParams,
    regime: &ScalingRegime,
) -> Result<(Field, Field)> {
    thicknesses(zeta, params, regime)
}
