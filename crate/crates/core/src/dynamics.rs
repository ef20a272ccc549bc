//! Poisson structures, evolution right-hand sides and residual evaluators.
//!
//! Every evolver has the form `state_t = P(state) grad H`, where `P` already
//! carries the overall minus sign of the Darboux tensors.

use crate::domain::{check_finite, check_thickness, TwoLayerCoefficients};
use crate::energetics::{
    grad_cc_four, grad_deepwater, grad_two_layer_with, CcFields, CcParams, DeepWaterParams, SgnParams,
};
use crate::kinematics::ubar_from_m;
use crate::{Error, Field, PhysicalParams, Result, ScalingRegime, Spectral};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PoissonKind {
    /// `-[[0, d],[d, 0]]` on a pair of fields.
    DarbouxPair,
    /// Two independent Darboux pairs on four fields.
    DarbouxQuad,
    /// `-[[0, d eta],[eta d, m d + d m]]` on `(eta, m)`.
    SgnLie,
}

impl PoissonKind {
    pub fn name(self) -> &'static str {
        match self {
            PoissonKind::DarbouxPair => "darboux_pair",
            PoissonKind::DarbouxQuad => "darboux_quad",
            PoissonKind::SgnLie => "sgn_lie",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PoissonStructure {
    pub kind: PoissonKind,
    /// `+1` for the standard orientation, `-1` when the configuration
    /// variable enters with the opposite sign (e.g. `eta1 = 1 - zeta`).
    pub orientation: f64,
}

impl PoissonStructure {
    pub fn darboux_pair() -> Self {
        PoissonStructure { kind: PoissonKind::DarbouxPair, orientation: 1.0 }
    }

    pub fn darboux_pair_reversed() -> Self {
        PoissonStructure { kind: PoissonKind::DarbouxPair, orientation: -1.0 }
    }

    pub fn darboux_quad() -> Self {
        PoissonStructure { kind: PoissonKind::DarbouxQuad, orientation: 1.0 }
    }

    pub fn sgn_lie() -> Self {
        PoissonStructure { kind: PoissonKind::SgnLie, orientation: 1.0 }
    }

    pub fn arity(&self) -> usize {
        match self.kind {
            PoissonKind::DarbouxQuad => 4,
            _ => 2,
        }
    }

    /// Applies the tensor at `state` to the covector `cov`.
    ///
    /// `state` is only read by the state-dependent [`PoissonKind::SgnLie`].
    pub fn apply(&self, ops: &Spectral, state: &[Field], cov: &[Field]) -> Result<Vec<Field>> {
        let k = self.arity();
        if cov.len() != k || state.len() != k {
            return Err(Error::StateMismatch {
                model: self.kind.name(),
                reason: format!("expected {k} components, got {} and {}", state.len(), cov.len()),
            });
        }
        let s = -self.orientation;
        Ok(match self.kind {
            PoissonKind::DarbouxPair => vec![ops.dx1(&cov[1]) * s, ops.dx1(&cov[0]) * s],
            PoissonKind::DarbouxQuad => vec![
                ops.dx1(&cov[1]) * s,
                ops.dx1(&cov[0]) * s,
                ops.dx1(&cov[3]) * s,
                ops.dx1(&cov[2]) * s,
            ],
            PoissonKind::SgnLie => {
                let (eta, m) = (&state[0], &state[1]);
                let (a, b) = (&cov[0], &cov[1]);
                let first = ops.dx1(&(eta * b));
                let second = eta * &ops.dx1(a) + m * &ops.dx1(b) + ops.dx1(&(m * b));
                vec![first * s, second * s]
            }
        })
    }
}

// ---------------------------------------------------------------------------
// two-layer

pub fn rhs_two_layer_with(
    ops: &Spectral,
    zeta: &Field,
    sigma: &Field,
    c: &TwoLayerCoefficients,
) -> Result<(Field, Field)> {
    let (dz, ds) = grad_two_layer_with(ops, zeta, sigma, c)?;
    Ok((-ops.dx1(&ds), -ops.dx1(&dz)))
}

/// `(zeta_t, sigma_t) = -(d_x dH/dsigma, d_x dH/dzeta)`.
pub fn rhs_two_layer(
    ops: &Spectral,
    zeta: &Field,
    sigma: &Field,
    params: &PhysicalParams,
    regime: &ScalingRegime,
) -> Result<(Field, Field)> {
    rhs_two_layer_with(ops, zeta, sigma, &TwoLayerCoefficients::new(params, regime))
}

// ---------------------------------------------------------------------------
// single layer

/// Canonical single-layer system, expanded by hand.
pub fn rhs_sgn_canonical(ops: &Spectral, eta: &Field, mu: &Field, p: &SgnParams) -> Result<(Field, Field)> {
    check_thickness(eta, "eta")?;
    check_finite(mu, "mu")?;
    let e2 = p.eps * p.eps;
    let mx = ops.dx1(mu);
    let eta_t = -(ops.dx1(&(eta * mu)) / p.rho + ops.dx2(&(eta.powi(3) * &mx)) * (e2 / (3.0 * p.rho)));
    let mu_t = -(mu * &mx / p.rho + ops.dx1(eta) * (p.g * p.rho)
        - ops.dx1(&(eta * eta * &mx * &mx)) * (e2 / (2.0 * p.rho)));
    Ok((eta_t, mu_t))
}

/// Residuals of the classical single-layer system in `(eta, ubar)`.
pub fn residual_sgn_classic(
    ops: &Spectral,
    eta: &Field,
    ubar: &Field,
    eta_t: &Field,
    ubar_t: &Field,
    p: &SgnParams,
) -> (Field, Field) {
    let r1 = eta_t + &ops.dx1(&(eta * ubar));
    let ux = ops.dx1(ubar);
    let mixed = ops.dx1(ubar_t) + ubar * &ops.dx2(ubar) - &ux * &ux;
    let disp = ops.dx1(&(eta.powi(3) * mixed)) / eta;
    let r2 = ubar_t + &(ubar * &ux) + ops.dx1(eta) * p.g - disp * (p.eps * p.eps / 3.0);
    (r1, r2)
}

/// `(dH/deta at fixed m, ubar)` for the classical energy in `(eta, m)`.
pub fn grad_sgn_classic_m(ops: &Spectral, eta: &Field, m: &Field, p: &SgnParams) -> Result<(Field, Field)> {
    let u = ubar_from_m(ops, m, eta, p)?;
    let ux = ops.dx1(&u);
    let d_eta = (&u * &u * (-0.5) - eta * eta * &ux * &ux * (0.5 * p.eps * p.eps)) * p.rho
        + eta.map(|e| p.g * p.rho * (e - p.depth));
    Ok((d_eta, u))
}

/// Lie–Poisson form of the classical system, `(eta_t, m_t) = P_sgn grad H`.
pub fn rhs_sgn_classic_m(ops: &Spectral, eta: &Field, m: &Field, p: &SgnParams) -> Result<(Field, Field)> {
    check_finite(m, "m")?;
    let (de, dm) = grad_sgn_classic_m(ops, eta, m, p)?;
    let out = PoissonStructure::sgn_lie().apply(ops, &[eta.clone(), m.clone()], &[de, dm])?;
    let mut it = out.into_iter();
    Ok((it.next().unwrap(), it.next().unwrap()))
}

// ---------------------------------------------------------------------------
// deep water

/// Local deep-water system in `(eta1, sigma)`; `eta1 = 1 - zeta` flips the
/// orientation of the Darboux pair.
pub fn rhs_deepwater(ops: &Spectral, eta1: &Field, sigma: &Field, p: &DeepWaterParams) -> Result<(Field, Field)> {
    let (de, ds) = grad_deepwater(ops, eta1, sigma, p)?;
    Ok((ops.dx1(&ds), ops.dx1(&de)))
}

/// Dispersionless shallow system in `(eta1, ubar1)`.
pub fn rhs_boussinesq_dispersionless(
    ops: &Spectral,
    eta1: &Field,
    ubar1: &Field,
    p: &DeepWaterParams,
) -> (Field, Field) {
    let eta_t = -ops.dx1(&(eta1 * ubar1)) * p.h1;
    let u_t = -(ubar1 * &ops.dx1(ubar1) * p.h1)
        - ops.dx1(eta1) * (p.g * p.h1 * p.h1 * (p.rho2 / p.rho1 - 1.0));
    (eta_t, u_t)
}

/// Time-derivative data along a deep-water trajectory in mean-velocity form.
#[derive(Clone, Debug)]
pub struct BoussinesqInputs<'a> {
    pub eta1: &'a Field,
    pub ubar1: &'a Field,
    pub eta1_t: &'a Field,
    pub ubar1_t: &'a Field,
    pub eta1_tt: &'a Field,
}

#[derive(Clone, Debug)]
pub struct BoussinesqResiduals {
    /// Mass equation, shared by both forms.
    pub mass: Field,
    /// Momentum equation with the `(eta1 ubar1)_xxt` term.
    pub momentum_xxt: Field,
    /// Momentum equation with the `eta1_xtt` term.
    pub momentum_favored: Field,
}

pub fn residual_boussinesq(ops: &Spectral, d: &BoussinesqInputs<'_>, p: &DeepWaterParams) -> BoussinesqResiduals {
    let mass = d.eta1_t + &(ops.dx1(&(d.eta1 * d.ubar1)) * p.h1);
    let base = d.ubar1_t
        + &(d.ubar1 * &ops.dx1(d.ubar1) * p.h1)
        + ops.dx1(d.eta1) * (p.g * p.h1 * p.h1 * (p.rho2 / p.rho1 - 1.0));
    let flux_t = d.eta1_t * d.ubar1 + d.eta1 * d.ubar1_t;
    let ratio = p.rho2 / p.rho1;
    let momentum_xxt = &base - &(ops.dx2(&flux_t) * (p.delta / 3.0 * p.h1 * ratio));
    let momentum_favored = &base + &(ops.dx1(d.eta1_tt) * (p.delta / 3.0 * ratio));
    BoussinesqResiduals { mass, momentum_xxt, momentum_favored }
}

// ---------------------------------------------------------------------------
// four-field system

/// Four-field evolution for a prescribed pressure gradient `pressure_x`.
pub fn rhs_cc_four(ops: &Spectral, s: CcFields<'_>, pressure_x: &Field, p: &CcParams) -> Result<[Field; 4]> {
    check_finite(pressure_x, "pressure_x")?;
    let grad = grad_cc_four(ops, s, &Field::zeros(pressure_x.len()), p)?;
    let state = [s.eta1.clone(), s.mu1.clone(), s.eta2.clone(), s.mu2.clone()];
    let out = PoissonStructure::darboux_quad().apply(ops, &state, &grad)?;
    let [e1, m1, e2, m2]: [Field; 4] = out.try_into().expect("four components");
    Ok([e1, m1 - pressure_x, e2, m2 - pressure_x])
}

// ---------------------------------------------------------------------------
// linear well-posedness

/// Smallest local wavenumber above which the canonical two-layer
/// Hamiltonian loses convexity in `sigma`.
pub fn cutoff_two_layer(zeta: &Field, c: &TwoLayerCoefficients) -> f64 {
    if c.dispersive == 0.0 {
        return f64::INFINITY;
    }
    zeta.iter()
        .map(|&z| {
            let (n1, n2) = (c.a1 - z, c.a2 + z);
            let psi = c.rho1 * n2 + c.rho2 * n1;
            let m = c.rho1 * n1 + c.rho2 * n2;
            (3.0 * c.kinetic * psi / (c.dispersive * n1 * n2 * m)).sqrt()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Cutoff `sqrt(3) / (eps max eta)` of a canonical single layer.
pub fn cutoff_sgn(eta: &Field, eps: f64) -> f64 {
    let emax = eta.iter().fold(0.0f64, |a, &e| a.max(e.abs()));
    if eps == 0.0 || emax == 0.0 {
        return f64::INFINITY;
    }
    3f64.sqrt() / (eps * emax)
}

/// Cutoff `sqrt(3 rho1 / (delta h1 rho2 max eta1))` of the deep-water model.
pub fn cutoff_deepwater(eta1: &Field, p: &DeepWaterParams) -> f64 {
    let emax = eta1.iter().fold(0.0f64, |a, &e| a.max(e.abs()));
    if p.delta == 0.0 || emax == 0.0 {
        return f64::INFINITY;
    }
    (3.0 * p.rho1 / (p.delta * p.h1 * p.rho2 * emax)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energetics::grad_sgn;
    use crate::verify::random_field;
    use crate::{Grid, VerticalScale};

    fn setup() -> (Spectral, PhysicalParams, ScalingRegime) {
        let p = PhysicalParams::new(1.0, 1.5, 1.2, 1.0, 1.0, 5.0).unwrap();
        let r = ScalingRegime::lower_layer(&p);
        (Spectral::new(Grid::new(64, 64.0).unwrap()), p, r)
    }

    #[test]
    fn rest_is_equilibrium() {
        let (s, p, r) = setup();
        let z = Field::zeros(64);
        let (a, b) = rhs_two_layer(&s, &z, &z, &p, &r).unwrap();
        assert!(a.max_abs() == 0.0 && b.max_abs() == 0.0);
        let sp = SgnParams { rho: 1.0, g: 1.0, depth: 1.0, eps: 0.2 };
        let (a, b) = rhs_sgn_canonical(&s, &Field::constant(64, 1.0), &z, &sp).unwrap();
        assert!(a.max_abs() == 0.0 && b.max_abs() == 0.0);
        let (a, b) = rhs_sgn_classic_m(&s, &Field::constant(64, 1.0), &z, &sp).unwrap();
        assert!(a.max_abs() < 1e-15 && b.max_abs() < 1e-15);
    }

    #[test]
    fn constant_state_is_equilibrium() {
        let (s, p, r) = setup();
        let (a, b) = rhs_two_layer(&s, &Field::constant(64, 0.1), &Field::constant(64, 0.7), &p, &r).unwrap();
        assert!(a.max_abs() < 1e-13 && b.max_abs() < 1e-13);
        let sp = SgnParams { rho: 1.3, g: 1.0, depth: 1.0, eps: 0.2 };
        let (a, b) = rhs_sgn_canonical(&s, &Field::constant(64, 1.1), &Field::constant(64, 0.4), &sp).unwrap();
        assert!(a.max_abs() < 1e-13 && b.max_abs() < 1e-13);
    }

    #[test]
    fn canonical_sgn_matches_structural_assembly() {
        let s = Spectral::new(Grid::new(64, 40.0).unwrap());
        let sp = SgnParams { rho: 1.3, g: 0.9, depth: 1.4, eps: 0.1 };
        let eta = random_field(s.grid(), 1, 1.4, 0.2, 5);
        let mu = random_field(s.grid(), 2, 0.0, 0.5, 5);
        let (a, b) = rhs_sgn_canonical(&s, &eta, &mu, &sp).unwrap();
        let (ge, gm) = grad_sgn(&s, &eta, &mu, &sp).unwrap();
        let h2 = sp.depth * sp.depth;
        let out = PoissonStructure::darboux_pair().apply(&s, &[eta, mu], &[ge, gm]).unwrap();
        assert!((&a - &(&out[0] / h2)).max_abs() < 1e-10 * (1.0 + a.max_abs()));
        assert!((&b - &(&out[1] / h2)).max_abs() < 1e-10 * (1.0 + b.max_abs()));
    }

    #[test]
    fn skew_symmetry() {
        let s = Spectral::new(Grid::new(64, 20.0).unwrap());
        let f = |seed| random_field(s.grid(), seed, 0.0, 1.0, 8);
        let eta = random_field(s.grid(), 99, 1.0, 0.3, 8);
        let m = f(98);
        for ps in [PoissonStructure::darboux_pair(), PoissonStructure::darboux_pair_reversed(), PoissonStructure::sgn_lie()] {
            let a = vec![f(1), f(2)];
            let b = vec![f(3), f(4)];
            let st = vec![eta.clone(), m.clone()];
            let pb = ps.apply(&s, &st, &b).unwrap();
            let pa = ps.apply(&s, &st, &a).unwrap();
            let lhs: f64 = (0..2).map(|i| s.inner(&a[i], &pb[i])).sum();
            let rhs: f64 = (0..2).map(|i| s.inner(&b[i], &pa[i])).sum();
            assert!((lhs + rhs).abs() <= 1e-10 * lhs.abs().max(1.0), "{:?}", ps.kind);
        }
        let a: Vec<Field> = (10..14).map(f).collect();
        let b: Vec<Field> = (20..24).map(f).collect();
        let st: Vec<Field> = (30..34).map(f).collect();
        let q = PoissonStructure::darboux_quad();
        let pb = q.apply(&s, &st, &b).unwrap();
        let pa = q.apply(&s, &st, &a).unwrap();
        let lhs: f64 = (0..4).map(|i| s.inner(&a[i], &pb[i])).sum();
        let rhs: f64 = (0..4).map(|i| s.inner(&b[i], &pa[i])).sum();
        assert!((lhs + rhs).abs() <= 1e-10 * lhs.abs().max(1.0));
    }

    /// Cyclic sum over three linear functionals. The bracket of two linear
    /// functionals is linear in the state, so its gradient is a constant
    /// covector recovered exactly by unit nodal differences.
    #[test]
    fn sgn_lie_jacobi_identity() {
        let n = 32;
        let s = Spectral::new(Grid::new(n, 12.0).unwrap());
        let f = |seed| random_field(s.grid(), seed, 0.0, 1.0, 3);
        let ps = PoissonStructure::sgn_lie();
        let state = vec![random_field(s.grid(), 7, 1.0, 0.3, 3), f(8)];
        let covs: Vec<Vec<Field>> = (0..3).map(|i| vec![f(10 + 2 * i), f(11 + 2 * i)]).collect();
        let bracket = |u: &[Field], a: &[Field], b: &[Field]| -> f64 {
            let pb = ps.apply(&s, u, b).unwrap();
            (0..2).map(|i| s.inner(&a[i], &pb[i])).sum()
        };
        let bracket_grad = |a: &[Field], b: &[Field]| -> Vec<Field> {
            let zero = vec![Field::zeros(n), Field::zeros(n)];
            let base = bracket(&zero, a, b);
            (0..2)
                .map(|c| {
                    (0..n)
                        .map(|j| {
                            let mut u = zero.clone();
                            u[c][j] = 1.0;
                            (bracket(&u, a, b) - base) / s.dx()
                        })
                        .collect()
                })
                .collect()
        };
        let mut cyclic = 0.0;
        let mut scale: f64 = 0.0;
        for k in 0..3 {
            let (a, b, c) = (&covs[k], &covs[(k + 1) % 3], &covs[(k + 2) % 3]);
            let term = bracket(&state, &bracket_grad(a, b), c);
            cyclic += term;
            scale = scale.max(term.abs());
        }
        assert!(scale > 1e-3);
        assert!(cyclic.abs() <= 1e-8 * scale, "cyclic sum {cyclic:e}, scale {scale:e}");
    }

    #[test]
    fn arity_is_checked() {
        let s = Spectral::new(Grid::new(8, 1.0).unwrap());
        let z = Field::zeros(8);
        assert!(PoissonStructure::darboux_quad().apply(&s, &[z.clone()], &[z]).is_err());
    }

    #[test]
    fn casimirs_and_translation() {
        let (s, p, r) = setup();
        let z = random_field(s.grid(), 5, 0.0, 0.2, 6);
        let sg = random_field(s.grid(), 6, 0.0, 0.5, 6);
        let (a, b) = rhs_two_layer(&s, &z, &sg, &p, &r).unwrap();
        assert!(s.integrate(&a).abs() < 1e-12 && s.integrate(&b).abs() < 1e-12);
        let (a2, b2) = rhs_two_layer(&s, &z.shifted(5), &sg.shifted(5), &p, &r).unwrap();
        assert!((&a2 - &a.shifted(5)).max_abs() < 1e-12);
        assert!((&b2 - &b.shifted(5)).max_abs() < 1e-12);
    }

    #[test]
    fn classic_m_conserves_mass() {
        let s = Spectral::new(Grid::new(64, 40.0).unwrap());
        let sp = SgnParams { rho: 1.0, g: 1.0, depth: 1.0, eps: 0.1 };
        let eta = random_field(s.grid(), 7, 1.0, 0.2, 5);
        let m = random_field(s.grid(), 8, 0.0, 0.3, 5);
        let (a, _) = rhs_sgn_classic_m(&s, &eta, &m, &sp).unwrap();
        assert!(s.integrate(&a).abs() < 1e-12);
    }

    #[test]
    fn deepwater_rest_and_linear_waves() {
        let p = PhysicalParams::new(1.0, 1.5, 1.0, 50.0, 1.0, 10.0).unwrap();
        let r = ScalingRegime::upper_layer(&p, 1.0).unwrap();
        assert_eq!(r.vertical_scale, VerticalScale::UpperLayer);
        let dp = DeepWaterParams::new(&p, &r).unwrap();
        let s = Spectral::new(Grid::new(64, 100.0).unwrap());
        let (a, b) = rhs_deepwater(&s, &Field::constant(64, 1.0), &Field::zeros(64), &dp).unwrap();
        assert!(a.max_abs() == 0.0 && b.max_abs() == 0.0);
        assert!(cutoff_deepwater(&Field::constant(64, 1.0), &dp) > s.grid().nyquist_wavenumber());
    }

    #[test]
    fn cc_decouples_into_single_layers() {
        let s = Spectral::new(Grid::new(64, 40.0).unwrap());
        let cp = CcParams { rho1: 1.0, rho2: 1.5, g: 1.0, h1: 1.2, h2: 1.0, eps: 0.1 };
        let e1 = random_field(s.grid(), 1, 1.2, 0.1, 5);
        let e2 = random_field(s.grid(), 2, 1.0, 0.1, 5);
        let m1 = random_field(s.grid(), 3, 0.0, 0.3, 5);
        let m2 = random_field(s.grid(), 4, 0.0, 0.3, 5);
        let fields = CcFields { eta1: &e1, mu1: &m1, eta2: &e2, mu2: &m2 };
        let out = rhs_cc_four(&s, fields, &Field::zeros(64), &cp).unwrap();
        let up = SgnParams { rho: 1.0, g: -1.0, depth: 1.2, eps: 0.1 };
        let lo = SgnParams { rho: 1.5, g: 1.0, depth: 1.0, eps: 0.1 };
        let (a, b) = rhs_sgn_canonical(&s, &e1, &m1, &up).unwrap();
        let (c, d) = rhs_sgn_canonical(&s, &e2, &m2, &lo).unwrap();
        for (x, y) in out.iter().zip([a, b, c, d].iter()) {
            assert!((x - y).max_abs() < 1e-11);
        }
        let px = random_field(s.grid(), 5, 0.0, 0.1, 5);
        let with_p = rhs_cc_four(&s, fields, &px, &cp).unwrap();
        assert!((&(&out[1] - &with_p[1]) - &px).max_abs() < 1e-14);
        assert!((&with_p[0] - &out[0]).max_abs() == 0.0);
    }

    #[test]
    fn cutoffs() {
        let one = Field::constant(8, 1.0);
        assert!((cutoff_sgn(&one, 0.1) - 3f64.sqrt() / 0.1).abs() < 1e-12);
        assert!(cutoff_sgn(&one, 0.0).is_infinite());
        let p = PhysicalParams::new(1.0, 2.0, 1.0, 1.0, 1.0, 10.0).unwrap();
        let c = TwoLayerCoefficients::new(&p, &ScalingRegime::lower_layer(&p));
        let k = cutoff_two_layer(&Field::zeros(8), &c);
        // psi = 3, M = 3, eta1 = eta2 = 1
        assert!((k - (3.0f64 / 0.01).sqrt()).abs() < 1e-9);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn poisson_structures_are_skew(seed in 0u64..10_000) {
                let s = Spectral::new(Grid::new(48, 15.0).unwrap());
                let f = |k: u64| random_field(s.grid(), seed * 16 + k, 0.0, 1.0, 6);
                let st = vec![random_field(s.grid(), seed, 1.0, 0.3, 6), f(1)];
                for ps in [PoissonStructure::darboux_pair(), PoissonStructure::darboux_pair_reversed(), PoissonStructure::sgn_lie()] {
                    let (a, b) = (vec![f(2), f(3)], vec![f(4), f(5)]);
                    let pa = ps.apply(&s, &st, &a).unwrap();
                    let pb = ps.apply(&s, &st, &b).unwrap();
                    let x: f64 = (0..2).map(|i| s.inner(&a[i], &pb[i])).sum();
                    let y: f64 = (0..2).map(|i| s.inner(&b[i], &pa[i])).sum();
                    prop_assert!((x + y).abs() <= 1e-10 * (1.0 + x.abs()));
                    let self_pairing: f64 = (0..2).map(|i| s.inner(&a[i], &pa[i])).sum();
                    prop_assert!(self_pairing.abs() <= 1e-10 * (1.0 + x.abs()));
                }
            }

            #[test]
            fn two_layer_rhs_is_translation_equivariant(seed in 0u64..10_000, shift in -20isize..20) {
                let (s, p, r) = setup();
                let z = random_field(s.grid(), seed, 0.0, 0.2, 5);
                let sg = random_field(s.grid(), seed + 1, 0.0, 0.5, 5);
                let (a, b) = rhs_two_layer(&s, &z, &sg, &p, &r).unwrap();
                let (sa, sb) = rhs_two_layer(&s, &z.shifted(shift), &sg.shifted(shift), &p, &r).unwrap();
                prop_assert!((&sa - &a.shifted(shift)).max_abs() <= 1e-12 * (1.0 + a.max_abs()));
                prop_assert!((&sb - &b.shifted(shift)).max_abs() <= 1e-12 * (1.0 + b.max_abs()));
            }

            #[test]
            fn two_layer_casimirs_are_annihilated(seed in 0u64..10_000) {
                let (s, p, r) = setup();
                let z = random_field(s.grid(), seed, 0.0, 0.2, 5);
                let sg = random_field(s.grid(), seed + 1, 0.0, 0.5, 5);
                let (a, b) = rhs_two_layer(&s, &z, &sg, &p, &r).unwrap();
                prop_assert!(s.integrate(&a).abs() <= 1e-12);
                prop_assert!(s.integrate(&b).abs() <= 1e-12);
            }
        }
    }
}
