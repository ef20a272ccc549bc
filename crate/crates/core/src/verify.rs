//! Verification studies shared by the acceptance suite and the CLI.
//!
//! Each study returns a report with the measured numbers and a `passed`
//! verdict against fixed thresholds. Studies are deterministic given their
//! seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dirac::{check_constraint_propagation, dirac_block_identity_from, reconstruct_constrained, restricted_hamiltonian, DiracBlocks};
use crate::domain::TwoLayerCoefficients;
use crate::dynamics::{
    residual_boussinesq, residual_sgn_classic, rhs_boussinesq_dispersionless, rhs_deepwater, rhs_sgn_canonical,
    rhs_two_layer_with, BoussinesqInputs,
};
use crate::energetics::{
    energy_cc_four, energy_deepwater, energy_sgn, energy_two_layer, fd_gradient, grad_cc_four, grad_deepwater,
    grad_sgn, grad_two_layer, relative_l2, CcFields, CcParams, DeepWaterParams, SgnParams,
};
use crate::kinematics::{
    boundary_from_interface, interface_from_boundary, interface_from_mean, m_from_mu, mean_from_interface,
    mu12_from_sigma, mu_from_interface, mu_from_ubar, sigma_from_u2, u1_from_sigma, u1_from_sigma_deepwater,
    u1_from_u2, u2_from_sigma, ubar_from_m, ubar_from_mu, ubar_from_mu_tangent, LayerGeometry,
};
use crate::models::{DeepWaterModel, HamiltonianModel, SgnCanonicalModel, TwoLayerModel};
use crate::specops::{near_identity_inverse, LinearOperator};
use crate::timeloop::{run, IntegratorConfig, Method, RunOutput};
use crate::{Error, Field, Grid, ModelState, PhysicalParams, Result, ScalingRegime, Spectral};

/// Dispersion parameters used by every order test.
pub const EPS_LADDER: [f64; 3] = [0.2, 0.1, 0.05];

/// Seeded random trigonometric polynomial with modes `1..=max_mode`,
/// scaled so that `max|f - mean| = amplitude`.
pub fn random_field(grid: &Grid, seed: u64, mean: f64, amplitude: f64, max_mode: usize) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes: Vec<(f64, f64, f64)> = (1..=max_mode.max(1))
        .map(|j| {
            let a: f64 = rng.gen_range(-1.0..1.0);
            let b: f64 = rng.gen_range(-1.0..1.0);
            (grid.wavenumber(j), a / j as f64, b / j as f64)
        })
        .collect();
    let raw = grid.sample(|x| modes.iter().map(|(k, a, b)| a * (k * x).cos() + b * (k * x).sin()).sum());
    let scale = raw.max_abs();
    raw.map(|v| mean + amplitude * v / scale)
}

/// Periodized Gaussian bump `amplitude exp(-((x - center)/width)^2)`.
pub fn gaussian(grid: &Grid, amplitude: f64, width: f64, center: f64) -> Field {
    let l = grid.length();
    grid.sample(|x| {
        (-2..=2)
            .map(|m| {
                let d = (x - center + m as f64 * l) / width;
                amplitude * (-d * d).exp()
            })
            .sum()
    })
}

/// Discrete `L2` norm `sqrt(dx sum f^2)`.
pub fn l2(ops: &Spectral, f: &Field) -> f64 {
    ops.inner(f, f).sqrt()
}

/// Least-squares slope of `log(res)` against `log(eps)`.
pub fn observed_order(eps: &[f64], res: &[f64]) -> f64 {
    let xs: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let ys: Vec<f64> = res.iter().map(|r| r.max(f64::MIN_POSITIVE).ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Consecutive ratios `res[i] / res[i + 1]`.
pub fn consecutive_ratios(res: &[f64]) -> Vec<f64> {
    res.windows(2).map(|w| w[0] / w[1]).collect()
}

fn fmt_list(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(", ")
}

fn fmt_ratios(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:.2}")).collect::<Vec<_>>().join(", ")
}

// ---------------------------------------------------------------------------
// 1. gradient oracle

pub const GRADIENT_TOL: f64 = 1e-6;

/// Largest relative `L2` mismatch over components between an analytic
/// gradient and the finite-difference oracle.
pub fn gradient_mismatch<E, G>(ops: &Spectral, state: &[Field], energy: E, grad: G) -> Result<f64>
where
    E: Fn(&[Field]) -> Result<f64>,
    G: Fn(&[Field]) -> Result<Vec<Field>>,
{
    let analytic = grad(state)?;
    let mut worst: f64 = 0.0;
    for (c, a) in analytic.iter().enumerate() {
        let fd = fd_gradient(&energy, state, c, ops.dx())?;
        worst = worst.max(relative_l2(a, &fd));
    }
    Ok(worst)
}

/// Gradient check of any model at one state.
pub fn model_gradient_mismatch(model: &dyn HamiltonianModel, ops: &Spectral, state: &[Field]) -> Result<f64> {
    gradient_mismatch(ops, state, |s| Ok(model.energy(ops, s)?.total), |s| model.gradient(ops, s))
}

#[derive(Clone, Debug)]
pub struct GradientCase {
    pub functional: &'static str,
    pub eps: f64,
    pub seed: u64,
    pub mismatch: f64,
}

#[derive(Clone, Debug)]
pub struct GradientReport {
    pub cases: Vec<GradientCase>,
}

impl GradientReport {
    pub fn worst(&self) -> f64 {
        self.cases.iter().map(|c| c.mismatch).fold(0.0, f64::max)
    }

    pub fn worst_for(&self, functional: &str) -> f64 {
        self.cases.iter().filter(|c| c.functional == functional).map(|c| c.mismatch).fold(0.0, f64::max)
    }

    pub fn functionals(&self) -> Vec<&'static str> {
        let mut out: Vec<&'static str> = Vec::new();
        for c in &self.cases {
            if !out.contains(&c.functional) {
                out.push(c.functional);
            }
        }
        out
    }

    pub fn passed(&self) -> bool {
        !self.cases.is_empty() && self.cases.iter().all(|c| c.mismatch <= GRADIENT_TOL)
    }

    pub fn summary(&self) -> String {
        let parts: Vec<String> =
            self.functionals().iter().map(|f| format!("{f} {:.1e}", self.worst_for(f))).collect();
        format!("{} cases, worst mismatch per functional: {}", self.cases.len(), parts.join(", "))
    }
}

/// The five functionals on `states` seeded random states per `eps`.
pub fn gradient_suite(seed: u64, states: usize) -> Result<GradientReport> {
    let grid = Grid::new(64, 30.0)?;
    let ops = Spectral::new(grid);
    let mut cases = Vec::new();
    for &eps in &EPS_LADDER {
        let tl = PhysicalParams::new(1.0, 2.0, 1.3, 1.0, 1.0, 1.0 / eps)?;
        let tl_regime = ScalingRegime::lower_layer(&tl);
        let sp = SgnParams { rho: 1.2, g: 1.0, depth: 1.0, eps };
        let dp = DeepWaterParams { rho1: 1.0, rho2: 1.5, h1: 1.0, g: 1.0, delta: eps };
        let cp = CcParams { rho1: 1.0, rho2: 1.5, g: 1.0, h1: 1.3, h2: 1.0, eps };
        for k in 0..states as u64 {
            let s = seed.wrapping_mul(1000).wrapping_add(k * 17 + (eps * 1000.0) as u64);
            let rf = |off: u64, mean: f64, amp: f64| random_field(&grid, s + off, mean, amp, 4);

            let st = vec![rf(1, 0.0, 0.2), rf(2, 0.0, 0.5)];
            let m = gradient_mismatch(
                &ops,
                &st,
                |x| Ok(energy_two_layer(&ops, &x[0], &x[1], &tl, &tl_regime)?.total),
                |x| grad_two_layer(&ops, &x[0], &x[1], &tl, &tl_regime).map(|(a, b)| vec![a, b]),
            )?;
            cases.push(GradientCase { functional: "two_layer", eps, seed: s, mismatch: m });

            let st = vec![rf(3, 1.0, 0.2), rf(4, 0.0, 0.5)];
            let m = gradient_mismatch(
                &ops,
                &st,
                |x| Ok(energy_sgn(&ops, &x[0], &x[1], &sp)?.total),
                |x| grad_sgn(&ops, &x[0], &x[1], &sp).map(|(a, b)| vec![a, b]),
            )?;
            cases.push(GradientCase { functional: "sgn", eps, seed: s, mismatch: m });

            let st = vec![rf(5, 1.0, 0.2), rf(6, 0.0, 0.5)];
            let m = gradient_mismatch(
                &ops,
                &st,
                |x| Ok(energy_deepwater(&ops, &x[0], &x[1], &dp)?.total),
                |x| grad_deepwater(&ops, &x[0], &x[1], &dp).map(|(a, b)| vec![a, b]),
            )?;
            cases.push(GradientCase { functional: "deep_water", eps, seed: s, mismatch: m });

            let pressure = rf(7, 0.0, 0.3);
            let st = vec![rf(8, cp.h1, 0.2), rf(9, 0.0, 0.5), rf(10, cp.h2, 0.2), rf(11, 0.0, 0.5)];
            let m = gradient_mismatch(
                &ops,
                &st,
                |x| Ok(energy_cc_four(&ops, CcFields::from_slice(x), &pressure, &cp)?.total),
                |x| grad_cc_four(&ops, CcFields::from_slice(x), &pressure, &cp).map(|g| g.to_vec()),
            )?;
            cases.push(GradientCase { functional: "cc_four", eps, seed: s, mismatch: m });

            let st = vec![rf(12, 0.0, 0.2), rf(13, 0.0, 0.5)];
            let m = gradient_mismatch(
                &ops,
                &st,
                |x| restricted_hamiltonian(&ops, &x[0], &x[1], &cp),
                |x| crate::dirac::grad_restricted(&ops, &x[0], &x[1], &cp).map(|(a, b)| vec![a, b]),
            )?;
            cases.push(GradientCase { functional: "restricted", eps, seed: s, mismatch: m });
        }
    }
    Ok(GradientReport { cases })
}

// ---------------------------------------------------------------------------
// 2. conservation

pub const ENERGY_DRIFT_TOL: f64 = 1e-8;
pub const CASIMIR_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct ConservationRun {
    pub label: &'static str,
    pub energy_drift: f64,
    pub mass_change: f64,
    pub momentum_change: f64,
    pub steps: usize,
}

impl ConservationRun {
    fn from_output(label: &'static str, out: &RunOutput, steps: usize) -> Self {
        ConservationRun {
            label,
            energy_drift: out.diagnostics.relative_energy_drift(),
            mass_change: out.diagnostics.max_mass_change(),
            momentum_change: out.diagnostics.max_momentum_change(),
            steps,
        }
    }

    pub fn passed(&self) -> bool {
        self.energy_drift <= ENERGY_DRIFT_TOL && self.mass_change <= CASIMIR_TOL && self.momentum_change <= CASIMIR_TOL
    }

    pub fn summary(&self) -> String {
        format!(
            "{}: |dH|/H0 = {:.2e}, |d int first| = {:.2e}, |d int second| = {:.2e} over {} steps",
            self.label, self.energy_drift, self.mass_change, self.momentum_change, self.steps
        )
    }
}

/// Small Gaussian interface on a resting two-layer fluid.
pub fn two_layer_conservation_setup() -> Result<(TwoLayerModel, Spectral, ModelState)> {
    let p = PhysicalParams::new(1.0, 1.5, 1.5, 1.0, 1.0, 5.0)?;
    let r = ScalingRegime::lower_layer(&p);
    let ops = Spectral::new(Grid::new(64, 64.0)?);
    let zeta = gaussian(ops.grid(), 0.01, 4.0, 32.0);
    let state = ModelState::two_layer(zeta, Field::zeros(64), &p, &r)?;
    Ok((TwoLayerModel::new(&p, &r)?, ops, state))
}

/// Small Gaussian hump on still water for the canonical single layer.
pub fn sgn_conservation_setup() -> Result<(SgnCanonicalModel, Spectral, ModelState)> {
    let ops = Spectral::new(Grid::new(64, 40.0)?);
    let eta = gaussian(ops.grid(), 0.01, 3.0, 20.0) + 1.0;
    let state = ModelState::sgn_canonical(eta, Field::zeros(64))?;
    let model = SgnCanonicalModel { params: SgnParams { rho: 1.0, g: 1.0, depth: 1.0, eps: 0.2 } };
    Ok((model, ops, state))
}

fn conservation_run(
    label: &'static str,
    model: &dyn HamiltonianModel,
    ops: &Spectral,
    state: &ModelState,
    method: Method,
    dt: f64,
    t_end: f64,
) -> Result<ConservationRun> {
    let mut cfg = IntegratorConfig::new(method, dt, t_end);
    cfg.diag_every = ((0.1 / dt).round() as usize).max(1);
    let out = run(model, ops, state, &cfg).map_err(|e| e.error)?;
    Ok(ConservationRun::from_output(label, &out, cfg.steps()))
}

/// Implicit-midpoint runs of the two-layer and canonical single-layer systems.
pub fn conservation_suite(dt: f64, t_end: f64) -> Result<Vec<ConservationRun>> {
    let (m, ops, s) = two_layer_conservation_setup()?;
    let a = conservation_run("two_layer", &m, &ops, &s, Method::ImplicitMidpoint, dt, t_end)?;
    let (m, ops, s) = sgn_conservation_setup()?;
    let b = conservation_run("sgn_canonical", &m, &ops, &s, Method::ImplicitMidpoint, dt, t_end)?;
    Ok(vec![a, b])
}

/// Energy drift of implicit midpoint and RK4 on the same two-layer run.
pub fn integrator_comparison(dt: f64, t_end: f64) -> Result<(f64, f64)> {
    let (m, ops, s) = two_layer_conservation_setup()?;
    let im = conservation_run("im", &m, &ops, &s, Method::ImplicitMidpoint, dt, t_end)?;
    let rk = conservation_run("rk4", &m, &ops, &s, Method::Rk4, dt, t_end)?;
    Ok((im.energy_drift, rk.energy_drift))
}

// ---------------------------------------------------------------------------
// ratio tests

pub const EPS4_RATIO_RANGE: (f64, f64) = (11.0, 21.0);
pub const DELTA2_RATIO_RANGE: (f64, f64) = (2.8, 5.2);

#[derive(Clone, Debug)]
pub struct RatioStudy {
    pub label: &'static str,
    pub params: Vec<f64>,
    pub residuals: Vec<f64>,
    pub range: (f64, f64),
    /// Residual of deliberately inconsistent input at the smallest parameter.
    pub control: Option<f64>,
}

impl RatioStudy {
    pub fn ratios(&self) -> Vec<f64> {
        consecutive_ratios(&self.residuals)
    }

    pub fn order(&self) -> f64 {
        observed_order(&self.params, &self.residuals)
    }

    pub fn passed(&self) -> bool {
        let ok = self.ratios().iter().all(|r| *r >= self.range.0 && *r <= self.range.1);
        let control_ok = self.control.is_none_or(|c| c > 1e3 * self.residuals.last().copied().unwrap_or(0.0));
        ok && control_ok
    }

    pub fn summary(&self) -> String {
        let mut s = format!(
            "{}: residuals [{}], ratios [{}] (accepted {}..{}), order {:.2}",
            self.label,
            fmt_list(&self.residuals),
            fmt_ratios(&self.ratios()),
            self.range.0,
            self.range.1,
            self.order()
        );
        if let Some(c) = self.control {
            s.push_str(&format!(", control {c:.2e}"));
        }
        s
    }
}

fn trajectory(model: &dyn HamiltonianModel, ops: &Spectral, init: &ModelState, dt: f64, t_end: f64, every: usize) -> Result<Vec<Vec<Field>>> {
    let mut cfg = IntegratorConfig::new(Method::ImplicitMidpoint, dt, t_end);
    cfg.diag_every = cfg.steps().max(1);
    cfg.snapshot_every = every;
    let out = run(model, ops, init, &cfg).map_err(|e| e.error)?;
    Ok(out.snapshots.into_iter().map(|s| s.fields).collect())
}

// ---------------------------------------------------------------------------
// 3. classical / canonical single-layer equivalence

/// Residual of the classical equations along a canonical trajectory with
/// `ubar` from the truncated momentum relation.
pub fn classical_equivalence_study() -> Result<RatioStudy> {
    let ops = Spectral::new(Grid::new(64, 40.0)?);
    let mut residuals = Vec::new();
    let mut control = None;
    for &eps in &EPS_LADDER {
        let p = SgnParams { rho: 1.0, g: 1.0, depth: 1.0, eps };
        let model = SgnCanonicalModel { params: p };
        let eta0 = gaussian(ops.grid(), 0.1, 3.0, 20.0) + 1.0;
        let mu0 = gaussian(ops.grid(), 0.05, 3.0, 20.0);
        let init = ModelState::sgn_canonical(eta0, mu0)?;
        let traj = trajectory(&model, &ops, &init, 0.01, 3.0, 50)?;
        let mut worst: f64 = 0.0;
        for s in &traj {
            let (eta, mu) = (&s[0], &s[1]);
            let (eta_t, mu_t) = rhs_sgn_canonical(&ops, eta, mu, &p)?;
            let u = ubar_from_mu(&ops, mu, eta, &p);
            let u_t = ubar_from_mu_tangent(&ops, mu, eta, &mu_t, &eta_t, &p);
            let (r1, r2) = residual_sgn_classic(&ops, eta, &u, &eta_t, &u_t, &p);
            worst = worst.max((l2(&ops, &r1).powi(2) + l2(&ops, &r2).powi(2)).sqrt());
            if eps == EPS_LADDER[2] && control.is_none() {
                let (c1, c2) = residual_sgn_classic(&ops, eta, &u, &eta_t, &(-&u_t), &p);
                control = Some((l2(&ops, &c1).powi(2) + l2(&ops, &c2).powi(2)).sqrt());
            }
        }
        residuals.push(worst);
    }
    Ok(RatioStudy { label: "classical residual", params: EPS_LADDER.to_vec(), residuals, range: EPS4_RATIO_RANGE, control })
}

// ---------------------------------------------------------------------------
// 4. air-water limit

#[derive(Clone, Debug)]
pub struct LimitStudy {
    pub label: &'static str,
    pub ks: Vec<u32>,
    pub gaps: Vec<f64>,
    pub threshold: f64,
}

impl LimitStudy {
    pub fn monotone(&self) -> bool {
        self.gaps.windows(2).all(|w| w[1] < w[0])
    }

    pub fn passed(&self) -> bool {
        self.monotone() && self.gaps.last().is_some_and(|g| *g <= self.threshold)
    }

    pub fn summary(&self) -> String {
        let pairs: Vec<String> = self.ks.iter().zip(&self.gaps).map(|(k, g)| format!("k={k}: {g:.2e}")).collect();
        format!("{}: {} (monotone: {}, last <= {:.0e})", self.label, pairs.join(", "), self.monotone(), self.threshold)
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "k,relative_gap")?;
        for (k, g) in self.ks.iter().zip(&self.gaps) {
            writeln!(w, "{k},{g:.16e}")?;
        }
        Ok(())
    }
}

/// Two-layer energy with `rho1 = 10^-k rho2`, `h1 = 10^(k/2) h2` against the
/// single-layer energy on `eta = 1 + zeta`, `mu = sigma`.
pub fn air_water_limit(seed: u64, eps: f64, rho2: f64) -> Result<LimitStudy> {
    let ops = Spectral::new(Grid::new(64, 30.0)?);
    let states: Vec<(Field, Field)> = (0..5)
        .map(|i| {
            (
                random_field(ops.grid(), seed + 2 * i, 0.0, 0.2, 4),
                random_field(ops.grid(), seed + 2 * i + 1, 0.0, 0.5, 4),
            )
        })
        .collect();
    let sp = SgnParams { rho: rho2, g: 1.0, depth: 1.0, eps };
    let mut gaps = Vec::new();
    let ks: Vec<u32> = (1..=6).collect();
    for &k in &ks {
        let rho1 = rho2 * 10f64.powi(-(k as i32));
        let h1 = 10f64.powf(k as f64 / 2.0);
        let p = PhysicalParams::new(rho1, rho2, h1, 1.0, 1.0, 1.0 / eps)?;
        let r = ScalingRegime::lower_layer(&p);
        let mut worst: f64 = 0.0;
        for (z, s) in &states {
            let e2 = energy_two_layer(&ops, z, s, &p, &r)?.total;
            let e1 = energy_sgn(&ops, &(z + 1.0), s, &sp)?.total;
            worst = worst.max((e2 - e1).abs() / e1.abs());
        }
        gaps.push(worst);
    }
    Ok(LimitStudy { label: "air-water gap", ks, gaps, threshold: 1e-3 })
}

/// Two-layer energy in upper-layer scaling with `h2 / h1 = 10^k` against the
/// deep-water energy (with `h1 = 1`).
pub fn deep_water_limit(seed: u64, eps: f64) -> Result<LimitStudy> {
    let ops = Spectral::new(Grid::new(64, 60.0)?);
    let z = random_field(ops.grid(), seed, 0.0, 0.2, 4);
    let s = random_field(ops.grid(), seed + 1, 0.0, 0.5, 4);
    let ks: Vec<u32> = (1..=6).collect();
    let mut gaps = Vec::new();
    for &k in &ks {
        let h2 = 10f64.powi(k as i32);
        let p = PhysicalParams::new(1.0, 1.5, 1.0, h2, 1.0, 1.0 / eps)?;
        let r = ScalingRegime::upper_layer(&p, 1.0)?;
        let dp = DeepWaterParams::new(&p, &r)?;
        let e2 = energy_two_layer(&ops, &z, &s, &p, &r)?.total;
        let ed = energy_deepwater(&ops, &(1.0 - &z), &s, &dp)?.total;
        gaps.push((e2 - ed).abs() / ed.abs());
    }
    Ok(LimitStudy { label: "deep-water gap", ks, gaps, threshold: 1e-5 })
}

// ---------------------------------------------------------------------------
// 5. deep water

#[derive(Clone, Debug)]
pub struct DispersionlessCheck {
    /// Deep-water system at `delta = 0` against the shallow system.
    pub deep_water_gap: f64,
    /// Two-layer system with `h2 / h1 = 1e10` and no dispersion against the
    /// shallow system.
    pub two_layer_gap: f64,
}

impl DispersionlessCheck {
    pub fn passed(&self) -> bool {
        self.deep_water_gap <= 1e-8 && self.two_layer_gap <= 1e-8
    }
}

fn shallow_gap(ops: &Spectral, eta1: &Field, eta_t: &Field, sigma: &Field, sigma_t: &Field, dp: &DeepWaterParams) -> f64 {
    let u = sigma * (-1.0 / dp.rho1);
    let u_t = sigma_t * (-1.0 / dp.rho1);
    let (want_eta, want_u) = rhs_boussinesq_dispersionless(ops, eta1, &u, dp);
    relative_l2(eta_t, &want_eta).max(relative_l2(&u_t, &want_u))
}

pub fn dispersionless_check(seed: u64) -> Result<DispersionlessCheck> {
    let ops = Spectral::new(Grid::new(64, 100.0)?);
    let z = random_field(ops.grid(), seed, 0.0, 0.2, 5);
    let sigma = random_field(ops.grid(), seed + 1, 0.0, 0.5, 5);
    let eta1 = 1.0 - &z;
    let dp = DeepWaterParams { rho1: 1.0, rho2: 1.5, h1: 1.0, g: 1.0, delta: 0.0 };
    let (eta_t, sigma_t) = rhs_deepwater(&ops, &eta1, &sigma, &dp)?;
    let deep_water_gap = shallow_gap(&ops, &eta1, &eta_t, &sigma, &sigma_t, &dp);

    let (h1, h2) = (1.0, 1e10);
    let c = TwoLayerCoefficients {
        rho1: dp.rho1,
        rho2: dp.rho2,
        a1: 1.0,
        a2: h2 / h1,
        h: 1.0 + h2 / h1,
        kinetic: h1,
        dispersive: 0.0,
        potential: h1 * h1 * dp.g * (dp.rho2 - dp.rho1),
    };
    let (z_t, s_t) = rhs_two_layer_with(&ops, &z, &sigma, &c)?;
    let two_layer_gap = shallow_gap(&ops, &eta1, &(-&z_t), &sigma, &s_t, &dp);
    Ok(DispersionlessCheck { deep_water_gap, two_layer_gap })
}

/// Directional derivative of `f` at `s` along `v` by central differences;
/// exact up to roundoff for polynomials of degree <= 2 in the state.
fn directional<F>(s: &[Field], v: &[Field], f: F) -> Result<Vec<Field>>
where
    F: Fn(&[Field]) -> Result<Vec<Field>>,
{
    let tau = 1e-4;
    let plus: Vec<Field> = s.iter().zip(v).map(|(a, b)| a.axpy(tau, b)).collect();
    let minus: Vec<Field> = s.iter().zip(v).map(|(a, b)| a.axpy(-tau, b)).collect();
    let fp = f(&plus)?;
    let fm = f(&minus)?;
    Ok(fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * tau)).collect())
}

/// Residuals of both Boussinesq forms along deep-water trajectories for
/// `delta` in `EPS_LADDER`. Returns `(xxt form, favored form)`.
pub fn boussinesq_residuals() -> Result<(RatioStudy, RatioStudy)> {
    let ops = Spectral::new(Grid::new(64, 100.0)?);
    let mut res_xxt = Vec::new();
    let mut res_fav = Vec::new();
    let mut control = None;
    for &delta in &EPS_LADDER {
        let dp = DeepWaterParams { rho1: 1.0, rho2: 1.5, h1: 1.0, g: 1.0, delta };
        let model = DeepWaterModel { params: dp };
        let eta0 = 1.0 - &gaussian(ops.grid(), 0.1, 8.0, 50.0);
        let sig0 = gaussian(ops.grid(), 0.05, 8.0, 50.0);
        let init = ModelState::deep_water(eta0, sig0)?;
        let traj = trajectory(&model, &ops, &init, 0.02, 2.0, 10)?;
        let (mut wx, mut wf): (f64, f64) = (0.0, 0.0);
        for s in &traj {
            let (eta1, sigma) = (&s[0], &s[1]);
            let rhs = |x: &[Field]| rhs_deepwater(&ops, &x[0], &x[1], &dp).map(|(a, b)| vec![a, b]);
            let tangent = rhs(s)?;
            let second = directional(s, &tangent, rhs)?;
            let (eta_t, sigma_t) = (&tangent[0], &tangent[1]);
            let u = u1_from_sigma_deepwater(&ops, sigma, eta1, &dp);
            let flux_t = eta_t * sigma + eta1 * sigma_t;
            let u_t = sigma_t * (-1.0 / dp.rho1) - ops.dx2(&flux_t) * (dp.delta / 3.0 * dp.h1 * dp.rho2 / (dp.rho1 * dp.rho1));
            let inputs = BoussinesqInputs { eta1, ubar1: &u, eta1_t: eta_t, ubar1_t: &u_t, eta1_tt: &second[0] };
            let r = residual_boussinesq(&ops, &inputs, &dp);
            wx = wx.max((l2(&ops, &r.mass).powi(2) + l2(&ops, &r.momentum_xxt).powi(2)).sqrt());
            wf = wf.max((l2(&ops, &r.mass).powi(2) + l2(&ops, &r.momentum_favored).powi(2)).sqrt());
            if delta == EPS_LADDER[2] && control.is_none() {
                let bad = sigma * (-1.0 / dp.rho1);
                let inputs = BoussinesqInputs { ubar1: &bad, ubar1_t: &(-&u_t), ..inputs };
                control = Some(l2(&ops, &residual_boussinesq(&ops, &inputs, &dp).momentum_xxt));
            }
        }
        res_xxt.push(wx);
        res_fav.push(wf);
    }
    Ok((
        RatioStudy { label: "Boussinesq (xxt form)", params: EPS_LADDER.to_vec(), residuals: res_xxt, range: DELTA2_RATIO_RANGE, control },
        RatioStudy { label: "Boussinesq (favored form)", params: EPS_LADDER.to_vec(), residuals: res_fav, range: DELTA2_RATIO_RANGE, control: None },
    ))
}

// ---------------------------------------------------------------------------
// 6. Dirac block identity

pub const DIRAC_TOL: f64 = 1e-10;
pub const DIRAC_CONTROL_MIN: f64 = 1e-2;

#[derive(Clone, Debug)]
pub struct DiracReport {
    pub defects: Vec<f64>,
    pub inverse_defects: Vec<f64>,
    pub lu_gaps: Vec<f64>,
    pub control_defects: Vec<f64>,
}

impl DiracReport {
    pub fn max_defect(&self) -> f64 {
        self.defects.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_inverse_defect(&self) -> f64 {
        self.inverse_defects.iter().copied().fold(0.0, f64::max)
    }

    pub fn min_control(&self) -> f64 {
        self.control_defects.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn passed(&self) -> bool {
        !self.defects.is_empty()
            && self.max_defect() <= DIRAC_TOL
            && self.max_inverse_defect() <= DIRAC_TOL
            && self.min_control() >= DIRAC_CONTROL_MIN
    }

    pub fn summary(&self) -> String {
        format!(
            "{} geometries: max defect {:.2e}, max |C C^-1 - I| {:.2e}, max LU-path gap {:.2e}, min control defect {:.2e}",
            self.defects.len(),
            self.max_defect(),
            self.max_inverse_defect(),
            self.lu_gaps.iter().copied().fold(0.0, f64::max),
            self.min_control()
        )
    }
}

pub fn dirac_study(seed: u64, geometries: usize) -> Result<DiracReport> {
    let ops = Spectral::new(Grid::new(64, 30.0)?);
    let p = CcParams { rho1: 1.0, rho2: 1.5, g: 1.0, h1: 1.5, h2: 1.0, eps: 0.1 };
    let mut rep = DiracReport { defects: vec![], inverse_defects: vec![], lu_gaps: vec![], control_defects: vec![] };
    for i in 0..geometries as u64 {
        let s = seed.wrapping_mul(7919).wrapping_add(i * 3);
        let z = random_field(ops.grid(), s, 0.0, 0.2, 5);
        let sg = random_field(ops.grid(), s + 1, 0.0, 1.0, 5);
        let st = reconstruct_constrained(&ops, &z, &sg, &p)?.into_components();
        let blocks = DiracBlocks::assemble(&ops, CcFields::from_slice(&st), &p)?;
        let id = dirac_block_identity_from(&blocks)?;
        rep.defects.push(id.defect);
        rep.inverse_defects.push(id.inverse_defect);
        rep.lu_gaps.push(id.lu_path_gap);
        let bad = dirac_block_identity_from(&blocks.with_perturbed_b(s + 2, 1.0))?;
        rep.control_defects.push(bad.defect);
    }
    Ok(rep)
}

// ---------------------------------------------------------------------------
// 7. restricted Hamiltonian identity

pub const RESTRICTED_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct RestrictedReport {
    pub scale: f64,
    pub max_relative_residual: f64,
    pub states: usize,
}

impl RestrictedReport {
    pub fn passed(&self) -> bool {
        self.states > 0 && self.max_relative_residual <= RESTRICTED_TOL
    }

    pub fn summary(&self) -> String {
        format!(
            "{} states: fitted c = {:.12}, max relative residual {:.2e}",
            self.states, self.scale, self.max_relative_residual
        )
    }
}

/// Fits `restricted = c * two_layer` over random states; `h2` is the unit
/// height.
pub fn restricted_identity(seed: u64, states: usize, eps: f64) -> Result<RestrictedReport> {
    let ops = Spectral::new(Grid::new(64, 40.0)?);
    let p = PhysicalParams::new(1.0, 1.5, 1.5, 1.0, 1.0, 1.0 / eps)?;
    let r = ScalingRegime::lower_layer(&p);
    let cp = CcParams::from_physical(&p)?;
    let mut pairs = Vec::new();
    for i in 0..states as u64 {
        let z = random_field(ops.grid(), seed + 2 * i, 0.0, 0.25, 5);
        let s = random_field(ops.grid(), seed + 2 * i + 1, 0.0, 0.2 + 0.1 * i as f64, 5);
        let hr = restricted_hamiltonian(&ops, &z, &s, &cp)?;
        let he = energy_two_layer(&ops, &z, &s, &p, &r)?.total;
        pairs.push((hr, he));
    }
    let num: f64 = pairs.iter().map(|(a, b)| a * b).sum();
    let den: f64 = pairs.iter().map(|(_, b)| b * b).sum();
    let c = num / den;
    let worst = pairs.iter().map(|(a, b)| (a - c * b).abs() / a.abs()).fold(0.0, f64::max);
    Ok(RestrictedReport { scale: c, max_relative_residual: worst, states })
}

// ---------------------------------------------------------------------------
// 8. constraint propagation

#[derive(Clone, Debug)]
pub struct PropagationStudy {
    pub ratio: RatioStudy,
    pub max_phi1: f64,
    /// `max phi2` over the second half of each run divided by the max over
    /// the first half.
    pub growth: Vec<f64>,
}

impl PropagationStudy {
    pub fn passed(&self) -> bool {
        self.ratio.passed() && self.max_phi1 <= 1e-12 && self.growth.iter().all(|g| *g <= 2.0)
    }

    pub fn summary(&self) -> String {
        format!(
            "{}; max phi1 {:.1e}; second/first-half growth [{}]",
            self.ratio.summary(),
            self.max_phi1,
            fmt_ratios(&self.growth)
        )
    }
}

pub fn constraint_propagation(t_end: f64, dt: f64) -> Result<PropagationStudy> {
    let ops = Spectral::new(Grid::new(64, 64.0)?);
    let mut residuals = Vec::new();
    let mut growth = Vec::new();
    let mut max_phi1: f64 = 0.0;
    for &eps in &EPS_LADDER {
        let p = PhysicalParams::new(1.0, 1.5, 1.5, 1.0, 1.0, 1.0 / eps)?;
        let r = ScalingRegime::lower_layer(&p);
        let cp = CcParams::from_physical(&p)?;
        let model = TwoLayerModel::new(&p, &r)?;
        let zeta = gaussian(ops.grid(), 0.1, 4.0, 32.0);
        let sigma = gaussian(ops.grid(), 0.1, 4.0, 32.0);
        let init = ModelState::two_layer(zeta, sigma, &p, &r)?;
        let every = ((0.1 / dt).round() as usize).max(1);
        let traj: Vec<(Field, Field)> = trajectory(&model, &ops, &init, dt, t_end, every)?
            .into_iter()
            .map(|mut s| {
                let b = s.pop().unwrap();
                (s.pop().unwrap(), b)
            })
            .collect();
        let rep = check_constraint_propagation(&ops, &traj, &cp)?;
        max_phi1 = max_phi1.max(rep.max_phi1());
        residuals.push(rep.max_phi2());
        let half = rep.phi2.len() / 2;
        let first = rep.phi2[..half].iter().copied().fold(0.0, f64::max);
        let second = rep.phi2[half..].iter().copied().fold(0.0, f64::max);
        growth.push(second / first);
    }
    Ok(PropagationStudy {
        ratio: RatioStudy { label: "phi2 along trajectory", params: EPS_LADDER.to_vec(), residuals, range: EPS4_RATIO_RANGE, control: None },
        max_phi1,
        growth,
    })
}

// ---------------------------------------------------------------------------
// 9. transform round trips

pub const ROUND_TRIP_MIN_ORDER: f64 = 3.7;

#[derive(Clone, Debug)]
pub struct RoundTrip {
    pub label: &'static str,
    pub residuals: Vec<f64>,
}

impl RoundTrip {
    pub fn order(&self) -> f64 {
        observed_order(&EPS_LADDER, &self.residuals)
    }
}

#[derive(Clone, Debug)]
pub struct RoundTripReport {
    pub trips: Vec<RoundTrip>,
}

impl RoundTripReport {
    pub fn min_order(&self) -> f64 {
        self.trips.iter().map(|t| t.order()).fold(f64::INFINITY, f64::min)
    }

    pub fn passed(&self) -> bool {
        !self.trips.is_empty() && self.min_order() >= ROUND_TRIP_MIN_ORDER
    }

    pub fn summary(&self) -> String {
        let parts: Vec<String> = self.trips.iter().map(|t| format!("{} {:.2}", t.label, t.order())).collect();
        format!("orders: {}", parts.join(", "))
    }
}

pub fn round_trips(seed: u64) -> Result<RoundTripReport> {
    let ops = Spectral::new(Grid::new(64, 20.0)?);
    let grid = ops.grid();
    let eta = random_field(grid, seed, 1.0, 0.2, 4);
    let u = random_field(grid, seed + 1, 0.0, 1.0, 4);
    let zeta = random_field(grid, seed + 2, 0.0, 0.2, 4);
    let sigma = random_field(grid, seed + 3, 0.0, 1.0, 4);
    let d2 = LinearOperator::derivative(&ops, 2);

    let labels = [
        "near-identity inverse",
        "interface->boundary->interface",
        "boundary->interface->boundary",
        "interface->mean->interface",
        "mean->interface->mean",
        "sigma->u2->sigma",
        "u2->sigma->u2",
        "u1(sigma) vs u1(u2(sigma))",
        "velocity constraint from sigma",
        "ubar->mu->ubar",
        "mu->ubar->mu",
        "mu->m->ubar->interface->mu",
        "momenta from sigma: phi2",
    ];
    let mut res: Vec<Vec<f64>> = vec![Vec::new(); labels.len()];
    for &eps in &EPS_LADDER {
        let g = LayerGeometry::new(&ops, &zeta, 1.3, 1.0, 1.0, 1.5, eps)?;
        let sp = SgnParams { rho: 1.2, g: 1.0, depth: 1.0, eps };
        let n = |f: Field| l2(&ops, &f);
        let mut k = 0;
        let mut push = |v: f64| {
            res[k].push(v);
            k += 1;
        };
        push(n(near_identity_inverse(&d2, &d2.near_identity(&u, eps), eps) - &u));
        push(n(interface_from_boundary(&ops, &boundary_from_interface(&ops, &u, &eta, eps), &eta, eps) - &u));
        push(n(boundary_from_interface(&ops, &interface_from_boundary(&ops, &u, &eta, eps), &eta, eps) - &u));
        push(n(interface_from_mean(&ops, &mean_from_interface(&ops, &u, &eta, eps), &eta, eps) - &u));
        push(n(mean_from_interface(&ops, &interface_from_mean(&ops, &u, &eta, eps), &eta, eps) - &u));
        push(n(sigma_from_u2(&ops, &u2_from_sigma(&ops, &sigma, &g), &g) - &sigma));
        push(n(u2_from_sigma(&ops, &sigma_from_u2(&ops, &u, &g), &g) - &u));
        let u2 = u2_from_sigma(&ops, &sigma, &g);
        let u1 = u1_from_sigma(&ops, &sigma, &g);
        push(n(u1_from_u2(&ops, &u2, &g) - &u1));
        let e2 = eps * eps / 3.0;
        let constraint = &g.eta1 * &u1 + &g.eta2 * &u2
            + (g.eta1.powi(3) * ops.dx2(&u1) + g.eta2.powi(3) * ops.dx2(&u2)) * e2;
        push(n(constraint));
        push(n(ubar_from_mu(&ops, &mu_from_ubar(&ops, &u, &eta, &sp), &eta, &sp) - &u));
        let mu = &u * sp.rho;
        push(n(mu_from_ubar(&ops, &ubar_from_mu(&ops, &mu, &eta, &sp), &eta, &sp) - &mu));
        let ub = ubar_from_m(&ops, &m_from_mu(&eta, &mu), &eta, &sp)?;
        push(n(mu_from_interface(&ops, &interface_from_mean(&ops, &ub, &eta, eps), &eta, &sp) - &mu));
        let (m1, m2) = mu12_from_sigma(&ops, &sigma, &g);
        let phi2 = (&g.eta1 * &m1 + ops.dx1(&(g.eta1.powi(3) * ops.dx1(&m1))) * e2) / 1.0
            + (&g.eta2 * &m2 + ops.dx1(&(g.eta2.powi(3) * ops.dx1(&m2))) * e2) / 1.5;
        push(n(phi2));
    }
    Ok(RoundTripReport {
        trips: labels.iter().zip(res).map(|(label, residuals)| RoundTrip { label, residuals }).collect(),
    })
}

/// Deep-water `sigma <-> u1` pair: an `O(delta)` expansion, so the round
/// trip is second order in `delta`.
pub fn deep_water_round_trip(seed: u64) -> Result<RatioStudy> {
    let ops = Spectral::new(Grid::new(64, 60.0)?);
    let eta1 = random_field(ops.grid(), seed, 1.0, 0.2, 4);
    let u = random_field(ops.grid(), seed + 1, 0.0, 1.0, 4);
    let mut residuals = Vec::new();
    for &delta in &EPS_LADDER {
        let dp = DeepWaterParams { rho1: 1.0, rho2: 1.5, h1: 1.0, g: 1.0, delta };
        let s = crate::kinematics::sigma_deepwater_from_u1(&ops, &u, &eta1, &dp);
        residuals.push(l2(&ops, &(u1_from_sigma_deepwater(&ops, &s, &eta1, &dp) - &u)));
    }
    Ok(RatioStudy { label: "deep-water sigma<->u1", params: EPS_LADDER.to_vec(), residuals, range: DELTA2_RATIO_RANGE, control: None })
}

/// Fails with a descriptive error when a study did not pass.
pub fn require(passed: bool, what: &str) -> Result<()> {
    if passed {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name: "check", reason: format!("{what} failed") })
    }
}
