//! Model descriptors bundling a Hamiltonian, its gradient, a Poisson
//! structure and admissibility checks behind one trait.

use crate::dirac::{check_constraint_propagation, restricted_hamiltonian};
use crate::domain::{check_finite, check_thickness, ModelKind, TwoLayerCoefficients};
use crate::dynamics::{
    cutoff_deepwater, cutoff_sgn, cutoff_two_layer, grad_sgn_classic_m, rhs_cc_four, rhs_deepwater,
    rhs_sgn_canonical, rhs_sgn_classic_m, rhs_two_layer_with, PoissonStructure,
};
use crate::energetics::{
    energy_cc_four, energy_deepwater, energy_sgn, energy_sgn_classic, energy_two_layer_with, grad_cc_four,
    grad_deepwater, grad_sgn, grad_two_layer_with, CcFields, CcParams, DeepWaterParams, EnergyBreakdown,
    SgnParams,
};
use crate::kinematics::ubar_from_m;
use crate::{Error, Field, PhysicalParams, Result, ScalingRegime, Spectral};

pub trait HamiltonianModel: Send + Sync {
    fn kind(&self) -> ModelKind;

    fn energy(&self, ops: &Spectral, state: &[Field]) -> Result<EnergyBreakdown>;

    /// Analytic variational derivative, one field per component.
    fn gradient(&self, ops: &Spectral, state: &[Field]) -> Result<Vec<Field>>;

    fn poisson(&self) -> PoissonStructure;

    /// Time derivative of the state; defaults to `P grad H`.
    fn rhs(&self, ops: &Spectral, state: &[Field]) -> Result<Vec<Field>> {
        let grad = self.gradient(ops, state)?;
        self.poisson().apply(ops, state, &grad)
    }

    /// Thickness positivity and finiteness.
    fn check_admissible(&self, state: &[Field]) -> Result<()>;

    /// Largest wavenumber at which the Hamiltonian stays convex near `state`.
    fn cutoff_wavenumber(&self, state: &[Field]) -> f64;

    /// Integral of the first component.
    fn mass(&self, ops: &Spectral, state: &[Field]) -> f64 {
        ops.integrate(&state[0])
    }

    /// Integral of the momentum-like component.
    fn momentum(&self, ops: &Spectral, state: &[Field]) -> f64 {
        ops.integrate(&state[1])
    }

    /// Model-specific constraint residual, if any.
    fn constraint_residual(&self, _ops: &Spectral, _state: &[Field]) -> Result<Option<f64>> {
        Ok(None)
    }

    fn component_names(&self) -> &'static [&'static str] {
        self.kind().component_names()
    }
}

fn expect_len(kind: ModelKind, state: &[Field]) -> Result<()> {
    let want = kind.component_names().len();
    if state.len() != want {
        return Err(Error::StateMismatch {
            model: kind.id(),
            reason: format!("expected {want} components, got {}", state.len()),
        });
    }
    Ok(())
}

/// Reduced two-layer model in `(zeta, sigma)`.
#[derive(Clone, Debug)]
pub struct TwoLayerModel {
    pub coefficients: TwoLayerCoefficients,
    /// Four-field parameters used to report the `phi2` residual of the
    /// reconstructed constrained state.
    pub constrained: Option<CcParams>,
}

impl TwoLayerModel {
    pub fn new(params: &PhysicalParams, regime: &ScalingRegime) -> Result<Self> {
        let coefficients = TwoLayerCoefficients::new(params, regime);
        let constrained = match regime.vertical_scale {
            crate::VerticalScale::LowerLayer if params.rho1 > 0.0 => Some(CcParams::from_physical(params)?),
            _ => None,
        };
        Ok(TwoLayerModel { coefficients, constrained })
    }

    /// The restricted four-field Hamiltonian as a two-layer model.
    pub fn restricted(p: &CcParams) -> Self {
        TwoLayerModel { coefficients: p.restricted_coefficients(), constrained: Some(*p) }
    }
}

impl HamiltonianModel for TwoLayerModel {
    fn kind(&self) -> ModelKind {
        ModelKind::TwoLayer
    }

    fn energy(&self, ops: &Spectral, s: &[Field]) -> Result<EnergyBreakdown> {
        expect_len(self.kind(), s)?;
        energy_two_layer_with(ops, &s[0], &s[1], &self.coefficients)
    }

    fn gradient(&self, ops: &Spectral, s: &[Field]) -> Result<Vec<Field>> {
        expect_len(self.kind(), s)?;
        let (a, b) = grad_two_layer_with(ops, &s[0], &s[1], &self.coefficients)?;
        Ok(vec![a, b])
    }

    fn poisson(&self) -> PoissonStructure {
        PoissonStructure::darboux_pair()
    }

    fn rhs(&self, ops: &Spectral, s: &[Field]) -> Result<Vec<Field>> {
        expect_len(self.kind(), s)?;
        let (a, b) = rhs_two_layer_with(ops, &s[0], &s[1], &self.coefficients)?;
        Ok(vec![a, b])
    }

    fn check_admissible(&self, s: &[Field]) -> Result<()> {
        expect_len(self.kind(), s)?;
        let c = &self.coefficients;
        check_thickness(&s[0].map(|z| c.a1 - z), "eta1")?;
        check_thickness(&s[0].map(|z| c.a2 + z), "eta2")?;
        check_finite(&s[1], "sigma")
    }

    fn cutoff_wavenumber(&self, s: &[Field]) -> f64 {
        cutoff_two_layer(&s[0], &self.coefficients)
    }

    fn constraint_residual(&self, ops: &Spectral, s: &[Field]) -> Result<Option<f64>> {
        match &self.constrained {
            Some(p) => {
                let r = check_constraint_propagation(ops, &[(s[0].clone(), s[1].clone())], p)?;
                Ok(Some(r.max_phi2()))
            }
            None => Ok(None),
        }
    }
}

/// Canonical single-layer model in `(eta, mu)`.
#[derive(Clone, Debug)]
pub struct SgnCanonicalModel {
    pub params: SgnParams,
}

impl HamiltonianModel for SgnCanonicalModel {
    fn kind(&self) -> ModelKind {
        ModelKind::SgnCanonical
    }

    fn energy(&self, ops: &Spectral, s: &[Field]) -> Result<EnergyBreakdown> {
        expect_len(self.kind(), s)?;
        energy_sgn(ops, &s[0], &s[1], &self.params)
    }

    fn gradient(&self, ops: &Spectral, s: &[Field]) -> Result<Vec<Field>> {
        expect_len(self.kind(), s)?;
        let (a, b) = grad_sgn(ops, &s[0], &s[1], &self.params)?;
        Ok(vec![a, b])
    }

    fn poisson(&self) -> PoissonStructure {
        PoissonStructure::darboux_pair()
    }

    /// Includes the constant time rescaling by `1 / depth^2`.
    fn rhs(&self, ops: &Spectral, s: &[Field]) -> Result<Vec<Field>> {
        expect_len(self.kind(), s)?;
        let (a, b) = rhs_sgn_canonical(ops, &s[0], &s[1], &self.params)?;
        Ok(vec![a, b])
    }

    fn check_admissible(&self, s: &[Field]) -> Result<()> {
        expect_len(self.kind(), s)?;
        check_thickness(&s[0], "eta")?;
        check_finite(&s[1], "mu")
    }

    fn cutoff_wavenumber(&self, s: &[Field]) -> f64 {
        cutoff_sgn(&s[0], self.params.eps)
    }
}

/// Classical single-layer model in Lie–Poisson variables `(eta, m)`.
#[derive(Clone, Debug)]
pub struct SgnClassicModel {
    pub params: SgnParams,
}

impl HamiltonianModel for SgnClassicModel {
    fn kind(&self) -> ModelKind {
        ModelKind::SgnClassic
    }

    fn energy(&self, ops: &Spectral, s: &[Field]) -> Result<EnergyBreakdown> {
        expect_len(self.kind(), s)?;
        let u = ubar_from_m(ops, &s[1], &s[0], &self.params)?;
        energy_sgn_classic(ops, &s[0], &u, &self.params)
    }

    fn gradient(&self, ops: &Spectral, s: &[Field]) -> Result<Vec<Field>> {
        expect_len(self.kind(), s)?;
        let (a, b) = grad_sgn_classic_m(ops, &s[0], &s[1], &self.params)?;
        Ok(vec![a, b])
    }

    fn poisson(&self) -> PoissonStructure {
        PoissonStructure::sgn_lie()
    }

    fn rhs(&self, ops: &Spectral, s: &[Field]) -> Result<Vec<Field>> {
        expect_len(self.kind(), s)?;
        let (a, b) = rhs_sgn_classic_m(ops, &s[0], &s[1], &self.params)?;
        Ok(vec![a, b])
    }

    fn check_admissible(&self, s: &[Field]) -> Result<()> {
        expect_len(self.kind(), s)?;
        check_thickness(&s[0], "eta")?;
        check_finite(&s[1], "m")
    }

    /// The classical energy is convex in `ubar`; there is no cutoff.
    fn cutoff_wavenumber(&self, _s: &[Field]) -> f64 {
        f64::INFINITY
    }
}

/// Local deep-water model in `(eta1, sigma)`.
#[derive(Clone, Debug)]
pub struct DeepWaterModel {
    pub params: DeepWaterParams,
}

impl HamiltonianModel for DeepWaterModel {
    fn kind(&self) -> ModelKind {
        ModelKind::DeepWater
    }

    fn energy(&self, ops: &Spectral, s: &[Field]) -> Result<EnergyBreakdown> {
        expect_len(self.kind(), s)?;
        energy_deepwater(ops, &s[0], &s[1], &self.params)
    }

    fn gradient(&self, ops: &Spectral, s: &[Field]) -> Result<Vec<Field>> {
        expect_len(self.kind(), s)?;
        let (a, b) = grad_deepwater(ops, &s[0], &s[1], &self.params)?;
        Ok(vec![a, b])
    }

    fn poisson(&self) -> PoissonStructure {
        PoissonStructure::darboux_pair_reversed()
    }

    fn rhs(&self, ops: &Spectral, s: &[Field]) -> Result<Vec<Field>> {
        expect_len(self.kind(), s)?;
        let (a, b) = rhs_deepwater(ops, &s[0], &s[1], &self.params)?;
        Ok(vec![a, b])
    }

    fn check_admissible(&self, s: &[Field]) -> Result<()> {
        expect_len(self.kind(), s)?;
        check_thickness(&s[0], "eta1")?;
        check_finite(&s[1], "sigma")
    }

    fn cutoff_wavenumber(&self, s: &[Field]) -> f64 {
        cutoff_deepwater(&s[0], &self.params)
    }
}

/// Four-field system with a prescribed constant interfacial pressure.
///
/// Without the Dirac projection the upper layer evolves under reversed
/// gravity, so this model is meant for energy and gradient work, not for
/// long runs.
#[derive(Clone, Debug)]
pub struct CcFourModel {
    pub params: CcParams,
    pub pressure: f64,
}

impl HamiltonianModel for CcFourModel {
    fn kind(&self) -> ModelKind {
        ModelKind::CcFour
    }

    fn energy(&self, ops: &Spectral, s: &[Field]) -> Result<EnergyBreakdown> {
        expect_len(self.kind(), s)?;
        energy_cc_four(ops, CcFields::from_slice(s), &Field::constant(s[0].len(), self.pressure), &self.params)
    }

    fn gradient(&self, ops: &Spectral, s: &[Field]) -> Result<Vec<Field>> {
        expect_len(self.kind(), s)?;
        let p = Field::constant(s[0].len(), self.pressure);
        Ok(grad_cc_four(ops, CcFields::from_slice(s), &p, &self.params)?.to_vec())
    }

    fn poisson(&self) -> PoissonStructure {
        PoissonStructure::darboux_quad()
    }

    fn rhs(&self, ops: &Spectral, s: &[Field]) -> Result<Vec<Field>> {
        expect_len(self.kind(), s)?;
        Ok(rhs_cc_four(ops, CcFields::from_slice(s), &Field::zeros(s[0].len()), &self.params)?.to_vec())
    }

    fn check_admissible(&self, s: &[Field]) -> Result<()> {
        expect_len(self.kind(), s)?;
        check_thickness(&s[0], "eta1")?;
        check_thickness(&s[2], "eta2")?;
        check_finite(&s[1], "mu1")?;
        check_finite(&s[3], "mu2")
    }

    fn cutoff_wavenumber(&self, s: &[Field]) -> f64 {
        cutoff_sgn(&s[0], self.params.eps).min(cutoff_sgn(&s[2], self.params.eps))
    }

    fn mass(&self, ops: &Spectral, s: &[Field]) -> f64 {
        ops.integrate(&(&s[0] + &s[2]))
    }

    fn momentum(&self, ops: &Spectral, s: &[Field]) -> f64 {
        ops.integrate(&(&s[3] - &s[1]))
    }

    fn constraint_residual(&self, ops: &Spectral, s: &[Field]) -> Result<Option<f64>> {
        let c = crate::dirac::constraints(ops, CcFields::from_slice(s), &self.params)?;
        Ok(Some(c.max_phi2()))
    }
}

/// Restricted Hamiltonian of the four-field system in `(zeta, sigma)`,
/// evaluated by its own density code.
#[derive(Clone, Debug)]
pub struct RestrictedModel {
    pub inner: TwoLayerModel,
    pub params: CcParams,
}

impl RestrictedModel {
    pub fn new(params: CcParams) -> Self {
        RestrictedModel { inner: TwoLayerModel::restricted(&params), params }
    }
}

impl HamiltonianModel for RestrictedModel {
    fn kind(&self) -> ModelKind {
        ModelKind::TwoLayer
    }

    fn energy(&self, ops: &Spectral, s: &[Field]) -> Result<EnergyBreakdown> {
        let total = restricted_hamiltonian(ops, &s[0], &s[1], &self.params)?;
        let pot = 0.5 * self.params.g * (self.params.rho2 - self.params.rho1) * ops.inner(&s[0], &s[0]);
        Ok(EnergyBreakdown::new(total - pot, pot, 0.0))
    }

    fn gradient(&self, ops: &Spectral, s: &[Field]) -> Result<Vec<Field>> {
        self.inner.gradient(ops, s)
    }

    fn poisson(&self) -> PoissonStructure {
        PoissonStructure::darboux_pair()
    }

    fn rhs(&self, ops: &Spectral, s: &[Field]) -> Result<Vec<Field>> {
        self.inner.rhs(ops, s)
    }

    fn check_admissible(&self, s: &[Field]) -> Result<()> {
        self.inner.check_admissible(s)
    }

    fn cutoff_wavenumber(&self, s: &[Field]) -> f64 {
        self.inner.cutoff_wavenumber(s)
    }

    fn constraint_residual(&self, ops: &Spectral, s: &[Field]) -> Result<Option<f64>> {
        self.inner.constraint_residual(ops, s)
    }
}

/// Builds the model for `kind` from physical parameters.
pub fn build_model(kind: ModelKind, params: &PhysicalParams, regime: &ScalingRegime) -> Result<Box<dyn HamiltonianModel>> {
    Ok(match kind {
        ModelKind::TwoLayer => Box::new(TwoLayerModel::new(params, regime)?),
        ModelKind::SgnCanonical => Box::new(SgnCanonicalModel { params: SgnParams::from_physical(params) }),
        ModelKind::SgnClassic => Box::new(SgnClassicModel { params: SgnParams::from_physical(params) }),
        ModelKind::DeepWater => Box::new(DeepWaterModel { params: DeepWaterParams::new(params, regime)? }),
        ModelKind::CcFour => Box::new(CcFourModel { params: CcParams::from_physical(params)?, pressure: 0.0 }),
    })
}
