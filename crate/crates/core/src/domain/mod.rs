//! Parameters, scaling, grids, fields and model states.

mod field;
mod grid;
mod params;
mod state;

pub use field::Field;
pub use grid::Grid;
pub use params::{PhysicalParams, ScalingRegime, TwoLayerCoefficients, VerticalScale};
pub use state::{ModelKind, ModelState};

/// Minimum admissible layer thickness.
pub const THICKNESS_FLOOR: f64 = 1e-8;

/// Checks that every entry of `f` is finite and above [`THICKNESS_FLOOR`].
pub fn check_thickness(f: &Field, which: &'static str) -> crate::Result<()> {
    for (node, &value) in f.iter().enumerate() {
        if !value.is_finite() {
            return Err(crate::Error::NonFinite { which, node });
        }
        if value <= THICKNESS_FLOOR {
            return Err(crate::Error::Admissibility { which, node, value });
        }
    }
    Ok(())
}

/// Checks that every entry of `f` is finite.
pub fn check_finite(f: &Field, which: &'static str) -> crate::Result<()> {
    match f.iter().position(|v| !v.is_finite()) {
        Some(node) => Err(crate::Error::NonFinite { which, node }),
        None => Ok(()),
    }
}

/// Layer thicknesses `(eta1, eta2)` for an interface displacement `zeta`.
pub fn thicknesses(
    zeta: &Field,
    params: &PhysicalParams,
    regime: &ScalingRegime,
) -> crate::Result<(Field, Field)> {
    let (a1, a2) = regime.rest_thicknesses(params);
    let eta1 = zeta.map(|z| a1 - z);
    let eta2 = zeta.map(|z| a2 + z);
    check_thickness(&eta1, "eta1")?;
    check_thickness(&eta2, "eta2")?;
    Ok((eta1, eta2))
}

/// Weighted mass density `rho1 * eta2 + rho2 * eta1`.
pub fn psi(eta1: &Field, eta2: &Field, params: &PhysicalParams) -> Field {
    eta1.zip_map(eta2, |a, b| params.rho1 * b + params.rho2 * a)
}
