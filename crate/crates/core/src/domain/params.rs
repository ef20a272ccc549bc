use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Dimensional description of the two-fluid configuration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Upper-layer density.
    pub rho1: f64,
    /// Lower-layer density.
    pub rho2: f64,
    /// Upper-layer rest thickness.
    pub h1: f64,
    /// Lower-layer rest thickness.
    pub h2: f64,
    /// Gravitational acceleration.
    pub g: f64,
    /// Horizontal length scale.
    pub l: f64,
}

impl PhysicalParams {
    pub fn new(rho1: f64, rho2: f64, h1: f64, h2: f64, g: f64, l: f64) -> Result<Self> {
        let p = PhysicalParams {
            rho1,
            rho2,
            h1,
            h2,
            g,
            l,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |name: &'static str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name,
                    reason: "must be finite".into(),
                })
            }
        };
        finite("rho1", self.rho1)?;
        finite("rho2", self.rho2)?;
        finite("h1", self.h1)?;
        finite("h2", self.h2)?;
        finite("g", self.g)?;
        finite("L", self.l)?;
        if self.rho1 < 0.0 {
            return Err(Error::InvalidParameter {
                name: "rho1",
                reason: "must be non-negative".into(),
            });
        }
        if self.rho2 <= self.rho1 {
            return Err(Error::InvalidParameter {
                name: "rho2",
                reason: format!(
                    "stable stratification requires rho2 > rho1 (got rho1 = {}, rho2 = {})",
                    self.rho1, self.rho2
                ),
            });
        }
        for (name, v) in [("h1", self.h1), ("h2", self.h2), ("g", self.g), ("L", self.l)] {
            if v <= 0.0 {
                return Err(Error::InvalidParameter {
                    name,
                    reason: "must be strictly positive".into(),
                });
            }
        }
        Ok(())
    }

    /// Reduced gravity times the lower density, `g (rho2 - rho1)`.
    pub fn buoyancy(&self) -> f64 {
        self.g * (self.rho2 - self.rho1)
    }
}

/// Which rest thickness sets the vertical length unit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VerticalScale {
    /// Vertical lengths in units of `h2`.
    LowerLayer,
    /// Vertical lengths in units of `h1` (deep-water regime).
    UpperLayer,
}

/// Nondimensionalization: dispersion parameter `epsilon` and, in the
/// deep-water regime, `delta = epsilon^(2 - a)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRegime {
    pub vertical_scale: VerticalScale,
    pub epsilon: f64,
    pub a_exponent: f64,
    pub delta: f64,
}

impl ScalingRegime {
    /// Lower-layer scaling: `epsilon = h2 / L`.
    pub fn lower_layer(params: &PhysicalParams) -> Self {
        let epsilon = params.h2 / params.l;
        ScalingRegime {
            vertical_scale: VerticalScale::LowerLayer,
            epsilon,
            a_exponent: 0.0,
            delta: epsilon * epsilon,
        }
    }

    /// Upper-layer scaling: `epsilon = h1 / L`, `delta = epsilon^(2 - a)`.
    pub fn upper_layer(params: &PhysicalParams, a_exponent: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&a_exponent) {
            return Err(Error::InvalidParameter {
                name: "a",
                reason: format!("exponent must lie in [0, 1], got {a_exponent}"),
            });
        }
        let epsilon = params.h1 / params.l;
        Ok(ScalingRegime {
            vertical_scale: VerticalScale::UpperLayer,
            epsilon,
            a_exponent,
            delta: epsilon.powf(2.0 - a_exponent),
        })
    }

    pub fn new(params: &PhysicalParams, scale: VerticalScale, a_exponent: f64) -> Result<Self> {
        match scale {
            VerticalScale::LowerLayer => Ok(Self::lower_layer(params)),
            VerticalScale::UpperLayer => Self::upper_layer(params, a_exponent),
        }
    }

    /// Nondimensional rest thicknesses `(eta1, eta2)` at `zeta = 0`.
    pub fn rest_thicknesses(&self, params: &PhysicalParams) -> (f64, f64) {
        match self.vertical_scale {
            VerticalScale::LowerLayer => (params.h1 / params.h2, 1.0),
            VerticalScale::UpperLayer => (1.0, params.h2 / params.h1),
        }
    }

    /// Nondimensional total depth.
    pub fn total_height(&self, params: &PhysicalParams) -> f64 {
        let (a1, a2) = self.rest_thicknesses(params);
        a1 + a2
    }
}

/// Prefactors of the two-layer energy density
/// `K eta1 eta2 sigma^2 / (2 psi) - D [A sigma_x^2 + B zeta_x (sigma^2)_x + C zeta_x^2 sigma^2] + Gp zeta^2 / 2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoLayerCoefficients {
    pub rho1: f64,
    pub rho2: f64,
    /// Rest thickness of the upper layer.
    pub a1: f64,
    /// Rest thickness of the lower layer.
    pub a2: f64,
    /// Total height `a1 + a2`.
    pub h: f64,
    pub kinetic: f64,
    pub dispersive: f64,
    pub potential: f64,
}

impl TwoLayerCoefficients {
    pub fn new(params: &PhysicalParams, regime: &ScalingRegime) -> Self {
        let (a1, a2) = regime.rest_thicknesses(params);
        let (kinetic, dispersive, potential) = match regime.vertical_scale {
            VerticalScale::LowerLayer => (
                params.h2,
                regime.epsilon.powi(2) * params.h2,
                params.h2.powi(2) * params.buoyancy(),
            ),
            VerticalScale::UpperLayer => (
                params.h1,
                regime.delta * params.h1.powi(2) / params.h2,
                params.h1.powi(2) * params.buoyancy(),
            ),
        };
        TwoLayerCoefficients {
            rho1: params.rho1,
            rho2: params.rho2,
            a1,
            a2,
            h: a1 + a2,
            kinetic,
            dispersive,
            potential,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unstable_stratification() {
        let err = PhysicalParams::new(2.0, 1.0, 1.0, 1.0, 1.0, 10.0).unwrap_err();
        assert!(err.to_string().contains("stable stratification"));
    }

    #[test]
    fn rejects_nonpositive_lengths() {
        assert!(PhysicalParams::new(1.0, 2.0, 0.0, 1.0, 1.0, 10.0).is_err());
        assert!(PhysicalParams::new(1.0, 2.0, 1.0, 1.0, -1.0, 10.0).is_err());
        assert!(PhysicalParams::new(-0.1, 2.0, 1.0, 1.0, 1.0, 10.0).is_err());
    }

    #[test]
    fn epsilon_is_the_scale_ratio() {
        let p = PhysicalParams::new(1.0, 2.0, 0.3, 0.7, 9.81, 7.0).unwrap();
        let lo = ScalingRegime::lower_layer(&p);
        assert_eq!(lo.epsilon, 0.7 / 7.0);
        let up = ScalingRegime::upper_layer(&p, 0.5).unwrap();
        assert_eq!(up.epsilon, 0.3 / 7.0);
        assert_eq!(up.delta, (0.3f64 / 7.0).powf(1.5));
        assert!(ScalingRegime::upper_layer(&p, 1.5).is_err());
    }

    #[test]
    fn total_height_matches_rest_thicknesses() {
        let p = PhysicalParams::new(1.0, 2.0, 0.3, 0.7, 9.81, 7.0).unwrap();
        let lo = ScalingRegime::lower_layer(&p);
        assert!((lo.total_height(&p) - (0.3 + 0.7) / 0.7).abs() < 1e-15);
        let up = ScalingRegime::upper_layer(&p, 1.0).unwrap();
        assert!((up.total_height(&p) - (0.3 + 0.7) / 0.3).abs() < 1e-15);
    }
}
