use serde::{Deserialize, Serialize};

use super::{check_finite, check_thickness, thicknesses, Field, PhysicalParams, ScalingRegime};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    TwoLayer,
    SgnCanonical,
    SgnClassic,
    DeepWater,
    CcFour,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::TwoLayer,
        ModelKind::SgnCanonical,
        ModelKind::SgnClassic,
        ModelKind::DeepWater,
        ModelKind::CcFour,
    ];

    /// Identifier used in configuration files.
    pub fn id(self) -> &'static str {
        match self {
            ModelKind::TwoLayer => "two_layer",
            ModelKind::SgnCanonical => "sgn_canonical",
            ModelKind::SgnClassic => "sgn_classic",
            ModelKind::DeepWater => "deep_water",
            ModelKind::CcFour => "cc_four",
        }
    }

    pub fn from_id(id: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.id() == id)
    }

    pub fn component_names(self) -> &'static [&'static str] {
        match self {
            ModelKind::TwoLayer => &["zeta", "sigma"],
            ModelKind::SgnCanonical => &["eta", "mu"],
            ModelKind::SgnClassic => &["eta", "m"],
            ModelKind::DeepWater => &["eta1", "sigma"],
            ModelKind::CcFour => &["eta1", "mu1", "eta2", "mu2"],
        }
    }
}

/// State vector of one of the supported models.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ModelState {
    TwoLayer { zeta: Field, sigma: Field },
    SgnCanonical { eta: Field, mu: Field },
    SgnClassic { eta: Field, m: Field },
    DeepWater { eta1: Field, sigma: Field },
    CcFour { eta1: Field, mu1: Field, eta2: Field, mu2: Field },
}

fn same_length(fields: &[&Field]) -> Result<()> {
    let n = fields[0].len();
    for f in fields {
        if f.len() != n {
            return Err(Error::GridMismatch {
                expected: n,
                got: f.len(),
            });
        }
    }
    Ok(())
}

impl ModelState {
    pub fn two_layer(
        zeta: Field,
        sigma: Field,
        params: &PhysicalParams,
        regime: &ScalingRegime,
    ) -> Result<Self> {
        same_length(&[&zeta, &sigma])?;
        check_finite(&zeta, "zeta")?;
        check_finite(&sigma, "sigma")?;
        thicknesses(&zeta, params, regime)?;
        Ok(ModelState::TwoLayer { zeta, sigma })
    }

    pub fn sgn_canonical(eta: Field, mu: Field) -> Result<Self> {
        same_length(&[&eta, &mu])?;
        check_thickness(&eta, "eta")?;
        check_finite(&mu, "mu")?;
        Ok(ModelState::SgnCanonical { eta, mu })
    }

    pub fn sgn_classic(eta: Field, m: Field) -> Result<Self> {
        same_length(&[&eta, &m])?;
        check_thickness(&eta, "eta")?;
        check_finite(&m, "m")?;
        Ok(ModelState::SgnClassic { eta, m })
    }

    pub fn deep_water(eta1: Field, sigma: Field) -> Result<Self> {
        same_length(&[&eta1, &sigma])?;
        check_thickness(&eta1, "eta1")?;
        check_finite(&sigma, "sigma")?;
        Ok(ModelState::DeepWater { eta1, sigma })
    }

    pub fn cc_four(eta1: Field, mu1: Field, eta2: Field, mu2: Field) -> Result<Self> {
        same_length(&[&eta1, &mu1, &eta2, &mu2])?;
        check_thickness(&eta1, "eta1")?;
        check_thickness(&eta2, "eta2")?;
        check_finite(&mu1, "mu1")?;
        check_finite(&mu2, "mu2")?;
        Ok(ModelState::CcFour {
            eta1,
            mu1,
            eta2,
            mu2,
        })
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            ModelState::TwoLayer { .. } => ModelKind::TwoLayer,
            ModelState::SgnCanonical { .. } => ModelKind::SgnCanonical,
            ModelState::SgnClassic { .. } => ModelKind::SgnClassic,
            ModelState::DeepWater { .. } => ModelKind::DeepWater,
            ModelState::CcFour { .. } => ModelKind::CcFour,
        }
    }

    pub fn components(&self) -> Vec<&Field> {
        match self {
            ModelState::TwoLayer { zeta, sigma } => vec![zeta, sigma],
            ModelState::SgnCanonical { eta, mu } => vec![eta, mu],
            ModelState::SgnClassic { eta, m } => vec![eta, m],
            ModelState::DeepWater { eta1, sigma } => vec![eta1, sigma],
            ModelState::CcFour {
                eta1,
                mu1,
                eta2,
                mu2,
            } => vec![eta1, mu1, eta2, mu2],
        }
    }

    pub fn into_components(self) -> Vec<Field> {
        match self {
            ModelState::TwoLayer { zeta, sigma } => vec![zeta, sigma],
            ModelState::SgnCanonical { eta, mu } => vec![eta, mu],
            ModelState::SgnClassic { eta, m } => vec![eta, m],
            ModelState::DeepWater { eta1, sigma } => vec![eta1, sigma],
            ModelState::CcFour {
                eta1,
                mu1,
                eta2,
                mu2,
            } => vec![eta1, mu1, eta2, mu2],
        }
    }

    /// Rebuilds a state from raw components without admissibility checks.
    pub fn from_components(kind: ModelKind, comps: Vec<Field>) -> Result<Self> {
        let expected = kind.component_names().len();
        if comps.len() != expected {
            return Err(Error::StateMismatch {
                model: "state",
                reason: format!("expected {expected} components, got {}", comps.len()),
            });
        }
        let mut it = comps.into_iter();
        let mut next = || it.next().expect("length checked");
        Ok(match kind {
            ModelKind::TwoLayer => ModelState::TwoLayer {
                zeta: next(),
                sigma: next(),
            },
            ModelKind::SgnCanonical => ModelState::SgnCanonical {
                eta: next(),
                mu: next(),
            },
            ModelKind::SgnClassic => ModelState::SgnClassic {
                eta: next(),
                m: next(),
            },
            ModelKind::DeepWater => ModelState::DeepWater {
                eta1: next(),
                sigma: next(),
            },
            ModelKind::CcFour => ModelState::CcFour {
                eta1: next(),
                mu1: next(),
                eta2: next(),
                mu2: next(),
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> PhysicalParams {
        PhysicalParams::new(1.0, 2.0, 1.0, 1.0, 1.0, 10.0).unwrap()
    }

    #[test]
    fn rejects_degenerate_lower_layer() {
        let p = params();
        let r = ScalingRegime::lower_layer(&p);
        let mut zeta = Field::zeros(8);
        zeta[3] = -1.0;
        match ModelState::two_layer(zeta, Field::zeros(8), &p, &r) {
            Err(Error::Admissibility { node, which, .. }) => {
                assert_eq!(node, 3);
                assert_eq!(which, "eta2");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_nan() {
        let mut mu = Field::zeros(8);
        mu[5] = f64::NAN;
        assert!(matches!(
            ModelState::sgn_canonical(Field::constant(8, 1.0), mu),
            Err(Error::NonFinite { node: 5, .. })
        ));
    }

    #[test]
    fn components_round_trip() {
        let s = ModelState::cc_four(
            Field::constant(8, 1.0),
            Field::constant(8, 0.1),
            Field::constant(8, 2.0),
            Field::constant(8, 0.2),
        )
        .unwrap();
        let kind = s.kind();
        let back = ModelState::from_components(kind, s.clone().into_components()).unwrap();
        assert_eq!(back, s);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn state_serialization_round_trip(v in prop::collection::vec(-1e6f64..1e6, 1..40)) {
                let f = Field::new(v.clone());
                let g = Field::new(v.iter().map(|x| x * 0.5 + 1.0).collect());
                let st = ModelState::SgnCanonical { eta: g, mu: f };
                let text = serde_json::to_string(&st).unwrap();
                let back: ModelState = serde_json::from_str(&text).unwrap();
                prop_assert_eq!(back, st);
            }

            #[test]
            fn model_ids_round_trip(i in 0usize..5) {
                let k = ModelKind::ALL[i];
                prop_assert_eq!(ModelKind::from_id(k.id()), Some(k));
            }
        }
    }
}
