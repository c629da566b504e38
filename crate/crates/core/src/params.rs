//! Physical and boundary constants shared by every formula in the crate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Decay rate attached to the Dirac part `exp(-rate * t) * delta` of the kernel.
///
/// The exact Fourier-space asymptote of the density entry gives `c^2/nu`; the
/// pointwise bound on the half-line Green's function is often quoted with
/// `c^2/(2 nu)`. Both are kept selectable.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SingularRate {
    #[default]
    Full,
    Half,
}

/// Sound speed, viscosity and the mixed boundary coefficients `a1 m_x + a2 m = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModelParams", deny_unknown_fields)]
pub struct ModelParams {
    pub c: f64,
    pub nu: f64,
    pub a1: f64,
    pub a2: f64,
    #[serde(default)]
    pub singular_rate: SingularRate,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModelParams {
    c: f64,
    nu: f64,
    a1: f64,
    a2: f64,
    #[serde(default)]
    singular_rate: SingularRate,
}

impl TryFrom<RawModelParams> for ModelParams {
    type Error = Error;

    fn try_from(raw: RawModelParams) -> Result<Self> {
        let mut p = ModelParams::new(raw.c, raw.nu, raw.a1, raw.a2)?;
        p.singular_rate = raw.singular_rate;
        Ok(p)
    }
}

impl ModelParams {
    pub fn new(c: f64, nu: f64, a1: f64, a2: f64) -> Result<Self> {
        let p = ModelParams {
            c,
            nu,
            a1,
            a2,
            singular_rate: SingularRate::Full,
        };
        p.validate()?;
        Ok(p)
    }

    /// Mixed stable parameters with `gamma = -a2/a1`, normalised to `a1 = -1`.
    pub fn mixed(c: f64, nu: f64, gamma: f64) -> Result<Self> {
        Self::new(c, nu, -1.0, gamma)
    }

    pub fn dirichlet(c: f64, nu: f64) -> Result<Self> {
        Self::new(c, nu, 0.0, 1.0)
    }

    pub fn neumann(c: f64, nu: f64) -> Result<Self> {
        Self::new(c, nu, 1.0, 0.0)
    }

    pub fn with_singular_rate(mut self, rate: SingularRate) -> Self {
        self.singular_rate = rate;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.c, self.nu, self.a1, self.a2]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::param("model parameters must be finite"));
        }
        if self.c <= 0.0 {
            return Err(Error::param(format!(
                "sound speed c = {} must be positive",
                self.c
            )));
        }
        if self.nu <= 0.0 {
            return Err(Error::param(format!(
                "viscosity nu = {} must be positive",
                self.nu
            )));
        }
        if self.a1 == 0.0 && self.a2 == 0.0 {
            return Err(Error::param("boundary coefficients a1, a2 are both zero"));
        }
        Ok(())
    }

    /// `gamma = -a2/a1`; undefined for the Dirichlet case.
    pub fn gamma(&self) -> Option<f64> {
        (self.a1 != 0.0).then(|| -self.a2 / self.a1)
    }

    pub fn boundary_class(&self) -> BoundaryClass {
        BoundaryClass::classify(self.a1, self.a2)
    }

    /// Rate of the exponentially decaying Dirac part of the density entry.
    pub fn singular_decay_rate(&self) -> f64 {
        let full = self.c * self.c / self.nu;
        match self.singular_rate {
            SingularRate::Full => full,
            SingularRate::Half => 0.5 * full,
        }
    }

    /// Branch point `s = -c^2/nu` of `sqrt(nu s + c^2)`.
    pub fn branch_point(&self) -> f64 {
        -self.c * self.c / self.nu
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryClass {
    Dirichlet,
    Neumann,
    MixedStable,
    MixedUnstable,
}

impl BoundaryClass {
    pub fn classify(a1: f64, a2: f64) -> Self {
        if a1 == 0.0 {
            BoundaryClass::Dirichlet
        } else if a2 == 0.0 {
            BoundaryClass::Neumann
        } else if a1 * a2 < 0.0 {
            BoundaryClass::MixedStable
        } else {
            BoundaryClass::MixedUnstable
        }
    }

    pub fn is_stable(self) -> bool {
        self != BoundaryClass::MixedUnstable
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BoundaryClass::Dirichlet => "dirichlet",
            BoundaryClass::Neumann => "neumann",
            BoundaryClass::MixedStable => "mixed-stable",
            BoundaryClass::MixedUnstable => "mixed-unstable",
        }
    }
}

impl std::fmt::Display for BoundaryClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_bad_parameters() {
        assert!(ModelParams::new(0.0, 1.0, -1.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, -1.0, -1.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, 1.0, 0.0, 0.0).is_err());
        assert!(ModelParams::new(f64::NAN, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn named_classes() {
        assert_eq!(
            ModelParams::dirichlet(1.0, 1.0).unwrap().boundary_class(),
            BoundaryClass::Dirichlet
        );
        assert_eq!(
            ModelParams::neumann(1.0, 1.0).unwrap().boundary_class(),
            BoundaryClass::Neumann
        );
        let mixed = ModelParams::mixed(1.0, 1.0, 2.0).unwrap();
        assert_eq!(mixed.boundary_class(), BoundaryClass::MixedStable);
        assert_eq!(mixed.gamma(), Some(2.0));
        let unstable = ModelParams::new(1.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(unstable.boundary_class(), BoundaryClass::MixedUnstable);
    }

    #[test]
    fn singular_rate_variants() {
        let p = ModelParams::mixed(2.0, 1.0, 1.0).unwrap();
        assert_eq!(p.singular_decay_rate(), 4.0);
        assert_eq!(
            p.with_singular_rate(SingularRate::Half)
                .singular_decay_rate(),
            2.0
        );
    }

    #[test]
    fn deserialize_validates() {
        let ok: ModelParams = serde_json::from_str(r#"{"c":1,"nu":1,"a1":-1,"a2":1}"#).unwrap();
        assert_eq!(ok.boundary_class(), BoundaryClass::MixedStable);
        assert!(serde_json::from_str::<ModelParams>(r#"{"c":-1,"nu":1,"a1":-1,"a2":1}"#).is_err());
        assert!(
            serde_json::from_str::<ModelParams>(r#"{"c":1,"nu":1,"a1":-1,"a2":1,"k":3}"#).is_err()
        );
    }

    proptest! {
        #[test]
        fn classification_is_total(a1 in -5.0f64..5.0, a2 in -5.0f64..5.0) {
            prop_assume!(a1 != 0.0 || a2 != 0.0);
            let class = BoundaryClass::classify(a1, a2);
            let hits = [
                a1 == 0.0,
                a1 != 0.0 && a2 == 0.0,
                a1 * a2 < 0.0,
                a1 * a2 > 0.0,
            ];
            prop_assert_eq!(hits.iter().filter(|h| **h).count(), 1);
            if a1 * a2 < 0.0 {
                let p = ModelParams::new(1.0, 1.0, a1, a2).unwrap();
                prop_assert!(p.gamma().unwrap() > 0.0);
                prop_assert_eq!(class, BoundaryClass::MixedStable);
            }
        }
    }
}
