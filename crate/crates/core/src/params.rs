//! Physical parameters of one atom–cavity–waveguide site.
//!
//! Every rate and detuning is dimensionless, measured in units of the
//! waveguide–cavity rate Γ (`big_gamma`, normally 1). The photon frequency
//! enters only through the detuning Δ = ω − ω_eg.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rates of a single Jaynes–Cummings site, in units of Γ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CqedParams {
    /// Atom–cavity coupling g.
    pub g: f64,
    /// Cavity photon leakage κ.
    pub kappa: f64,
    /// Atomic spontaneous emission γ.
    pub gamma: f64,
    /// Clockwise/counter-clockwise backscattering η (real).
    pub eta: f64,
    /// Atom–cavity detuning δ = ω_c − ω_eg.
    pub delta_ac: f64,
    /// Waveguide–cavity rate Γ, with 2Γ = V²/v_g.
    pub big_gamma: f64,
}

impl Default for CqedParams {
    fn default() -> Self {
        Self {
            g: 0.0,
            kappa: 0.0,
            gamma: 0.0,
            eta: 0.0,
            delta_ac: 0.0,
            big_gamma: 1.0,
        }
    }
}

impl CqedParams {
    pub fn new(g: f64, kappa: f64, gamma: f64, eta: f64, delta_ac: f64) -> Self {
        Self {
            g,
            kappa,
            gamma,
            eta,
            delta_ac,
            big_gamma: 1.0,
        }
    }

    /// Same site with κ = γ = 0.
    pub fn without_losses(self) -> Self {
        Self {
            kappa: 0.0,
            gamma: 0.0,
            ..self
        }
    }

    pub fn is_lossless(&self) -> bool {
        self.kappa == 0.0 && self.gamma == 0.0
    }

    /// Returns the parameters unchanged if every rate is finite and
    /// non-negative and Γ is positive.
    pub fn validate(self) -> Result<Self> {
        let fields = [
            ("g", self.g),
            ("kappa", self.kappa),
            ("gamma", self.gamma),
            ("eta", self.eta),
            ("delta_ac", self.delta_ac),
            ("big_gamma", self.big_gamma),
        ];
        for (field, value) in fields {
            if !value.is_finite() {
                return Err(Error::NonFinite { field, value });
            }
        }
        for (field, value) in &fields[..4] {
            if *value < 0.0 {
                return Err(Error::NegativeRate {
                    field,
                    value: *value,
                });
            }
        }
        if self.big_gamma <= 0.0 {
            return Err(Error::NonPositiveUnit(self.big_gamma));
        }
        Ok(self)
    }

    /// Cooperativity g²/(2κγ).
    pub fn cooperativity(&self) -> Result<f64> {
        if self.kappa == 0.0 || self.gamma == 0.0 {
            return Err(Error::DivisionByZeroRate {
                kappa: self.kappa,
                gamma: self.gamma,
            });
        }
        Ok(self.g * self.g / (2.0 * self.kappa * self.gamma))
    }

    /// Complex detunings (Δ̃_c, Δ̃_eg) = (Δ − δ + iκ, Δ + iγ).
    pub fn effective_detunings(&self, d: Detuning) -> (Complex64, Complex64) {
        (
            Complex64::new(d.0 - self.delta_ac, self.kappa),
            Complex64::new(d.0, self.gamma),
        )
    }
}

/// Photon detuning Δ = ω − ω_eg in units of Γ.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Detuning(pub f64);

impl Detuning {
    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<f64> for Detuning {
    fn from(delta: f64) -> Self {
        Detuning(delta)
    }
}

/// Complex transmission and reflection amplitudes with their intensities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringAmplitudes {
    pub t: Complex64,
    pub r: Complex64,
    /// T = |t|²
    pub transmission: f64,
    /// R = |r|²
    pub reflection: f64,
}

impl ScatteringAmplitudes {
    pub fn new(t: Complex64, r: Complex64) -> Self {
        Self {
            t,
            r,
            transmission: t.norm_sqr(),
            reflection: r.norm_sqr(),
        }
    }
}

/// The six parameter regimes used for the finite and disordered array studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    #[serde(rename = "case1")]
    DecoupledLossless,
    #[serde(rename = "case2")]
    DecoupledLossy,
    #[serde(rename = "case3")]
    WeakNoBackscatter,
    #[serde(rename = "case4")]
    WeakLargeBackscatter,
    #[serde(rename = "case5")]
    StrongLargeBackscatter,
    #[serde(rename = "case6")]
    StrongDetuned,
}

impl Regime {
    pub const ALL: [Regime; 6] = [
        Regime::DecoupledLossless,
        Regime::DecoupledLossy,
        Regime::WeakNoBackscatter,
        Regime::WeakLargeBackscatter,
        Regime::StrongLargeBackscatter,
        Regime::StrongDetuned,
    ];

    pub fn params(self) -> CqedParams {
        match self {
            Regime::DecoupledLossless => CqedParams::new(0.0, 0.0, 0.0, 1.0, 0.0),
            Regime::DecoupledLossy => CqedParams::new(0.0, 0.5, 0.5, 1.0, 0.0),
            Regime::WeakNoBackscatter => CqedParams::new(0.25, 0.5, 0.5, 0.0, 0.0),
            Regime::WeakLargeBackscatter => CqedParams::new(0.25, 0.5, 0.5, 2.0, 0.0),
            Regime::StrongLargeBackscatter => CqedParams::new(5.0, 0.5, 0.5, 2.0, 0.0),
            Regime::StrongDetuned => CqedParams::new(5.0, 0.5, 0.5, 2.0, 4.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Regime::DecoupledLossless => "case1",
            Regime::DecoupledLossy => "case2",
            Regime::WeakNoBackscatter => "case3",
            Regime::WeakLargeBackscatter => "case4",
            Regime::StrongLargeBackscatter => "case5",
            Regime::StrongDetuned => "case6",
        }
    }

    pub fn from_name(name: &str) -> Option<Regime> {
        Regime::ALL.into_iter().find(|r| r.name() == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn table_regimes_validate() {
        for regime in Regime::ALL {
            assert!(regime.params().validate().is_ok(), "{}", regime.name());
        }
        assert!(Regime::DecoupledLossless.params().is_lossless());
        assert_eq!(
            Regime::StrongDetuned.params(),
            CqedParams::new(5.0, 0.5, 0.5, 2.0, 4.0)
        );
    }

    #[test]
    fn negative_rate_is_rejected() {
        let p = CqedParams::new(0.0, -0.5, 0.0, 1.0, 0.0);
        assert_eq!(
            p.validate(),
            Err(Error::NegativeRate {
                field: "kappa",
                value: -0.5
            })
        );
    }

    #[test]
    fn unit_must_be_positive() {
        let p = CqedParams {
            big_gamma: 0.0,
            ..CqedParams::default()
        };
        assert_eq!(p.validate(), Err(Error::NonPositiveUnit(0.0)));
        let p = CqedParams {
            g: f64::NAN,
            ..CqedParams::default()
        };
        assert!(matches!(
            p.validate(),
            Err(Error::NonFinite { field: "g", .. })
        ));
    }

    #[test]
    fn negative_detuning_delta_is_allowed() {
        let p = CqedParams::new(1.0, 0.0, 0.0, 0.0, -3.0);
        assert!(p.validate().is_ok());
    }

    #[test]
    fn validate_is_idempotent() {
        let p = CqedParams::new(5.0, 0.5, 0.5, 2.0, 4.0);
        assert_eq!(p.validate().unwrap().validate().unwrap(), p);
    }

    #[test]
    fn effective_detuning_examples() {
        let p = CqedParams::default();
        assert_eq!(
            p.effective_detunings(Detuning(0.0)),
            (c(0.0, 0.0), c(0.0, 0.0))
        );

        let p = CqedParams::new(0.0, 0.5, 0.5, 0.0, 4.0);
        assert_eq!(
            p.effective_detunings(Detuning(1.0)),
            (c(-3.0, 0.5), c(1.0, 0.5))
        );

        let p = CqedParams::new(0.0, 2.0, 2.0, 0.0, 0.0);
        assert_eq!(
            p.effective_detunings(Detuning(0.0)),
            (c(0.0, 2.0), c(0.0, 2.0))
        );
    }

    #[test]
    fn effective_detunings_have_unit_slope() {
        let p = CqedParams::new(1.3, 0.2, 0.7, 0.4, -1.1);
        let (c0, e0) = p.effective_detunings(Detuning(0.0));
        for delta in [-7.5, -1.0, 0.25, 3.0, 9.9] {
            let (cd, ed) = p.effective_detunings(Detuning(delta));
            assert!((cd - c0 - c(delta, 0.0)).norm() < 1e-14);
            assert!((ed - e0 - c(delta, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn cooperativity_examples() {
        assert_eq!(
            CqedParams::new(5.0, 0.5, 0.5, 0.0, 0.0).cooperativity(),
            Ok(50.0)
        );
        assert_eq!(
            CqedParams::new(0.25, 0.5, 0.5, 0.0, 0.0).cooperativity(),
            Ok(0.125)
        );
        assert_eq!(
            CqedParams::new(0.0, 1.0, 1.0, 0.0, 0.0).cooperativity(),
            Ok(0.0)
        );
        assert!(matches!(
            CqedParams::new(1.0, 0.0, 1.0, 0.0, 0.0).cooperativity(),
            Err(Error::DivisionByZeroRate { .. })
        ));
    }

    #[test]
    fn regime_names_round_trip() {
        for regime in Regime::ALL {
            assert_eq!(Regime::from_name(regime.name()), Some(regime));
        }
        assert_eq!(Regime::from_name("case7"), None);
    }
}
