//! Named parameter presets: the particular-case configurations exposed by
//! the CLI and exercised by the acceptance suite.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::KernelParams;
use crate::measures::{ContinuousMeasure, DiscreteMeasure, Scheme};

/// Built-in particular-case configurations.
///
/// `Cor51`/`Cor52` fix the direction (δ = +1 non-homogeneous, δ = −1
/// homogeneous of degree zero) with general kernel parameters and
/// power-law measures; `Cor53` sets α = ρ (plain Riemann zeta constant);
/// `Cor54` additionally sets γ = σ/2 with σ = ρ = 1, where the constant is
/// π²/6; `Remark55` is the unit-measure, unshifted (β = 0) case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Preset {
    Cor51,
    Cor52,
    Cor53,
    Cor54,
    Remark55,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::Cor51,
        Preset::Cor52,
        Preset::Cor53,
        Preset::Cor54,
        Preset::Remark55,
    ];

    pub fn parse(name: &str) -> Result<Preset> {
        match name.to_ascii_lowercase().as_str() {
            "cor51" => Ok(Preset::Cor51),
            "cor52" => Ok(Preset::Cor52),
            "cor53" => Ok(Preset::Cor53),
            "cor54" => Ok(Preset::Cor54),
            "remark55" => Ok(Preset::Remark55),
            other => Err(Error::domain(format!(
                "unknown preset {other}; expected cor51|cor52|cor53|cor54|remark55"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Cor51 => "cor51",
            Preset::Cor52 => "cor52",
            Preset::Cor53 => "cor53",
            Preset::Cor54 => "cor54",
            Preset::Remark55 => "remark55",
        }
    }

    /// Expand into a fully validated scheme.
    pub fn scheme(&self) -> Scheme {
        match self {
            Preset::Cor51 => Scheme::new(
                KernelParams::new(1.0, 0.5, 0.4, 0.9).unwrap(),
                1,
                ContinuousMeasure::power_damped(0.5).unwrap(),
                DiscreteMeasure::power_seq(0.5, 0.5).unwrap(),
            )
            .unwrap(),
            Preset::Cor52 => Scheme::new(
                KernelParams::new(1.0, 0.5, 0.4, 0.9).unwrap(),
                -1,
                ContinuousMeasure::power_damped(0.5).unwrap(),
                DiscreteMeasure::power_seq(0.5, 0.5).unwrap(),
            )
            .unwrap(),
            Preset::Cor53 => Scheme::new(
                KernelParams::new(0.8, 0.8, 0.3, 0.75).unwrap(),
                1,
                ContinuousMeasure::unit(),
                DiscreteMeasure::unit(0.0).unwrap(),
            )
            .unwrap(),
            Preset::Cor54 => Scheme::new(
                KernelParams::new(1.0, 1.0, 0.5, 1.0).unwrap(),
                1,
                ContinuousMeasure::unit(),
                DiscreteMeasure::unit(0.5).unwrap(),
            )
            .unwrap(),
            Preset::Remark55 => Scheme::new(
                KernelParams::new(1.0, 1.0, 0.5, 1.0).unwrap(),
                1,
                ContinuousMeasure::unit(),
                DiscreteMeasure::unit(0.0).unwrap(),
            )
            .unwrap(),
        }
    }
}
