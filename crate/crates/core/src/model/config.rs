use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ssm::default_rank;

/// How the `P x P x D` output of the last block is reduced to one vector.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Readout {
    /// The feature at the patch center, the pixel being classified.
    #[default]
    Center,
    /// The mean over all patch positions.
    Mean,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    /// Patch side `P` (odd).
    pub patch: usize,
    /// Spectral bands `K` of the input cube.
    pub bands: usize,
    /// Latent width `D`.
    pub latent: usize,
    /// SSM state size `N`.
    pub state: usize,
    /// Step-size projection rank; `None` picks `max(1, D / 16)`.
    pub rank: Option<usize>,
    /// Number of stacked blocks `H`.
    pub layers: usize,
    /// Number of classes `C`.
    pub classes: usize,
    /// Gate pruning threshold.
    pub tau: f64,
    pub use_pcs: bool,
    pub use_bss: bool,
    pub use_smg: bool,
    /// One parameter set shared by all routes (and by both spectral
    /// directions) instead of one per route.
    pub shared_routes: bool,
    pub readout: Readout,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            patch: 7,
            bands: 200,
            latent: 64,
            state: 32,
            rank: None,
            layers: 1,
            classes: 16,
            tau: 0.1,
            use_pcs: true,
            use_bss: true,
            use_smg: true,
            shared_routes: false,
            readout: Readout::Center,
        }
    }
}

impl ModelConfig {
    /// The small double-precision configuration used for gradient checks.
    pub fn tiny() -> Self {
        Self {
            patch: 3,
            bands: 8,
            latent: 8,
            state: 4,
            classes: 3,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.patch.is_multiple_of(2) {
            return fail(format!("patch size must be odd, got {}", self.patch));
        }
        for (name, v) in [
            ("bands", self.bands),
            ("latent", self.latent),
            ("state", self.state),
            ("layers", self.layers),
            ("classes", self.classes),
        ] {
            if v == 0 {
                return fail(format!("{name} must be at least 1"));
            }
        }
        if self.rank == Some(0) {
            return fail("rank must be at least 1".into());
        }
        if !(self.tau >= 0.0 && self.tau < 0.5) {
            return fail(format!("tau must lie in [0, 0.5), got {}", self.tau));
        }
        Ok(())
    }

    pub fn ssm_rank(&self) -> usize {
        self.rank.unwrap_or_else(|| default_rank(self.latent))
    }

    /// Number of pixels in a patch, the spectral scan's channel width.
    pub fn positions(&self) -> usize {
        self.patch * self.patch
    }

    pub fn pcs_sets(&self) -> usize {
        if self.shared_routes {
            1
        } else {
            4
        }
    }

    pub fn bss_sets(&self) -> usize {
        if self.shared_routes {
            1
        } else {
            2
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        ModelConfig::default().validate().unwrap();
        ModelConfig::tiny().validate().unwrap();
        assert_eq!(ModelConfig::default().ssm_rank(), 4);
        assert_eq!(ModelConfig::tiny().ssm_rank(), 1);
    }

    #[test]
    fn invalid_fields_are_rejected() {
        let bad = [
            ModelConfig {
                patch: 4,
                ..Default::default()
            },
            ModelConfig {
                latent: 0,
                ..Default::default()
            },
            ModelConfig {
                classes: 0,
                ..Default::default()
            },
            ModelConfig {
                layers: 0,
                ..Default::default()
            },
            ModelConfig {
                tau: 0.5,
                ..Default::default()
            },
            ModelConfig {
                tau: -0.01,
                ..Default::default()
            },
            ModelConfig {
                rank: Some(0),
                ..Default::default()
            },
        ];
        for c in bad {
            assert!(matches!(c.validate(), Err(Error::Config(_))), "{c:?}");
        }
    }

    #[test]
    fn json_fills_defaults_and_rejects_unknown_keys() {
        let c: ModelConfig = serde_json::from_str(r#"{"patch": 9, "readout": "mean"}"#).unwrap();
        assert_eq!(c.patch, 9);
        assert_eq!(c.readout, Readout::Mean);
        assert_eq!(c.latent, 64);
        assert!(serde_json::from_str::<ModelConfig>(r#"{"patchh": 9}"#).is_err());
    }
}
