//! One TOML-backed configuration bundle.
//!
//! Every tunable of the model lives here with an embedded default, so a
//! run needs no config file at all; a partial file overrides only the keys
//! it names. `dump-config` emits the full effective configuration for
//! audit. The fiber tables are deliberately plain data: attenuation and
//! dispersion vs frequency, Raman efficiency vs detuning.

use serde::{Deserialize, Serialize};

use crate::ga::GaConfig;
use crate::phys::{Curve, FiberCatalog, FiberKind, FiberProfile};
use crate::skr::QkdParams;
use crate::sweep::SweepConfig;
use crate::{Error, Result};

/// Fiber profile data as configured: SSMF tables plus the HCF deltas.
///
/// The HCF Raman table is derived from the SSMF one by a fixed dB
/// suppression, which keeps the two tables locked to the same shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FiberConfig {
    /// SSMF attenuation, THz → dB/km.
    pub ssmf_attenuation_db_km: Curve,
    /// HCF attenuation, THz → dB/km.
    pub hcf_attenuation_db_km: Curve,
    /// SSMF Raman power-transfer efficiency, detuning THz → (km·GHz)⁻¹.
    /// Zero beyond the last breakpoint.
    pub ssmf_raman_efficiency: Curve,
    /// HCF Raman suppression relative to SSMF, dB.
    pub hcf_raman_suppression_db: f64,
    /// Nonlinear coefficients γ, (W·km)⁻¹.
    pub ssmf_gamma_w_km: f64,
    pub hcf_gamma_w_km: f64,
    /// Chromatic dispersion, THz → ps/(nm·km).
    pub ssmf_dispersion_ps_nm_km: Curve,
    pub hcf_dispersion_ps_nm_km: Curve,
}

impl Default for FiberConfig {
    fn default() -> Self {
        Self {
            ssmf_attenuation_db_km: Curve::new(vec![
                (192.0, 0.20),
                (196.0, 0.20),
                (232.05, 0.32),
                (235.95, 0.34),
            ]),
            hcf_attenuation_db_km: Curve::new(vec![
                (192.0, 0.055),
                (196.0, 0.055),
                (232.05, 0.10),
                (235.95, 0.10),
            ]),
            ssmf_raman_efficiency: Curve::new(vec![
                (0.0, 0.0),
                (0.2, 5.0e-12),
                (0.5, 1.2e-11),
                (1.0, 1.8e-11),
                (2.0, 2.6e-11),
                (3.0, 3.4e-11),
                (4.0, 4.5e-11),
                (6.0, 1.2e-10),
                (8.0, 5.0e-10),
                (10.0, 1.5e-9),
                (12.0, 3.2e-9),
                (13.0, 4.0e-9),
                (14.0, 3.0e-9),
                (15.0, 1.2e-9),
                (18.0, 4.0e-10),
                (24.0, 1.5e-10),
                (30.0, 5.0e-11),
                (35.0, 0.0),
            ]),
            hcf_raman_suppression_db: 35.0,
            ssmf_gamma_w_km: 1.3,
            hcf_gamma_w_km: 1.3e-4,
            ssmf_dispersion_ps_nm_km: Curve::new(vec![(192.05, 16.5), (195.95, 17.5)]),
            hcf_dispersion_ps_nm_km: Curve::new(vec![(192.05, 3.0), (195.95, 3.0)]),
        }
    }
}

impl FiberConfig {
    /// Materialize the two fiber profiles.
    pub fn catalog(&self) -> FiberCatalog {
        let suppression = 10f64.powf(-self.hcf_raman_suppression_db / 10.0);
        FiberCatalog {
            ssmf: FiberProfile {
                kind: FiberKind::Ssmf,
                attenuation_db_km: self.ssmf_attenuation_db_km.clone(),
                raman_efficiency: self.ssmf_raman_efficiency.clone(),
                gamma_w_km: self.ssmf_gamma_w_km,
                dispersion_ps_nm_km: self.ssmf_dispersion_ps_nm_km.clone(),
            },
            hcf: FiberProfile {
                kind: FiberKind::Hcf,
                attenuation_db_km: self.hcf_attenuation_db_km.clone(),
                raman_efficiency: self.ssmf_raman_efficiency.scaled(suppression),
                gamma_w_km: self.hcf_gamma_w_km,
                dispersion_ps_nm_km: self.hcf_dispersion_ps_nm_km.clone(),
            },
        }
    }
}

/// Full run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct Config {
    pub qkd: QkdParams,
    pub fibers: FiberConfig,
    pub ga: GaConfig,
    pub sweep: SweepConfig,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Config =
            toml::from_str(text).map_err(|e| Error::Config(format!("bad config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.qkd.validate()?;
        self.ga.validate()?;
        self.sweep.validate()?;
        Ok(())
    }

    /// Stable hash of the full effective configuration; recorded in every
    /// output header so results are traceable to their inputs.
    pub fn hash_hex(&self) -> String {
        format!("{:016x}", fnv1a64(self.to_toml().as_bytes()))
    }

    pub fn catalog(&self) -> FiberCatalog {
        self.fibers.catalog()
    }
}

/// FNV-1a 64-bit.
pub(crate) fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}
