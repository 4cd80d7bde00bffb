//! JSON experiment configuration in the units of the figures: powers in dBm,
//! angles in degrees.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::beamforming::ScaOptions;
use crate::covariance_opt::BeampatternSpec;
use crate::error::{Error, Result};
use crate::metrics::Scenario;
use crate::model::{sample_aods, AodSpec, ChannelModel, RandomSource, SystemConfig, TargetSet};

/// `10^(dbm/10)` relative to a 0 dBm reference.
pub fn dbm_to_linear(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChannelSpec {
    Rayleigh,
    Rician { k_factor_db: f64, aod: AodSpec },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub angle_deg: f64,
    #[serde(default = "one")]
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeampatternConfig {
    pub step_deg: f64,
    /// Half-width of each target band.
    pub width_deg: f64,
}

impl Default for BeampatternConfig {
    fn default() -> Self {
        Self {
            step_deg: 0.9,
            width_deg: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScaConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub n_rand: usize,
}

impl Default for ScaConfig {
    fn default() -> Self {
        let d = ScaOptions::default();
        Self {
            tol: d.tol,
            max_iter: d.max_iter,
            n_rand: d.n_rand,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n_tx: usize,
    pub n_rx: usize,
    pub n_users: usize,
    pub power_dbm: f64,
    pub noise_comm_dbm: f64,
    pub noise_radar_dbm: f64,
    pub block_len: usize,
    /// bits/s/Hz; the fixed threshold of power and RMSE sweeps.
    pub rate: f64,
    pub channel: ChannelSpec,
    pub targets: Vec<TargetSpec>,
    pub beampattern: BeampatternConfig,
    pub sca: ScaConfig,
    pub caml_grid: usize,
    pub trials: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_tx: 10,
            n_rx: 10,
            n_users: 3,
            power_dbm: 10.0,
            noise_comm_dbm: 0.0,
            noise_radar_dbm: 0.0,
            block_len: 64,
            rate: 0.5,
            channel: ChannelSpec::Rayleigh,
            targets: vec![
                TargetSpec { angle_deg: -30.0, re: 1.0, im: 0.0 },
                TargetSpec { angle_deg: 30.0, re: 1.0, im: 0.0 },
            ],
            beampattern: BeampatternConfig::default(),
            sca: ScaConfig::default(),
            caml_grid: 2001,
            trials: 400,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.system()?;
        self.target_set()?;
        if self.caml_grid < 3 || self.trials == 0 {
            return Err(Error::Config("caml_grid must be at least 3 and trials positive".into()));
        }
        if !(self.beampattern.step_deg > 0.0 && self.beampattern.width_deg >= 0.0) {
            return Err(Error::Config("beampattern step must be positive".into()));
        }
        if let ChannelSpec::Rician { aod: AodSpec::Explicit(v), .. } = &self.channel {
            if v.len() != self.n_users {
                return Err(Error::Config(format!(
                    "{} explicit AoDs for {} users",
                    v.len(),
                    self.n_users
                )));
            }
        }
        Ok(())
    }

    pub fn system(&self) -> Result<SystemConfig<f64>> {
        let noise_radar = dbm_to_linear(self.noise_radar_dbm);
        SystemConfig::new(
            self.n_tx,
            self.n_rx,
            self.n_users,
            self.targets.len().max(1),
            dbm_to_linear(self.power_dbm),
            dbm_to_linear(self.noise_comm_dbm),
            noise_radar,
            self.block_len,
            self.rate,
        )
    }

    pub fn target_set(&self) -> Result<TargetSet<f64>> {
        TargetSet::new(
            self.targets.iter().map(|t| t.angle_deg.to_radians()).collect(),
            self.targets.iter().map(|t| Complex64::new(t.re, t.im)).collect(),
        )
    }

    pub fn scenario(&self, id: u8) -> Result<Scenario<f64>> {
        match id {
            1 => Ok(Scenario::One),
            2 => Ok(Scenario::Two(self.target_set()?)),
            other => Err(Error::Config(format!("scenario must be 1 or 2, got {other}"))),
        }
    }

    /// Channel model with AoDs drawn from `source`.
    pub fn channel_model(&self, source: &RandomSource) -> Result<ChannelModel<f64>> {
        match &self.channel {
            ChannelSpec::Rayleigh => Ok(ChannelModel::Rayleigh),
            ChannelSpec::Rician { k_factor_db, aod } => {
                let mut rng = source.rng();
                Ok(ChannelModel::Rician {
                    k_factor_db: *k_factor_db,
                    aod: sample_aods(aod, self.n_users, &mut rng)?,
                })
            }
        }
    }

    pub fn sca_options(&self) -> ScaOptions {
        ScaOptions {
            tol: self.sca.tol,
            max_iter: self.sca.max_iter,
            n_rand: self.sca.n_rand,
            ..ScaOptions::default()
        }
    }

    /// Flat pattern for Scenario I, target bands for Scenario II.
    pub fn beampattern_spec(&self, scenario: &Scenario<f64>) -> BeampatternSpec {
        let step = self.beampattern.step_deg.to_radians();
        match scenario {
            Scenario::One => BeampatternSpec::flat(step),
            Scenario::Two(t) => BeampatternSpec::targets(step, &t.angles, self.beampattern.width_deg.to_radians()),
        }
    }
}
