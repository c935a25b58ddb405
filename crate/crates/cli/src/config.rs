//! JSON run configuration. Every field is optional; command-line flags
//! override whatever the file sets.

use serde::Deserialize;
use splitflow::frontier::{fraction_grid, DEFAULT_STEP};
use splitflow::{ChannelProfile, Error, Objective, QuadSettings, Result, SimConfig};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    pub mu: f64,
    pub sigma: f64,
}

impl std::str::FromStr for ChannelSpec {
    type Err = String;

    /// `MU:SIGMA`
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (m, sd) = s.split_once(':').ok_or_else(|| format!("expected MU:SIGMA, got {s:?}"))?;
        let num = |v: &str| v.trim().parse::<f64>().map_err(|_| format!("bad number {v:?} in {s:?}"));
        Ok(ChannelSpec { mu: num(m)?, sigma: num(sd)? })
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "lowercase")]
pub enum GridSpec {
    Step(f64),
    Values(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadSpec {
    pub abs_tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSpec {
    pub trials: Option<u64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub channels: Vec<ChannelSpec>,
    pub grid: Option<GridSpec>,
    pub objective: Option<String>,
    #[serde(default)]
    pub quadrature: QuadSpec,
    #[serde(default)]
    pub sim: SimSpec,
}

pub const DEFAULT_SIM_TRIALS: u64 = 100_000;

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Domain(format!("config {}: {e}", path.display())))
    }

    pub fn profiles(&self) -> Result<Vec<ChannelProfile>> {
        if self.channels.is_empty() {
            return Err(Error::Domain("no channels configured (use --channel MU:SIGMA or a config file)".into()));
        }
        self.channels
            .iter()
            .map(|c| {
                if c.sigma == 0.0 {
                    ChannelProfile::deterministic(c.mu)
                } else {
                    ChannelProfile::new(c.mu, c.sigma)
                }
            })
            .collect()
    }

    pub fn pair(&self) -> Result<[ChannelProfile; 2]> {
        let p = self.profiles()?;
        <[ChannelProfile; 2]>::try_from(p).map_err(|p| {
            Error::Domain(format!("this command takes exactly two channels, got {} (see `frontier` for more)", p.len()))
        })
    }

    /// Fractions for channel one, in grid order.
    pub fn fractions(&self) -> Result<Vec<f64>> {
        match &self.grid {
            None => Ok(fraction_grid(DEFAULT_STEP)?.iter().map(|p| p[0]).collect()),
            Some(GridSpec::Step(step)) => Ok(fraction_grid(*step)?.iter().map(|p| p[0]).collect()),
            Some(GridSpec::Values(vs)) => {
                splitflow::schedule::validate_grid(vs)?;
                Ok(vs.clone())
            }
        }
    }

    pub fn step(&self) -> Result<f64> {
        match &self.grid {
            None => Ok(DEFAULT_STEP),
            Some(GridSpec::Step(s)) => Ok(*s),
            Some(GridSpec::Values(_)) => Err(Error::Domain("this command needs a grid step, not a value list".into())),
        }
    }

    pub fn objective(&self) -> Result<Option<Objective>> {
        self.objective.as_deref().map(str::parse).transpose()
    }

    pub fn quad(&self) -> Result<QuadSettings> {
        let q = match self.quadrature.abs_tol {
            Some(tol) => QuadSettings::with_tol(tol),
            None => QuadSettings::default(),
        };
        q.validate()?;
        Ok(q)
    }

    pub fn sim(&self) -> Result<SimConfig> {
        let c = SimConfig::new(self.sim.trials.unwrap_or(DEFAULT_SIM_TRIALS), self.sim.seed.unwrap_or(0));
        c.validate()?;
        Ok(c)
    }
}
