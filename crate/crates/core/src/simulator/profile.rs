//! Behavior profile file format.
//!
//! ```toml
//! [[profile]]
//! name = "steady"
//! count = 40
//! watch_style = "linear"            # linear | skipper | replayer | contour_follower | distracted
//! sessions_per_week = { kind = "poisson", mean = 2.0 }
//! focus_loss_prob = 0.05            # chance per minute of playback that the page loses focus
//! speed_preference = [ { rate = 1.0, weight = 3 }, { rate = 1.5, weight = 1 } ]
//! ```
//!
//! `sessions_per_week` is one of `{ kind = "fixed", value = .. }`,
//! `{ kind = "uniform", min = .., max = .. }` or `{ kind = "poisson", mean = .. }`.
//! Speed weights are normalized on load.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WatchStyle {
    Linear,
    Skipper,
    Replayer,
    ContourFollower,
    Distracted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CountDist {
    Fixed { value: f64 },
    Uniform { min: f64, max: f64 },
    Poisson { mean: f64 },
}

impl CountDist {
    fn validate(&self) -> std::result::Result<(), String> {
        let ok = match *self {
            CountDist::Fixed { value } => value.is_finite() && value >= 0.0,
            CountDist::Uniform { min, max } => min.is_finite() && max.is_finite() && 0.0 <= min && min <= max,
            CountDist::Poisson { mean } => mean.is_finite() && mean > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(format!("invalid distribution {self:?}"))
        }
    }

    /// Draws a non-negative count (rounded to the nearest integer).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let v = match *self {
            CountDist::Fixed { value } => value,
            CountDist::Uniform { min, max } if min == max => min,
            CountDist::Uniform { min, max } => rng.random_range(min..=max),
            CountDist::Poisson { mean } => Poisson::new(mean).map(|p| p.sample(rng)).unwrap_or(0.0),
        };
        v.round().max(0.0) as u32
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateChoice {
    pub rate: f64,
    pub weight: f64,
}

fn default_speeds() -> Vec<RateChoice> {
    vec![RateChoice {
        rate: 1.0,
        weight: 1.0,
    }]
}

fn default_sessions() -> CountDist {
    CountDist::Fixed { value: 1.0 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BehaviorProfile {
    pub name: String,
    #[serde(default = "one")]
    pub count: u32,
    pub watch_style: WatchStyle,
    #[serde(default = "default_sessions")]
    pub sessions_per_week: CountDist,
    #[serde(default = "default_speeds")]
    pub speed_preference: Vec<RateChoice>,
    #[serde(default)]
    pub focus_loss_prob: f64,
}

fn one() -> u32 {
    1
}

impl BehaviorProfile {
    pub fn new(name: impl Into<String>, watch_style: WatchStyle, count: u32) -> Self {
        Self {
            name: name.into(),
            count,
            watch_style,
            sessions_per_week: default_sessions(),
            speed_preference: default_speeds(),
            focus_loss_prob: 0.0,
        }
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.name.is_empty() {
            return Err("profile name must be non-empty".into());
        }
        if !(0.0..=1.0).contains(&self.focus_loss_prob) {
            return Err(format!(
                "{}: focus_loss_prob {} outside [0, 1]",
                self.name, self.focus_loss_prob
            ));
        }
        self.sessions_per_week
            .validate()
            .map_err(|e| format!("{}: {e}", self.name))?;
        if self.speed_preference.is_empty() {
            return Err(format!("{}: speed_preference is empty", self.name));
        }
        for c in &self.speed_preference {
            if !(c.rate.is_finite() && c.rate > 0.0 && c.weight.is_finite() && c.weight >= 0.0) {
                return Err(format!("{}: bad speed choice {c:?}", self.name));
            }
        }
        if self.total_speed_weight() <= 0.0 {
            return Err(format!("{}: speed weights sum to zero", self.name));
        }
        Ok(())
    }

    fn total_speed_weight(&self) -> f64 {
        self.speed_preference.iter().map(|c| c.weight).sum()
    }

    /// Speed choices with weights scaled to sum to one.
    pub fn normalized_speeds(&self) -> Vec<RateChoice> {
        let total = self.total_speed_weight();
        self.speed_preference
            .iter()
            .map(|c| RateChoice {
                rate: c.rate,
                weight: c.weight / total,
            })
            .collect()
    }

    pub fn sample_rate<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let speeds = self.normalized_speeds();
        let mut u: f64 = rng.random();
        for c in &speeds {
            if u < c.weight {
                return c.rate;
            }
            u -= c.weight;
        }
        speeds.last().map(|c| c.rate).unwrap_or(1.0)
    }
}

/// A whole cohort: profiles with head counts.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CohortSpec {
    #[serde(default, rename = "profile")]
    pub profiles: Vec<BehaviorProfile>,
}

impl CohortSpec {
    pub fn new(profiles: Vec<BehaviorProfile>) -> Self {
        Self { profiles }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: CohortSpec = toml::from_str(text).map_err(|e| CoreError::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let mut names = std::collections::HashSet::new();
        for p in &self.profiles {
            p.validate().map_err(CoreError::Config)?;
            if !names.insert(p.name.as_str()) {
                return Err(CoreError::Config(format!("duplicate profile name {}", p.name)));
            }
        }
        Ok(())
    }

    pub fn student_count(&self) -> u32 {
        self.profiles.iter().map(|p| p.count).sum()
    }
}
