//! Weighting configuration and the recency multiplier.

use serde::{Deserialize, Serialize};

/// Per-bin score increments for each interaction context plus the linear
/// recency slope. Every field falls back to its default when a config file
/// omits it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightConfig {
    pub play_focused: f64,
    pub play_unfocused: f64,
    pub replay_bonus: f64,
    pub fast2x_focused: f64,
    pub fast2x_unfocused: f64,
    pub fast15_focused: f64,
    pub fast15_unfocused: f64,
    pub skip_penalty_min1: f64,
    pub skip_penalty_min2: f64,
    pub skip_penalty_min3: f64,
    pub decay_slope_per_day: f64,
    #[serde(rename = "rate125_equals_1x")]
    pub rate125_equals_1x: bool,
}

pub const DEFAULT_BASE_INCREMENTS: [f64; 10] =
    [1.0, 0.25, 2.0, 0.6, 0.2, 1.5, 0.5, -0.3, -0.2, -0.1];

impl Default for WeightConfig {
    fn default() -> Self {
        Self::from_base_increments(DEFAULT_BASE_INCREMENTS)
    }
}

impl WeightConfig {
    /// Builds a config from the ten increments in canonical order:
    /// play focused/unfocused, replay, 2x focused/unfocused,
    /// 1.5x focused/unfocused, skip minute 1/2/3.
    pub fn from_base_increments(b: [f64; 10]) -> Self {
        Self {
            play_focused: b[0],
            play_unfocused: b[1],
            replay_bonus: b[2],
            fast2x_focused: b[3],
            fast2x_unfocused: b[4],
            fast15_focused: b[5],
            fast15_unfocused: b[6],
            skip_penalty_min1: b[7],
            skip_penalty_min2: b[8],
            skip_penalty_min3: b[9],
            decay_slope_per_day: 0.1,
            rate125_equals_1x: true,
        }
    }

    pub fn base_increments(&self) -> [f64; 10] {
        [
            self.play_focused,
            self.play_unfocused,
            self.replay_bonus,
            self.fast2x_focused,
            self.fast2x_unfocused,
            self.fast15_focused,
            self.fast15_unfocused,
            self.skip_penalty_min1,
            self.skip_penalty_min2,
            self.skip_penalty_min3,
        ]
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.decay_slope_per_day.is_nan() || self.decay_slope_per_day < 0.0 {
            return Err(format!(
                "decay_slope_per_day must be >= 0, got {}",
                self.decay_slope_per_day
            ));
        }
        if let Some(v) = self.base_increments().iter().find(|v| !v.is_finite()) {
            return Err(format!("non-finite increment {v}"));
        }
        Ok(())
    }
}

/// Linear recency multiplier `1 + slope * day_index`.
pub fn day_multiplier(day_index: u32, config: &WeightConfig) -> f64 {
    1.0 + config.decay_slope_per_day * f64::from(day_index)
}
