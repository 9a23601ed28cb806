use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::item_rng;

pub const LENGTH_SCALE_RANGE: (f64, f64) = (0.7, 2.0);
pub const TEMPERATURE_RANGE: (f64, f64) = (0.0, 0.667);

/// Inference-time diversity knobs of a zero-shot TTS model.
///
/// Smaller `length_scale` means faster speech; the temperatures scale the
/// noise of the acoustic and duration samplers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthesisControls {
    pub length_scale: f64,
    pub temperature: f64,
    pub duration_temperature: f64,
}

impl Default for SynthesisControls {
    fn default() -> Self {
        Self {
            length_scale: 1.0,
            temperature: 0.667,
            duration_temperature: 0.667,
        }
    }
}

/// Draws controls for one item, each uniformly within its range.
pub fn sample_controls(item_key: &str, master_seed: u64) -> SynthesisControls {
    let mut rng = item_rng(master_seed, "controls", item_key, 0);
    let (l_lo, l_hi) = LENGTH_SCALE_RANGE;
    let (t_lo, t_hi) = TEMPERATURE_RANGE;
    SynthesisControls {
        length_scale: rng.random_range(l_lo..=l_hi),
        temperature: rng.random_range(t_lo..=t_hi),
        duration_temperature: rng.random_range(t_lo..=t_hi),
    }
}
