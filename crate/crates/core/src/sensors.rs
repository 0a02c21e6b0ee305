//! Analytic sensor models: index selection plus additive Gaussian noise.
//!
//! The ship benchmark uses two configurations. `h1` observes every state
//! except the actuators; `h2` additionally drops the surge and sway
//! velocities. Custom selections are supported for toy systems and filter
//! oracles.

use nalgebra::DVector;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::ship::{ANGLE_INDICES, STATE_DIM};

/// Wraps an angle to (−π, π].
pub fn wrap_angle(x: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    std::f64::consts::PI - (std::f64::consts::PI - x).rem_euclid(two_pi)
}

/// Sensor configuration identifier.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SensorId {
    H1,
    H2,
    Custom(String),
}

impl std::fmt::Display for SensorId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SensorId::H1 => write!(f, "h1"),
            SensorId::H2 => write!(f, "h2"),
            SensorId::Custom(name) => write!(f, "{name}"),
        }
    }
}

/// A measurement model: which state indices are observed, which of those are
/// angles (wrapped on output), and the per-channel noise level.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SensorConfig {
    pub id: SensorId,
    /// Observed state indices, in canonical state order.
    pub observed_indices: Vec<usize>,
    /// State indices (not channel indices) whose measurements are angles.
    pub angle_indices: Vec<usize>,
    /// Per-channel noise standard deviation, aligned with `observed_indices`.
    pub noise_std: Vec<f64>,
}

/// Default noise levels for the ship sensors, per state index: velocities
/// 0.05 m/s, rates 0.005 rad/s, positions 1.0 m, angles 0.01 rad.
pub const SHIP_NOISE_STD: [f64; STATE_DIM] =
    [0.05, 0.05, 0.005, 0.005, 1.0, 1.0, 0.01, 0.01, 0.0, 0.0];

impl SensorConfig {
    /// All states except the actuators.
    pub fn h1() -> Self {
        let observed: Vec<usize> = (0..8).collect();
        let noise = observed.iter().map(|&i| SHIP_NOISE_STD[i]).collect();
        Self {
            id: SensorId::H1,
            observed_indices: observed,
            angle_indices: ANGLE_INDICES.to_vec(),
            noise_std: noise,
        }
    }

    /// `h1` without the surge and sway velocities.
    pub fn h2() -> Self {
        let observed: Vec<usize> = (2..8).collect();
        let noise = observed.iter().map(|&i| SHIP_NOISE_STD[i]).collect();
        Self {
            id: SensorId::H2,
            observed_indices: observed,
            angle_indices: ANGLE_INDICES.to_vec(),
            noise_std: noise,
        }
    }

    pub fn by_id(id: &SensorId) -> Option<Self> {
        match id {
            SensorId::H1 => Some(Self::h1()),
            SensorId::H2 => Some(Self::h2()),
            SensorId::Custom(_) => None,
        }
    }

    /// Custom selection for toy systems and tests.
    pub fn custom(
        name: &str,
        observed_indices: Vec<usize>,
        angle_indices: Vec<usize>,
        noise_std: Vec<f64>,
    ) -> Self {
        assert_eq!(observed_indices.len(), noise_std.len());
        Self {
            id: SensorId::Custom(name.to_string()),
            observed_indices,
            angle_indices,
            noise_std,
        }
    }

    pub fn dim(&self) -> usize {
        self.observed_indices.len()
    }

    pub fn validate(&self) -> bool {
        !self.observed_indices.is_empty()
            && self.noise_std.len() == self.observed_indices.len()
            && self.noise_std.iter().all(|&s| s > 0.0)
    }

    /// True if measurement channel `c` carries an angle.
    pub fn channel_is_angle(&self, c: usize) -> bool {
        self.angle_indices.contains(&self.observed_indices[c])
    }

    /// Measurement noise covariance (diagonal).
    pub fn noise_cov(&self) -> DVector<f64> {
        DVector::from_iterator(self.dim(), self.noise_std.iter().map(|s| s * s))
    }
}

/// A timestamped measurement vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub values: DVector<f64>,
    pub step: usize,
    pub sensor: SensorId,
}

/// Noise-free measurement: selects the observed components and wraps angle
/// channels to (−π, π].
pub fn h(state: &DVector<f64>, cfg: &SensorConfig) -> DVector<f64> {
    let mut out = DVector::zeros(cfg.dim());
    for (c, &i) in cfg.observed_indices.iter().enumerate() {
        out[c] = if cfg.angle_indices.contains(&i) {
            wrap_angle(state[i])
        } else {
            state[i]
        };
    }
    out
}

/// Selection without wrapping; the filter's measurement transform uses this
/// so that sigma-point averages stay smooth, then wraps the innovation.
pub fn h_unwrapped(state: &DVector<f64>, cfg: &SensorConfig) -> DVector<f64> {
    DVector::from_iterator(cfg.dim(), cfg.observed_indices.iter().map(|&i| state[i]))
}

/// Noisy measurement: `h(state)` plus independent zero-mean Gaussian noise
/// per channel.
pub fn measure<R: rand::Rng>(state: &DVector<f64>, cfg: &SensorConfig, step: usize, rng: &mut R) -> Measurement {
    let mut values = h(state, cfg);
    for (c, std) in cfg.noise_std.iter().enumerate() {
        let e: f64 = StandardNormal.sample(rng);
        values[c] += std * e;
    }
    Measurement {
        values,
        step,
        sensor: cfg.id.clone(),
    }
}
