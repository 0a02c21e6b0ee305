//! Pink-noise excitation for control inputs.
//!
//! Sequences are synthesized in the frequency domain: a white complex
//! Gaussian spectrum is shaped by 1/√f in amplitude (1/f in power),
//! inverse-transformed, standardized to zero mean and unit variance, then
//! scaled and clamped per channel.

use rand::RngExt;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::ship::ControlInput;

/// Configuration for one pink-noise channel.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PinkNoiseConfig {
    /// Number of samples to generate.
    pub length: usize,
    /// Lowest synthesized frequency as a fraction of the sample rate; bins
    /// below this cut are zeroed (removes drift slower than the trajectory).
    pub low_cut: f64,
    /// Standard deviation of the output around `offset`.
    pub amplitude: f64,
    /// Additive offset applied after scaling.
    pub offset: f64,
    /// Clamp limits applied last.
    pub clamp: (f64, f64),
}

impl PinkNoiseConfig {
    pub fn validate(&self) -> bool {
        self.length >= 2 && self.amplitude >= 0.0 && self.clamp.0 <= self.clamp.1
    }
}

/// Draws one pink-noise sequence. Deterministic per seed.
pub fn pink_noise(cfg: &PinkNoiseConfig, seed: u64) -> Vec<f64> {
    assert!(cfg.validate(), "invalid pink noise config");
    let n = cfg.length;
    let mut rng = crate::seed_rng(seed, "pink_noise");

    let mut spectrum = vec![Complex::new(0.0, 0.0); n];
    let half = n / 2;
    for k in 1..=half {
        let f = k as f64 / n as f64;
        if f < cfg.low_cut {
            continue;
        }
        let gain = 1.0 / (k as f64).sqrt();
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        if k == half && n % 2 == 0 {
            // Nyquist bin must be real for a real signal.
            spectrum[k] = Complex::new(re * gain, 0.0);
        } else {
            spectrum[k] = Complex::new(re * gain, im * gain);
            spectrum[n - k] = spectrum[k].conj();
        }
    }

    let mut planner = FftPlanner::new();
    let ifft = planner.plan_fft_inverse(n);
    ifft.process(&mut spectrum);
    let mut series: Vec<f64> = spectrum.iter().map(|c| c.re).collect();

    // Standardize, then scale and clamp.
    let mean = series.iter().sum::<f64>() / n as f64;
    let var = series.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
    let std = var.sqrt();
    if std > 0.0 {
        for x in series.iter_mut() {
            *x = (*x - mean) / std;
        }
    } else {
        for x in series.iter_mut() {
            *x = 0.0;
        }
    }
    for x in series.iter_mut() {
        *x = (*x * cfg.amplitude + cfg.offset).clamp(cfg.clamp.0, cfg.clamp.1);
    }
    series
}

/// Two-channel excitation used for probes, instance screening and dataset
/// generation: pink rudder commands around zero and pink shaft-speed
/// commands in a positive band around the service point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ControlExcitation {
    pub rudder: PinkNoiseConfig,
    pub shaft: PinkNoiseConfig,
}

impl ControlExcitation {
    /// Default excitation for a ship with the given actuator limits: rudder
    /// commands span roughly ±0.8·delta_max, shaft commands a ±15% band
    /// around the service speed.
    pub fn for_limits(length: usize, delta_max: f64, service_shaft: f64, n_max: f64) -> Self {
        Self {
            rudder: PinkNoiseConfig {
                length,
                low_cut: 0.0,
                amplitude: 0.4 * delta_max,
                offset: 0.0,
                clamp: (-delta_max, delta_max),
            },
            shaft: PinkNoiseConfig {
                length,
                low_cut: 0.0,
                amplitude: 0.075 * service_shaft,
                offset: service_shaft,
                clamp: (0.5 * service_shaft, (1.4 * service_shaft).min(n_max)),
            },
        }
    }

    /// Draws a command sequence of `length` steps. The two channels use
    /// decorrelated substreams of `seed`.
    pub fn draw(&self, seed: u64) -> Vec<ControlInput> {
        let rudder = pink_noise(&self.rudder, seed.wrapping_mul(2).wrapping_add(1));
        let shaft = pink_noise(&self.shaft, seed.wrapping_mul(2).wrapping_add(2));
        rudder
            .into_iter()
            .zip(shaft)
            .map(|(d, n)| ControlInput::new(d, n))
            .collect()
    }
}

/// Lag-k autocorrelation of a series.
pub fn autocorrelation(series: &[f64], lag: usize) -> f64 {
    let n = series.len();
    assert!(lag < n);
    let mean = series.iter().sum::<f64>() / n as f64;
    let var = series.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
    if var == 0.0 {
        return 0.0;
    }
    let cov = (0..n - lag)
        .map(|i| (series[i] - mean) * (series[i + lag] - mean))
        .sum::<f64>()
        / (n - lag) as f64;
    cov / var
}

#[allow(dead_code)]
fn white_noise(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}
