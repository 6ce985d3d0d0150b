//! Synthetic e-jet print datasets over the experimental parameter grid.
//!
//! Mean sheet resistance is a hinge model:
//!
//! ```text
//! r = a0 + a1·max(0, speed − 500) + a2·max(0, 15 − flow) + a3·|voltage − 2.5|
//! ```
//!
//! with Gaussian measurement noise and a floor of 1 Ω/sqr. The default
//! coefficients make the speed term the widest (0–180 Ω), then flow
//! (0–72 Ω), then voltage, so nozzle speed dominates class separation.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::{class_for_resistance, Dataset, PrintSample, DEFAULT_LABEL_THRESHOLD};
use crate::error::{Error, Result};
use crate::seed;

/// Speed above which resistance starts climbing, mm/min.
pub const SPEED_HINGE: f64 = 500.0;
/// Flow rate below which resistance starts climbing, µl/min.
pub const FLOW_HINGE: f64 = 15.0;
/// Voltage with the lowest resistance, kV.
pub const VOLTAGE_OPTIMUM: f64 = 2.5;

/// Flat, JSON-serializable generator settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub speeds: Vec<f64>,
    pub voltages: Vec<f64>,
    pub flows: Vec<f64>,
    pub base_resistance: f64,
    pub speed_coeff: f64,
    pub flow_coeff: f64,
    pub voltage_coeff: f64,
    pub noise_sigma: f64,
    pub threshold: f64,
    pub n: usize,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            speeds: vec![300.0, 500.0, 700.0],
            voltages: vec![1.0, 2.0, 3.0, 4.0],
            flows: vec![15.0, 12.0, 10.0, 9.0, 6.0, 3.0],
            base_resistance: 35.0,
            speed_coeff: 0.9,
            flow_coeff: 6.0,
            voltage_coeff: 8.0,
            noise_sigma: 15.0,
            threshold: DEFAULT_LABEL_THRESHOLD,
            n: 240,
            seed: seed::DEFAULT_SEED,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.speeds.is_empty() || self.voltages.is_empty() || self.flows.is_empty() {
            return Err(Error::invalid("parameter grid lists must be non-empty"));
        }
        let all_finite = self
            .speeds
            .iter()
            .chain(&self.voltages)
            .chain(&self.flows)
            .chain([
                &self.base_resistance,
                &self.speed_coeff,
                &self.flow_coeff,
                &self.voltage_coeff,
            ])
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::invalid("generator values must be finite"));
        }
        if self.speeds.iter().any(|&s| s <= 0.0)
            || self.flows.iter().any(|&f| f <= 0.0)
            || self.voltages.iter().any(|&v| v < 0.0)
        {
            return Err(Error::invalid(
                "speeds and flows must be positive, voltages non-negative",
            ));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::invalid("noise_sigma must be a non-negative real"));
        }
        if !(self.threshold > 0.0 && self.threshold.is_finite()) {
            return Err(Error::invalid("threshold must be positive"));
        }
        if self.n == 0 {
            return Err(Error::invalid("n must be at least 1"));
        }
        Ok(())
    }

    /// Number of cells in the speed × voltage × flow grid.
    pub fn grid_size(&self) -> usize {
        self.speeds.len() * self.voltages.len() * self.flows.len()
    }
}

/// Noise-free mean resistance (Ω/sqr) for one parameter setting.
pub fn resistance_model(speed: f64, voltage: f64, flow: f64, cfg: &GeneratorConfig) -> f64 {
    cfg.base_resistance
        + cfg.speed_coeff * (speed - SPEED_HINGE).max(0.0)
        + cfg.flow_coeff * (FLOW_HINGE - flow).max(0.0)
        + cfg.voltage_coeff * (voltage - VOLTAGE_OPTIMUM).abs()
}

struct Sampler {
    noise: Option<Normal<f64>>,
}

impl Sampler {
    fn new(cfg: &GeneratorConfig) -> Self {
        let noise = (cfg.noise_sigma > 0.0)
            .then(|| Normal::new(0.0, cfg.noise_sigma).expect("sigma validated"));
        Sampler { noise }
    }

    fn sample<R: Rng>(&self, rng: &mut R, speed: f64, voltage: f64, flow: f64, cfg: &GeneratorConfig) -> PrintSample {
        let mean = resistance_model(speed, voltage, flow, cfg);
        let eps = self.noise.map(|n| n.sample(rng)).unwrap_or(0.0);
        let resistance = (mean + eps).max(1.0);
        PrintSample::new(speed, voltage, flow)
            .with_resistance(resistance)
            .with_label(class_for_resistance(resistance, cfg.threshold))
    }
}

/// Draws `cfg.n` samples with grid cells chosen uniformly with replacement.
pub fn generate(cfg: &GeneratorConfig) -> Result<Dataset> {
    cfg.validate()?;
    let mut rng = seed::rng(cfg.seed);
    let sampler = Sampler::new(cfg);
    let mut samples = Vec::with_capacity(cfg.n);
    for _ in 0..cfg.n {
        let speed = cfg.speeds[rng.gen_range(0..cfg.speeds.len())];
        let voltage = cfg.voltages[rng.gen_range(0..cfg.voltages.len())];
        let flow = cfg.flows[rng.gen_range(0..cfg.flows.len())];
        samples.push(sampler.sample(&mut rng, speed, voltage, flow, cfg));
    }
    Ok(Dataset::new(samples))
}

/// One sample per grid cell (speed-major, then voltage, then flow); `cfg.n` is ignored.
pub fn generate_full_grid(cfg: &GeneratorConfig) -> Result<Dataset> {
    cfg.validate()?;
    let mut rng = seed::rng(cfg.seed);
    let sampler = Sampler::new(cfg);
    let mut samples = Vec::with_capacity(cfg.grid_size());
    for &speed in &cfg.speeds {
        for &voltage in &cfg.voltages {
            for &flow in &cfg.flows {
                samples.push(sampler.sample(&mut rng, speed, voltage, flow, cfg));
            }
        }
    }
    Ok(Dataset::new(samples))
}
