use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::ToySystemConfig;
use crate::ensemble::EnsembleConfig;
use crate::error::{Error, Result};
use crate::perturbation::{Ar1Config, InitMode, PerturbConfig};
use crate::sphere::{SpectrumParams, SphericalGrid};
use crate::varnet::{OptimizerConfig, PosttrainConfig, PriorCentre};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub n_lat: usize,
    pub n_lon: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { n_lat: 8, n_lon: 16 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PerturbationSection {
    #[serde(flatten)]
    pub sppt: PerturbConfig,
    pub init_mode: InitMode,
    /// Amplitude of the additive Gaussian baseline.
    pub gaussian_sigma: f64,
}

impl Default for PerturbationSection {
    fn default() -> Self {
        Self {
            sppt: PerturbConfig::default(),
            init_mode: InitMode::Stationary,
            gaussian_sigma: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            n_train: 4000,
            n_val: 400,
            n_test: 800,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetConfig {
    pub hidden: Vec<usize>,
    /// Per-variable loss weights `w_c`; empty means 1 for every variable.
    pub var_weights: Vec<f64>,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self {
            hidden: vec![64, 64],
            var_weights: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ViConfig {
    pub beta_kl: f64,
    pub prior_std: f64,
    /// Starting posterior scale of every weight.
    pub init_std: f64,
    pub prior_centre: PriorCentre,
    #[serde(flatten)]
    pub train: PosttrainConfig,
}

impl Default for ViConfig {
    fn default() -> Self {
        Self {
            beta_kl: 1e-4,
            prior_std: 2e-4,
            init_std: 2e-4,
            prior_centre: PriorCentre::Pretrained,
            train: PosttrainConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsConfig {
    /// Lead times to verify, hours.
    pub leads: Vec<f64>,
    /// Number of forecast initialisations drawn from the test split.
    pub n_inits: usize,
    /// Output steps between consecutive initialisations.
    pub init_spacing: usize,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            leads: vec![24.0, 72.0, 120.0],
            n_inits: 16,
            init_spacing: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SeedConfig {
    pub master: u64,
}

impl Default for SeedConfig {
    fn default() -> Self {
        Self { master: 20_250_101 }
    }
}

/// Every tunable of an experiment. Missing keys take their defaults; unknown
/// keys are an error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Where artifacts go when the command line does not say.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    pub grid: GridConfig,
    pub spectrum: SpectrumParams,
    pub ar1: Ar1Config,
    pub perturbation: PerturbationSection,
    pub dynamics: ToySystemConfig,
    pub data: DataConfig,
    pub net: NetConfig,
    pub pretrain: OptimizerConfig,
    pub vi: ViConfig,
    pub ensemble: EnsembleConfig,
    pub metrics: MetricsConfig,
    pub seeds: SeedConfig,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::config("<file>", e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn grid(&self) -> Result<SphericalGrid> {
        SphericalGrid::new(self.grid.n_lat, self.grid.n_lon)
    }

    pub fn variables(&self) -> &[String] {
        &self.dynamics.variables
    }

    pub fn var_weights(&self) -> Vec<f64> {
        if self.net.var_weights.is_empty() {
            vec![1.0; self.variables().len()]
        } else {
            self.net.var_weights.clone()
        }
    }

    /// Lead times converted to output steps.
    pub fn lead_steps(&self) -> Result<Vec<usize>> {
        let dt = self.dynamics.output_interval;
        self.metrics
            .leads
            .iter()
            .map(|&h| {
                let steps = h / dt;
                if !(steps >= 1.0) || (steps - steps.round()).abs() > 1e-9 {
                    return Err(Error::config(
                        "metrics.leads",
                        format!("lead {h} h is not a positive multiple of the {dt} h output interval"),
                    ));
                }
                Ok(steps.round() as usize)
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        self.spectrum.validate()?;
        self.ar1.validate()?;
        self.perturbation.sppt.validate()?;
        if !(self.perturbation.gaussian_sigma >= 0.0 && self.perturbation.gaussian_sigma.is_finite()) {
            return Err(Error::config("perturbation.gaussian_sigma", "must be finite and >= 0"));
        }
        self.dynamics.validate()?;
        if (self.ar1.dt - self.dynamics.output_interval).abs() > 1e-12 {
            return Err(Error::config(
                "ar1.dt",
                "must equal dynamics.output_interval (one field step per forecast step)",
            ));
        }
        if self.grid.n_lon < 4 {
            return Err(Error::config("grid.n_lon", "Lorenz-96 rings need >= 4 sites"));
        }
        for v in self.variables() {
            if !self.perturbation.sppt.mu.contains_key(v) {
                return Err(Error::config(
                    format!("perturbation.mu.{v}"),
                    "missing amplitude for a model variable",
                ));
            }
        }
        for (key, n) in [
            ("data.n_train", self.data.n_train),
            ("data.n_val", self.data.n_val),
            ("data.n_test", self.data.n_test),
        ] {
            if n < 3 {
                return Err(Error::config(key, "must be >= 3"));
            }
        }
        if self.net.hidden.contains(&0) {
            return Err(Error::config("net.hidden", "layer sizes must be >= 1"));
        }
        if !self.net.var_weights.is_empty() {
            if self.net.var_weights.len() != self.variables().len() {
                return Err(Error::config("net.var_weights", "need one weight per variable"));
            }
            if self.net.var_weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
                return Err(Error::config("net.var_weights", "weights must be positive"));
            }
        }
        self.pretrain.validate("pretrain")?;
        self.vi.train.optimizer.validate("vi.optimizer")?;
        if !(self.vi.beta_kl >= 0.0 && self.vi.beta_kl.is_finite()) {
            return Err(Error::config("vi.beta_kl", "must be finite and >= 0"));
        }
        if !(self.vi.prior_std > 0.0 && self.vi.prior_std.is_finite()) {
            return Err(Error::config("vi.prior_std", "must be finite and > 0"));
        }
        if !(self.vi.init_std > 0.0 && self.vi.init_std.is_finite()) {
            return Err(Error::config("vi.init_std", "must be finite and > 0"));
        }
        // The KL term is a quadratic of curvature β/σ_p² in every W_μ; heavy-ball
        // momentum diverges on it once lr·curvature reaches 2(1 + momentum).
        let opt = &self.vi.train.optimizer;
        let stiffness = opt.learning_rate * self.vi.beta_kl / (self.vi.prior_std * self.vi.prior_std);
        if stiffness >= 2.0 * (1.0 + opt.momentum) {
            return Err(Error::config(
                "vi.optimizer.learning_rate",
                format!(
                    "lr·β/prior_std² = {stiffness:.3} diverges on the KL term; keep it below 2(1 + momentum) = {:.2}",
                    2.0 * (1.0 + opt.momentum)
                ),
            ));
        }
        if self.vi.train.n_samples == 0 {
            return Err(Error::config("vi.n_samples", "must be >= 1"));
        }
        self.ensemble.validate()?;
        let steps = self.lead_steps()?;
        if let Some(&max) = steps.iter().max() {
            if max > self.ensemble.horizon {
                return Err(Error::config(
                    "metrics.leads",
                    format!("lead of {max} steps exceeds ensemble.horizon"),
                ));
            }
        }
        if self.metrics.n_inits == 0 || self.metrics.init_spacing == 0 {
            return Err(Error::config(
                "metrics.n_inits",
                "n_inits and init_spacing must be >= 1",
            ));
        }
        let needed = 1 + (self.metrics.n_inits - 1) * self.metrics.init_spacing + self.ensemble.horizon + 1;
        if needed > self.data.n_test {
            return Err(Error::config(
                "data.n_test",
                format!("{needed} test states needed for the configured initialisations and horizon"),
            ));
        }
        Ok(())
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    ExperimentConfig::from_toml(&std::fs::read_to_string(path)?)
}
