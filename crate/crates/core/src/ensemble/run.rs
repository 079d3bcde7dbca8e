use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{Model, ModelFamily};
use crate::dynamics::BLOW_UP;
use crate::error::{Error, Result};
use crate::io::seeds::indexed_seed;
use crate::perturbation::{
    apply_gaussian_baseline, apply_sppt, ar1_init, Ar1Config, InitMode, PerturbConfig, StatePair,
};
use crate::rng::rng_from_seed;
use crate::sphere::{SpectrumParams, SphericalGrid, Synthesizer};

/// Which uncertainty sources an ensemble samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    EpistemicOnly,
    AleatoricOnly,
    Hybrid,
    GaussianBaseline,
    Deterministic,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::EpistemicOnly,
        Scheme::AleatoricOnly,
        Scheme::Hybrid,
        Scheme::GaussianBaseline,
        Scheme::Deterministic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::EpistemicOnly => "epistemic_only",
            Scheme::AleatoricOnly => "aleatoric_only",
            Scheme::Hybrid => "hybrid",
            Scheme::GaussianBaseline => "gaussian_baseline",
            Scheme::Deterministic => "deterministic",
        }
    }

    fn samples_weights(self) -> bool {
        matches!(self, Scheme::EpistemicOnly | Scheme::Hybrid)
    }

    fn perturbs_increments(self) -> bool {
        matches!(self, Scheme::AleatoricOnly | Scheme::Hybrid)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::config("ensemble.mode", format!("unknown scheme `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleConfig {
    /// Parameter samples.
    pub m: usize,
    /// Perturbation samples.
    pub p: usize,
    pub horizon: usize,
    pub mode: Scheme,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            m: 6,
            p: 8,
            horizon: 20,
            mode: Scheme::Hybrid,
        }
    }
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        for (key, v) in [
            ("ensemble.m", self.m),
            ("ensemble.p", self.p),
            ("ensemble.horizon", self.horizon),
        ] {
            if v == 0 {
                return Err(Error::config(key, "must be >= 1"));
            }
        }
        Ok(())
    }

    /// Member counts after applying the scheme: single-source schemes pin the
    /// other axis to one.
    pub fn effective_shape(&self) -> (usize, usize) {
        match self.mode {
            Scheme::Hybrid => (self.m, self.p),
            Scheme::EpistemicOnly => (self.m, 1),
            Scheme::AleatoricOnly | Scheme::GaussianBaseline => (1, self.p),
            Scheme::Deterministic => (1, 1),
        }
    }
}

/// Everything the input-perturbation side of a rollout needs.
#[derive(Debug, Clone)]
pub struct PerturbationSetup {
    pub spectrum: SpectrumParams,
    pub ar1: Ar1Config,
    pub perturb: PerturbConfig,
    pub init_mode: InitMode,
    /// Amplitude of the additive Gaussian baseline.
    pub gaussian_sigma: f64,
    synth: Arc<Synthesizer>,
}

impl PerturbationSetup {
    pub fn new(
        grid: &SphericalGrid,
        spectrum: SpectrumParams,
        ar1: Ar1Config,
        perturb: PerturbConfig,
        init_mode: InitMode,
        gaussian_sigma: f64,
    ) -> Result<Self> {
        spectrum.validate()?;
        ar1.validate()?;
        perturb.validate()?;
        if !(gaussian_sigma >= 0.0 && gaussian_sigma.is_finite()) {
            return Err(Error::config("perturbation.gaussian_sigma", "must be finite and >= 0"));
        }
        Ok(Self {
            synth: Arc::new(Synthesizer::for_grid(grid, spectrum.truncation)),
            spectrum,
            ar1,
            perturb,
            init_mode,
            gaussian_sigma,
        })
    }

    pub fn n_points(&self) -> usize {
        self.synth.n_points()
    }
}

/// One member's trajectory and the seeds that reproduce it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberRun {
    pub theta_index: usize,
    pub field_index: usize,
    pub theta_seed: u64,
    pub field_seed: u64,
    /// Predictions for leads `1..=horizon`.
    pub states: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberFailure {
    pub theta_index: usize,
    pub field_index: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleRun {
    pub config: EnsembleConfig,
    pub master_seed: u64,
    pub members: Vec<MemberRun>,
    pub failures: Vec<MemberFailure>,
}

impl EnsembleRun {
    pub fn n_members(&self) -> usize {
        self.members.len()
    }

    pub fn failure_fraction(&self) -> f64 {
        let total = self.members.len() + self.failures.len();
        self.failures.len() as f64 / total.max(1) as f64
    }

    /// Every member's prediction at `lead` (1-based).
    pub fn at_lead(&self, lead: usize) -> Result<Vec<&[f64]>> {
        if lead == 0 || lead > self.config.horizon {
            return Err(Error::domain(format!(
                "lead {lead} outside 1..={}",
                self.config.horizon
            )));
        }
        if self.members.is_empty() {
            return Err(Error::Degenerate("ensemble has no surviving members".into()));
        }
        Ok(self.members.iter().map(|m| m.states[lead - 1].as_slice()).collect())
    }
}

fn check_state(x: &[f64]) -> std::result::Result<(), String> {
    match x.iter().position(|v| !v.is_finite() || v.abs() > BLOW_UP) {
        Some(i) => Err(format!("state entry {i} is {}", x[i])),
        None => Ok(()),
    }
}

fn rollout<M: Model>(
    model: &M,
    init: &StatePair,
    setup: &PerturbationSetup,
    mode: Scheme,
    horizon: usize,
    field_seed: u64,
) -> std::result::Result<Vec<Vec<f64>>, String> {
    let mut rng = rng_from_seed(field_seed);
    let mut pair = init.clone();
    if mode == Scheme::GaussianBaseline {
        pair = apply_gaussian_baseline(&pair, setup.gaussian_sigma, &mut rng).map_err(|e| e.to_string())?;
    }
    let mut field = if mode.perturbs_increments() {
        Some(
            ar1_init(setup.spectrum, setup.ar1, setup.synth.clone(), rng, setup.init_mode)
                .map_err(|e| e.to_string())?,
        )
    } else {
        None
    };
    let mut states = Vec::with_capacity(horizon);
    for step in 0..horizon {
        let curr = match &field {
            Some(r) => apply_sppt(&pair, r.values(), &setup.perturb).map_err(|e| e.to_string())?,
            None => pair.curr.clone(),
        };
        let next = model.predict(&pair.prev, &curr).map_err(|e| e.to_string())?;
        check_state(&next).map_err(|e| format!("step {}: {e}", step + 1))?;
        states.push(next.clone());
        pair.prev = curr;
        pair.curr = next;
        if step + 1 < horizon {
            if let Some(r) = field.as_mut() {
                r.step();
            }
        }
    }
    Ok(states)
}

/// Roll out the `M × P` ensemble from one initial pair.
///
/// Member `(i, j)` uses parameter draw `θ_i` (seeded by `("theta", i)`) held
/// for the whole trajectory and perturbation stream `j` (seeded by
/// `("field", j)`); members sharing `j` see the same field. Members that go
/// non-finite are dropped and recorded.
pub fn generate_ensemble<F: ModelFamily>(
    family: &F,
    init: &StatePair,
    setup: &PerturbationSetup,
    cfg: &EnsembleConfig,
    master_seed: u64,
) -> Result<EnsembleRun> {
    cfg.validate()?;
    if init.n_points() != setup.n_points() {
        return Err(Error::DimensionMismatch {
            what: "perturbation grid points",
            expected: setup.n_points(),
            found: init.n_points(),
        });
    }
    let (m, p) = cfg.effective_shape();
    let models: Vec<(u64, F::Member)> = (0..m)
        .into_par_iter()
        .map(|i| {
            let seed = indexed_seed(master_seed, "theta", i);
            let model = if cfg.mode.samples_weights() {
                family.sample_member(&mut rng_from_seed(seed))
            } else {
                family.mean_member()
            };
            (seed, model)
        })
        .collect();
    if let Some((_, first)) = models.first() {
        if first.state_len() != init.state_len() {
            return Err(Error::DimensionMismatch {
                what: "model state length",
                expected: init.state_len(),
                found: first.state_len(),
            });
        }
    }
    let outcomes: Vec<std::result::Result<MemberRun, MemberFailure>> = (0..m * p)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / p, k % p);
            let (theta_seed, model) = &models[i];
            let field_seed = indexed_seed(master_seed, "field", j);
            match rollout(model, init, setup, cfg.mode, cfg.horizon, field_seed) {
                Ok(states) => Ok(MemberRun {
                    theta_index: i,
                    field_index: j,
                    theta_seed: *theta_seed,
                    field_seed,
                    states,
                }),
                Err(reason) => Err(MemberFailure {
                    theta_index: i,
                    field_index: j,
                    reason,
                }),
            }
        })
        .collect();
    let mut members = Vec::with_capacity(outcomes.len());
    let mut failures = Vec::new();
    for o in outcomes {
        match o {
            Ok(run) => members.push(run),
            Err(f) => failures.push(f),
        }
    }
    Ok(EnsembleRun {
        config: cfg.clone(),
        master_seed,
        members,
        failures,
    })
}

/// Grand mean `(1/MP) Σ_ij Y_ij` at `lead`.
pub fn predictive_mean(run: &EnsembleRun, lead: usize) -> Result<Vec<f64>> {
    let states = run.at_lead(lead)?;
    Ok(mean_of(&states))
}

pub(crate) fn mean_of(states: &[&[f64]]) -> Vec<f64> {
    let n = states.len() as f64;
    let mut mean = vec![0.0; states[0].len()];
    for s in states {
        for (m, v) in mean.iter_mut().zip(*s) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    mean
}

/// `(1/MP) Σ_ij (Y_ij - Ȳ)²` per point at `lead`.
pub fn total_variance(run: &EnsembleRun, lead: usize) -> Result<Vec<f64>> {
    let states = run.at_lead(lead)?;
    if states.len() < 2 {
        return Err(Error::Degenerate("total variance needs at least two members".into()));
    }
    Ok(population_variance(&states))
}

pub(crate) fn population_variance(states: &[&[f64]]) -> Vec<f64> {
    let mean = mean_of(states);
    let n = states.len() as f64;
    let mut var = vec![0.0; mean.len()];
    for s in states {
        for ((v, x), m) in var.iter_mut().zip(*s).zip(&mean) {
            *v += (x - m) * (x - m);
        }
    }
    var.iter_mut().for_each(|v| *v /= n);
    var
}
