//! Flow-dependent multiplicative perturbations driven by an AR(1)-evolving
//! isotropic random field, their closed-form moments, and the additive
//! Gaussian baseline.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SimRng;
use crate::sphere::{fill_innovation, point_covariance, HarmonicCoeffs, SpectrumParams, SpherePoint, Synthesizer};

/// Discretised Ornstein-Uhlenbeck time stepping, `α = exp(-dt/η)`,
/// `β = sqrt(1 - α²)`. Times in hours; `eta = inf` freezes the field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Ar1Config {
    pub dt: f64,
    pub eta: f64,
}

impl Default for Ar1Config {
    fn default() -> Self {
        Self { dt: 6.0, eta: 24.0 }
    }
}

impl Ar1Config {
    pub fn new(dt: f64, eta: f64) -> Result<Self> {
        let cfg = Self { dt, eta };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::config("ar1.dt", "must be finite and > 0"));
        }
        if !(self.eta > 0.0) {
            return Err(Error::config("ar1.eta", "must be > 0"));
        }
        Ok(())
    }

    pub fn alpha(&self) -> f64 {
        (-self.dt / self.eta).exp()
    }

    pub fn beta(&self) -> f64 {
        let a = self.alpha();
        ((1.0 - a) * (1.0 + a)).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    /// One innovation draw, already at the stationary variance.
    Stationary,
    Zero,
}

/// The temporally correlated field `r_t`, evaluated on a fixed target set.
#[derive(Debug, Clone)]
pub struct RandomFieldState {
    values: Vec<f64>,
    innovation: Vec<f64>,
    coeffs: HarmonicCoeffs,
    synth: Arc<Synthesizer>,
    spectrum: SpectrumParams,
    ar1: Ar1Config,
    rng: SimRng,
}

/// Initialise the field; the random source is owned by the state from here on.
pub fn ar1_init(
    spectrum: SpectrumParams,
    ar1: Ar1Config,
    synth: Arc<Synthesizer>,
    rng: SimRng,
    mode: InitMode,
) -> Result<RandomFieldState> {
    spectrum.validate()?;
    ar1.validate()?;
    if synth.truncation() != spectrum.truncation {
        return Err(Error::DimensionMismatch {
            what: "synthesizer truncation",
            expected: spectrum.truncation,
            found: synth.truncation(),
        });
    }
    let n = synth.n_points();
    let mut state = RandomFieldState {
        values: vec![0.0; n],
        innovation: vec![0.0; n],
        coeffs: HarmonicCoeffs::zeros(spectrum.truncation),
        synth,
        spectrum,
        ar1,
        rng,
    };
    if mode == InitMode::Stationary {
        state.draw_innovation();
        std::mem::swap(&mut state.values, &mut state.innovation);
    }
    Ok(state)
}

impl RandomFieldState {
    fn draw_innovation(&mut self) {
        fill_innovation(&self.spectrum, &mut self.rng, &mut self.coeffs);
        self.synth
            .synthesize_into(&self.coeffs, &mut self.innovation)
            .expect("buffers sized from the synthesizer");
    }

    /// `r ← α r + β ε` with a freshly synthesised innovation `ε`.
    pub fn step(&mut self) {
        self.draw_innovation();
        let (alpha, beta) = (self.ar1.alpha(), self.ar1.beta());
        for (r, e) in self.values.iter_mut().zip(&self.innovation) {
            *r = alpha * *r + beta * e;
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn spectrum(&self) -> &SpectrumParams {
        &self.spectrum
    }

    pub fn ar1(&self) -> &Ar1Config {
        &self.ar1
    }
}

/// Functional form of [`RandomFieldState::step`].
pub fn ar1_step(mut state: RandomFieldState) -> RandomFieldState {
    state.step();
    state
}

/// Per-variable amplitudes `μ_v` and the optional bound on `|μ_v r|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PerturbConfig {
    pub mu: BTreeMap<String, f64>,
    /// Bound on `|μ r|`; written as `inf` when absent.
    #[serde(with = "clip_serde")]
    pub clip: Option<f64>,
}

mod clip_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(clip: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(clip.unwrap_or(f64::INFINITY))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        let v = f64::deserialize(d)?;
        Ok(if v.is_infinite() && v > 0.0 { None } else { Some(v) })
    }
}

impl Default for PerturbConfig {
    fn default() -> Self {
        let mu = [
            ("z", 0.04),
            ("q", 0.00),
            ("t", 0.06),
            ("u", 0.07),
            ("v", 0.07),
            ("t2m", 0.05),
            ("10u", 0.07),
            ("10v", 0.07),
            ("msl", 0.05),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        Self { mu, clip: Some(1.0) }
    }
}

impl PerturbConfig {
    /// Same amplitude for every listed variable, no clipping.
    pub fn uniform(variables: &[String], mu: f64) -> Self {
        Self {
            mu: variables.iter().map(|v| (v.clone(), mu)).collect(),
            clip: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, &mu) in &self.mu {
            if !(mu >= 0.0 && mu.is_finite()) {
                return Err(Error::config(
                    format!("perturbation.mu.{name}"),
                    "must be finite and >= 0",
                ));
            }
        }
        if let Some(c) = self.clip {
            if !(c > 0.0) {
                return Err(Error::config("perturbation.clip", "must be > 0"));
            }
        }
        Ok(())
    }

    pub fn amplitude(&self, variable: &str) -> Result<f64> {
        self.mu
            .get(variable)
            .copied()
            .ok_or_else(|| Error::MissingAmplitude(variable.to_string()))
    }
}

/// Two consecutive states `X_{t-1}`, `X_t`, each stored variable-major: all
/// points of the first variable, then the next.
#[derive(Debug, Clone, PartialEq)]
pub struct StatePair {
    pub variables: Vec<String>,
    pub prev: Vec<f64>,
    pub curr: Vec<f64>,
}

impl StatePair {
    pub fn new(variables: Vec<String>, prev: Vec<f64>, curr: Vec<f64>) -> Result<Self> {
        if variables.is_empty() {
            return Err(Error::Degenerate("state with no variables".into()));
        }
        if prev.len() != curr.len() {
            return Err(Error::DimensionMismatch {
                what: "state pair",
                expected: prev.len(),
                found: curr.len(),
            });
        }
        if prev.len() % variables.len() != 0 || prev.is_empty() {
            return Err(Error::DimensionMismatch {
                what: "state length per variable",
                expected: variables.len(),
                found: prev.len(),
            });
        }
        Ok(Self { variables, prev, curr })
    }

    pub fn n_points(&self) -> usize {
        self.prev.len() / self.variables.len()
    }

    pub fn state_len(&self) -> usize {
        self.prev.len()
    }

    pub fn variable_index(&self, variable: &str) -> Result<usize> {
        self.variables
            .iter()
            .position(|v| v == variable)
            .ok_or_else(|| Error::domain(format!("unknown variable `{variable}`")))
    }

    /// `ΔX = X_t - X_{t-1}`.
    pub fn increment(&self) -> Vec<f64> {
        self.curr.iter().zip(&self.prev).map(|(c, p)| c - p).collect()
    }

    fn increment_at(&self, variable: usize, point: usize) -> f64 {
        let i = variable * self.n_points() + point;
        self.curr[i] - self.prev[i]
    }

    fn amplitudes(&self, cfg: &PerturbConfig) -> Result<Vec<f64>> {
        self.variables.iter().map(|v| cfg.amplitude(v)).collect()
    }
}

/// `X^p_t = X_{t-1} + [1 + μ_v r] (X_t - X_{t-1})`, with `μ_v r` clamped to
/// `±clip` when a clip is configured. One shared field serves all variables.
pub fn apply_sppt(pair: &StatePair, field: &[f64], cfg: &PerturbConfig) -> Result<Vec<f64>> {
    let n = pair.n_points();
    if field.len() != n {
        return Err(Error::DimensionMismatch {
            what: "perturbation field",
            expected: n,
            found: field.len(),
        });
    }
    let mus = pair.amplitudes(cfg)?;
    let mut out = Vec::with_capacity(pair.state_len());
    for (v, &mu) in mus.iter().enumerate() {
        let prev = &pair.prev[v * n..(v + 1) * n];
        let curr = &pair.curr[v * n..(v + 1) * n];
        for ((&p, &c), &r) in prev.iter().zip(curr).zip(field) {
            let mut factor = mu * r;
            if let Some(clip) = cfg.clip {
                factor = factor.clamp(-clip, clip);
            }
            out.push(p + (1.0 + factor) * (c - p));
        }
    }
    Ok(out)
}

/// Closed-form variance of `X^p_t` at one point:
/// `[μ ΔX(s)]² / (4π) Σ_{l>=1} (2l+1) C_l`.
pub fn analytic_point_variance(
    pair: &StatePair,
    cfg: &PerturbConfig,
    spectrum: &SpectrumParams,
    point: usize,
    variable: &str,
) -> Result<f64> {
    let v = pair.variable_index(variable)?;
    let scaled = cfg.amplitude(variable)? * pair.increment_at(v, point);
    Ok(scaled * scaled * spectrum.point_variance())
}

/// Closed-form covariance of `X^p_t` between two points of one variable.
pub fn analytic_covariance(
    pair: &StatePair,
    cfg: &PerturbConfig,
    spectrum: &SpectrumParams,
    points: &[SpherePoint],
    u: usize,
    v: usize,
    variable: &str,
) -> Result<f64> {
    check_points(pair, points)?;
    let var = pair.variable_index(variable)?;
    let mu = cfg.amplitude(variable)?;
    Ok(mu
        * mu
        * pair.increment_at(var, u)
        * pair.increment_at(var, v)
        * point_covariance(spectrum, points[u], points[v]))
}

fn check_points(pair: &StatePair, points: &[SpherePoint]) -> Result<()> {
    if points.len() != pair.n_points() {
        return Err(Error::DimensionMismatch {
            what: "point list",
            expected: pair.n_points(),
            found: points.len(),
        });
    }
    Ok(())
}

/// Covariance matrix `Σ` of the field itself over a point list.
pub fn field_covariance(spectrum: &SpectrumParams, points: &[SpherePoint]) -> DMatrix<f64> {
    let n = points.len();
    let mut sigma = DMatrix::zeros(n, n);
    for u in 0..n {
        for v in u..n {
            let c = point_covariance(spectrum, points[u], points[v]);
            sigma[(u, v)] = c;
            sigma[(v, u)] = c;
        }
    }
    sigma
}

/// `Σ_x = μ² D_ΔX Σ D_ΔX` for one variable over the pair's points.
pub fn build_sigma_x(
    pair: &StatePair,
    cfg: &PerturbConfig,
    spectrum: &SpectrumParams,
    points: &[SpherePoint],
    variable: &str,
) -> Result<DMatrix<f64>> {
    check_points(pair, points)?;
    let var = pair.variable_index(variable)?;
    let mu = cfg.amplitude(variable)?;
    let sigma = field_covariance(spectrum, points);
    let scale: Vec<f64> = (0..points.len()).map(|p| mu * pair.increment_at(var, p)).collect();
    Ok(DMatrix::from_fn(points.len(), points.len(), |u, v| {
        (scale[u] * scale[v]) * sigma[(u, v)]
    }))
}

/// Joint `Σ_x` of `X^p_t` over every (variable, point) entry, in state order.
/// Variables share one field, so cross-variable blocks are
/// `μ_a μ_b D_a Σ D_b`.
pub fn build_sigma_x_joint(
    pair: &StatePair,
    cfg: &PerturbConfig,
    spectrum: &SpectrumParams,
    points: &[SpherePoint],
) -> Result<DMatrix<f64>> {
    check_points(pair, points)?;
    let sigma = field_covariance(spectrum, points);
    sigma_x_from_field_covariance(pair, cfg, &sigma)
}

pub(crate) fn sigma_x_from_field_covariance(
    pair: &StatePair,
    cfg: &PerturbConfig,
    sigma: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let n = pair.n_points();
    let mus = pair.amplitudes(cfg)?;
    let dx = pair.increment();
    let scale: Vec<f64> = dx.iter().enumerate().map(|(i, d)| mus[i / n] * d).collect();
    let len = scale.len();
    Ok(DMatrix::from_fn(len, len, |a, b| {
        (scale[a] * scale[b]) * sigma[(a % n, b % n)]
    }))
}

/// Additive baseline: every entry of both states gets `sigma · N(0, 1)`.
pub fn apply_gaussian_baseline<R: Rng + ?Sized>(pair: &StatePair, sigma: f64, rng: &mut R) -> Result<StatePair> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::domain(format!(
            "baseline amplitude {sigma} must be finite and >= 0"
        )));
    }
    let mut noisy = |xs: &[f64]| -> Vec<f64> {
        xs.iter()
            .map(|x| {
                let e: f64 = rng.sample(StandardNormal);
                x + sigma * e
            })
            .collect()
    };
    let prev = noisy(&pair.prev);
    let curr = noisy(&pair.curr);
    Ok(StatePair {
        variables: pair.variables.clone(),
        prev,
        curr,
    })
}
