//! WebAssembly bindings for the browser demo: random-field draws on a
//! lat/lon grid, an evolving AR(1) field, and the spectrum and covariance
//! curves behind them.

use std::sync::Arc;

use hybridcast::perturbation::{ar1_init, Ar1Config, InitMode, RandomFieldState};
use hybridcast::rng::rng_from_seed;
use hybridcast::sphere::{
    isotropic_covariance, power_spectrum, sample_innovation, SpectrumParams, SphericalGrid, Synthesizer,
};
use wasm_bindgen::prelude::*;

fn spectrum(kappa: f64, tau: f64, gamma: f64, truncation: usize) -> Result<SpectrumParams, String> {
    let params = SpectrumParams {
        kappa,
        tau,
        gamma,
        truncation,
        radius: 1.0,
    };
    params.validate().map_err(|e| e.to_string())?;
    Ok(params)
}

fn synthesizer(n_lat: usize, n_lon: usize, truncation: usize) -> Result<Synthesizer, String> {
    let grid = SphericalGrid::new(n_lat, n_lon).map_err(|e| e.to_string())?;
    Ok(Synthesizer::for_grid(&grid, truncation))
}

/// One field draw on an `n_lat × n_lon` grid, row-major from the southern
/// row.
#[wasm_bindgen]
pub fn sample_field(
    n_lat: usize,
    n_lon: usize,
    kappa: f64,
    tau: f64,
    gamma: f64,
    truncation: usize,
    seed: u64,
) -> Result<Vec<f64>, String> {
    let params = spectrum(kappa, tau, gamma, truncation)?;
    let synth = synthesizer(n_lat, n_lon, truncation)?;
    let coeffs = sample_innovation(&params, &mut rng_from_seed(seed));
    synth.synthesize(&coeffs).map_err(|e| e.to_string())
}

/// `C_l` for `l = 0..=truncation`.
#[wasm_bindgen]
pub fn spectrum_curve(kappa: f64, tau: f64, gamma: f64, truncation: usize) -> Result<Vec<f64>, String> {
    Ok(power_spectrum(&spectrum(kappa, tau, gamma, truncation)?))
}

/// Correlation `c(θ)/c(0)` at `n` angles evenly spaced on `[0, π]`.
#[wasm_bindgen]
pub fn correlation_curve(kappa: f64, tau: f64, gamma: f64, truncation: usize, n: usize) -> Result<Vec<f64>, String> {
    let params = spectrum(kappa, tau, gamma, truncation)?;
    let c0 = params.point_variance();
    if !(c0 > 0.0) {
        return Err("field variance is zero".into());
    }
    let step = std::f64::consts::PI / (n.max(2) - 1) as f64;
    Ok((0..n)
        .map(|k| isotropic_covariance(&params, k as f64 * step) / c0)
        .collect())
}

/// A field that evolves as `r ← α r + β ε` each time `step` is called.
#[wasm_bindgen]
pub struct FieldAnimation {
    state: RandomFieldState,
    steps: usize,
}

#[wasm_bindgen]
impl FieldAnimation {
    #[wasm_bindgen(constructor)]
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        n_lat: usize,
        n_lon: usize,
        kappa: f64,
        tau: f64,
        gamma: f64,
        truncation: usize,
        dt_hours: f64,
        eta_hours: f64,
        seed: u64,
    ) -> Result<FieldAnimation, String> {
        let params = spectrum(kappa, tau, gamma, truncation)?;
        let ar1 = Ar1Config::new(dt_hours, eta_hours).map_err(|e| e.to_string())?;
        let synth = Arc::new(synthesizer(n_lat, n_lon, truncation)?);
        let state =
            ar1_init(params, ar1, synth, rng_from_seed(seed), InitMode::Stationary).map_err(|e| e.to_string())?;
        Ok(FieldAnimation { state, steps: 0 })
    }

    pub fn step(&mut self) {
        self.state.step();
        self.steps += 1;
    }

    pub fn values(&self) -> Vec<f64> {
        self.state.values().to_vec()
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn alpha(&self) -> f64 {
        self.state.ar1().alpha()
    }
}
