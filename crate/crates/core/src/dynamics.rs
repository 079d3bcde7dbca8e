//! Synthetic chaotic ground truth: one Lorenz-96 ring per latitude band and
//! variable, with weak diffusive coupling between neighbouring bands and
//! between variables.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Blow-up threshold on `|x|`.
pub const BLOW_UP: f64 = 1e3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToySystemConfig {
    pub forcing: f64,
    pub variables: Vec<String>,
    /// Diffusive coupling to the neighbouring latitude bands.
    pub coupling: f64,
    /// Diffusive coupling between variables at the same site.
    pub var_coupling: f64,
    /// Integrator step, hours.
    pub dt_int: f64,
    /// Spacing of stored states, hours.
    pub output_interval: f64,
    /// Hours per Lorenz-96 time unit; the classic scaling is 0.05 units per
    /// 6 hours.
    pub hours_per_unit: f64,
    /// Output steps discarded before any split.
    pub spin_up: usize,
}

impl Default for ToySystemConfig {
    fn default() -> Self {
        Self {
            forcing: 8.0,
            variables: vec!["z".into(), "t".into()],
            coupling: 0.1,
            var_coupling: 0.2,
            dt_int: 1.5,
            output_interval: 6.0,
            hours_per_unit: 120.0,
            spin_up: 500,
        }
    }
}

impl ToySystemConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.forcing >= 0.0 && self.forcing.is_finite()) {
            return Err(Error::config("dynamics.forcing", "must be finite and >= 0"));
        }
        if self.variables.is_empty() {
            return Err(Error::config("dynamics.variables", "need at least one variable"));
        }
        for (key, v) in [
            ("dynamics.coupling", self.coupling),
            ("dynamics.var_coupling", self.var_coupling),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(key, "must be finite and >= 0"));
            }
        }
        if !(self.dt_int > 0.0 && self.dt_int <= self.output_interval) {
            return Err(Error::config("dynamics.dt_int", "must be > 0 and <= output_interval"));
        }
        let ratio = self.output_interval / self.dt_int;
        if (ratio - ratio.round()).abs() > 1e-9 {
            return Err(Error::config("dynamics.dt_int", "must divide output_interval"));
        }
        if !(self.hours_per_unit > 0.0 && self.hours_per_unit.is_finite()) {
            return Err(Error::config("dynamics.hours_per_unit", "must be finite and > 0"));
        }
        Ok(())
    }

    fn substeps(&self) -> usize {
        (self.output_interval / self.dt_int).round() as usize
    }
}

/// States at a fixed interval, each variable-major and row-major on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub variables: Vec<String>,
    pub n_lat: usize,
    pub n_lon: usize,
    pub interval_hours: f64,
    pub seed: u64,
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state_len(&self) -> usize {
        self.variables.len() * self.n_lat * self.n_lon
    }
}

/// Lorenz-96 right-hand side `(x_{i+1} - x_{i-2}) x_{i-1} - x_i + F` on a
/// cyclic ring.
pub fn l96_tendency(x: &[f64], forcing: f64) -> Result<Vec<f64>> {
    let mut out = vec![0.0; x.len()];
    l96_tendency_into(x, forcing, &mut out)?;
    Ok(out)
}

fn l96_tendency_into(x: &[f64], forcing: f64, out: &mut [f64]) -> Result<()> {
    let n = x.len();
    if n < 4 {
        return Err(Error::domain(format!("Lorenz-96 ring needs >= 4 sites, got {n}")));
    }
    for i in 0..n {
        let next = x[(i + 1) % n];
        let prev = x[(i + n - 1) % n];
        let prev2 = x[(i + n - 2) % n];
        out[i] = (next - prev2) * prev - x[i] + forcing;
    }
    Ok(())
}

/// One classical fourth-order Runge-Kutta step of `dx/dt = f(x)`.
pub fn rk4_step<F>(f: F, x: &mut [f64], dt: f64)
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = x.len();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    f(x, &mut k1);
    for i in 0..n {
        tmp[i] = x[i] + 0.5 * dt * k1[i];
    }
    f(&tmp, &mut k2);
    for i in 0..n {
        tmp[i] = x[i] + 0.5 * dt * k2[i];
    }
    f(&tmp, &mut k3);
    for i in 0..n {
        tmp[i] = x[i] + dt * k3[i];
    }
    f(&tmp, &mut k4);
    for i in 0..n {
        x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

/// Full coupled tendency for a state on an `n_lat × n_lon` grid.
pub fn toy_tendency(cfg: &ToySystemConfig, n_lat: usize, n_lon: usize, x: &[f64], out: &mut [f64]) -> Result<()> {
    let n_vars = cfg.variables.len();
    let n = n_lat * n_lon;
    if x.len() != n_vars * n || out.len() != x.len() {
        return Err(Error::DimensionMismatch {
            what: "toy state",
            expected: n_vars * n,
            found: x.len(),
        });
    }
    for v in 0..n_vars {
        for h in 0..n_lat {
            let start = v * n + h * n_lon;
            l96_tendency_into(&x[start..start + n_lon], cfg.forcing, &mut out[start..start + n_lon])?;
            for w in 0..n_lon {
                let i = start + w;
                let mut diffusion = 0.0;
                if h > 0 {
                    diffusion += x[i - n_lon] - x[i];
                }
                if h + 1 < n_lat {
                    diffusion += x[i + n_lon] - x[i];
                }
                out[i] += cfg.coupling * diffusion;
                if n_vars > 1 {
                    let others: f64 = (0..n_vars).filter(|&u| u != v).map(|u| x[u * n + h * n_lon + w]).sum();
                    out[i] += cfg.var_coupling * (others / (n_vars - 1) as f64 - x[i]);
                }
            }
        }
    }
    Ok(())
}

/// Integrate from `initial` and keep `n_steps` further states at the output
/// interval (the initial state is element 0).
pub fn integrate(
    cfg: &ToySystemConfig,
    n_lat: usize,
    n_lon: usize,
    initial: &[f64],
    n_steps: usize,
    seed: u64,
) -> Result<Trajectory> {
    cfg.validate()?;
    if let Some(i) = initial.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("initial state at index {i}")));
    }
    let dt = cfg.dt_int / cfg.hours_per_unit;
    let mut x = initial.to_vec();
    let mut probe = vec![0.0; x.len()];
    toy_tendency(cfg, n_lat, n_lon, &x, &mut probe)?;
    let rhs = |s: &[f64], o: &mut [f64]| {
        toy_tendency(cfg, n_lat, n_lon, s, o).expect("shape checked above");
    };
    let mut states = Vec::with_capacity(n_steps + 1);
    states.push(x.clone());
    for step in 1..=n_steps {
        for _ in 0..cfg.substeps() {
            rk4_step(rhs, &mut x, dt);
        }
        let magnitude = x.iter().fold(
            0.0f64,
            |m, v| if v.is_finite() { m.max(v.abs()) } else { f64::INFINITY },
        );
        if magnitude > BLOW_UP {
            return Err(Error::BlowUp { step, magnitude });
        }
        states.push(x.clone());
    }
    Ok(Trajectory {
        variables: cfg.variables.clone(),
        n_lat,
        n_lon,
        interval_hours: cfg.output_interval,
        seed,
        states,
    })
}

/// Chronological train / validation / test splits of one spun-up run.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub train: Trajectory,
    pub val: Trajectory,
    pub test: Trajectory,
}

pub fn make_dataset(
    cfg: &ToySystemConfig,
    n_lat: usize,
    n_lon: usize,
    n_train: usize,
    n_val: usize,
    n_test: usize,
    seed: u64,
) -> Result<Dataset> {
    for (key, n) in [
        ("data.n_train", n_train),
        ("data.n_val", n_val),
        ("data.n_test", n_test),
    ] {
        if n == 0 {
            return Err(Error::config(key, "must be >= 1"));
        }
    }
    let mut rng = rng_from_seed(seed);
    let len = cfg.variables.len() * n_lat * n_lon;
    let initial: Vec<f64> = (0..len)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            cfg.forcing + 0.01 * z
        })
        .collect();
    let spun = integrate(cfg, n_lat, n_lon, &initial, cfg.spin_up, seed)?;
    let start = spun.states.last().expect("integrate keeps the initial state").clone();
    let total = n_train + n_val + n_test;
    let full = integrate(cfg, n_lat, n_lon, &start, total - 1, seed)?;
    let mut states = full.states.into_iter();
    let mut take = |k: usize| Trajectory {
        variables: cfg.variables.clone(),
        n_lat,
        n_lon,
        interval_hours: cfg.output_interval,
        seed,
        states: states.by_ref().take(k).collect(),
    };
    Ok(Dataset {
        train: take(n_train),
        val: take(n_val),
        test: take(n_test),
    })
}
