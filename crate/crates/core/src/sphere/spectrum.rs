use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use super::grid::{angular_distance, SpherePoint};
use super::legendre::{assoc_legendre, legendre_table, ln_factorial_ratio};
use crate::error::{Error, Result};

/// Angular power spectrum `C_l = κ² (l(l+1)/R² + τ²)^(-γ)` truncated at
/// degree `truncation`, with `C_0 = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumParams {
    pub kappa: f64,
    pub tau: f64,
    pub gamma: f64,
    pub truncation: usize,
    pub radius: f64,
}

impl Default for SpectrumParams {
    fn default() -> Self {
        Self {
            kappa: 0.5,
            tau: 5.31,
            gamma: 2.0,
            truncation: 16,
            radius: 1.0,
        }
    }
}

impl SpectrumParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return Err(Error::config("spectrum.kappa", "must be finite and >= 0"));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::config("spectrum.tau", "must be finite and > 0"));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::config("spectrum.gamma", "must be finite and > 0"));
        }
        if self.truncation < 1 {
            return Err(Error::config("spectrum.truncation", "must be >= 1"));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::config("spectrum.radius", "must be finite and > 0"));
        }
        Ok(())
    }

    /// `sqrt(C_l) = κ (l(l+1)/R² + τ²)^(-γ/2)` for `l >= 1`.
    pub fn amplitude(&self, l: usize) -> f64 {
        if l == 0 {
            return 0.0;
        }
        let lf = l as f64;
        let k2 = lf * (lf + 1.0) / (self.radius * self.radius) + self.tau * self.tau;
        self.kappa * k2.powf(-self.gamma / 2.0)
    }

    /// Variance of the field at any point, `(1/4π) Σ_{l>=1} (2l+1) C_l`.
    pub fn point_variance(&self) -> f64 {
        power_spectrum(self)
            .iter()
            .enumerate()
            .map(|(l, c)| (2 * l + 1) as f64 * c)
            .sum::<f64>()
            / (4.0 * PI)
    }

    /// Number of real basis functions with `1 <= l <= truncation`.
    pub fn n_modes(&self) -> usize {
        n_modes(self.truncation)
    }
}

pub(crate) fn n_modes(truncation: usize) -> usize {
    (truncation + 1) * (truncation + 1) - 1
}

/// Position of `(l, m)` in mode-ordered coefficient vectors (l >= 1).
pub(crate) fn mode_index(l: usize, m: i64) -> usize {
    (l as i64 * l as i64 + l as i64 - 1 + m) as usize
}

/// `[C_0, C_1, ..., C_L]` with `C_0 = 0`.
pub fn power_spectrum(params: &SpectrumParams) -> Vec<f64> {
    (0..=params.truncation)
        .map(|l| {
            let a = params.amplitude(l);
            a * a
        })
        .collect()
}

/// Complex spherical harmonic `Y_lm` at a point (longitude `h`, latitude `w`),
/// returned as `(Re, Im)`. Evaluated in the latitude convention
/// `P_l^m(sin w) e^{imh}`, with the factorial ratio taken in log space.
pub fn spherical_harmonic(l: usize, m: i64, point: SpherePoint) -> Result<(f64, f64)> {
    let order = m.unsigned_abs() as usize;
    if order > l {
        return Err(Error::domain(format!("order |m| = {order} exceeds degree l = {l}")));
    }
    let ln_norm = ((2 * l + 1) as f64 / (4.0 * PI)).ln() + ln_factorial_ratio(l, order);
    let p = assoc_legendre(l, m, point.lat.sin().clamp(-1.0, 1.0))?;
    let magnitude = (0.5 * ln_norm).exp() * p;
    let (s, c) = (m as f64 * point.lon).sin_cos();
    Ok((magnitude * c, magnitude * s))
}

/// Real orthonormal spherical harmonic: cosine branch for `m > 0`, sine
/// branch for `m < 0`, each carrying a factor `sqrt(2)`.
pub fn real_spherical_harmonic(l: usize, m: i64, point: SpherePoint) -> Result<f64> {
    let order = m.unsigned_abs() as usize;
    if order > l {
        return Err(Error::domain(format!("order |m| = {order} exceeds degree l = {l}")));
    }
    let ln_norm = ((2 * l + 1) as f64 / (4.0 * PI)).ln() + ln_factorial_ratio(l, order);
    let p = (0.5 * ln_norm).exp() * assoc_legendre(l, order as i64, point.lat.sin().clamp(-1.0, 1.0))?;
    let angle = order as f64 * point.lon;
    Ok(match m.signum() {
        0 => p,
        1 => SQRT_2 * p * angle.cos(),
        _ => SQRT_2 * p * angle.sin(),
    })
}

/// Two-point covariance of the isotropic field at angular separation `angle`:
/// `Σ_{l=1..L} (2l+1)/(4π) C_l P_l(cos angle)`.
pub fn isotropic_covariance(params: &SpectrumParams, angle: f64) -> f64 {
    let p = legendre_table(params.truncation, angle.cos().clamp(-1.0, 1.0));
    power_spectrum(params)
        .iter()
        .zip(&p)
        .enumerate()
        .map(|(l, (c, pl))| (2 * l + 1) as f64 / (4.0 * PI) * c * pl)
        .sum()
}

/// Covariance between the field values at two points.
pub fn point_covariance(params: &SpectrumParams, u: SpherePoint, v: SpherePoint) -> f64 {
    isotropic_covariance(params, angular_distance(u, v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::legendre::legendre_p;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn paper_spectrum(truncation: usize) -> SpectrumParams {
        SpectrumParams {
            truncation,
            ..SpectrumParams::default()
        }
    }

    #[test]
    fn harmonic_examples() {
        let (re, im) = spherical_harmonic(0, 0, SpherePoint::new(0.7, 2.1)).unwrap();
        assert_abs_diff_eq!(re, (1.0 / (4.0 * PI)).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(re, 0.282095, epsilon = 1e-6);
        assert_eq!(im, 0.0);

        let (re, _) = spherical_harmonic(1, 0, SpherePoint::new(PI / 2.0, 0.0)).unwrap();
        assert_abs_diff_eq!(re, 0.488603, epsilon = 1e-6);

        let (re, im) = spherical_harmonic(1, 1, SpherePoint::new(0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(re, -0.345494, epsilon = 1e-6);
        assert_abs_diff_eq!(im, 0.0, epsilon = 1e-15);

        assert!(spherical_harmonic(2, 3, SpherePoint::new(0.0, 0.0)).is_err());
        assert!(real_spherical_harmonic(2, -3, SpherePoint::new(0.0, 0.0)).is_err());
    }

    #[test]
    fn spectrum_examples() {
        let zero = SpectrumParams {
            kappa: 0.0,
            ..SpectrumParams::default()
        };
        assert!(power_spectrum(&zero).iter().all(|&c| c == 0.0));

        let c = power_spectrum(&paper_spectrum(16));
        assert_eq!(c[0], 0.0);
        let expected = 0.25 / (2.0f64 + 5.31 * 5.31).powi(2);
        assert_abs_diff_eq!(c[1], expected, epsilon = 1e-18);
        assert!((c[1] - 2.742e-4).abs() < 5e-8);
        assert!(c[1..].windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn spectrum_validation_names_the_key() {
        let bad = SpectrumParams {
            tau: -1.0,
            ..SpectrumParams::default()
        };
        let err = bad.validate().unwrap_err().to_string();
        assert!(err.contains("spectrum.tau"), "{err}");
        assert!(SpectrumParams {
            truncation: 0,
            ..SpectrumParams::default()
        }
        .validate()
        .is_err());
        assert!(SpectrumParams {
            gamma: 0.0,
            ..SpectrumParams::default()
        }
        .validate()
        .is_err());
        assert!(SpectrumParams {
            radius: 0.0,
            ..SpectrumParams::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn covariance_at_zero_angle_is_point_variance() {
        let params = paper_spectrum(8);
        assert_abs_diff_eq!(
            isotropic_covariance(&params, 0.0),
            params.point_variance(),
            epsilon = 1e-18
        );
        let zero = SpectrumParams { kappa: 0.0, ..params };
        assert_eq!(isotropic_covariance(&zero, 0.8), 0.0);
    }

    #[test]
    fn addition_theorem_holds_for_both_bases() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..25 {
            let u = SpherePoint::new(rng.random_range(-1.5..1.5), rng.random_range(0.0..2.0 * PI));
            let v = SpherePoint::new(rng.random_range(-1.5..1.5), rng.random_range(0.0..2.0 * PI));
            let cos_gamma = angular_distance(u, v).cos().clamp(-1.0, 1.0);
            for l in 0..=8usize {
                let expected = (2 * l + 1) as f64 / (4.0 * PI) * legendre_p(l, cos_gamma).unwrap();
                let mut complex_sum = 0.0;
                let mut real_sum = 0.0;
                for m in -(l as i64)..=(l as i64) {
                    let (ar, ai) = spherical_harmonic(l, m, u).unwrap();
                    let (br, bi) = spherical_harmonic(l, m, v).unwrap();
                    // Re(Y(u) conj(Y(v)))
                    complex_sum += ar * br + ai * bi;
                    real_sum += real_spherical_harmonic(l, m, u).unwrap() * real_spherical_harmonic(l, m, v).unwrap();
                }
                let scale = expected.abs().max(1e-3);
                assert!((complex_sum - expected).abs() / scale < 1e-8, "l={l}");
                assert!((real_sum - expected).abs() / scale < 1e-8, "l={l}");
            }
        }
    }

    #[test]
    fn mode_index_is_dense() {
        let mut seen = Vec::new();
        for l in 1..=5usize {
            for m in -(l as i64)..=(l as i64) {
                seen.push(mode_index(l, m));
            }
        }
        assert_eq!(seen, (0..n_modes(5)).collect::<Vec<_>>());
    }
}
