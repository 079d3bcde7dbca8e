//! Isotropic Gaussian random fields from truncated real spherical-harmonic
//! expansions.

use std::f64::consts::SQRT_2;

use rand::Rng;
use rand_distr::StandardNormal;

use super::grid::{ScalarField, SpherePoint, SphericalGrid};
use super::legendre::normalized_assoc_legendre_table;
use super::spectrum::{mode_index, n_modes, real_spherical_harmonic, SpectrumParams};
use crate::error::{Error, Result};

/// Real-basis expansion coefficients for degrees `1..=truncation`.
///
/// Each entry is one standard-normal draw already multiplied by the spectral
/// amplitude `κ (l(l+1)/R² + τ²)^(-γ/2)`, so mode `(l, m)` has variance `C_l`.
/// Degree 0 is absent.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicCoeffs {
    truncation: usize,
    values: Vec<f64>,
}

impl HarmonicCoeffs {
    pub fn zeros(truncation: usize) -> Self {
        Self {
            truncation,
            values: vec![0.0; n_modes(truncation)],
        }
    }

    /// Scale a vector of standard-normal draws (in mode order) by the
    /// spectral amplitudes.
    pub fn from_standard_normals(params: &SpectrumParams, xi: &[f64]) -> Result<Self> {
        if xi.len() != params.n_modes() {
            return Err(Error::DimensionMismatch {
                what: "harmonic coefficients",
                expected: params.n_modes(),
                found: xi.len(),
            });
        }
        let mut values = Vec::with_capacity(xi.len());
        for l in 1..=params.truncation {
            let amp = params.amplitude(l);
            let start = mode_index(l, -(l as i64));
            values.extend(xi[start..start + 2 * l + 1].iter().map(|x| x * amp));
        }
        Ok(Self {
            truncation: params.truncation,
            values,
        })
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn get(&self, l: usize, m: i64) -> f64 {
        self.values[mode_index(l, m)]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

/// Draw one innovation: an i.i.d. standard normal per real basis function,
/// scaled to the spectrum.
pub fn sample_innovation<R: Rng + ?Sized>(params: &SpectrumParams, rng: &mut R) -> HarmonicCoeffs {
    let mut coeffs = HarmonicCoeffs::zeros(params.truncation);
    fill_innovation(params, rng, &mut coeffs);
    coeffs
}

pub(crate) fn fill_innovation<R: Rng + ?Sized>(params: &SpectrumParams, rng: &mut R, coeffs: &mut HarmonicCoeffs) {
    debug_assert_eq!(coeffs.truncation, params.truncation);
    let mut i = 0;
    for l in 1..=params.truncation {
        let amp = params.amplitude(l);
        for _ in 0..(2 * l + 1) {
            let xi: f64 = rng.sample(StandardNormal);
            coeffs.values[i] = xi * amp;
            i += 1;
        }
    }
}

#[derive(Debug, Clone)]
enum Layout {
    /// Separable evaluation on a lat-lon grid: Legendre factors per ring and
    /// trigonometric factors per meridian.
    Grid {
        n_lat: usize,
        n_lon: usize,
        /// `n_lat` rows of `(L+1)(L+2)/2` orthonormal Legendre values, with
        /// the real-basis `sqrt(2)` folded in for `m > 0`.
        legendre: Vec<f64>,
        /// `n_lon` rows of `2L+1` values, column `m + L`: `cos(m λ)` for
        /// `m >= 0`, `sin(|m| λ)` for `m < 0`.
        trig: Vec<f64>,
    },
    /// Dense basis matrix for an arbitrary point set, `n_points × n_modes`.
    Points { basis: Vec<f64> },
}

/// Precomputed real spherical-harmonic basis for a fixed target (a grid or a
/// list of points). Synthesis is then a linear map from coefficients to
/// values.
#[derive(Debug, Clone)]
pub struct Synthesizer {
    truncation: usize,
    n_points: usize,
    layout: Layout,
}

fn tri(l: usize, m: usize) -> usize {
    l * (l + 1) / 2 + m
}

impl Synthesizer {
    pub fn for_grid(grid: &SphericalGrid, truncation: usize) -> Self {
        let n_tri = (truncation + 1) * (truncation + 2) / 2;
        let mut legendre = Vec::with_capacity(grid.n_lat() * n_tri);
        for &lat in grid.lat() {
            let mut row = normalized_assoc_legendre_table(truncation, lat.sin());
            for l in 1..=truncation {
                for m in 1..=l {
                    row[tri(l, m)] *= SQRT_2;
                }
            }
            legendre.extend(row);
        }
        let width = 2 * truncation + 1;
        let mut trig = Vec::with_capacity(grid.n_lon() * width);
        for &lon in grid.lon() {
            for m in -(truncation as i64)..=(truncation as i64) {
                let angle = m.unsigned_abs() as f64 * lon;
                trig.push(if m >= 0 { angle.cos() } else { angle.sin() });
            }
        }
        Self {
            truncation,
            n_points: grid.len(),
            layout: Layout::Grid {
                n_lat: grid.n_lat(),
                n_lon: grid.n_lon(),
                legendre,
                trig,
            },
        }
    }

    pub fn for_points(points: &[SpherePoint], truncation: usize) -> Self {
        let modes = n_modes(truncation);
        let mut basis = Vec::with_capacity(points.len() * modes);
        for &p in points {
            for l in 1..=truncation {
                for m in -(l as i64)..=(l as i64) {
                    basis.push(real_spherical_harmonic(l, m, p).expect("|m| <= l by construction"));
                }
            }
        }
        Self {
            truncation,
            n_points: points.len(),
            layout: Layout::Points { basis },
        }
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    /// Evaluate `Σ_{l,m} a_lm Y_lm` at every target point into `out`.
    pub fn synthesize_into(&self, coeffs: &HarmonicCoeffs, out: &mut [f64]) -> Result<()> {
        if coeffs.truncation != self.truncation {
            return Err(Error::DimensionMismatch {
                what: "coefficient truncation",
                expected: self.truncation,
                found: coeffs.truncation,
            });
        }
        if out.len() != self.n_points {
            return Err(Error::DimensionMismatch {
                what: "synthesis target",
                expected: self.n_points,
                found: out.len(),
            });
        }
        let lmax = self.truncation;
        match &self.layout {
            Layout::Points { basis } => {
                let modes = coeffs.values.len();
                for (value, row) in out.iter_mut().zip(basis.chunks_exact(modes)) {
                    *value = row.iter().zip(&coeffs.values).map(|(b, a)| b * a).sum();
                }
            }
            Layout::Grid {
                n_lat,
                n_lon,
                legendre,
                trig,
            } => {
                let n_tri = (lmax + 1) * (lmax + 2) / 2;
                let width = 2 * lmax + 1;
                let mut ring = vec![0.0; width];
                for h in 0..*n_lat {
                    let leg = &legendre[h * n_tri..(h + 1) * n_tri];
                    for (col, slot) in ring.iter_mut().enumerate() {
                        let m = col as i64 - lmax as i64;
                        let order = m.unsigned_abs() as usize;
                        *slot = (order.max(1)..=lmax)
                            .map(|l| coeffs.values[mode_index(l, m)] * leg[tri(l, order)])
                            .sum();
                    }
                    let row = &mut out[h * n_lon..(h + 1) * n_lon];
                    for (w, value) in row.iter_mut().enumerate() {
                        let t = &trig[w * width..(w + 1) * width];
                        *value = ring.iter().zip(t).map(|(g, c)| g * c).sum();
                    }
                }
            }
        }
        Ok(())
    }

    pub fn synthesize(&self, coeffs: &HarmonicCoeffs) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.n_points];
        self.synthesize_into(coeffs, &mut out)?;
        Ok(out)
    }
}

/// Synthesise the innovation field on a grid.
pub fn synthesize_field(coeffs: &HarmonicCoeffs, params: &SpectrumParams, grid: &SphericalGrid) -> Result<ScalarField> {
    if coeffs.truncation != params.truncation {
        return Err(Error::DimensionMismatch {
            what: "coefficient truncation",
            expected: params.truncation,
            found: coeffs.truncation,
        });
    }
    let values = Synthesizer::for_grid(grid, params.truncation).synthesize(coeffs)?;
    ScalarField::from_values(grid, values)
}
