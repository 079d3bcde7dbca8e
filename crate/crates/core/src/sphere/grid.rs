use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A location on the unit sphere, angles in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpherePoint {
    pub lat: f64,
    pub lon: f64,
}

impl SpherePoint {
    pub fn new(lat: f64, lon: f64) -> Self {
        Self { lat, lon }
    }

    fn unit_vector(&self) -> [f64; 3] {
        let (slat, clat) = self.lat.sin_cos();
        let (slon, clon) = self.lon.sin_cos();
        [clat * clon, clat * slon, slat]
    }
}

/// Great-circle angle between two points, in `[0, π]`.
///
/// Uses `atan2(|u × v|, u · v)`, which keeps full precision near 0 and π
/// where `acos` of the dot product does not.
pub fn angular_distance(u: SpherePoint, v: SpherePoint) -> f64 {
    let a = u.unit_vector();
    let b = v.unit_vector();
    let cross = [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ];
    let cross_norm = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
    let dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    cross_norm.atan2(dot)
}

/// Equiangular latitude-longitude grid with cell-centre latitudes (no pole
/// rows) and latitude area weights normalised to unit mean.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalGrid {
    n_lat: usize,
    n_lon: usize,
    lat: Vec<f64>,
    lon: Vec<f64>,
    area_weights: Vec<f64>,
}

impl SphericalGrid {
    pub fn new(n_lat: usize, n_lon: usize) -> Result<Self> {
        if n_lat < 2 {
            return Err(Error::config(
                "grid.n_lat",
                format!("need at least 2 rings, got {n_lat}"),
            ));
        }
        if n_lon < 4 {
            return Err(Error::config(
                "grid.n_lon",
                format!("need at least 4 points, got {n_lon}"),
            ));
        }
        let dlat = PI / n_lat as f64;
        let lat: Vec<f64> = (0..n_lat).map(|h| -FRAC_PI_2 + (h as f64 + 0.5) * dlat).collect();
        let lon: Vec<f64> = (0..n_lon).map(|w| 2.0 * PI * w as f64 / n_lon as f64).collect();
        let cos_mean = lat.iter().map(|l| l.cos()).sum::<f64>() / n_lat as f64;
        let area_weights = lat.iter().map(|l| l.cos() / cos_mean).collect();
        Ok(Self {
            n_lat,
            n_lon,
            lat,
            lon,
            area_weights,
        })
    }

    pub fn n_lat(&self) -> usize {
        self.n_lat
    }

    pub fn n_lon(&self) -> usize {
        self.n_lon
    }

    pub fn len(&self) -> usize {
        self.n_lat * self.n_lon
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn lat(&self) -> &[f64] {
        &self.lat
    }

    pub fn lon(&self) -> &[f64] {
        &self.lon
    }

    /// Latitude weights `a_h = cos(lat_h) / mean(cos(lat))`.
    pub fn area_weights(&self) -> &[f64] {
        &self.area_weights
    }

    /// Area weight of each point in row-major (lat-major) order.
    pub fn point_weights(&self) -> Vec<f64> {
        self.area_weights
            .iter()
            .flat_map(|&a| std::iter::repeat_n(a, self.n_lon))
            .collect()
    }

    pub fn point(&self, h: usize, w: usize) -> SpherePoint {
        SpherePoint::new(self.lat[h], self.lon[w])
    }

    /// All grid points in row-major order.
    pub fn points(&self) -> Vec<SpherePoint> {
        self.lat
            .iter()
            .flat_map(|&lat| self.lon.iter().map(move |&lon| SpherePoint::new(lat, lon)))
            .collect()
    }

    pub fn index(&self, h: usize, w: usize) -> usize {
        h * self.n_lon + w
    }
}

/// Values of one variable on a grid, row-major (lat-major, lon-minor).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    n_lat: usize,
    n_lon: usize,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: &SphericalGrid) -> Self {
        Self {
            n_lat: grid.n_lat(),
            n_lon: grid.n_lon(),
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_values(grid: &SphericalGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                what: "scalar field",
                expected: grid.len(),
                found: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("scalar field value at index {i}")));
        }
        Ok(Self {
            n_lat: grid.n_lat(),
            n_lon: grid.n_lon(),
            values,
        })
    }

    pub fn n_lat(&self) -> usize {
        self.n_lat
    }

    pub fn n_lon(&self) -> usize {
        self.n_lon
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, h: usize, w: usize) -> f64 {
        self.values[h * self.n_lon + w]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn grid_shape_and_weights() {
        let grid = SphericalGrid::new(32, 64).unwrap();
        assert_eq!(grid.len(), 2048);
        assert!(grid.lat().windows(2).all(|w| w[1] > w[0]));
        assert!(grid.lat()[0] > -FRAC_PI_2 && grid.lat()[31] < FRAC_PI_2);
        let mean = grid.area_weights().iter().sum::<f64>() / 32.0;
        assert_abs_diff_eq!(mean, 1.0, epsilon = 1e-12);
        let dlon: Vec<f64> = grid.lon().windows(2).map(|w| w[1] - w[0]).collect();
        assert!(dlon.iter().all(|d| (d - dlon[0]).abs() < 1e-14));
    }

    #[test]
    fn grid_rejects_tiny_shapes() {
        assert!(SphericalGrid::new(1, 8).is_err());
        assert!(SphericalGrid::new(4, 3).is_err());
    }

    #[test]
    fn angular_distance_examples() {
        let a = SpherePoint::new(0.0, 0.0);
        assert_eq!(angular_distance(a, a), 0.0);
        assert_abs_diff_eq!(angular_distance(a, SpherePoint::new(0.0, PI)), PI, epsilon = 1e-15);
        assert_abs_diff_eq!(
            angular_distance(a, SpherePoint::new(0.0, PI / 2.0)),
            PI / 2.0,
            epsilon = 1e-15
        );
        let np = SpherePoint::new(FRAC_PI_2, 0.3);
        let sp = SpherePoint::new(-FRAC_PI_2, 2.0);
        assert_abs_diff_eq!(angular_distance(np, sp), PI, epsilon = 1e-15);
        // Tiny separations keep relative precision.
        let b = SpherePoint::new(1e-9, 0.0);
        assert_abs_diff_eq!(angular_distance(a, b), 1e-9, epsilon = 1e-22);
    }

    proptest! {
        #[test]
        fn area_weights_average_to_one(n_lat in 2usize..80, n_lon in 4usize..16) {
            let grid = SphericalGrid::new(n_lat, n_lon).unwrap();
            let mean = grid.area_weights().iter().sum::<f64>() / n_lat as f64;
            prop_assert!((mean - 1.0).abs() < 1e-12);
        }

        #[test]
        fn angular_distance_is_symmetric_and_bounded(
            lat1 in -1.5f64..1.5, lon1 in 0.0f64..std::f64::consts::TAU, lat2 in -1.5f64..1.5, lon2 in 0.0f64..std::f64::consts::TAU
        ) {
            let u = SpherePoint::new(lat1, lon1);
            let v = SpherePoint::new(lat2, lon2);
            let d = angular_distance(u, v);
            prop_assert!((0.0..=PI).contains(&d));
            prop_assert!((d - angular_distance(v, u)).abs() < 1e-14);
        }
    }
}
