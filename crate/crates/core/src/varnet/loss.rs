use crate::error::{Error, Result};
use crate::sphere::SphericalGrid;

fn check(pred: &[f64], truth: &[f64], grid: &SphericalGrid, var_weights: &[f64]) -> Result<()> {
    let expected = grid.len() * var_weights.len();
    for (what, len) in [("prediction", pred.len()), ("truth", truth.len())] {
        if len != expected {
            return Err(Error::DimensionMismatch {
                what,
                expected,
                found: len,
            });
        }
    }
    if let Some(w) = var_weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
        return Err(Error::config(
            "train.var_weights",
            format!("weights must be positive, got {w}"),
        ));
    }
    Ok(())
}

/// Latitude-weighted L1: `(1 / CHW) Σ_c Σ_h Σ_w w_c a_h |pred - truth|`.
/// Fields are variable-major, then row-major on the grid.
pub fn weighted_l1(pred: &[f64], truth: &[f64], grid: &SphericalGrid, var_weights: &[f64]) -> Result<f64> {
    check(pred, truth, grid, var_weights)?;
    let (n_lat, n_lon) = (grid.n_lat(), grid.n_lon());
    let a = grid.area_weights();
    let mut total = 0.0;
    for (c, &wc) in var_weights.iter().enumerate() {
        for h in 0..n_lat {
            let start = (c * n_lat + h) * n_lon;
            let row: f64 = pred[start..start + n_lon]
                .iter()
                .zip(&truth[start..start + n_lon])
                .map(|(p, t)| (p - t).abs())
                .sum();
            total += wc * a[h] * row;
        }
    }
    Ok(total / pred.len() as f64)
}

/// Loss and its (sub)gradient with respect to `pred`; the gradient at
/// `pred == truth` is taken as zero.
pub fn weighted_l1_grad(
    pred: &[f64],
    truth: &[f64],
    grid: &SphericalGrid,
    var_weights: &[f64],
) -> Result<(f64, Vec<f64>)> {
    let loss = weighted_l1(pred, truth, grid, var_weights)?;
    let (n_lat, n_lon) = (grid.n_lat(), grid.n_lon());
    let a = grid.area_weights();
    let norm = pred.len() as f64;
    let grad = pred
        .iter()
        .zip(truth)
        .enumerate()
        .map(|(i, (p, t))| {
            let c = i / (n_lat * n_lon);
            let h = (i / n_lon) % n_lat;
            let sign = if p > t {
                1.0
            } else if p < t {
                -1.0
            } else {
                0.0
            };
            sign * var_weights[c] * a[h] / norm
        })
        .collect();
    Ok((loss, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn examples() {
        let grid = SphericalGrid::new(2, 4).unwrap();
        let truth: Vec<f64> = (0..8).map(|i| i as f64).collect();
        assert_eq!(weighted_l1(&truth, &truth, &grid, &[1.0]).unwrap(), 0.0);

        let shifted: Vec<f64> = truth.iter().map(|t| t + 0.7).collect();
        assert_abs_diff_eq!(
            weighted_l1(&shifted, &truth, &grid, &[1.0]).unwrap(),
            0.7,
            epsilon = 1e-15
        );

        // Ring errors e1 on the southern row, e2 on the northern row.
        let (e1, e2) = (0.3, 2.0);
        let pred: Vec<f64> = (0..8).map(|i| truth[i] + if i < 4 { e1 } else { e2 }).collect();
        let a = grid.area_weights();
        assert_abs_diff_eq!(
            weighted_l1(&pred, &truth, &grid, &[1.0]).unwrap(),
            (a[0] * e1 + a[1] * e2) / 2.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn rejects_bad_shapes_and_weights() {
        let grid = SphericalGrid::new(2, 4).unwrap();
        assert!(weighted_l1(&[0.0; 8], &[0.0; 7], &grid, &[1.0]).is_err());
        assert!(weighted_l1(&[0.0; 8], &[0.0; 8], &grid, &[1.0, 1.0]).is_err());
        assert!(weighted_l1(&[0.0; 8], &[0.0; 8], &grid, &[0.0]).is_err());
    }

    #[test]
    fn invariant_to_joint_longitude_permutation() {
        let grid = SphericalGrid::new(3, 5).unwrap();
        let pred: Vec<f64> = (0..30).map(|i| (i as f64 * 0.37).sin()).collect();
        let truth: Vec<f64> = (0..30).map(|i| (i as f64 * 0.11).cos()).collect();
        let perm = [3, 0, 4, 1, 2];
        let permute = |x: &[f64]| -> Vec<f64> { (0..30).map(|i| x[(i / 5) * 5 + perm[i % 5]]).collect() };
        let w = [1.0, 2.5];
        assert_abs_diff_eq!(
            weighted_l1(&pred, &truth, &grid, &w).unwrap(),
            weighted_l1(&permute(&pred), &permute(&truth), &grid, &w).unwrap(),
            epsilon = 1e-14
        );
    }
}
