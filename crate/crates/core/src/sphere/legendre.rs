//! Legendre and associated Legendre functions.
//!
//! Everything here is evaluated by upward recurrences; nothing is obtained by
//! differentiating polynomials symbolically.

use std::f64::consts::PI;

use crate::error::{Error, Result};

fn check_argument(x: f64) -> Result<()> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::domain(format!("Legendre argument {x} outside [-1, 1]")));
    }
    Ok(())
}

/// `P_0(x) ..= P_degree(x)` from the three-term recurrence
/// `l P_l = (2l - 1) x P_{l-1} - (l - 1) P_{l-2}`.
pub fn legendre_table(degree: usize, x: f64) -> Vec<f64> {
    let mut p = Vec::with_capacity(degree + 1);
    p.push(1.0);
    if degree == 0 {
        return p;
    }
    p.push(x);
    for l in 2..=degree {
        let lf = l as f64;
        let next = ((2.0 * lf - 1.0) * x * p[l - 1] - (lf - 1.0) * p[l - 2]) / lf;
        p.push(next);
    }
    p
}

/// Legendre polynomial `P_l(x)`.
pub fn legendre_p(l: usize, x: f64) -> Result<f64> {
    check_argument(x)?;
    Ok(legendre_table(l, x)[l])
}

/// Associated Legendre function `P_l^m(x)` with the Condon-Shortley phase,
/// `(-1)^m (1 - x^2)^{|m|/2} d^{|m|}/dx^{|m|} P_l(x)`.
///
/// Negative orders use `|m|` in both the derivative and the phase, so
/// `P_l^{-m} = P_l^{m}` under this convention.
pub fn assoc_legendre(l: usize, m: i64, x: f64) -> Result<f64> {
    check_argument(x)?;
    let order = m.unsigned_abs() as usize;
    if order > l {
        return Err(Error::domain(format!("order |m| = {order} exceeds degree l = {l}")));
    }

    // P_m^m = (-1)^m (2m - 1)!! (1 - x^2)^{m/2}
    let sin_like = ((1.0 - x) * (1.0 + x)).max(0.0).sqrt();
    let mut p_mm = 1.0;
    for i in 1..=order {
        p_mm *= -((2 * i - 1) as f64) * sin_like;
    }
    if l == order {
        return Ok(p_mm);
    }

    let mut p_prev = p_mm;
    let mut p_curr = x * (2 * order + 1) as f64 * p_mm;
    for ll in (order + 2)..=l {
        let lf = ll as f64;
        let mf = order as f64;
        let next = ((2.0 * lf - 1.0) * x * p_curr - (lf + mf - 1.0) * p_prev) / (lf - mf);
        p_prev = p_curr;
        p_curr = next;
    }
    Ok(p_curr)
}

/// `ln((l - m)! / (l + m)!)` by summing logarithms.
pub(crate) fn ln_factorial_ratio(l: usize, m: usize) -> f64 {
    ((l - m + 1)..=(l + m)).map(|k| -(k as f64).ln()).sum()
}

/// Table of orthonormalised associated Legendre values
/// `sqrt((2l+1)/(4π) (l-m)!/(l+m)!) P_l^m(x)` for `0 <= m <= l <= degree`.
///
/// Produced directly by the normalised recurrences, so nothing over- or
/// underflows at high degree. Entry `(l, m)` is at `l (l + 1) / 2 + m`.
pub fn normalized_assoc_legendre_table(degree: usize, x: f64) -> Vec<f64> {
    let idx = |l: usize, m: usize| l * (l + 1) / 2 + m;
    let mut out = vec![0.0; (degree + 1) * (degree + 2) / 2];
    let sin_like = ((1.0 - x) * (1.0 + x)).max(0.0).sqrt();

    out[0] = (1.0 / (4.0 * PI)).sqrt();
    for m in 1..=degree {
        let mf = m as f64;
        out[idx(m, m)] = -((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * sin_like * out[idx(m - 1, m - 1)];
    }
    for m in 0..degree {
        out[idx(m + 1, m)] = (2.0 * m as f64 + 3.0).sqrt() * x * out[idx(m, m)];
    }
    for m in 0..=degree {
        let mf = m as f64;
        for l in (m + 2)..=degree {
            let lf = l as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0)).sqrt();
            out[idx(l, m)] = a * (x * out[idx(l - 1, m)] - b * out[idx(l - 2, m)]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn legendre_low_degrees() {
        assert_eq!(legendre_p(0, 0.3).unwrap(), 1.0);
        assert_eq!(legendre_p(1, -0.7).unwrap(), -0.7);
        assert_abs_diff_eq!(legendre_p(2, 0.5).unwrap(), -0.125, epsilon = 1e-15);
    }

    #[test]
    fn legendre_rejects_outside_interval() {
        assert!(legendre_p(3, 1.0000001).is_err());
        assert!(assoc_legendre(3, 1, -1.5).is_err());
    }

    #[test]
    fn legendre_matches_closed_forms() {
        for &x in &[-1.0f64, -0.6, 0.0, 0.25, 0.9, 1.0] {
            let p3 = (5.0 * x * x * x - 3.0 * x) / 2.0;
            let p4 = (35.0 * x.powi(4) - 30.0 * x * x + 3.0) / 8.0;
            assert_abs_diff_eq!(legendre_p(3, x).unwrap(), p3, epsilon = 1e-14);
            assert_abs_diff_eq!(legendre_p(4, x).unwrap(), p4, epsilon = 1e-14);
        }
    }

    #[test]
    fn assoc_legendre_examples() {
        assert_abs_diff_eq!(assoc_legendre(1, 0, 0.5).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(assoc_legendre(1, 1, 0.0).unwrap(), -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(assoc_legendre(2, 2, 0.0).unwrap(), 3.0, epsilon = 1e-15);
        assert!(assoc_legendre(2, 3, 0.0).is_err());
        assert!(assoc_legendre(2, -3, 0.0).is_err());
    }

    #[test]
    fn assoc_legendre_closed_forms() {
        // P_2^1 = -3x sqrt(1-x^2), P_3^2 = 15 x (1-x^2), P_3^3 = -15 (1-x^2)^{3/2}
        for &x in &[-0.8f64, -0.1, 0.3, 0.75] {
            let s = (1.0 - x * x).sqrt();
            assert_abs_diff_eq!(assoc_legendre(2, 1, x).unwrap(), -3.0 * x * s, epsilon = 1e-13);
            assert_abs_diff_eq!(assoc_legendre(3, 2, x).unwrap(), 15.0 * x * s * s, epsilon = 1e-13);
            assert_abs_diff_eq!(assoc_legendre(3, -3, x).unwrap(), -15.0 * s * s * s, epsilon = 1e-13);
        }
    }

    #[test]
    fn normalized_table_agrees_with_log_space_route() {
        let degree = 24;
        for &x in &[-0.93, -0.2, 0.0, 0.41, 0.99] {
            let table = normalized_assoc_legendre_table(degree, x);
            for l in 0..=degree {
                for m in 0..=l {
                    let norm = ((2 * l + 1) as f64 / (4.0 * PI)).ln() + ln_factorial_ratio(l, m);
                    let direct = (0.5 * norm).exp() * assoc_legendre(l, m as i64, x).unwrap();
                    let got = table[l * (l + 1) / 2 + m];
                    assert!(
                        (got - direct).abs() <= 1e-10 * (1.0 + direct.abs()),
                        "l={l} m={m} x={x}: {got} vs {direct}"
                    );
                }
            }
        }
    }

    /// Gauss-Legendre nodes and weights by Newton iteration on `P_n`.
    fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
        (0..n)
            .map(|i| {
                let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
                for _ in 0..100 {
                    let p = legendre_table(n, x);
                    let dp = n as f64 * (x * p[n] - p[n - 1]) / (x * x - 1.0);
                    let dx = p[n] / dp;
                    x -= dx;
                    if dx.abs() < 1e-16 {
                        break;
                    }
                }
                let p = legendre_table(n, x);
                let dp = n as f64 * (x * p[n] - p[n - 1]) / (x * x - 1.0);
                (x, 2.0 / ((1.0 - x * x) * dp * dp))
            })
            .collect()
    }

    #[test]
    fn legendre_orthogonality_by_quadrature() {
        let rule = gauss_legendre(20);
        for l in 0..=8 {
            for lp in 0..=8 {
                let integral: f64 = rule
                    .iter()
                    .map(|&(x, w)| w * legendre_p(l, x).unwrap() * legendre_p(lp, x).unwrap())
                    .sum();
                let expected = if l == lp { 2.0 / (2 * l + 1) as f64 } else { 0.0 };
                assert_abs_diff_eq!(integral, expected, epsilon = 1e-10);
            }
        }
    }
}
