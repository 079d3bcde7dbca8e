//! Latitude-weighted ensemble verification: ensemble-mean RMSE, fair CRPS,
//! spread and the size-corrected spread/skill ratio.

use serde::{Deserialize, Serialize};

use crate::ensemble::{EnsembleRun, Scheme};
use crate::error::{Error, Result};
use crate::sphere::SphericalGrid;

/// `K` members and the truth at the same points, with per-point area
/// weights.
#[derive(Debug, Clone)]
pub struct VerificationSet<'a> {
    members: Vec<&'a [f64]>,
    truth: &'a [f64],
    weights: &'a [f64],
}

impl<'a> VerificationSet<'a> {
    pub fn new(members: Vec<&'a [f64]>, truth: &'a [f64], weights: &'a [f64]) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::Degenerate("verification set with no members".into()));
        }
        for len in members.iter().map(|m| m.len()).chain([weights.len()]) {
            if len != truth.len() {
                return Err(Error::DimensionMismatch {
                    what: "verification points",
                    expected: truth.len(),
                    found: len,
                });
            }
        }
        if truth.is_empty() {
            return Err(Error::Degenerate("verification set with no points".into()));
        }
        Ok(Self {
            members,
            truth,
            weights,
        })
    }

    pub fn k(&self) -> usize {
        self.members.len()
    }

    fn require_pair(&self, what: &str) -> Result<()> {
        if self.k() < 2 {
            return Err(Error::Degenerate(format!(
                "{what} needs at least two members, got {}",
                self.k()
            )));
        }
        Ok(())
    }

    fn weighted_mean(&self, per_point: impl Iterator<Item = f64>) -> f64 {
        let (num, den) = per_point
            .zip(self.weights)
            .fold((0.0, 0.0), |(n, d), (v, w)| (n + w * v, d + w));
        num / den
    }

    fn point_mean(&self, i: usize) -> f64 {
        self.members.iter().map(|m| m[i]).sum::<f64>() / self.k() as f64
    }

    /// Weighted mean of `(y - x̄)²`.
    pub fn mean_squared_error(&self) -> f64 {
        self.weighted_mean((0..self.truth.len()).map(|i| {
            let e = self.truth[i] - self.point_mean(i);
            e * e
        }))
    }

    /// Weighted mean of the unbiased member variance.
    pub fn mean_variance(&self) -> Result<f64> {
        self.require_pair("spread")?;
        let k = self.k() as f64;
        Ok(self.weighted_mean((0..self.truth.len()).map(|i| {
            let mean = self.point_mean(i);
            self.members.iter().map(|m| (m[i] - mean).powi(2)).sum::<f64>() / (k - 1.0)
        })))
    }

    /// Weighted mean of `|x̄ - y|`.
    pub fn mean_absolute_error(&self) -> f64 {
        self.weighted_mean((0..self.truth.len()).map(|i| (self.point_mean(i) - self.truth[i]).abs()))
    }

    fn crps_at(&self, i: usize, sorted: &mut Vec<f64>) -> f64 {
        let k = self.k();
        let y = self.truth[i];
        sorted.clear();
        sorted.extend(self.members.iter().map(|m| m[i]));
        sorted.sort_by(f64::total_cmp);
        let skill: f64 = sorted.iter().map(|x| (x - y).abs()).sum::<f64>() / k as f64;
        // Σ_{m,m'} |x_m - x_m'| over ordered pairs = 2 Σ_j (2j - K + 1) x_(j)
        let pair_sum: f64 = sorted
            .iter()
            .enumerate()
            .map(|(j, x)| (2.0 * j as f64 - k as f64 + 1.0) * x)
            .sum::<f64>()
            * 2.0;
        skill - pair_sum / (2.0 * (k * (k - 1)) as f64)
    }
}

/// `sqrt(Σ a (y - x̄)² / Σ a)`.
pub fn ensemble_mean_rmse(vs: &VerificationSet) -> f64 {
    vs.mean_squared_error().sqrt()
}

/// Weighted mean of `(1/K) Σ_m |x_m - y| - (1/(2K(K-1))) Σ_{m,m'} |x_m - x_m'|`,
/// the double sum running over ordered pairs.
pub fn fair_crps(vs: &VerificationSet) -> Result<f64> {
    vs.require_pair("fair CRPS")?;
    let mut scratch = Vec::with_capacity(vs.k());
    let per_point: Vec<f64> = (0..vs.truth.len()).map(|i| vs.crps_at(i, &mut scratch)).collect();
    Ok(vs.weighted_mean(per_point.into_iter()))
}

/// Root of the weighted mean unbiased ensemble variance.
pub fn spread(vs: &VerificationSet) -> Result<f64> {
    Ok(vs.mean_variance()?.sqrt())
}

/// `sqrt((K+1)/K) · spread / skill`.
pub fn ssr_from(spread: f64, skill: f64, k: usize) -> Result<f64> {
    if !(skill > 0.0) {
        return Err(Error::Degenerate(format!(
            "spread/skill ratio undefined for skill {skill}"
        )));
    }
    if k == 0 {
        return Err(Error::Degenerate("spread/skill ratio needs K >= 1".into()));
    }
    let k = k as f64;
    Ok(((k + 1.0) / k).sqrt() * spread / skill)
}

pub fn spread_skill_ratio(vs: &VerificationSet) -> Result<f64> {
    ssr_from(spread(vs)?, ensemble_mean_rmse(vs), vs.k())
}

/// Scores for one (scheme, variable, lead) cell after averaging over
/// initialisations. Squared quantities are averaged first and rooted last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub scheme: Scheme,
    pub variable: String,
    pub lead_hours: f64,
    pub rmse: f64,
    /// Absent for single-member forecasts.
    pub crps: Option<f64>,
    pub spread: Option<f64>,
    pub ssr: Option<f64>,
    pub mae: Option<f64>,
    pub k: usize,
    pub n_inits: usize,
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub scheme: String,
    pub variable: String,
    pub lead_hours: f64,
    pub metric: String,
    pub value: f64,
    pub n_members: usize,
    pub n_inits: usize,
}

impl MetricReport {
    pub fn rows(&self) -> Vec<MetricRow> {
        let mut named = vec![("rmse", Some(self.rmse))];
        if self.k >= 2 {
            named.extend([("crps", self.crps), ("spread", self.spread), ("ssr", self.ssr)]);
        } else {
            named.push(("mae", self.mae));
        }
        named
            .into_iter()
            .filter_map(|(name, v)| v.map(|value| (name, value)))
            .map(|(metric, value)| MetricRow {
                scheme: self.scheme.name().to_string(),
                variable: self.variable.clone(),
                lead_hours: self.lead_hours,
                metric: metric.to_string(),
                value,
                n_members: self.k,
                n_inits: self.n_inits,
            })
            .collect()
    }
}

/// An ensemble forecast and the verifying truth at leads `1..=horizon`.
#[derive(Debug, Clone, Copy)]
pub struct ForecastCase<'a> {
    pub run: &'a EnsembleRun,
    pub truth: &'a [Vec<f64>],
}

/// Largest tolerated fraction of failed members.
pub const MAX_FAILURE_FRACTION: f64 = 0.05;

/// One report per (variable, lead) for a set of initialisations of the same
/// scheme. Leads are step indices; `hours_per_step` converts them.
pub fn metric_table(
    cases: &[ForecastCase],
    variables: &[String],
    grid: &SphericalGrid,
    leads: &[usize],
    hours_per_step: f64,
) -> Result<Vec<MetricReport>> {
    if leads.is_empty() || cases.is_empty() {
        return Ok(Vec::new());
    }
    let scheme = cases[0].run.config.mode;
    let (failed, total) = cases.iter().fold((0, 0), |(f, t), c| {
        (f + c.run.failures.len(), t + c.run.failures.len() + c.run.members.len())
    });
    if failed as f64 > MAX_FAILURE_FRACTION * total as f64 {
        return Err(Error::TooManyFailures { failed, total });
    }
    let n = grid.len();
    let weights = grid.point_weights();
    let mut reports = Vec::new();
    for (v, variable) in variables.iter().enumerate() {
        for &lead in leads {
            let (mut mse, mut var, mut crps, mut mae) = (0.0, 0.0, 0.0, 0.0);
            let mut k_min = usize::MAX;
            for case in cases {
                let truth_state = case
                    .truth
                    .get(lead.wrapping_sub(1))
                    .ok_or_else(|| Error::domain(format!("no truth for lead {lead}")))?;
                let states = case.run.at_lead(lead)?;
                let slice = |s: &[f64]| -> Result<std::ops::Range<usize>> {
                    if s.len() != n * variables.len() {
                        return Err(Error::DimensionMismatch {
                            what: "forecast state",
                            expected: n * variables.len(),
                            found: s.len(),
                        });
                    }
                    Ok(v * n..(v + 1) * n)
                };
                let range = slice(truth_state)?;
                let members: Vec<&[f64]> = states.iter().map(|s| slice(s).map(|r| &s[r])).collect::<Result<_>>()?;
                let vs = VerificationSet::new(members, &truth_state[range], &weights)?;
                k_min = k_min.min(vs.k());
                mse += vs.mean_squared_error();
                if vs.k() >= 2 {
                    var += vs.mean_variance()?;
                    crps += fair_crps(&vs)?;
                } else {
                    mae += vs.mean_absolute_error();
                }
            }
            let count = cases.len() as f64;
            let rmse = (mse / count).sqrt();
            let ensemble = k_min >= 2;
            let spread = (var / count).sqrt();
            reports.push(MetricReport {
                scheme,
                variable: variable.clone(),
                lead_hours: lead as f64 * hours_per_step,
                rmse,
                crps: ensemble.then_some(crps / count),
                spread: ensemble.then_some(spread),
                ssr: if ensemble {
                    ssr_from(spread, rmse, k_min).ok()
                } else {
                    None
                },
                mae: (!ensemble).then_some(mae / count),
                k: k_min,
                n_inits: cases.len(),
            });
        }
    }
    Ok(reports)
}
