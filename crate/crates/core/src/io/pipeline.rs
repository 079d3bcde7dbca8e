//! The experiment as a chain of stages, each reading the previous stage's
//! artifacts from the output directory.
//!
//! ```text
//! out/
//!   config.resolved.toml
//!   data/{train,val,test}.fld
//!   checkpoints/pretrained.json, variational.json
//!   ensembles/<scheme>.fld, <scheme>.json
//!   metrics.csv, metrics.json
//!   ablation.csv, ablation.json, ablation_ssr.csv
//! ```

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::field_file::{read_fields, write_fields, FieldRecord};
use super::seeds::{indexed_seed, seed_tree};
use crate::dynamics::{make_dataset, Trajectory};
use crate::ensemble::{
    generate_ensemble, EnsembleConfig, EnsembleRun, MemberFailure, MemberRun, ModelFamily, PerturbationSetup, Scheme,
    VariationalForecaster,
};
use crate::error::{Error, Result};
use crate::metrics::{metric_table, ForecastCase, MetricReport, MetricRow};
use crate::perturbation::StatePair;
use crate::rng::rng_from_seed;
use crate::varnet::{posttrain_vi, pretrain, Forecaster, LossBreakdown, Normalizer, TrainingPair, VariationalParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    GenData,
    Pretrain,
    Posttrain,
    Ensemble,
    Metrics,
    Ablation,
    All,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::GenData => "gen-data",
            Stage::Pretrain => "pretrain",
            Stage::Posttrain => "posttrain",
            Stage::Ensemble => "ensemble",
            Stage::Metrics => "metrics",
            Stage::Ablation => "ablation",
            Stage::All => "all",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Stage::GenData,
            Stage::Pretrain,
            Stage::Posttrain,
            Stage::Ensemble,
            Stage::Metrics,
            Stage::Ablation,
            Stage::All,
        ]
        .into_iter()
        .find(|st| st.name() == s)
        .ok_or_else(|| Error::config("stage", format!("unknown stage `{s}`")))
    }
}

/// Schemes run by the `ablation` stage, in table order.
pub const ABLATION_SCHEMES: [Scheme; 3] = [Scheme::EpistemicOnly, Scheme::AleatoricOnly, Scheme::Hybrid];

/// Schemes the `all` stage forecasts before scoring.
pub const ALL_STAGE_SCHEMES: [Scheme; 3] = [Scheme::Deterministic, Scheme::GaussianBaseline, Scheme::Hybrid];

#[derive(Debug, Serialize, Deserialize)]
struct PretrainCheckpoint {
    forecaster: Forecaster,
    train_loss: Vec<f64>,
    val_loss: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct VariationalCheckpoint {
    params: VariationalParams,
    history: Vec<LossBreakdown>,
    val_l1_mean_weights: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct MemberSeeds {
    theta_index: usize,
    field_index: usize,
    theta_seed: u64,
    field_seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RunManifest {
    init_index: usize,
    master_seed: u64,
    members: Vec<MemberSeeds>,
    failures: Vec<MemberFailure>,
}

/// Seed record and layout of an ensemble archive; the states live in the
/// matching field file, init-major, then member, then lead.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct EnsembleManifest {
    scheme: Scheme,
    config: EnsembleConfig,
    runs: Vec<RunManifest>,
}

/// Runs stages against one output directory.
#[derive(Debug, Clone)]
pub struct Pipeline {
    cfg: ExperimentConfig,
    out: PathBuf,
}

/// Paths written by a stage.
pub type Artifacts = Vec<PathBuf>;

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path, stage: &'static str) -> Result<T> {
    if !path.exists() {
        return Err(Error::Prerequisite {
            stage,
            path: path.to_path_buf(),
        });
    }
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

fn write_csv(path: &Path, rows: &[MetricRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Format(e.to_string()))?;
    for r in rows {
        w.serialize(r).map_err(|e| Error::Format(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Consecutive triples `(s[i-1], s[i], s[i+1])` of a trajectory.
pub fn training_pairs(traj: &Trajectory) -> Vec<TrainingPair> {
    traj.states
        .windows(3)
        .map(|w| TrainingPair {
            prev: w[0].clone(),
            curr: w[1].clone(),
            next: w[2].clone(),
        })
        .collect()
}

impl Pipeline {
    pub fn new(cfg: ExperimentConfig, out: impl Into<PathBuf>) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { cfg, out: out.into() })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.cfg
    }

    pub fn out_dir(&self) -> &Path {
        &self.out
    }

    fn dir(&self, sub: &str) -> Result<PathBuf> {
        let d = self.out.join(sub);
        fs::create_dir_all(&d)?;
        Ok(d)
    }

    fn data_path(&self, split: &str) -> PathBuf {
        self.out.join("data").join(format!("{split}.fld"))
    }

    fn ensemble_paths(&self, scheme: Scheme) -> (PathBuf, PathBuf) {
        let d = self.out.join("ensembles");
        (d.join(format!("{scheme}.fld")), d.join(format!("{scheme}.json")))
    }

    fn write_resolved_config(&self) -> Result<PathBuf> {
        fs::create_dir_all(&self.out)?;
        let path = self.out.join("config.resolved.toml");
        fs::write(&path, self.cfg.to_toml()?)?;
        Ok(path)
    }

    /// Run `stage`; `mode` selects the scheme for the `ensemble` stage.
    pub fn run(&self, stage: Stage, mode: Option<Scheme>) -> Result<Artifacts> {
        let mut written = vec![self.write_resolved_config()?];
        match stage {
            Stage::GenData => written.extend(self.gen_data()?),
            Stage::Pretrain => written.extend(self.pretrain()?),
            Stage::Posttrain => written.extend(self.posttrain()?),
            Stage::Ensemble => written.extend(self.ensemble(mode.unwrap_or(self.cfg.ensemble.mode))?),
            Stage::Metrics => written.extend(self.metrics()?),
            Stage::Ablation => written.extend(self.ablation()?),
            Stage::All => {
                written.extend(self.gen_data()?);
                written.extend(self.pretrain()?);
                written.extend(self.posttrain()?);
                for scheme in ALL_STAGE_SCHEMES {
                    written.extend(self.ensemble(scheme)?);
                }
                written.extend(self.metrics()?);
                written.extend(self.ablation()?);
            }
        }
        Ok(written)
    }

    pub fn gen_data(&self) -> Result<Artifacts> {
        let c = &self.cfg;
        let ds = make_dataset(
            &c.dynamics,
            c.grid.n_lat,
            c.grid.n_lon,
            c.data.n_train,
            c.data.n_val,
            c.data.n_test,
            seed_tree(c.seeds.master, &["dynamics"]),
        )?;
        self.dir("data")?;
        let mut written = Vec::new();
        let mut offset = 0u64;
        for (name, traj) in [("train", &ds.train), ("val", &ds.val), ("test", &ds.test)] {
            let records: Vec<FieldRecord> = traj
                .states
                .iter()
                .enumerate()
                .map(|(t, s)| FieldRecord {
                    variables: traj.variables.clone(),
                    n_lat: traj.n_lat,
                    n_lon: traj.n_lon,
                    time_index: offset + t as u64,
                    values: s.clone(),
                })
                .collect();
            offset += traj.len() as u64;
            let path = self.data_path(name);
            write_fields(&path, &records)?;
            written.push(path);
        }
        Ok(written)
    }

    pub fn load_split(&self, split: &str) -> Result<Trajectory> {
        let path = self.data_path(split);
        if !path.exists() {
            return Err(Error::Prerequisite {
                stage: "gen-data",
                path,
            });
        }
        let records = read_fields(&path)?;
        let c = &self.cfg;
        for r in &records {
            if r.variables != c.dynamics.variables || r.n_lat != c.grid.n_lat || r.n_lon != c.grid.n_lon {
                return Err(Error::Format(format!(
                    "{} does not match the configured grid and variables; rerun gen-data",
                    path.display()
                )));
            }
        }
        Ok(Trajectory {
            variables: c.dynamics.variables.clone(),
            n_lat: c.grid.n_lat,
            n_lon: c.grid.n_lon,
            interval_hours: c.dynamics.output_interval,
            seed: seed_tree(c.seeds.master, &["dynamics"]),
            states: records.into_iter().map(|r| r.values).collect(),
        })
    }

    pub fn pretrain(&self) -> Result<Artifacts> {
        let c = &self.cfg;
        let grid = c.grid()?;
        let train = training_pairs(&self.load_split("train")?);
        let val = training_pairs(&self.load_split("val")?);
        let norm = Normalizer::fit(&train, c.variables().len())?;
        let mut rng = rng_from_seed(seed_tree(c.seeds.master, &["pretrain"]));
        let init = Forecaster::new(c.variables().to_vec(), grid.len(), &c.net.hidden, norm, &mut rng)?;
        let (forecaster, train_loss) = pretrain(&init, &train, &grid, &c.var_weights(), &c.pretrain, &mut rng)?;
        let val_loss = forecaster.batch_loss(&val, &grid, &c.var_weights())?;
        let path = self.dir("checkpoints")?.join("pretrained.json");
        write_json(
            &path,
            &PretrainCheckpoint {
                forecaster,
                train_loss,
                val_loss,
            },
        )?;
        Ok(vec![path])
    }

    fn load_pretrained(&self) -> Result<Forecaster> {
        let ck: PretrainCheckpoint = read_json(&self.out.join("checkpoints").join("pretrained.json"), "pretrain")?;
        Ok(ck.forecaster)
    }

    pub fn posttrain(&self) -> Result<Artifacts> {
        let c = &self.cfg;
        let grid = c.grid()?;
        let pretrained = self.load_pretrained()?;
        let train = training_pairs(&self.load_split("train")?);
        let val = training_pairs(&self.load_split("val")?);
        let init = VariationalParams::from_net(
            pretrained.net(),
            c.vi.init_std,
            c.vi.prior_std,
            c.vi.beta_kl,
            c.vi.prior_centre,
        )?;
        let mut rng = rng_from_seed(seed_tree(c.seeds.master, &["posttrain"]));
        let (params, history) = posttrain_vi(
            &pretrained,
            &train,
            init,
            &grid,
            &c.var_weights(),
            &c.vi.train,
            &mut rng,
        )?;
        let val_l1_mean_weights =
            pretrained
                .with_weights(params.mean_net())?
                .batch_loss(&val, &grid, &c.var_weights())?;
        let path = self.dir("checkpoints")?.join("variational.json");
        write_json(
            &path,
            &VariationalCheckpoint {
                params,
                history,
                val_l1_mean_weights,
            },
        )?;
        Ok(vec![path])
    }

    fn load_variational(&self) -> Result<VariationalForecaster> {
        let ck: VariationalCheckpoint = read_json(&self.out.join("checkpoints").join("variational.json"), "posttrain")?;
        VariationalForecaster::new(self.load_pretrained()?, ck.params)
    }

    fn perturbation_setup(&self) -> Result<PerturbationSetup> {
        let c = &self.cfg;
        PerturbationSetup::new(
            &c.grid()?,
            c.spectrum,
            c.ar1,
            c.perturbation.sppt.clone(),
            c.perturbation.init_mode,
            c.perturbation.gaussian_sigma,
        )
    }

    /// Test-split indices `t0` of each initialisation: the forecast starts
    /// from `(s[t0-1], s[t0])`.
    pub fn init_indices(&self) -> Vec<usize> {
        let m = &self.cfg.metrics;
        (0..m.n_inits).map(|k| 1 + k * m.init_spacing).collect()
    }

    /// Forecast every initialisation with one scheme.
    pub fn forecast(&self, scheme: Scheme) -> Result<Vec<EnsembleRun>> {
        let test = self.load_split("test")?;
        let setup = self.perturbation_setup()?;
        let cfg = EnsembleConfig {
            mode: scheme,
            ..self.cfg.ensemble.clone()
        };
        let variational = match scheme {
            Scheme::EpistemicOnly | Scheme::AleatoricOnly | Scheme::Hybrid => Some(self.load_variational()?),
            Scheme::Deterministic | Scheme::GaussianBaseline => None,
        };
        let pretrained = self.load_pretrained()?;
        self.init_indices()
            .into_iter()
            .enumerate()
            .map(|(k, t0)| {
                let init = StatePair::new(
                    self.cfg.variables().to_vec(),
                    test.states[t0 - 1].clone(),
                    test.states[t0].clone(),
                )?;
                let seed = indexed_seed(self.cfg.seeds.master, "init", k);
                match &variational {
                    Some(family) => run_family(family, &init, &setup, &cfg, seed),
                    None => run_family(&pretrained, &init, &setup, &cfg, seed),
                }
            })
            .collect()
    }

    fn save_ensemble(&self, scheme: Scheme, runs: &[EnsembleRun]) -> Result<Artifacts> {
        self.dir("ensembles")?;
        let (fld, json) = self.ensemble_paths(scheme);
        let c = &self.cfg;
        let mut records = Vec::new();
        let mut manifests = Vec::new();
        for (run, t0) in runs.iter().zip(self.init_indices()) {
            for member in &run.members {
                for (lead, s) in member.states.iter().enumerate() {
                    records.push(FieldRecord {
                        variables: c.variables().to_vec(),
                        n_lat: c.grid.n_lat,
                        n_lon: c.grid.n_lon,
                        time_index: (lead + 1) as u64,
                        values: s.clone(),
                    });
                }
            }
            manifests.push(RunManifest {
                init_index: t0,
                master_seed: run.master_seed,
                members: run
                    .members
                    .iter()
                    .map(|m| MemberSeeds {
                        theta_index: m.theta_index,
                        field_index: m.field_index,
                        theta_seed: m.theta_seed,
                        field_seed: m.field_seed,
                    })
                    .collect(),
                failures: run.failures.clone(),
            });
        }
        write_fields(&fld, &records)?;
        let config = runs
            .first()
            .map(|r| r.config.clone())
            .unwrap_or_else(|| c.ensemble.clone());
        write_json(
            &json,
            &EnsembleManifest {
                scheme,
                config,
                runs: manifests,
            },
        )?;
        Ok(vec![fld, json])
    }

    /// Read back the runs written by the `ensemble` stage.
    pub fn load_ensemble(&self, scheme: Scheme) -> Result<(Vec<usize>, Vec<EnsembleRun>)> {
        let (fld, json) = self.ensemble_paths(scheme);
        let manifest: EnsembleManifest = read_json(&json, "ensemble")?;
        let mut records = read_fields(&fld)?.into_iter();
        let horizon = manifest.config.horizon;
        let mut inits = Vec::new();
        let mut runs = Vec::new();
        for rm in manifest.runs {
            let mut members = Vec::with_capacity(rm.members.len());
            for ms in rm.members {
                let states: Vec<Vec<f64>> = records.by_ref().take(horizon).map(|r| r.values).collect();
                if states.len() != horizon {
                    return Err(Error::Truncated {
                        expected: horizon,
                        found: states.len(),
                    });
                }
                members.push(MemberRun {
                    theta_index: ms.theta_index,
                    field_index: ms.field_index,
                    theta_seed: ms.theta_seed,
                    field_seed: ms.field_seed,
                    states,
                });
            }
            inits.push(rm.init_index);
            runs.push(EnsembleRun {
                config: manifest.config.clone(),
                master_seed: rm.master_seed,
                members,
                failures: rm.failures,
            });
        }
        Ok((inits, runs))
    }

    pub fn ensemble(&self, scheme: Scheme) -> Result<Artifacts> {
        let runs = self.forecast(scheme)?;
        self.save_ensemble(scheme, &runs)
    }

    /// Score runs of one scheme against the test split.
    pub fn score(&self, inits: &[usize], runs: &[EnsembleRun]) -> Result<Vec<MetricReport>> {
        let test = self.load_split("test")?;
        let horizon = self.cfg.ensemble.horizon;
        let truths: Vec<Vec<Vec<f64>>> = inits
            .iter()
            .map(|&t0| {
                test.states
                    .get(t0 + 1..=t0 + horizon)
                    .map(|s| s.to_vec())
                    .ok_or_else(|| Error::domain(format!("test split too short for initialisation at {t0}")))
            })
            .collect::<Result<_>>()?;
        let cases: Vec<ForecastCase> = runs
            .iter()
            .zip(&truths)
            .map(|(run, truth)| ForecastCase { run, truth })
            .collect();
        metric_table(
            &cases,
            self.cfg.variables(),
            &self.cfg.grid()?,
            &self.cfg.lead_steps()?,
            self.cfg.dynamics.output_interval,
        )
    }

    pub fn metrics(&self) -> Result<Artifacts> {
        let mut reports = Vec::new();
        let mut found = false;
        for scheme in Scheme::ALL {
            if !self.ensemble_paths(scheme).1.exists() {
                continue;
            }
            found = true;
            let (inits, runs) = self.load_ensemble(scheme)?;
            reports.extend(self.score(&inits, &runs)?);
        }
        if !found {
            return Err(Error::Prerequisite {
                stage: "ensemble",
                path: self.out.join("ensembles"),
            });
        }
        self.write_reports("metrics", &reports)
    }

    fn write_reports(&self, name: &str, reports: &[MetricReport]) -> Result<Artifacts> {
        let rows: Vec<MetricRow> = reports.iter().flat_map(MetricReport::rows).collect();
        let csv_path = self.out.join(format!("{name}.csv"));
        let json_path = self.out.join(format!("{name}.json"));
        write_csv(&csv_path, &rows)?;
        write_json(&json_path, &reports)?;
        Ok(vec![csv_path, json_path])
    }

    /// Epistemic-only, aleatoric-only and hybrid ensembles on identical
    /// seeds, scored side by side.
    pub fn ablation(&self) -> Result<Artifacts> {
        let inits = self.init_indices();
        let mut reports = Vec::new();
        for scheme in ABLATION_SCHEMES {
            let runs = self.forecast(scheme)?;
            reports.extend(self.score(&inits, &runs)?);
        }
        let mut written = self.write_reports("ablation", &reports)?;
        let table = ssr_table(&reports);
        let path = self.out.join("ablation_ssr.csv");
        let mut w = csv::Writer::from_path(&path).map_err(|e| Error::Format(e.to_string()))?;
        let mut header = vec!["variable".to_string(), "lead_hours".to_string()];
        header.extend(ABLATION_SCHEMES.iter().map(|s| s.name().to_string()));
        w.write_record(&header).map_err(|e| Error::Format(e.to_string()))?;
        for row in &table {
            let mut rec = vec![row.variable.clone(), row.lead_hours.to_string()];
            rec.extend(row.ssr.iter().map(|v| v.map(|x| x.to_string()).unwrap_or_default()));
            w.write_record(&rec).map_err(|e| Error::Format(e.to_string()))?;
        }
        w.flush()?;
        written.push(path);
        Ok(written)
    }
}

fn run_family<F: ModelFamily>(
    family: &F,
    init: &StatePair,
    setup: &PerturbationSetup,
    cfg: &EnsembleConfig,
    seed: u64,
) -> Result<EnsembleRun> {
    generate_ensemble(family, init, setup, cfg, seed)
}

/// SSR per (variable, lead) with one column per ablation scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct SsrRow {
    pub variable: String,
    pub lead_hours: f64,
    pub ssr: [Option<f64>; 3],
}

pub fn ssr_table(reports: &[MetricReport]) -> Vec<SsrRow> {
    let mut rows: Vec<SsrRow> = Vec::new();
    for r in reports {
        let Some(col) = ABLATION_SCHEMES.iter().position(|s| *s == r.scheme) else {
            continue;
        };
        let idx = match rows
            .iter()
            .position(|x| x.variable == r.variable && x.lead_hours == r.lead_hours)
        {
            Some(i) => i,
            None => {
                rows.push(SsrRow {
                    variable: r.variable.clone(),
                    lead_hours: r.lead_hours,
                    ssr: [None; 3],
                });
                rows.len() - 1
            }
        };
        rows[idx].ssr[col] = r.ssr;
    }
    rows
}
