//! Reproducible experiment runner.
//!
//! An [`ExperimentSpec`] names a model source, a study, and a master seed;
//! [`run_experiment`] expands it into per-replication seeds, runs the
//! study, and returns a [`Report`] holding the plottable rows, a scalar
//! summary, and everything needed to reproduce the run byte for byte.
//! Reports write their CSV and JSON atomically (temp file plus rename).

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{greedy_unconstrained, newgreedy_cardinality};
use crate::cost::{cost, CostParams};
use crate::error::{Error, Result};
use crate::exact::{
    add_lambda_term, error_table, exact_gibbs_restricted, exhaustive_optimum,
    exhaustive_optimum_at_cardinality, GibbsDistribution, ENUMERATION_CAP,
};
use crate::learning::{check_feasibility, run_gibbs_learning, LearningParams};
use crate::model::GaussianModel;
use crate::sampler::{run_basic_gibbs, run_fixed_cardinality_gibbs, RunBudget};

/// Counter-based seed derivation: replication k of a study always gets the
/// same seed no matter how many replications run, so extending a sweep
/// never shifts earlier runs.
pub fn derive_seed(master: u64, counter: u64) -> u64 {
    // splitmix64 finalizer over the xored inputs.
    let mut z = master ^ counter.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Where the covariance comes from.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum ModelSource {
    File { path: PathBuf },
    Generated { n: usize, seed: u64 },
}

impl ModelSource {
    pub fn load(&self) -> Result<GaussianModel> {
        match self {
            Self::File { path } => GaussianModel::load(path),
            Self::Generated { n, seed } => GaussianModel::generate(*n, *seed),
        }
    }
}

/// The sweep to run.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StudyKind {
    /// Expected priced cost versus beta: exact stationary expectation,
    /// finite chains, the priced greedy, and the optimum.
    CostVsBeta {
        lambda: f64,
        betas: Vec<f64>,
        gibbs_steps: u64,
        replications: u64,
    },
    /// Estimation error versus beta on a fixed-cardinality slice.
    ErrorVsBeta {
        nbar: usize,
        betas: Vec<f64>,
        gibbs_steps: u64,
        replications: u64,
    },
    /// Multiplier sample paths under the two-timescale learner.
    LambdaPaths {
        nbar_target: f64,
        beta: f64,
        steps: u64,
        paths: u64,
        lambda0: f64,
        step0: f64,
        projection_low: f64,
        projection_high: f64,
    },
}

/// A full experiment description; serializable so reports can embed it.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ExperimentSpec {
    pub name: String,
    pub model: ModelSource,
    pub study: StudyKind,
    pub master_seed: u64,
}

impl ExperimentSpec {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let spec: Self =
            serde_json::from_str(s).map_err(|e| Error::Parse(format!("experiment spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
            return Err(Error::InvalidParameter(format!(
                "experiment name must be nonempty [A-Za-z0-9_-], got {:?}",
                self.name
            )));
        }
        if let ModelSource::File { path } = &self.model {
            if !path.exists() {
                return Err(Error::InvalidParameter(format!(
                    "model file {} does not exist",
                    path.display()
                )));
            }
        }
        match &self.study {
            StudyKind::CostVsBeta { betas, replications, .. }
            | StudyKind::ErrorVsBeta { betas, replications, .. } => {
                if betas.is_empty() {
                    return Err(Error::InvalidParameter("study needs at least one beta".into()));
                }
                if !betas.iter().all(|b| b.is_finite() && *b > 0.0) {
                    return Err(Error::InvalidParameter("betas must be finite and > 0".into()));
                }
                if *replications == 0 {
                    return Err(Error::InvalidParameter("replications must be >= 1".into()));
                }
            }
            StudyKind::LambdaPaths { paths, steps, .. } => {
                if *paths == 0 || *steps == 0 {
                    return Err(Error::InvalidParameter("paths and steps must be >= 1".into()));
                }
            }
        }
        Ok(())
    }
}

/// Finished experiment: the spec that produced it, every seed used, the
/// plottable rows, and scalar results.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub spec: ExperimentSpec,
    pub seeds: Vec<u64>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub summary: BTreeMap<String, f64>,
}

impl Report {
    /// CSV rendering of the rows, header first.
    pub fn to_csv_string(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// Writes `<name>.csv` and `<name>.report.json` under `dir`.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        fs::create_dir_all(dir)?;
        let csv_path = dir.join(format!("{}.csv", self.spec.name));
        let json_path = dir.join(format!("{}.report.json", self.spec.name));
        write_atomic(&csv_path, self.to_csv_string().as_bytes())?;
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Parse(format!("report serialization: {e}")))?;
        write_atomic(&json_path, json.as_bytes())?;
        Ok((csv_path, json_path))
    }
}

/// Writes through a sibling temp file and renames over the target, so a
/// crash never leaves a half-written file behind.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidParameter(format!("{} has no file name", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp-{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

// Every row must parse back as the header's column count of numbers.
fn validate_rows(header: &[String], rows: &[Vec<f64>]) -> Result<()> {
    for (i, row) in rows.iter().enumerate() {
        if row.len() != header.len() {
            return Err(Error::Parse(format!(
                "row {i} has {} columns, header has {}",
                row.len(),
                header.len()
            )));
        }
        if let Some(bad) = row.iter().find(|v| !v.is_finite()) {
            return Err(Error::Parse(format!("row {i} holds a non-finite value {bad}")));
        }
    }
    Ok(())
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Runs the study described by the spec. Deterministic: the same spec
/// yields a byte-identical report.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Report> {
    spec.validate()?;
    let model = spec.model.load()?;
    let (seeds, header, rows, summary) = match &spec.study {
        StudyKind::CostVsBeta { lambda, betas, gibbs_steps, replications } => {
            run_cost_vs_beta(&model, spec.master_seed, *lambda, betas, *gibbs_steps, *replications)?
        }
        StudyKind::ErrorVsBeta { nbar, betas, gibbs_steps, replications } => {
            run_error_vs_beta(&model, spec.master_seed, *nbar, betas, *gibbs_steps, *replications)?
        }
        StudyKind::LambdaPaths {
            nbar_target,
            beta,
            steps,
            paths,
            lambda0,
            step0,
            projection_low,
            projection_high,
        } => run_lambda_paths(
            &model,
            spec.master_seed,
            *nbar_target,
            *beta,
            *steps,
            *paths,
            *lambda0,
            *step0,
            *projection_low,
            *projection_high,
        )?,
    };
    validate_rows(&header, &rows)?;
    Ok(Report {
        spec: spec.clone(),
        seeds,
        header,
        rows,
        summary,
    })
}

type StudyOutput = (Vec<u64>, Vec<String>, Vec<Vec<f64>>, BTreeMap<String, f64>);

fn run_cost_vs_beta(
    model: &GaussianModel,
    master: u64,
    lambda: f64,
    betas: &[f64],
    gibbs_steps: u64,
    replications: u64,
) -> Result<StudyOutput> {
    if model.n() > ENUMERATION_CAP {
        return Err(Error::CapacityExceeded(format!(
            "cost sweep enumerates all subsets; order {} exceeds cap {ENUMERATION_CAP}",
            model.n()
        )));
    }
    let costs = add_lambda_term(&error_table(model)?, lambda);
    let (_, optimum) = exhaustive_optimum(model, lambda)?;
    let greedy = greedy_unconstrained(model, lambda)?.cost;
    let params_check = CostParams::new(lambda, 1.0)?;
    let mut seeds = Vec::new();
    let mut rows = Vec::new();
    for (bi, &beta) in betas.iter().enumerate() {
        let exact_mean = GibbsDistribution::from_costs(&costs, beta).expectation(&costs)?;
        let rep_seeds: Vec<u64> = (0..replications)
            .map(|r| derive_seed(master, ((bi as u64) << 32) | r))
            .collect();
        let finals: Vec<(f64, f64)> = rep_seeds
            .par_iter()
            .map(|&seed| {
                let run = run_basic_gibbs(model, lambda, beta, &RunBudget::new(gibbs_steps, seed))?;
                let final_cost = cost(model, &params_check, run.state.config)?;
                Ok((final_cost, run.state.best_seen().1))
            })
            .collect::<Result<_>>()?;
        seeds.extend_from_slice(&rep_seeds);
        let final_mean = mean(&finals.iter().map(|p| p.0).collect::<Vec<_>>());
        let best_mean = mean(&finals.iter().map(|p| p.1).collect::<Vec<_>>());
        rows.push(vec![beta, optimum, exact_mean, final_mean, best_mean, greedy]);
    }
    let header = ["beta", "optimum_cost", "exact_expected_cost", "gibbs_final_cost_mean", "gibbs_best_cost_mean", "greedy_cost"]
        .map(String::from)
        .to_vec();
    let mut summary = BTreeMap::new();
    summary.insert("optimum_cost".into(), optimum);
    summary.insert("greedy_cost".into(), greedy);
    summary.insert("lambda".into(), lambda);
    Ok((seeds, header, rows, summary))
}

fn run_error_vs_beta(
    model: &GaussianModel,
    master: u64,
    nbar: usize,
    betas: &[f64],
    gibbs_steps: u64,
    replications: u64,
) -> Result<StudyOutput> {
    let errors = error_table(model)?;
    let (_, optimum) = exhaustive_optimum_at_cardinality(model, nbar)?;
    let newgreedy = newgreedy_cardinality(model, nbar)?.error;
    let mut seeds = Vec::new();
    let mut rows = Vec::new();
    for (bi, &beta) in betas.iter().enumerate() {
        let exact_mean = exact_gibbs_restricted(model, beta, nbar)?.expectation(&errors)?;
        let rep_seeds: Vec<u64> = (0..replications)
            .map(|r| derive_seed(master, ((bi as u64) << 32) | r))
            .collect();
        let finals: Vec<(f64, f64)> = rep_seeds
            .par_iter()
            .map(|&seed| {
                let run =
                    run_fixed_cardinality_gibbs(model, nbar, beta, &RunBudget::new(gibbs_steps, seed))?;
                let final_error = crate::cost::mmse(model, run.state.config)?;
                Ok((final_error, run.state.best_seen().1))
            })
            .collect::<Result<_>>()?;
        seeds.extend_from_slice(&rep_seeds);
        let final_mean = mean(&finals.iter().map(|p| p.0).collect::<Vec<_>>());
        let best_mean = mean(&finals.iter().map(|p| p.1).collect::<Vec<_>>());
        rows.push(vec![beta, optimum, exact_mean, final_mean, best_mean, newgreedy]);
    }
    let header = ["beta", "optimum_error", "exact_expected_error", "gibbs_final_error_mean", "gibbs_best_error_mean", "newgreedy_error"]
        .map(String::from)
        .to_vec();
    let mut summary = BTreeMap::new();
    summary.insert("optimum_error".into(), optimum);
    summary.insert("newgreedy_error".into(), newgreedy);
    summary.insert("nbar".into(), nbar as f64);
    Ok((seeds, header, rows, summary))
}

#[allow(clippy::too_many_arguments)]
fn run_lambda_paths(
    model: &GaussianModel,
    master: u64,
    nbar_target: f64,
    beta: f64,
    steps: u64,
    paths: u64,
    lambda0: f64,
    step0: f64,
    projection_low: f64,
    projection_high: f64,
) -> Result<StudyOutput> {
    let params = LearningParams::new(
        nbar_target,
        beta,
        step0,
        lambda0,
        projection_low,
        projection_high,
    )?;
    let seeds: Vec<u64> = (0..paths).map(|p| derive_seed(master, p)).collect();
    let runs: Vec<_> = seeds
        .par_iter()
        .map(|&seed| run_gibbs_learning(model, &params, steps, seed, None))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(steps as usize);
    for t in 0..steps as usize {
        let lambda_mean = mean(&runs.iter().map(|r| r.trace[t].lambda).collect::<Vec<_>>());
        let pop_mean = mean(&runs.iter().map(|r| r.trace[t].popcount as f64).collect::<Vec<_>>());
        rows.push(vec![(t + 1) as f64, lambda_mean, runs[0].trace[t].lambda, pop_mean]);
    }
    let header = ["t", "lambda_mean", "lambda_path0", "popcount_mean"]
        .map(String::from)
        .to_vec();
    let mut summary = BTreeMap::new();
    summary.insert("lambda_hat_mean".into(), mean(&runs.iter().map(|r| r.lambda_hat).collect::<Vec<_>>()));
    summary.insert(
        "tail_mean_popcount".into(),
        mean(&runs.iter().map(|r| r.tail_mean_popcount).collect::<Vec<_>>()),
    );
    summary.insert("nbar_target".into(), nbar_target);
    // The pricing root is only enumerable on small orders.
    if model.n() <= crate::exact::DELTA_EXACT_CAP {
        let feas = check_feasibility(model, beta, nbar_target, projection_low, projection_high)?;
        if let Some(root) = feas.lambda_star {
            summary.insert("lambda_star_oracle".into(), root);
        }
        summary.insert("feasible".into(), if feas.feasible { 1.0 } else { 0.0 });
    }
    Ok((seeds, header, rows, summary))
}

/// Cost-sweep preset on a generated 18-sensor instance, 100-step chains.
pub fn preset_fig1(master_seed: u64) -> ExperimentSpec {
    ExperimentSpec {
        name: "cost-vs-beta".into(),
        model: ModelSource::Generated { n: 18, seed: 180 },
        study: StudyKind::CostVsBeta {
            lambda: 1.0,
            betas: vec![0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 15.0],
            gibbs_steps: 100,
            replications: 20,
        },
        master_seed,
    }
}

/// Error-sweep preset on the fixed-cardinality slice of the same order.
pub fn preset_fig2(master_seed: u64) -> ExperimentSpec {
    ExperimentSpec {
        name: "error-vs-beta".into(),
        model: ModelSource::Generated { n: 18, seed: 181 },
        study: StudyKind::ErrorVsBeta {
            nbar: 10,
            betas: vec![0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 15.0],
            gibbs_steps: 100,
            replications: 20,
        },
        master_seed,
    }
}

/// Multiplier-path preset: the target active count is constructed by the
/// exact oracle so that the pricing root sits at 2.
pub fn preset_fig3(master_seed: u64) -> Result<ExperimentSpec> {
    let model = GaussianModel::generate(10, 42)?;
    let params = CostParams::new(2.0, 5.0)?;
    let nbar_target = crate::exact::exact_gibbs(&model, &params)?.expected_popcount();
    Ok(ExperimentSpec {
        name: "lambda-paths".into(),
        model: ModelSource::Generated { n: 10, seed: 42 },
        study: StudyKind::LambdaPaths {
            nbar_target,
            beta: 5.0,
            steps: 2000,
            paths: 1000,
            lambda0: 4.0,
            step0: 1.0,
            projection_low: 0.0,
            projection_high: 8.0,
        },
        master_seed,
    })
}
