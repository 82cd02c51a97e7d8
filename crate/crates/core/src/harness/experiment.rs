//! Parameter sweeps producing one CSV row per (grid point, trial, algorithm).

use std::fmt;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::generate::ProfileSpec;
use crate::base::{run_base, BaseRanker};
use crate::central::{dp_kwiksort_planned, reduce_noise_all_with, DpKwikSortPlan, Mechanism, NoiseSpec, PrivacyBudget};
use crate::error::{Error, Result};
use crate::local::{
    ldp_kwiksort_pool, reduce_local_noise_all_with, CoordinateSampling, LdpKwikSortPlan, Perturbation, RrConfig,
    TranscriptRecord, UserPool,
};
use crate::oracle::{opt_bruteforce, MAX_EXACT_ITEMS};
use crate::par::{map_indices, Execution};
use crate::ranking::{build_weights, kemeny_cost, max_pairs, AggregationResult, RankingProfile};
use crate::seed::{derive_rng, derive_seed};

pub const DEFAULT_CENTRAL_CONSTANT: f64 = 8.0;
pub const DEFAULT_LOCAL_CONSTANT: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    None,
    Central,
    Local,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::None => "none",
            Model::Central => "central",
            Model::Local => "local",
        }
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Model::None),
            "central" => Ok(Model::Central),
            "local" => Ok(Model::Local),
            other => Err(Error::InvalidParameter(format!("unknown model '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    DpKwikSort,
    NoiseAll,
    LdpKwikSort,
    LocalNoiseAll,
    Exact,
    KwikSort,
    Borda,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::DpKwikSort => "dpkwiksort",
            Algorithm::NoiseAll => "noiseall",
            Algorithm::LdpKwikSort => "ldpkwiksort",
            Algorithm::LocalNoiseAll => "localnoiseall",
            Algorithm::Exact => "exact",
            Algorithm::KwikSort => "kwiksort",
            Algorithm::Borda => "borda",
        }
    }

    pub fn model(self) -> Model {
        match self {
            Algorithm::DpKwikSort | Algorithm::NoiseAll => Model::Central,
            Algorithm::LdpKwikSort | Algorithm::LocalNoiseAll => Model::Local,
            Algorithm::Exact | Algorithm::KwikSort | Algorithm::Borda => Model::None,
        }
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "dpkwiksort" => Algorithm::DpKwikSort,
            "noiseall" => Algorithm::NoiseAll,
            "ldpkwiksort" => Algorithm::LdpKwikSort,
            "localnoiseall" => Algorithm::LocalNoiseAll,
            "exact" => Algorithm::Exact,
            "kwiksort" => Algorithm::KwikSort,
            "borda" => Algorithm::Borda,
            other => return Err(Error::InvalidParameter(format!("unknown algorithm '{other}'"))),
        })
    }
}

/// An algorithm with an optional mechanism override, written `name` or `name:mechanism`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct AlgorithmSpec {
    pub algorithm: Algorithm,
    pub mechanism: Option<Mechanism>,
}

impl AlgorithmSpec {
    pub fn new(algorithm: Algorithm) -> Self {
        AlgorithmSpec {
            algorithm,
            mechanism: None,
        }
    }
}

impl FromStr for AlgorithmSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, mech) = match s.split_once(':') {
            Some((a, b)) => (a, Some(b.parse::<Mechanism>()?)),
            None => (s, None),
        };
        let algorithm: Algorithm = name.parse()?;
        if mech.is_some() && algorithm.model() != Model::Central {
            return Err(Error::InvalidParameter(format!(
                "only central algorithms take a mechanism, got '{s}'"
            )));
        }
        Ok(AlgorithmSpec {
            algorithm,
            mechanism: mech,
        })
    }
}

impl TryFrom<String> for AlgorithmSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<AlgorithmSpec> for String {
    fn from(spec: AlgorithmSpec) -> String {
        spec.to_string()
    }
}

impl fmt::Display for AlgorithmSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.algorithm.name())?;
        if let Some(mech) = self.mechanism {
            write!(f, ":{}", mech.name())?;
        }
        Ok(())
    }
}

/// Everything besides the profile that one aggregation run needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunParams {
    pub epsilon: f64,
    pub delta: f64,
    /// Default mechanism: Laplace when `delta == 0`, Gaussian otherwise.
    pub mechanism: Option<Mechanism>,
    /// Base for the noise-all reductions; defaults to exact search when feasible.
    pub base: Option<BaseRanker>,
    /// Query-budget constant; defaults per model.
    pub budget_constant: Option<f64>,
    /// Run every private algorithm without perturbation. Test hook.
    pub noiseless: bool,
}

impl RunParams {
    pub fn new(epsilon: f64, delta: f64) -> Self {
        RunParams {
            epsilon,
            delta,
            mechanism: None,
            base: None,
            budget_constant: None,
            noiseless: false,
        }
    }

    fn mechanism_for(&self, spec: &AlgorithmSpec) -> Mechanism {
        spec.mechanism.or(self.mechanism).unwrap_or(if self.delta > 0.0 {
            Mechanism::Gaussian
        } else {
            Mechanism::Laplace
        })
    }

    /// Privacy actually spent by `spec`: Laplace and the local protocols are pure, so they consume no `delta`.
    pub fn budget_for(&self, spec: &AlgorithmSpec) -> Result<PrivacyBudget> {
        let delta = match spec.algorithm.model() {
            Model::Central if self.mechanism_for(spec) == Mechanism::Gaussian => self.delta,
            _ => 0.0,
        };
        PrivacyBudget::new(self.epsilon, delta)
    }

    fn constant_for(&self, model: Model) -> f64 {
        self.budget_constant.unwrap_or(match model {
            Model::Local => DEFAULT_LOCAL_CONSTANT,
            _ => DEFAULT_CENTRAL_CONSTANT,
        })
    }
}

/// The label used in result rows: central algorithms carry their mechanism.
pub fn algorithm_label(spec: &AlgorithmSpec, params: &RunParams) -> String {
    match spec.algorithm.model() {
        Model::Central => format!("{}:{}", spec.algorithm.name(), params.mechanism_for(spec).name()),
        _ => spec.algorithm.name().to_string(),
    }
}

/// Run one algorithm on `profile`; the cost is always against the true weights.
pub fn run_algorithm(
    spec: &AlgorithmSpec,
    profile: &RankingProfile,
    params: &RunParams,
    seed: u64,
) -> Result<AggregationResult> {
    Ok(run_algorithm_traced(spec, profile, params, seed)?.0)
}

/// [`run_algorithm`], also returning the adaptive query transcript for `ldpkwiksort`.
pub fn run_algorithm_traced(
    spec: &AlgorithmSpec,
    profile: &RankingProfile,
    params: &RunParams,
    seed: u64,
) -> Result<(AggregationResult, Option<Vec<TranscriptRecord>>)> {
    let m = profile.m();
    let n = profile.n();
    let w = build_weights(profile);
    let base = params.base.unwrap_or(BaseRanker::best_for(m));
    match spec.algorithm {
        Algorithm::Exact | Algorithm::KwikSort | Algorithm::Borda => {
            let base = match spec.algorithm {
                Algorithm::Exact => BaseRanker::Exact,
                Algorithm::KwikSort => BaseRanker::Kwiksort,
                _ => BaseRanker::Borda,
            };
            let (ranking, queries) = run_base(base, &w, &mut derive_rng(seed, &[0]))?;
            let cost = kemeny_cost(&ranking, &w)?;
            Ok((AggregationResult::non_private(ranking, cost, queries, seed), None))
        }
        Algorithm::NoiseAll => {
            let budget = params.budget_for(spec)?;
            let noise = if params.noiseless {
                NoiseSpec::zero()
            } else {
                NoiseSpec::calibrate(params.mechanism_for(spec), budget, max_pairs(m).max(1), n)?
            };
            Ok((reduce_noise_all_with(&w, noise, budget, base, seed)?, None))
        }
        Algorithm::DpKwikSort => {
            let budget = params.budget_for(spec)?;
            let constant = params.constant_for(Model::Central);
            let mut plan = DpKwikSortPlan::calibrated(m, n, budget, params.mechanism_for(spec), constant)?;
            if params.noiseless {
                plan = plan.without_noise();
            }
            plan.fallback_base = base;
            Ok((dp_kwiksort_planned(&w, &plan, seed)?, None))
        }
        Algorithm::LocalNoiseAll => {
            let (perturbation, sampling) = if params.noiseless {
                (Perturbation::Truthful, CoordinateSampling::All)
            } else {
                (Perturbation::Randomized(RrConfig::new(params.epsilon)?), CoordinateSampling::OnePerUser)
            };
            let mut pool = UserPool::from_profile(profile);
            Ok((reduce_local_noise_all_with(&mut pool, &w, perturbation, sampling, base, seed)?, None))
        }
        Algorithm::LdpKwikSort => {
            if m < 2 {
                let res = crate::local::ldp_kwiksort(profile, params.epsilon, DEFAULT_LOCAL_CONSTANT, seed)?;
                return Ok((res, Some(Vec::new())));
            }
            let mut plan = LdpKwikSortPlan::calibrated(m, params.epsilon, params.constant_for(Model::Local))?;
            plan.noiseless = params.noiseless;
            plan.fallback_base = base;
            let mut pool = UserPool::from_profile(profile);
            let run = ldp_kwiksort_pool(&mut pool, &w, &plan, seed)?;
            Ok((run.result, Some(run.transcript)))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub m: usize,
    pub n_grid: Vec<usize>,
    pub epsilon_grid: Vec<f64>,
    #[serde(default)]
    pub delta: f64,
    pub model: Model,
    pub algorithms: Vec<AlgorithmSpec>,
    #[serde(default)]
    pub mechanism: Option<Mechanism>,
    #[serde(default)]
    pub base: Option<BaseRanker>,
    pub trials: usize,
    #[serde(default)]
    pub budget_constant: Option<f64>,
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub profile: ProfileSpec,
    #[serde(default)]
    pub noiseless: bool,
}

impl ExperimentConfig {
    /// Parse JSON when the extension is `.json`, TOML otherwise.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let is_json = path.extension().is_some_and(|ext| ext.eq_ignore_ascii_case("json"));
        let config: ExperimentConfig = if is_json {
            serde_json::from_str(&text).map_err(|e| Error::Parse {
                line: e.line(),
                message: e.to_string(),
            })?
        } else {
            toml::from_str(&text).map_err(|e| Error::InvalidParameter(format!("config: {e}")))?
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::InvalidParameter("m must be at least 1".into()));
        }
        if self.n_grid.is_empty() || self.epsilon_grid.is_empty() || self.algorithms.is_empty() {
            return Err(Error::InvalidParameter("n_grid, epsilon_grid and algorithms must be nonempty".into()));
        }
        if self.n_grid.contains(&0) {
            return Err(Error::InvalidParameter("n_grid entries must be positive".into()));
        }
        if let Some(&eps) = self.epsilon_grid.iter().find(|&&e| !(e > 0.0 && e.is_finite())) {
            return Err(Error::InvalidParameter(format!("epsilon must be positive, got {eps}")));
        }
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        for spec in &self.algorithms {
            let model = spec.algorithm.model();
            if model != Model::None && model != self.model {
                return Err(Error::InvalidParameter(format!(
                    "algorithm '{spec}' does not belong to the {} model",
                    self.model.name()
                )));
            }
        }
        if self.m > MAX_EXACT_ITEMS {
            return Err(Error::Guard(format!(
                "additive error needs the exact optimum, which is limited to m <= {MAX_EXACT_ITEMS}"
            )));
        }
        PrivacyBudget::new(self.epsilon_grid[0], self.delta)?;
        Ok(())
    }

    fn params(&self, epsilon: f64) -> RunParams {
        RunParams {
            epsilon,
            delta: self.delta,
            mechanism: self.mechanism,
            base: self.base,
            budget_constant: self.budget_constant,
            noiseless: self.noiseless,
        }
    }

    /// Grid points in output order: `n` outer, `epsilon` inner.
    pub fn grid(&self) -> Vec<(usize, f64)> {
        self.n_grid
            .iter()
            .flat_map(|&n| self.epsilon_grid.iter().map(move |&e| (n, e)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub m: usize,
    pub n: usize,
    pub epsilon: f64,
    /// The `delta` the algorithm actually spends (0 for pure mechanisms).
    pub delta: f64,
    pub model: Model,
    pub algorithm: String,
    pub trial: usize,
    pub cost: f64,
    pub opt: f64,
    pub additive_error: f64,
    pub ratio: Option<f64>,
    pub queries_used: u64,
    pub fallback_used: bool,
    pub seed: u64,
}

pub const CSV_HEADER: &str =
    "m,n,epsilon,delta,model,algorithm,trial,cost,opt,additive_error,ratio,queries_used,fallback_used,seed";

impl ResultRow {
    pub fn to_csv(&self) -> String {
        let ratio = self.ratio.map(|r| r.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.m,
            self.n,
            self.epsilon,
            self.delta,
            self.model.name(),
            self.algorithm,
            self.trial,
            self.cost,
            self.opt,
            self.additive_error,
            ratio,
            self.queries_used,
            self.fallback_used,
            self.seed
        )
    }
}

pub fn rows_to_csv(rows: &[ResultRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in rows {
        writeln!(out, "{}", row.to_csv()).expect("writing to a String cannot fail");
    }
    out
}

/// Seed for one (grid point, trial) cell. The profile is drawn from
/// `derive_seed(cell, [0])` and algorithm `a` runs with `derive_seed(cell, [1, a])`.
pub fn trial_seed(master: u64, grid_index: usize, trial: usize) -> u64 {
    derive_seed(master, &[grid_index as u64, trial as u64])
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    run_experiment_with(config, Execution::default())
}

/// Run every cell of the sweep; rows come back sorted by (grid point, trial, algorithm).
pub fn run_experiment_with(config: &ExperimentConfig, exec: Execution) -> Result<Vec<ResultRow>> {
    config.validate()?;
    let grid = config.grid();
    let cells = grid.len() * config.trials;
    let per_cell = map_indices(exec, cells, |cell| {
        let (g, trial) = (cell / config.trials, cell % config.trials);
        run_cell(config, g, grid[g], trial)
    });
    let mut rows = Vec::with_capacity(cells * config.algorithms.len());
    for cell in per_cell {
        rows.extend(cell?);
    }
    Ok(rows)
}

fn run_cell(config: &ExperimentConfig, g: usize, (n, epsilon): (usize, f64), trial: usize) -> Result<Vec<ResultRow>> {
    let seed = trial_seed(config.seed, g, trial);
    let profile = config.profile.sample(config.m, n, &mut derive_rng(seed, &[0]))?;
    let w = build_weights(&profile);
    let opt = opt_bruteforce(&w)?.cost;
    let params = config.params(epsilon);
    config
        .algorithms
        .iter()
        .enumerate()
        .map(|(a, spec)| {
            let res = run_algorithm(spec, &profile, &params, derive_seed(seed, &[1, a as u64]))?;
            Ok(ResultRow {
                m: config.m,
                n,
                epsilon,
                delta: params.budget_for(spec)?.delta,
                model: spec.algorithm.model(),
                algorithm: algorithm_label(spec, &params),
                trial,
                cost: res.cost,
                opt,
                additive_error: res.cost - opt,
                ratio: (opt > 0.0).then(|| res.cost / opt),
                queries_used: res.queries_used,
                fallback_used: res.fallback_used,
                seed,
            })
        })
        .collect()
}

pub fn write_rows(path: &Path, rows: &[ResultRow]) -> Result<()> {
    std::fs::write(path, rows_to_csv(rows)).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Mean and standard error of additive error for one (algorithm, n, epsilon) group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupSummary {
    pub algorithm: String,
    pub n: usize,
    pub epsilon: f64,
    pub trials: usize,
    pub mean_error: f64,
    pub std_error: f64,
    pub mean_cost: f64,
    pub mean_opt: f64,
    pub fallback_rate: f64,
}

/// Group rows by (algorithm, n, epsilon) in first-appearance order.
pub fn summarize(rows: &[ResultRow]) -> Vec<GroupSummary> {
    let mut keys: Vec<(String, usize, u64)> = Vec::new();
    let mut groups: Vec<Vec<&ResultRow>> = Vec::new();
    for row in rows {
        let key = (row.algorithm.clone(), row.n, row.epsilon.to_bits());
        match keys.iter().position(|k| *k == key) {
            Some(i) => groups[i].push(row),
            None => {
                keys.push(key);
                groups.push(vec![row]);
            }
        }
    }
    keys.into_iter()
        .zip(groups)
        .map(|((algorithm, n, eps), group)| {
            let errors: Vec<f64> = group.iter().map(|r| r.additive_error).collect();
            let (mean_error, std_error) = mean_and_stderr(&errors);
            let k = group.len() as f64;
            GroupSummary {
                algorithm,
                n,
                epsilon: f64::from_bits(eps),
                trials: group.len(),
                mean_error,
                std_error,
                mean_cost: group.iter().map(|r| r.cost).sum::<f64>() / k,
                mean_opt: group.iter().map(|r| r.opt).sum::<f64>() / k,
                fallback_rate: group.iter().filter(|r| r.fallback_used).count() as f64 / k,
            }
        })
        .collect()
}

pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let k = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / k;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

/// Least-squares slope of `ys` against `xs`.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidParameter("slope needs two or more paired points".into()));
    }
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("slope undefined for constant xs".into()));
    }
    Ok(sxy / sxx)
}

/// Slope of `ln(mean error)` against `ln n` for one algorithm's summaries.
pub fn log_log_slope(summaries: &[GroupSummary]) -> Result<f64> {
    if let Some(s) = summaries.iter().find(|s| s.mean_error.is_nan() || s.mean_error <= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "mean error at n={} is {}, cannot take a logarithm",
            s.n, s.mean_error
        )));
    }
    let xs: Vec<f64> = summaries.iter().map(|s| (s.n as f64).ln()).collect();
    let ys: Vec<f64> = summaries.iter().map(|s| s.mean_error.ln()).collect();
    ols_slope(&xs, &ys)
}
