//! Experiment grids over `(algorithm, q, beta)` on the queueing benchmark.
//!
//! Every replication draws from streams derived from
//! `(base_seed, [cell_index, replication, component_tag])`, so a config file
//! fully determines the output regardless of worker count.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimizer::{run_gqsf1, run_gqsf2, BoxConstraint, RunResult, SaConfig, StepSchedule};
use crate::qgaussian::{q_upper_limit, QKernel, UPPER_GUARD};
use crate::queueing::{make_simulator, Preset, QueueNetworkConfig};
use crate::rng::{derive_stream_id, tag, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Gqsf1,
    Gqsf2,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Gqsf1 => "gqsf1",
            Algorithm::Gqsf2 => "gqsf2",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Algorithm::Gqsf1 => "Gq-SF1",
            Algorithm::Gqsf2 => "Gq-SF2",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "").as_str() {
            "gqsf1" | "sf1" | "1" => Ok(Algorithm::Gqsf1),
            "gqsf2" | "sf2" | "2" => Ok(Algorithm::Gqsf2),
            _ => Err(Error::Config(format!("unknown algorithm '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x.clone()],
            OneOrMany::Many(xs) => xs.clone(),
        }
    }
}

/// A grid entry for `q`: a number or one of the aliases `gaussian`, `cauchy`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum QValue {
    Value(f64),
    Alias(String),
}

impl QValue {
    /// Resolves aliases for dimension `dim`: gaussian is 1, cauchy is `1 + 2/(N+1)`.
    pub fn resolve(&self, dim: usize) -> Result<f64> {
        match self {
            QValue::Value(q) => Ok(*q),
            QValue::Alias(a) => match a.to_ascii_lowercase().as_str() {
                "gaussian" => Ok(1.0),
                "cauchy" => Ok(cauchy_q(dim)),
                _ => a
                    .parse()
                    .map_err(|_| Error::Config(format!("unknown q alias '{a}'"))),
            },
        }
    }
}

pub fn cauchy_q(dim: usize) -> f64 {
    1.0 + 2.0 / (dim as f64 + 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SystemSpec {
    Preset(String),
    Inline(QueueNetworkConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Bound {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl Bound {
    fn expand(&self, dim: usize) -> Vec<f64> {
        match self {
            Bound::Scalar(x) => vec![*x; dim],
            Bound::Vector(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxSpec {
    pub lower: Bound,
    pub upper: Bound,
}

fn default_l() -> usize {
    100
}
fn default_replications() -> usize {
    20
}
fn default_gamma() -> f64 {
    0.75
}
fn default_system() -> SystemSpec {
    SystemSpec::Preset("tandem4".into())
}

/// Experiment description, read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub algorithm: OneOrMany<Algorithm>,
    pub q_grid: Vec<QValue>,
    pub beta_grid: Vec<f64>,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "L", default = "default_l")]
    pub l: usize,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_system")]
    pub system: SystemSpec,
    #[serde(rename = "box", default)]
    pub bounds: Option<BoxSpec>,
    #[serde(default)]
    pub theta0: Option<Vec<f64>>,
    /// Drive both Gq-SF2 simulations from the same random streams.
    #[serde(default)]
    pub crn: bool,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Validates every grid value and fills in preset defaults.
    pub fn resolve(&self) -> Result<Experiment> {
        let (network, preset) = match &self.system {
            SystemSpec::Preset(name) => {
                let p = Preset::by_name(name).ok_or_else(|| {
                    Error::Config(format!(
                        "unknown preset '{name}' (known: {})",
                        Preset::names().join(", ")
                    ))
                })?;
                (p.network.clone(), Some(p))
            }
            SystemSpec::Inline(net) => (net.clone(), None),
        };
        network.validate()?;
        let dim = network.total_dim();

        let bounds = match (&self.bounds, &preset) {
            (Some(b), _) => BoxConstraint::new(b.lower.expand(dim), b.upper.expand(dim))
                .map_err(|e| Error::Config(format!("box: {e}")))?,
            (None, Some(p)) => p.bounds.clone(),
            (None, None) => return Err(Error::Config("inline systems need a box".into())),
        };
        if bounds.dim() != dim {
            return Err(Error::Config(format!(
                "box has dimension {}, system has {dim}",
                bounds.dim()
            )));
        }
        let theta0 = match (&self.theta0, &preset) {
            (Some(t), _) => t.clone(),
            (None, Some(p)) => p.theta0.clone(),
            (None, None) => return Err(Error::Config("inline systems need theta0".into())),
        };
        if !bounds.contains(&theta0) {
            return Err(Error::Config("theta0 must lie inside the box".into()));
        }

        let schedule = StepSchedule::new(self.gamma).map_err(|e| Error::Config(e.to_string()))?;
        let q_grid = self
            .q_grid
            .iter()
            .map(|q| q.resolve(dim))
            .collect::<Result<Vec<_>>>()?;
        for &q in &q_grid {
            if !(q < q_upper_limit(dim) - UPPER_GUARD) {
                return Err(Error::Config(format!(
                    "q = {q} must be below {} for dimension {dim}",
                    q_upper_limit(dim)
                )));
            }
        }
        if self.beta_grid.iter().any(|b| !(*b > 0.0) || !b.is_finite()) {
            return Err(Error::Config("beta values must be positive".into()));
        }
        if self.m == 0 || self.l == 0 || self.replications == 0 {
            return Err(Error::Config(
                "M, L and replications must be positive".into(),
            ));
        }
        let algorithms = self.algorithm.to_vec();
        if algorithms.is_empty() {
            return Err(Error::Config("no algorithm given".into()));
        }
        Ok(Experiment {
            algorithms,
            q_grid,
            beta_grid: self.beta_grid.clone(),
            schedule,
            outer_iterations: self.m,
            inner_iterations: self.l,
            replications: self.replications,
            base_seed: self.base_seed,
            network,
            bounds,
            theta0,
            crn: self.crn,
        })
    }
}

/// A validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub algorithms: Vec<Algorithm>,
    pub q_grid: Vec<f64>,
    pub beta_grid: Vec<f64>,
    pub schedule: StepSchedule,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub replications: usize,
    pub base_seed: u64,
    pub network: QueueNetworkConfig,
    pub bounds: BoxConstraint,
    pub theta0: Vec<f64>,
    pub crn: bool,
}

impl Experiment {
    pub fn dim(&self) -> usize {
        self.network.total_dim()
    }

    /// Cells in grid order: algorithm, then q, then beta.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &algorithm in &self.algorithms {
            for &q in &self.q_grid {
                for &beta in &self.beta_grid {
                    out.push(Cell {
                        index: out.len(),
                        algorithm,
                        q,
                        beta,
                    });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub index: usize,
    pub algorithm: Algorithm,
    pub q: f64,
    pub beta: f64,
}

/// Everything needed for one optimization run on the queueing system.
#[derive(Debug, Clone)]
pub struct SingleRun<'a> {
    pub algorithm: Algorithm,
    pub q: f64,
    pub beta: f64,
    pub schedule: StepSchedule,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub network: &'a QueueNetworkConfig,
    pub bounds: &'a BoxConstraint,
    pub theta0: &'a [f64],
    pub seed: u64,
    /// Label list the component streams are derived from.
    pub stream_labels: Vec<u64>,
    pub crn: bool,
    pub trajectory_every: Option<usize>,
}

impl SingleRun<'_> {
    pub fn run(&self) -> Result<RunResult> {
        let dim = self.network.total_dim();
        let kernel = QKernel::new(self.q, self.beta, dim)?;
        let mut config = SaConfig::new(
            kernel,
            self.bounds.clone(),
            self.schedule,
            self.outer_iterations,
            self.inner_iterations,
        )?
        .with_target(self.network.theta_target.clone());
        config.trajectory_every = self.trajectory_every;

        let stream_for = |component: u64| {
            let mut labels = self.stream_labels.clone();
            labels.push(component);
            RngStream::new(self.seed, derive_stream_id(&labels))
        };
        let mut perturbations = stream_for(tag::PERTURBATION);
        let mut plus = make_simulator(self.network, stream_for(tag::SIM_PLUS))?;
        match self.algorithm {
            Algorithm::Gqsf1 => run_gqsf1(&mut plus, &config, self.theta0, &mut perturbations),
            Algorithm::Gqsf2 => {
                let minus_tag = if self.crn {
                    tag::SIM_PLUS
                } else {
                    tag::SIM_MINUS
                };
                let mut minus = make_simulator(self.network, stream_for(minus_tag))?;
                run_gqsf2(
                    &mut plus,
                    &mut minus,
                    &config,
                    self.theta0,
                    &mut perturbations,
                )
            }
        }
    }
}

/// Aggregate over the replications of one grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub algorithm: Algorithm,
    pub q: f64,
    pub beta: f64,
    pub gamma: f64,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub replications: usize,
    /// Distances of the completed runs, in replication order.
    pub distances: Vec<f64>,
    pub mean_distance: f64,
    /// Sample standard deviation (zero for a single run).
    pub std_distance: f64,
    pub failures: usize,
    pub failure_messages: Vec<String>,
    pub seconds: f64,
}

impl CellResult {
    fn aggregate(cell: &Cell, exp: &Experiment, runs: Vec<Result<RunResult>>) -> Self {
        let mut distances = Vec::new();
        let mut failure_messages = Vec::new();
        let mut seconds = 0.0;
        for r in runs {
            match r {
                Ok(run) => {
                    seconds += run.wall_time.as_secs_f64();
                    distances.push(run.distance.expect("bench runs always carry a target"));
                }
                Err(e) => failure_messages.push(e.to_string()),
            }
        }
        let (mean_distance, std_distance) = mean_std(&distances);
        Self {
            algorithm: cell.algorithm,
            q: cell.q,
            beta: cell.beta,
            gamma: exp.schedule.gamma(),
            outer_iterations: exp.outer_iterations,
            inner_iterations: exp.inner_iterations,
            replications: exp.replications,
            failures: failure_messages.len(),
            failure_messages,
            distances,
            mean_distance,
            std_distance,
            seconds,
        }
    }
}

/// Mean and sample standard deviation; NaN mean for an empty slice.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Runs every replication of every cell, `workers` at a time (0 = all cores).
pub fn run_experiment(exp: &Experiment, workers: usize) -> Result<Vec<CellResult>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let cells = exp.cells();
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..exp.replications).map(move |r| (c, r)))
        .collect();
    let runs: Vec<Result<RunResult>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(c, r)| {
                let cell = &cells[c];
                SingleRun {
                    algorithm: cell.algorithm,
                    q: cell.q,
                    beta: cell.beta,
                    schedule: exp.schedule,
                    outer_iterations: exp.outer_iterations,
                    inner_iterations: exp.inner_iterations,
                    network: &exp.network,
                    bounds: &exp.bounds,
                    theta0: &exp.theta0,
                    seed: exp.base_seed,
                    stream_labels: vec![cell.index as u64, r as u64],
                    crn: exp.crn,
                    trajectory_every: None,
                }
                .run()
            })
            .collect()
    });
    let mut runs = runs.into_iter();
    Ok(cells
        .iter()
        .map(|cell| {
            let chunk: Vec<_> = runs.by_ref().take(exp.replications).collect();
            CellResult::aggregate(cell, exp, chunk)
        })
        .collect())
}

/// Formats like C's `%.{sig}g`.
pub fn format_sig(x: f64, sig: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sig = sig.max(1);
    let sci = format!("{:.*e}", sig - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= sig as i32 {
        let m = trim_zeros(mantissa);
        format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub const CSV_HEADER: &str =
    "algorithm,q,beta,gamma,M,L,replications,mean_distance,std_distance,failures,seconds";

/// CSV with one row per cell in grid order.
///
/// The `seconds` column is left empty unless `with_timing` is set, so default
/// output depends only on the configuration.
pub fn emit_csv(results: &[CellResult], with_timing: bool) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for c in results {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            c.algorithm.name(),
            format_sig(c.q, 6),
            format_sig(c.beta, 6),
            format_sig(c.gamma, 6),
            c.outer_iterations,
            c.inner_iterations,
            c.replications,
            format_sig(c.mean_distance, 6),
            format_sig(c.std_distance, 6),
            c.failures,
            if with_timing {
                format_sig(c.seconds, 6)
            } else {
                String::new()
            },
        );
    }
    out
}

fn q_label(q: f64, dim: usize) -> String {
    if q == 1.0 {
        "Gaussian".into()
    } else if (q - cauchy_q(dim)).abs() < 1e-12 {
        "Cauchy".into()
    } else {
        format_sig(q, 6)
    }
}

/// Human-readable `q x beta` matrices, one per (algorithm, gamma), cells `mean±std`.
pub fn emit_table(results: &[CellResult], dim: usize) -> String {
    let mut out = String::new();
    let mut groups: Vec<(Algorithm, f64)> = Vec::new();
    for c in results {
        if !groups.iter().any(|g| g.0 == c.algorithm && g.1 == c.gamma) {
            groups.push((c.algorithm, c.gamma));
        }
    }
    for (gi, (alg, gamma)) in groups.iter().enumerate() {
        let cells: Vec<&CellResult> = results
            .iter()
            .filter(|c| c.algorithm == *alg && c.gamma == *gamma)
            .collect();
        let mut qs: Vec<f64> = Vec::new();
        let mut betas: Vec<f64> = Vec::new();
        for c in &cells {
            if !qs.contains(&c.q) {
                qs.push(c.q);
            }
            if !betas.contains(&c.beta) {
                betas.push(c.beta);
            }
        }
        let mut rows: Vec<Vec<String>> = Vec::new();
        let mut header = vec!["q \\ beta".to_string()];
        header.extend(betas.iter().map(|b| format_sig(*b, 6)));
        rows.push(header);
        for &q in &qs {
            let mut row = vec![q_label(q, dim)];
            for &b in &betas {
                let text = match cells.iter().find(|c| c.q == q && c.beta == b) {
                    Some(c) if c.distances.is_empty() => "diverged".to_string(),
                    Some(c) => {
                        let mark = if c.failures > 0 { "*" } else { "" };
                        format!("{:.5}±{:.5}{mark}", c.mean_distance, c.std_distance)
                    }
                    None => "-".to_string(),
                };
                row.push(text);
            }
            rows.push(row);
        }
        let widths: Vec<usize> = (0..rows[0].len())
            .map(|j| rows.iter().map(|r| r[j].chars().count()).max().unwrap_or(0))
            .collect();
        if gi > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "{} (gamma = {})", alg.label(), format_sig(*gamma, 6));
        for (i, row) in rows.iter().enumerate() {
            let line: Vec<String> = row
                .iter()
                .zip(&widths)
                .map(|(s, w)| format!("{s}{}", " ".repeat(w - s.chars().count())))
                .collect();
            let _ = writeln!(out, "{}", line.join(" | ").trim_end());
            if i == 0 {
                let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
                let _ = writeln!(out, "{}", rule.join("-+-"));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config() -> ExperimentConfig {
        ExperimentConfig::from_toml(
            r#"
            algorithm = ["gqsf1", "gqsf2"]
            q_grid = [0.5, "gaussian"]
            beta_grid = [0.01, 0.05]
            M = 50
            L = 5
            replications = 3
            base_seed = 7
            "#,
        )
        .unwrap()
    }

    #[test]
    fn defaults_applied() {
        let c = tiny_config();
        assert_eq!(c.gamma, 0.75);
        let c = ExperimentConfig::from_toml(
            "algorithm = \"gqsf2\"\nq_grid=[0.8]\nbeta_grid=[0.005]\nM=10",
        )
        .unwrap();
        assert_eq!((c.l, c.replications), (100, 20));
        let e = c.resolve().unwrap();
        assert_eq!(e.theta0, vec![0.1, 0.1, 0.6, 0.6]);
        assert_eq!(e.algorithms, vec![Algorithm::Gqsf2]);
    }

    #[test]
    fn aliases_resolve() {
        assert_eq!(QValue::Alias("gaussian".into()).resolve(4).unwrap(), 1.0);
        assert!((QValue::Alias("cauchy".into()).resolve(4).unwrap() - 1.4).abs() < 1e-15);
        assert!(QValue::Alias("laplace".into()).resolve(4).is_err());
    }

    #[test]
    fn invalid_grids_rejected() {
        let bad = [
            "algorithm='gqsf1'\nq_grid=[1.5]\nbeta_grid=[0.1]\nM=1",
            "algorithm='gqsf1'\nq_grid=[0.5]\nbeta_grid=[0.1]\nM=1\ngamma=0.5",
            "algorithm='gqsf1'\nq_grid=[0.5]\nbeta_grid=[0.1]\nM=1\ntheta0=[0.0,0.3,0.3,0.3]",
            "algorithm='gqsf1'\nq_grid=[0.5]\nbeta_grid=[-0.1]\nM=1",
            "algorithm='gqsf1'\nq_grid=[0.5]\nbeta_grid=[0.1]\nM=1\nsystem='tandem7'",
        ];
        for b in bad {
            let r = ExperimentConfig::from_toml(b).and_then(|c| c.resolve());
            assert!(matches!(r, Err(Error::Config(_))), "{b}");
        }
        assert!(ExperimentConfig::from_toml(
            "algorithm='gqsf3'\nq_grid=[0.5]\nbeta_grid=[0.1]\nM=1"
        )
        .is_err());
        assert!(ExperimentConfig::from_toml(
            "algorithm='gqsf1'\nq_grid=[0.5]\nbeta_grid=[0.1]\nM=1\nbogus=1"
        )
        .is_err());
    }

    #[test]
    fn inline_system() {
        let text = r#"
            algorithm = "gqsf2"
            q_grid = [0.8]
            beta_grid = [0.01]
            M = 20
            L = 5
            replications = 2
            theta0 = [0.5, 0.5]
            box = { lower = 0.1, upper = 0.6 }
            [system]
            lambda = [0.3]
            p_leave = [0.5]
            service_const = [10.0]
            dims = [2]
            theta_target = [0.3, 0.3]
        "#;
        let e = ExperimentConfig::from_toml(text)
            .unwrap()
            .resolve()
            .unwrap();
        assert_eq!(e.dim(), 2);
        let r = run_experiment(&e, 1).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].distances.len(), 2);
    }

    #[test]
    fn grid_order_and_aggregation() {
        let e = tiny_config().resolve().unwrap();
        let r = run_experiment(&e, 2).unwrap();
        assert_eq!(r.len(), 8);
        assert_eq!(
            (r[0].algorithm, r[0].q, r[0].beta),
            (Algorithm::Gqsf1, 0.5, 0.01)
        );
        assert_eq!(
            (r[1].algorithm, r[1].q, r[1].beta),
            (Algorithm::Gqsf1, 0.5, 0.05)
        );
        assert_eq!((r[2].algorithm, r[2].q), (Algorithm::Gqsf1, 1.0));
        assert_eq!(r[4].algorithm, Algorithm::Gqsf2);
        for c in &r {
            assert_eq!(c.failures, 0);
            let (m, s) = mean_std(&c.distances);
            assert_eq!(c.mean_distance, m);
            assert_eq!(c.std_distance, s);
            assert_eq!(c.mean_distance, c.distances.iter().sum::<f64>() / 3.0);
        }
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let e = tiny_config().resolve().unwrap();
        let a = run_experiment(&e, 1).unwrap();
        let b = run_experiment(&e, 4).unwrap();
        assert_eq!(emit_csv(&a, false), emit_csv(&b, false));
    }

    #[test]
    fn single_replication_has_zero_std() {
        let mut c = tiny_config();
        c.replications = 1;
        let r = run_experiment(&c.resolve().unwrap(), 1).unwrap();
        assert!(r
            .iter()
            .all(|c| c.std_distance == 0.0 && c.mean_distance == c.distances[0]));
    }

    #[test]
    fn sig_formatting() {
        assert_eq!(format_sig(0.00012345678, 6), "0.000123457");
        assert_eq!(format_sig(1.0, 6), "1");
        assert_eq!(format_sig(0.005, 6), "0.005");
        assert_eq!(format_sig(1234567.0, 6), "1.23457e+06");
        assert_eq!(format_sig(1.4, 6), "1.4");
        assert_eq!(format_sig(-2.5e-7, 6), "-2.5e-07");
        assert_eq!(format_sig(100000.0, 6), "100000");
        assert_eq!(format_sig(0.0, 6), "0");
    }

    #[test]
    fn csv_shapes() {
        assert_eq!(emit_csv(&[], false), format!("{CSV_HEADER}\n"));
        let e = tiny_config().resolve().unwrap();
        let r = run_experiment(&e, 1).unwrap();
        let one = emit_csv(&r[..1], false);
        assert_eq!(one.lines().count(), 2);
        let row: Vec<&str> = one.lines().nth(1).unwrap().split(',').collect();
        assert_eq!(row.len(), 11);
        assert_eq!(row[10], "");
        let mean: f64 = row[7].parse().unwrap();
        assert!((mean - r[0].mean_distance).abs() <= 1e-5 * r[0].mean_distance.abs());
    }

    #[test]
    fn table_layout() {
        let e = tiny_config().resolve().unwrap();
        let r = run_experiment(&e, 1).unwrap();
        let sf1: Vec<CellResult> = r
            .iter()
            .filter(|c| c.algorithm == Algorithm::Gqsf1)
            .cloned()
            .collect();
        let t = emit_table(&sf1, 4);
        let lines: Vec<&str> = t.lines().collect();
        // title, header, rule, two q rows
        assert_eq!(lines.len(), 5);
        assert!(lines[4].starts_with("Gaussian"));
        assert_eq!(lines[3].matches('±').count(), 2);
        let cell = lines[3].split('|').nth(1).unwrap().trim();
        let (m, s) = cell.split_once('±').unwrap();
        assert_eq!(m.split('.').nth(1).unwrap().len(), 5);
        assert_eq!(s.split('.').nth(1).unwrap().len(), 5);
    }
}
