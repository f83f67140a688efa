//! Replicated experiments: CI-test calibration on post-nonlinear data and
//! DAG recovery by PC.
//!
//! Each replication gets its own seed derived from the base seed and its
//! grid coordinates, so results do not depend on the worker count.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::causal::{markov_equivalent, pc, CiOracle, OracleKind, PcOptions};
use crate::citest::ci_test;
use crate::error::{Error, Result};
use crate::report::{Method, TestConfig};
use crate::synth::{gen_pnl, gen_random_dag_data, pnl_z_cols, NoiseFamily, PnlCase, PnlConfig, RandomDagConfig, PNL_X, PNL_Y};

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for one replication, from the base seed and grid coordinates.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(mix(base), |acc, &p| mix(acc ^ mix(p)))
}

/// Runs `f` on a pool with `workers` threads (`0` lets rayon decide).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("worker pool: {e}")))?;
    Ok(pool.install(f))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    pub cases: Vec<PnlCase>,
    pub cond_dims: Vec<usize>,
    pub sample_sizes: Vec<usize>,
    pub alphas: Vec<f64>,
    pub methods: Vec<Method>,
    pub replications: usize,
    /// Also run the dependent variant and report Type II errors.
    pub type_ii: bool,
    pub noise_family: NoiseFamily,
    pub seed: u64,
    pub test: TestConfig,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        CalibrationConfig {
            cases: vec![PnlCase::OneEffective, PnlCase::AllEffective],
            cond_dims: vec![1],
            sample_sizes: vec![200],
            alphas: vec![0.01, 0.05],
            methods: vec![Method::Gamma],
            replications: 100,
            type_ii: true,
            noise_family: NoiseFamily::Mixed,
            seed: 0,
            test: TestConfig::default(),
        }
    }
}

impl CalibrationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::InvalidArgument("replications must be positive".into()));
        }
        if self.cases.is_empty() || self.cond_dims.is_empty() || self.sample_sizes.is_empty() {
            return Err(Error::InvalidArgument("empty experiment grid".into()));
        }
        if let Some(a) = self.alphas.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
            return Err(Error::InvalidArgument(format!("alpha {a} not in (0, 1)")));
        }
        if self.methods.is_empty() || self.methods.contains(&Method::Both) {
            return Err(Error::InvalidArgument("methods must list gamma and/or monte_carlo".into()));
        }
        Ok(())
    }

    /// One test call covers every requested method.
    fn test_method(&self) -> Method {
        match (self.methods.contains(&Method::Gamma), self.methods.contains(&Method::MonteCarlo)) {
            (true, true) => Method::Both,
            (false, true) => Method::MonteCarlo,
            _ => Method::Gamma,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRow {
    pub case: PnlCase,
    pub cond_dim: usize,
    pub n: usize,
    pub alpha: f64,
    pub method: Method,
    pub replications: usize,
    pub type_i: f64,
    pub type_ii: Option<f64>,
}

/// p-values of one replication: `[gamma, mc]` for the independent and
/// (optionally) dependent datasets.
type RepPValues = ([Option<f64>; 2], Option<[Option<f64>; 2]>);

fn case_code(case: PnlCase) -> u64 {
    match case {
        PnlCase::OneEffective => 1,
        PnlCase::AllEffective => 2,
    }
}

/// Empirical Type I (and Type II) error rates over the grid.
pub fn run_calibration(config: &CalibrationConfig) -> Result<Vec<CalibrationRow>> {
    config.validate()?;
    let mut test = config.test.clone();
    test.method = config.test_method();

    let mut cells = Vec::new();
    for &case in &config.cases {
        for &d in &config.cond_dims {
            for &n in &config.sample_sizes {
                cells.push((case, d, n));
            }
        }
    }
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..config.replications).map(move |r| (c, r)))
        .collect();

    let one = |dependent: bool, case: PnlCase, d: usize, n: usize, r: usize| -> Result<[Option<f64>; 2]> {
        let seed = derive_seed(config.seed, &[case_code(case), d as u64, n as u64, r as u64, dependent as u64]);
        let mut pc = PnlConfig::new(case, dependent, d, n, seed);
        pc.noise_family = config.noise_family;
        let data = gen_pnl(&pc)?;
        let rep = ci_test(&data, &[PNL_X], &[PNL_Y], &pnl_z_cols(d), &test.clone().with_seed(seed))?;
        Ok([rep.p_value_gamma, rep.p_value_mc])
    };
    let results: Vec<RepPValues> = jobs
        .par_iter()
        .map(|&(c, r)| {
            let (case, d, n) = cells[c];
            let indep = one(false, case, d, n, r)?;
            let dep = if config.type_ii { Some(one(true, case, d, n, r)?) } else { None };
            Ok((indep, dep))
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for (c, &(case, d, n)) in cells.iter().enumerate() {
        let reps = &results[c * config.replications..(c + 1) * config.replications];
        for &alpha in &config.alphas {
            for &method in &config.methods {
                let slot = usize::from(method == Method::MonteCarlo);
                let rate = |ps: &mut dyn Iterator<Item = f64>, reject: bool| {
                    let v: Vec<f64> = ps.collect();
                    v.iter().filter(|&&p| (p < alpha) == reject).count() as f64 / v.len() as f64
                };
                let type_i = rate(&mut reps.iter().filter_map(|r| r.0[slot]), true);
                let type_ii = config
                    .type_ii
                    .then(|| rate(&mut reps.iter().filter_map(|r| r.1.and_then(|p| p[slot])), false));
                rows.push(CalibrationRow {
                    case,
                    cond_dim: d,
                    n,
                    alpha,
                    method,
                    replications: config.replications,
                    type_i,
                    type_ii,
                });
            }
        }
    }
    Ok(rows)
}

pub fn write_calibration_csv<W: Write>(rows: &[CalibrationRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["case", "cond_dim", "n", "alpha", "method", "replications", "type_i", "type_ii"])?;
    for r in rows {
        w.write_record([
            enum_name(&r.case)?,
            r.cond_dim.to_string(),
            r.n.to_string(),
            r.alpha.to_string(),
            enum_name(&r.method)?,
            r.replications.to_string(),
            r.type_i.to_string(),
            r.type_ii.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn enum_name<T: Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_value(v)?.as_str().unwrap_or_default().to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DagBenchConfig {
    pub num_vars: usize,
    pub edge_prob: f64,
    pub sample_sizes: Vec<usize>,
    pub replications: usize,
    pub alpha: f64,
    pub oracles: Vec<OracleKind>,
    pub max_cond: Option<usize>,
    pub seed: u64,
    pub test: TestConfig,
}

impl Default for DagBenchConfig {
    fn default() -> Self {
        DagBenchConfig {
            num_vars: 4,
            edge_prob: 0.5,
            sample_sizes: vec![100, 400, 700],
            replications: 40,
            alpha: 0.01,
            oracles: vec![OracleKind::Kci, OracleKind::PartialCorrelation],
            max_cond: None,
            seed: 0,
            test: TestConfig::default(),
        }
    }
}

impl DagBenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::InvalidArgument("replications must be positive".into()));
        }
        if self.num_vars < 2 {
            return Err(Error::InvalidArgument("num_vars must be >= 2".into()));
        }
        if self.sample_sizes.is_empty() || self.oracles.is_empty() {
            return Err(Error::InvalidArgument("empty experiment grid".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidArgument(format!("alpha {} not in (0, 1)", self.alpha)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DagBenchRow {
    pub n: usize,
    pub oracle: OracleKind,
    pub replications: usize,
    pub recovered: usize,
    pub recovery_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendSummary {
    pub oracle: OracleKind,
    /// Spearman correlation of recovery rate against sample size.
    pub spearman: f64,
    pub increasing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DagBenchResult {
    pub rows: Vec<DagBenchRow>,
    pub trends: Vec<TrendSummary>,
}

/// Fraction of random DAGs whose Markov equivalence class PC recovers,
/// per sample size and oracle. All oracles see the same datasets.
pub fn run_dag_bench(config: &DagBenchConfig) -> Result<DagBenchResult> {
    config.validate()?;
    let jobs: Vec<(usize, usize)> = (0..config.sample_sizes.len())
        .flat_map(|i| (0..config.replications).map(move |r| (i, r)))
        .collect();
    let options = PcOptions {
        alpha: config.alpha,
        max_cond: config.max_cond,
        parallel: false,
    };
    let hits: Vec<Vec<bool>> = jobs
        .par_iter()
        .map(|&(i, r)| {
            let n = config.sample_sizes[i];
            let seed = derive_seed(config.seed, &[n as u64, r as u64]);
            let mut dc = RandomDagConfig::new(config.num_vars, n, seed);
            dc.edge_prob = config.edge_prob;
            let sample = gen_random_dag_data(&dc)?;
            config
                .oracles
                .iter()
                .map(|&kind| {
                    let oracle = CiOracle::new(kind, config.alpha, config.test.clone().with_seed(seed))?;
                    let g = pc(&oracle.bind(&sample.data), &options)?;
                    markov_equivalent(&g, &sample.truth)
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for (i, &n) in config.sample_sizes.iter().enumerate() {
        let block = &hits[i * config.replications..(i + 1) * config.replications];
        for (k, &oracle) in config.oracles.iter().enumerate() {
            let recovered = block.iter().filter(|h| h[k]).count();
            rows.push(DagBenchRow {
                n,
                oracle,
                replications: config.replications,
                recovered,
                recovery_rate: recovered as f64 / config.replications as f64,
            });
        }
    }
    let trends = config
        .oracles
        .iter()
        .map(|&oracle| {
            let pts: Vec<(f64, f64)> = rows
                .iter()
                .filter(|r| r.oracle == oracle)
                .map(|r| (r.n as f64, r.recovery_rate))
                .collect();
            let rho = spearman(&pts);
            TrendSummary {
                oracle,
                spearman: rho,
                increasing: rho > 0.0,
            }
        })
        .collect();
    Ok(DagBenchResult { rows, trends })
}

pub fn write_dag_bench_csv<W: Write>(rows: &[DagBenchRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "oracle", "replications", "recovered", "recovery_rate"])?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            enum_name(&r.oracle)?,
            r.replications.to_string(),
            r.recovered.to_string(),
            r.recovery_rate.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Average ranks, ties sharing the mean rank.
fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = r;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation; 0 when either side is constant.
pub fn spearman(points: &[(f64, f64)]) -> f64 {
    let x = ranks(&points.iter().map(|p| p.0).collect::<Vec<_>>());
    let y = ranks(&points.iter().map(|p| p.1).collect::<Vec<_>>());
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx > 0.0 && syy > 0.0 {
        sxy / (sxx * syy).sqrt()
    } else {
        0.0
    }
}
