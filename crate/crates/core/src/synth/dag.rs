//! Random DAGs whose nodes are Gaussian-process draws over their parents.
//!
//! Arrows go from `X_i` to `X_j` only for `i < j`, each present with
//! probability `edge_prob`. A root is i.i.d. standard normal. A node with
//! parents `P` is one draw, jointly over the `n` samples, from a normal with
//! mean `sum_p U_p x_p` (`U_p ~ U[coeff_range]`) and covariance
//! `k(x_P, x_P') + noise_sd^2 I`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::causal::{Cpdag, Dag};
use crate::data::DataMatrix;
use crate::error::{Error, Result};

/// Largest magnitude a generated value may reach.
pub const MAGNITUDE_LIMIT: f64 = 1e6;

/// How the per-dimension weights enter the parent kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    /// `exp(-sum_d w_d (a_d - b_d)^2)`.
    #[default]
    InverseLengthScale,
    /// `sum_d w_d exp(-(a_d - b_d)^2)`.
    Amplitude,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomDagConfig {
    pub num_vars: usize,
    pub edge_prob: f64,
    pub n: usize,
    pub seed: u64,
    pub weight_range: (f64, f64),
    pub coeff_range: (f64, f64),
    pub noise_sd: f64,
    #[serde(default)]
    pub weight_mode: WeightMode,
}

impl RandomDagConfig {
    pub fn new(num_vars: usize, n: usize, seed: u64) -> Self {
        RandomDagConfig {
            num_vars,
            edge_prob: 0.5,
            n,
            seed,
            weight_range: (0.1, 0.6),
            coeff_range: (-2.0, 2.0),
            noise_sd: 0.1,
            weight_mode: WeightMode::InverseLengthScale,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_vars < 2 {
            return Err(Error::InvalidArgument("num_vars must be >= 2".into()));
        }
        if !(0.0..=1.0).contains(&self.edge_prob) {
            return Err(Error::InvalidArgument(format!(
                "edge_prob {} not in [0, 1]",
                self.edge_prob
            )));
        }
        if self.n < 2 {
            return Err(Error::InvalidArgument("need at least 2 samples".into()));
        }
        let (wl, wh) = self.weight_range;
        let (cl, ch) = self.coeff_range;
        if !(wl > 0.0 && wl <= wh && cl <= ch && self.noise_sd > 0.0) {
            return Err(Error::InvalidArgument("bad weight, coefficient or noise range".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DagSample {
    pub dag: Dag,
    /// CPDAG of the generating DAG.
    pub truth: Cpdag,
    /// Unstandardized columns `X1..Xd`.
    pub data: DataMatrix,
}

pub fn dag_node_names(d: usize) -> Vec<String> {
    (1..=d).map(|i| format!("X{i}")).collect()
}

pub fn gen_random_dag_data(config: &RandomDagConfig) -> Result<DagSample> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let d = config.num_vars;
    let mut edges = Vec::new();
    for j in 0..d {
        for i in 0..j {
            if rng.random_bool(config.edge_prob) {
                edges.push((i, j));
            }
        }
    }
    let dag = Dag::new(d, &edges)?;

    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(d);
    for j in 0..d {
        let col = if dag.parents(j).is_empty() {
            (0..config.n).map(|_| StandardNormal.sample(&mut rng)).collect()
        } else {
            let parents: Vec<&[f64]> = dag.parents(j).iter().map(|&p| columns[p].as_slice()).collect();
            gp_node(&parents, config, &mut rng)?
        };
        if let Some(t) = col.iter().position(|v: &f64| !(v.abs() <= MAGNITUDE_LIMIT)) {
            return Err(Error::InvalidArgument(format!(
                "node {} sample {t} has magnitude beyond {MAGNITUDE_LIMIT:e}",
                j + 1
            )));
        }
        columns.push(col);
    }
    let names = dag_node_names(d);
    let truth = dag.to_cpdag(names.clone())?;
    let data = DataMatrix::from_named_columns(&columns, names)?;
    Ok(DagSample { dag, truth, data })
}

fn gp_node<R: Rng + ?Sized>(parents: &[&[f64]], config: &RandomDagConfig, rng: &mut R) -> Result<Vec<f64>> {
    let n = config.n;
    let (cl, ch) = config.coeff_range;
    let (wl, wh) = config.weight_range;
    let coeffs: Vec<f64> = parents.iter().map(|_| rng.random_range(cl..=ch)).collect();
    let weights: Vec<f64> = parents.iter().map(|_| rng.random_range(wl..=wh)).collect();
    let mean = DVector::from_fn(n, |t, _| coeffs.iter().zip(parents).map(|(u, p)| u * p[t]).sum());
    let mut cov = DMatrix::from_fn(n, n, |s, t| {
        let sq = |p: &[f64]| (p[s] - p[t]).powi(2);
        match config.weight_mode {
            WeightMode::InverseLengthScale => {
                (-weights.iter().zip(parents).map(|(w, p)| w * sq(p)).sum::<f64>()).exp()
            }
            WeightMode::Amplitude => weights.iter().zip(parents).map(|(w, p)| w * (-sq(p)).exp()).sum(),
        }
    });
    for t in 0..n {
        cov[(t, t)] += config.noise_sd * config.noise_sd;
    }
    let l = cholesky_with_jitter(cov)?;
    let e = DVector::from_fn(n, |_, _| StandardNormal.sample(rng));
    Ok((mean + l * e).iter().copied().collect())
}

fn cholesky_with_jitter(cov: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = cov.nrows();
    let mut jitter = 1e-10 * (cov.trace() / n as f64);
    for attempt in 0..=3 {
        let a = if attempt == 0 {
            cov.clone()
        } else {
            &cov + DMatrix::identity(n, n) * jitter
        };
        if let Some(c) = a.cholesky() {
            return Ok(c.l());
        }
        if attempt > 0 {
            jitter *= 10.0;
        }
    }
    Err(Error::Factorization(format!("GP covariance not positive definite (n = {n})")))
}
