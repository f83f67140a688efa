//! Post-nonlinear conditional-independence benchmarks.
//!
//! `X = G(F(Z) + E)` and `Y = G'(F'(Z) + E')` with independent random
//! mixtures `F, G` and independent noises, so `X _||_ Y | Z`. The dependent
//! variant adds one shared standard normal to both (after standardizing them),
//! which breaks conditional independence.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::DataMatrix;
use crate::error::{Error, Result};

/// `f(u) = a u + b u^3 + c tanh(u)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothMixture {
    pub linear: f64,
    pub cubic: f64,
    pub tanh: f64,
}

impl SmoothMixture {
    pub fn new(linear: f64, cubic: f64, tanh: f64) -> Self {
        SmoothMixture {
            linear,
            cubic,
            tanh,
        }
    }

    /// Coefficients i.i.d. uniform on [-1, 1].
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        SmoothMixture {
            linear: rng.random_range(-1.0..=1.0),
            cubic: rng.random_range(-1.0..=1.0),
            tanh: rng.random_range(-1.0..=1.0),
        }
    }

    /// Monotone mixture: all coefficients share a random sign and the linear
    /// part has magnitude at least 0.2.
    pub fn random_monotone<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        SmoothMixture {
            linear: sign * rng.random_range(0.2..=1.0),
            cubic: sign * rng.random_range(0.0..=1.0),
            tanh: sign * rng.random_range(0.0..=1.0),
        }
    }

    pub fn eval(&self, u: f64) -> f64 {
        self.linear * u + self.cubic * u * u * u + self.tanh * u.tanh()
    }
}

/// Draws a mixture with coefficients uniform on [-1, 1] from `seed`.
pub fn random_smooth_mixture(seed: u64) -> SmoothMixture {
    SmoothMixture::random(&mut ChaCha8Rng::seed_from_u64(seed))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PnlCase {
    /// Only `Z1` drives X and Y; the other conditioning variables are noise.
    OneEffective,
    /// Every `Z_i` contributes through its own mixture.
    AllEffective,
}

/// Unit-variance noise families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NoiseFamily {
    Gaussian,
    Uniform,
    Laplace,
    /// Each noise term picks one of the three families uniformly.
    #[default]
    Mixed,
}

impl NoiseFamily {
    fn resolve<R: Rng + ?Sized>(self, rng: &mut R) -> NoiseFamily {
        match self {
            NoiseFamily::Mixed => match rng.random_range(0..3) {
                0 => NoiseFamily::Gaussian,
                1 => NoiseFamily::Uniform,
                _ => NoiseFamily::Laplace,
            },
            f => f,
        }
    }

    fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            NoiseFamily::Gaussian | NoiseFamily::Mixed => StandardNormal.sample(rng),
            NoiseFamily::Uniform => {
                let h = 3f64.sqrt();
                rng.random_range(-h..h)
            }
            NoiseFamily::Laplace => {
                let a: f64 = Exp1.sample(rng);
                let b: f64 = Exp1.sample(rng);
                (a - b) * std::f64::consts::FRAC_1_SQRT_2
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PnlConfig {
    pub case: PnlCase,
    pub dependent: bool,
    pub cond_dim: usize,
    pub n: usize,
    pub noise_family: NoiseFamily,
    pub seed: u64,
}

impl PnlConfig {
    pub fn new(case: PnlCase, dependent: bool, cond_dim: usize, n: usize, seed: u64) -> Self {
        PnlConfig {
            case,
            dependent,
            cond_dim,
            n,
            noise_family: NoiseFamily::Mixed,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.cond_dim < 1 {
            return Err(Error::InvalidArgument("conditioning dimension must be >= 1".into()));
        }
        if self.n < 10 {
            return Err(Error::InvalidArgument("need at least 10 samples".into()));
        }
        Ok(())
    }
}

/// Column layout of generated data: `X`, `Y`, then `Z1..ZD`.
pub const PNL_X: usize = 0;
pub const PNL_Y: usize = 1;

pub fn pnl_z_cols(cond_dim: usize) -> Vec<usize> {
    (2..2 + cond_dim).collect()
}

/// Generates one post-nonlinear dataset (unstandardized).
pub fn gen_pnl(config: &PnlConfig) -> Result<DataMatrix> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = config.n;
    let d = config.cond_dim;
    let z: Vec<Vec<f64>> = (0..d)
        .map(|_| (0..n).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect();

    let mut x = effect(&z, config, &mut rng);
    let mut y = effect(&z, config, &mut rng);
    if config.dependent {
        standardize_in_place(&mut x);
        standardize_in_place(&mut y);
        for t in 0..n {
            let s: f64 = StandardNormal.sample(&mut rng);
            x[t] += s;
            y[t] += s;
        }
    }

    let mut columns = vec![x, y];
    columns.extend(z);
    let mut names = vec!["X".to_string(), "Y".to_string()];
    names.extend((1..=d).map(|i| format!("Z{i}")));
    DataMatrix::from_named_columns(&columns, names)
}

fn effect<R: Rng + ?Sized>(z: &[Vec<f64>], config: &PnlConfig, rng: &mut R) -> Vec<f64> {
    let active = match config.case {
        PnlCase::OneEffective => 1,
        PnlCase::AllEffective => z.len(),
    };
    let inner: Vec<SmoothMixture> = (0..active).map(|_| SmoothMixture::random(rng)).collect();
    let outer = SmoothMixture::random_monotone(rng);
    let family = config.noise_family.resolve(rng);
    (0..config.n)
        .map(|t| {
            let drive: f64 = inner.iter().zip(z).map(|(f, zc)| f.eval(zc[t])).sum();
            outer.eval(drive + family.sample(rng))
        })
        .collect()
}

fn standardize_in_place(v: &mut [f64]) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sd = (v.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let sd = if sd > 0.0 { sd } else { 1.0 };
    v.iter_mut().for_each(|a| *a = (*a - mean) / sd);
}
