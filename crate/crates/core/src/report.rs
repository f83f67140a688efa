//! Test configuration and reports shared by both independence tests.

use serde::{Deserialize, Serialize};

use crate::kernel::DEFAULT_MEDIAN_CAP;
use crate::null::DEFAULT_MC_DRAWS;
use crate::spectral::{Truncation, DEFAULT_THRESHOLD};

/// How the p-value is obtained from the null distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Gamma,
    MonteCarlo,
    /// Compute both; the Monte Carlo value is the primary one.
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    pub method: Method,
    pub mc_draws: usize,
    pub seed: u64,
    /// Spectral truncation applied to kernel and null-weight eigenvalues.
    pub threshold: f64,
    /// Interpret `threshold` as a fraction of the largest eigenvalue of each
    /// truncated matrix rather than as an absolute cutoff.
    pub relative_truncation: bool,
    /// Rows used by the median-heuristic width.
    pub median_cap: usize,
    /// Conditioning sets with at least this many columns get GP-tuned
    /// regression hyperparameters.
    pub gp_threshold: usize,
    /// Optional override of the joint (X, Z) / Y kernel width.
    pub width: Option<f64>,
    /// Regularization used below `gp_threshold`.
    pub epsilon: f64,
}

impl Default for TestConfig {
    fn default() -> Self {
        TestConfig {
            method: Method::Gamma,
            mc_draws: DEFAULT_MC_DRAWS,
            seed: 0,
            threshold: DEFAULT_THRESHOLD,
            relative_truncation: true,
            median_cap: DEFAULT_MEDIAN_CAP,
            gp_threshold: 2,
            width: None,
            epsilon: 1e-3,
        }
    }
}

impl TestConfig {
    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn truncation(&self) -> Truncation {
        if self.relative_truncation {
            Truncation::Relative(self.threshold)
        } else {
            Truncation::Absolute(self.threshold)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    Unconditional,
    Conditional,
}

/// Regression hyperparameters of the conditional test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    /// Width of the kernel on (X, Z).
    pub width_xz: f64,
    /// Width of the kernel on Y.
    pub width_y: f64,
    pub sigma_z_f: f64,
    pub sigma_z_g: f64,
    pub epsilon_f: f64,
    pub epsilon_g: f64,
    pub used_gp: bool,
    /// GP search produced no finite objective; small-Z defaults were used.
    pub gp_fallback: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flags {
    /// X or Y carried no variation (zero centered kernel).
    pub degenerate: bool,
    /// All conditioning columns were constant; regression was the identity.
    pub constant_conditioning: bool,
    /// Extra diagonal jitter was needed to factor a regularized kernel.
    pub jitter_used: bool,
}

/// Result of an unconditional or conditional independence test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub kind: TestKind,
    pub statistic: f64,
    /// Primary p-value, always in (0, 1].
    pub p_value: f64,
    pub p_value_gamma: Option<f64>,
    pub p_value_mc: Option<f64>,
    pub method: Method,
    pub n: usize,
    pub cond_dim: usize,
    /// Kernel widths of the two tested sides.
    pub widths: (f64, f64),
    /// Retained eigenvalue counts of the two tested kernels.
    pub retained_eigs: (usize, usize),
    pub retained_null_weights: Option<usize>,
    pub null_mean: f64,
    pub null_variance: f64,
    pub hyperparams: Option<Hyperparams>,
    pub flags: Flags,
}

impl TestReport {
    pub fn rejects(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

/// Smallest reportable p-value; keeps reports in (0, 1] when a tail underflows.
pub const P_FLOOR: f64 = f64::MIN_POSITIVE;

pub(crate) fn floor_p(p: f64) -> f64 {
    if p.is_nan() {
        1.0
    } else {
        p.clamp(P_FLOOR, 1.0)
    }
}
