//! Synthetic data generators.

pub mod dag;
pub mod pnl;

pub use dag::{dag_node_names, gen_random_dag_data, DagSample, RandomDagConfig, WeightMode, MAGNITUDE_LIMIT};

pub use pnl::{gen_pnl, pnl_z_cols, random_smooth_mixture, NoiseFamily, PnlCase, PnlConfig, SmoothMixture, PNL_X, PNL_Y};
