pub mod causal;
pub mod citest;
pub mod cli;
pub mod data;
pub mod error;
pub mod experiments;
pub mod gp;
pub mod io;
pub mod kernel;
pub mod null;
pub mod report;
pub mod spectral;
pub mod synth;
pub mod uitest;

pub use citest::{ci_test, select_hyperparams};
pub use data::{standardize, DataMatrix};
pub use error::{Error, Result};
pub use report::{Method, TestConfig, TestReport};
pub use uitest::ui_test;
