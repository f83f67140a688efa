//! Type I and Type II rates of the conditional test on post-nonlinear data.
//! Defaults are small; pass the replication count to scale up.
//!
//! `cargo run --release --example calibration -- 200`

use kcit::experiments::{run_calibration, with_workers, write_calibration_csv, CalibrationConfig};
use kcit::Method;

fn main() -> kcit::Result<()> {
    let reps = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(30);
    let config = CalibrationConfig {
        cond_dims: vec![1, 2],
        sample_sizes: vec![100, 200],
        alphas: vec![0.05],
        methods: vec![Method::Gamma, Method::MonteCarlo],
        replications: reps,
        seed: 1,
        ..CalibrationConfig::default()
    };
    // Results depend only on the seed, not on the worker count.
    let rows = with_workers(0, || run_calibration(&config))??;
    write_calibration_csv(&rows, std::io::stdout())
}
