//! How often PC recovers the Markov equivalence class of random 4-node DAGs
//! as the sample size grows, per oracle.
//!
//! `cargo run --release --example dag_benchmark -- 40`

use kcit::experiments::{run_dag_bench, with_workers, write_dag_bench_csv, DagBenchConfig};

fn main() -> kcit::Result<()> {
    let reps = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(8);
    let config = DagBenchConfig {
        sample_sizes: vec![100, 300],
        replications: reps,
        seed: 2,
        ..DagBenchConfig::default()
    };
    let result = with_workers(0, || run_dag_bench(&config))??;
    write_dag_bench_csv(&result.rows, std::io::stdout())?;
    for t in &result.trends {
        eprintln!("{:?}: Spearman {:.2}, increasing = {}", t.oracle, t.spearman, t.increasing);
    }
    Ok(())
}
