//! The two synthetic generators, exported as CSV with a JSON sidecar that
//! records how each file was made.
//!
//! `cargo run --release --example synthetic_data -- /tmp/kcit-data`

use std::path::PathBuf;

use kcit::io::{export_csv, ingest_csv};
use kcit::synth::{gen_pnl, gen_random_dag_data, PnlCase, PnlConfig, RandomDagConfig};

fn main() -> kcit::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| std::env::temp_dir().display().to_string()));
    std::fs::create_dir_all(&dir)?;

    let pnl_cfg = PnlConfig::new(PnlCase::OneEffective, false, 3, 250, 5);
    let pnl = gen_pnl(&pnl_cfg)?;
    let side = export_csv(&dir.join("pnl.csv"), &pnl, &pnl_cfg)?;
    println!("post-nonlinear: {} x {} {:?} -> {}", pnl.nrows(), pnl.ncols(), pnl.column_names(), side.display());

    let mut dag_cfg = RandomDagConfig::new(5, 300, 9);
    dag_cfg.edge_prob = 0.4;
    let sample = gen_random_dag_data(&dag_cfg)?;
    export_csv(&dir.join("dag.csv"), &sample.data, &dag_cfg)?;
    println!("random DAG edges: {:?}", sample.dag.edges());

    // Reading back standardizes and drops incomplete rows.
    let back = ingest_csv(&dir.join("dag.csv"), Some(&["X1".into(), "X3".into()]))?;
    println!("re-read {} rows of {:?}, dropped {}", back.data.nrows(), back.data.column_names(), back.dropped_rows);
    Ok(())
}
