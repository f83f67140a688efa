//! PC causal discovery on data from a random GP-driven DAG, with both the
//! kernel and the partial-correlation oracle.
//!
//! `cargo run --release --example pc_discovery`

use kcit::causal::{markov_equivalent, pc, CiOracle, OracleKind, PcOptions};
use kcit::synth::{gen_random_dag_data, RandomDagConfig};
use kcit::TestConfig;

fn main() -> kcit::Result<()> {
    let sample = gen_random_dag_data(&RandomDagConfig::new(4, 400, 21))?;
    println!("true CPDAG:\n{}", sample.truth.to_dot());

    let data = sample.data.standardized();
    let options = PcOptions::new(0.01);
    for kind in [OracleKind::Kci, OracleKind::PartialCorrelation] {
        let oracle = CiOracle::new(kind, 0.01, TestConfig::default())?;
        let g = pc(&oracle.bind(&data), &options)?;
        println!(
            "{kind:?}: recovered class = {}, {} edges, {} v-structures",
            markov_equivalent(&g, &sample.truth)?,
            g.edges().len(),
            g.v_structures().len()
        );
        for (pair, set) in g.sepsets() {
            println!("  sepset {pair:?}: {set:?}");
        }
    }
    Ok(())
}
