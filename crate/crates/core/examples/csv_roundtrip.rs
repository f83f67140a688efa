//! Runs a conditional test the way the CLI does: CSV in, JSON report out.
//!
//! `cargo run --release --example csv_roundtrip`

use kcit::io::{ingest_csv, to_json_string, Envelope};
use kcit::{ci_test, TestConfig};

fn main() -> kcit::Result<()> {
    let dir = std::env::temp_dir().join("kcit-roundtrip");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("obs.csv");
    // A chain a -> b -> c with one unusable row.
    let mut body = String::from("a,b,c\n");
    for i in 0..150 {
        let a = ((i * 37) % 101) as f64 / 50.0 - 1.0;
        let b = a.sin() + ((i * 53) % 17) as f64 / 40.0;
        let c = b * b + ((i * 29) % 13) as f64 / 30.0;
        body.push_str(&format!("{a},{b},{c}\n"));
    }
    body.push_str("0.5,NA,1.0\n");
    std::fs::write(&path, body)?;

    let sel = ["a", "c", "b"].map(String::from);
    let ingested = ingest_csv(&path, Some(&sel))?;
    let config = TestConfig::default();
    let report = ci_test(&ingested.data, &[0], &[1], &[2], &config)?;
    println!("dropped {} row(s)", ingested.dropped_rows);
    print!("{}", to_json_string(&Envelope::new("test-ci", &config, &report))?);
    Ok(())
}
