//! Command-line front end. The `kcit` binary only calls [`main`].

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::causal::{pc, CiOracle, OracleKind, PcOptions};
use crate::citest::ci_test;
use crate::error::{Error, Result};
use crate::experiments::{
    run_calibration, run_dag_bench, with_workers, write_calibration_csv, write_dag_bench_csv, CalibrationConfig,
    DagBenchConfig,
};
use crate::io::{export_csv, ingest_csv, ingest_csv_columns, read_headers, resolve_column, to_json_string, Envelope, Timings};
use crate::report::{Method, TestConfig, TestReport};
use crate::synth::{gen_pnl, gen_random_dag_data, NoiseFamily, PnlCase, PnlConfig, RandomDagConfig, WeightMode};
use crate::uitest::ui_test;

#[derive(Debug, Parser)]
#[command(name = "kcit", version, about = "Kernel-based (conditional) independence tests and PC causal discovery")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Unconditional test X _||_ Y on CSV columns.
    TestUi(TestArgs),
    /// Conditional test X _||_ Y | Z on CSV columns.
    TestCi(TestArgs),
    /// PC causal discovery on CSV columns; writes the CPDAG as JSON.
    Pc(PcArgs),
    /// Generate a synthetic dataset (CSV plus JSON sidecar).
    Gen(GenArgs),
    /// Type I / Type II calibration on post-nonlinear data.
    Calibrate(CalibrateArgs),
    /// Markov-equivalence-class recovery on random DAGs.
    DagBench(DagBenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodArg {
    Gamma,
    Mc,
    Both,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Gamma => Method::Gamma,
            MethodArg::Mc => Method::MonteCarlo,
            MethodArg::Both => Method::Both,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleArg {
    Kci,
    Pcorr,
}

impl From<OracleArg> for OracleKind {
    fn from(o: OracleArg) -> OracleKind {
        match o {
            OracleArg::Kci => OracleKind::Kci,
            OracleArg::Pcorr => OracleKind::PartialCorrelation,
        }
    }
}

/// Options shared by every command that runs a kernel test.
#[derive(Debug, Clone, Args, Serialize)]
pub struct KernelOpts {
    /// p-value route.
    #[arg(long, value_enum, default_value_t = MethodArg::Gamma)]
    pub method: MethodArg,
    /// Monte Carlo draws from the null (at least 100).
    #[arg(long, default_value_t = 5000)]
    pub mc_draws: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl KernelOpts {
    fn config(&self) -> Result<TestConfig> {
        if self.mc_draws < 100 {
            return Err(Error::InvalidArgument(format!("--mc-draws {} below 100", self.mc_draws)));
        }
        Ok(TestConfig {
            method: self.method.into(),
            mc_draws: self.mc_draws,
            seed: self.seed,
            ..TestConfig::default()
        })
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutputOpts {
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Include wall-clock timings in the JSON report.
    #[arg(long)]
    pub timings: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TestArgs {
    /// Headed CSV file.
    pub input: PathBuf,
    /// X columns (names or 0-based indices, comma separated).
    #[arg(long, value_delimiter = ',', required = true)]
    pub x: Vec<String>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub y: Vec<String>,
    /// Conditioning columns (test-ci only).
    #[arg(long, value_delimiter = ',')]
    pub z: Vec<String>,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[command(flatten)]
    pub kernel: KernelOpts,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputOpts,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PcArgs {
    pub input: PathBuf,
    /// Variables to use (default: all columns).
    #[arg(long, value_delimiter = ',')]
    pub columns: Vec<String>,
    /// Significance level. The value 0.001 suits multiple testing on real
    /// data but is never applied implicitly.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value_t = OracleArg::Kci)]
    pub oracle: OracleArg,
    /// Largest conditioning set (default: number of variables - 2).
    #[arg(long)]
    pub max_cond: Option<usize>,
    /// Worker threads (0: all cores). Never changes the result.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Also write the graph as Graphviz DOT.
    #[arg(long)]
    pub dot: Option<PathBuf>,
    #[command(flatten)]
    pub kernel: KernelOpts,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputOpts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GenKind {
    Pnl,
    Dag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseArg {
    One,
    All,
}

impl From<CaseArg> for PnlCase {
    fn from(c: CaseArg) -> PnlCase {
        match c {
            CaseArg::One => PnlCase::OneEffective,
            CaseArg::All => PnlCase::AllEffective,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseArg {
    Gaussian,
    Uniform,
    Laplace,
    Mixed,
}

impl From<NoiseArg> for NoiseFamily {
    fn from(n: NoiseArg) -> NoiseFamily {
        match n {
            NoiseArg::Gaussian => NoiseFamily::Gaussian,
            NoiseArg::Uniform => NoiseFamily::Uniform,
            NoiseArg::Laplace => NoiseFamily::Laplace,
            NoiseArg::Mixed => NoiseFamily::Mixed,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenArgs {
    #[arg(long, value_enum, default_value_t = GenKind::Pnl)]
    pub kind: GenKind,
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV; the sidecar JSON goes next to it.
    #[arg(long)]
    pub out: PathBuf,
    /// pnl: which conditioning variables drive X and Y.
    #[arg(long, value_enum, default_value_t = CaseArg::One)]
    pub case: CaseArg,
    /// pnl: add a shared variable so that X and Y are dependent given Z.
    #[arg(long)]
    pub dependent: bool,
    /// pnl: number of conditioning variables.
    #[arg(long, default_value_t = 1)]
    pub cond_dim: usize,
    #[arg(long, value_enum, default_value_t = NoiseArg::Mixed)]
    pub noise: NoiseArg,
    /// dag: number of variables.
    #[arg(long, default_value_t = 4)]
    pub num_vars: usize,
    /// dag: probability of each forward arrow.
    #[arg(long, default_value_t = 0.5)]
    pub edge_prob: f64,
    /// dag: use the kernel weights as amplitudes instead of inverse length scales.
    #[arg(long)]
    pub amplitude_weights: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CalibrateArgs {
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [CaseArg::One, CaseArg::All])]
    pub cases: Vec<CaseArg>,
    #[arg(long, value_delimiter = ',', default_values_t = [1usize])]
    pub dims: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [200usize])]
    pub ns: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.01, 0.05])]
    pub alphas: Vec<f64>,
    /// p-value routes to tabulate (gamma and/or mc).
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [MethodArg::Gamma])]
    pub methods: Vec<MethodArg>,
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    /// Skip the dependent variant (no Type II column).
    #[arg(long)]
    pub no_type_ii: bool,
    #[arg(long, value_enum, default_value_t = NoiseArg::Mixed)]
    pub noise: NoiseArg,
    #[arg(long, default_value_t = 5000)]
    pub mc_draws: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (0: all cores). Never changes the result
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// CSV table; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Optional JSON report with the configuration echo and rows.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Include wall-clock timings in the JSON report
    #[arg(long)]
    pub timings: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DagBenchArgs {
    #[arg(long, default_value_t = 4)]
    pub num_vars: usize,
    #[arg(long, default_value_t = 0.5)]
    pub edge_prob: f64,
    #[arg(long, value_delimiter = ',', default_values_t = [100usize, 400, 700])]
    pub ns: Vec<usize>,
    #[arg(long, default_value_t = 40)]
    pub reps: usize,
    #[arg(long, default_value_t = 0.01)]
    pub alpha: f64,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [OracleArg::Kci, OracleArg::Pcorr])]
    pub oracles: Vec<OracleArg>,
    /// Largest conditioning set (default: number of variables - 2)
    #[arg(long)]
    pub max_cond: Option<usize>,
    #[command(flatten)]
    pub kernel: KernelOpts,
    /// Worker threads (0: all cores). Never changes the result
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// CSV table; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Optional JSON report with the configuration echo, rows and trends.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Include wall-clock timings in the JSON report
    #[arg(long)]
    pub timings: bool,
}

/// Result of `test-ui` / `test-ci`.
#[derive(Debug, Clone, Serialize)]
pub struct TestOutcome {
    pub x: Vec<String>,
    pub y: Vec<String>,
    pub z: Vec<String>,
    pub dropped_rows: usize,
    pub reject: bool,
    pub report: TestReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct PcOutcome {
    pub dropped_rows: usize,
    pub graph: crate::causal::Cpdag,
}

#[derive(Debug, Clone, Serialize)]
pub struct GenOutcome {
    pub csv: String,
    pub sidecar: String,
    pub n: usize,
    pub columns: Vec<String>,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("alpha {alpha} not in (0, 1)")))
    }
}

fn emit<C: Serialize, R: Serialize>(
    mut env: Envelope<C, R>,
    start: Instant,
    timings: bool,
    out: Option<&Path>,
) -> Result<()> {
    if timings {
        env.timings = Some(Timings {
            total_seconds: start.elapsed().as_secs_f64(),
        });
    }
    let text = to_json_string(&env)?;
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn run_test(args: &TestArgs, conditional: bool) -> Result<()> {
    let start = Instant::now();
    check_alpha(args.alpha)?;
    let config = args.kernel.config()?;
    if !conditional && !args.z.is_empty() {
        return Err(Error::InvalidArgument("test-ui takes no --z columns".into()));
    }
    let headers = read_headers(&args.input)?;
    let resolve = |sel: &[String]| -> Result<Vec<usize>> { sel.iter().map(|s| resolve_column(&headers, s)).collect() };
    let requested: Vec<usize> = [resolve(&args.x)?, resolve(&args.y)?, resolve(&args.z)?].concat();
    let (nx, ny) = (args.x.len(), args.y.len());
    // Ingest each distinct column once; overlaps are reported by the test.
    let mut unique = requested.clone();
    unique.sort_unstable();
    unique.dedup();
    let ingested = ingest_csv_columns(&args.input, &unique)?;
    let canonical: Vec<usize> = requested
        .iter()
        .map(|c| unique.binary_search(c).unwrap_or_default())
        .collect();
    let (x, rest) = canonical.split_at(nx);
    let (y, z) = rest.split_at(ny);
    let report = if conditional {
        ci_test(&ingested.data, x, y, z, &config)?
    } else {
        ui_test(&ingested.data, x, y, &config)?
    };
    let names = |cols: &[usize]| cols.iter().map(|&c| ingested.data.column_names()[c].clone()).collect();
    let outcome = TestOutcome {
        x: names(x),
        y: names(y),
        z: names(z),
        dropped_rows: ingested.dropped_rows,
        reject: report.rejects(args.alpha),
        report,
    };
    let command = if conditional { "test-ci" } else { "test-ui" };
    emit(Envelope::new(command, args, outcome), start, args.output.timings, args.output.out.as_deref())
}

fn run_pc(args: &PcArgs) -> Result<()> {
    let start = Instant::now();
    check_alpha(args.alpha)?;
    let config = args.kernel.config()?;
    let selectors = (!args.columns.is_empty()).then_some(args.columns.as_slice());
    let ingested = ingest_csv(&args.input, selectors)?;
    let oracle = CiOracle::new(args.oracle.into(), args.alpha, config)?;
    let options = PcOptions {
        alpha: args.alpha,
        max_cond: args.max_cond,
        parallel: args.workers != 1,
    };
    let bound = oracle.bind(&ingested.data);
    let graph = with_workers(args.workers, || pc(&bound, &options))??;
    if let Some(p) = &args.dot {
        std::fs::write(p, graph.to_dot())?;
    }
    let outcome = PcOutcome {
        dropped_rows: ingested.dropped_rows,
        graph,
    };
    emit(Envelope::new("pc", args, outcome), start, args.output.timings, args.output.out.as_deref())
}

fn run_gen(args: &GenArgs) -> Result<()> {
    let (data, sidecar) = match args.kind {
        GenKind::Pnl => {
            let mut cfg = PnlConfig::new(args.case.into(), args.dependent, args.cond_dim, args.n, args.seed);
            cfg.noise_family = args.noise.into();
            let data = gen_pnl(&cfg)?;
            let truth = serde_json::json!({
                "conditionally_independent": !args.dependent,
                "x": "X",
                "y": "Y",
                "z": (1..=args.cond_dim).map(|i| format!("Z{i}")).collect::<Vec<_>>(),
            });
            (data, serde_json::json!({ "kind": "pnl", "config": cfg, "ground_truth": truth }))
        }
        GenKind::Dag => {
            let mut cfg = RandomDagConfig::new(args.num_vars, args.n, args.seed);
            cfg.edge_prob = args.edge_prob;
            if args.amplitude_weights {
                cfg.weight_mode = WeightMode::Amplitude;
            }
            let sample = gen_random_dag_data(&cfg)?;
            let names = sample.data.column_names().to_vec();
            let edges: Vec<(String, String)> = sample
                .dag
                .edges()
                .iter()
                .map(|&(a, b)| (names[a].clone(), names[b].clone()))
                .collect();
            let truth = serde_json::json!({ "dag_edges": edges, "cpdag": sample.truth });
            (sample.data, serde_json::json!({ "kind": "dag", "config": cfg, "ground_truth": truth }))
        }
    };
    let meta = Envelope::new("gen", args, sidecar);
    let side = export_csv(&args.out, &data, &meta)?;
    let outcome = GenOutcome {
        csv: args.out.display().to_string(),
        sidecar: side.display().to_string(),
        n: data.nrows(),
        columns: data.column_names().to_vec(),
    };
    emit(Envelope::new("gen", args, outcome), Instant::now(), false, None)
}

fn run_calibrate(args: &CalibrateArgs) -> Result<()> {
    let start = Instant::now();
    let test = KernelOpts {
        method: MethodArg::Gamma,
        mc_draws: args.mc_draws,
        seed: args.seed,
    }
    .config()?;
    let mut methods: Vec<Method> = Vec::new();
    for m in &args.methods {
        match m {
            MethodArg::Both => methods.extend([Method::Gamma, Method::MonteCarlo]),
            other => methods.push((*other).into()),
        }
    }
    methods.dedup();
    let config = CalibrationConfig {
        cases: args.cases.iter().map(|&c| c.into()).collect(),
        cond_dims: args.dims.clone(),
        sample_sizes: args.ns.clone(),
        alphas: args.alphas.clone(),
        methods,
        replications: args.reps,
        type_ii: !args.no_type_ii,
        noise_family: args.noise.into(),
        seed: args.seed,
        test,
    };
    let rows = with_workers(args.workers, || run_calibration(&config))??;
    write_table(args.out.as_deref(), |w| write_calibration_csv(&rows, w))?;
    if let Some(p) = &args.report {
        emit(Envelope::new("calibrate", &config, &rows), start, args.timings, Some(p))?;
    }
    Ok(())
}

fn run_bench(args: &DagBenchArgs) -> Result<()> {
    let start = Instant::now();
    let config = DagBenchConfig {
        num_vars: args.num_vars,
        edge_prob: args.edge_prob,
        sample_sizes: args.ns.clone(),
        replications: args.reps,
        alpha: args.alpha,
        oracles: args.oracles.iter().map(|&o| o.into()).collect(),
        max_cond: args.max_cond,
        seed: args.kernel.seed,
        test: args.kernel.config()?,
    };
    let result = with_workers(args.workers, || run_dag_bench(&config))??;
    write_table(args.out.as_deref(), |w| write_dag_bench_csv(&result.rows, w))?;
    for t in &result.trends {
        eprintln!(
            "trend {:?}: spearman {:.3} ({})",
            t.oracle,
            t.spearman,
            if t.increasing { "increasing" } else { "not increasing" }
        );
    }
    if let Some(p) = &args.report {
        emit(Envelope::new("dag-bench", &config, &result), start, args.timings, Some(p))?;
    }
    Ok(())
}

fn write_table(out: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match out {
        Some(p) => write(&mut std::fs::File::create(p)?),
        None => write(&mut std::io::stdout().lock()),
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::TestUi(a) => run_test(a, false),
        Command::TestCi(a) => run_test(a, true),
        Command::Pc(a) => run_pc(a),
        Command::Gen(a) => run_gen(a),
        Command::Calibrate(a) => run_calibrate(a),
        Command::DagBench(a) => run_bench(a),
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main() -> i32 {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn parses_flags() {
        let cli = Cli::try_parse_from([
            "kcit", "test-ci", "d.csv", "--x", "a", "--y", "1", "--z", "c,d", "--method", "both", "--mc-draws", "200",
            "--seed", "7",
        ])
        .unwrap();
        match cli.command {
            Command::TestCi(a) => {
                assert_eq!(a.z, vec!["c", "d"]);
                assert_eq!(a.kernel.method, MethodArg::Both);
                assert_eq!(a.kernel.config().unwrap().mc_draws, 200);
            }
            other => panic!("{other:?}"),
        }
        let cli = Cli::try_parse_from(["kcit", "pc", "d.csv", "--oracle", "pcorr", "--max-cond", "2", "--workers", "2"])
            .unwrap();
        assert!(matches!(cli.command, Command::Pc(PcArgs { oracle: OracleArg::Pcorr, max_cond: Some(2), .. })));
    }

    #[test]
    fn rejects_bad_values() {
        let k = KernelOpts {
            method: MethodArg::Gamma,
            mc_draws: 50,
            seed: 0,
        };
        assert!(k.config().is_err());
        assert!(check_alpha(1.0).is_err() && check_alpha(0.0).is_err());
    }
}
