use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use polarzip::bench::{self, TrialSettings};
use polarzip::codec::{default_eps_fix, threshold_for_metric, GammaMode};
use polarzip::container::{self, FileParams, Scheme};
use polarzip::oracle::{self, Coverage};
use polarzip::par::{self, Exec};
use polarzip::sc::{EngineKind, SelectionMetric};
use polarzip::source::{model_from_entropy, SourceModel};
use polarzip::{Error, Result};

#[derive(Parser)]
#[command(
    name = "polarzip",
    version,
    about = "Construction-free polar compression"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compress a file into a PZC1 container.
    Compress(CompressArgs),
    /// Restore the original bytes from a container.
    Decompress { input: PathBuf, output: PathBuf },
    /// Monte Carlo rate experiments.
    #[command(subcommand)]
    Bench(BenchCommand),
    /// Mean per-index entropy over sampled blocks.
    Profile(ProfileArgs),
    /// Compare SC conditionals against brute-force enumeration.
    OracleCheck(OracleArgs),
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// Symbol probabilities, comma separated; the count sets the radix.
    #[arg(long, value_delimiter = ',', conflicts_with = "entropy_base2")]
    probs: Option<Vec<f64>>,
    /// Binary source with this entropy in bits.
    #[arg(long)]
    entropy_base2: Option<f64>,
}

impl ModelArgs {
    fn model(&self) -> Result<SourceModel> {
        match (&self.probs, self.entropy_base2) {
            (Some(p), None) => SourceModel::new(p.clone()),
            (None, Some(h)) => model_from_entropy(h),
            _ => Err(Error::Parameter(
                "give exactly one of --probs or --entropy-base2".into(),
            )),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    #[value(name = "probability")]
    Probability,
    #[value(name = "llr_minsum")]
    LlrMinsum,
}

impl From<EngineArg> for EngineKind {
    fn from(e: EngineArg) -> Self {
        match e {
            EngineArg::Probability => EngineKind::Probability,
            EngineArg::LlrMinsum => EngineKind::LlrMinSum,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    #[value(name = "ml_error")]
    MlError,
    #[value(name = "entropy_h")]
    EntropyH,
    #[value(name = "abs_llr")]
    AbsLlr,
}

impl From<MetricArg> for SelectionMetric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::MlError => SelectionMetric::MlError,
            MetricArg::EntropyH => SelectionMetric::EntropyH,
            MetricArg::AbsLlr => SelectionMetric::AbsLlr,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Fixed,
    Adaptive,
}

#[derive(Clone, Copy, ValueEnum)]
enum GammaArg {
    #[value(name = "exact_llr")]
    ExactLlr,
    #[value(name = "paper_literal")]
    PaperLiteral,
}

impl From<GammaArg> for GammaMode {
    fn from(g: GammaArg) -> Self {
        match g {
            GammaArg::ExactLlr => GammaMode::ExactLlr,
            GammaArg::PaperLiteral => GammaMode::PaperLiteral,
        }
    }
}

#[derive(Args, Clone)]
struct CodingArgs {
    #[arg(long, value_enum, default_value = "probability")]
    engine: EngineArg,
    #[arg(long, value_enum, default_value = "ml_error")]
    metric: MetricArg,
    /// ε to |γ| conversion used for the abs_llr metric.
    #[arg(long, value_enum, default_value = "exact_llr")]
    gamma_mode: GammaArg,
}

impl CodingArgs {
    fn settings(&self) -> TrialSettings {
        TrialSettings {
            engine: self.engine.into(),
            metric: self.metric.into(),
            gamma_mode: self.gamma_mode.into(),
        }
    }
}

#[derive(Args)]
struct CompressArgs {
    input: PathBuf,
    output: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    /// Block size exponent, N = 2^block_exp.
    #[arg(long, default_value_t = 10)]
    block_exp: u32,
    #[arg(long, value_enum, default_value = "fixed")]
    scheme: SchemeArg,
    #[command(flatten)]
    coding: CodingArgs,
    /// Fixed-scheme threshold on the metric's scale (default derived from ε_fix).
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Args)]
struct OutArgs {
    /// Write CSV here instead of stdout.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Mean fixed-scheme rate per block size.
    Rate {
        #[command(flatten)]
        model: ModelArgs,
        /// Block exponents, e.g. `8:17` or `10,16`.
        #[arg(long, default_value = "8:17")]
        n_exp_range: String,
        #[command(flatten)]
        coding: CodingArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Mean rate over a grid of binary sources.
    Sweep {
        /// Probabilities of symbol 0, `start:stop:step` or a list, within (0, 0.5].
        #[arg(long, default_value = "0.05:0.5:0.05")]
        p_grid: String,
        #[arg(long, default_value = "10,16")]
        n_exp: String,
        #[command(flatten)]
        coding: CodingArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Block error rate of the rate-truncated fixed-length variant.
    Bler {
        #[arg(long)]
        entropy_base2: f64,
        #[arg(long, default_value = "10,14")]
        n_exp: String,
        /// Rate budgets, `start:stop:step`, strictly increasing.
        #[arg(long, default_value = "0.50:0.70:0.005")]
        rates: String,
        #[command(flatten)]
        coding: CodingArgs,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Args)]
struct ProfileArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    probs: Vec<f64>,
    #[arg(long)]
    n_exp: u32,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, default_value = "1,2")]
    n_exp: String,
    #[arg(long, default_value = "2,3")]
    radix: String,
    /// Check this many sampled blocks instead of every sequence.
    #[arg(long)]
    sampled: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn emit(csv: String, path: &Option<PathBuf>) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn compress(a: CompressArgs) -> Result<()> {
    let model = a.model.model()?;
    let metric: SelectionMetric = a.coding.metric.into();
    let threshold = match a.threshold {
        Some(t) => t,
        None => threshold_for_metric(
            metric,
            default_eps_fix(a.block_exp, model.radix()),
            a.coding.gamma_mode.into(),
        ),
    };
    let params = FileParams {
        model,
        n_exp: a.block_exp,
        scheme: match a.scheme {
            SchemeArg::Fixed => Scheme::Fixed,
            SchemeArg::Adaptive => Scheme::Adaptive,
        },
        engine: a.coding.engine.into(),
        metric,
        threshold,
    };
    let input = std::fs::read(&a.input)?;
    let (bytes, report) = container::compress_bytes(&input, &params, Exec::Parallel)?;
    std::fs::write(&a.output, &bytes)?;
    println!("blocks: {}", report.blocks);
    println!("symbols: {}", report.total_symbols);
    if let Some(r) = report.mean_analytic_rate {
        println!("analytic rate: {r}");
    }
    println!("container bits: {}", 8 * report.container_bytes);
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Compress(a) => compress(a)?,
        Command::Decompress { input, output } => {
            let data = std::fs::read(&input)?;
            let out = container::decompress_bytes(&data, Exec::Parallel)?;
            std::fs::write(&output, out)?;
        }
        Command::Bench(BenchCommand::Rate {
            model,
            n_exp_range,
            coding,
            out,
        }) => {
            let model = model.model()?;
            let n_exps = bench::parse_int_list(&n_exp_range)?;
            let settings = coding.settings();
            let rows = bench::bench_rate(
                &model,
                &n_exps,
                settings,
                out.trials,
                out.seed,
                Exec::Parallel,
            )?;
            for r in &rows {
                eprintln!("N=2^{}: {:.2?}", r.n_exp, r.summary.wall_time);
            }
            emit(bench::rate_csv(&model, settings, out.seed, &rows), &out.csv)?;
        }
        Command::Bench(BenchCommand::Sweep {
            p_grid,
            n_exp,
            coding,
            out,
        }) => {
            let grid = bench::parse_float_grid(&p_grid)?;
            let n_exps = bench::parse_int_list(&n_exp)?;
            let rows = bench::bench_sweep(
                &grid,
                &n_exps,
                coding.settings(),
                out.trials,
                out.seed,
                Exec::Parallel,
            )?;
            emit(bench::sweep_csv(&rows), &out.csv)?;
        }
        Command::Bench(BenchCommand::Bler {
            entropy_base2,
            n_exp,
            rates,
            coding,
            out,
        }) => {
            let model = model_from_entropy(entropy_base2)?;
            let n_exps = bench::parse_int_list(&n_exp)?;
            let rates = bench::parse_float_grid(&rates)?;
            let runs = bench::bench_bler(
                &model,
                &n_exps,
                &rates,
                coding.settings(),
                out.trials,
                out.seed,
                Exec::Parallel,
            )?;
            emit(bench::bler_csv(&runs), &out.csv)?;
        }
        Command::Profile(a) => {
            let model = SourceModel::new(a.probs)?;
            let rows = bench::profile(&model, a.n_exp, a.out.trials, a.out.seed, Exec::Parallel)?;
            emit(bench::profile_csv(&rows), &a.out.csv)?;
        }
        Command::OracleCheck(a) => {
            let n_exps = bench::parse_int_list(&a.n_exp)?;
            let radices = bench::parse_int_list(&a.radix)?;
            let coverage = match a.sampled {
                Some(count) => Coverage::Sampled {
                    count,
                    seed: a.seed,
                },
                None => Coverage::Exhaustive,
            };
            for &r in &radices {
                let radix = u8::try_from(r).map_err(|_| Error::Parameter(format!("radix {r}")))?;
                for model in oracle::check_models(radix)? {
                    for &n_exp in &n_exps {
                        let res =
                            oracle::check_against_oracle(&model, n_exp, coverage, 1e-9, |u| {
                                oracle::engine_conditionals(&model, n_exp, u)
                            })?;
                        match res {
                            Ok(count) => println!(
                                "pass radix={radix} N={} model={:?} comparisons={count}",
                                1u64 << n_exp,
                                model.probs()
                            ),
                            Err(dev) => {
                                println!("FAIL radix={radix} N={}: {dev}", 1u64 << n_exp);
                                return Ok(ExitCode::from(3));
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    par::configure_threads_from_env();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("polarzip: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
