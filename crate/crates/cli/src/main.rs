use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use rrt_core::experiments::{
    load_dataset_csv, outlier_detect, parse_selectors, run_experiment, validate_appendix_b,
    validate_thm1, validate_thm2, validate_thm4, validate_thm6, Bundled, ExperimentSpec,
    HadamardSetup, LoadOptions, Regime,
};
use rrt_core::io::{read_matrix, read_vector};
use rrt_core::linalg::normalize_columns_with_scales;
use rrt_core::rrt::{rrt_recover, AlphaInfo, AlphaRule};

const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Parser, Serialize)]
#[command(
    name = "rrt",
    version,
    about = "Sparse recovery with OMP and residual ratio thresholding"
)]
struct Cli {
    /// Master seed [default: 20240601; `simulate` uses the seed in its JSON file]
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (defaults to all cores)
    #[arg(long, global = true)]
    #[serde(skip)]
    workers: Option<usize>,

    /// Directory for result files
    #[arg(long, global = true, env = "RRT_OUT_DIR")]
    #[serde(skip)]
    out_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Serialize, Clone)]
struct AlphaArgs {
    /// Fixed α, overriding --alpha-rule
    #[arg(long)]
    alpha: Option<f64>,

    /// inv_log_n, inv_sqrt_n or a number
    #[arg(long, default_value = "inv_log_n")]
    alpha_rule: String,
}

impl AlphaArgs {
    fn rule(&self) -> rrt_core::Result<AlphaRule> {
        match self.alpha {
            Some(a) => Ok(AlphaRule::Value(a)),
            None => self.alpha_rule.parse(),
        }
    }
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
enum Command {
    /// Recover a sparse vector from X.csv and y.csv with RRT
    Recover {
        x: PathBuf,
        y: PathBuf,
        #[command(flatten)]
        alpha: AlphaArgs,
        /// OMP iterations [default: min(p, (n+1)/2)]
        #[arg(long)]
        kmax: Option<usize>,
    },
    /// Run a Monte-Carlo experiment described by a JSON spec
    Simulate {
        spec: PathBuf,
        /// Comma-separated selectors overriding the JSON file, e.g. rrt:inv_log_n,omp_k0,cv:5
        #[arg(long)]
        selectors: Option<String>,
    },
    /// Check the theoretical guarantees by simulation
    #[command(subcommand)]
    Validate(Check),
    /// Flag outlying rows of a regression data set
    Outliers {
        /// stackloss, stars, brain_body or a CSV path (header row, response last)
        dataset: String,
        #[command(flatten)]
        alpha: AlphaArgs,
        /// Fit without an intercept column
        #[arg(long, conflicts_with = "intercept")]
        no_intercept: bool,
        /// Fit with an intercept column
        #[arg(long)]
        intercept: bool,
        /// Response column name [default: last column]
        #[arg(long)]
        response: Option<String>,
        /// Take natural logs of every value
        #[arg(long)]
        log: bool,
        /// Print the full report as JSON
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args, Serialize, Clone, Copy)]
struct HadamardArgs {
    #[arg(long, default_value_t = 32)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    k0: usize,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
enum Check {
    /// P(k_min = k0) and median RR(k_min) per SNR
    Thm1 {
        #[command(flatten)]
        setup: HadamardArgs,
        #[arg(long, value_delimiter = ',', default_value = "1,5,10,50")]
        snr: Vec<f64>,
    },
    /// Rate of RR(k) <= Γ(k) beyond k_min per SNR and α
    Thm2 {
        #[command(flatten)]
        setup: HadamardArgs,
        #[arg(long, value_delimiter = ',', default_value = "1,5,10,50")]
        snr: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.01")]
        alpha: Vec<f64>,
    },
    /// Γ(k0) as n grows under each dimension regime
    Thm4 {
        /// fixed_p, polynomial_p, subexp_p or exp_p [default: all]
        #[arg(long, value_delimiter = ',')]
        regime: Vec<String>,
        #[arg(long, default_value = "inv_log_n")]
        alpha_rule: String,
        #[arg(long, value_delimiter = ',', default_value = "100,1000,10000,100000")]
        n_grid: Vec<usize>,
    },
    /// RRT support error rates at one SNR
    Thm6 {
        #[command(flatten)]
        setup: HadamardArgs,
        #[arg(long, default_value_t = 100.0)]
        snr: f64,
        #[arg(long, default_value_t = 0.1)]
        alpha: f64,
    },
    /// KS distance of noise-only residual ratios to their Beta law
    AppendixB {
        #[arg(long, default_value_t = 32)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        k1: usize,
        #[arg(long, default_value_t = 3)]
        k2: usize,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<rrt_core::Error>() {
            return if e.is_config_error() {
                2
            } else if e.is_data_error() {
                3
            } else {
                4
            };
        }
        if cause.downcast_ref::<io::Error>().is_some()
            || cause.downcast_ref::<csv::Error>().is_some()
        {
            return 3;
        }
    }
    2
}

struct Provenance {
    header: String,
}

impl Provenance {
    fn new(config: &impl Serialize, seed: u64) -> Result<Self> {
        let digest = Sha256::digest(serde_json::to_vec(config)?);
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        Ok(Self {
            header: format!("rrt {} config={hex} seed={seed}", env!("CARGO_PKG_VERSION")),
        })
    }
}

fn out_file(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn write_rows<T: Serialize, W: Write>(mut out: W, prov: &Provenance, rows: &[T]) -> Result<()> {
    writeln!(out, "# {}", prov.header)?;
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct RecoverOutput<'a> {
    provenance: &'a str,
    n: usize,
    p: usize,
    k_selected: usize,
    /// Zero-based column indices.
    support: Vec<usize>,
    /// On the scale of the input columns.
    coefficients: Vec<f64>,
    alpha: Option<AlphaInfo>,
}

fn recover(cli: &Cli, x: &Path, y: &Path, alpha: &AlphaArgs, kmax: Option<usize>) -> Result<()> {
    let raw = read_matrix(x).with_context(|| format!("reading {}", x.display()))?;
    let y = read_vector(y).with_context(|| format!("reading {}", y.display()))?;
    if raw.nrows() != y.len() {
        return Err(rrt_core::Error::Dimension(format!(
            "X has {} rows but y has {} entries",
            raw.nrows(),
            y.len()
        ))
        .into());
    }
    let (design, scales) = normalize_columns_with_scales(raw)?;
    if let Some(k) = kmax {
        let limit = design.n().min(design.p());
        if k == 0 || k > limit {
            return Err(rrt_core::Error::Config(format!(
                "--kmax must lie in 1..={limit}, got {k}"
            ))
            .into());
        }
    }
    let alpha_value = alpha.rule()?.resolve(design.n())?;
    let est = rrt_recover(&design, &y, alpha_value, kmax)?;
    let prov = Provenance::new(&cli.command, cli.seed.unwrap_or(DEFAULT_SEED))?;
    let out = RecoverOutput {
        provenance: &prov.header,
        n: design.n(),
        p: design.p(),
        k_selected: est.k_selected,
        coefficients: est
            .support
            .iter()
            .zip(&est.coefficients)
            .map(|(&j, &b)| b / scales[j])
            .collect(),
        support: est.support,
        alpha: est.alpha,
    };
    let text = serde_json::to_string_pretty(&out)?;
    println!("{text}");
    if let Some(dir) = &cli.out_dir {
        writeln!(out_file(dir, "recovery.json")?, "{text}")?;
    }
    Ok(())
}

fn simulate(cli: &Cli, path: &Path, selectors: Option<&str>) -> Result<()> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut spec = ExperimentSpec::from_json(&text)?;
    if let Some(list) = selectors {
        spec.selectors = parse_selectors(list)?;
    }
    if let Some(seed) = cli.seed {
        spec.seed = seed;
    }
    let report = run_experiment(&spec)?;
    let prov = Provenance::new(&spec, spec.seed)?;
    match &cli.out_dir {
        Some(dir) => {
            report.write_trials_csv(out_file(dir, "trials.csv")?, Some(&prov.header))?;
            let mut summary = out_file(dir, "summary.json")?;
            report.write_summary_json(&mut summary)?;
            writeln!(summary)?;
        }
        None => println!("# {}", prov.header),
    }
    println!("selector,trials,mse,pe,median_l2,median_fp,median_fn,median_k");
    for s in &report.summary {
        println!(
            "{},{},{:.6e},{:.4},{:.6e},{},{},{}",
            s.selector,
            s.trials,
            s.mse,
            s.pe,
            s.l2_error.median,
            s.false_positives.median,
            s.false_negatives.median,
            s.k_selected.median
        );
    }
    Ok(())
}

fn hadamard(args: HadamardArgs, seed: u64) -> HadamardSetup {
    HadamardSetup {
        n: args.n,
        k0: args.k0,
        trials: args.trials,
        seed,
    }
}

fn emit<T: Serialize>(cli: &Cli, name: &str, prov: &Provenance, rows: &[T]) -> Result<()> {
    write_rows(io::stdout().lock(), prov, rows)?;
    if let Some(dir) = &cli.out_dir {
        write_rows(out_file(dir, &format!("{name}.csv"))?, prov, rows)?;
    }
    Ok(())
}

fn validate(cli: &Cli, check: &Check) -> Result<()> {
    let seed = cli.seed.unwrap_or(DEFAULT_SEED);
    let prov = Provenance::new(check, seed)?;
    match check {
        Check::Thm1 { setup, snr } => emit(
            cli,
            "thm1",
            &prov,
            &validate_thm1(&hadamard(*setup, seed), snr)?,
        ),
        Check::Thm2 { setup, snr, alpha } => emit(
            cli,
            "thm2",
            &prov,
            &validate_thm2(&hadamard(*setup, seed), snr, alpha)?,
        ),
        Check::Thm4 {
            regime,
            alpha_rule,
            n_grid,
        } => {
            let rule: AlphaRule = alpha_rule.parse()?;
            let regimes = if regime.is_empty() {
                Regime::ALL.to_vec()
            } else {
                regime
                    .iter()
                    .map(|r| r.parse())
                    .collect::<rrt_core::Result<_>>()?
            };
            #[derive(Serialize)]
            struct Row {
                regime: Regime,
                n: usize,
                ln_p: f64,
                k0: usize,
                k_max: usize,
                alpha: f64,
                gamma: f64,
                limit: f64,
            }
            let mut rows = Vec::new();
            for r in regimes {
                for g in validate_thm4(r, rule, n_grid)? {
                    rows.push(Row {
                        regime: r,
                        n: g.n,
                        ln_p: g.ln_p,
                        k0: g.k0,
                        k_max: g.k_max,
                        alpha: g.alpha,
                        gamma: g.gamma,
                        limit: r.limit(),
                    });
                }
            }
            emit(cli, "thm4", &prov, &rows)
        }
        Check::Thm6 { setup, snr, alpha } => emit(
            cli,
            "thm6",
            &prov,
            &[validate_thm6(&hadamard(*setup, seed), *snr, *alpha)?],
        ),
        Check::AppendixB { n, k1, k2, samples } => emit(
            cli,
            "appendix_b",
            &prov,
            &[validate_appendix_b(*n, *k1, *k2, *samples, seed)?],
        ),
    }
}

fn outliers(
    dataset: &str,
    alpha: &AlphaArgs,
    no_intercept: bool,
    intercept: bool,
    response: Option<&str>,
    log: bool,
    json: bool,
) -> Result<()> {
    let ds = match dataset.parse::<Bundled>() {
        Ok(b) => {
            let mut opts = b.default_options();
            opts.intercept = (opts.intercept || intercept) && !no_intercept;
            opts.log |= log;
            opts.response_column = response.map(str::to_string);
            b.load_with(&opts)?
        }
        Err(_) => {
            let opts = LoadOptions {
                intercept: !no_intercept,
                response_column: response.map(str::to_string),
                log,
            };
            load_dataset_csv(dataset, &opts).with_context(|| format!("loading {dataset}"))?
        }
    };
    let report = outlier_detect(&ds, alpha.rule()?)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        let rows: Vec<String> = report.outliers.iter().map(usize::to_string).collect();
        println!("{}", rows.join(" "));
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(w) = cli.workers {
        if w == 0 {
            return Err(rrt_core::Error::Config("--workers must be at least 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()?;
    }
    match &cli.command {
        Command::Recover { x, y, alpha, kmax } => recover(cli, x, y, alpha, *kmax),
        Command::Simulate { spec, selectors } => simulate(cli, spec, selectors.as_deref()),
        Command::Validate(check) => validate(cli, check),
        Command::Outliers {
            dataset,
            alpha,
            no_intercept,
            intercept,
            response,
            log,
            json,
        } => outliers(
            dataset,
            alpha,
            *no_intercept,
            *intercept,
            response.as_deref(),
            *log,
            *json,
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
