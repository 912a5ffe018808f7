use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use onebit::harness::{
    check_theory, parse_values, run_experiment, Decoder, ExperimentConfig, Sweep, TheoryCheck,
    TheoryOptions,
};
use onebit::path::{run_path_with, select_lambda, write_path_csv};
use onebit::sensing::io::{fmt_real, load_problem, save_problem, write_problem_csv};
use onebit::sensing::{generate_with, SignalShape};
use onebit::{decode_l1_with, decode_ls, report, Error, PathOptions, Problem};

/// 1-bit compressive sensing: generate problems, decode them, run experiments
#[derive(Parser, Debug)]
#[command(name = "onebit", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic problem in the binary container
    Generate {
        #[command(flatten)]
        model: ModelArgs,
        /// Output file
        #[arg(long)]
        out: PathBuf,
        /// Also export the problem as CSV (y, psi_0, ...)
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Least-squares decode of a problem file
    DecodeLs {
        #[arg(long)]
        input: PathBuf,
        /// Estimate as CSV (j, x_hat); stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// l1 decode with continuation and the voting rule
    DecodeL1 {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        path: PathArgs,
        /// Estimate as CSV (j, x_hat); stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dump the continuation path (t, lambda, support_size, kkt_residual, converged, skipped)
    Path {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        path: PathArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replicated runs of a scenario, optionally swept over one parameter
    Experiment {
        /// key = value configuration file
        #[arg(long)]
        config: Option<PathBuf>,
        /// Named preset (table1-a, fig2, fig4c, ...)
        #[arg(long)]
        scenario: Option<String>,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        path: PathArgs,
        /// ls or l1-pdasc
        #[arg(long)]
        decoder: Option<String>,
        /// Parameter to sweep: m, n, s, nu, sigma or flip_prob
        #[arg(long, requires = "values")]
        sweep: Option<String>,
        /// Sweep values, `start:step:stop` or a comma list
        #[arg(long, requires = "sweep", allow_hyphen_values = true)]
        values: Option<String>,
        #[arg(long)]
        reps: Option<usize>,
        /// Worker threads (0 = all cores)
        #[arg(long)]
        threads: Option<usize>,
        /// Refit the l1 estimate by least squares on its support
        #[arg(long)]
        refit: bool,
        /// Score the negated estimate
        #[arg(long)]
        negate: bool,
        /// Add a wall_time column
        #[arg(long)]
        timing: bool,
        /// Allow the 5000 x 20000 presets
        #[arg(long)]
        large: bool,
        /// CSV output; stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte-Carlo checks of the theory; exit code 1 if any fails
    CheckTheory {
        /// lemma21, scaling-ls, scaling-l1 or all
        #[arg(default_value = "all")]
        which: Vec<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        threads: Option<usize>,
    },
}

#[derive(Args, Debug, Default)]
struct ModelArgs {
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    s: Option<usize>,
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    /// Sign-flip probability
    #[arg(long)]
    flip: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Nonzeros of the true signal: equal (±1) or normal
    #[arg(long)]
    signal: Option<String>,
}

impl ModelArgs {
    fn signal(&self) -> Result<Option<SignalShape>, Failure> {
        Ok(self.signal.as_deref().map(str::parse).transpose()?)
    }

    fn apply(&self, p: &mut onebit::ModelParams) {
        p.m = self.m.unwrap_or(p.m);
        p.n = self.n.unwrap_or(p.n);
        p.s = self.s.unwrap_or(p.s);
        p.nu = self.nu.unwrap_or(p.nu);
        p.sigma = self.sigma.unwrap_or(p.sigma);
        p.flip_prob = self.flip.unwrap_or(p.flip_prob);
        p.seed = self.seed.unwrap_or(p.seed);
    }
}

#[derive(Args, Debug, Default)]
struct PathArgs {
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    max_grid: Option<usize>,
    #[arg(long)]
    max_iter: Option<usize>,
}

impl PathArgs {
    fn apply(&self, o: &mut PathOptions) {
        o.rho = self.rho.unwrap_or(o.rho);
        o.max_grid = self.max_grid.unwrap_or(o.max_grid);
        o.max_iter = self.max_iter.unwrap_or(o.max_iter);
    }

    fn options(&self) -> PathOptions {
        let mut o = PathOptions::default();
        self.apply(&mut o);
        o
    }
}

#[derive(Debug)]
enum Failure {
    Check(String),
    Compute(Error),
    Usage(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Self::Check(_) | Self::Compute(_) => 1,
            Self::Usage(_) => 2,
            Self::Io(_) => 3,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParams(msg) => Self::Usage(msg),
            Error::Io(e) => Self::Io(e.to_string()),
            Error::Format(msg) => Self::Io(msg),
            Error::Csv(e) => Self::Io(e.to_string()),
            other => Self::Compute(other),
        }
    }
}

fn with_path(path: &Path) -> impl Fn(Error) -> Failure + '_ {
    move |e| match Failure::from(e) {
        Failure::Io(msg) => Failure::Io(format!("{}: {msg}", path.display())),
        other => other,
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

/// Runs `write` against the file at `out`, or stdout.
fn emit(
    out: Option<&Path>,
    write: impl FnOnce(&mut dyn Write) -> onebit::Result<()>,
) -> Result<(), Failure> {
    match out {
        Some(p) => {
            let mut f = create(p)?;
            write(&mut f).map_err(with_path(p))
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock).map_err(Failure::from)
        }
    }
}

fn load(input: &Path) -> Result<Problem, Failure> {
    load_problem(input).map_err(with_path(input))
}

fn write_estimate(x: &[f64], w: &mut dyn Write) -> onebit::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["j", "x_hat"])?;
    for (j, v) in x.iter().enumerate() {
        out.write_record([j.to_string(), fmt_real(*v)])?;
    }
    out.flush()?;
    Ok(())
}

fn print_metrics(problem: &Problem, x_hat: &[f64]) {
    if let Some(truth) = problem.truth() {
        let r = report(x_hat, truth, 0.0);
        let descaled = r
            .err_descaled
            .map_or_else(|| "n/a".to_string(), |v| format!("{v:.4e}"));
        eprintln!(
            "err_raw {:.4e}  err_descaled {descaled}  err_optscale {:.4e}  support_exact {}  support_size {}",
            r.err_raw, r.err_optscale, r.support_exact, r.support_size
        );
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Generate { model, out, csv } => {
            let mut params = ExperimentConfig::default().params;
            model.apply(&mut params);
            let problem = generate_with(&params, model.signal()?.unwrap_or_default())?;
            save_problem(&problem, &out).map_err(with_path(&out))?;
            if let Some(csv) = csv {
                emit(Some(&csv), |w| write_problem_csv(&problem, w))?;
            }
            Ok(())
        }
        Command::DecodeLs { input, out } => {
            let problem = load(&input)?;
            let est = decode_ls(&problem)?;
            eprintln!("gram_condition {:.4e}", est.gram_condition);
            print_metrics(&problem, &est.x_ls);
            emit(out.as_deref(), |w| write_estimate(&est.x_ls, w))
        }
        Command::DecodeL1 { input, path, out } => {
            let problem = load(&input)?;
            let fit = decode_l1_with(&problem, path.options())?;
            eprintln!(
                "lambda_hat {:.6e}  ell_bar {}  grid points {}",
                fit.selection.lambda_hat,
                fit.selection.ell_bar,
                fit.path.points.len()
            );
            print_metrics(&problem, &fit.x_hat);
            emit(out.as_deref(), |w| write_estimate(&fit.x_hat, w))
        }
        Command::Path { input, path, out } => {
            let problem = load(&input)?;
            let sol = run_path_with(&problem, path.options())?;
            if let Ok(sel) = select_lambda(&sol) {
                eprintln!("lambda_hat {:.6e}  ell_bar {}", sel.lambda_hat, sel.ell_bar);
            }
            emit(out.as_deref(), |w| write_path_csv(&sol, w))
        }
        Command::Experiment {
            config,
            scenario,
            model,
            path,
            decoder,
            sweep,
            values,
            reps,
            threads,
            refit,
            negate,
            timing,
            large,
            out,
        } => {
            let mut cfg = match (&config, &scenario) {
                (Some(_), Some(_)) => {
                    return Err(Failure::Usage(
                        "give --config or --scenario, not both".into(),
                    ))
                }
                (Some(file), None) => {
                    let text = fs::read_to_string(file)
                        .map_err(|e| Failure::Io(format!("{}: {e}", file.display())))?;
                    let mut cfg = ExperimentConfig::parse(&text)?;
                    cfg.large |= large;
                    cfg
                }
                (None, Some(name)) => ExperimentConfig::preset(name, large)?,
                (None, None) => ExperimentConfig::default(),
            };
            model.apply(&mut cfg.params);
            cfg.signal = model.signal()?.unwrap_or(cfg.signal);
            path.apply(&mut cfg.path);
            if let Some(d) = decoder {
                cfg.decoder = d.parse::<Decoder>()?;
            }
            if let (Some(param), Some(values)) = (sweep, values) {
                cfg.sweep = Some(Sweep {
                    param: param.parse()?,
                    values: parse_values(&values)?,
                });
            }
            cfg.reps = reps.unwrap_or(cfg.reps);
            cfg.threads = threads.unwrap_or(cfg.threads);
            cfg.refit |= refit;
            cfg.negate_estimate |= negate;
            cfg.timing |= timing;
            let res = run_experiment(&cfg)?;
            for s in &res.summaries {
                let label = s.sweep_value.map_or_else(String::new, |v| format!("{v} "));
                match &s.summary {
                    Some(sum) => eprintln!(
                        "{label}err_optscale {:.4e}  PrE {:.0}%  failed {}",
                        sum.mean_err_optscale, sum.pre_percent, s.failed
                    ),
                    None => eprintln!("{label}all {} replications failed", s.failed),
                }
            }
            emit(out.as_deref(), |w| res.write_csv(w))
        }
        Command::CheckTheory {
            which,
            seed,
            reps,
            threads,
        } => {
            let checks: Vec<TheoryCheck> = if which.iter().any(|w| w == "all") {
                TheoryCheck::ALL.to_vec()
            } else {
                which
                    .iter()
                    .map(|w| w.parse())
                    .collect::<onebit::Result<_>>()?
            };
            let defaults = TheoryOptions::default();
            let opts = TheoryOptions {
                seed: seed.unwrap_or(defaults.seed),
                reps: reps.unwrap_or(defaults.reps),
                threads: threads.unwrap_or(defaults.threads),
                ..defaults
            };
            let mut failed = Vec::new();
            for check in checks {
                let r = check_theory(check, &opts)?;
                println!("{r}");
                if !r.passed {
                    failed.push(check.name());
                }
            }
            if failed.is_empty() {
                Ok(())
            } else {
                Err(Failure::Check(format!("failed: {}", failed.join(", "))))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Check(msg) | Failure::Usage(msg) | Failure::Io(msg) => {
                    eprintln!("onebit: {msg}")
                }
                Failure::Compute(e) => eprintln!("onebit: {e}"),
            }
            ExitCode::from(f.code())
        }
    }
}
