use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use lpactive::experiments::{
    emit_report, run_crossover, run_ratio_sweep, run_ratio_sweep_netlib, ExperimentConfig, ExperimentReport,
    ProblemSource,
};
use lpactive::generate::{generate, GeneratedInstance, InstanceKind, SizeRange};
use lpactive::ipm::{solve, SolveOptions, StopRule};
use lpactive::theory::worked_example_report;
use lpactive::{ensure_full_rank, load_mps, Error, StandardLP};

#[derive(Parser)]
#[command(name = "lpactive", version, about = "Perturbed interior point LP solver and active-set prediction studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Ts1,
    Ts2,
}

impl From<Kind> for InstanceKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Ts1 => InstanceKind::FeasiblePoint,
            Kind::Ts2 => InstanceKind::DegenerateSolution,
        }
    }
}

#[derive(Args, Clone)]
struct SolverArgs {
    /// Initial λ = φ value; 0 runs the unperturbed method.
    #[arg(long, default_value_t = 1e-2)]
    lambda0: f64,
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    #[arg(long, default_value_t = 0.5)]
    zeta: f64,
    /// Threshold-test constant.
    #[arg(long, default_value_t = 1e-5)]
    cutoff: f64,
    #[arg(long, default_value_t = 100)]
    max_iters: usize,
}

impl SolverArgs {
    fn options(&self) -> SolveOptions {
        SolveOptions {
            initial_perturbation: self.lambda0,
            eta: self.eta,
            zeta: self.zeta,
            cutoff: self.cutoff,
            max_iters: self.max_iters,
            ..SolveOptions::default()
        }
    }
}

#[derive(Args, Clone)]
struct BatchArgs {
    #[arg(long, value_enum, default_value = "ts1")]
    kind: Kind,
    #[arg(long, default_value_t = 100)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Exclusive lower bound on m.
    #[arg(long, default_value_t = 10)]
    m_min: usize,
    /// Exclusive upper bound on m.
    #[arg(long, default_value_t = 200)]
    m_max: usize,
}

impl BatchArgs {
    fn source(&self) -> Result<ProblemSource, Error> {
        Ok(ProblemSource::Generated {
            kind: self.kind.into(),
            count: self.count,
            seed: self.seed,
            sizes: sizes(self.m_min, self.m_max)?,
        })
    }
}

fn sizes(lo: usize, hi: usize) -> Result<SizeRange, Error> {
    if lo + 1 >= hi {
        return Err(Error::InvalidArgument(format!("empty m range ({lo}, {hi})")));
    }
    Ok(SizeRange::with_m(lo, hi))
}

#[derive(Subcommand)]
enum Command {
    /// Write generated instances as text files.
    Gen {
        #[command(flatten)]
        batch: BatchArgs,
        #[arg(long, default_value = "instances")]
        out: PathBuf,
    },
    /// Solve one problem (.mps, or a file written by `gen`) and print the trace.
    Solve {
        problem: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        /// Stop once μ_λ drops below this value.
        #[arg(long)]
        mu_cap: Option<f64>,
        #[arg(long)]
        relres: Option<f64>,
        /// Perform exactly this many iterations.
        #[arg(long)]
        iterations: Option<usize>,
        /// Write the trace as CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Prediction ratios on generated problems at fixed iterations.
    Ratios {
        #[command(flatten)]
        batch: BatchArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// `a..b` (inclusive) or a comma list, strictly increasing.
        #[arg(long, default_value = "1..18")]
        grid: String,
        #[arg(long, default_value = "out/ratios")]
        out: PathBuf,
        /// Exit with status 1 if any problem or row failed.
        #[arg(long)]
        strict: bool,
    },
    /// Prediction ratios over the last ten iterations on MPS problems.
    RatiosNetlib {
        #[arg(long)]
        mps_dir: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, default_value = "out/ratios-netlib")]
        out: PathBuf,
        #[arg(long)]
        strict: bool,
    },
    /// Crossover from both IPM variants to the simplex method.
    Crossover {
        #[command(flatten)]
        batch: BatchArgs,
        /// Use the MPS files in this directory instead of generated problems.
        #[arg(long)]
        mps_dir: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, default_value_t = 1e-3)]
        mu_cap: f64,
        #[arg(long, default_value = "out/crossover")]
        out: PathBuf,
        #[arg(long)]
        strict: bool,
    },
    /// Constants and μ thresholds for the two-variable worked example.
    Thresholds {
        #[arg(long, default_value_t = 0.8)]
        tau: f64,
        #[arg(long, default_value_t = 0.01)]
        gamma: f64,
        /// Samples for the τ estimate.
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn parse_grid(text: &str) -> Result<Vec<usize>, Error> {
    let bad = || Error::InvalidArgument(format!("bad grid `{text}`"));
    let grid: Vec<usize> = if let Some((a, b)) = text.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().parse().map_err(|_| bad())?;
        (a..=b).collect()
    } else {
        text.split(',')
            .map(|t| t.trim().parse().map_err(|_| bad()))
            .collect::<Result<_, _>>()?
    };
    if grid.is_empty() || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("grid must be non-empty and strictly increasing".into()));
    }
    Ok(grid)
}

fn load_problem(path: &Path) -> Result<StandardLP, Error> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("mps")) {
        ensure_full_rank(&load_mps(path)?)
    } else {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.to_path_buf(), e))?;
        Ok(GeneratedInstance::from_text(&text)?.lp)
    }
}

fn finish(report: &ExperimentReport, out: &Path, strict: bool) -> Result<ExitCode, Error> {
    let files = emit_report(report, out)?;
    for f in &files {
        println!("{}", f.display());
    }
    for f in report.failures() {
        eprintln!("{}: {}", f.problem, f.reason);
    }
    Ok(if strict && report.has_failures() {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Gen { batch, out } => {
            if batch.count == 0 {
                return Err(Error::InvalidArgument("count must be at least 1".into()));
            }
            let range = sizes(batch.m_min, batch.m_max)?;
            std::fs::create_dir_all(&out).map_err(|e| Error::io(out.clone(), e))?;
            let kind: InstanceKind = batch.kind.into();
            for seed in batch.seed..batch.seed + batch.count as u64 {
                let inst = generate(kind, seed, range);
                let path = out.join(format!("{}-{seed}.txt", kind.label()));
                std::fs::write(&path, inst.to_text()).map_err(|e| Error::io(path.clone(), e))?;
                println!("{}\t{}x{}", path.display(), inst.lp.m(), inst.lp.n());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Solve {
            problem,
            solver,
            mu_cap,
            relres,
            iterations,
            out,
        } => {
            let lp = load_problem(&problem)?;
            let stop = StopRule {
                mu_cap,
                relres_tol: relres,
                iterations,
            };
            let stop = if stop == StopRule::default() {
                StopRule::relres(1e-8)
            } else {
                stop
            };
            let trace = solve(&lp, &solver.options().with_stop(stop))?;
            match out {
                Some(path) => trace.write_csv_file(&path)?,
                None => trace.write_csv(std::io::stdout().lock())?,
            }
            let last = trace.final_iterate();
            eprintln!(
                "{}x{} status {:?} after {} iterations, objective {:.10e}",
                lp.m(),
                lp.n(),
                trace.status,
                trace.len(),
                lp.objective(&last.x)
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Ratios {
            batch,
            solver,
            grid,
            out,
            strict,
        } => {
            let mut cfg = ExperimentConfig::new(batch.source()?);
            cfg.grid = parse_grid(&grid)?;
            cfg.options = solver.options();
            cfg.validate()?;
            finish(&ExperimentReport::Ratios(run_ratio_sweep(&cfg)?), &out, strict)
        }
        Command::RatiosNetlib {
            mps_dir,
            solver,
            out,
            strict,
        } => {
            let mut cfg = ExperimentConfig::new(ProblemSource::MpsDir(mps_dir));
            cfg.options = solver.options();
            cfg.validate()?;
            finish(&ExperimentReport::Ratios(run_ratio_sweep_netlib(&cfg)?), &out, strict)
        }
        Command::Crossover {
            batch,
            mps_dir,
            solver,
            mu_cap,
            out,
            strict,
        } => {
            let source = match mps_dir {
                Some(dir) => ProblemSource::MpsDir(dir),
                None => batch.source()?,
            };
            let mut cfg = ExperimentConfig::new(source);
            cfg.mu_cap = mu_cap;
            cfg.options = solver.options();
            cfg.validate()?;
            let report = run_crossover(&cfg)?;
            let agg = report.aggregate();
            eprintln!(
                "mean simplex iterations: perturbed {:.2}, unperturbed {:.2} (ratio {:.3}) over {} problems",
                agg.mean_simplex_perturbed,
                agg.mean_simplex_unperturbed,
                agg.simplex_ratio(),
                agg.both_optimal
            );
            finish(&ExperimentReport::Crossover(report), &out, strict)
        }
        Command::Thresholds {
            tau,
            gamma,
            samples,
            seed,
        } => {
            if !(tau > 0.0 && tau <= 1.0) || !(gamma > 0.0 && gamma < 1.0) || samples == 0 {
                return Err(Error::InvalidArgument("need 0 < tau <= 1, 0 < gamma < 1, samples >= 1".into()));
            }
            println!("{}", worked_example_report(tau, gamma, samples, seed)?);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InvalidArgument(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
