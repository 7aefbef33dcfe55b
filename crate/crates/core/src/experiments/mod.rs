//! Batch studies: prediction-ratio sweeps on generated problems and on MPS
//! files, crossover to simplex, and CSV/SVG report output.

pub mod svg;

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::activity::{prediction_ratios, PredictionRatios};
use crate::crossover::{
    basis_relative_difference, build_basis, relative_iteration_count, revised_simplex, SimplexStatus,
};
use crate::error::{Error, Result};
use crate::generate::{generate, InstanceKind, SizeRange};
use crate::ipm::{solve, SolveOptions, SolveStatus, SolveTrace, StopRule};
use crate::lp::{ensure_full_rank, StandardLP};
use crate::mps::load_mps;
use crate::oracle::{actual_active_set, simplex_iteration_limit, Oracle};

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSource {
    Generated {
        kind: InstanceKind,
        count: usize,
        seed: u64,
        sizes: SizeRange,
    },
    MpsDir(PathBuf),
    MpsFiles(Vec<PathBuf>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub source: ProblemSource,
    /// Iterations at which ratios are evaluated (ratio sweep only).
    pub grid: Vec<usize>,
    /// Crossover point for the perturbed run.
    pub mu_cap: f64,
    /// Base solver settings; the unperturbed run uses them with zero shifts.
    pub options: SolveOptions,
}

impl ExperimentConfig {
    pub fn new(source: ProblemSource) -> Self {
        ExperimentConfig {
            source,
            grid: (1..=18).collect(),
            mu_cap: 1e-3,
            options: SolveOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let ProblemSource::Generated { count, .. } = self.source {
            if count == 0 {
                return Err(Error::InvalidArgument("count must be at least 1".into()));
            }
        }
        if self.grid.is_empty() || self.grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("iteration grid must be non-empty and strictly increasing".into()));
        }
        if !(self.mu_cap > 0.0) {
            return Err(Error::InvalidArgument("mu cap must be positive".into()));
        }
        if self.options.initial_perturbation <= 0.0 {
            return Err(Error::InvalidArgument("the perturbed run needs a positive initial perturbation".into()));
        }
        self.options.validate()
    }

    fn unperturbed(&self) -> SolveOptions {
        SolveOptions {
            initial_perturbation: 0.0,
            ..self.options.clone()
        }
    }
}

#[derive(Debug, Clone)]
pub struct NamedProblem {
    pub name: String,
    pub lp: StandardLP,
}

/// Loads every problem of a source, rank-repaired. Load failures are kept
/// per problem so they can be reported.
pub fn load_problems(source: &ProblemSource) -> Result<Vec<(String, Result<StandardLP>)>> {
    let from_files = |files: Vec<PathBuf>| {
        files
            .into_iter()
            .map(|p| {
                let name = p
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| p.display().to_string());
                (name, load_mps(&p).and_then(|lp| ensure_full_rank(&lp)))
            })
            .collect()
    };
    Ok(match source {
        ProblemSource::Generated {
            kind,
            count,
            seed,
            sizes,
        } => (0..*count as u64)
            .map(|i| {
                let s = seed + i;
                let inst = generate(*kind, s, *sizes);
                (format!("{}-{s}", kind.label()), Ok(inst.lp))
            })
            .collect(),
        ProblemSource::MpsFiles(files) => from_files(files.clone()),
        ProblemSource::MpsDir(dir) => {
            let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
            let mut files: Vec<PathBuf> = entries
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("mps")))
                .collect();
            files.sort();
            if files.is_empty() {
                return Err(Error::InvalidArgument(format!("no .mps files in {}", dir.display())));
            }
            from_files(files)
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Perturbed,
    Unperturbed,
}

impl Algorithm {
    pub fn label(self) -> &'static str {
        match self {
            Algorithm::Perturbed => "perturbed",
            Algorithm::Unperturbed => "unperturbed",
        }
    }
}

fn oracle_label(o: Oracle) -> &'static str {
    match o {
        Oracle::Simplex => "simplex",
        Oracle::Ipm => "ipm",
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    /// Ratios at fixed iteration numbers.
    Grid,
    /// Ratios over the last iterations before the plain method converges;
    /// the axis value is the offset back from that iteration.
    LastIterations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioRow {
    pub problem: String,
    pub algorithm: Algorithm,
    pub oracle: Oracle,
    /// Grid iteration, or offset for the last-iterations protocol.
    pub point: usize,
    pub iteration: usize,
    /// `None` when the run did not reach this iteration or the oracle failed.
    pub ratios: Option<PredictionRatios>,
    pub relres: Option<f64>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioAggregate {
    pub algorithm: Algorithm,
    pub oracle: Oracle,
    pub point: usize,
    pub count: usize,
    pub failures: usize,
    pub false_ratio: f64,
    pub missed_ratio: f64,
    pub correct_ratio: f64,
    pub relres: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemFailure {
    pub problem: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioReport {
    pub kind: SweepKind,
    pub points: Vec<usize>,
    pub rows: Vec<RatioRow>,
    pub failures: Vec<ProblemFailure>,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut k) = (0.0, 0usize);
    for v in values {
        sum += v;
        k += 1;
    }
    if k == 0 {
        f64::NAN
    } else {
        sum / k as f64
    }
}

impl RatioReport {
    pub fn axis_label(&self) -> &'static str {
        match self.kind {
            SweepKind::Grid => "k",
            SweepKind::LastIterations => "offset",
        }
    }

    /// Means over rows with ratios; rows without count as failures.
    pub fn aggregates(&self) -> Vec<RatioAggregate> {
        let mut out = Vec::new();
        for algorithm in [Algorithm::Perturbed, Algorithm::Unperturbed] {
            for oracle in [Oracle::Simplex, Oracle::Ipm] {
                for &point in &self.points {
                    let group: Vec<&RatioRow> = self
                        .rows
                        .iter()
                        .filter(|r| r.algorithm == algorithm && r.oracle == oracle && r.point == point)
                        .collect();
                    if group.is_empty() {
                        continue;
                    }
                    let ok: Vec<(&PredictionRatios, f64)> = group
                        .iter()
                        .filter_map(|r| r.ratios.as_ref().map(|q| (q, r.relres.unwrap_or(f64::NAN))))
                        .collect();
                    out.push(RatioAggregate {
                        algorithm,
                        oracle,
                        point,
                        count: ok.len(),
                        failures: group.len() - ok.len(),
                        false_ratio: mean(ok.iter().map(|r| r.0.false_ratio)),
                        missed_ratio: mean(ok.iter().map(|r| r.0.missed_ratio)),
                        correct_ratio: mean(ok.iter().map(|r| r.0.correct_ratio)),
                        relres: mean(ok.iter().map(|r| r.1)),
                    });
                }
            }
        }
        out
    }

    /// Mean correction ratio of one curve at a point.
    pub fn mean_correct(&self, algorithm: Algorithm, oracle: Oracle, point: usize) -> Option<f64> {
        self.aggregates()
            .into_iter()
            .find(|a| a.algorithm == algorithm && a.oracle == oracle && a.point == point)
            .map(|a| a.correct_ratio)
    }
}

/// A run that hit the rounding floor after converging cannot move any
/// further; its last record stands in for later iterations.
pub const HOLD_RELRES: f64 = 1e-8;

fn held_record(trace: &SolveTrace) -> Option<&crate::ipm::IterationRecord> {
    match trace.status {
        SolveStatus::IllConditioned { .. } => trace.last().filter(|r| r.relres <= HOLD_RELRES),
        _ => None,
    }
}

fn ratio_rows_for(
    name: &str,
    trace: &SolveTrace,
    algorithm: Algorithm,
    oracles: &[(Oracle, std::result::Result<Vec<usize>, String>)],
    points: &[(usize, usize)],
) -> Vec<RatioRow> {
    let mut rows = Vec::new();
    for (oracle, actual) in oracles {
        for &(point, k) in points {
            let mut predicted = trace.predicted_active(k);
            let mut relres = if k == 0 {
                None
            } else {
                trace.at(k).map(|r| r.relres)
            };
            let mut note = String::new();
            if predicted.is_none() {
                if let Some(last) = held_record(trace) {
                    predicted = Some(last.partition.active());
                    relres = Some(last.relres);
                    note = format!("held from iteration {}", trace.len());
                }
            }
            let (ratios, note) = match (&predicted, actual) {
                (Some(p), Ok(a)) => (Some(prediction_ratios(p, a)), note),
                (None, _) => (None, format!("run stopped early ({:?})", trace.status).to_lowercase()),
                (_, Err(e)) => (None, format!("oracle failed: {e}")),
            };
            rows.push(RatioRow {
                problem: name.to_string(),
                algorithm,
                oracle: *oracle,
                point,
                iteration: k,
                ratios,
                relres,
                note,
            });
        }
    }
    rows
}

fn oracle_sets(lp: &StandardLP) -> Vec<(Oracle, std::result::Result<Vec<usize>, String>)> {
    [Oracle::Simplex, Oracle::Ipm]
        .into_iter()
        .map(|o| (o, actual_active_set(lp, o).map(|l| l.indices).map_err(|e| e.to_string())))
        .collect()
}

enum ProblemOutcome<T> {
    Done(T),
    Failed(ProblemFailure),
}

fn sweep_problem(name: &str, lp: &StandardLP, cfg: &ExperimentConfig) -> ProblemOutcome<Vec<RatioRow>> {
    let kmax = *cfg.grid.last().expect("validated grid");
    let stop = StopRule::iterations(kmax);
    let runs = [
        (Algorithm::Perturbed, cfg.options.clone().with_stop(stop)),
        (Algorithm::Unperturbed, cfg.unperturbed().with_stop(stop)),
    ];
    let oracles = oracle_sets(lp);
    let points: Vec<(usize, usize)> = cfg.grid.iter().map(|&k| (k, k)).collect();
    let mut rows = Vec::new();
    for (algorithm, opts) in runs {
        match solve(lp, &opts) {
            Ok(trace) => rows.extend(ratio_rows_for(name, &trace, algorithm, &oracles, &points)),
            Err(e) => {
                return ProblemOutcome::Failed(ProblemFailure {
                    problem: name.to_string(),
                    reason: format!("{} run: {e}", algorithm.label()),
                })
            }
        }
    }
    ProblemOutcome::Done(rows)
}

fn netlib_problem(name: &str, lp: &StandardLP, cfg: &ExperimentConfig) -> ProblemOutcome<Vec<RatioRow>> {
    let fail = |reason: String| {
        ProblemOutcome::Failed(ProblemFailure {
            problem: name.to_string(),
            reason,
        })
    };
    let reference = match solve(lp, &cfg.unperturbed().with_stop(StopRule::relres(1e-8))) {
        Ok(t) if t.status == SolveStatus::Converged => t,
        Ok(t) => return fail(format!("unperturbed run did not reach relres 1e-8 ({:?})", t.status).to_lowercase()),
        Err(e) => return fail(e.to_string()),
    };
    let m_iter = reference.len();
    let points: Vec<(usize, usize)> = (0..10).filter(|&i| i <= m_iter).map(|i| (i, m_iter - i)).collect();
    let oracles = oracle_sets(lp);
    let mut rows = ratio_rows_for(name, &reference, Algorithm::Unperturbed, &oracles, &points);
    match solve(lp, &cfg.options.clone().with_stop(StopRule::iterations(m_iter))) {
        Ok(trace) => rows.extend(ratio_rows_for(name, &trace, Algorithm::Perturbed, &oracles, &points)),
        Err(e) => return fail(format!("perturbed run: {e}")),
    }
    rows.sort_by_key(|r| r.algorithm);
    ProblemOutcome::Done(rows)
}

fn run_batch<T: Send>(
    cfg: &ExperimentConfig,
    work: impl Fn(&str, &StandardLP, &ExperimentConfig) -> ProblemOutcome<T> + Sync,
) -> Result<(Vec<T>, Vec<ProblemFailure>)> {
    cfg.validate()?;
    let problems = load_problems(&cfg.source)?;
    let outcomes: Vec<ProblemOutcome<T>> = problems
        .into_par_iter()
        .map(|(name, lp)| match lp {
            Ok(lp) => work(&name, &lp, cfg),
            Err(e) => ProblemOutcome::Failed(ProblemFailure {
                problem: name,
                reason: e.to_string(),
            }),
        })
        .collect();
    let mut done = Vec::new();
    let mut failures = Vec::new();
    for o in outcomes {
        match o {
            ProblemOutcome::Done(t) => done.push(t),
            ProblemOutcome::Failed(f) => failures.push(f),
        }
    }
    Ok((done, failures))
}

/// Both algorithms run to the largest grid iteration; the stateful predicted
/// set at each grid point is scored against both oracles.
pub fn run_ratio_sweep(cfg: &ExperimentConfig) -> Result<RatioReport> {
    let (rows, failures) = run_batch(cfg, sweep_problem)?;
    Ok(RatioReport {
        kind: SweepKind::Grid,
        points: cfg.grid.clone(),
        rows: rows.into_iter().flatten().collect(),
        failures,
    })
}

/// For each problem the plain method runs to relres < 1e-8 in M iterations;
/// both algorithms are scored at iterations M−9..M (offsets 9..0).
pub fn run_ratio_sweep_netlib(cfg: &ExperimentConfig) -> Result<RatioReport> {
    let (rows, failures) = run_batch(cfg, netlib_problem)?;
    Ok(RatioReport {
        kind: SweepKind::LastIterations,
        points: (0..10).collect(),
        rows: rows.into_iter().flatten().collect(),
        failures,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossoverRow {
    pub problem: String,
    pub m: usize,
    pub n: usize,
    /// IPM iterations performed by both runs.
    pub iterations: usize,
    pub mu_perturbed: f64,
    pub mu_unperturbed: f64,
    pub relres_perturbed: f64,
    pub relres_unperturbed: f64,
    pub basis_difference: f64,
    pub simplex_perturbed: usize,
    pub simplex_unperturbed: usize,
    pub status_perturbed: SimplexStatus,
    pub status_unperturbed: SimplexStatus,
    /// Relative iteration count; `None` unless both simplex runs are optimal.
    pub rl: Option<f64>,
}

impl CrossoverRow {
    pub fn both_optimal(&self) -> bool {
        self.status_perturbed == SimplexStatus::Optimal && self.status_unperturbed == SimplexStatus::Optimal
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossoverReport {
    pub rows: Vec<CrossoverRow>,
    pub failures: Vec<ProblemFailure>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossoverAggregate {
    pub problems: usize,
    pub both_optimal: usize,
    pub failed_perturbed: usize,
    pub failed_unperturbed: usize,
    pub mean_iterations: f64,
    pub mean_mu_perturbed: f64,
    pub mean_mu_unperturbed: f64,
    pub mean_basis_difference: f64,
    pub mean_simplex_perturbed: f64,
    pub mean_simplex_unperturbed: f64,
}

impl CrossoverAggregate {
    /// Mean perturbed over mean unperturbed simplex iterations.
    pub fn simplex_ratio(&self) -> f64 {
        self.mean_simplex_perturbed / self.mean_simplex_unperturbed
    }
}

impl CrossoverReport {
    /// Means over rows where both simplex runs reached optimality.
    pub fn aggregate(&self) -> CrossoverAggregate {
        let ok: Vec<&CrossoverRow> = self.rows.iter().filter(|r| r.both_optimal()).collect();
        CrossoverAggregate {
            problems: self.rows.len(),
            both_optimal: ok.len(),
            failed_perturbed: self.rows.iter().filter(|r| r.status_perturbed != SimplexStatus::Optimal).count(),
            failed_unperturbed: self.rows.iter().filter(|r| r.status_unperturbed != SimplexStatus::Optimal).count(),
            mean_iterations: mean(ok.iter().map(|r| r.iterations as f64)),
            mean_mu_perturbed: mean(ok.iter().map(|r| r.mu_perturbed)),
            mean_mu_unperturbed: mean(ok.iter().map(|r| r.mu_unperturbed)),
            mean_basis_difference: mean(ok.iter().map(|r| r.basis_difference)),
            mean_simplex_perturbed: mean(ok.iter().map(|r| r.simplex_perturbed as f64)),
            mean_simplex_unperturbed: mean(ok.iter().map(|r| r.simplex_unperturbed as f64)),
        }
    }

    /// Bar heights: rl where both runs are optimal (infinite values clipped
    /// to the largest finite |rl|); a failed perturbed run gives −max|rl|, a
    /// failed unperturbed run +max|rl|, both failing 0.
    pub fn bar_heights(&self) -> Vec<(String, f64)> {
        let peak = self
            .rows
            .iter()
            .filter_map(|r| r.rl)
            .filter(|v| v.is_finite())
            .map(f64::abs)
            .fold(0.0, f64::max);
        let peak = if peak > 0.0 { peak } else { 1.0 };
        self.rows
            .iter()
            .map(|r| {
                let h = match (r.status_perturbed == SimplexStatus::Optimal, r.status_unperturbed == SimplexStatus::Optimal) {
                    (true, true) => r.rl.unwrap_or(0.0).clamp(-peak, peak),
                    (false, true) => -peak,
                    (true, false) => peak,
                    (false, false) => 0.0,
                };
                (r.problem.clone(), h)
            })
            .collect()
    }
}

fn crossover_problem(name: &str, lp: &StandardLP, cfg: &ExperimentConfig, netlib: bool) -> ProblemOutcome<CrossoverRow> {
    let fail = |reason: String| {
        ProblemOutcome::Failed(ProblemFailure {
            problem: name.to_string(),
            reason,
        })
    };
    let stop = if netlib {
        StopRule::first_of(cfg.mu_cap, 1e-6)
    } else {
        StopRule::mu_cap(cfg.mu_cap)
    };
    let perturbed = match solve(lp, &cfg.options.clone().with_stop(stop)) {
        Ok(t) if t.status == SolveStatus::Converged => t,
        Ok(t) => return fail(format!("perturbed run did not reach the cap ({:?})", t.status).to_lowercase()),
        Err(e) => return fail(e.to_string()),
    };
    let k = perturbed.len();
    let plain = match solve(lp, &cfg.unperturbed().with_stop(StopRule::iterations(k))) {
        Ok(t) if t.len() == k => t,
        Ok(t) => return fail(format!("unperturbed run stopped after {} of {k} iterations", t.len())),
        Err(e) => return fail(e.to_string()),
    };
    let (rp, ru) = (perturbed.last().expect("k >= 1"), plain.last().expect("k >= 1"));
    let bp = match build_basis(lp, &rp.partition.active(), &rp.iterate.s) {
        Ok(b) => b,
        Err(e) => return fail(e.to_string()),
    };
    let bu = match build_basis(lp, &ru.partition.active(), &ru.iterate.s) {
        Ok(b) => b,
        Err(e) => return fail(e.to_string()),
    };
    let limit = simplex_iteration_limit(lp);
    let run = |b| revised_simplex(lp, b, limit);
    let (sp, su) = match (run(&bp), run(&bu)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return fail(e.to_string()),
    };
    let both = sp.status == SimplexStatus::Optimal && su.status == SimplexStatus::Optimal;
    ProblemOutcome::Done(CrossoverRow {
        problem: name.to_string(),
        m: lp.m(),
        n: lp.n(),
        iterations: k,
        mu_perturbed: rp.mu,
        mu_unperturbed: ru.mu,
        relres_perturbed: rp.relres,
        relres_unperturbed: ru.relres,
        basis_difference: basis_relative_difference(&bp, &bu),
        simplex_perturbed: sp.iterations,
        simplex_unperturbed: su.iterations,
        status_perturbed: sp.status,
        status_unperturbed: su.status,
        rl: both.then(|| relative_iteration_count(sp.iterations, su.iterations)),
    })
}

/// The perturbed run stops once μ_λ drops below the cap (MPS sources also
/// stop at relres < 1e-6); the plain run performs the same number of
/// iterations. Both predicted sets seed a basis and the simplex finishes.
pub fn run_crossover(cfg: &ExperimentConfig) -> Result<CrossoverReport> {
    let netlib = !matches!(cfg.source, ProblemSource::Generated { .. });
    let (rows, failures) = run_batch(cfg, |name, lp, cfg| crossover_problem(name, lp, cfg, netlib))?;
    Ok(CrossoverReport { rows, failures })
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentReport {
    Ratios(RatioReport),
    Crossover(CrossoverReport),
}

impl ExperimentReport {
    pub fn failures(&self) -> &[ProblemFailure] {
        match self {
            ExperimentReport::Ratios(r) => &r.failures,
            ExperimentReport::Crossover(r) => &r.failures,
        }
    }

    /// Any problem-level failure or flagged row.
    pub fn has_failures(&self) -> bool {
        match self {
            ExperimentReport::Ratios(r) => !r.failures.is_empty() || r.rows.iter().any(|row| row.ratios.is_none()),
            ExperimentReport::Crossover(r) => !r.failures.is_empty() || r.rows.iter().any(|row| !row.both_optimal()),
        }
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn status_label(s: SimplexStatus) -> String {
    format!("{s:?}").to_lowercase()
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub const RATIO_ROW_HEADER: [&str; 11] = [
    "problem",
    "algorithm",
    "oracle",
    "point",
    "iteration",
    "false_ratio",
    "missed_ratio",
    "correct_ratio",
    "relres",
    "ok",
    "note",
];

pub const RATIO_AGGREGATE_HEADER: [&str; 9] = [
    "algorithm",
    "oracle",
    "point",
    "count",
    "failures",
    "false_ratio",
    "missed_ratio",
    "correct_ratio",
    "relres",
];

pub const CROSSOVER_ROW_HEADER: [&str; 16] = [
    "problem",
    "m",
    "n",
    "ipm_iterations",
    "mu_perturbed",
    "mu_unperturbed",
    "relres_perturbed",
    "relres_unperturbed",
    "basis_difference",
    "simplex_perturbed",
    "simplex_unperturbed",
    "status_perturbed",
    "status_unperturbed",
    "rl",
    "bar",
    "ok",
];

pub const CROSSOVER_AGGREGATE_HEADER: [&str; 11] = [
    "problems",
    "both_optimal",
    "failed_perturbed",
    "failed_unperturbed",
    "mean_ipm_iterations",
    "mean_mu_perturbed",
    "mean_mu_unperturbed",
    "mean_basis_difference",
    "mean_simplex_perturbed",
    "mean_simplex_unperturbed",
    "simplex_ratio",
];

pub const FAILURE_HEADER: [&str; 2] = ["problem", "reason"];

/// Writes `rows.csv`, `aggregates.csv`, `failures.csv` and, unless the
/// report has no rows, SVG charts. Returns the paths written.
pub fn emit_report(report: &ExperimentReport, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let rows_path = dir.join("rows.csv");
    let agg_path = dir.join("aggregates.csv");
    let fail_path = dir.join("failures.csv");

    let failure_rows: Vec<Vec<String>> = report
        .failures()
        .iter()
        .map(|f| vec![f.problem.clone(), f.reason.clone()])
        .collect();
    write_csv(&fail_path, &FAILURE_HEADER, &failure_rows)?;

    match report {
        ExperimentReport::Ratios(r) => {
            let rows: Vec<Vec<String>> = r
                .rows
                .iter()
                .map(|row| {
                    let q = row.ratios;
                    vec![
                        row.problem.clone(),
                        row.algorithm.label().to_string(),
                        oracle_label(row.oracle).to_string(),
                        row.point.to_string(),
                        row.iteration.to_string(),
                        opt(q.map(|q| q.false_ratio)),
                        opt(q.map(|q| q.missed_ratio)),
                        opt(q.map(|q| q.correct_ratio)),
                        opt(row.relres),
                        q.is_some().to_string(),
                        row.note.clone(),
                    ]
                })
                .collect();
            write_csv(&rows_path, &RATIO_ROW_HEADER, &rows)?;
            let aggs = if r.rows.is_empty() { Vec::new() } else { r.aggregates() };
            let agg_rows: Vec<Vec<String>> = aggs
                .iter()
                .map(|a| {
                    vec![
                        a.algorithm.label().to_string(),
                        oracle_label(a.oracle).to_string(),
                        a.point.to_string(),
                        a.count.to_string(),
                        a.failures.to_string(),
                        a.false_ratio.to_string(),
                        a.missed_ratio.to_string(),
                        a.correct_ratio.to_string(),
                        a.relres.to_string(),
                    ]
                })
                .collect();
            write_csv(&agg_path, &RATIO_AGGREGATE_HEADER, &agg_rows)?;
            written.extend([rows_path, agg_path, fail_path]);
            if !r.rows.is_empty() {
                written.extend(write_ratio_charts(r, &aggs, dir)?);
            }
        }
        ExperimentReport::Crossover(r) => {
            let bars = r.bar_heights();
            let rows: Vec<Vec<String>> = r
                .rows
                .iter()
                .zip(&bars)
                .map(|(row, bar)| {
                    vec![
                        row.problem.clone(),
                        row.m.to_string(),
                        row.n.to_string(),
                        row.iterations.to_string(),
                        row.mu_perturbed.to_string(),
                        row.mu_unperturbed.to_string(),
                        row.relres_perturbed.to_string(),
                        row.relres_unperturbed.to_string(),
                        row.basis_difference.to_string(),
                        row.simplex_perturbed.to_string(),
                        row.simplex_unperturbed.to_string(),
                        status_label(row.status_perturbed),
                        status_label(row.status_unperturbed),
                        opt(row.rl),
                        bar.1.to_string(),
                        row.both_optimal().to_string(),
                    ]
                })
                .collect();
            write_csv(&rows_path, &CROSSOVER_ROW_HEADER, &rows)?;
            let agg_rows = if r.rows.is_empty() {
                Vec::new()
            } else {
                let a = r.aggregate();
                vec![vec![
                    a.problems.to_string(),
                    a.both_optimal.to_string(),
                    a.failed_perturbed.to_string(),
                    a.failed_unperturbed.to_string(),
                    a.mean_iterations.to_string(),
                    a.mean_mu_perturbed.to_string(),
                    a.mean_mu_unperturbed.to_string(),
                    a.mean_basis_difference.to_string(),
                    a.mean_simplex_perturbed.to_string(),
                    a.mean_simplex_unperturbed.to_string(),
                    a.simplex_ratio().to_string(),
                ]]
            };
            write_csv(&agg_path, &CROSSOVER_AGGREGATE_HEADER, &agg_rows)?;
            written.extend([rows_path, agg_path, fail_path]);
            if !r.rows.is_empty() {
                let mut heights: Vec<f64> = bars.iter().map(|b| b.1).collect();
                heights.sort_by(|a, b| b.total_cmp(a));
                let path = dir.join("rl_profile.svg");
                write_text(
                    &path,
                    &svg::bar_chart("Relative simplex iteration count (sorted)", "rl", &heights),
                )?;
                written.push(path);
            }
        }
    }
    Ok(written)
}

fn write_ratio_charts(r: &RatioReport, aggs: &[RatioAggregate], dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let axis = match r.kind {
        SweepKind::Grid => "interior point iterations",
        SweepKind::LastIterations => "iterations before convergence",
    };
    let curve = |alg: Algorithm, oracle: Oracle, f: &dyn Fn(&RatioAggregate) -> f64| svg::Series {
        label: format!("{} vs {}", alg.label(), oracle_label(oracle)),
        points: aggs
            .iter()
            .filter(|a| a.algorithm == alg && a.oracle == oracle)
            .map(|a| (a.point as f64, f(a)))
            .collect(),
        dashed: oracle == Oracle::Ipm,
    };
    type Metric<'a> = (&'a str, &'a str, &'a dyn Fn(&RatioAggregate) -> f64);
    let metrics: [Metric; 3] = [
        ("correct", "correction ratio", &|a| a.correct_ratio),
        ("false", "false-prediction ratio", &|a| a.false_ratio),
        ("missed", "missed-prediction ratio", &|a| a.missed_ratio),
    ];
    for (file, title, f) in metrics {
        let series: Vec<svg::Series> = [Algorithm::Perturbed, Algorithm::Unperturbed]
            .into_iter()
            .flat_map(|alg| [Oracle::Simplex, Oracle::Ipm].map(|o| curve(alg, o, f)))
            .collect();
        let path = dir.join(format!("{file}.svg"));
        write_text(&path, &svg::line_chart(title, axis, "mean ratio", &series))?;
        written.push(path);
    }
    let residual: Vec<svg::Series> = [Algorithm::Perturbed, Algorithm::Unperturbed]
        .into_iter()
        .map(|alg| svg::Series {
            label: alg.label().to_string(),
            points: aggs
                .iter()
                .filter(|a| a.algorithm == alg && a.oracle == Oracle::Simplex)
                .map(|a| (a.point as f64, a.relres.log10()))
                .collect(),
            dashed: false,
        })
        .collect();
    let path = dir.join("relres.svg");
    write_text(&path, &svg::line_chart("relative residual", axis, "log10 mean relres", &residual))?;
    written.push(path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(kind: InstanceKind, count: usize) -> ExperimentConfig {
        ExperimentConfig::new(ProblemSource::Generated {
            kind,
            count,
            seed: 1,
            sizes: SizeRange::with_m(10, 20),
        })
    }

    #[test]
    fn grid_validation() {
        let mut cfg = small(InstanceKind::FeasiblePoint, 1);
        cfg.grid = vec![3, 2];
        assert!(matches!(cfg.validate(), Err(Error::InvalidArgument(_))));
        cfg.grid = vec![];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn grid_zero_gives_total_miss() {
        let mut cfg = small(InstanceKind::FeasiblePoint, 1);
        cfg.grid = vec![0, 1];
        let rep = run_ratio_sweep(&cfg).unwrap();
        for row in rep.rows.iter().filter(|r| r.point == 0) {
            let q = row.ratios.unwrap();
            assert_eq!((q.false_ratio, q.missed_ratio, q.correct_ratio), (0.0, 1.0, 0.0));
        }
    }

    #[test]
    fn aggregates_match_rows() {
        let mut cfg = small(InstanceKind::DegenerateSolution, 3);
        cfg.grid = vec![2, 6, 10];
        let rep = run_ratio_sweep(&cfg).unwrap();
        for a in rep.aggregates() {
            let vals: Vec<f64> = rep
                .rows
                .iter()
                .filter(|r| r.algorithm == a.algorithm && r.oracle == a.oracle && r.point == a.point)
                .filter_map(|r| r.ratios.map(|q| q.correct_ratio))
                .collect();
            let m = vals.iter().sum::<f64>() / vals.len() as f64;
            assert!((m - a.correct_ratio).abs() <= 1e-12);
        }
    }

    #[test]
    fn bar_rules() {
        let row = |p: &str, sp, su, rl| CrossoverRow {
            problem: p.into(),
            m: 1,
            n: 2,
            iterations: 1,
            mu_perturbed: 0.0,
            mu_unperturbed: 0.0,
            relres_perturbed: 0.0,
            relres_unperturbed: 0.0,
            basis_difference: 0.0,
            simplex_perturbed: 1,
            simplex_unperturbed: 1,
            status_perturbed: sp,
            status_unperturbed: su,
            rl,
        };
        use SimplexStatus::*;
        let rep = CrossoverReport {
            rows: vec![
                row("a", Optimal, Optimal, Some(0.5)),
                row("b", Optimal, Optimal, Some(-1.5)),
                row("c", Failed, Optimal, None),
                row("d", Optimal, IterLimit, None),
                row("e", Failed, Failed, None),
                row("f", Optimal, Optimal, Some(f64::INFINITY)),
            ],
            failures: vec![],
        };
        let h: Vec<f64> = rep.bar_heights().into_iter().map(|b| b.1).collect();
        assert_eq!(h, vec![0.5, -1.5, -1.5, 1.5, 0.0, 1.5]);
    }

    #[test]
    fn empty_report_headers_only() {
        let dir = std::env::temp_dir().join(format!("lpactive-empty-{}", std::process::id()));
        let rep = ExperimentReport::Crossover(CrossoverReport {
            rows: vec![],
            failures: vec![],
        });
        let files = emit_report(&rep, &dir).unwrap();
        assert!(files.iter().all(|p| p.extension().unwrap() == "csv"));
        let rows = std::fs::read_to_string(dir.join("rows.csv")).unwrap();
        assert_eq!(rows.lines().count(), 1);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
