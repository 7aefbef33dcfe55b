//! Perturbation-theory calculators: perfect and relaxed perturbations,
//! error-bound residuals, sampled error-bound constants and the μ thresholds.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lp::StandardLP;

const COMPLEMENTARITY_TOL: f64 = 1e-10;

fn check_complementary(x: &DVector<f64>, s: &DVector<f64>) -> Result<()> {
    if x.len() != s.len() {
        return Err(Error::InvalidArgument("x and s differ in length".into()));
    }
    let worst = x.iter().zip(s.iter()).map(|(a, b)| (a * b).abs()).fold(0.0, f64::max);
    if worst > COMPLEMENTARITY_TOL {
        return Err(Error::Contract(format!("pair is not complementary (max |x_i s_i| = {worst:e})")));
    }
    Ok(())
}

/// Positive root of `t² + v·t − μ = 0` in the cancellation-free form.
fn positive_root(v: f64, mu: f64) -> f64 {
    2.0 * mu / (v + (v * v + 4.0 * mu).sqrt())
}

/// The shift that puts a complementary pair exactly on the central path:
/// `(x*+λ)∘(s*+λ) = μ̂e`.
pub fn perfect_perturbation(x_star: &DVector<f64>, s_star: &DVector<f64>, mu_hat: f64) -> Result<DVector<f64>> {
    check_complementary(x_star, s_star)?;
    if !(mu_hat > 0.0) {
        return Err(Error::InvalidArgument("mu_hat must be positive".into()));
    }
    Ok(x_star.zip_map(s_star, |x, s| positive_root(x + s, mu_hat)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationInterval {
    pub lower: DVector<f64>,
    pub upper: DVector<f64>,
    pub xi: f64,
    pub mu_hat: f64,
}

impl PerturbationInterval {
    /// Whether `ξμ̂ ≤ (x*+λ)(s*+λ) ≤ μ̂/ξ` holds componentwise.
    pub fn sandwich_holds(&self, x_star: &DVector<f64>, s_star: &DVector<f64>, lambda: &DVector<f64>) -> bool {
        let lo = self.xi * self.mu_hat;
        let hi = self.mu_hat / self.xi;
        (0..lambda.len()).all(|i| {
            let p = (x_star[i] + lambda[i]) * (s_star[i] + lambda[i]);
            let slack = 1e-12 * hi;
            p >= lo - slack && p <= hi + slack
        })
    }
}

/// Interval of shifts keeping the products within `[ξμ̂, μ̂/ξ]`.
pub fn relaxed_interval(
    x_star: &DVector<f64>,
    s_star: &DVector<f64>,
    mu_hat: f64,
    xi: f64,
) -> Result<PerturbationInterval> {
    if !(xi > 0.0 && xi < 1.0) {
        return Err(Error::InvalidArgument("xi must lie in (0, 1)".into()));
    }
    check_complementary(x_star, s_star)?;
    if !(mu_hat > 0.0) {
        return Err(Error::InvalidArgument("mu_hat must be positive".into()));
    }
    Ok(PerturbationInterval {
        lower: x_star.zip_map(s_star, |x, s| positive_root(x + s, xi * mu_hat)),
        upper: x_star.zip_map(s_star, |x, s| positive_root(x + s, mu_hat / xi)),
        xi,
        mu_hat,
    })
}

fn positive_part(v: f64) -> f64 {
    v.max(0.0)
}

/// General residuals `(r, w)` with `s = c − Aᵀy`; both vanish exactly at
/// optimal pairs.
pub fn error_residuals(lp: &StandardLP, x: &DVector<f64>, y: &DVector<f64>) -> (f64, f64) {
    let s = &lp.c - lp.a.tr_mul(y);
    let ax_b = &lp.a * x - &lp.b;
    let mut r2 = 0.0;
    for i in 0..x.len() {
        r2 += x[i].min(s[i]).powi(2);
    }
    for i in 0..y.len() {
        r2 += positive_part(y[i]).min(ax_b[i]).powi(2);
        r2 += positive_part(-y[i]).min(-ax_b[i]).powi(2);
    }
    let mut w2 = 0.0;
    for i in 0..x.len() {
        w2 += positive_part(-s[i]).powi(2) + positive_part(-x[i]).powi(2);
    }
    for i in 0..y.len() {
        w2 += positive_part(-ax_b[i]).powi(2) + positive_part(ax_b[i]).powi(2);
    }
    w2 += positive_part(lp.c.dot(x) - lp.b.dot(y)).powi(2);
    (r2.sqrt(), w2.sqrt())
}

/// Residuals for a feasible pair (`Ax = b`, `Aᵀy + s = c`):
/// `r = ‖min(x, s)‖`, `w = ‖(−x, −s, xᵀs)₊‖`.
pub fn error_residuals_feasible(x: &DVector<f64>, s: &DVector<f64>) -> (f64, f64) {
    let r = x.zip_map(s, f64::min).norm();
    let mut w2 = positive_part(x.dot(s)).powi(2);
    for i in 0..x.len() {
        w2 += positive_part(-x[i]).powi(2) + positive_part(-s[i]).powi(2);
    }
    (r, w2.sqrt())
}

/// min over i of max(x_i, s_i): for a unique solution pair this is ε(A, b, c);
/// for the perturbed pair pass the shifted vectors `x+λ`, `s+φ`.
pub fn epsilon_unique(x: &DVector<f64>, s: &DVector<f64>) -> f64 {
    x.zip_map(s, f64::max).min()
}

/// Smallest positive entry (ψ for a unique solution); `None` if all are zero.
pub fn smallest_positive(v: &DVector<f64>) -> Option<f64> {
    v.iter().copied().filter(|&t| t > 0.0).reduce(f64::min)
}

/// A primal-dual solution used as the reference point for τ estimation.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionPair {
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub s: DVector<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauEstimate {
    pub tau_p: f64,
    pub tau_d: f64,
    pub feasible_samples: usize,
}

fn null_space(a: &DMatrix<f64>) -> DMatrix<f64> {
    let (m, n) = a.shape();
    // square the problem so the SVD exposes every right singular vector
    let mut padded = DMatrix::zeros(n, n);
    padded.view_mut((0, 0), (m, n)).copy_from(a);
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("requested V");
    let tol = 1e-10 * svd.singular_values.max().max(1.0);
    let cols: Vec<usize> = (0..n).filter(|&k| svd.singular_values[k] <= tol).collect();
    let mut basis = DMatrix::zeros(n, cols.len());
    for (c, &k) in cols.iter().enumerate() {
        basis.set_column(c, &vt.row(k).transpose());
    }
    basis
}

struct TauSampler<'a> {
    lp: &'a StandardLP,
    sol: &'a SolutionPair,
    lambda: &'a DVector<f64>,
    phi: &'a DVector<f64>,
    null: DMatrix<f64>,
    radius: f64,
}

impl TauSampler<'_> {
    /// Point from coordinates (z, v): x = x* + N z, y = y* + v.
    fn point(&self, z: &DVector<f64>, v: &DVector<f64>) -> Option<(DVector<f64>, DVector<f64>)> {
        let dx = &self.null * z;
        let ds = -self.lp.a.tr_mul(v);
        if dx.amax() > self.radius || ds.amax() > self.radius {
            return None;
        }
        let x = &self.sol.x + dx;
        let s = &self.sol.s + ds;
        let inside = x.iter().zip(self.lambda.iter()).all(|(a, l)| a + l > 0.0)
            && s.iter().zip(self.phi.iter()).all(|(a, p)| a + p > 0.0);
        inside.then_some((x, s))
    }

    fn ratios(&self, x: &DVector<f64>, s: &DVector<f64>) -> Option<(f64, f64)> {
        let (r, w) = error_residuals_feasible(x, s);
        let denom = r + w;
        (denom > 1e-14).then(|| ((x - &self.sol.x).norm() / denom, (s - &self.sol.s).norm() / denom))
    }

    fn random_coords(&self, rng: &mut ChaCha8Rng) -> (DVector<f64>, DVector<f64>) {
        let z = DVector::from_fn(self.null.ncols(), |_, _| rng.gen_range(-1.0..1.0));
        let v = DVector::from_fn(self.lp.m(), |_, _| rng.gen_range(-1.0..1.0));
        let dx = (&self.null * &z).amax().max(1e-300);
        let ds = self.lp.a.tr_mul(&v).amax().max(1e-300);
        let (ux, us): (f64, f64) = (rng.gen(), rng.gen());
        (z * (self.radius * ux / dx), v * (self.radius * us / ds))
    }

    /// Random draw followed by a shrinking-step local search on each ratio.
    fn sample(&self, rng: &mut ChaCha8Rng) -> Option<(f64, f64)> {
        let mut start = None;
        for _ in 0..20 {
            let (z, v) = self.random_coords(rng);
            if let Some((x, s)) = self.point(&z, &v) {
                if self.ratios(&x, &s).is_some() {
                    start = Some((z, v));
                    break;
                }
            }
        }
        let (z0, v0) = start?;
        let mut best = [0.0f64; 2];
        for (which, slot) in best.iter_mut().enumerate() {
            let (mut z, mut v) = (z0.clone(), v0.clone());
            let eval = |z: &DVector<f64>, v: &DVector<f64>| {
                self.point(z, v)
                    .and_then(|(x, s)| self.ratios(&x, &s))
                    .map(|r| if which == 0 { r.0 } else { r.1 })
            };
            let mut cur = eval(&z, &v).unwrap_or(0.0);
            let mut step = 0.25 * self.radius;
            for _ in 0..60 {
                let dz = DVector::from_fn(z.len(), |_, _| rng.gen_range(-1.0..1.0)) * step;
                let dv = DVector::from_fn(v.len(), |_, _| rng.gen_range(-1.0..1.0)) * step;
                let mut improved = false;
                for sign in [1.0, -1.0] {
                    let (cz, cv) = (&z + &dz * sign, &v + &dv * sign);
                    if let Some(val) = eval(&cz, &cv) {
                        if val > cur {
                            cur = val;
                            z = cz;
                            v = cv;
                            improved = true;
                            break;
                        }
                    }
                }
                if !improved {
                    step *= 0.7;
                }
            }
            *slot = cur;
        }
        Some((best[0], best[1]))
    }
}

/// Lower bounds on the error-bound constants: the largest
/// `‖x−x*‖/(r+w)` and `‖s−s*‖/(r+w)` found over strictly feasible points of
/// the perturbed pair inside an ∞-norm ball of radius `max(1, ‖(x*,s*)‖∞)`.
///
/// Each sample has its own RNG stream, so raising `sample_count` never
/// lowers the estimate.
pub fn estimate_tau(
    lp: &StandardLP,
    solution: &SolutionPair,
    lambda: &DVector<f64>,
    phi: &DVector<f64>,
    sample_count: usize,
    seed: u64,
) -> Result<TauEstimate> {
    let radius = solution.x.amax().max(solution.s.amax()).max(1.0);
    let sampler = TauSampler {
        lp,
        sol: solution,
        lambda,
        phi,
        null: null_space(&lp.a),
        radius,
    };
    let results: Vec<Option<(f64, f64)>> = (0..sample_count)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            rng.set_stream(i as u64);
            sampler.sample(&mut rng)
        })
        .collect();
    let found: Vec<(f64, f64)> = results.into_iter().flatten().collect();
    if found.is_empty() {
        return Err(Error::Sampling(format!("none of {sample_count} draws was strictly feasible")));
    }
    Ok(TauEstimate {
        tau_p: found.iter().map(|r| r.0).fold(0.0, f64::max),
        tau_d: found.iter().map(|r| r.1).fold(0.0, f64::max),
        feasible_samples: found.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryConstants {
    /// ε(A, b, c) of the original pair.
    pub epsilon: f64,
    /// ε(A, b_λ, c_λ) of the perturbed pair.
    pub epsilon_lambda: f64,
    pub psi_p: f64,
    pub psi_d: f64,
    pub tau_p: f64,
    pub tau_d: f64,
    pub gamma: f64,
    pub n: usize,
}

impl TheoryConstants {
    pub fn c1(&self) -> f64 {
        self.epsilon_lambda / self.n as f64
    }

    pub fn c2(&self) -> f64 {
        let n = self.n as f64;
        n * n.sqrt() / self.epsilon_lambda + n
    }

    pub fn rho(&self) -> f64 {
        self.psi_p / self.tau_p.max(self.tau_d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuThresholds {
    /// Below this, the perturbed cut-off sets identify the active set.
    pub mu_max_lambda: f64,
    /// Neighbourhood bound for the perturbed central path.
    pub mu_bar_max_lambda: f64,
    /// Same bound for the unperturbed pair.
    pub mu_max: f64,
}

pub fn mu_thresholds(tc: &TheoryConstants) -> MuThresholds {
    let n = tc.n as f64;
    let tau = tc.tau_p.max(tc.tau_d);
    MuThresholds {
        mu_max_lambda: tc.psi_p * tc.epsilon_lambda / (4.0 * n * tau * (n.sqrt() + tc.epsilon_lambda)),
        mu_bar_max_lambda: tc.epsilon_lambda * tc.epsilon_lambda * tc.gamma / (n * n),
        mu_max: tc.epsilon * tc.epsilon * tc.gamma / (n * n),
    }
}

/// Everything the `thresholds` command prints.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdReport {
    pub perturbed_solution: SolutionPair,
    pub perturbed_relres: f64,
    pub constants: TheoryConstants,
    pub tau_estimate: TauEstimate,
    pub thresholds: MuThresholds,
    pub thresholds_estimated_tau: MuThresholds,
}

impl ThresholdReport {
    /// `ε_λγ/n`, the perturbed cut-off for the neighbourhood bound.
    pub fn cutoff_lambda(&self) -> f64 {
        self.constants.epsilon_lambda * self.constants.gamma / self.constants.n as f64
    }

    pub fn cutoff(&self) -> f64 {
        self.constants.epsilon * self.constants.gamma / self.constants.n as f64
    }
}

fn fmt_vec(v: &DVector<f64>) -> String {
    let parts: Vec<String> = v.iter().map(|t| format!("{t:.6}")).collect();
    format!("({})", parts.join(", "))
}

impl fmt::Display for ThresholdReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = &self.constants;
        let sol = &self.perturbed_solution;
        writeln!(f, "{:<34} {}", "perturbed x", fmt_vec(&sol.x))?;
        writeln!(f, "{:<34} {}", "perturbed y", fmt_vec(&sol.y))?;
        writeln!(f, "{:<34} {}", "perturbed s", fmt_vec(&sol.s))?;
        writeln!(f, "{:<34} {:.3e}", "relative residual", self.perturbed_relres)?;
        writeln!(f, "{:<34} {:.6}", "epsilon (original)", c.epsilon)?;
        writeln!(f, "{:<34} {:.6}", "epsilon (perturbed)", c.epsilon_lambda)?;
        writeln!(f, "{:<34} {:.6}", "psi_p", c.psi_p)?;
        writeln!(f, "{:<34} {:.6}", "psi_d", c.psi_d)?;
        writeln!(f, "{:<34} {:.6}", "tau_p (sampled)", self.tau_estimate.tau_p)?;
        writeln!(f, "{:<34} {:.6}", "tau_d (sampled)", self.tau_estimate.tau_d)?;
        writeln!(f, "{:<34} {:.6}", "tau used", c.tau_p.max(c.tau_d))?;
        writeln!(f, "{:<34} {:.6}", "gamma", c.gamma)?;
        writeln!(f, "{:<34} {:.6}", "C1", c.c1())?;
        writeln!(f, "{:<34} {:.6}", "C2", c.c2())?;
        writeln!(f, "{:<34} {:.6}", "rho", c.rho())?;
        writeln!(f, "{:<34} {:.4}", "mu_max_lambda", self.thresholds.mu_max_lambda)?;
        writeln!(f, "{:<34} {:.4}", "mu_bar_max_lambda", self.thresholds.mu_bar_max_lambda)?;
        writeln!(f, "{:<34} {:.4}", "mu_max", self.thresholds.mu_max)?;
        writeln!(f, "{:<34} {:.4}", "mu_max_lambda (sampled tau)", self.thresholds_estimated_tau.mu_max_lambda)?;
        writeln!(f, "{:<34} {:.4}", "cut-off eps_lambda*gamma/n", self.cutoff_lambda())?;
        write!(f, "{:<34} {:.4}", "cut-off eps*gamma/n", self.cutoff())
    }
}

/// Solves the perturbed worked example and evaluates every constant.
pub fn worked_example_report(tau: f64, gamma: f64, samples: usize, seed: u64) -> Result<ThresholdReport> {
    use crate::crossover::{build_basis, revised_simplex, SimplexStatus};
    use crate::ipm::{relative_residual, solve_fixed_perturbation, PerturbationState, SolveOptions, StopRule};

    let lp = crate::lp::worked_example();
    let lambda = DVector::from_vec(vec![0.01, 0.05]);
    let phi = lambda.clone();
    let opts = SolveOptions::unperturbed().with_stop(StopRule::relres(1e-10));
    let (it, shifted_trace) = solve_fixed_perturbation(&lp, &lambda, &phi, &opts)?;
    let pert = PerturbationState {
        lambda: lambda.clone(),
        phi: phi.clone(),
        eta: 1.0,
        zeta: 0.5,
    };
    let relres = relative_residual(&lp, &it, &pert);
    let star = SolutionPair {
        x: DVector::from_vec(vec![1.0, 0.0]),
        y: DVector::from_vec(vec![1.0]),
        s: DVector::from_vec(vec![0.0, 1.0]),
    };
    let epsilon = epsilon_unique(&star.x, &star.s);
    // ε of the perturbed pair from its exact vertex: the iterate only
    // carries relres-level accuracy.
    let shifted = StandardLP::new(lp.a.clone(), &lp.b + &lp.a * &lambda, &lp.c + &phi)?;
    let last = shifted_trace
        .last()
        .ok_or_else(|| Error::Status("perturbed solve recorded no iterations".into()))?;
    let basis = build_basis(&shifted, &last.partition.active(), &last.iterate.s)?;
    let vertex = revised_simplex(&shifted, &basis, 100)?;
    if vertex.status != SimplexStatus::Optimal {
        return Err(Error::Status(format!("{:?} (perturbed vertex)", vertex.status).to_lowercase()));
    }
    let vertex_s = &shifted.c - shifted.a.tr_mul(&vertex.y);
    let epsilon_lambda = epsilon_unique(&vertex.x, &vertex_s);
    let tau_estimate = estimate_tau(&lp, &star, &lambda, &phi, samples, seed)?;
    let constants = TheoryConstants {
        epsilon,
        epsilon_lambda,
        psi_p: smallest_positive(&star.x).unwrap_or(0.0),
        psi_d: smallest_positive(&star.s).unwrap_or(0.0),
        tau_p: tau,
        tau_d: tau,
        gamma,
        n: lp.n(),
    };
    let sampled = TheoryConstants {
        tau_p: tau_estimate.tau_p,
        tau_d: tau_estimate.tau_d,
        ..constants
    };
    Ok(ThresholdReport {
        perturbed_solution: SolutionPair {
            x: it.x,
            y: it.y,
            s: it.s,
        },
        perturbed_relres: relres,
        thresholds: mu_thresholds(&constants),
        thresholds_estimated_tau: mu_thresholds(&sampled),
        constants,
        tau_estimate,
    })
}
