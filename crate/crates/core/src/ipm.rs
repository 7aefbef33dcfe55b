//! Infeasible primal-dual path-following method with controlled
//! perturbations `x ≥ −λ`, `s ≥ −φ`. Zero perturbations give the plain method.

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::activity::{threshold_test, ActivityPartition, DEFAULT_CUTOFF};
use crate::error::{Error, Result};
use crate::linalg::BunchKaufman;
use crate::lp::StandardLP;

#[derive(Debug, Clone, PartialEq)]
pub struct Iterate {
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub s: DVector<f64>,
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationState {
    pub lambda: DVector<f64>,
    pub phi: DVector<f64>,
    /// Scaling applied when the iterate is already nonnegative.
    pub eta: f64,
    /// Blend towards the most negative component otherwise.
    pub zeta: f64,
}

impl PerturbationState {
    pub fn uniform(n: usize, value: f64, eta: f64, zeta: f64) -> Self {
        PerturbationState {
            lambda: DVector::from_element(n, value),
            phi: DVector::from_element(n, value),
            eta,
            zeta,
        }
    }

    pub fn zero(n: usize) -> Self {
        Self::uniform(n, 0.0, 1.0, 0.5)
    }

    pub fn max_lambda(&self) -> f64 {
        self.lambda.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_phi(&self) -> f64 {
        self.phi.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CenteringRule {
    /// `σ = min(cap, scale·μ)`.
    Adaptive { cap: f64, scale: f64 },
    Fixed(f64),
}

impl Default for CenteringRule {
    fn default() -> Self {
        CenteringRule::Adaptive { cap: 0.1, scale: 100.0 }
    }
}

impl CenteringRule {
    pub fn sigma(&self, mu: f64) -> f64 {
        match *self {
            CenteringRule::Adaptive { cap, scale } => cap.min(scale * mu),
            CenteringRule::Fixed(s) => s,
        }
    }
}

/// Stopping tests, checked after each step; the first satisfied one wins.
/// With `iterations` set the run performs exactly that many steps unless an
/// earlier test fires or the Newton solve fails.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StopRule {
    pub mu_cap: Option<f64>,
    pub relres_tol: Option<f64>,
    pub iterations: Option<usize>,
}

impl StopRule {
    pub fn mu_cap(v: f64) -> Self {
        StopRule {
            mu_cap: Some(v),
            ..Default::default()
        }
    }

    pub fn relres(v: f64) -> Self {
        StopRule {
            relres_tol: Some(v),
            ..Default::default()
        }
    }

    pub fn iterations(k: usize) -> Self {
        StopRule {
            iterations: Some(k),
            ..Default::default()
        }
    }

    pub fn first_of(mu_cap: f64, relres_tol: f64) -> Self {
        StopRule {
            mu_cap: Some(mu_cap),
            relres_tol: Some(relres_tol),
            iterations: None,
        }
    }

    fn satisfied(&self, mu: f64, relres: f64) -> bool {
        self.mu_cap.is_some_and(|cap| mu < cap) || self.relres_tol.is_some_and(|tol| relres < tol)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub centering: CenteringRule,
    pub step_fraction: f64,
    pub max_iters: usize,
    pub stop: StopRule,
    /// Initial λ = φ = value·e.
    pub initial_perturbation: f64,
    pub eta: f64,
    pub zeta: f64,
    pub cutoff: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            centering: CenteringRule::default(),
            step_fraction: 0.9995,
            max_iters: 100,
            stop: StopRule::relres(1e-8),
            initial_perturbation: 1e-2,
            eta: 1.0,
            zeta: 0.5,
            cutoff: DEFAULT_CUTOFF,
        }
    }
}

impl SolveOptions {
    pub fn unperturbed() -> Self {
        SolveOptions {
            initial_perturbation: 0.0,
            ..Default::default()
        }
    }

    pub fn with_stop(mut self, stop: StopRule) -> Self {
        self.stop = stop;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if !(self.step_fraction > 0.0 && self.step_fraction < 1.0) {
            return bad("step fraction must lie in (0, 1)");
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return bad("eta must lie in (0, 1]");
        }
        if !(self.zeta > 0.0 && self.zeta < 1.0) {
            return bad("zeta must lie in (0, 1)");
        }
        if !(self.initial_perturbation >= 0.0 && self.initial_perturbation.is_finite()) {
            return bad("initial perturbation must be a finite nonnegative number");
        }
        if self.stop == StopRule::default() && self.max_iters == 0 {
            return bad("no stopping rule and zero iteration limit");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Direction {
    pub dx: DVector<f64>,
    pub dy: DVector<f64>,
    pub ds: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// Iterate after the step (its `k` is the 1-based iteration number).
    pub iterate: Iterate,
    /// Perturbation the iterate was evaluated with (before shrinking).
    pub perturbation: PerturbationState,
    pub mu: f64,
    pub relres: f64,
    pub sigma: f64,
    pub alpha_p: f64,
    pub alpha_d: f64,
    /// Residual of the full Newton system after back-substitution.
    pub newton_residual: f64,
    pub partition: ActivityPartition,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// A mu-cap or residual test fired.
    Converged,
    /// The requested number of iterations was performed.
    IterationTarget,
    IterLimit,
    IllConditioned { iteration: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveTrace {
    pub start: Iterate,
    pub initial_perturbation: PerturbationState,
    pub records: Vec<IterationRecord>,
    pub status: SolveStatus,
}

impl SolveTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    /// Record of iteration `k` (1-based).
    pub fn at(&self, k: usize) -> Option<&IterationRecord> {
        k.checked_sub(1).and_then(|i| self.records.get(i))
    }

    /// Predicted active set after `k` iterations; empty at `k = 0`.
    pub fn predicted_active(&self, k: usize) -> Option<Vec<usize>> {
        if k == 0 {
            return Some(Vec::new());
        }
        self.at(k).map(|r| r.partition.active())
    }

    pub fn final_iterate(&self) -> &Iterate {
        self.records.last().map(|r| &r.iterate).unwrap_or(&self.start)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "k",
            "mu_lambda",
            "relres",
            "alpha_p",
            "alpha_d",
            "active",
            "inactive",
            "undetermined",
            "max_lambda",
            "max_phi",
        ])?;
        for r in &self.records {
            let (a, i, u) = r.partition.counts();
            w.write_record([
                r.iterate.k.to_string(),
                r.mu.to_string(),
                r.relres.to_string(),
                r.alpha_p.to_string(),
                r.alpha_d.to_string(),
                a.to_string(),
                i.to_string(),
                u.to_string(),
                r.perturbation.max_lambda().to_string(),
                r.perturbation.max_phi().to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<trace>", e))?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(f))
    }
}

/// Mehrotra's starting point: least-squares solutions shifted into the
/// positive orthant.
pub fn mehrotra_start(lp: &StandardLP) -> Result<Iterate> {
    let a = &lp.a;
    let aat = a * a.transpose();
    let chol = aat
        .cholesky()
        .ok_or_else(|| Error::RankDeficient("A·Aᵀ is not positive definite".into()))?;
    let x_ls = a.tr_mul(&chol.solve(&lp.b));
    let y = chol.solve(&(a * &lp.c));
    let s_ls = &lp.c - a.tr_mul(&y);

    let shift = |v: &DVector<f64>| (-1.5 * v.min()).max(0.0);
    let xh = x_ls.add_scalar(shift(&x_ls));
    let sh = s_ls.add_scalar(shift(&s_ls));
    let xs = xh.dot(&sh);
    let (dx, ds) = if xs > f64::EPSILON * (1.0 + xh.amax() * sh.amax()) {
        (0.5 * xs / sh.sum(), 0.5 * xs / xh.sum())
    } else {
        (1.0, 1.0)
    };
    Ok(Iterate {
        x: xh.add_scalar(dx),
        y,
        s: sh.add_scalar(ds),
        k: 0,
    })
}

/// `(x+λ)ᵀ(s+φ)/n`.
pub fn duality_measure(it: &Iterate, p: &PerturbationState) -> f64 {
    let n = it.x.len();
    let xl = &it.x + &p.lambda;
    let sp = &it.s + &p.phi;
    xl.dot(&sp) / n as f64
}

fn primal_residual(lp: &StandardLP, x: &DVector<f64>) -> DVector<f64> {
    &lp.a * x - &lp.b
}

fn dual_residual(lp: &StandardLP, y: &DVector<f64>, s: &DVector<f64>) -> DVector<f64> {
    lp.a.tr_mul(y) + s - &lp.c
}

/// Scaled norm of primal, dual and centering residuals.
pub fn relative_residual(lp: &StandardLP, it: &Iterate, p: &PerturbationState) -> f64 {
    let mu = duality_measure(it, p);
    let rp = primal_residual(lp, &it.x);
    let rd = dual_residual(lp, &it.y, &it.s);
    let xl = &it.x + &p.lambda;
    let sp = &it.s + &p.phi;
    let rc = xl.component_mul(&sp).add_scalar(-mu);
    let num = (rp.norm_squared() + rd.norm_squared() + rc.norm_squared()).sqrt();
    num / (1.0 + lp.b.norm().max(lp.c.norm()))
}

/// Newton direction for the perturbed central-path equations, returned with
/// the residual of the full three-block system.
pub fn newton_direction(
    lp: &StandardLP,
    it: &Iterate,
    p: &PerturbationState,
    sigma: f64,
) -> Result<(Direction, f64)> {
    let (m, n) = (lp.m(), lp.n());
    let ill = || Error::IllConditioned { iteration: it.k };
    let xl = &it.x + &p.lambda;
    let sp = &it.s + &p.phi;
    let mu = xl.dot(&sp) / n as f64;
    let rp = primal_residual(lp, &it.x);
    let rd = dual_residual(lp, &it.y, &it.s);
    let rc = xl.component_mul(&sp).add_scalar(-sigma * mu);
    let d = sp.component_div(&xl);

    let mut kkt = DMatrix::zeros(n + m, n + m);
    for j in 0..n {
        kkt[(j, j)] = -d[j];
        for i in 0..m {
            let v = lp.a[(i, j)];
            kkt[(n + i, j)] = v;
            kkt[(j, n + i)] = v;
        }
    }
    let mut rhs = DVector::zeros(n + m);
    for j in 0..n {
        rhs[j] = -rd[j] + rc[j] / xl[j];
    }
    for i in 0..m {
        rhs[n + i] = -rp[i];
    }

    let factor = BunchKaufman::factor(kkt.clone()).map_err(|_| ill())?;
    let mut sol = factor.solve(&rhs);
    let rhs_norm = (rp.norm_squared() + rd.norm_squared() + rc.norm_squared()).sqrt();
    let tol = 1e-8 * (1.0 + rhs_norm);

    let split = |sol: &DVector<f64>| {
        let dx = sol.rows(0, n).into_owned();
        let dy = sol.rows(n, m).into_owned();
        let ds = -(d.component_mul(&dx)) - rc.component_div(&xl);
        Direction { dx, dy, ds }
    };
    let full_residual = |dir: &Direction| {
        let r1 = &lp.a * &dir.dx + &rp;
        let r2 = lp.a.tr_mul(&dir.dy) + &dir.ds + &rd;
        let r3 = sp.component_mul(&dir.dx) + xl.component_mul(&dir.ds) + &rc;
        (r1.norm_squared() + r2.norm_squared() + r3.norm_squared()).sqrt()
    };

    let mut dir = split(&sol);
    let mut res = full_residual(&dir);
    for _ in 0..3 {
        if !(res > 1e-3 * tol) {
            break;
        }
        let correction = factor.solve(&(&rhs - &kkt * &sol));
        let candidate = &sol + correction;
        let cand_dir = split(&candidate);
        let cand_res = full_residual(&cand_dir);
        if !(cand_res < res) {
            break;
        }
        sol = candidate;
        dir = cand_dir;
        res = cand_res;
    }
    if !(res <= tol) {
        return Err(ill());
    }
    Ok((dir, res))
}

fn max_step(v: &DVector<f64>, dv: &DVector<f64>, shift: &DVector<f64>) -> f64 {
    let mut alpha = f64::INFINITY;
    for i in 0..v.len() {
        if dv[i] < 0.0 {
            alpha = alpha.min(-(v[i] + shift[i]) / dv[i]);
        }
    }
    alpha
}

/// Fraction-to-the-boundary step lengths against the shifted bounds.
pub fn step_lengths(it: &Iterate, dir: &Direction, p: &PerturbationState, fraction: f64) -> (f64, f64) {
    let ap = max_step(&it.x, &dir.dx, &p.lambda);
    let ad = max_step(&it.s, &dir.ds, &p.phi);
    (1f64.min(fraction * ap), 1f64.min(fraction * ad))
}

/// Keeps λ when the new primal iterate is nonnegative (scaled by η), and
/// otherwise moves it a fraction ζ towards the most negative component;
/// likewise φ with the dual slacks.
pub fn shrink_perturbations(next: &Iterate, p: &PerturbationState) -> Result<PerturbationState> {
    let interior = |v: &DVector<f64>, shift: &DVector<f64>| v.iter().zip(shift.iter()).all(|(a, b)| a + b > 0.0);
    if !interior(&next.x, &p.lambda) || !interior(&next.s, &p.phi) {
        return Err(Error::Contract("iterate is not interior to the perturbed orthant".into()));
    }
    let rule = |v: &DVector<f64>, shift: &DVector<f64>| {
        let t = v.min();
        if t > 0.0 {
            shift * p.eta
        } else {
            shift * (1.0 - p.zeta) + DVector::from_element(shift.len(), p.zeta * -t)
        }
    };
    Ok(PerturbationState {
        lambda: rule(&next.x, &p.lambda),
        phi: rule(&next.s, &p.phi),
        eta: p.eta,
        zeta: p.zeta,
    })
}

/// Runs from Mehrotra's point of `lp`.
pub fn solve(lp: &StandardLP, options: &SolveOptions) -> Result<SolveTrace> {
    let start = mehrotra_start(lp)?;
    solve_from(lp, start, options)
}

/// Loop order per iteration: Newton solve, step, activity prediction,
/// termination test, perturbation shrink.
pub fn solve_from(lp: &StandardLP, start: Iterate, options: &SolveOptions) -> Result<SolveTrace> {
    options.validate()?;
    let n = lp.n();
    if start.x.len() != n || start.s.len() != n || start.y.len() != lp.m() {
        return Err(Error::InvalidArgument("starting point has wrong dimensions".into()));
    }
    let initial = PerturbationState::uniform(n, options.initial_perturbation, options.eta, options.zeta);
    let limit = options.stop.iterations.unwrap_or(options.max_iters);

    let mut it = start.clone();
    let mut pert = initial.clone();
    let mut partition = ActivityPartition::new(n, options.cutoff);
    let mut records = Vec::new();
    let mut status = if options.stop.iterations.is_some() {
        SolveStatus::IterationTarget
    } else {
        SolveStatus::IterLimit
    };

    for k in 0..limit {
        let mu = duality_measure(&it, &pert);
        let sigma = options.centering.sigma(mu);
        let (dir, newton_residual) = match newton_direction(lp, &it, &pert, sigma) {
            Ok(v) => v,
            Err(Error::IllConditioned { iteration }) => {
                status = SolveStatus::IllConditioned { iteration };
                break;
            }
            Err(e) => return Err(e),
        };
        let (alpha_p, alpha_d) = step_lengths(&it, &dir, &pert, options.step_fraction);
        let next = Iterate {
            x: &it.x + &dir.dx * alpha_p,
            y: &it.y + &dir.dy * alpha_d,
            s: &it.s + &dir.ds * alpha_d,
            k: k + 1,
        };
        // Near the solution of the perturbed pair x+λ can shrink to rounding
        // level, where the step may land on or past the shifted bound.
        let interior = next.x.iter().zip(pert.lambda.iter()).all(|(v, l)| v + l > 0.0)
            && next.s.iter().zip(pert.phi.iter()).all(|(v, p)| v + p > 0.0);
        if !interior || !next.x.iter().chain(next.s.iter()).chain(next.y.iter()).all(|v| v.is_finite()) {
            status = SolveStatus::IllConditioned { iteration: k };
            break;
        }

        partition.update(&threshold_test(&next.x, &next.s, options.cutoff));

        let mu_next = duality_measure(&next, &pert);
        let relres = relative_residual(lp, &next, &pert);
        records.push(IterationRecord {
            iterate: next.clone(),
            perturbation: pert.clone(),
            mu: mu_next,
            relres,
            sigma,
            alpha_p,
            alpha_d,
            newton_residual,
            partition: partition.clone(),
        });
        if options.stop.satisfied(mu_next, relres) {
            status = SolveStatus::Converged;
            break;
        }
        pert = shrink_perturbations(&next, &pert)?;
        it = next;
    }

    Ok(SolveTrace {
        start,
        initial_perturbation: initial,
        records,
        status,
    })
}

/// Solves the perturbed pair with λ, φ held fixed by running the plain
/// method on the shifted data `b + Aλ`, `c + φ` and shifting back.
pub fn solve_fixed_perturbation(
    lp: &StandardLP,
    lambda: &DVector<f64>,
    phi: &DVector<f64>,
    options: &SolveOptions,
) -> Result<(Iterate, SolveTrace)> {
    let shifted = StandardLP::new(lp.a.clone(), &lp.b + &lp.a * lambda, &lp.c + phi)?;
    let opts = SolveOptions {
        initial_perturbation: 0.0,
        ..options.clone()
    };
    let trace = solve(&shifted, &opts)?;
    let last = trace.final_iterate();
    let back = Iterate {
        x: &last.x - lambda,
        y: last.y.clone(),
        s: &last.s - phi,
        k: last.k,
    };
    Ok((back, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::worked_example;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn mehrotra_on_worked_example() {
        let it = mehrotra_start(&worked_example()).unwrap();
        assert!(close(it.x[0], 0.75, 1e-14) && close(it.x[1], 0.75, 1e-14));
        assert!(close(it.y[0], 1.5, 1e-14));
        assert!(close(it.s[0], 0.625, 1e-14) && close(it.s[1], 1.625, 1e-14));
    }

    #[test]
    fn mehrotra_symmetric_data() {
        let lp = StandardLP::from_rows(1, 3, &[1.0, 2.0, -1.0], &[0.0], &[0.0, 0.0, 0.0]).unwrap();
        let it = mehrotra_start(&lp).unwrap();
        assert_eq!(it.x, it.s);
        assert!(it.x.iter().all(|&v| v == it.x[0] && v > 0.0));
    }

    #[test]
    fn measure_examples() {
        let it = Iterate {
            x: v(&[1.0, 1.0]),
            y: v(&[0.0]),
            s: v(&[1.0, 1.0]),
            k: 0,
        };
        assert_eq!(duality_measure(&it, &PerturbationState::zero(2)), 1.0);
        let p = PerturbationState::uniform(2, 0.01, 1.0, 0.5);
        assert!(close(duality_measure(&it, &p), 1.0201, 1e-15));
    }

    #[test]
    fn residual_zero_at_solution_and_scaling() {
        let lp = worked_example();
        let it = Iterate {
            x: v(&[1.0, 0.0]),
            y: v(&[1.0]),
            s: v(&[0.0, 1.0]),
            k: 0,
        };
        assert_eq!(relative_residual(&lp, &it, &PerturbationState::zero(2)), 0.0);

        let off = Iterate {
            x: v(&[0.5, 0.2]),
            ..it
        };
        let mut big = lp.clone();
        big.b *= 10.0;
        big.c *= 10.0;
        let zero = PerturbationState::zero(2);
        let mu = duality_measure(&off, &zero);
        let rp = &big.a * &off.x - &big.b;
        let rd = big.a.tr_mul(&off.y) + &off.s - &big.c;
        let rc = off.x.component_mul(&off.s).add_scalar(-mu);
        let num = (rp.norm_squared() + rd.norm_squared() + rc.norm_squared()).sqrt();
        let expected = num / (1.0 + 10.0 * lp.b.norm().max(lp.c.norm()));
        assert!(close(relative_residual(&big, &off, &zero), expected, 1e-15));
    }

    #[test]
    fn newton_zero_on_central_path() {
        // x = s = 1 with b = A x, c = Aᵀ y + s: feasible and centered
        let lp = StandardLP::from_rows(1, 2, &[1.0, 1.0], &[2.0], &[2.0, 2.0]).unwrap();
        let it = Iterate {
            x: v(&[1.0, 1.0]),
            y: v(&[1.0]),
            s: v(&[1.0, 1.0]),
            k: 0,
        };
        let (dir, res) = newton_direction(&lp, &it, &PerturbationState::zero(2), 1.0).unwrap();
        assert!(dir.dx.amax() < 1e-15 && dir.dy.amax() < 1e-15 && dir.ds.amax() < 1e-15);
        assert!(res < 1e-15);
    }

    #[test]
    fn sigma_enters_only_third_block() {
        let lp = worked_example();
        let it = mehrotra_start(&lp).unwrap();
        let p = PerturbationState::uniform(2, 0.01, 1.0, 0.5);
        let (d0, _) = newton_direction(&lp, &it, &p, 0.0).unwrap();
        let (d1, _) = newton_direction(&lp, &it, &p, 1.0).unwrap();
        // difference solves the system with rhs (0, 0, μ e)
        let dx = &d1.dx - &d0.dx;
        let dy = &d1.dy - &d0.dy;
        let ds = &d1.ds - &d0.ds;
        assert!((&lp.a * &dx).amax() < 1e-12);
        assert!((lp.a.tr_mul(&dy) + &ds).amax() < 1e-12);
        let mu = duality_measure(&it, &p);
        let xl = &it.x + &p.lambda;
        let sp = &it.s + &p.phi;
        let third = sp.component_mul(&dx) + xl.component_mul(&ds);
        assert!(third.iter().all(|&t| close(t, mu, 1e-12)));
    }

    #[test]
    fn step_length_examples() {
        let it = Iterate {
            x: v(&[1.0]),
            y: v(&[]),
            s: v(&[1.0]),
            k: 0,
        };
        let dir = Direction {
            dx: v(&[-2.0]),
            dy: v(&[]),
            ds: v(&[1.0]),
        };
        let (ap, ad) = step_lengths(&it, &dir, &PerturbationState::zero(1), 0.9995);
        assert!(close(ap, 0.49975, 1e-15));
        assert_eq!(ad, 1.0);
        let (ap, _) = step_lengths(&it, &dir, &PerturbationState::uniform(1, 1.0, 1.0, 0.5), 0.9995);
        assert_eq!(ap, 0.9995);
    }

    #[test]
    fn shrink_examples() {
        let next = Iterate {
            x: v(&[-0.005, 0.5]),
            y: v(&[]),
            s: v(&[1.0, 1.0]),
            k: 1,
        };
        let p = PerturbationState::uniform(2, 0.01, 1.0, 0.5);
        let q = shrink_perturbations(&next, &p).unwrap();
        assert!(close(q.lambda[0], 0.0075, 1e-15) && close(q.lambda[1], 0.0075, 1e-15));
        assert_eq!(q.phi, p.phi);
        let p = PerturbationState::uniform(2, 0.01, 0.5, 0.5);
        let pos = Iterate {
            x: v(&[0.1, 0.5]),
            ..next.clone()
        };
        assert!(close(shrink_perturbations(&pos, &p).unwrap().lambda[0], 0.005, 1e-15));
        let bad = Iterate {
            x: v(&[-1.0, 0.5]),
            ..next
        };
        assert!(shrink_perturbations(&bad, &p).is_err());
    }

    #[test]
    fn worked_example_converges_and_predicts() {
        let lp = worked_example();
        let trace = solve(&lp, &SolveOptions::default().with_stop(StopRule::relres(1e-6))).unwrap();
        assert_eq!(trace.status, SolveStatus::Converged);
        let last = trace.last().unwrap();
        assert!(last.relres < 1e-6);
        assert_eq!(last.partition.active(), vec![1]);
    }

    #[test]
    fn exact_iteration_count() {
        let lp = worked_example();
        let trace = solve(&lp, &SolveOptions::default().with_stop(StopRule::iterations(4))).unwrap();
        assert_eq!(trace.len(), 4);
        assert_eq!(trace.status, SolveStatus::IterationTarget);
    }

    #[test]
    fn tiny_perturbation_is_continuous() {
        let lp = worked_example();
        let stop = StopRule::iterations(8);
        let a = solve(&lp, &SolveOptions::unperturbed().with_stop(stop)).unwrap();
        let b = solve(
            &lp,
            &SolveOptions {
                initial_perturbation: 1e-12,
                ..SolveOptions::default()
            }
            .with_stop(stop),
        )
        .unwrap();
        for (ra, rb) in a.records.iter().zip(&b.records) {
            assert!((ra.mu - rb.mu).abs() <= 1e-6 * ra.mu.abs());
        }
    }

    #[test]
    fn trace_csv_header() {
        let trace = solve(&worked_example(), &SolveOptions::default().with_stop(StopRule::iterations(2))).unwrap();
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "k,mu_lambda,relres,alpha_p,alpha_d,active,inactive,undetermined,max_lambda,max_phi"
        );
        assert_eq!(lines.count(), 2);
    }
}
