//! Basis construction from a predicted active set, a revised primal simplex
//! to finish from it, and the crossover comparison metrics.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::IndependenceTracker;
use crate::lp::StandardLP;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Basis {
    /// Column indices, position `i` is basic in row `i`.
    pub columns: Vec<usize>,
}

impl Basis {
    pub fn new(columns: Vec<usize>) -> Self {
        Basis { columns }
    }

    pub fn sorted(&self) -> Vec<usize> {
        let mut v = self.columns.clone();
        v.sort_unstable();
        v
    }

    pub fn matrix(&self, lp: &StandardLP) -> DMatrix<f64> {
        lp.a.select_columns(&self.columns)
    }

    /// 2-norm condition number of the basis matrix.
    pub fn condition(&self, lp: &StandardLP) -> f64 {
        let sv = self.matrix(lp).singular_values();
        sv.max() / sv.min()
    }
}

/// Picks independent columns outside `predicted_active` in index order, then
/// fills up with predicted-active columns by increasing `s`.
pub fn build_basis(lp: &StandardLP, predicted_active: &[usize], s: &DVector<f64>) -> Result<Basis> {
    let (m, n) = (lp.m(), lp.n());
    if s.len() != n {
        return Err(Error::InvalidArgument("dual slack vector has wrong length".into()));
    }
    let active: BTreeSet<usize> = predicted_active.iter().copied().collect();
    if active.iter().any(|&i| i >= n) {
        return Err(Error::InvalidArgument("active index out of range".into()));
    }
    let mut tracker = IndependenceTracker::new(m, lp.rank_tolerance());
    let mut columns = Vec::with_capacity(m);
    let offer = |j: usize, tracker: &mut IndependenceTracker, columns: &mut Vec<usize>| {
        let col: Vec<f64> = lp.a.column(j).iter().copied().collect();
        if tracker.try_add(&col) {
            columns.push(j);
        }
    };
    for j in (0..n).filter(|j| !active.contains(j)) {
        if tracker.is_full() {
            break;
        }
        offer(j, &mut tracker, &mut columns);
    }
    let mut by_slack: Vec<usize> = active.iter().copied().collect();
    by_slack.sort_by(|&a, &b| s[a].total_cmp(&s[b]).then(a.cmp(&b)));
    for j in by_slack {
        if tracker.is_full() {
            break;
        }
        offer(j, &mut tracker, &mut columns);
    }
    if columns.len() < m {
        return Err(Error::Internal(format!(
            "basis reached rank {} of {m}; A is not of full row rank",
            columns.len()
        )));
    }
    Ok(Basis { columns })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimplexStatus {
    Optimal,
    Unbounded,
    Infeasible,
    IterLimit,
    Failed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub status: SimplexStatus,
    /// Pivots over both phases.
    pub iterations: usize,
    pub phase1_iterations: usize,
    pub objective: f64,
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub basis: Basis,
}

const OPT_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const REFACTOR_EVERY: usize = 50;

/// Revised simplex state with an explicit basis inverse.
struct Tableau<'a> {
    lp: &'a StandardLP,
    /// Extra column used by phase 1 (index `n`).
    artificial: Option<DVector<f64>>,
    basis: Vec<usize>,
    binv: DMatrix<f64>,
    xb: DVector<f64>,
    since_refactor: usize,
}

enum Outcome {
    Optimal,
    Unbounded,
    IterLimit,
}

impl<'a> Tableau<'a> {
    fn column(&self, j: usize) -> DVector<f64> {
        if j < self.lp.n() {
            self.lp.a.column(j).into_owned()
        } else {
            self.artificial.clone().expect("artificial column present")
        }
    }

    fn refactor(&mut self) -> Result<()> {
        let m = self.lp.m();
        let mut bmat = DMatrix::zeros(m, m);
        for (k, &j) in self.basis.iter().enumerate() {
            bmat.set_column(k, &self.column(j));
        }
        self.binv = bmat
            .lu()
            .try_inverse()
            .ok_or_else(|| Error::Internal("basis matrix became singular".into()))?;
        self.xb = &self.binv * &self.lp.b;
        self.since_refactor = 0;
        Ok(())
    }

    fn pivot(&mut self, r: usize, entering: usize, w: &DVector<f64>) -> Result<()> {
        let m = self.lp.m();
        let wr = w[r];
        let theta = self.xb[r] / wr;
        for i in 0..m {
            if i != r {
                self.xb[i] -= theta * w[i];
            }
        }
        self.xb[r] = theta;
        let row_r: Vec<f64> = (0..m).map(|c| self.binv[(r, c)] / wr).collect();
        for (c, &v) in row_r.iter().enumerate() {
            let mut col = self.binv.column_mut(c);
            for i in 0..m {
                if i != r {
                    col[i] -= w[i] * v;
                }
            }
            col[r] = v;
        }
        self.basis[r] = entering;
        self.since_refactor += 1;
        if self.since_refactor >= REFACTOR_EVERY {
            self.refactor()?;
        }
        Ok(())
    }

    fn duals(&self, cost: &[f64]) -> DVector<f64> {
        let cb = DVector::from_iterator(self.basis.len(), self.basis.iter().map(|&j| cost.get(j).copied().unwrap_or(0.0)));
        self.binv.tr_mul(&cb)
    }

    /// Minimizes `cost` (length n, or n+1 with the artificial) from the
    /// current feasible basis.
    fn optimize(&mut self, cost: &[f64], budget: usize, pivots: &mut usize) -> Result<Outcome> {
        let m = self.lp.m();
        let ncols = cost.len();
        let mut in_basis = vec![false; ncols];
        let mut degenerate_run = 0usize;
        let mut bland = false;
        loop {
            in_basis.iter_mut().for_each(|v| *v = false);
            for &j in &self.basis {
                in_basis[j] = true;
            }
            let y = self.duals(cost);
            let mut entering = None;
            let mut best = -OPT_TOL;
            for j in 0..ncols {
                if in_basis[j] {
                    continue;
                }
                let d = cost[j] - self.column_dot(j, &y);
                if d < best {
                    entering = Some(j);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(q) = entering else {
                if self.since_refactor > 0 {
                    // confirm with fresh factors before declaring optimality
                    self.refactor()?;
                    let y = self.duals(cost);
                    let still = (0..ncols).any(|j| !in_basis[j] && cost[j] - self.column_dot(j, &y) < -OPT_TOL);
                    if still {
                        continue;
                    }
                }
                return Ok(Outcome::Optimal);
            };
            if *pivots >= budget {
                return Ok(Outcome::IterLimit);
            }

            let w = &self.binv * self.column(q);
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..m {
                if w[i] > PIVOT_TOL {
                    let ratio = self.xb[i].max(0.0) / w[i];
                    let better = match leave {
                        None => true,
                        Some((r, best)) => {
                            if ratio < best - 1e-12 {
                                true
                            } else if ratio <= best + 1e-12 {
                                if bland {
                                    self.basis[i] < self.basis[r]
                                } else {
                                    w[i] > w[r]
                                }
                            } else {
                                false
                            }
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r, theta)) = leave else {
                return Ok(Outcome::Unbounded);
            };
            if self.xb[r] < 0.0 {
                self.xb[r] = 0.0;
            }
            self.pivot(r, q, &w)?;
            *pivots += 1;
            if theta <= 1e-12 {
                degenerate_run += 1;
                if degenerate_run >= 5 * m {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
                bland = false;
            }
        }
    }

    fn column_dot(&self, j: usize, y: &DVector<f64>) -> f64 {
        if j < self.lp.n() {
            self.lp.a.column(j).dot(y)
        } else {
            self.artificial.as_ref().expect("artificial column present").dot(y)
        }
    }
}

/// Primal simplex from `start`; an infeasible start goes through a phase 1
/// that uses one artificial column.
pub fn revised_simplex(lp: &StandardLP, start: &Basis, iter_limit: usize) -> Result<SimplexResult> {
    let (m, n) = (lp.m(), lp.n());
    if start.columns.len() != m || start.columns.iter().any(|&j| j >= n) {
        return Err(Error::InvalidArgument("start basis must list m valid columns".into()));
    }
    let mut t = Tableau {
        lp,
        artificial: None,
        basis: start.columns.clone(),
        binv: DMatrix::zeros(m, m),
        xb: DVector::zeros(m),
        since_refactor: 0,
    };
    t.refactor()?;

    let feas_tol = 1e-9 * (1.0 + lp.b.amax());
    let mut pivots = 0usize;
    let mut phase1 = 0usize;
    let finish = |t: &Tableau, status: SimplexStatus, pivots: usize, phase1: usize| {
        let mut x = DVector::zeros(n);
        for (k, &j) in t.basis.iter().enumerate() {
            if j < n {
                x[j] = t.xb[k].max(0.0);
            }
        }
        let cost: Vec<f64> = lp.c.iter().copied().collect();
        SimplexResult {
            status,
            iterations: pivots,
            phase1_iterations: phase1,
            objective: lp.objective(&x),
            y: t.duals(&cost),
            x,
            basis: Basis::new(t.basis.clone()),
        }
    };

    if t.xb.min() < -feas_tol {
        // x_B(t) = B⁻¹b + u·t with u marking the negative rows
        let u = DVector::from_iterator(m, t.xb.iter().map(|&v| if v < -feas_tol { 1.0 } else { 0.0 }));
        let bmat = Basis::new(t.basis.clone()).matrix(lp);
        t.artificial = Some(-(bmat * &u));
        let (r, _) = t
            .xb
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
        let w = -u;
        t.pivot(r, n, &w)?;
        pivots += 1;

        let mut cost = vec![0.0; n + 1];
        cost[n] = 1.0;
        match t.optimize(&cost, iter_limit, &mut pivots)? {
            Outcome::Optimal => {}
            Outcome::IterLimit => return Ok(finish(&t, SimplexStatus::IterLimit, pivots, pivots)),
            Outcome::Unbounded => return Ok(finish(&t, SimplexStatus::Failed, pivots, pivots)),
        }
        if let Some(r) = t.basis.iter().position(|&j| j == n) {
            if t.xb[r] > feas_tol {
                return Ok(finish(&t, SimplexStatus::Infeasible, pivots, pivots));
            }
            // drive the artificial out at zero level
            let row: DVector<f64> = t.binv.row(r).transpose();
            let in_basis: BTreeSet<usize> = t.basis.iter().copied().collect();
            let candidate = (0..n)
                .filter(|j| !in_basis.contains(j))
                .map(|j| (j, lp.a.column(j).dot(&row)))
                .filter(|(_, v)| v.abs() > 1e-7)
                .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()).then(b.0.cmp(&a.0)));
            let Some((q, _)) = candidate else {
                return Ok(finish(&t, SimplexStatus::Failed, pivots, pivots));
            };
            let w = &t.binv * lp.a.column(q);
            t.xb[r] = 0.0;
            t.pivot(r, q, &w)?;
            pivots += 1;
        }
        t.artificial = None;
        t.refactor()?;
        phase1 = pivots;
    }

    let cost: Vec<f64> = lp.c.iter().copied().collect();
    let status = match t.optimize(&cost, iter_limit, &mut pivots)? {
        Outcome::Optimal => SimplexStatus::Optimal,
        Outcome::Unbounded => SimplexStatus::Unbounded,
        Outcome::IterLimit => SimplexStatus::IterLimit,
    };
    Ok(finish(&t, status, pivots, phase1))
}

/// `|b1 Δ b2| / |b1 ∪ b2|`.
pub fn basis_relative_difference(b1: &Basis, b2: &Basis) -> f64 {
    let s1: BTreeSet<usize> = b1.columns.iter().copied().collect();
    let s2: BTreeSet<usize> = b2.columns.iter().copied().collect();
    let union = s1.union(&s2).count();
    if union == 0 {
        return 0.0;
    }
    s1.symmetric_difference(&s2).count() as f64 / union as f64
}

/// `−log₂(iter_perturbed / iter_unperturbed)`; positive means the perturbed
/// start needed fewer pivots. Zero counts give 0 (both) or ±∞.
pub fn relative_iteration_count(iter_perturbed: usize, iter_unperturbed: usize) -> f64 {
    match (iter_perturbed, iter_unperturbed) {
        (0, 0) => 0.0,
        (_, 0) => f64::NEG_INFINITY,
        (0, _) => f64::INFINITY,
        (p, u) => -(p as f64 / u as f64).log2(),
    }
}
