use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::IndependenceTracker;

/// A standard-form pair: min cᵀx s.t. Ax = b, x ≥ 0 and its dual.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardLP {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: DVector<f64>,
    pub row_names: Option<Vec<String>>,
    pub col_names: Option<Vec<String>>,
    /// Constant added to cᵀx by standardization (shifted or fixed variables).
    pub objective_offset: f64,
}

impl StandardLP {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, c: DVector<f64>) -> Result<Self> {
        let (m, n) = a.shape();
        if b.len() != m || c.len() != n {
            return Err(Error::InvalidArgument(format!(
                "dimension mismatch: A is {m}x{n}, b has {}, c has {}",
                b.len(),
                c.len()
            )));
        }
        if m > n {
            return Err(Error::InvalidArgument(format!("more rows ({m}) than columns ({n})")));
        }
        if a.iter().chain(b.iter()).chain(c.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite data".into()));
        }
        Ok(StandardLP {
            a,
            b,
            c,
            row_names: None,
            col_names: None,
            objective_offset: 0.0,
        })
    }

    /// Row-major dense constructor, handy for small literals.
    pub fn from_rows(m: usize, n: usize, a: &[f64], b: &[f64], c: &[f64]) -> Result<Self> {
        if a.len() != m * n {
            return Err(Error::InvalidArgument(format!("expected {} matrix entries, got {}", m * n, a.len())));
        }
        Self::new(
            DMatrix::from_row_slice(m, n, a),
            DVector::from_column_slice(b),
            DVector::from_column_slice(c),
        )
    }

    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        self.c.dot(x) + self.objective_offset
    }

    pub fn row_name(&self, i: usize) -> String {
        self.row_names
            .as_ref()
            .and_then(|names| names.get(i).cloned())
            .unwrap_or_else(|| format!("row {i}"))
    }

    pub(crate) fn rank_tolerance(&self) -> f64 {
        1e-10 * self.a.norm().max(f64::MIN_POSITIVE)
    }
}

/// Where an active-set label came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LabelSource {
    SimplexOracle,
    IpmOracle,
    Predicted,
}

/// Sorted, 0-based column indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActiveSetLabel {
    pub indices: Vec<usize>,
    pub source: LabelSource,
}

impl ActiveSetLabel {
    pub fn new(mut indices: Vec<usize>, source: LabelSource) -> Self {
        indices.sort_unstable();
        indices.dedup();
        ActiveSetLabel { indices, source }
    }
}

/// Removes linearly dependent rows; an inconsistent dependent row is an error.
///
/// Rows are scanned in order and kept when independent of the rows kept so
/// far (incremental LU, pivot tolerance 1e-10·‖A‖). Full-rank input comes back
/// unchanged.
pub fn ensure_full_rank(lp: &StandardLP) -> Result<StandardLP> {
    let (m, n) = (lp.m(), lp.n());
    let tol = lp.rank_tolerance();
    let mut tracker = IndependenceTracker::new(n, tol);
    let mut keep = Vec::with_capacity(m);
    let mut dropped = Vec::new();
    for i in 0..m {
        let row: Vec<f64> = lp.a.row(i).iter().copied().collect();
        if tracker.try_add(&row) {
            keep.push(i);
        } else {
            dropped.push(i);
        }
    }
    if dropped.is_empty() {
        return Ok(lp.clone());
    }

    if keep.is_empty() {
        // every row is (numerically) zero
        if let Some(&i) = dropped.iter().find(|&&i| lp.b[i].abs() > tol.max(1e-9)) {
            return Err(Error::Infeasible { row: lp.row_name(i) });
        }
    } else {
        let kept = lp.a.select_rows(&keep);
        let kept_b = DVector::from_iterator(keep.len(), keep.iter().map(|&i| lp.b[i]));
        let svd = kept.transpose().svd(true, true);
        let b_scale = 1.0 + lp.b.amax();
        for &i in &dropped {
            let target = lp.a.row(i).transpose();
            let coeffs = svd
                .solve(&target, 1e-12)
                .map_err(|e| Error::Internal(e.to_string()))?;
            let implied = coeffs.dot(&kept_b);
            if (implied - lp.b[i]).abs() > 1e-8 * b_scale {
                return Err(Error::Infeasible { row: lp.row_name(i) });
            }
        }
    }

    Ok(StandardLP {
        a: lp.a.select_rows(&keep),
        b: DVector::from_iterator(keep.len(), keep.iter().map(|&i| lp.b[i])),
        c: lp.c.clone(),
        row_names: lp
            .row_names
            .as_ref()
            .map(|names| keep.iter().map(|&i| names[i].clone()).collect()),
        col_names: lp.col_names.clone(),
        objective_offset: lp.objective_offset,
    })
}

/// min x₁ + 2x₂ s.t. x₁ + x₂ = 1, x ≥ 0. Unique solution x* = (1, 0).
pub fn worked_example() -> StandardLP {
    StandardLP::from_rows(1, 2, &[1.0, 1.0], &[1.0], &[1.0, 2.0]).expect("valid literal")
}
