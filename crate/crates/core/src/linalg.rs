//! Dense kernels that nalgebra does not provide: a symmetric indefinite
//! LDLᵀ factorization and an incremental column-independence test.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Block {
    One,
    Two,
}

/// Bunch-Kaufman factorization `P M Pᵀ = L D Lᵀ` of a symmetric matrix.
///
/// Zero multipliers are skipped during the trailing update, so block
/// structure in the input (for example a diagonal leading block) produces no
/// fill and costs nothing.
#[derive(Debug, Clone)]
pub struct BunchKaufman {
    factors: DMatrix<f64>,
    perm: Vec<usize>,
    blocks: Vec<(usize, Block)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SingularPivot(pub usize);

impl BunchKaufman {
    /// Factors a symmetric matrix; both triangles must be filled.
    pub fn factor(mut w: DMatrix<f64>) -> Result<Self, SingularPivot> {
        let n = w.nrows();
        assert_eq!(n, w.ncols(), "square matrix expected");
        let alpha = (1.0 + 17f64.sqrt()) / 8.0;
        let mut perm: Vec<usize> = (0..n).collect();
        let mut blocks = Vec::with_capacity(n);
        let mut nz: Vec<usize> = Vec::with_capacity(n);
        let mut c1: Vec<f64> = Vec::with_capacity(n);
        let mut c2: Vec<f64> = Vec::with_capacity(n);

        let mut k = 0;
        while k < n {
            let absakk = w[(k, k)].abs();
            let mut imax = k;
            let mut colmax = 0.0;
            for i in k + 1..n {
                let v = w[(i, k)].abs();
                if v > colmax {
                    colmax = v;
                    imax = i;
                }
            }
            if !(absakk.max(colmax) > 0.0) || !absakk.is_finite() || !colmax.is_finite() {
                return Err(SingularPivot(k));
            }

            let (kstep, kp) = if absakk >= alpha * colmax {
                (1, k)
            } else {
                let mut rowmax: f64 = 0.0;
                for j in k..n {
                    if j != imax {
                        rowmax = rowmax.max(w[(imax, j)].abs());
                    }
                }
                if absakk * rowmax >= alpha * colmax * colmax {
                    (1, k)
                } else if w[(imax, imax)].abs() >= alpha * rowmax {
                    (1, imax)
                } else {
                    (2, imax)
                }
            };

            let kk = k + kstep - 1;
            if kp != kk {
                w.swap_rows(kk, kp);
                w.swap_columns(kk, kp);
                perm.swap(kk, kp);
            }

            if kstep == 1 {
                let d = w[(k, k)];
                nz.clear();
                c1.clear();
                for i in k + 1..n {
                    let v = w[(i, k)];
                    if v != 0.0 {
                        nz.push(i);
                        c1.push(v);
                    }
                }
                for (b, &j) in nz.iter().enumerate() {
                    let f = c1[b] / d;
                    let mut col = w.column_mut(j);
                    for (a, &i) in nz.iter().enumerate() {
                        col[i] -= c1[a] * f;
                    }
                }
                for (a, &i) in nz.iter().enumerate() {
                    w[(i, k)] = c1[a] / d;
                }
                blocks.push((k, Block::One));
            } else {
                let d11 = w[(k, k)];
                let d21 = w[(k + 1, k)];
                let d22 = w[(k + 1, k + 1)];
                let det = d11 * d22 - d21 * d21;
                if !(det != 0.0) || !det.is_finite() {
                    return Err(SingularPivot(k));
                }
                nz.clear();
                c1.clear();
                c2.clear();
                for i in k + 2..n {
                    let a = w[(i, k)];
                    let b = w[(i, k + 1)];
                    if a != 0.0 || b != 0.0 {
                        nz.push(i);
                        c1.push(a);
                        c2.push(b);
                    }
                }
                // multipliers l = c D⁻¹
                let l1: Vec<f64> = (0..nz.len())
                    .map(|a| (c1[a] * d22 - c2[a] * d21) / det)
                    .collect();
                let l2: Vec<f64> = (0..nz.len())
                    .map(|a| (c2[a] * d11 - c1[a] * d21) / det)
                    .collect();
                for (b, &j) in nz.iter().enumerate() {
                    let (p, q) = (c1[b], c2[b]);
                    let mut col = w.column_mut(j);
                    for (a, &i) in nz.iter().enumerate() {
                        col[i] -= l1[a] * p + l2[a] * q;
                    }
                }
                for (a, &i) in nz.iter().enumerate() {
                    w[(i, k)] = l1[a];
                    w[(i, k + 1)] = l2[a];
                }
                blocks.push((k, Block::Two));
            }
            k += kstep;
        }

        Ok(BunchKaufman {
            factors: w,
            perm,
            blocks,
        })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let n = self.dim();
        let l = &self.factors;
        let mut z: Vec<f64> = self.perm.iter().map(|&p| rhs[p]).collect();

        for &(k, block) in &self.blocks {
            match block {
                Block::One => {
                    let zk = z[k];
                    if zk != 0.0 {
                        let col = l.column(k);
                        for i in k + 1..n {
                            z[i] -= col[i] * zk;
                        }
                    }
                }
                Block::Two => {
                    let (za, zb) = (z[k], z[k + 1]);
                    let ca = l.column(k);
                    let cb = l.column(k + 1);
                    for i in k + 2..n {
                        z[i] -= ca[i] * za + cb[i] * zb;
                    }
                }
            }
        }

        for &(k, block) in &self.blocks {
            match block {
                Block::One => z[k] /= l[(k, k)],
                Block::Two => {
                    let (d11, d21, d22) = (l[(k, k)], l[(k + 1, k)], l[(k + 1, k + 1)]);
                    let det = d11 * d22 - d21 * d21;
                    let (a, b) = (z[k], z[k + 1]);
                    z[k] = (d22 * a - d21 * b) / det;
                    z[k + 1] = (d11 * b - d21 * a) / det;
                }
            }
        }

        for &(k, block) in self.blocks.iter().rev() {
            match block {
                Block::One => {
                    let col = l.column(k);
                    let mut acc = 0.0;
                    for i in k + 1..n {
                        acc += col[i] * z[i];
                    }
                    z[k] -= acc;
                }
                Block::Two => {
                    let ca = l.column(k);
                    let cb = l.column(k + 1);
                    let (mut sa, mut sb) = (0.0, 0.0);
                    for i in k + 2..n {
                        sa += ca[i] * z[i];
                        sb += cb[i] * z[i];
                    }
                    z[k] -= sa;
                    z[k + 1] -= sb;
                }
            }
        }

        let mut out = DVector::zeros(n);
        for (i, &p) in self.perm.iter().enumerate() {
            out[p] = z[i];
        }
        out
    }

    /// Number of 2×2 pivot blocks used.
    pub fn two_by_two_count(&self) -> usize {
        self.blocks.iter().filter(|(_, b)| *b == Block::Two).count()
    }
}

/// Gaussian elimination with partial pivoting, one column at a time.
///
/// Each accepted column is reduced against the previous ones and stored with
/// its pivot row, so testing a new column costs `O(m · rank)`.
#[derive(Debug, Clone)]
pub struct IndependenceTracker {
    tol: f64,
    reduced: Vec<(usize, Vec<f64>)>,
    dim: usize,
}

impl IndependenceTracker {
    pub fn new(dim: usize, tol: f64) -> Self {
        IndependenceTracker {
            tol,
            reduced: Vec::new(),
            dim,
        }
    }

    pub fn rank(&self) -> usize {
        self.reduced.len()
    }

    pub fn is_full(&self) -> bool {
        self.reduced.len() == self.dim
    }

    /// Adds `v` if it is independent of the accepted columns; returns whether it was.
    pub fn try_add(&mut self, v: &[f64]) -> bool {
        debug_assert_eq!(v.len(), self.dim);
        if self.is_full() {
            return false;
        }
        let mut r = v.to_vec();
        for (p, u) in &self.reduced {
            let f = r[*p];
            if f != 0.0 {
                for (ri, ui) in r.iter_mut().zip(u) {
                    *ri -= f * ui;
                }
            }
        }
        let (p, big) = r
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |acc, (i, v)| if v.abs() > acc.1 { (i, v.abs()) } else { acc });
        if big <= self.tol {
            return false;
        }
        let piv = r[p];
        for ri in r.iter_mut() {
            *ri /= piv;
        }
        self.reduced.push((p, r));
        true
    }
}

pub fn frobenius(a: &DMatrix<f64>) -> f64 {
    a.norm()
}
