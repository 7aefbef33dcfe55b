//! Random test problems with a known feasible (TS1) or complementary (TS2) witness.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lp::StandardLP;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InstanceKind {
    /// TS1: witness is a feasible primal-dual pair.
    FeasiblePoint,
    /// TS2: witness is a complementary, degenerate solution.
    DegenerateSolution,
}

impl InstanceKind {
    pub fn label(self) -> &'static str {
        match self {
            InstanceKind::FeasiblePoint => "ts1",
            InstanceKind::DegenerateSolution => "ts2",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        match s {
            "ts1" => Some(InstanceKind::FeasiblePoint),
            "ts2" => Some(InstanceKind::DegenerateSolution),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedInstance {
    pub lp: StandardLP,
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub s: DVector<f64>,
    pub kind: InstanceKind,
    pub seed: u64,
    pub density: f64,
}

/// Exclusive bounds on the random dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SizeRange {
    pub m_open: (usize, usize),
    pub n_open: (usize, usize),
}

impl Default for SizeRange {
    fn default() -> Self {
        SizeRange {
            m_open: (10, 200),
            n_open: (20, 500),
        }
    }
}

impl SizeRange {
    pub fn with_m(lo: usize, hi: usize) -> Self {
        SizeRange {
            m_open: (lo, hi),
            ..Default::default()
        }
    }
}

fn draw_dims(rng: &mut ChaCha8Rng, range: SizeRange) -> (usize, usize) {
    let (m_lo, m_hi) = range.m_open;
    let (n_lo, n_hi) = range.n_open;
    assert!(m_lo + 1 < m_hi, "empty m range");
    loop {
        let m = rng.gen_range(m_lo + 1..m_hi);
        let lo = (n_lo + 1).max(2 * m + 1);
        let hi = (n_hi - 1).min(7 * m - 1);
        if lo <= hi {
            return (m, rng.gen_range(lo..=hi));
        }
    }
}

/// Magnitude in (0, 1].
fn magnitude(rng: &mut ChaCha8Rng) -> f64 {
    1.0 - rng.gen::<f64>()
}

fn sign(rng: &mut ChaCha8Rng) -> f64 {
    if rng.gen::<bool>() {
        1.0
    } else {
        -1.0
    }
}

fn draw_matrix(rng: &mut ChaCha8Rng, m: usize, n: usize, density: f64) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(m, n);
    for i in 0..m {
        loop {
            let mut any = false;
            for j in 0..n {
                a[(i, j)] = if rng.gen::<f64>() < density {
                    any = true;
                    sign(rng) * magnitude(rng)
                } else {
                    0.0
                };
            }
            if any {
                break;
            }
        }
    }
    a
}

fn assemble(
    a: DMatrix<f64>,
    x: DVector<f64>,
    y: DVector<f64>,
    s: DVector<f64>,
    kind: InstanceKind,
    seed: u64,
    density: f64,
) -> GeneratedInstance {
    let b = &a * &x;
    let c = a.tr_mul(&y) + &s;
    let lp = StandardLP::new(a, b, c).expect("generated data is well formed");
    GeneratedInstance {
        lp,
        x,
        y,
        s,
        kind,
        seed,
        density,
    }
}

fn dual_vector(rng: &mut ChaCha8Rng, m: usize) -> DVector<f64> {
    DVector::from_iterator(
        m,
        (0..m).map(|_| {
            if rng.gen::<bool>() {
                sign(rng) * magnitude(rng)
            } else {
                0.0
            }
        }),
    )
}

pub fn generate_ts1_sized(seed: u64, range: SizeRange) -> GeneratedInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (m, n) = draw_dims(&mut rng, range);
    let density = rng.gen_range(0.4..0.8);
    let a = draw_matrix(&mut rng, m, n, density);
    let half = |rng: &mut ChaCha8Rng| if rng.gen::<bool>() { magnitude(rng) } else { 0.0 };
    let x = DVector::from_iterator(n, (0..n).map(|_| half(&mut rng)));
    let s = DVector::from_iterator(n, (0..n).map(|_| half(&mut rng)));
    let y = dual_vector(&mut rng, m);
    assemble(a, x, y, s, InstanceKind::FeasiblePoint, seed, density)
}

pub fn generate_ts2_sized(seed: u64, range: SizeRange) -> GeneratedInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (m, n) = draw_dims(&mut rng, range);
    let density = rng.gen_range(0.4..0.8);
    let a = draw_matrix(&mut rng, m, n, density);

    let kx = rng.gen_range(m.div_ceil(2)..=m - 1);
    let mut support = vec![false; n];
    let mut x = DVector::zeros(n);
    for j in sample(&mut rng, n, kx).into_iter() {
        support[j] = true;
        x[j] = magnitude(&mut rng);
    }
    let complement: Vec<usize> = (0..n).filter(|&j| !support[j]).collect();
    let ks = rng.gen_range((n - m).div_ceil(2)..=n - m - 1);
    let mut s = DVector::zeros(n);
    for k in sample(&mut rng, complement.len(), ks).into_iter() {
        s[complement[k]] = magnitude(&mut rng);
    }
    let y = dual_vector(&mut rng, m);
    assemble(a, x, y, s, InstanceKind::DegenerateSolution, seed, density)
}

pub fn generate_ts1(seed: u64) -> GeneratedInstance {
    generate_ts1_sized(seed, SizeRange::default())
}

pub fn generate_ts2(seed: u64) -> GeneratedInstance {
    generate_ts2_sized(seed, SizeRange::default())
}

pub fn generate(kind: InstanceKind, seed: u64, range: SizeRange) -> GeneratedInstance {
    match kind {
        InstanceKind::FeasiblePoint => generate_ts1_sized(seed, range),
        InstanceKind::DegenerateSolution => generate_ts2_sized(seed, range),
    }
}

impl GeneratedInstance {
    /// Header `m n density seed kind`, 0-based COO triples of A, then b, c,
    /// x, y, s one value per line. Floats use shortest round-trip text.
    pub fn to_text(&self) -> String {
        let lp = &self.lp;
        let mut out = String::new();
        let _ = writeln!(out, "{} {} {} {} {}", lp.m(), lp.n(), self.density, self.seed, self.kind.label());
        for j in 0..lp.n() {
            for i in 0..lp.m() {
                let v = lp.a[(i, j)];
                if v != 0.0 {
                    let _ = writeln!(out, "{i} {j} {v}");
                }
            }
        }
        for v in lp.b.iter().chain(lp.c.iter()).chain(self.x.iter()).chain(self.y.iter()).chain(self.s.iter()) {
            let _ = writeln!(out, "{v}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |line: usize, msg: &str| Error::Parse {
            line,
            message: msg.to_string(),
        };
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| bad(1, "empty input"))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 5 {
            return Err(bad(1, "header must be `m n density seed kind`"));
        }
        let m: usize = h[0].parse().map_err(|_| bad(1, "bad m"))?;
        let n: usize = h[1].parse().map_err(|_| bad(1, "bad n"))?;
        let density: f64 = h[2].parse().map_err(|_| bad(1, "bad density"))?;
        let seed: u64 = h[3].parse().map_err(|_| bad(1, "bad seed"))?;
        let kind = InstanceKind::from_label(h[4]).ok_or_else(|| bad(1, "bad kind"))?;

        let mut a = DMatrix::zeros(m, n);
        let mut values = Vec::with_capacity(2 * m + 3 * n);
        for (idx, line) in lines {
            let toks: Vec<&str> = line.split_whitespace().collect();
            match toks.len() {
                0 => continue,
                3 if values.is_empty() => {
                    let i: usize = toks[0].parse().map_err(|_| bad(idx + 1, "bad row index"))?;
                    let j: usize = toks[1].parse().map_err(|_| bad(idx + 1, "bad column index"))?;
                    let v: f64 = toks[2].parse().map_err(|_| bad(idx + 1, "bad value"))?;
                    if i >= m || j >= n {
                        return Err(bad(idx + 1, "index out of range"));
                    }
                    a[(i, j)] = v;
                }
                1 => values.push(toks[0].parse::<f64>().map_err(|_| bad(idx + 1, "bad value"))?),
                _ => return Err(bad(idx + 1, "unexpected field count")),
            }
        }
        if values.len() != 2 * m + 3 * n {
            return Err(bad(0, "wrong number of vector entries"));
        }
        let mut it = values.into_iter();
        let mut take = |k: usize| DVector::from_iterator(k, it.by_ref().take(k));
        let b = take(m);
        let c = take(n);
        let x = take(n);
        let y = take(m);
        let s = take(n);
        Ok(GeneratedInstance {
            lp: StandardLP::new(a, b, c)?,
            x,
            y,
            s,
            kind,
            seed,
            density,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn feasibility(inst: &GeneratedInstance) -> (f64, f64) {
        let lp = &inst.lp;
        let p = (&lp.a * &inst.x - &lp.b).norm() / (1.0 + lp.b.norm());
        let d = (lp.a.tr_mul(&inst.y) + &inst.s - &lp.c).norm() / (1.0 + lp.c.norm());
        (p, d)
    }

    #[test]
    fn ts1_witness_and_ranges() {
        for seed in 0..4 {
            let inst = generate_ts1(seed);
            let (m, n) = (inst.lp.m(), inst.lp.n());
            assert!(m > 10 && m < 200);
            assert!(n > 20 && n < 500 && n > 2 * m && n < 7 * m);
            assert!(inst.density > 0.4 && inst.density < 0.8);
            let (p, d) = feasibility(&inst);
            assert!(p < 1e-10 && d < 1e-10);
            assert!(inst.x.iter().all(|&v| v >= 0.0) && inst.s.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn ts2_witness_is_degenerate_solution() {
        for seed in 0..4 {
            let inst = generate_ts2_sized(seed, SizeRange::with_m(10, 60));
            let (m, n) = (inst.lp.m(), inst.lp.n());
            assert!(inst.x.component_mul(&inst.s).iter().all(|&v| v == 0.0));
            let nx = inst.x.iter().filter(|&&v| v != 0.0).count();
            let ns = inst.s.iter().filter(|&&v| v != 0.0).count();
            assert!(nx < m && ns < n - m);
            let gap = inst.lp.c.dot(&inst.x) - inst.lp.b.dot(&inst.y);
            assert!(gap.abs() < 1e-10 * (1.0 + inst.lp.c.dot(&inst.x).abs()));
        }
    }

    #[test]
    fn deterministic_and_round_trips() {
        let a = generate_ts1_sized(7, SizeRange::with_m(10, 30));
        let b = generate_ts1_sized(7, SizeRange::with_m(10, 30));
        assert_eq!(a.to_text(), b.to_text());
        let back = GeneratedInstance::from_text(&a.to_text()).unwrap();
        assert_eq!(back, a);
        let t2 = generate_ts2_sized(3, SizeRange::with_m(10, 30));
        assert_eq!(GeneratedInstance::from_text(&t2.to_text()).unwrap(), t2);
    }
}
