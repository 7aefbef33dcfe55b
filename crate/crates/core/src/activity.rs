//! Active-set prediction: cut-off sets, the stateful three-set procedure,
//! and prediction-quality ratios.

use std::collections::BTreeSet;

use nalgebra::DVector;

pub const DEFAULT_CUTOFF: f64 = 1e-5;

/// `x_i < C` and `s_i > C`.
pub fn threshold_test(x: &DVector<f64>, s: &DVector<f64>, cutoff: f64) -> Vec<bool> {
    x.iter().zip(s.iter()).map(|(&xi, &si)| xi < cutoff && si > cutoff).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Membership {
    Active,
    Inactive,
    Undetermined,
}

/// Predicted active, predicted inactive and undetermined indices.
///
/// Stored as one label per index, so the three sets are disjoint and cover
/// `0..n` by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivityPartition {
    labels: Vec<Membership>,
    prev_test: Vec<bool>,
    cutoff: f64,
}

impl ActivityPartition {
    /// Everything undetermined, no previous test passed.
    pub fn new(n: usize, cutoff: f64) -> Self {
        ActivityPartition {
            labels: vec![Membership::Undetermined; n],
            prev_test: vec![false; n],
            cutoff,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn labels(&self) -> &[Membership] {
        &self.labels
    }

    pub fn prev_test(&self) -> &[bool] {
        &self.prev_test
    }

    fn collect(&self, which: Membership) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.labels[i] == which).collect()
    }

    pub fn active(&self) -> Vec<usize> {
        self.collect(Membership::Active)
    }

    pub fn inactive(&self) -> Vec<usize> {
        self.collect(Membership::Inactive)
    }

    pub fn undetermined(&self) -> Vec<usize> {
        self.collect(Membership::Undetermined)
    }

    pub fn counts(&self) -> (usize, usize, usize) {
        let mut c = (0, 0, 0);
        for l in &self.labels {
            match l {
                Membership::Active => c.0 += 1,
                Membership::Inactive => c.1 += 1,
                Membership::Undetermined => c.2 += 1,
            }
        }
        c
    }

    /// One step of the procedure, with its three rules applied in order:
    /// undetermined indices move to active after two consecutive passing
    /// tests and to inactive otherwise; then active indices failing the
    /// test and inactive indices passing it fall back to undetermined.
    pub fn update(&mut self, test_now: &[bool]) {
        assert_eq!(test_now.len(), self.labels.len(), "test vector length");
        for (i, label) in self.labels.iter_mut().enumerate() {
            let (prev, now) = (self.prev_test[i], test_now[i]);
            if *label == Membership::Undetermined {
                *label = if prev && now {
                    Membership::Active
                } else {
                    Membership::Inactive
                };
            }
            if *label == Membership::Active && !now {
                *label = Membership::Undetermined;
            }
            if *label == Membership::Inactive && now {
                *label = Membership::Undetermined;
            }
        }
        self.prev_test.copy_from_slice(test_now);
    }

    pub fn updated(&self, test_now: &[bool]) -> Self {
        let mut next = self.clone();
        next.update(test_now);
        next
    }
}

/// `({i : x_i < C}, {i : s_i ≥ C})`.
pub fn predicted_sets(x: &DVector<f64>, s: &DVector<f64>, cutoff: f64) -> (Vec<usize>, Vec<usize>) {
    let pacs = (0..x.len()).filter(|&i| x[i] < cutoff).collect();
    let psas = (0..s.len()).filter(|&i| s[i] >= cutoff).collect();
    (pacs, psas)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictionRatios {
    pub false_ratio: f64,
    pub missed_ratio: f64,
    pub correct_ratio: f64,
}

/// Counts behind the ratios; exact integers, so the identity can be checked exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OverlapCounts {
    pub predicted_only: usize,
    pub actual_only: usize,
    pub both: usize,
}

impl OverlapCounts {
    pub fn of(predicted: &[usize], actual: &[usize]) -> Self {
        let p: BTreeSet<usize> = predicted.iter().copied().collect();
        let a: BTreeSet<usize> = actual.iter().copied().collect();
        let both = p.intersection(&a).count();
        OverlapCounts {
            predicted_only: p.len() - both,
            actual_only: a.len() - both,
            both,
        }
    }

    pub fn union(&self) -> usize {
        self.predicted_only + self.actual_only + self.both
    }

    pub fn ratios(&self) -> PredictionRatios {
        let u = self.union();
        if u == 0 {
            return PredictionRatios {
                false_ratio: 0.0,
                missed_ratio: 0.0,
                correct_ratio: 1.0,
            };
        }
        let u = u as f64;
        PredictionRatios {
            false_ratio: self.predicted_only as f64 / u,
            missed_ratio: self.actual_only as f64 / u,
            correct_ratio: self.both as f64 / u,
        }
    }
}

/// Jaccard-style false / missed / correct fractions over `|predicted ∪ actual|`.
/// Two empty sets count as a perfect prediction `(0, 0, 1)`.
pub fn prediction_ratios(predicted: &[usize], actual: &[usize]) -> PredictionRatios {
    OverlapCounts::of(predicted, actual).ratios()
}
