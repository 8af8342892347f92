//! Compensated summation and deterministic parallel reductions.

use rayon::prelude::*;

/// Neumaier's variant of Kahan summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: CompensatedSum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl std::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for v in iter {
            s.add(v);
        }
        s
    }
}

pub fn sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

/// Sums `term(i)` for `i in 0..n`. Work is split into fixed blocks whose partial
/// sums are merged in block order, so the result does not depend on the number
/// of worker threads.
pub fn par_sum<F>(n: usize, term: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    const BLOCK: usize = 256;
    let blocks = n.div_ceil(BLOCK);
    let partials: Vec<CompensatedSum> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let lo = b * BLOCK;
            let hi = (lo + BLOCK).min(n);
            (lo..hi).map(&term).collect()
        })
        .collect();
    let mut total = CompensatedSum::new();
    for p in partials {
        total.merge(p);
    }
    total.value()
}

/// Like [`par_sum`] but each index contributes a fixed-length vector of terms.
pub fn par_sum_vec<F>(n: usize, width: usize, term: F) -> Vec<f64>
where
    F: Fn(usize, &mut [CompensatedSum]) + Sync,
{
    const BLOCK: usize = 16;
    let blocks = n.div_ceil(BLOCK);
    let partials: Vec<Vec<CompensatedSum>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut acc = vec![CompensatedSum::new(); width];
            for i in b * BLOCK..((b + 1) * BLOCK).min(n) {
                term(i, &mut acc);
            }
            acc
        })
        .collect();
    let mut total = vec![CompensatedSum::new(); width];
    for p in partials {
        for (t, v) in total.iter_mut().zip(p) {
            t.merge(v);
        }
    }
    total.iter().map(|s| s.value()).collect()
}
