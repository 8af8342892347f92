//! Adaptive tensor-product Gauss–Legendre cubature on boxes of dimension ≤ 3.

use rayon::prelude::*;

use super::gauss::gauss_legendre;
use super::QuadratureResult;
use crate::error::{Error, Result};
use crate::sum::CompensatedSum;

#[derive(Clone, Copy, Debug)]
pub struct CubatureOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_evals: u64,
    pub order: usize,
}

impl Default for CubatureOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-11, abs_tol: 1e-15, max_evals: 400_000_000, order: 8 }
    }
}

#[derive(Clone, Debug)]
pub struct Cell {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

#[derive(Clone, Debug)]
struct Leaf {
    cell: Cell,
    value: f64,
    err: f64,
}

struct Rule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Rule {
    fn apply<F: Fn(&[f64]) -> f64>(&self, f: &F, d: usize, c: &Cell) -> f64 {
        let n = self.nodes.len();
        let mut half = [0.0; 3];
        let mut mid = [0.0; 3];
        for j in 0..d {
            half[j] = 0.5 * (c.hi[j] - c.lo[j]);
            mid[j] = 0.5 * (c.hi[j] + c.lo[j]);
        }
        let total = n.pow(d as u32);
        let mut acc = CompensatedSum::new();
        let mut p = [0.0; 3];
        for idx in 0..total {
            let mut rem = idx;
            let mut w = 1.0;
            for j in 0..d {
                let i = rem % n;
                rem /= n;
                p[j] = mid[j] + half[j] * self.nodes[i];
                w *= self.weights[i] * half[j];
            }
            acc.add(w * f(&p[..d]));
        }
        acc.value()
    }
}

fn children(c: &Cell, d: usize) -> Vec<Cell> {
    (0..1usize << d)
        .map(|mask| {
            let mut lo = c.lo;
            let mut hi = c.hi;
            for j in 0..d {
                let m = 0.5 * (c.lo[j] + c.hi[j]);
                if mask >> j & 1 == 1 {
                    lo[j] = m;
                } else {
                    hi[j] = m;
                }
            }
            Cell { lo, hi }
        })
        .collect()
}

/// Integrates `f` over the union of `cells` (dimension `d`).
///
/// Each leaf carries the difference between its parent's rule value and the sum
/// over the parent's children, shared evenly among the children. Leaves with the
/// largest estimates are bisected in every direction until the summed estimate
/// meets the tolerance. Leaves are kept in creation order and summed with
/// compensation, so the result is reproducible.
pub fn integrate<F>(f: &F, d: usize, cells: &[Cell], opts: &CubatureOptions) -> Result<QuadratureResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    assert!((1..=3).contains(&d));
    let (nodes, weights) = gauss_legendre(opts.order);
    let rule = Rule { nodes, weights };
    let per_cell = opts.order.pow(d as u32) as u64;
    let nchild = 1usize << d;
    let split = |parent: &Cell, parent_value: f64| -> Vec<Leaf> {
        let kids = children(parent, d);
        let vals: Vec<f64> = kids.iter().map(|c| rule.apply(f, d, c)).collect();
        let s: f64 = crate::sum::sum(vals.iter().copied());
        let err = (s - parent_value).abs() / nchild as f64;
        kids.into_iter().zip(vals).map(|(cell, value)| Leaf { cell, value, err }).collect()
    };
    let mut evals: u64 = 0;
    let mut leaves: Vec<Leaf> = cells.par_iter().map(|c| split(c, rule.apply(f, d, c))).collect::<Vec<_>>().concat();
    evals += cells.len() as u64 * per_cell * (nchild as u64 + 1);
    loop {
        let total: f64 = crate::sum::sum(leaves.iter().map(|l| l.value));
        let err: f64 = crate::sum::sum(leaves.iter().map(|l| l.err));
        let target = opts.abs_tol.max(opts.rel_tol * total.abs());
        if err <= target {
            return Ok(QuadratureResult { value: total, error_estimate: err, evaluations: evals });
        }
        if evals > opts.max_evals {
            return Err(Error::NonConvergence(format!(
                "cubature stopped after {evals} evaluations with error estimate {err:.3e} > {target:.3e}"
            )));
        }
        let mut order: Vec<usize> = (0..leaves.len()).collect();
        order.sort_by(|&a, &b| leaves[b].err.total_cmp(&leaves[a].err).then(a.cmp(&b)));
        // Refine the leaves holding the top part of the error budget.
        let mut chosen = Vec::new();
        let mut acc = 0.0;
        for &i in &order {
            if acc >= 0.5 * err || chosen.len() >= 256 {
                break;
            }
            acc += leaves[i].err;
            chosen.push(i);
        }
        chosen.sort_unstable();
        let new: Vec<Vec<Leaf>> = chosen.par_iter().map(|&i| split(&leaves[i].cell, leaves[i].value)).collect();
        evals += chosen.len() as u64 * per_cell * nchild as u64;
        let mut keep = Vec::with_capacity(leaves.len() + chosen.len() * nchild);
        let mut ci = 0;
        for (i, l) in leaves.into_iter().enumerate() {
            if ci < chosen.len() && chosen[ci] == i {
                ci += 1;
            } else {
                keep.push(l);
            }
        }
        keep.extend(new.into_iter().flatten());
        leaves = keep;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(_d: usize) -> Vec<Cell> {
        vec![Cell { lo: [0.0; 3], hi: [1.0; 3] }]
    }

    #[test]
    fn smooth_product() {
        let f = |p: &[f64]| p.iter().map(|x| (3.0 * x).cos()).product::<f64>();
        let exact = ((3.0f64).sin() / 3.0).powi(3);
        let r = integrate(&f, 3, &unit(3), &CubatureOptions::default()).unwrap();
        assert!((r.value - exact).abs() < 1e-13);
    }

    #[test]
    fn corner_log_singularity() {
        let f = |p: &[f64]| (p[0] * p[0] + p[1] * p[1]).ln();
        // ∫_0^1∫_0^1 log(x²+y²) = log 2 − 3 + π/2
        let exact = 2f64.ln() - 3.0 + std::f64::consts::FRAC_PI_2;
        let r = integrate(&f, 2, &unit(2), &CubatureOptions::default()).unwrap();
        assert!((r.value - exact).abs() < 1e-10, "{} vs {}", r.value, exact);
        assert!(r.error_estimate >= (r.value - exact).abs());
    }
}
