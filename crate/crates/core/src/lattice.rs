//! Hypercubic lattice geometry: sites, nearest-neighbour bonds, boundary sets and
//! the Dirichlet / periodic mode sets.
//!
//! Sites are ordered lexicographically with the first coordinate varying fastest;
//! the flat index of a site is the same in every module.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{flatten, unflatten};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Dirichlet,
    Periodic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeSpec {
    d: usize,
    ell: usize,
    boundary: Boundary,
}

/// A lattice point. Dirichlet coordinates run over `1..=ell`, periodic ones over `0..ell`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Site(pub Vec<usize>);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Momentum(pub Vec<f64>);

/// An allowed momentum together with its integer labels.
///
/// Dirichlet labels are `n_j ∈ 1..=ell` with `k_j = π n_j/(ell+1)`; periodic labels
/// are `m_j ∈ 0..ell` with `k_j = 2π m_j/ell` folded into `(−π, π]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Mode {
    pub labels: Vec<usize>,
    pub momentum: Momentum,
}

impl LatticeSpec {
    /// `ell = 1` is accepted for Dirichlet boxes (a single site with `2d` missing
    /// neighbours); periodic boxes need `ell >= 3` so that no bond is doubled.
    pub fn new(d: usize, ell: usize, boundary: Boundary) -> Result<Self> {
        if !(1..=3).contains(&d) {
            return Err(Error::InvalidLattice(format!("dimension {d} not in 1..=3")));
        }
        match boundary {
            Boundary::Dirichlet if ell < 1 => return Err(Error::InvalidLattice("side length must be positive".into())),
            Boundary::Periodic if ell < 3 => {
                return Err(Error::InvalidLattice(format!("periodic side length {ell} < 3 would duplicate bonds")))
            }
            _ => {}
        }
        Ok(Self { d, ell, boundary })
    }

    pub fn dirichlet(d: usize, ell: usize) -> Result<Self> {
        Self::new(d, ell, Boundary::Dirichlet)
    }

    pub fn periodic(d: usize, ell: usize) -> Result<Self> {
        Self::new(d, ell, Boundary::Periodic)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn num_sites(&self) -> usize {
        self.ell.pow(self.d as u32)
    }

    fn offset(&self) -> usize {
        match self.boundary {
            Boundary::Dirichlet => 1,
            Boundary::Periodic => 0,
        }
    }

    pub fn site(&self, index: usize) -> Site {
        let off = self.offset();
        Site(unflatten(index, self.ell, self.d).into_iter().map(|c| c + off).collect())
    }

    pub fn index_of(&self, x: &Site) -> Result<usize> {
        let off = self.offset();
        if x.0.len() != self.d || x.0.iter().any(|&c| c < off || c >= self.ell + off) {
            return Err(Error::InvalidLattice(format!("site {:?} outside the box", x.0)));
        }
        let c: Vec<usize> = x.0.iter().map(|&c| c - off).collect();
        Ok(flatten(&c, self.ell))
    }

    pub fn sites(&self) -> Vec<Site> {
        (0..self.num_sites()).map(|i| self.site(i)).collect()
    }

    /// Unordered nearest-neighbour bonds as `(x, x + e_i)` index pairs.
    pub fn bonds(&self) -> Vec<(usize, usize)> {
        let n = self.num_sites();
        let mut out = Vec::new();
        for x in 0..n {
            let c = unflatten(x, self.ell, self.d);
            for axis in 0..self.d {
                let stride = self.ell.pow(axis as u32);
                if c[axis] + 1 < self.ell {
                    out.push((x, x + stride));
                } else if self.boundary == Boundary::Periodic {
                    out.push((x, x + stride - self.ell * stride));
                }
            }
        }
        out
    }

    pub fn nn_pairs(&self) -> Vec<(Site, Site)> {
        self.bonds().into_iter().map(|(x, y)| (self.site(x), self.site(y))).collect()
    }

    /// Sites with some coordinate equal to 1 or `ell`.
    pub fn boundary_sites(&self) -> Result<Vec<Site>> {
        let m = self.boundary_multiplicity()?;
        Ok((0..self.num_sites()).filter(|&x| m[x] > 0).map(|x| self.site(x)).collect())
    }

    /// Number of missing neighbours of each site (a corner of a square has two).
    ///
    /// The Dirichlet kinetic term carries `Σ_x m_x n_x`; with these weights its
    /// one-particle spectrum is exactly `{ε(k) : k ∈ Λ*}`.
    pub fn boundary_multiplicity(&self) -> Result<Vec<usize>> {
        if self.boundary != Boundary::Dirichlet {
            return Err(Error::WrongBoundary { expected: "Dirichlet" });
        }
        Ok((0..self.num_sites())
            .map(|x| {
                unflatten(x, self.ell, self.d)
                    .iter()
                    .map(|&c| usize::from(c == 0) + usize::from(c + 1 == self.ell))
                    .sum()
            })
            .collect())
    }

    /// One-particle matrix of the kinetic term, row-major `N × N`.
    /// For Dirichlet boxes the boundary weights are included.
    pub fn one_particle_matrix(&self) -> Vec<f64> {
        let n = self.num_sites();
        let mut h = vec![0.0; n * n];
        for (x, y) in self.bonds() {
            h[x * n + x] += 1.0;
            h[y * n + y] += 1.0;
            h[x * n + y] -= 1.0;
            h[y * n + x] -= 1.0;
        }
        if let Ok(m) = self.boundary_multiplicity() {
            for (x, mx) in m.into_iter().enumerate() {
                h[x * n + x] += mx as f64;
            }
        }
        h
    }

    pub fn modes(&self) -> Vec<Mode> {
        (0..self.num_sites())
            .map(|i| {
                let c = unflatten(i, self.ell, self.d);
                match self.boundary {
                    Boundary::Dirichlet => {
                        let labels: Vec<usize> = c.iter().map(|&c| c + 1).collect();
                        let k = labels.iter().map(|&n| dirichlet_momentum(n, self.ell)).collect();
                        Mode { labels, momentum: Momentum(k) }
                    }
                    Boundary::Periodic => {
                        let k = c.iter().map(|&m| periodic_momentum(m, self.ell)).collect();
                        Mode { labels: c, momentum: Momentum(k) }
                    }
                }
            })
            .collect()
    }

    /// Integer labels of a Dirichlet momentum.
    pub fn dirichlet_labels(&self, k: &Momentum) -> Result<Vec<usize>> {
        if self.boundary != Boundary::Dirichlet {
            return Err(Error::WrongBoundary { expected: "Dirichlet" });
        }
        if k.0.len() != self.d {
            return Err(Error::NotAMode(k.0.clone()));
        }
        let h = PI / (self.ell + 1) as f64;
        k.0.iter()
            .map(|&kj| {
                let n = (kj / h).round();
                if n >= 1.0 && n <= self.ell as f64 && (kj - n * h).abs() < 1e-9 {
                    Ok(n as usize)
                } else {
                    Err(Error::NotAMode(k.0.clone()))
                }
            })
            .collect()
    }

    /// `φ_k(x) = (2/(ell+1))^{d/2} Π_j sin(x_j k_j)`.
    pub fn eigenfunction(&self, k: &Momentum, x: &Site) -> Result<f64> {
        let n = self.dirichlet_labels(k)?;
        self.index_of(x)?;
        Ok(n.iter().zip(&x.0).map(|(&nj, &xj)| sine_mode(self.ell, xj, nj)).product())
    }
}

pub fn dirichlet_momentum(n: usize, ell: usize) -> f64 {
    PI * n as f64 / (ell + 1) as f64
}

/// `2π m/ell` folded into `(−π, π]`.
pub fn periodic_momentum(m: usize, ell: usize) -> f64 {
    if 2 * m > ell {
        -2.0 * PI * (ell - m) as f64 / ell as f64
    } else {
        2.0 * PI * m as f64 / ell as f64
    }
}

/// One-dimensional normalized sine mode `sqrt(2/(ell+1)) sin(π x n/(ell+1))`.
pub fn sine_mode(ell: usize, x: usize, n: usize) -> f64 {
    let l1 = (ell + 1) as f64;
    (2.0 / l1).sqrt() * (PI * (x * n) as f64 / l1).sin()
}

/// `ell × ell` table `S[x-1][n-1]` of one-dimensional sine modes. The matrix is
/// symmetric and orthogonal.
pub fn sine_table(ell: usize) -> Vec<f64> {
    let mut t = vec![0.0; ell * ell];
    for x in 1..=ell {
        for n in 1..=ell {
            t[(x - 1) * ell + (n - 1)] = sine_mode(ell, x, n);
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn site_counts() {
        assert_eq!(LatticeSpec::dirichlet(2, 2).unwrap().sites().len(), 4);
        assert_eq!(LatticeSpec::dirichlet(3, 4).unwrap().sites().len(), 64);
        assert_eq!(LatticeSpec::dirichlet(1, 5).unwrap().sites().len(), 5);
    }

    #[test]
    fn lexicographic_first_axis_fastest() {
        let s = LatticeSpec::dirichlet(2, 3).unwrap();
        let sites = s.sites();
        assert_eq!(sites[0], Site(vec![1, 1]));
        assert_eq!(sites[1], Site(vec![2, 1]));
        assert_eq!(sites[3], Site(vec![1, 2]));
        for (i, x) in sites.iter().enumerate() {
            assert_eq!(s.index_of(x).unwrap(), i);
        }
    }

    #[test]
    fn pair_counts() {
        assert_eq!(LatticeSpec::dirichlet(2, 2).unwrap().nn_pairs().len(), 4);
        assert_eq!(LatticeSpec::periodic(3, 3).unwrap().nn_pairs().len(), 81);
        assert_eq!(LatticeSpec::dirichlet(2, 3).unwrap().nn_pairs().len(), 12);
        for d in 1..=3 {
            for ell in 1..=16usize {
                let s = LatticeSpec::dirichlet(d, ell).unwrap();
                assert_eq!(s.bonds().len(), d * ell.pow(d as u32 - 1) * (ell - 1));
                if ell >= 3 {
                    let p = LatticeSpec::periodic(d, ell).unwrap();
                    let b = p.bonds();
                    assert_eq!(b.len(), d * ell.pow(d as u32));
                    let mut set: Vec<(usize, usize)> = b.iter().map(|&(x, y)| (x.min(y), x.max(y))).collect();
                    set.sort_unstable();
                    set.dedup();
                    assert_eq!(set.len(), b.len());
                }
            }
        }
    }

    #[test]
    fn periodic_two_rejected() {
        assert!(LatticeSpec::periodic(2, 2).is_err());
        assert!(LatticeSpec::dirichlet(4, 2).is_err());
    }

    #[test]
    fn boundary_counts() {
        let b = |d, ell| LatticeSpec::dirichlet(d, ell).unwrap().boundary_sites().unwrap().len();
        assert_eq!(b(2, 3), 8);
        assert_eq!(b(2, 2), 4);
        assert_eq!(b(3, 3), 26);
        assert!(LatticeSpec::periodic(2, 3).unwrap().boundary_sites().is_err());
    }

    #[test]
    fn eigenfunction_examples() {
        let s = LatticeSpec::dirichlet(1, 1).unwrap();
        let v = s.eigenfunction(&Momentum(vec![PI / 2.0]), &Site(vec![1])).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
        let s = LatticeSpec::dirichlet(1, 3).unwrap();
        let v = s.eigenfunction(&Momentum(vec![PI / 4.0]), &Site(vec![2])).unwrap();
        assert!((v - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(s.eigenfunction(&Momentum(vec![0.3]), &Site(vec![2])).is_err());
    }

    #[test]
    fn eigenfunctions_orthonormal() {
        let s = LatticeSpec::dirichlet(2, 4).unwrap();
        let modes = s.modes();
        let sites = s.sites();
        for a in &modes {
            for b in &modes {
                let dot: f64 = sites
                    .iter()
                    .map(|x| s.eigenfunction(&a.momentum, x).unwrap() * s.eigenfunction(&b.momentum, x).unwrap())
                    .sum();
                let expect = if a.labels == b.labels { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn periodic_momenta_folded() {
        let s = LatticeSpec::periodic(1, 4).unwrap();
        let k: Vec<f64> = s.modes().iter().map(|m| m.momentum.0[0]).collect();
        assert_eq!(k, vec![0.0, PI / 2.0, PI, -PI / 2.0]);
    }
}
