//! Dispersion relation, Bose factors, the thermal two-point function of the free
//! Dirichlet boson gas, and density / projector estimates.

use std::f64::consts::{E, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::lattice::{sine_table, Boundary, LatticeSpec, Momentum};
use crate::quadrature::zeta;
use crate::tensor::kron_apply;

/// `ε(k) = Σ_j 2(1 − cos k_j)`.
pub fn epsilon(k: &[f64]) -> f64 {
    k.iter().map(|&kj| 2.0 * (1.0 - kj.cos())).sum()
}

pub fn epsilon_of(k: &Momentum) -> f64 {
    epsilon(&k.0)
}

/// `1/(e^x − 1)` for `x > 0`.
#[inline]
pub fn bose(x: f64) -> f64 {
    1.0 / x.exp_m1()
}

/// Bose occupation of a mode of energy `eps`. A zero-energy mode is an error.
pub fn bose_from_energy(eps: f64, beta_tilde: f64) -> Result<f64> {
    if eps <= 0.0 {
        return Err(Error::ZeroMode);
    }
    ensure(beta_tilde > 0.0, || format!("beta_tilde = {beta_tilde} must be positive"))?;
    Ok(bose(beta_tilde * eps))
}

pub fn bose_factor(k: &Momentum, beta_tilde: f64) -> Result<f64> {
    bose_from_energy(epsilon_of(k), beta_tilde)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThermalParams {
    pub beta_tilde: f64,
    pub two_s: u32,
}

impl ThermalParams {
    pub fn new(beta_tilde: f64, two_s: u32) -> Result<Self> {
        ensure(beta_tilde > 0.0 && beta_tilde.is_finite(), || {
            format!("beta_tilde = {beta_tilde} must be positive and finite")
        })?;
        ensure(two_s >= 1, || "2S must be at least 1".into())?;
        Ok(Self { beta_tilde, two_s })
    }

    pub fn spin(&self) -> f64 {
        self.two_s as f64 / 2.0
    }
}

/// One-dimensional Dirichlet energies `2(1 − cos(π n/(ell+1)))`, `n = 1..=ell`.
pub fn dirichlet_energies_1d(ell: usize) -> Vec<f64> {
    (1..=ell).map(|n| 2.0 * (1.0 - (PI * n as f64 / (ell + 1) as f64).cos())).collect()
}

/// Energies and Bose factors of every Dirichlet mode, in mode order.
#[derive(Clone, Debug)]
pub struct DirichletModes {
    pub ell: usize,
    pub d: usize,
    pub beta_tilde: f64,
    pub eps: Vec<f64>,
    pub f: Vec<f64>,
}

impl DirichletModes {
    pub fn new(spec: &LatticeSpec, beta_tilde: f64) -> Result<Self> {
        if spec.boundary() != Boundary::Dirichlet {
            return Err(Error::WrongBoundary { expected: "Dirichlet" });
        }
        ensure(beta_tilde > 0.0, || format!("beta_tilde = {beta_tilde} must be positive"))?;
        let (ell, d) = (spec.ell(), spec.d());
        let e1 = dirichlet_energies_1d(ell);
        let n = spec.num_sites();
        let eps: Vec<f64> = (0..n)
            .map(|i| {
                let mut i = i;
                let mut e = 0.0;
                for _ in 0..d {
                    e += e1[i % ell];
                    i /= ell;
                }
                e
            })
            .collect();
        let f = eps.iter().map(|&e| bose(beta_tilde * e)).collect();
        Ok(Self { ell, d, beta_tilde, eps, f })
    }

    pub fn len(&self) -> usize {
        self.eps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eps.is_empty()
    }
}

/// `ρ(x,y) = ⟨a*_y a_x⟩` in the Gibbs state of `T^D` at inverse temperature `β̃`.
#[derive(Clone, Debug)]
pub struct TwoPointTable {
    spec: LatticeSpec,
    beta_tilde: f64,
    n: usize,
    values: Vec<f64>,
}

impl TwoPointTable {
    /// Builds the full table. Each row is a separable sine transform, so the cost
    /// is `O(d ell^(2d+1))`.
    pub fn build(spec: &LatticeSpec, beta_tilde: f64) -> Result<Self> {
        let modes = DirichletModes::new(spec, beta_tilde)?;
        let (ell, d) = (spec.ell(), spec.d());
        let n = spec.num_sites();
        let s = sine_table(ell);
        let mats: Vec<&[f64]> = vec![&s; d];
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|x| {
                let xs = crate::tensor::unflatten(x, ell, d);
                let weighted: Vec<f64> = (0..n)
                    .map(|k| {
                        let ks = crate::tensor::unflatten(k, ell, d);
                        let phi: f64 = xs.iter().zip(&ks).map(|(&a, &b)| s[a * ell + b]).product();
                        modes.f[k] * phi
                    })
                    .collect();
                kron_apply(&weighted, ell, &mats)
            })
            .collect();
        let mut values = rows.concat();
        // the two triangles differ in rounding only; make the table exactly symmetric
        for x in 0..n {
            for y in x + 1..n {
                let v = 0.5 * (values[x * n + y] + values[y * n + x]);
                values[x * n + y] = v;
                values[y * n + x] = v;
            }
        }
        Ok(Self { spec: *spec, beta_tilde, n, values })
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn beta_tilde(&self) -> f64 {
        self.beta_tilde
    }

    pub fn num_sites(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[x * self.n + y]
    }

    pub fn density(&self, x: usize) -> f64 {
        self.get(x, x)
    }

    pub fn densities(&self) -> Vec<f64> {
        (0..self.n).map(|x| self.density(x)).collect()
    }

    pub fn max_density(&self) -> f64 {
        self.densities().into_iter().fold(0.0, f64::max)
    }

    /// Row-major `n × n` matrix.
    pub fn as_matrix(&self) -> &[f64] {
        &self.values
    }

    /// CSV with columns `x_index,y_index,value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x_index,y_index,value\n");
        for x in 0..self.n {
            for y in 0..self.n {
                out.push_str(&format!("{x},{y},{}\n", crate::format::sci(self.get(x, y))));
            }
        }
        out
    }
}

/// Diagonal `ρ(x)` only, in `O(d ell^(d+1))`.
pub fn site_densities(spec: &LatticeSpec, beta_tilde: f64) -> Result<Vec<f64>> {
    let modes = DirichletModes::new(spec, beta_tilde)?;
    let s2: Vec<f64> = sine_table(spec.ell()).iter().map(|v| v * v).collect();
    let mats: Vec<&[f64]> = vec![&s2; spec.d()];
    Ok(kron_apply(&modes.f, spec.ell(), &mats))
}

/// Constant of the density bound: `(π^{3/2}/8) ζ(3/2)` for `d = 3`, `4π` for `d = 2`.
pub fn number_bound_constant(d: usize) -> Result<f64> {
    match d {
        3 => Ok(PI.powf(1.5) / 8.0 * zeta(1.5)?),
        2 => Ok(4.0 * PI),
        _ => Err(Error::InvalidParameter(format!("no density bound for d = {d}"))),
    }
}

/// Upper bound on `max_x ρ(x)`: `C β̃^{-3/2}` in three dimensions and
/// `4π β̃^{-1} log ell` in two (the latter requires `2β̃ > 1 > 2β̃/(ell+1)`).
pub fn rho_upper_bound(d: usize, beta_tilde: f64, ell: usize) -> Result<f64> {
    ensure(beta_tilde > 0.0, || format!("beta_tilde = {beta_tilde} must be positive"))?;
    let c = number_bound_constant(d)?;
    match d {
        3 => Ok(c * beta_tilde.powf(-1.5)),
        _ => {
            ensure(2.0 * beta_tilde > 1.0 && 1.0 > 2.0 * beta_tilde / (ell + 1) as f64, || {
                format!("two-dimensional density bound needs 2β̃ > 1 > 2β̃/(ℓ+1), got β̃ = {beta_tilde}, ℓ = {ell}")
            })?;
            Ok(c * (ell as f64).ln() / beta_tilde)
        }
    }
}

/// Three-dimensional bound `8π/β̃`, useful for small `β̃`.
pub fn rho_small_beta_bound(beta_tilde: f64) -> f64 {
    8.0 * PI / beta_tilde
}

/// `e ell^d (2S+1) (C β̃^{-d/2} (log ell)^{3-d})^{2S}`.
pub fn one_minus_p_bound(d: usize, beta_tilde: f64, ell: usize, two_s: u32) -> Result<f64> {
    ensure(beta_tilde > 0.0, || format!("beta_tilde = {beta_tilde} must be positive"))?;
    ensure(two_s >= 1, || "2S must be at least 1".into())?;
    let c = number_bound_constant(d)?;
    let rho = c * beta_tilde.powf(-(d as f64) / 2.0) * (ell as f64).ln().powi(3 - d as i32);
    Ok(E * (ell as f64).powi(d as i32) * (two_s + 1) as f64 * rho.powi(two_s as i32))
}

/// The site sum `Σ_x (2S+1) e ρ(x)^{2S}` that precedes the closed-form projector bound.
pub fn one_minus_p_site_sum(densities: &[f64], two_s: u32) -> f64 {
    crate::sum::sum(densities.iter().map(|&r| (two_s + 1) as f64 * E * r.powi(two_s as i32)))
}

/// Union bound `Σ_x P(n_x > 2S)` using the exact geometric law of a single-site
/// occupation in a quasi-free state, `P(n_x > 2S) = (ρ/(1+ρ))^{2S+1}`.
pub fn one_minus_p_geometric(densities: &[f64], two_s: u32) -> f64 {
    crate::sum::sum(densities.iter().map(|&r| (r / (1.0 + r)).powi(two_s as i32 + 1)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NpBounds {
    pub lower: f64,
    pub upper: f64,
}

/// `1 + 2 × one_minus_p_bound`, without checking the hypothesis.
pub fn n_p_upper_formula(d: usize, beta_tilde: f64, ell: usize, two_s: u32) -> Result<f64> {
    Ok(1.0 + 2.0 * one_minus_p_bound(d, beta_tilde, ell, two_s)?)
}

/// Bounds on `N_P = tr e^{-β̃T^D} / tr(e^{-β̃T^D} P)`, valid when the projector
/// bound is at most 1/2.
pub fn n_p_bounds(d: usize, beta_tilde: f64, ell: usize, two_s: u32) -> Result<NpBounds> {
    let b = one_minus_p_bound(d, beta_tilde, ell, two_s)?;
    if b > 0.5 {
        return Err(Error::HypothesisViolated(b));
    }
    Ok(NpBounds { lower: 1.0, upper: 1.0 + 2.0 * b })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epsilon_examples() {
        assert_eq!(epsilon(&[0.0, 0.0, 0.0]), 0.0);
        assert!((epsilon(&[PI, PI, PI]) - 12.0).abs() < 1e-14);
        assert!((epsilon(&[PI / 2.0, PI / 2.0]) - 4.0).abs() < 1e-14);
    }

    #[test]
    fn bose_examples() {
        assert!((bose_from_energy(2.0f64.ln(), 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(bose_from_energy(1e3, 1.0).unwrap() < 1e-300);
        let f = bose_factor(&Momentum(vec![PI, PI, PI]), 1.0).unwrap();
        assert!((f - 1.0 / (12f64.exp() - 1.0)).abs() < 1e-20);
        assert!((f - 6.1442e-6).abs() < 1e-9);
        assert_eq!(bose_from_energy(0.0, 1.0), Err(Error::ZeroMode));
    }

    #[test]
    fn single_site_two_point() {
        let spec = LatticeSpec::dirichlet(1, 1).unwrap();
        for bt in [0.5, 1.0, 3.0] {
            let t = TwoPointTable::build(&spec, bt).unwrap();
            assert!((t.get(0, 0) - 1.0 / (2.0 * bt).exp_m1()).abs() < 1e-15);
        }
    }

    #[test]
    fn densities_match_table_diagonal() {
        let spec = LatticeSpec::dirichlet(2, 5).unwrap();
        let t = TwoPointTable::build(&spec, 1.3).unwrap();
        let r = site_densities(&spec, 1.3).unwrap();
        for x in 0..spec.num_sites() {
            assert!((t.density(x) - r[x]).abs() < 1e-14);
        }
    }

    #[test]
    fn table_vanishes_at_low_temperature() {
        let spec = LatticeSpec::dirichlet(2, 3).unwrap();
        let t = TwoPointTable::build(&spec, 200.0).unwrap();
        assert!(t.as_matrix().iter().all(|v| v.abs() < 1e-50));
    }

    #[test]
    fn rho_bound_examples() {
        let c = number_bound_constant(3).unwrap();
        assert!((c - 1.818_320_349_039_8).abs() < 1e-12);
        assert!((rho_upper_bound(3, 4.0, 8).unwrap() - c / 8.0).abs() < 1e-15);
        let v = rho_upper_bound(2, 2.0, 8).unwrap();
        assert!((v - 4.0 * PI * 0.5 * 8f64.ln()).abs() < 1e-12);
        assert!((v - 13.065_516_541_821_61).abs() < 1e-12);
        assert!(rho_upper_bound(3, 1e12, 8).unwrap() < 1e-17);
        assert!(rho_upper_bound(2, 3.0, 3).is_err());
        assert!(rho_upper_bound(1, 3.0, 3).is_err());
        assert_eq!(rho_small_beta_bound(1.0), 8.0 * PI);
        assert!((rho_small_beta_bound(0.1) - 80.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn projector_bound_examples() {
        let c = number_bound_constant(3).unwrap();
        let b = one_minus_p_bound(3, 4.0, 2, 1).unwrap();
        assert!((b - E * 8.0 * 2.0 * c / 8.0).abs() < 1e-12);
        assert!((b - 9.88).abs() < 0.01);
        assert!(one_minus_p_bound(3, 1e8, 2, 1).unwrap() < 1e-9);
    }

    #[test]
    fn n_p_examples() {
        let b = n_p_bounds(3, 1e6, 4, 2).unwrap();
        assert_eq!(b.lower, 1.0);
        assert!(b.upper - 1.0 < 1e-12);
        let c = number_bound_constant(3).unwrap();
        let u = n_p_upper_formula(3, 9.0, 4, 2).unwrap();
        let r = c / 27.0;
        assert!((u - (1.0 + 2.0 * E * 64.0 * 3.0 * r * r)).abs() < 1e-12);
        // The closed-form estimate exceeds 1/2 here, so the normalization hypothesis fails.
        assert!(matches!(n_p_bounds(3, 9.0, 4, 2), Err(Error::HypothesisViolated(_))));
    }
}
